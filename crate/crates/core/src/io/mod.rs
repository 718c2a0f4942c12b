//! Reading return series and writing chains, summaries and tables.
//!
//! CSV outputs carry their provenance in leading `# key: json` comment
//! lines; readers in this module skip them.

mod chain_csv;
mod summary;

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use chain_csv::{read_chain_csv, write_chain_csv};
pub use summary::{FitSummary, LogMarginal, SUMMARY_SCHEMA_VERSION};

/// How raw column values become the modelled series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    /// Values are used as they are.
    #[default]
    None,
    /// Percent log returns `100 ln(P_t / P_{t-1})` of a price column.
    LogReturn,
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(Transform::None),
            "log-return" | "log_return" | "logret" => Ok(Transform::LogReturn),
            other => Err(Error::Config(format!("unknown transform '{other}'"))),
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transform::None => "none",
            Transform::LogReturn => "log-return",
        })
    }
}

/// Reads one column of a headed CSV file. `column` is a header name or a
/// zero-based index; without it the last column is used.
pub fn ingest_returns(path: impl AsRef<Path>, column: Option<&str>, transform: Transform) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_returns(file, column, transform)
}

/// [`ingest_returns`] over any reader. Line numbers in errors count every
/// physical line, header included.
pub fn parse_returns<R: Read>(reader: R, column: Option<&str>, transform: Transform) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Parse { line: 1, message: "missing header row".into() });
    }
    let idx = match column {
        None => headers.len() - 1,
        Some(c) => match headers.iter().position(|h| h == c) {
            Some(i) => i,
            None => c
                .parse::<usize>()
                .ok()
                .filter(|&i| i < headers.len())
                .ok_or_else(|| Error::Config(format!("no column '{c}' in header {:?}", headers.iter().collect::<Vec<_>>())))?,
        },
    };
    let mut values = Vec::new();
    let mut lines = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let cell = rec.get(idx).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| Error::Parse {
            line,
            message: format!("column {idx}: '{cell}' is not a number"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse { line, message: format!("column {idx}: non-finite value '{cell}'") });
        }
        values.push(v);
        lines.push(line);
    }
    match transform {
        Transform::None => Ok(values),
        Transform::LogReturn => {
            if let Some(k) = values.iter().position(|&p| p <= 0.0) {
                return Err(Error::NonPositivePrice { line: lines[k] });
            }
            Ok(values.windows(2).map(|w| 100.0 * (w[1] / w[0]).ln()).collect())
        }
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// `# key: json` header lines.
pub(crate) fn comment_lines(entries: &[(&str, String)]) -> String {
    entries.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
}

/// Splits leading `# key: value` lines off `text`.
pub(crate) fn split_comments(text: &str) -> (Vec<(String, String)>, &str) {
    let mut meta = Vec::new();
    let mut rest = text;
    while let Some(line_end) = rest.strip_prefix('#').map(|_| rest.find('\n').unwrap_or(rest.len())) {
        let line = &rest[1..line_end];
        if let Some((k, v)) = line.split_once(':') {
            meta.push((k.trim().to_string(), v.trim().to_string()));
        }
        rest = rest.get(line_end + 1..).unwrap_or("");
    }
    (meta, rest)
}

/// Writes a headed CSV table of numbers after the given comment lines.
pub fn table_csv(comments: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut out = comment_lines(comments).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    String::from_utf8(out).map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_returns_exact() {
        let r = parse_returns("p\n100\n100\n".as_bytes(), None, Transform::LogReturn).unwrap();
        assert_eq!(r, vec![0.0]);
        let text = format!("date,p\nd1,100\nd2,{}\n", 100.0 * 0.01f64.exp());
        let r = parse_returns(text.as_bytes(), Some("p"), Transform::LogReturn).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blank_cell_reports_line() {
        let err = parse_returns("a,b\n1,2\n3,\n".as_bytes(), Some("b"), Transform::None).unwrap_err();
        assert_eq!(err, Error::Parse { line: 3, message: "column 1: '' is not a number".into() });
    }

    #[test]
    fn non_positive_price() {
        let err = parse_returns("p\n1\n2\n0\n".as_bytes(), None, Transform::LogReturn).unwrap_err();
        assert_eq!(err, Error::NonPositivePrice { line: 4 });
    }

    #[test]
    fn comments_and_index_columns() {
        let text = "# seed: 3\nt,y\n0,0.5\n1,-1.5\n";
        assert_eq!(parse_returns(text.as_bytes(), Some("1"), Transform::None).unwrap(), vec![0.5, -1.5]);
        assert!(parse_returns(text.as_bytes(), Some("z"), Transform::None).is_err());
        let (meta, rest) = split_comments(text);
        assert_eq!(meta, vec![("seed".to_string(), "3".to_string())]);
        assert!(rest.starts_with("t,y"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
    }
}
