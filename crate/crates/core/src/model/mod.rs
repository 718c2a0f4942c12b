//! Parameter space, variance/mean recursions and observation densities of the
//! smooth-transition ARMA(p,q)-GARCH(r,s)-M model.

mod density;
mod design;
mod filter;
mod transition;

pub use density::{conditional_loglik, logpdf_gaussian, logpdf_student_t, marginal_loglik};
pub(crate) use density::{conditional_loglik_terms, gaussian_loglik_sum, student_t_loglik_sum};
pub use design::DesignMatrices;
pub use filter::{filter, FilterOutput};
pub(crate) use filter::{presample_variance, recursion, recursion_trimmed, variance_step};
pub use transition::{transition, Transition};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observation error distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorFamily {
    Gaussian,
    StudentT,
}

impl ErrorFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorFamily::Gaussian => "gaussian",
            ErrorFamily::StudentT => "student-t",
        }
    }

    pub fn is_student_t(self) -> bool {
        matches!(self, ErrorFamily::StudentT)
    }
}

impl FromStr for ErrorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" | "n" => Ok(ErrorFamily::Gaussian),
            "student-t" | "studentt" | "student" | "t" => Ok(ErrorFamily::StudentT),
            other => Err(Error::InvalidSpec(format!("unknown error family '{other}'"))),
        }
    }
}

/// How the variance recursion is started before the first modelled observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum PresampleVariance {
    /// Sample variance of the whole observed series.
    SampleVariance,
    /// `omega0 / (1 - sum(alpha) - sum(beta))`.
    Unconditional,
    /// A fixed positive constant.
    Fixed(f64),
}

impl Default for PresampleVariance {
    fn default() -> Self {
        PresampleVariance::SampleVariance
    }
}

/// Orders, error family and transition of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// AR order.
    pub p: usize,
    /// MA order.
    pub q: usize,
    /// GARCH (lagged variance) order.
    pub r: usize,
    /// ARCH (lagged squared residual) order.
    pub s: usize,
    pub error_family: ErrorFamily,
    pub transition: Transition,
    /// Adds `delta * sqrt(h_t)` to the mean equation.
    pub include_m_term: bool,
    /// Adds a constant level `mu` to the mean equation.
    #[serde(default)]
    pub include_mu: bool,
    #[serde(default)]
    pub presample: PresampleVariance,
}

impl ModelSpec {
    /// Pure GARCH(r,s) with Gaussian errors and no asymmetry.
    pub fn garch(r: usize, s: usize) -> Self {
        ModelSpec {
            p: 0,
            q: 0,
            r,
            s,
            error_family: ErrorFamily::Gaussian,
            transition: Transition::None,
            include_m_term: false,
            include_mu: false,
            presample: PresampleVariance::SampleVariance,
        }
    }

    /// ARMA(1,1)-M mean with a GARCH(1,1) exponential-transition variance,
    /// the configuration used by the simulation study.
    pub fn study(family: ErrorFamily) -> Self {
        ModelSpec::garch(1, 1)
            .with_arma(1, 1)
            .with_m_term(true)
            .with_transition(Transition::Exponential)
            .with_family(family)
    }

    pub fn with_arma(mut self, p: usize, q: usize) -> Self {
        self.p = p;
        self.q = q;
        self
    }

    pub fn with_family(mut self, family: ErrorFamily) -> Self {
        self.error_family = family;
        self
    }

    pub fn with_transition(mut self, transition: Transition) -> Self {
        self.transition = transition;
        self
    }

    pub fn with_m_term(mut self, on: bool) -> Self {
        self.include_m_term = on;
        self
    }

    pub fn with_mu(mut self, on: bool) -> Self {
        self.include_mu = on;
        self
    }

    pub fn with_presample(mut self, presample: PresampleVariance) -> Self {
        self.presample = presample;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p + self.q + self.r + self.s == 0 {
            return Err(Error::InvalidSpec("p+q+r+s must be at least 1".into()));
        }
        if !self.transition.is_none() && self.s == 0 {
            return Err(Error::InvalidSpec(
                "a smooth transition requires s >= 1".into(),
            ));
        }
        if let PresampleVariance::Fixed(v) = self.presample {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "fixed presample variance must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Number of free parameters, latent mixing weights excluded.
    pub fn n_params(&self) -> usize {
        let mut n = self.p + self.q + 1 + self.r + self.s;
        n += usize::from(self.include_mu) + usize::from(self.include_m_term);
        if !self.transition.is_none() {
            n += 2;
        }
        if self.error_family.is_student_t() {
            n += 1;
        }
        n
    }

    /// Names of the free scalar parameters, in chain-column order.
    pub fn free_param_names(&self) -> Vec<String> {
        ParamState::scalar_names(self)
            .into_iter()
            .filter(|n| self.is_free(n))
            .collect()
    }

    fn is_free(&self, name: &str) -> bool {
        match name {
            "mu" => self.include_mu,
            "delta" => self.include_m_term,
            "lambda" | "gamma" => !self.transition.is_none(),
            "nu" => self.error_family.is_student_t(),
            _ => true,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "p={},q={},r={},s={},family={},transition={},m={},mu={}",
            self.p,
            self.q,
            self.r,
            self.s,
            self.error_family.as_str(),
            self.transition.as_str(),
            self.include_m_term,
            self.include_mu
        )?;
        match self.presample {
            PresampleVariance::SampleVariance => Ok(()),
            PresampleVariance::Unconditional => write!(f, ",presample=unconditional"),
            PresampleVariance::Fixed(v) => write!(f, ",presample={v}"),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "on" | "yes" => Ok(true),
        "0" | "false" | "off" | "no" => Ok(false),
        other => Err(Error::InvalidSpec(format!("{key}: expected a boolean, got '{other}'"))),
    }
}

/// Parses the compact `key=value,...` form produced by `Display`, e.g.
/// `p=1,q=1,r=1,s=1,family=t,transition=exponential,m=true`.
/// Keys not given keep the defaults of `ModelSpec::garch(1, 1)`.
impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelSpec::garch(1, 1).with_overrides(s)
    }
}

impl ModelSpec {
    /// Applies the `key=value` pairs of `s` on top of `self`; the keys are
    /// those accepted by [`FromStr`].
    pub fn with_overrides(self, s: &str) -> Result<Self> {
        let mut spec = self;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got '{part}'")))?;
            let key = key.trim();
            let order = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidSpec(format!("{key}: expected an order, got '{v}'")))
            };
            match key {
                "p" => spec.p = order(value)?,
                "q" => spec.q = order(value)?,
                "r" => spec.r = order(value)?,
                "s" => spec.s = order(value)?,
                "family" => spec.error_family = value.parse()?,
                "transition" => spec.transition = value.parse()?,
                "m" | "m_term" => spec.include_m_term = parse_bool(key, value)?,
                "mu" => spec.include_mu = parse_bool(key, value)?,
                "presample" => {
                    spec.presample = match value.trim() {
                        "sample-variance" | "sample" => PresampleVariance::SampleVariance,
                        "unconditional" => PresampleVariance::Unconditional,
                        v => PresampleVariance::Fixed(v.parse().map_err(|_| {
                            Error::InvalidSpec(format!("presample: bad value '{v}'"))
                        })?),
                    }
                }
                other => return Err(Error::InvalidSpec(format!("unknown spec key '{other}'"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Non-finite floats as the strings `"inf"`, `"-inf"` and `"nan"`, which JSON
/// cannot carry as numbers.
pub(crate) mod extended_float {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string().to_lowercase())
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(|_| serde::de::Error::custom(format!("not a number: '{t}'"))),
        }
    }
}

/// One point of the parameter space, including latent mixing weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamState {
    pub mu: f64,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub delta: f64,
    pub omega0: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub gamma: f64,
    /// Degrees of freedom; `+inf` under the Gaussian family.
    #[serde(with = "extended_float")]
    pub nu: f64,
    /// Latent inverse-gamma mixing weights, one per modelled observation.
    /// Empty under the Gaussian family or when not tracked.
    #[serde(default)]
    pub w: Vec<f64>,
}

impl ParamState {
    /// A shape-correct state with neutral values: no mean dynamics,
    /// `omega0 = 1`, zero ARCH/GARCH coefficients.
    pub fn neutral(spec: &ModelSpec) -> Self {
        let asym = !spec.transition.is_none();
        ParamState {
            mu: 0.0,
            phi: vec![0.0; spec.p],
            theta: vec![0.0; spec.q],
            delta: 0.0,
            omega0: 1.0,
            alpha: vec![0.0; spec.s],
            beta: vec![0.0; spec.r],
            lambda: if asym { 1.0 } else { 0.0 },
            gamma: if asym { 5.0 } else { 0.0 },
            nu: if spec.error_family.is_student_t() { 10.0 } else { f64::INFINITY },
            w: Vec::new(),
        }
    }

    /// Parameters of the simulation-study data-generating process:
    /// omega=0.25, alpha=0.5, beta=0.1, gamma=5, phi=0.8, theta=0.1,
    /// delta=0, lambda=1. Extra lags beyond the first are zero.
    pub fn study_truth(spec: &ModelSpec, nu: Option<f64>) -> Self {
        let mut s = ParamState::neutral(spec);
        s.omega0 = 0.25;
        if let Some(a) = s.alpha.first_mut() {
            *a = 0.5;
        }
        if let Some(b) = s.beta.first_mut() {
            *b = 0.1;
        }
        if let Some(f) = s.phi.first_mut() {
            *f = 0.8;
        }
        if let Some(t) = s.theta.first_mut() {
            *t = 0.1;
        }
        if !spec.transition.is_none() {
            s.lambda = 1.0;
            s.gamma = 5.0;
        }
        if spec.error_family.is_student_t() {
            s.nu = nu.unwrap_or(3.0);
        }
        s
    }

    pub fn persistence(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// Checks shape and support constraints against `spec`.
    pub fn check_support(&self, spec: &ModelSpec) -> Result<()> {
        let bad = |m: String| Err(Error::OutsideSupport(m));
        if self.phi.len() != spec.p || self.theta.len() != spec.q {
            return bad("mean coefficient lengths do not match the spec".into());
        }
        if self.alpha.len() != spec.s || self.beta.len() != spec.r {
            return bad("variance coefficient lengths do not match the spec".into());
        }
        let scalars = [self.mu, self.delta, self.omega0, self.lambda, self.gamma];
        if scalars.iter().chain(&self.phi).chain(&self.theta).any(|v| !v.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if !(self.omega0 > 0.0) {
            return bad(format!("omega0 must be > 0, got {}", self.omega0));
        }
        if self.alpha.iter().chain(&self.beta).any(|&v| !(v >= 0.0)) {
            return bad("alpha and beta must be nonnegative".into());
        }
        if !(self.persistence() < 1.0) {
            return bad(format!(
                "sum(alpha)+sum(beta) must be < 1, got {}",
                self.persistence()
            ));
        }
        if !spec.transition.is_none() {
            if !(self.lambda > 0.0) {
                return bad(format!("lambda must be > 0, got {}", self.lambda));
            }
            if !(self.gamma > 0.0) {
                return bad(format!("gamma must be > 0, got {}", self.gamma));
            }
        }
        if spec.error_family.is_student_t() {
            if !(self.nu > 2.0) || self.nu.is_nan() {
                return bad(format!("nu must be > 2, got {}", self.nu));
            }
            if self.w.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
                return bad("mixing weights must be positive".into());
            }
        }
        Ok(())
    }

    /// Column names of every scalar parameter, in a fixed order.
    pub fn scalar_names(spec: &ModelSpec) -> Vec<String> {
        let mut names = vec!["mu".to_string()];
        names.extend((1..=spec.p).map(|j| format!("phi_{j}")));
        names.extend((1..=spec.q).map(|j| format!("theta_{j}")));
        names.push("delta".into());
        names.push("omega0".into());
        names.extend((1..=spec.s).map(|j| format!("alpha_{j}")));
        names.extend((1..=spec.r).map(|j| format!("beta_{j}")));
        names.extend(["lambda", "gamma", "nu"].map(String::from));
        names
    }

    /// Scalar parameters in `scalar_names` order.
    pub fn to_scalars(&self) -> Vec<f64> {
        let mut v = vec![self.mu];
        v.extend(&self.phi);
        v.extend(&self.theta);
        v.push(self.delta);
        v.push(self.omega0);
        v.extend(&self.alpha);
        v.extend(&self.beta);
        v.extend([self.lambda, self.gamma, self.nu]);
        v
    }

    /// Inverse of [`to_scalars`](Self::to_scalars); `w` is left empty.
    pub fn from_scalars(spec: &ModelSpec, v: &[f64]) -> Result<Self> {
        let expected = 6 + spec.p + spec.q + spec.r + spec.s;
        if v.len() != expected {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {expected} scalar parameters, got {}", v.len()),
            });
        }
        let mut it = v.iter().copied();
        let mut take = |n: usize| it.by_ref().take(n).collect::<Vec<_>>();
        let mu = take(1)[0];
        let phi = take(spec.p);
        let theta = take(spec.q);
        let delta = take(1)[0];
        let omega0 = take(1)[0];
        let alpha = take(spec.s);
        let beta = take(spec.r);
        let tail = take(3);
        Ok(ParamState {
            mu,
            phi,
            theta,
            delta,
            omega0,
            alpha,
            beta,
            lambda: tail[0],
            gamma: tail[1],
            nu: tail[2],
            w: Vec::new(),
        })
    }

    /// Value of a named scalar parameter.
    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = |prefix: &str, v: &[f64]| {
            name.strip_prefix(prefix)
                .and_then(|k| k.parse::<usize>().ok())
                .and_then(|k| v.get(k.checked_sub(1)?).copied())
        };
        match name {
            "mu" => Some(self.mu),
            "delta" => Some(self.delta),
            "omega0" => Some(self.omega0),
            "lambda" => Some(self.lambda),
            "gamma" => Some(self.gamma),
            "nu" => Some(self.nu),
            _ => idx("phi_", &self.phi)
                .or_else(|| idx("theta_", &self.theta))
                .or_else(|| idx("alpha_", &self.alpha))
                .or_else(|| idx("beta_", &self.beta)),
        }
    }
}
