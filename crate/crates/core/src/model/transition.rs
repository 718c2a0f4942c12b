use serde::{Deserialize, Serialize};

/// Smooth transition applied to the lagged residual in the variance equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Transition {
    /// Symmetric GARCH, no asymmetric term.
    None,
    /// `1 - exp(-gamma u^2)`: small vs. large shocks.
    Exponential,
    /// `(1 + exp(-gamma u))^-1`: positive shocks weigh more.
    Logistic,
    /// `(1 + exp(gamma u))^-1`: negative shocks weigh more.
    Logistic2,
}

impl Transition {
    pub fn is_none(self) -> bool {
        matches!(self, Transition::None)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Transition::None => "none",
            Transition::Exponential => "exponential",
            Transition::Logistic => "logistic",
            Transition::Logistic2 => "logistic2",
        }
    }
}

impl std::str::FromStr for Transition {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "symmetric" => Ok(Transition::None),
            "exponential" | "exp" => Ok(Transition::Exponential),
            "logistic" | "logistic1" => Ok(Transition::Logistic),
            "logistic2" | "logistic-2" => Ok(Transition::Logistic2),
            other => Err(crate::Error::InvalidSpec(format!(
                "unknown transition '{other}'"
            ))),
        }
    }
}

/// `1 / (1 + exp(-x))` with `sigmoid(x) + sigmoid(-x) == 1` exactly.
///
/// The negative branch is formed as a complement of a value in `[0.5, 1]`,
/// which is exact in binary floating point.
#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        1.0 - 1.0 / (1.0 + x.exp())
    }
}

/// Evaluates the transition function at residual `u` with slope `gamma`.
///
/// `Transition::None` evaluates to 0 so the asymmetric term drops out.
#[inline]
pub fn transition(kind: Transition, u: f64, gamma: f64) -> f64 {
    match kind {
        Transition::None => 0.0,
        Transition::Exponential => -(-gamma * u * u).exp_m1(),
        Transition::Logistic => sigmoid(gamma * u),
        Transition::Logistic2 => sigmoid(-gamma * u),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(transition(Transition::Exponential, 0.0, 5.0), 0.0);
        assert_eq!(transition(Transition::Logistic, 0.0, 5.0), 0.5);
        assert_eq!(transition(Transition::Logistic2, 0.0, 5.0), 0.5);
        let e = transition(Transition::Exponential, 1.0, 1.0);
        assert!((e - 0.632_120_558_828_557_7).abs() < 1e-15);
    }

    #[test]
    fn saturates_without_overflow() {
        for &u in &[1e6, 1e300, f64::MAX] {
            assert_eq!(transition(Transition::Logistic, u, 5.0), 1.0);
            assert_eq!(transition(Transition::Logistic2, u, 5.0), 0.0);
            assert_eq!(transition(Transition::Logistic, -u, 5.0), 0.0);
            assert_eq!(transition(Transition::Exponential, u, 5.0), 1.0);
        }
        assert_eq!(transition(Transition::Logistic, 1e6, 1.0), 1.0);
        assert_eq!(transition(Transition::Logistic2, 1e6, 1.0), 0.0);
    }

    proptest! {
        #[test]
        fn logistic_complement_is_exact(u in -1e3f64..1e3, gamma in 1e-3f64..50.0) {
            let a = transition(Transition::Logistic, u, gamma);
            let b = transition(Transition::Logistic, -u, gamma);
            prop_assert!((a + b - 1.0).abs() <= f64::EPSILON);
            prop_assert_eq!(transition(Transition::Logistic2, u, gamma), b);
        }

        #[test]
        fn exponential_is_even_and_bounded(u in -1e3f64..1e3, gamma in 1e-3f64..50.0) {
            let a = transition(Transition::Exponential, u, gamma);
            prop_assert_eq!(a, transition(Transition::Exponential, -u, gamma));
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn logistic_monotone(u in -50f64..50.0, du in 0f64..5.0, gamma in 1e-3f64..20.0) {
            let lo = transition(Transition::Logistic, u, gamma);
            let hi = transition(Transition::Logistic, u + du, gamma);
            prop_assert!(hi >= lo);
            let lo2 = transition(Transition::Logistic2, u, gamma);
            let hi2 = transition(Transition::Logistic2, u + du, gamma);
            prop_assert!(hi2 <= lo2);
        }
    }
}
