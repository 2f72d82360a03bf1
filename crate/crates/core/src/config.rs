use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("group size must be at least 1 (got {name} = {value})")]
    EmptyGroup { name: &'static str, value: usize },
    #[error("{name} must be a probability in [0, 1] (got {value})")]
    BadProbability { name: &'static str, value: f64 },
    #[error("unknown activation mode '{0}' (expected bernoulli or exact)")]
    UnknownActivation(String),
}

/// How the active fraction of a group is turned into per-member flags.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ActivationMode {
    /// Each member is active independently with probability p.
    #[default]
    Bernoulli,
    /// Exactly `round(p * size)` members are active, chosen uniformly.
    ExactCount,
}

impl fmt::Display for ActivationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationMode::Bernoulli => f.write_str("bernoulli"),
            ActivationMode::ExactCount => f.write_str("exact"),
        }
    }
}

impl FromStr for ActivationMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(ActivationMode::Bernoulli),
            "exact" | "exact_count" | "exact-count" => Ok(ActivationMode::ExactCount),
            other => Err(ConfigError::UnknownActivation(other.to_string())),
        }
    }
}

/// Parameters of one simulated market.
///
/// `alpha` is the active fraction of females and `beta` the active fraction
/// of males, so the classic male-proposing setup is `alpha = 0, beta = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub n_males: usize,
    pub n_females: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub activation_mode: ActivationMode,
}

impl SimConfig {
    pub fn new(n_males: usize, n_females: usize, alpha: f64, beta: f64, seed: u64) -> Result<Self, ConfigError> {
        let config = Self { n_males, n_females, alpha, beta, seed, activation_mode: ActivationMode::default() };
        config.validate()?;
        Ok(config)
    }

    pub fn with_activation(mut self, mode: ActivationMode) -> Self {
        self.activation_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_males == 0 {
            return Err(ConfigError::EmptyGroup { name: "n_males", value: 0 });
        }
        if self.n_females == 0 {
            return Err(ConfigError::EmptyGroup { name: "n_females", value: 0 });
        }
        check_probability("alpha", self.alpha)?;
        check_probability("beta", self.beta)
    }
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<(), ConfigError> {
    // Written so that NaN fails too.
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::BadProbability { name, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(SimConfig::new(1, 1, 1.5, 0.0, 0).is_err());
        assert!(SimConfig::new(1, 1, 0.0, -0.1, 0).is_err());
        assert!(SimConfig::new(1, 1, f64::NAN, 0.0, 0).is_err());
        assert!(SimConfig::new(0, 1, 0.0, 1.0, 0).is_err());
        assert!(SimConfig::new(1, 0, 0.0, 1.0, 0).is_err());
        assert!(SimConfig::new(1, 1, 0.0, 1.0, 0).is_ok());
        assert!(SimConfig::new(3, 7, 1.0, 1.0, 0).is_ok());
    }

    #[test]
    fn activation_mode_parsing() {
        assert_eq!("bernoulli".parse::<ActivationMode>().unwrap(), ActivationMode::Bernoulli);
        assert_eq!("exact".parse::<ActivationMode>().unwrap(), ActivationMode::ExactCount);
        assert_eq!("Exact_Count".parse::<ActivationMode>().unwrap(), ActivationMode::ExactCount);
        assert!("sometimes".parse::<ActivationMode>().is_err());
    }
}
