//! Rating-age decay functions `w(t)`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// One day in seconds; the fixed knee of the outraday function.
pub const DAY_SECONDS: f64 = 86_400.0;

/// Ages below this are clamped before evaluating the piecewise short branch,
/// which diverges at zero.
pub const AGE_FLOOR_SECONDS: f64 = 1.0;

/// Default logistic offset.
pub const DEFAULT_LOGISTIC_B: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecayError {
    #[error("negative age {0}")]
    NegativeAge(i64),
    #[error("invalid parameter {key}: {reason}")]
    InvalidParameter { key: &'static str, reason: String },
    #[error("unknown decay family {0:?}")]
    UnknownFamily(String),
    #[error("unknown parameter {key:?} for {family}")]
    UnknownKey { family: &'static str, key: String },
    #[error("missing parameter {key} for {family}")]
    MissingKey { family: &'static str, key: &'static str },
    #[error("malformed value for {key}: {value:?}")]
    BadValue { key: String, value: String },
}

/// Anything that maps a rating age to a nonnegative weight.
pub trait DecayFunction: Sync {
    fn weight(&self, age: i64) -> Result<f64, DecayError>;
}

/// The decay families: classic IBCF (constant), window, logistic,
/// exponential, outraday and the three-phase piecewise power law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecaySpec {
    Constant,
    Window { t_w: f64 },
    Logistic { t_g: f64, b: f64 },
    Exponential { t_e: f64 },
    Outraday { k_o: f64 },
    Piecewise { t_s: f64, t_l: f64, k_s: f64, k_l: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Constant,
    Window,
    Logistic,
    Exponential,
    Outraday,
    Piecewise,
}

impl Family {
    pub const ALL: [Family; 6] =
        [Family::Constant, Family::Window, Family::Logistic, Family::Exponential, Family::Outraday, Family::Piecewise];

    pub fn name(self) -> &'static str {
        match self {
            Family::Constant => "constant",
            Family::Window => "window",
            Family::Logistic => "logistic",
            Family::Exponential => "exp",
            Family::Outraday => "outraday",
            Family::Piecewise => "piecewise",
        }
    }

    /// Parameter keys in canonical order.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Family::Constant => &[],
            Family::Window => &["Tw"],
            Family::Logistic => &["Tg", "b"],
            Family::Exponential => &["Te"],
            Family::Outraday => &["Ko"],
            Family::Piecewise => &["Ts", "Tl", "Ks", "Kl"],
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = DecayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "constant" | "ibcf" => Ok(Family::Constant),
            "window" | "win" => Ok(Family::Window),
            "logistic" | "log" => Ok(Family::Logistic),
            "exp" | "exponential" => Ok(Family::Exponential),
            "outraday" => Ok(Family::Outraday),
            "piecewise" => Ok(Family::Piecewise),
            other => Err(DecayError::UnknownFamily(other.to_string())),
        }
    }
}

fn positive(key: &'static str, v: f64) -> Result<f64, DecayError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(DecayError::InvalidParameter { key, reason: format!("must be finite and > 0, got {v}") })
    }
}

fn exponent(key: &'static str, v: f64) -> Result<f64, DecayError> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(DecayError::InvalidParameter { key, reason: format!("must be finite and >= 0, got {v}") })
    }
}

impl DecaySpec {
    pub fn window(t_w: f64) -> Result<Self, DecayError> {
        Ok(DecaySpec::Window { t_w: positive("Tw", t_w)? })
    }

    pub fn logistic(t_g: f64, b: f64) -> Result<Self, DecayError> {
        if !b.is_finite() {
            return Err(DecayError::InvalidParameter { key: "b", reason: format!("must be finite, got {b}") });
        }
        Ok(DecaySpec::Logistic { t_g: positive("Tg", t_g)?, b })
    }

    pub fn exponential(t_e: f64) -> Result<Self, DecayError> {
        Ok(DecaySpec::Exponential { t_e: positive("Te", t_e)? })
    }

    pub fn outraday(k_o: f64) -> Result<Self, DecayError> {
        Ok(DecaySpec::Outraday { k_o: exponent("Ko", k_o)? })
    }

    pub fn piecewise(t_s: f64, t_l: f64, k_s: f64, k_l: f64) -> Result<Self, DecayError> {
        let t_s = positive("Ts", t_s)?;
        let t_l = positive("Tl", t_l)?;
        if t_s > t_l {
            return Err(DecayError::InvalidParameter {
                key: "Tl",
                reason: format!("must be >= Ts ({t_s}), got {t_l}"),
            });
        }
        Ok(DecaySpec::Piecewise { t_s, t_l, k_s: exponent("Ks", k_s)?, k_l: exponent("Kl", k_l)? })
    }

    pub fn family(&self) -> Family {
        match self {
            DecaySpec::Constant => Family::Constant,
            DecaySpec::Window { .. } => Family::Window,
            DecaySpec::Logistic { .. } => Family::Logistic,
            DecaySpec::Exponential { .. } => Family::Exponential,
            DecaySpec::Outraday { .. } => Family::Outraday,
            DecaySpec::Piecewise { .. } => Family::Piecewise,
        }
    }

    /// Parameter values aligned with [`Family::keys`].
    pub fn params(&self) -> Vec<f64> {
        match *self {
            DecaySpec::Constant => vec![],
            DecaySpec::Window { t_w } => vec![t_w],
            DecaySpec::Logistic { t_g, b } => vec![t_g, b],
            DecaySpec::Exponential { t_e } => vec![t_e],
            DecaySpec::Outraday { k_o } => vec![k_o],
            DecaySpec::Piecewise { t_s, t_l, k_s, k_l } => vec![t_s, t_l, k_s, k_l],
        }
    }

    /// Builds a spec from values aligned with [`Family::keys`], validating
    /// every invariant.
    pub fn from_params(family: Family, values: &[f64]) -> Result<Self, DecayError> {
        let keys = family.keys();
        if let Some(&key) = keys.get(values.len()) {
            return Err(DecayError::MissingKey { family: family.name(), key });
        }
        match family {
            Family::Constant => Ok(DecaySpec::Constant),
            Family::Window => DecaySpec::window(values[0]),
            Family::Logistic => DecaySpec::logistic(values[0], values[1]),
            Family::Exponential => DecaySpec::exponential(values[0]),
            Family::Outraday => DecaySpec::outraday(values[0]),
            Family::Piecewise => DecaySpec::piecewise(values[0], values[1], values[2], values[3]),
        }
    }

    /// `w(t)` for an age in seconds. Negative ages are rejected.
    pub fn eval(&self, age: i64) -> Result<f64, DecayError> {
        if age < 0 {
            return Err(DecayError::NegativeAge(age));
        }
        let t = age as f64;
        let w = match *self {
            DecaySpec::Constant => 1.0,
            DecaySpec::Window { t_w } => {
                if t <= t_w {
                    1.0
                } else {
                    0.0
                }
            }
            DecaySpec::Logistic { t_g, b } => 1.0 / (1.0 + (t / t_g - b).exp()),
            DecaySpec::Exponential { t_e } => (-t / t_e).exp(),
            DecaySpec::Outraday { k_o } => {
                if t < DAY_SECONDS {
                    1.0
                } else {
                    (t / DAY_SECONDS).powf(-k_o)
                }
            }
            DecaySpec::Piecewise { t_s, t_l, k_s, k_l } => {
                let t = t.max(AGE_FLOOR_SECONDS);
                if t < t_s {
                    (t / t_s).powf(-k_s)
                } else if t < t_l {
                    1.0
                } else {
                    (t / t_l).powf(-k_l)
                }
            }
        };
        Ok(w)
    }
}

impl DecayFunction for DecaySpec {
    fn weight(&self, age: i64) -> Result<f64, DecayError> {
        self.eval(age)
    }
}

impl fmt::Display for DecaySpec {
    /// Canonical textual form, e.g. `piecewise:Ts=50000,Tl=1000000,Ks=0.6,Kl=0.3`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = self.family();
        f.write_str(family.name())?;
        for (pos, (key, value)) in family.keys().iter().zip(self.params()).enumerate() {
            let sep = if pos == 0 { ':' } else { ',' };
            write!(f, "{sep}{key}={value}")?;
        }
        Ok(())
    }
}

impl FromStr for DecaySpec {
    type Err = DecayError;

    /// Parses `family[:key=value,...]`. Logistic `b` defaults to 5.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (family, rest) = match s.split_once(':') {
            Some((f, r)) => (f.trim(), r.trim()),
            None => (s, ""),
        };
        let family: Family = family.parse()?;
        let keys = family.keys();
        let mut values: Vec<Option<f64>> = vec![None; keys.len()];
        if family == Family::Logistic {
            values[1] = Some(DEFAULT_LOGISTIC_B);
        }
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| DecayError::BadValue { key: pair.to_string(), value: String::new() })?;
            let (key, value) = (key.trim(), value.trim());
            let slot = keys
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| DecayError::UnknownKey { family: family.name(), key: key.to_string() })?;
            let parsed = value
                .parse::<f64>()
                .map_err(|_| DecayError::BadValue { key: key.to_string(), value: value.to_string() })?;
            values[slot] = Some(parsed);
        }
        let mut resolved = Vec::with_capacity(keys.len());
        for (key, v) in keys.iter().zip(values) {
            resolved.push(v.ok_or(DecayError::MissingKey { family: family.name(), key })?);
        }
        DecaySpec::from_params(family, &resolved)
    }
}
