//! Search spaces and the unit-hypercube encoding used by differential evolution.
//!
//! Every optimizer in this crate works on [`UnitVector`]s. Typed values only
//! appear when a vector is decoded against its [`SearchSpace`], which keeps the
//! DE arithmetic uniform across continuous, integer and categorical parameters.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("a search space needs at least one parameter")]
    Empty,
    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfUnitRange { index: usize, value: f64 },
    #[error("malformed search space document: {0}")]
    Parse(String),
}

/// A point of the unit hypercube `[0, 1]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Result<Self, SpaceError> {
        for (index, &value) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(SpaceError::OutOfUnitRange { index, value });
            }
        }
        Ok(Self(coords))
    }

    /// Clips every coordinate into `[0, 1]`. NaN coordinates map to 0.
    pub fn clipped(coords: Vec<f64>) -> Self {
        Self(
            coords
                .into_iter()
                .map(|c| if c.is_nan() { 0.0 } else { c.clamp(0.0, 1.0) })
                .collect(),
        )
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = SpaceError;

    fn try_from(coords: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(coords)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(v: UnitVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    Continuous { lower: f64, upper: f64, log: bool },
    Integer { lower: f64, upper: f64, log: bool },
    Categorical { choices: Vec<String> },
    /// Ordered choices; decoded with the same equal-width bins as categorical
    /// parameters, so decoding is monotone in the choice index.
    Ordinal { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpec {
    name: String,
    domain: Domain,
}

impl ParameterSpec {
    pub fn continuous(name: &str, lower: f64, upper: f64, log: bool) -> Result<Self, SpaceError> {
        Self::new(name, Domain::Continuous { lower, upper, log })
    }

    pub fn integer(name: &str, lower: f64, upper: f64, log: bool) -> Result<Self, SpaceError> {
        Self::new(name, Domain::Integer { lower, upper, log })
    }

    pub fn categorical<S: Into<String>>(
        name: &str,
        choices: impl IntoIterator<Item = S>,
    ) -> Result<Self, SpaceError> {
        let choices = choices.into_iter().map(Into::into).collect();
        Self::new(name, Domain::Categorical { choices })
    }

    pub fn ordinal<S: Into<String>>(
        name: &str,
        choices: impl IntoIterator<Item = S>,
    ) -> Result<Self, SpaceError> {
        let choices = choices.into_iter().map(Into::into).collect();
        Self::new(name, Domain::Ordinal { choices })
    }

    pub fn new(name: &str, domain: Domain) -> Result<Self, SpaceError> {
        let invalid = |reason: &str| SpaceError::InvalidParameter {
            name: name.to_string(),
            reason: reason.to_string(),
        };
        if name.is_empty() {
            return Err(invalid("empty name"));
        }
        match &domain {
            Domain::Continuous { lower, upper, log } | Domain::Integer { lower, upper, log } => {
                if !lower.is_finite() || !upper.is_finite() {
                    return Err(invalid("bounds must be finite"));
                }
                if lower >= upper {
                    return Err(invalid("lower bound must be below upper bound"));
                }
                if *log && *lower <= 0.0 {
                    return Err(invalid("log scale requires a positive lower bound"));
                }
                if matches!(domain, Domain::Integer { .. })
                    && (lower.fract() != 0.0 || upper.fract() != 0.0)
                {
                    return Err(invalid("integer bounds must be whole numbers"));
                }
            }
            Domain::Categorical { choices } | Domain::Ordinal { choices } => {
                if choices.is_empty() {
                    return Err(invalid("choices must be non-empty"));
                }
                let mut seen = HashSet::new();
                if !choices.iter().all(|c| seen.insert(c)) {
                    return Err(invalid("choices must be unique"));
                }
            }
        }
        Ok(Self {
            name: name.to_string(),
            domain,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Maps one unit coordinate onto this parameter's typed value.
    pub fn decode(&self, c: f64) -> ParamValue {
        let c = c.clamp(0.0, 1.0);
        match &self.domain {
            Domain::Continuous { lower, upper, log } => {
                ParamValue::Float(scale(c, *lower, *upper, *log))
            }
            Domain::Integer { lower, upper, log } => {
                let v = scale(c, *lower, *upper, *log).round();
                ParamValue::Int(v.clamp(*lower, *upper) as i64)
            }
            Domain::Categorical { choices } | Domain::Ordinal { choices } => {
                let k = choices.len();
                let index = ((c * k as f64).floor() as usize).min(k - 1);
                ParamValue::Choice {
                    index,
                    label: choices[index].clone(),
                }
            }
        }
    }
}

fn scale(c: f64, lower: f64, upper: f64, log: bool) -> f64 {
    let v = if log {
        (lower.ln() + c * (upper.ln() - lower.ln())).exp()
    } else {
        lower + c * (upper - lower)
    };
    v.clamp(lower, upper)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    Choice { index: usize, label: String },
}

impl ParamValue {
    pub fn as_f64(&self) -> f64 {
        match self {
            ParamValue::Float(v) => *v,
            ParamValue::Int(v) => *v as f64,
            ParamValue::Choice { index, .. } => *index as f64,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Choice { label, .. } => f.write_str(label),
        }
    }
}

/// A decoded configuration, in search-space order.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration(Vec<(String, ParamValue)>);

impl Configuration {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.0.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    params: Vec<ParameterSpec>,
}

impl SearchSpace {
    pub fn new(params: Vec<ParameterSpec>) -> Result<Self, SpaceError> {
        if params.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut seen = HashSet::new();
        for p in &params {
            if !seen.insert(p.name.as_str()) {
                return Err(SpaceError::DuplicateName(p.name.clone()));
            }
        }
        Ok(Self { params })
    }

    /// Parses the JSON form: an array of
    /// `{name, kind, lower?, upper?, log?, choices?}` objects.
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let raw: Vec<RawParameter> =
            serde_json::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
        let params = raw
            .into_iter()
            .map(RawParameter::into_spec)
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(params)
    }

    pub fn params(&self) -> &[ParameterSpec] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.len()
    }

    /// Draws each coordinate independently and uniformly from `[0, 1]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        UnitVector((0..self.dim()).map(|_| rng.random::<f64>()).collect())
    }

    pub fn decode(&self, v: &UnitVector) -> Result<Configuration, SpaceError> {
        if v.dim() != self.dim() {
            return Err(SpaceError::Dimension {
                expected: self.dim(),
                actual: v.dim(),
            });
        }
        Ok(Configuration(
            self.params
                .iter()
                .zip(v.coords())
                .map(|(p, &c)| (p.name.clone(), p.decode(c)))
                .collect(),
        ))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameter {
    name: String,
    kind: RawKind,
    lower: Option<f64>,
    upper: Option<f64>,
    log: Option<bool>,
    choices: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RawKind {
    Continuous,
    Integer,
    Categorical,
    Ordinal,
}

impl RawParameter {
    fn into_spec(self) -> Result<ParameterSpec, SpaceError> {
        let missing = |field: &str| SpaceError::InvalidParameter {
            name: self.name.clone(),
            reason: format!("missing `{field}`"),
        };
        let log = self.log.unwrap_or(false);
        let domain = match self.kind {
            RawKind::Continuous | RawKind::Integer => {
                let lower = self.lower.ok_or_else(|| missing("lower"))?;
                let upper = self.upper.ok_or_else(|| missing("upper"))?;
                if matches!(self.kind, RawKind::Continuous) {
                    Domain::Continuous { lower, upper, log }
                } else {
                    Domain::Integer { lower, upper, log }
                }
            }
            RawKind::Categorical | RawKind::Ordinal => {
                let choices = self.choices.clone().ok_or_else(|| missing("choices"))?;
                if matches!(self.kind, RawKind::Categorical) {
                    Domain::Categorical { choices }
                } else {
                    Domain::Ordinal { choices }
                }
            }
        };
        ParameterSpec::new(&self.name, domain)
    }
}
