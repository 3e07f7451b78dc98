//! Weight functions on a 1D interval or on the radial coordinate of a ball.
//!
//! A weight is described by a [`WeightSpec`]; evaluation needs the
//! [`Domain`] because distance-to-boundary weights depend on which endpoints
//! are part of the boundary (the origin of a radial reduction is not).

mod admissibility;

pub use admissibility::{
    check_admissibility, AdmissibilityReport, Condition, ConditionEntry, ConditionStatus, Evidence,
    Scope,
};

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};

/// Geometry seen by a weight: the closed interval `[a, b]` and which of its
/// endpoints belong to the boundary of the physical domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
    pub left_is_boundary: bool,
    pub right_is_boundary: bool,
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Self { a, b, left_is_boundary: true, right_is_boundary: true }
    }

    /// Radial coordinate of a ball (`a == 0`) or an annulus (`a > 0`).
    pub fn radial(a: f64, b: f64) -> Self {
        Self { a, b, left_is_boundary: a > 0.0, right_is_boundary: true }
    }

    pub fn diameter(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    /// Distance from `x` to the boundary endpoints. Infinite when no endpoint
    /// is a boundary point.
    pub fn distance_to_boundary(&self, x: f64) -> f64 {
        let left = if self.left_is_boundary { x - self.a } else { f64::INFINITY };
        let right = if self.right_is_boundary { self.b - x } else { f64::INFINITY };
        left.min(right)
    }
}

/// Closed-form or tabulated weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightSpec {
    /// `|x|^exponent`, singular at the origin for negative exponents.
    PowerRadial { exponent: f64 },
    /// `dist(x, boundary)^exponent`.
    DistanceBoundary { exponent: f64 },
    Constant { value: f64 },
    /// Piecewise linear interpolation of `(nodes, values)`.
    Tabulated { nodes: Vec<f64>, values: Vec<f64> },
    /// `min(inner(x), level)`, the truncation `T_level` of a nonnegative weight.
    Truncated { level: f64, inner: Box<WeightSpec> },
    /// `factor * inner(x)`.
    Scaled { factor: f64, inner: Box<WeightSpec> },
}

impl WeightSpec {
    pub fn power_radial(exponent: f64) -> Self {
        Self::PowerRadial { exponent }
    }

    pub fn distance_boundary(exponent: f64) -> Self {
        Self::DistanceBoundary { exponent }
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !(value >= 0.0 && value.is_finite()) {
            return arg_err(format!("constant weight must be finite and >= 0, got {value}"));
        }
        Ok(Self::Constant { value })
    }

    pub fn tabulated(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let w = Self::Tabulated { nodes, values };
        w.validate()?;
        Ok(w)
    }

    /// Loads a tabulated weight from a two-column `(node, value)` CSV file.
    /// A header row is accepted if its first field is not numeric.
    pub fn tabulated_from_csv(path: &std::path::Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)?;
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return arg_err(format!("{}: row {row} has {} columns", path.display(), rec.len()));
            }
            let (x, v) = match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(v)) => (x, v),
                _ if row == 0 => continue,
                _ => return arg_err(format!("{}: row {row} is not numeric", path.display())),
            };
            nodes.push(x);
            values.push(v);
        }
        Self::tabulated(nodes, values)
    }

    /// Checks the structural invariants of the descriptor.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::PowerRadial { exponent } | Self::DistanceBoundary { exponent } => {
                if !exponent.is_finite() {
                    return arg_err("weight exponent must be finite");
                }
            }
            Self::Constant { value } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return arg_err(format!("constant weight must be finite and >= 0, got {value}"));
                }
            }
            Self::Tabulated { nodes, values } => {
                if nodes.len() != values.len() {
                    return arg_err("tabulated weight: nodes and values differ in length");
                }
                if nodes.len() < 2 {
                    return arg_err("tabulated weight needs at least two nodes");
                }
                if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return arg_err("tabulated weight nodes must be finite and strictly increasing");
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return arg_err("tabulated weight values must be finite and nonnegative");
                }
            }
            Self::Truncated { level, inner } => {
                if !(*level > 0.0) {
                    return arg_err(format!("truncation level must be > 0, got {level}"));
                }
                inner.validate()?;
            }
            Self::Scaled { factor, inner } => {
                if !(*factor >= 0.0 && factor.is_finite()) {
                    return arg_err(format!("scale factor must be finite and >= 0, got {factor}"));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Value of the weight at `x`. Singular weights return `+inf` exactly at
    /// their singular set.
    pub fn eval(&self, x: f64, domain: &Domain) -> Result<f64> {
        let (lo, hi) = self.support(domain);
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain { x, a: lo, b: hi });
        }
        Ok(self.value(x, domain))
    }

    /// Interval on which the weight can be evaluated: the tabulated range for
    /// tables, the domain otherwise.
    pub fn support(&self, domain: &Domain) -> (f64, f64) {
        match self {
            Self::Tabulated { nodes, .. } => (nodes[0], nodes[nodes.len() - 1]),
            Self::Truncated { inner, .. } | Self::Scaled { inner, .. } => inner.support(domain),
            _ => (domain.a, domain.b),
        }
    }

    /// Unchecked evaluation, used by quadrature at interior points.
    pub(crate) fn value(&self, x: f64, domain: &Domain) -> f64 {
        match self {
            Self::PowerRadial { exponent } => x.abs().powf(*exponent),
            Self::DistanceBoundary { exponent } => domain.distance_to_boundary(x).powf(*exponent),
            Self::Constant { value } => *value,
            Self::Tabulated { nodes, values } => {
                let k = nodes.partition_point(|&n| n <= x).clamp(1, nodes.len() - 1);
                let (x0, x1) = (nodes[k - 1], nodes[k]);
                let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                values[k - 1] + t * (values[k] - values[k - 1])
            }
            Self::Truncated { level, inner } => {
                let v = inner.value(x, domain);
                if v.is_nan() {
                    v
                } else {
                    v.min(*level)
                }
            }
            Self::Scaled { factor, inner } => factor * inner.value(x, domain),
        }
    }

    /// The truncation `T_m` applied to this (nonnegative) weight.
    pub fn truncate(&self, m: f64) -> Result<Self> {
        if !(m > 0.0) {
            return arg_err(format!("truncation level must be > 0, got {m}"));
        }
        Ok(match self {
            Self::Truncated { level, inner } => {
                Self::Truncated { level: level.min(m), inner: inner.clone() }
            }
            other => Self::Truncated { level: m, inner: Box::new(other.clone()) },
        })
    }

    /// Multiplies the weight by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return arg_err(format!("scale factor must be finite and >= 0, got {c}"));
        }
        Ok(match self {
            Self::Constant { value } => Self::Constant { value: value * c },
            Self::Scaled { factor, inner } => Self::Scaled { factor: factor * c, inner: inner.clone() },
            other => Self::Scaled { factor: c, inner: Box::new(other.clone()) },
        })
    }
}

/// The truncation `T_k(f)`: identity on `[-k, k]`, clamped to `±k` outside.
pub fn truncate_value(f: f64, k: f64) -> f64 {
    f.clamp(-k, k)
}

/// Evaluates `w` at `x` (see [`WeightSpec::eval`]).
pub fn eval_weight(w: &WeightSpec, x: f64, domain: &Domain) -> Result<f64> {
    w.eval(x, domain)
}

/// Returns `T_m(w)`; errors when `m <= 0`.
pub fn truncate_weight(w: &WeightSpec, m: f64) -> Result<WeightSpec> {
    w.truncate(m)
}
