//! Quadrature checks of the weight conditions W1-W6.
//!
//! Local conditions (`L¹_loc`, positivity on compact subsets) are evaluated on
//! the interior window `[a + d/10, b - d/10]`, `d` the domain diameter.
//! Global conditions integrate over the whole mesh and additionally probe each
//! endpoint with a geometric sequence of shells `[e + h 2^-(k+1), e + h 2^-k]`
//! inside the end element: for an integrable endpoint singularity the shell
//! contributions decay geometrically, for a non-integrable one they do not.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::mesh::Mesh1D;
use crate::weights::WeightSpec;

const INTERIOR_MARGIN: f64 = 0.1;
const W3_SUBINTERVALS: usize = 4;
const TAIL_SHELLS: usize = 40;
/// Shell ratio at or above which an endpoint contribution is deemed divergent.
const TAIL_RATIO_LIMIT: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    W1,
    W2,
    W3,
    W4,
    W5,
    W6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionStatus {
    Pass,
    Fail,
    AnalyticOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// Interior window only.
    Local,
    /// Whole mesh.
    Global,
}

/// One numeric quantity backing a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub label: String,
    pub scope: Scope,
    pub value: f64,
    /// Largest endpoint shell ratio (global integrals only).
    pub tail_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub condition: Condition,
    pub status: ConditionStatus,
    pub evidence: Vec<Evidence>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    /// The interior window used for local conditions.
    pub interior: (f64, f64),
    pub entries: Vec<ConditionEntry>,
}

impl AdmissibilityReport {
    pub fn entry(&self, c: Condition) -> &ConditionEntry {
        self.entries.iter().find(|e| e.condition == c).expect("every condition has an entry")
    }

    /// Value of the evidence item with the given label, if any.
    pub fn estimate(&self, label: &str) -> Option<f64> {
        self.entries.iter().flat_map(|e| &e.evidence).find(|ev| ev.label == label).map(|ev| ev.value)
    }

    pub fn all_numeric_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status != ConditionStatus::Fail)
    }
}

struct Quadrature<'a> {
    mesh: &'a Mesh1D,
}

impl Quadrature<'_> {
    fn integrand(&self, f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
        f(x) * self.mesh.metric().factor(x)
    }

    /// Midpoint rule over `[lo, hi]`, clipping mesh elements to the window.
    fn over(&self, f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let x = self.mesh.nodes();
        let mut sum = 0.0;
        for e in 0..self.mesh.n_elements() {
            let (l, r) = (x[e].max(lo), x[e + 1].min(hi));
            if r > l {
                sum += (r - l) * self.integrand(f, 0.5 * (l + r));
            }
        }
        sum
    }

    /// Ratio of the two innermost shell contributions at endpoint `end`
    /// (0: left, 1: right). `None` when the integrand vanishes there.
    fn tail_ratio(&self, f: &dyn Fn(f64) -> f64, end: usize) -> Option<f64> {
        let n = self.mesh.n_elements();
        let (e, towards) = if end == 0 {
            (self.mesh.a(), self.mesh.h(0))
        } else {
            (self.mesh.b(), -self.mesh.h(n - 1))
        };
        let shell = |k: usize| {
            let outer = e + towards * 0.5f64.powi(k as i32);
            let inner = e + towards * 0.5f64.powi(k as i32 + 1);
            (outer - inner).abs() * self.integrand(f, 0.5 * (outer + inner))
        };
        let last = shell(TAIL_SHELLS);
        let prev = shell(TAIL_SHELLS - 1);
        if !last.is_finite() || !prev.is_finite() {
            return Some(f64::INFINITY);
        }
        if prev == 0.0 {
            return if last == 0.0 { None } else { Some(f64::INFINITY) };
        }
        Some(last / prev)
    }

    fn global(&self, label: &str, f: &dyn Fn(f64) -> f64) -> Evidence {
        let value = self.over(f, self.mesh.a(), self.mesh.b());
        let tail = [0, 1].iter().filter_map(|&end| self.tail_ratio(f, end)).fold(None, |m: Option<f64>, r| {
            Some(m.map_or(r, |m| m.max(r)))
        });
        Evidence { label: label.to_string(), scope: Scope::Global, value, tail_ratio: tail }
    }

    fn local(&self, label: &str, f: &dyn Fn(f64) -> f64, window: (f64, f64)) -> Evidence {
        Evidence {
            label: label.to_string(),
            scope: Scope::Local,
            value: self.over(f, window.0, window.1),
            tail_ratio: None,
        }
    }
}

fn integrable(ev: &Evidence) -> bool {
    ev.value.is_finite() && ev.value >= 0.0 && ev.tail_ratio.is_none_or(|r| r < TAIL_RATIO_LIMIT)
}

fn verdict(evidence: &[Evidence]) -> ConditionStatus {
    if evidence.iter().all(integrable) {
        ConditionStatus::Pass
    } else {
        ConditionStatus::Fail
    }
}

/// Numerically checks W1-W6 for the pair `(ω₁, ω₂)` on `mesh`.
pub fn check_admissibility(
    omega1: &WeightSpec,
    omega2: &WeightSpec,
    p: f64,
    q: f64,
    s: f64,
    mesh: &Mesh1D,
) -> Result<AdmissibilityReport> {
    if !(p > 2.0) {
        return arg_err(format!("admissibility needs p > 2, got {p}"));
    }
    if !(p < q && q < s) || !s.is_finite() {
        return arg_err(format!("admissibility needs p < q < s, got p={p}, q={q}, s={s}"));
    }
    omega1.validate()?;
    omega2.validate()?;
    let dom = mesh.domain();
    let quad = Quadrature { mesh };
    let diam = mesh.b() - mesh.a();
    let window = (mesh.a() + INTERIOR_MARGIN * diam, mesh.b() - INTERIOR_MARGIN * diam);
    let w1 = |x: f64| omega1.value(x, &dom);
    let w2 = |x: f64| omega2.value(x, &dom);

    let mut entries = Vec::with_capacity(6);

    let ev = vec![quad.local("w1_omega1", &w1, window), quad.local("w1_omega2", &w2, window)];
    let nonneg = (0..mesh.n_elements()).all(|e| {
        let x = mesh.midpoint(e);
        w1(x) >= 0.0 && w2(x) >= 0.0
    });
    let mut status = verdict(&ev);
    if !nonneg {
        status = ConditionStatus::Fail;
    }
    entries.push(ConditionEntry {
        condition: Condition::W1,
        status,
        evidence: ev,
        note: if nonneg {
            "ω₁, ω₂ integrated over the interior window".into()
        } else {
            "a weight is negative at some element midpoint".into()
        },
    });

    let e2 = -2.0 / (p - 2.0);
    let f2 = |x: f64| w1(x).powf(e2);
    let ev = vec![quad.global("w2_global", &f2), quad.local("w2_local", &f2, window)];
    let status = if integrable(&ev[0]) { ConditionStatus::Pass } else { ConditionStatus::Fail };
    let note = format!(
        "∫ ω₁^({e2}) over the whole mesh; local scope {}",
        if integrable(&ev[1]) { "also finite" } else { "not finite" }
    );
    entries.push(ConditionEntry { condition: Condition::W2, status, evidence: ev, note });

    let mut mins = Vec::with_capacity(W3_SUBINTERVALS);
    let width = (window.1 - window.0) / W3_SUBINTERVALS as f64;
    for k in 0..W3_SUBINTERVALS {
        let (lo, hi) = (window.0 + k as f64 * width, window.0 + (k + 1) as f64 * width);
        let m = (0..mesh.n_elements())
            .map(|e| mesh.midpoint(e))
            .filter(|x| (lo..=hi).contains(x))
            .map(w2)
            .fold(f64::INFINITY, f64::min);
        mins.push(Evidence { label: format!("w3_min_omega2_{k}"), scope: Scope::Local, value: m, tail_ratio: None });
    }
    let ok = mins.iter().all(|e| e.value > 0.0 && e.value.is_finite());
    entries.push(ConditionEntry {
        condition: Condition::W3,
        status: if ok { ConditionStatus::Pass } else { ConditionStatus::Fail },
        evidence: mins,
        note: format!("minimum of ω₂ at midpoints of {W3_SUBINTERVALS} interior subintervals"),
    });

    entries.push(ConditionEntry {
        condition: Condition::W4,
        status: ConditionStatus::AnalyticOnly,
        evidence: Vec::new(),
        note: "Hardy constant K is estimated by the Rayleigh quotient minimizer".into(),
    });
    entries.push(ConditionEntry {
        condition: Condition::W5,
        status: ConditionStatus::AnalyticOnly,
        evidence: Vec::new(),
        note: "compact embedding has no finite-dimensional check".into(),
    });

    let a6 = -q / (s - q);
    let b6 = q / (q - p);
    let f6a = |x: f64| w1(x).powf(a6);
    let f6b = |x: f64| w2(x).powf(b6);
    let ev = vec![quad.local("w6_omega1", &f6a, window), quad.local("w6_omega2", &f6b, window)];
    entries.push(ConditionEntry {
        condition: Condition::W6,
        status: verdict(&ev),
        evidence: ev,
        note: format!("∫ ω₁^({a6}) and ∫ ω₂^({b6}) over the interior window"),
    });

    Ok(AdmissibilityReport { p, q, s, interior: window, entries })
}
