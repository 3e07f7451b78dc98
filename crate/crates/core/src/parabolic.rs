//! Backward Euler evolution of the truncated problems
//!
//! ```text
//! u_t - div(ω₂ |∇u|^(p-2) ∇u) = λ T_m(ω₁) |u|^(p-2) u,   u = 0 on Dirichlet nodes
//! ```
//!
//! Each step solves `M (u - u_n)/dt + A(u) - λ R(u) = 0` by Picard lagging:
//! with `w` the previous iterate, `(M/dt + K(w) - λ S(w)) u = M u_n / dt`
//! where `K(w)` is the lagged stiffness and `S(w) = diag(L_j |w_j|^(p-2))`.
//! Every inner system is symmetric tridiagonal; a non-positive pivot or a
//! Picard stall halves `dt`. Above the Hardy constant of a singular ω₁ growth
//! starts at time scales of the smallest elements, so `dt_min` defaults to a
//! tiny value and blow-up is followed down to it.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::mesh::{Field, Mesh1D};
use crate::operators::Discretization;
use crate::weights::WeightSpec;

/// Picard iterations without a new smallest change before giving up.
const PICARD_PATIENCE: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub omega1: WeightSpec,
    pub omega2: WeightSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolutionConfig {
    pub p: f64,
    pub lambda: f64,
    /// Truncation level of ω₁ in the reaction; `None` is untruncated.
    pub m: Option<f64>,
    pub dt: f64,
    pub t_final: f64,
    pub eps: f64,
    pub picard_max: usize,
    pub picard_tol: f64,
    pub blowup_factor: f64,
    pub dt_min: f64,
    /// Hardy constant estimate used for the energy-inequality residual.
    pub hardy_constant: Option<f64>,
    /// Keep the nodal field at every accepted time.
    pub keep_fields: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            p: 3.0,
            lambda: 0.0,
            m: None,
            dt: 1e-3,
            t_final: 1.0,
            eps: 0.0,
            picard_max: 200,
            picard_tol: 1e-10,
            blowup_factor: 1e6,
            dt_min: 1e-30,
            hardy_constant: None,
            keep_fields: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        // p = 2 is the linear control case
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return arg_err(format!("evolution needs p >= 2, got {}", self.p));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return arg_err("lambda must be finite and >= 0");
        }
        if let Some(m) = self.m {
            if !(m > 0.0) {
                return arg_err("truncation level m must be > 0");
            }
        }
        if !(self.dt > 0.0 && self.t_final >= self.dt && self.dt_min > 0.0 && self.dt_min <= self.dt) {
            return arg_err("time steps must satisfy 0 < dt_min <= dt <= T");
        }
        if !(self.eps >= 0.0) || !(self.picard_tol > 0.0) || self.picard_max == 0 || !(self.blowup_factor > 1.0) {
            return arg_err("need eps >= 0, picard_tol > 0, picard_max >= 1 and blowup_factor > 1");
        }
        if let Some(k) = self.hardy_constant {
            if !(k > 0.0) {
                return arg_err("Hardy constant estimate must be > 0");
            }
        }
        Ok(())
    }

    fn reaction_weight(&self, omega1: &WeightSpec) -> Result<WeightSpec> {
        match self.m {
            Some(m) => omega1.truncate(m),
            None => Ok(omega1.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EvolutionStatus {
    Global,
    BlowUp { t: f64 },
    SolverFailure { t: f64 },
}

impl EvolutionStatus {
    pub fn label(&self) -> String {
        match self {
            Self::Global => "global".into(),
            Self::BlowUp { t } => format!("blow-up at t={t:e}"),
            Self::SolverFailure { t } => format!("solver failure at t={t:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub l2sq: Vec<f64>,
    pub dirichlet: Vec<f64>,
    pub mass: Vec<f64>,
    pub status: EvolutionStatus,
    /// `½ l2sq(0)`.
    pub energy_budget: f64,
    /// `Σ dt_k dirichlet(u_k)` over accepted steps.
    pub dissipation: f64,
    /// `½ l2sq(T) + (1 - λ/K̂) Σ dt dirichlet - ½ l2sq(0)`, when `K̂` is known.
    pub energy_residual: Option<f64>,
    pub rejected_steps: usize,
    #[serde(skip)]
    pub final_field: Vec<f64>,
    #[serde(skip)]
    pub fields: Vec<Vec<f64>>,
}

impl EvolutionTrace {
    /// Global run whose terminal L² norm is below the initial one.
    pub fn decays(&self) -> bool {
        self.status == EvolutionStatus::Global && self.l2sq.last() < self.l2sq.first()
    }
}

/// Why a single implicit step was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum StepFailure {
    NotPositiveDefinite { row: usize, pivot: f64 },
    NonFinite,
    PicardStalled { iterations: usize, change: f64 },
}

/// Implicit Euler stepper for one configuration, weights sampled once.
pub struct Stepper {
    disc: Discretization,
    cfg: EvolutionConfig,
}

impl Stepper {
    pub fn new(cfg: &EvolutionConfig, weights: &WeightPair, mesh: &Mesh1D) -> Result<Self> {
        cfg.validate()?;
        let w1 = cfg.reaction_weight(&weights.omega1)?;
        let disc = Discretization::new(mesh, &w1, &weights.omega2, cfg.p)?;
        Ok(Self { disc, cfg: cfg.clone() })
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// One backward Euler step of size `dt` from `u_n`.
    pub fn step(&self, u_n: &[f64], dt: f64) -> std::result::Result<Vec<f64>, StepFailure> {
        self.solve(u_n, dt).map(|(u, _)| u)
    }

    /// As [`Self::step`], also returning the number of Picard iterations.
    fn solve(&self, u_n: &[f64], dt: f64) -> std::result::Result<(Vec<f64>, usize), StepFailure> {
        let p = self.cfg.p;
        let free = self.disc.mesh().free_nodes();
        let l2 = self.disc.l2_weights();
        let lw = self.disc.mass_weights();
        let rhs: Vec<f64> = free.clone().map(|j| l2[j] * u_n[j] / dt).collect();

        let mut w = u_n.to_vec();
        let mut change = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut since_best = 0;
        for it in 1..=self.cfg.picard_max {
            let mut a = self.disc.lagged_stiffness(&w, self.cfg.eps);
            for (i, j) in free.clone().enumerate() {
                a.diag[i] += l2[j] / dt - self.cfg.lambda * lw[j] * w[j].abs().powf(p - 2.0);
            }
            let x = a
                .solve_spd(&rhs)
                .map_err(|e| StepFailure::NotPositiveDefinite { row: e.row + free.start, pivot: e.pivot })?;
            let mut next = vec![0.0; w.len()];
            next[free.clone()].copy_from_slice(&x);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(StepFailure::NonFinite);
            }
            let size = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = next.iter().zip(&w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            change = if size > 0.0 { diff / size } else { 0.0 };
            w = next;
            if change <= self.cfg.picard_tol {
                return Ok((w, it));
            }
            if change < best {
                best = change;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= PICARD_PATIENCE {
                    return Err(StepFailure::PicardStalled { iterations: it, change });
                }
            }
        }
        Err(StepFailure::PicardStalled { iterations: self.cfg.picard_max, change })
    }
}

/// One backward Euler step with the configured `dt`.
pub fn step_implicit(u_n: &Field, cfg: &EvolutionConfig, weights: &WeightPair, mesh: &Mesh1D) -> Result<Field> {
    check_initial(u_n, mesh)?;
    let stepper = Stepper::new(cfg, weights, mesh)?;
    stepper
        .step(u_n.values(), cfg.dt)
        .map(Field::from_raw)
        .map_err(|f| Error::Argument(format!("implicit step failed at dt={}: {f:?}", cfg.dt)))
}

fn check_initial(f: &Field, mesh: &Mesh1D) -> Result<()> {
    if f.len() != mesh.n_nodes() {
        return arg_err("initial data does not match the mesh");
    }
    Field::new(f.values().to_vec(), mesh).map(|_| ())
}

/// Runs from `f` to `T` with dt halving on rejected steps and regrowth after
/// accepted ones; the outcome is encoded in the trace status.
pub fn evolve(f: &Field, cfg: &EvolutionConfig, weights: &WeightPair, mesh: &Mesh1D) -> Result<EvolutionTrace> {
    check_initial(f, mesh)?;
    let stepper = Stepper::new(cfg, weights, mesh)?;
    let disc = &stepper.disc;
    let mut u = f.values().to_vec();
    let l0 = disc.l2sq(&u);
    let mut trace = EvolutionTrace {
        times: vec![0.0],
        l2sq: vec![l0],
        dirichlet: vec![disc.dirichlet(&u)],
        mass: vec![disc.mass(&u)],
        status: EvolutionStatus::Global,
        energy_budget: 0.5 * l0,
        dissipation: 0.0,
        energy_residual: None,
        rejected_steps: 0,
        final_field: Vec::new(),
        fields: Vec::new(),
    };
    if cfg.keep_fields {
        trace.fields.push(u.clone());
    }

    let mut t = 0.0;
    let mut dt = cfg.dt;
    // consecutive accepted steps with a fast Picard solve; two allow dt to grow
    let mut quick = 0;
    // relative slack so the last step is not a sliver
    while t < cfg.t_final * (1.0 - 1e-12) {
        let h = if t + dt >= cfg.t_final * (1.0 - 1e-12) { cfg.t_final - t } else { dt };
        match stepper.solve(&u, h) {
            Ok((next, iterations)) => {
                u = next;
                t = if h == cfg.t_final - t { cfg.t_final } else { t + h };
                let e = disc.breakdown(&u);
                trace.times.push(t);
                trace.l2sq.push(e.l2sq);
                trace.dirichlet.push(e.dirichlet);
                trace.mass.push(e.mass);
                trace.dissipation += h * e.dirichlet;
                if cfg.keep_fields {
                    trace.fields.push(u.clone());
                }
                if !(e.l2sq < cfg.blowup_factor * l0) && l0 > 0.0 || !e.l2sq.is_finite() {
                    trace.status = EvolutionStatus::BlowUp { t };
                    break;
                }
                quick = if iterations <= cfg.picard_max / 8 + 1 { quick + 1 } else { 0 };
                if quick >= 2 {
                    dt = (2.0 * dt).min(cfg.dt);
                    quick = 0;
                }
            }
            Err(_) => {
                trace.rejected_steps += 1;
                quick = 0;
                dt = 0.5 * h;
                if dt < cfg.dt_min {
                    trace.status = EvolutionStatus::SolverFailure { t };
                    break;
                }
            }
        }
    }
    if let Some(k) = cfg.hardy_constant {
        let last = *trace.l2sq.last().expect("trace starts with t = 0");
        trace.energy_residual = Some(0.5 * last + (1.0 - cfg.lambda / k) * trace.dissipation - 0.5 * l0);
    }
    trace.final_field = u;
    Ok(trace)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub lambda_crit_est: f64,
    /// Final bracket `[lo, hi]`: `lo` decays, `hi` does not.
    pub bracket: (f64, f64),
    /// Every evolution run, in the order performed.
    pub runs: Vec<(f64, EvolutionTrace)>,
}

/// Bisects on the decay indicator ("Global and terminal l2sq < l2sq(0)").
pub fn sweep_lambda(
    f: &Field,
    template: &EvolutionConfig,
    weights: &WeightPair,
    mesh: &Mesh1D,
    lambda_lo: f64,
    lambda_hi: f64,
    bisection_steps: usize,
) -> Result<SweepResult> {
    if !(0.0 <= lambda_lo && lambda_lo < lambda_hi) {
        return arg_err("need 0 <= lambda_lo < lambda_hi");
    }
    let run = |lambda: f64| {
        let cfg = EvolutionConfig { lambda, keep_fields: false, ..template.clone() };
        evolve(f, &cfg, weights, mesh)
    };
    let (lo_trace, hi_trace) = rayon::join(|| run(lambda_lo), || run(lambda_hi));
    let (lo_trace, hi_trace) = (lo_trace?, hi_trace?);
    if !lo_trace.decays() || hi_trace.decays() {
        let describe = |t: &EvolutionTrace| {
            format!("{} (l2sq {:e} -> {:e})", t.status.label(), t.l2sq[0], t.l2sq.last().unwrap())
        };
        return Err(Error::Bracket { lo_status: describe(&lo_trace), hi_status: describe(&hi_trace) });
    }
    let mut runs = vec![(lambda_lo, lo_trace), (lambda_hi, hi_trace)];
    let (mut lo, mut hi) = (lambda_lo, lambda_hi);
    for _ in 0..bisection_steps {
        let mid = 0.5 * (lo + hi);
        let trace = run(mid)?;
        if trace.decays() {
            lo = mid;
        } else {
            hi = mid;
        }
        runs.push((mid, trace));
    }
    Ok(SweepResult { lambda_crit_est: 0.5 * (lo + hi), bracket: (lo, hi), runs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub m_lo: f64,
    pub m_hi: f64,
    pub t: f64,
    /// `min_j (u_{m_hi} - u_{m_lo})(t, x_j)`.
    pub min_diff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyStudy {
    pub traces: Vec<(f64, EvolutionTrace)>,
    pub comparison: Vec<ComparisonRow>,
    /// Comparison rows with `min_diff < 0`, i.e. where `u_m` fails to be
    /// nondecreasing in `m`.
    pub violations: usize,
}

/// Evolves every truncation level in `m_list` (in parallel) and compares
/// consecutive members at the time samples they share.
pub fn truncation_family_study(
    f: &Field,
    lambda: f64,
    m_list: &[f64],
    cfg: &EvolutionConfig,
    weights: &WeightPair,
    mesh: &Mesh1D,
) -> Result<FamilyStudy> {
    if m_list.is_empty() || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return arg_err("m_list must be nonempty and strictly increasing");
    }
    let traces: Vec<(f64, EvolutionTrace)> = m_list
        .par_iter()
        .map(|&m| {
            let c = EvolutionConfig { lambda, m: Some(m), keep_fields: true, ..cfg.clone() };
            evolve(f, &c, weights, mesh).map(|t| (m, t))
        })
        .collect::<Result<_>>()?;

    let mut comparison = Vec::new();
    for pair in traces.windows(2) {
        let ((m_lo, a), (m_hi, b)) = (&pair[0], &pair[1]);
        let mut j = 0;
        for (i, &t) in a.times.iter().enumerate() {
            while j < b.times.len() && b.times[j] < t - 1e-12 * cfg.t_final {
                j += 1;
            }
            if j < b.times.len() && (b.times[j] - t).abs() <= 1e-12 * cfg.t_final {
                let min_diff = b.fields[j]
                    .iter()
                    .zip(&a.fields[i])
                    .map(|(hi, lo)| hi - lo)
                    .fold(f64::INFINITY, f64::min);
                comparison.push(ComparisonRow { m_lo: *m_lo, m_hi: *m_hi, t, min_diff });
            }
        }
    }
    let violations = comparison.iter().filter(|r| r.min_diff < 0.0).count();
    Ok(FamilyStudy { traces, comparison, violations })
}

/// Writes `t, l2sq, dirichlet, mass`.
pub fn write_trace_csv(path: &Path, trace: &EvolutionTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "l2sq", "dirichlet", "mass"])?;
    for i in 0..trace.times.len() {
        w.write_record([trace.times[i], trace.l2sq[i], trace.dirichlet[i], trace.mass[i]].map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StatusRecord<'a> {
    status: &'a EvolutionStatus,
    energy_budget: f64,
    dissipation: f64,
    energy_residual: Option<f64>,
    rejected_steps: usize,
}

/// Writes the status and energy-inequality residual as JSON.
pub fn write_status_json(path: &Path, trace: &EvolutionTrace) -> Result<()> {
    let rec = StatusRecord {
        status: &trace.status,
        energy_budget: trace.energy_budget,
        dissipation: trace.dissipation,
        energy_residual: trace.energy_residual,
        rejected_steps: trace.rejected_steps,
    };
    std::fs::write(path, serde_json::to_string_pretty(&rec)?)?;
    Ok(())
}
