//! Command dispatch and artifact writing.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use hardy_core::eigen::{self, RayleighOptions, RayleighReport};
use hardy_core::mesh::{read_field_csv, write_field_csv};
use hardy_core::parabolic::{self, EvolutionConfig, EvolutionStatus, WeightPair};
use hardy_core::weights::{check_admissibility, ConditionStatus};
use hardy_core::{Field, Mesh1D};
use serde::Serialize;

use crate::config::{Command, ExperimentConfig, Initial};
use crate::error::CliError;

/// Headline numbers of a run; absent entries do not apply to the command.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Headline {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_hat_converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_m: Option<Vec<(f64, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotone_in_m: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_budget: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_crit_est: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<Vec<(String, String)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotonicity_violations: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: Command,
    pub config: ExperimentConfig,
    pub status: String,
    pub headline: Headline,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub struct RunOutcome {
    pub report: Report,
    pub out_dir: PathBuf,
    pub exit_code: i32,
}

/// Executes `cfg`, writing artifacts into `out_dir`. Relative paths inside
/// the config resolve against `base`.
pub fn run(cfg: &ExperimentConfig, base: &Path, out_dir: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let mesh = cfg.mesh.build()?;
    let weights = WeightPair { omega1: cfg.weights.omega1.resolve(base)?, omega2: cfg.weights.omega2.resolve(base)? };
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::precondition(format!("cannot create {}: {e}", out_dir.display())))?;

    let ctx = Ctx { cfg, base, out: out_dir, mesh, weights };
    let (status, headline, notes, exit_code) = match cfg.command {
        Command::CheckWeights => ctx.check_weights()?,
        Command::Eigen => ctx.eigen()?,
        Command::EigenStudy => ctx.eigen_study()?,
        Command::Evolve => ctx.evolve()?,
        Command::Sweep => ctx.sweep()?,
        Command::TruncationStudy => ctx.truncation_study()?,
    };
    let report = Report { command: cfg.command, config: cfg.clone(), status, headline, notes };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(RunOutcome { report, out_dir: out_dir.to_path_buf(), exit_code })
}

type CommandResult = Result<(String, Headline, Vec<String>, i32), CliError>;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    base: &'a Path,
    out: &'a Path,
    mesh: Mesh1D,
    weights: WeightPair,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    std::fs::write(path, text + "\n").map_err(|e| CliError::precondition(format!("cannot write {}: {e}", path.display())))
}

fn eigen_row(path: &Path, rows: &[(Option<f64>, &RayleighReport)]) -> Result<(), CliError> {
    let mut text = String::from("m,lambda,iterations,converged\n");
    for (m, r) in rows {
        let m = m.map_or("inf".to_string(), |m| format!("{m:e}"));
        text += &format!("{m},{:e},{},{}\n", r.lambda_est, r.iterations, r.converged);
    }
    std::fs::write(path, text).map_err(|e| CliError::precondition(e.to_string()))
}

impl Ctx<'_> {
    fn rayleigh_options(&self) -> RayleighOptions {
        let s = &self.cfg.solver;
        RayleighOptions { max_iters: s.max_iters, tol: s.tol, seed: s.seed, ..RayleighOptions::default() }
    }

    fn lambda_hat(&self) -> Result<RayleighReport, CliError> {
        let w = &self.weights;
        Ok(eigen::minimize_rayleigh(&w.omega1, &w.omega2, self.cfg.physics.p, &self.mesh, &self.rayleigh_options())?)
    }

    fn evolution_config(&self, lambda_hat: f64) -> EvolutionConfig {
        let (c, ph) = (self.cfg, &self.cfg.physics);
        EvolutionConfig {
            p: ph.p,
            lambda: self.absolute(ph.lambda, lambda_hat),
            m: ph.m,
            dt: c.time.dt,
            t_final: c.time.t_final,
            eps: c.solver.eps,
            picard_max: c.solver.picard_max,
            picard_tol: c.solver.picard_tol,
            blowup_factor: c.solver.blowup_factor,
            dt_min: c.time.dt_min,
            hardy_constant: Some(lambda_hat),
            keep_fields: false,
        }
    }

    fn absolute(&self, lambda: f64, lambda_hat: f64) -> f64 {
        if self.cfg.physics.relative_lambda {
            lambda * lambda_hat
        } else {
            lambda
        }
    }

    fn initial(&self) -> Result<Field, CliError> {
        let mesh = &self.mesh;
        match &self.cfg.initial {
            Initial::Zero => Ok(Field::zeros(mesh)),
            Initial::Bump { amplitude } => {
                let th_l = if mesh.dirichlet_left() { 0.0 } else { FRAC_PI_2 };
                let th_r = if mesh.dirichlet_right() { PI } else { FRAC_PI_2 };
                let (a, b) = (mesh.a(), mesh.b());
                Ok(Field::from_fn(mesh, |x| amplitude * (th_l + (x - a) / (b - a) * (th_r - th_l)).sin()))
            }
            Initial::File { path } => {
                read_field_csv(&self.base.join(path), mesh).map_err(|e| CliError::parse(format!("initial data: {e}")))
            }
        }
    }

    fn check_weights(&self) -> CommandResult {
        let ph = &self.cfg.physics;
        let w = &self.weights;
        let rep = check_admissibility(&w.omega1, &w.omega2, ph.p, ph.q, ph.s, &self.mesh)?;
        write_json(&self.out.join("admissibility.json"), &rep)?;
        let entries = rep
            .entries
            .iter()
            .map(|e| (format!("{:?}", e.condition), format!("{:?}", e.status).to_lowercase()))
            .collect();
        let failed = rep.entries.iter().any(|e| e.status == ConditionStatus::Fail);
        let status = if failed { "fail" } else { "pass" };
        Ok((status.into(), Headline { admissibility: Some(entries), ..Headline::default() }, Vec::new(), 0))
    }

    fn eigen(&self) -> CommandResult {
        let w = &self.weights;
        let omega1 = match self.cfg.physics.m {
            Some(m) => w.omega1.truncate(m)?,
            None => w.omega1.clone(),
        };
        let r = eigen::minimize_rayleigh(&omega1, &w.omega2, self.cfg.physics.p, &self.mesh, &self.rayleigh_options())?;
        eigen_row(&self.out.join("eigen.csv"), &[(self.cfg.physics.m, &r)])?;
        write_field_csv(&self.out.join("minimizer.csv"), &self.mesh, r.minimizer())?;
        let headline = Headline {
            lambda_hat: Some(r.lambda_est),
            lambda_hat_converged: Some(r.converged),
            iterations: Some(r.iterations),
            ..Headline::default()
        };
        let status = if r.converged { "converged" } else { "not-converged" };
        Ok((status.into(), headline, r.note.into_iter().collect(), 0))
    }

    fn eigen_study(&self) -> CommandResult {
        let w = &self.weights;
        let ph = &self.cfg.physics;
        let study =
            eigen::truncated_eigen_study(&w.omega1, &w.omega2, ph.p, &self.mesh, &ph.m_list, &self.rayleigh_options())?;
        eigen::write_study_csv(&self.out.join("eigen.csv"), &study)?;
        write_field_csv(&self.out.join("minimizer.csv"), &self.mesh, study.untruncated.minimizer())?;
        let slack = 10.0 * self.cfg.solver.tol;
        let lam: Vec<f64> = study.rows.iter().map(|r| r.lambda).collect();
        let monotone = lam.windows(2).all(|l| l[1] <= l[0] * (1.0 + slack));
        let mut notes: Vec<String> = study
            .rows
            .iter()
            .filter(|r| !r.converged)
            .map(|r| format!("m={:e}: not converged{}", r.m, r.note.as_ref().map_or(String::new(), |n| format!(" ({n})"))))
            .collect();
        if !study.untruncated.converged {
            notes.push("untruncated estimate hit the iteration limit; it is an upper bound".into());
        }
        let headline = Headline {
            lambda_hat: Some(study.untruncated.lambda_est),
            lambda_hat_converged: Some(study.untruncated.converged),
            lambda_m: Some(study.rows.iter().map(|r| (r.m, r.lambda)).collect()),
            monotone_in_m: Some(monotone),
            ..Headline::default()
        };
        let status = if monotone { "monotone" } else { "not-monotone" };
        Ok((status.into(), headline, notes, 0))
    }

    fn evolve(&self) -> CommandResult {
        let hat = self.lambda_hat()?;
        let ecfg = self.evolution_config(hat.lambda_est);
        let f = self.initial()?;
        let trace = parabolic::evolve(&f, &ecfg, &self.weights, &self.mesh)?;
        parabolic::write_trace_csv(&self.out.join("trace.csv"), &trace)?;
        parabolic::write_status_json(&self.out.join("status.json"), &trace)?;
        write_field_csv(&self.out.join("final.csv"), &self.mesh, &Field::new(trace.final_field.clone(), &self.mesh)?)?;
        let headline = Headline {
            lambda_hat: Some(hat.lambda_est),
            lambda_hat_converged: Some(hat.converged),
            lambda: Some(ecfg.lambda),
            energy_budget: Some(trace.energy_budget),
            energy_residual: trace.energy_residual,
            ..Headline::default()
        };
        let code = if matches!(trace.status, EvolutionStatus::SolverFailure { .. }) { 4 } else { 0 };
        Ok((trace.status.label(), headline, Vec::new(), code))
    }

    fn sweep(&self) -> CommandResult {
        let hat = self.lambda_hat()?;
        let ph = &self.cfg.physics;
        let ecfg = self.evolution_config(hat.lambda_est);
        let f = self.initial()?;
        let lo = self.absolute(ph.lambda_lo, hat.lambda_est);
        let hi = self.absolute(ph.lambda_hi, hat.lambda_est);
        let res = parabolic::sweep_lambda(&f, &ecfg, &self.weights, &self.mesh, lo, hi, ph.bisection_steps)?;
        let mut text = String::from("lambda,status,l2sq_0,l2sq_end,t_end,decays\n");
        for (lambda, t) in &res.runs {
            text += &format!(
                "{lambda:e},{},{:e},{:e},{:e},{}\n",
                status_kind(&t.status),
                t.l2sq[0],
                t.l2sq.last().unwrap(),
                t.times.last().unwrap(),
                t.decays()
            );
        }
        std::fs::write(self.out.join("sweep.csv"), text).map_err(|e| CliError::precondition(e.to_string()))?;
        if let Some((_, last)) = res.runs.last() {
            parabolic::write_trace_csv(&self.out.join("trace.csv"), last)?;
        }
        let headline = Headline {
            lambda_hat: Some(hat.lambda_est),
            lambda_hat_converged: Some(hat.converged),
            lambda_crit_est: Some(res.lambda_crit_est),
            bracket: Some(res.bracket),
            ..Headline::default()
        };
        let notes = vec![format!(
            "lambda_crit_est / lambda_hat = {:.6}; the two are reported separately",
            res.lambda_crit_est / hat.lambda_est
        )];
        Ok(("bracketed".into(), headline, notes, 0))
    }

    fn truncation_study(&self) -> CommandResult {
        let hat = self.lambda_hat()?;
        let ph = &self.cfg.physics;
        let ecfg = self.evolution_config(hat.lambda_est);
        let f = self.initial()?;
        let study = parabolic::truncation_family_study(&f, ecfg.lambda, &ph.m_list, &ecfg, &self.weights, &self.mesh)?;
        for (i, (_, t)) in study.traces.iter().enumerate() {
            parabolic::write_trace_csv(&self.out.join(format!("trace_m{i}.csv")), t)?;
        }
        if let Some((_, t)) = study.traces.last() {
            parabolic::write_trace_csv(&self.out.join("trace.csv"), t)?;
        }
        let mut text = String::from("m_lo,m_hi,t,min_diff\n");
        for r in &study.comparison {
            text += &format!("{:e},{:e},{:e},{:e}\n", r.m_lo, r.m_hi, r.t, r.min_diff);
        }
        std::fs::write(self.out.join("comparison.csv"), text).map_err(|e| CliError::precondition(e.to_string()))?;
        let notes = study.traces.iter().map(|(m, t)| format!("m={m:e}: {}", t.status.label())).collect();
        let headline = Headline {
            lambda_hat: Some(hat.lambda_est),
            lambda: Some(ecfg.lambda),
            energy_budget: study.traces.first().map(|(_, t)| t.energy_budget),
            monotonicity_violations: Some(study.violations),
            ..Headline::default()
        };
        let all_global = study.traces.iter().all(|(_, t)| t.status == EvolutionStatus::Global);
        let code = if study.traces.iter().any(|(_, t)| matches!(t.status, EvolutionStatus::SolverFailure { .. })) {
            4
        } else {
            0
        };
        Ok((if all_global { "global" } else { "mixed" }.into(), headline, notes, code))
    }
}

fn status_kind(s: &EvolutionStatus) -> &'static str {
    match s {
        EvolutionStatus::Global => "global",
        EvolutionStatus::BlowUp { .. } => "blow-up",
        EvolutionStatus::SolverFailure { .. } => "solver-failure",
    }
}
