//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::path::Path;
use std::time::{Duration, Instant};

use hardy_cli::config::{ExperimentConfig, Initial};
use hardy_cli::scenario;
use hardy_core::eigen::{minimize_rayleigh, truncated_eigen_study, RayleighOptions};
use hardy_core::operators::{apply_plap, dirichlet_energy, dot, Discretization};
use hardy_core::parabolic::{evolve, sweep_lambda, EvolutionConfig, EvolutionStatus, Stepper, WeightPair};
use hardy_core::weights::{check_admissibility, truncate_value};
use hardy_core::{Domain, Field, Mesh1D, WeightSpec};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

struct Setup {
    mesh: Mesh1D,
    weights: WeightPair,
    p: f64,
    cfg: ExperimentConfig,
}

fn setup(name: &str) -> Setup {
    let cfg = scenario(name).expect("built-in scenario");
    let base = Path::new(".");
    Setup {
        mesh: cfg.mesh.build().unwrap(),
        weights: WeightPair {
            omega1: cfg.weights.omega1.resolve(base).unwrap(),
            omega2: cfg.weights.omega2.resolve(base).unwrap(),
        },
        p: cfg.physics.p,
        cfg,
    }
}

fn lambda_hat(s: &Setup) -> f64 {
    minimize_rayleigh(&s.weights.omega1, &s.weights.omega2, s.p, &s.mesh, &RayleighOptions::default())
        .unwrap()
        .lambda_est
}

fn bump(s: &Setup) -> Field {
    let amp = match s.cfg.initial {
        Initial::Bump { amplitude } => amplitude,
        _ => 1.0,
    };
    Field::from_fn(&s.mesh, |x| amp * (PI * x).sin())
}

fn random_field(mesh: &Mesh1D, rng: &mut ChaCha8Rng) -> Field {
    let (a, b) = (mesh.a(), mesh.b());
    let kind = rng.gen_range(0..3);
    let vals: Vec<f64> = match kind {
        0 => (0..mesh.n_nodes()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        1 => {
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            mesh.nodes()
                .iter()
                .map(|x| {
                    let t = (x - a) / (b - a);
                    c.iter().enumerate().map(|(k, ck)| ck * ((k as f64 + 0.5) * PI * t).cos()).sum()
                })
                .collect()
        }
        _ => {
            let (e1, e2) = (rng.gen_range(0.2..3.0), rng.gen_range(0.5..3.0));
            mesh.nodes()
                .iter()
                .map(|x| {
                    let t = (x - a) / (b - a);
                    t.powf(e1) * (1.0 - t).powf(e2) + 0.01 * rng.gen_range(-1.0..1.0)
                })
                .collect()
        }
    };
    Field::pinned(vals, mesh).unwrap()
}

/// Smallest eigenvalue of `K x = λ M x`, assembled here independently:
/// stiffness `1/h` per element and lumped mass `(h_l + h_r)/2` per node.
fn dense_generalized_p2(mesh: &Mesh1D) -> f64 {
    let x = mesh.nodes();
    let free: Vec<usize> = mesh.free_nodes().collect();
    let k = free.len();
    let mut stiff = DMatrix::<f64>::zeros(k, k);
    let mut mass = vec![0.0; k];
    for e in 0..x.len() - 1 {
        let h = x[e + 1] - x[e];
        for (a, b) in [(e, e + 1), (e + 1, e)] {
            if let Some(i) = free.iter().position(|&j| j == a) {
                stiff[(i, i)] += 1.0 / h;
                mass[i] += 0.5 * h;
                if let Some(j) = free.iter().position(|&j| j == b) {
                    stiff[(i, j)] -= 1.0 / h;
                }
            }
        }
    }
    let sym = DMatrix::from_fn(k, k, |i, j| stiff[(i, j)] / (mass[i] * mass[j]).sqrt());
    SymmetricEigen::new(sym).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn c1_p2_eigenvalue() -> Outcome {
    let t = Instant::now();
    let s = setup("unit-interval-p2");
    let lam = lambda_hat(&s);
    let elapsed = t.elapsed();
    let oracle = dense_generalized_p2(&s.mesh);
    let pi2 = PI * PI;
    let (e1, e2) = ((lam - oracle).abs() / oracle, (oracle - pi2).abs() / pi2);
    outcome(
        e1 < 0.01 && e2 < 0.01 && elapsed < Duration::from_secs(10),
        format!("lambda_hat={lam:.8} oracle={oracle:.8} rel_err={e1:.2e} oracle_vs_pi2={e2:.2e} time={elapsed:.2?}"),
    )
}

fn c2_monotone_truncated() -> Outcome {
    let t = Instant::now();
    let s = setup("radial-power");
    let opts = RayleighOptions::default();
    let ms = [10.0, 1e2, 1e3, 1e4];
    let study = truncated_eigen_study(&s.weights.omega1, &s.weights.omega2, s.p, &s.mesh, &ms, &opts).unwrap();
    let elapsed = t.elapsed();
    let slack = 10.0 * opts.tol;
    let lam: Vec<f64> = study.rows.iter().map(|r| r.lambda).collect();
    let floor = study.untruncated.lambda_est;
    let monotone = lam.windows(2).all(|l| l[1] <= l[0] * (1.0 + slack));
    let above = lam.iter().all(|l| *l >= floor * (1.0 - slack));
    let rows: Vec<String> = study.rows.iter().map(|r| format!("{:e}:{:.6}", r.m, r.lambda)).collect();
    outcome(
        monotone && above && elapsed < Duration::from_secs(120),
        format!("lambda(m)=[{}] untruncated={floor:.6} time={elapsed:.2?}", rows.join(", ")),
    )
}

fn evolution_config(s: &Setup, lambda: f64, hat: f64) -> EvolutionConfig {
    EvolutionConfig {
        p: s.p,
        lambda,
        dt: s.cfg.time.dt,
        t_final: 1.0,
        dt_min: s.cfg.time.dt_min,
        hardy_constant: Some(hat),
        ..EvolutionConfig::default()
    }
}

fn c3_energy_inequality() -> Outcome {
    let s = setup("distance-pair");
    let hat = lambda_hat(&s);
    let cfg = evolution_config(&s, 0.5 * hat, hat);
    let tr = evolve(&bump(&s), &cfg, &s.weights, &s.mesh).unwrap();
    let lhs = 0.5 * tr.l2sq.last().unwrap() + (1.0 - cfg.lambda / hat) * tr.dissipation;
    let rhs = 0.5 * tr.l2sq[0] * (1.0 + 1e-6);
    outcome(
        tr.status == EvolutionStatus::Global && lhs <= rhs,
        format!("status={} lhs={lhs:.6e} rhs={rhs:.6e} lambda_hat={hat:.6}", tr.status.label()),
    )
}

fn c4_dichotomy() -> Outcome {
    let t = Instant::now();
    let s = setup("distance-pair");
    let hat = lambda_hat(&s);
    let ph = &s.cfg.physics;
    let cfg = evolution_config(&s, 0.0, hat);
    let steps = 12;
    let res = sweep_lambda(&bump(&s), &cfg, &s.weights, &s.mesh, ph.lambda_lo * hat, ph.lambda_hi * hat, steps).unwrap();
    let rel = (res.lambda_crit_est - hat).abs() / hat;
    let below_decay = res.runs.iter().filter(|(l, _)| *l <= res.bracket.0).all(|(_, tr)| tr.decays());
    let above_blow = res
        .runs
        .iter()
        .filter(|(l, _)| *l >= res.bracket.1)
        .all(|(_, tr)| matches!(tr.status, EvolutionStatus::BlowUp { .. }));
    outcome(
        rel <= 0.1 && below_decay && above_blow && res.runs.len() == steps + 2,
        format!(
            "lambda_crit={:.8} lambda_hat={hat:.8} rel={rel:.2e} bracket=[{:.8}, {:.8}] below_decay={below_decay} above_blowup={above_blow} time={:.2?}",
            res.lambda_crit_est,
            res.bracket.0,
            res.bracket.1,
            t.elapsed()
        ),
    )
}

fn c5_monotone_operator() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for name in ["radial-power", "distance-pair"] {
        let s = setup(name);
        for _ in 0..100 {
            let (u, v) = (random_field(&s.mesh, &mut rng), random_field(&s.mesh, &mut rng));
            let au = apply_plap(&u, &s.weights.omega2, s.p, 0.0, &s.mesh).unwrap();
            let av = apply_plap(&v, &s.weights.omega2, s.p, 0.0, &s.mesh).unwrap();
            let da: Vec<f64> = au.values().iter().zip(av.values()).map(|(a, b)| a - b).collect();
            let du: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a - b).collect();
            worst = worst.min(dot(&da, &du));
        }
    }
    outcome(worst >= -1e-12, format!("min <A(u)-A(v), u-v> = {worst:.3e} over 200 pairs"))
}

fn c6_gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let s = setup("distance-pair");
    let mesh = &s.mesh;
    let w2 = &s.weights.omega2;
    let (mut worst, mut worst_h8): (f64, f64) = (0.0, 0.0);
    for p in [2.5, 3.0, 4.0] {
        for _ in 0..20 {
            let (u, v) = (random_field(mesh, &mut rng), random_field(mesh, &mut rng));
            let h = f64::EPSILON.cbrt() * (1.0 + u.max_abs());
            let at = |t: f64| {
                let vals = u.values().iter().zip(v.values()).map(|(a, b)| a + t * b).collect();
                dirichlet_energy(&Field::new(vals, mesh).unwrap(), w2, p, mesh).unwrap()
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let exact = p * dot(apply_plap(&u, w2, p, 0.0, mesh).unwrap().values(), v.values());
            worst = worst.max((fd - exact).abs() / exact.abs());
            // same check at h/8: O(h²) convergence separates truncation from an operator error
            let h8 = h / 8.0;
            let fd8 = (at(h8) - at(-h8)) / (2.0 * h8);
            worst_h8 = worst_h8.max((fd8 - exact).abs() / exact.abs());
        }
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.3e} over 60 (u, v) pairs, p in {{2.5, 3, 4}} (at h/8: {worst_h8:.3e})"))
}

fn c7_dissipation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s = setup("distance-pair");
    let cfg = EvolutionConfig { p: s.p, lambda: 0.0, ..EvolutionConfig::default() };
    let stepper = Stepper::new(&cfg, &s.weights, &s.mesh).unwrap();
    let d = stepper.discretization();
    let (mut worst, mut halvings) = (f64::NEG_INFINITY, 0);
    for _ in 0..1000 {
        let un = random_field(&s.mesh, &mut rng).scaled(rng.gen_range(0.01..10.0));
        let mut dt = 10f64.powf(rng.gen_range(-6.0..0.0));
        let u = loop {
            match stepper.step(un.values(), dt) {
                Ok(u) => break u,
                Err(_) => {
                    dt *= 0.5;
                    halvings += 1;
                }
            }
        };
        let (after, before) = (d.l2sq(&u), d.l2sq(un.values()));
        worst = worst.max((after - before) / before);
    }
    outcome(
        worst <= 0.0,
        format!("max relative L2 change {worst:.3e} over 1000 (u_n, dt) samples ({halvings} dt halvings)"),
    )
}

fn c8_truncation_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dom = Domain::interval(0.0, 1.0);
    let weights = [
        WeightSpec::power_radial(-3.0),
        WeightSpec::distance_boundary(-4.0),
        WeightSpec::distance_boundary(-1.0),
        WeightSpec::Constant { value: 3.0 },
        WeightSpec::tabulated(vec![0.0, 0.3, 1.0], vec![0.0, 50.0, 2.0]).unwrap(),
    ];
    let levels = [1e-3, 0.1, 1.0, 5.0, 1e2, 1e4, 1e8];
    let mut checks = 0usize;
    let mut bad = 0usize;
    let mut check = |ok: bool| {
        checks += 1;
        bad += usize::from(!ok);
    };
    for w in &weights {
        let truncated: Vec<WeightSpec> = levels.iter().map(|m| w.truncate(*m).unwrap()).collect();
        for _ in 0..2000 {
            let x = rng.gen_range(1e-6..1.0 - 1e-6);
            let wx = w.eval(x, &dom).unwrap();
            let vals: Vec<f64> = truncated.iter().map(|t| t.eval(x, &dom).unwrap()).collect();
            for (m, v) in levels.iter().zip(&vals) {
                check(v.abs() <= *m);
                check(wx > *m || *v == wx);
                check(*v <= wx);
            }
            check(vals.windows(2).all(|p| p[0] <= p[1]));
        }
        // the limit m → ∞ recovers ω
        let x = 0.37;
        check((w.truncate(1e300).unwrap().eval(x, &dom).unwrap() - w.eval(x, &dom).unwrap()).abs() == 0.0);
    }
    for _ in 0..20_000 {
        let f = rng.gen_range(-1e3..1e3);
        let (k1, k2) = {
            let a: f64 = rng.gen_range(1e-3..1e3);
            let b: f64 = rng.gen_range(1e-3..1e3);
            (a.min(b), a.max(b))
        };
        let (t1, t2) = (truncate_value(f, k1), truncate_value(f, k2));
        check(t1.abs() <= k1 && t2.abs() <= k2);
        check(f.abs() > k1 || t1 == f);
        check(t1.abs() <= t2.abs() && t2.abs() <= f.abs());
        check(t1 * f >= 0.0);
    }
    outcome(bad == 0, format!("{checks} checks, {bad} violations"))
}

fn c9_hardy_sampling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["radial-power", "distance-pair", "unit-interval-p2"] {
        let s = setup(name);
        let hat = lambda_hat(&s);
        let d = Discretization::new(&s.mesh, &s.weights.omega1, &s.weights.omega2, s.p).unwrap();
        let mut min_ratio = f64::INFINITY;
        for _ in 0..1000 {
            let u = random_field(&s.mesh, &mut rng);
            let q = d.dirichlet(u.values()) / d.mass(u.values());
            min_ratio = min_ratio.min(q / hat);
        }
        pass &= min_ratio >= 1.0 - 1e-6;
        parts.push(format!("{name}: lambda_hat={hat:.6} min quotient/lambda_hat={min_ratio:.4}"));
    }
    outcome(pass, parts.join("; "))
}

fn c10_admissibility_quadrature() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let cases: [(&str, [(&str, f64); 3]); 2] = [
        (
            "radial-power",
            [
                // ∫_0^1 r^6 r^3 dr, ∫_U r^6 r^3 dr, ∫_U r^3 dr with U = [0.1, 0.9]
                ("w2_global", 0.1),
                ("w6_omega1", (0.9f64.powi(10) - 0.1f64.powi(10)) / 10.0),
                ("w6_omega2", (0.9f64.powi(4) - 0.1f64.powi(4)) / 4.0),
            ],
        ),
        (
            "distance-pair",
            [
                // ∫_0^1 d^8, ∫_U d^8, ∫_U d^-4 with d = min(x, 1 - x)
                ("w2_global", 2.0 * 0.5f64.powi(9) / 9.0),
                ("w6_omega1", 2.0 * (0.5f64.powi(9) - 0.1f64.powi(9)) / 9.0),
                ("w6_omega2", 2.0 / 3.0 * (1000.0 - 8.0)),
            ],
        ),
    ];
    for (name, expected) in cases {
        let s = setup(name);
        let ph = &s.cfg.physics;
        let rep = check_admissibility(&s.weights.omega1, &s.weights.omega2, s.p, ph.q, ph.s, &s.mesh).unwrap();
        for (label, exact) in expected {
            let est = rep.estimate(label).unwrap_or(f64::NAN);
            let rel = (est - exact).abs() / exact;
            pass &= rel <= 0.01;
            parts.push(format!("{name}/{label} rel_err={rel:.2e}"));
        }
    }
    outcome(pass, parts.join("; "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("p=2 eigenvalue sanity", c1_p2_eigenvalue),
        ("monotone truncated eigenvalues", c2_monotone_truncated),
        ("energy inequality", c3_energy_inequality),
        ("decay/blow-up dichotomy", c4_dichotomy),
        ("operator monotonicity", c5_monotone_operator),
        ("gradient check", c6_gradient_check),
        ("dissipation at lambda=0", c7_dissipation),
        ("truncation algebra", c8_truncation_algebra),
        ("Hardy sampling", c9_hardy_sampling),
        ("admissibility quadrature", c10_admissibility_quadrature),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!("{} criterion {:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
