//! Built-in weight scenarios.

use hardy_core::mesh::MetricKind;
use hardy_core::{MeshSpec, WeightSpec};

use crate::config::{Command, ExperimentConfig, Initial, Physics, Time, WeightEntry, WeightsSection};

pub const SCENARIO_NAMES: [&str; 3] = ["radial-power", "distance-pair", "unit-interval-p2"];

/// γ of the distance pair `(dist^(γ-p), dist^γ)`.
pub const DISTANCE_GAMMA: f64 = -1.0;

fn pair(omega1: WeightSpec, omega2: WeightSpec) -> WeightsSection {
    WeightsSection { omega1: WeightEntry::Inline(omega1), omega2: WeightEntry::Inline(omega2) }
}

/// `ω₁ = |x|^(-p)`, `ω₂ = 1` on the unit ball of R⁴, p = 3.
pub fn radial_power() -> ExperimentConfig {
    let p = 3.0;
    ExperimentConfig {
        command: Command::EigenStudy,
        name: Some("radial-power".into()),
        weights: pair(WeightSpec::power_radial(-p), WeightSpec::Constant { value: 1.0 }),
        mesh: MeshSpec { a: 0.0, b: 1.0, n: 512, grading: 2.0, metric: MetricKind::Radial, dim: 4, symmetric: false },
        physics: Physics { p, ..Physics::default() },
        time: Time::default(),
        solver: Default::default(),
        io: Default::default(),
        initial: Initial::Bump { amplitude: 1.0 },
    }
}

/// `ω₁ = dist^(γ-p)`, `ω₂ = dist^γ` on (0, 1), γ = -1, p = 3, graded toward
/// both ends.
pub fn distance_pair() -> ExperimentConfig {
    let p = 3.0;
    ExperimentConfig {
        command: Command::Sweep,
        name: Some("distance-pair".into()),
        weights: pair(WeightSpec::distance_boundary(DISTANCE_GAMMA - p), WeightSpec::distance_boundary(DISTANCE_GAMMA)),
        mesh: MeshSpec { a: 0.0, b: 1.0, n: 256, grading: 2.0, metric: MetricKind::Interval, dim: 1, symmetric: true },
        physics: Physics { p, lambda: 0.5, relative_lambda: true, ..Physics::default() },
        time: Time { dt: 1e-3, t_final: 1.0, ..Time::default() },
        solver: Default::default(),
        io: Default::default(),
        initial: Initial::Bump { amplitude: 10.0 },
    }
}

/// Linear control case: unit weights, p = 2, uniform mesh of (0, 1).
pub fn unit_interval_p2() -> ExperimentConfig {
    let one = WeightSpec::Constant { value: 1.0 };
    ExperimentConfig {
        command: Command::Eigen,
        name: Some("unit-interval-p2".into()),
        weights: pair(one.clone(), one),
        mesh: MeshSpec { a: 0.0, b: 1.0, n: 256, grading: 1.0, metric: MetricKind::Interval, dim: 1, symmetric: false },
        physics: Physics { p: 2.0, ..Physics::default() },
        time: Time::default(),
        solver: Default::default(),
        io: Default::default(),
        initial: Initial::Bump { amplitude: 1.0 },
    }
}

pub fn builtin_scenarios() -> Vec<ExperimentConfig> {
    vec![radial_power(), distance_pair(), unit_interval_p2()]
}

pub fn scenario(name: &str) -> Option<ExperimentConfig> {
    builtin_scenarios().into_iter().find(|s| s.name.as_deref() == Some(name))
}
