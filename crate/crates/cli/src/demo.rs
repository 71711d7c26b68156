//! The built-in planar example, run end to end.

use std::path::Path;

use gis_core::certify::OriginVerdict;

use crate::config::{parse_config, ScenarioConfig};
use crate::export::Report;
use crate::run::{certify, simulate, write_outputs};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoVariant {
    /// `δ(t) = (5 sin² t, t)`: solutions tend to the origin.
    Fig1,
    /// `δ(t) = (5 sin² t, 4t³)`: solutions tend to `(0, 4)`.
    Fig2,
}

impl DemoVariant {
    pub fn label(self) -> &'static str {
        match self {
            DemoVariant::Fig1 => "fig1",
            DemoVariant::Fig2 => "fig2",
        }
    }

    fn second_perturbation(self) -> &'static str {
        match self {
            DemoVariant::Fig1 => "t",
            DemoVariant::Fig2 => "4*t^3",
        }
    }
}

/// The scenario file the demo runs.
pub fn demo_config_text(variant: DemoVariant, seed: u64) -> String {
    format!(
        "\
[system]
builtin = example1
b = 5
phi = -6 - t^3

[perturbation]
d1 = 5*sin(t)^2
d2 = {}

[initial]
x0 = -2, 5

[norm]
kind = l2

[domain]
lower = -10
upper = 10
t_lo = 0
t_hi = 2

[sampling]
seed = {seed}

[certify]
alpha = 0.5 + t^3
a2_t_lo = 1
a2_t_hi = 1000
a2_samples = 400
pairs = 8

[integrator]
tf = 20
",
        variant.second_perturbation()
    )
}

pub fn demo_config(variant: DemoVariant, seed: u64) -> ScenarioConfig {
    parse_config(&demo_config_text(variant, seed)).expect("built-in demo config is valid")
}

pub struct DemoOutcome {
    pub report: Report,
    pub passed: bool,
}

/// Certifies, simulates to `t = 20`, checks the variant's expected limit and
/// writes `trajectory.csv`, `x1.csv`, `x2.csv` and `report.csv` into `out_dir`.
/// The outputs depend only on `variant` and `seed`.
pub fn run_demo_example1(variant: DemoVariant, out_dir: &Path, seed: u64) -> Result<DemoOutcome> {
    let cfg = demo_config(variant, seed);
    let sys = cfg.build_system();
    let cert = certify(&cfg, &sys)?;
    let sim = simulate(&cfg, &sys, cfg.tf)?;

    let mut expected = Report::new();
    expected.section("expected_behaviour").entry("variant", variant.label());
    let behaved = match variant {
        DemoVariant::Fig1 => {
            let (_, x) = sim.trajectory.last().expect("nonempty trajectory");
            let sup = x.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            expected.entry("sup_norm_at_tf", sup).entry("origin_verdict", sim.origin.verdict.label());
            sup < 0.01 && sim.origin.verdict == OriginVerdict::Converged
        }
        DemoVariant::Fig2 => {
            let x2 = sim.trajectory.interpolate(10.0)?[1];
            expected.entry("x2_at_10", x2).entry("target", 4);
            (x2 - 4.0).abs() < 0.05
        }
    };
    expected.entry("holds", behaved);

    let mut report = cert.report;
    report.append(sim.report).append(expected);
    write_outputs(out_dir, &cfg, Some(&sim.trajectory), &report)?;
    Ok(DemoOutcome { report, passed: cert.passed && behaved })
}
