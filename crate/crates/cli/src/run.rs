//! The `certify` and `simulate` pipelines shared by the subcommands and the demo.

use std::fs;
use std::path::Path;

use gis_core::certify::{
    check_a2_ratio, check_demidovich, check_relaxed_condition, estimate_contraction_rate, verify_incremental_bound,
    verify_incremental_bound_with_rate, verify_origin_convergence, ContractionCertificate, OriginReport, SamplingPlan,
    SamplingScheme,
};
use gis_core::integrate::{integrate, Trajectory};
use gis_core::{NormKind, SystemSpec};

use crate::config::ScenarioConfig;
use crate::export::{write_component, write_trajectory, Report};
use crate::{CliError, Result};

/// Printed with every certificate, and written into every report.
pub const SCOPE_NOTE: &str = "certificate covers only the sampled domain and time window; \
it is numerical evidence, not a proof over all of state space and all future time";

pub struct CertifyOutcome {
    pub certificate: ContractionCertificate,
    pub report: Report,
    /// Contraction certified and every requested follow-up check held.
    pub passed: bool,
}

pub struct SimulateOutcome {
    pub trajectory: Trajectory,
    pub origin: OriginReport,
    pub report: Report,
}

fn fmt_point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(" "))
}

/// Initial pairs drawn from the domain, reproducible from the sampling seed.
fn initial_pairs(cfg: &ScenarioConfig) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let plan = SamplingPlan::new(2 * cfg.certify.pairs, 1, SamplingScheme::UniformRandom)?.with_seed(cfg.sampling.seed);
    let mut slices = plan.points(&cfg.domain())?;
    let points = slices.pop().map(|s| s.1).unwrap_or_default();
    Ok(points.chunks_exact(2).map(|c| (c[0].clone(), c[1].clone())).collect())
}

pub fn certify(cfg: &ScenarioConfig, sys: &SystemSpec) -> Result<CertifyOutcome> {
    let domain = cfg.domain();
    let cert = estimate_contraction_rate(sys, &domain, &cfg.norm, &cfg.sampling)?;
    let mut report = Report::new();
    let mut passed = cert.is_certified();
    report
        .section("certificate")
        .entry("norm", cfg.norm.label())
        .entry("mu_sup", cert.mu_sup)
        .entry("argmax_x", fmt_point(&cert.argmax.0))
        .entry("argmax_t", cert.argmax.1)
        .entry("alpha0", cert.alpha0_estimate.map_or("none".to_string(), |a| a.to_string()))
        .entry("samples", cert.samples)
        .entry("scheme", cfg.sampling.scheme.label())
        .entry("seed", cfg.sampling.seed)
        .entry("domain_lower", fmt_point(domain.lower().as_slice()))
        .entry("domain_upper", fmt_point(domain.upper().as_slice()))
        .entry("t_window", format!("[{}, {}]", domain.t_lo(), domain.t_hi()))
        .entry("verdict", if passed { "certified_on_domain" } else { "not_certified" })
        .entry("scope", SCOPE_NOTE);

    if let NormKind::Weighted(w) = &cfg.norm {
        let d = check_demidovich(sys, w.weight(), &domain, &cfg.sampling)?;
        report
            .section("demidovich")
            .entry("max_eigenvalue", d.max_eigenvalue)
            .entry("max_weighted_log_norm", d.max_weighted_log_norm)
            .entry("sign_disagreements", d.sign_disagreements)
            .entry("passed", d.passed);
        passed &= d.passed;
    }

    let alpha_fn = cfg.alpha_fn();
    if let Some(alpha) = &alpha_fn {
        let dom = cert.check_rate_dominance(alpha);
        report
            .section("rate_dominance")
            .entry("alpha", cfg.certify.alpha.as_deref().unwrap_or_default())
            .entry("worst_margin", dom.worst_margin)
            .entry("worst_time", dom.worst_time)
            .entry("holds", dom.holds);
        passed &= dom.holds;
    }

    let rate: Option<Box<dyn Fn(f64) -> f64>> = match (&alpha_fn, cert.alpha0_estimate) {
        (Some(a), _) => Some(Box::new(a.clone())),
        (None, Some(a0)) => Some(Box::new(move |_| a0)),
        (None, None) => None,
    };
    if let Some(rate) = &rate {
        let c = &cfg.certify;
        let a2 = check_a2_ratio(sys, rate, c.a2_t_lo, c.a2_t_hi, c.a2_samples, &cfg.a2_settings())?;
        report
            .section("perturbation_ratio")
            .entry("t_range", format!("[{}, {}]", c.a2_t_lo, c.a2_t_hi))
            .entry("initial_ratio", a2.initial_ratio)
            .entry("final_ratio", a2.final_ratio)
            .entry("trend_slope", a2.trend_slope)
            .entry("verdict", a2.verdict.label());
        let relaxed = check_relaxed_condition(rate, cfg.t0, c.a2_t_hi - cfg.t0)?;
        report
            .section("rate_integral")
            .entry("final_horizon", relaxed.horizons.last().copied().unwrap_or(f64::NAN))
            .entry("final_partial_integral", relaxed.partial_integrals.last().copied().unwrap_or(f64::NAN))
            .entry("verdict", relaxed.verdict.label())
            .entry("note", relaxed.note);
    }

    if let (Some(alpha0), true) = (cert.alpha0_estimate, cfg.certify.pairs > 0) {
        let pairs = initial_pairs(cfg)?;
        let (t0, tf) = (domain.t_lo(), domain.t_hi());
        let bound = match &alpha_fn {
            Some(a) => verify_incremental_bound_with_rate(sys, &pairs, t0, tf, a, &cfg.norm, &cfg.integrator)?,
            None => verify_incremental_bound(sys, &pairs, t0, tf, alpha0, &cfg.norm, &cfg.integrator)?,
        };
        report
            .section("incremental_bound")
            .entry("pairs", bound.pair_count)
            .entry("t_window", format!("[{t0}, {tf}]"))
            .entry("worst_violation", bound.worst_violation)
            .entry("tolerance", bound.tolerance)
            .entry("violations", bound.violations)
            .entry("passed", bound.passed);
        passed &= bound.passed;
    }

    report.section("summary").entry("passed", passed);
    Ok(CertifyOutcome { certificate: cert, report, passed })
}

pub fn simulate(cfg: &ScenarioConfig, sys: &SystemSpec, tf: f64) -> Result<SimulateOutcome> {
    let traj = integrate(sys, &cfg.x0, cfg.t0, tf, &cfg.integrator)?;
    let origin = verify_origin_convergence(&traj, &cfg.norm, cfg.certify.tail_fraction, cfg.certify.convergence_tol)?;
    let mut report = Report::new();
    let (t_end, x_end) = traj.last().expect("integrator returns at least the initial state");
    report
        .section("simulation")
        .entry("t0", cfg.t0)
        .entry("tf", t_end)
        .entry("x0", fmt_point(&cfg.x0))
        .entry("x_final", fmt_point(x_end.as_slice()))
        .entry("samples", traj.len())
        .entry("error_budget", traj.error_estimate().map_or("n/a".to_string(), |e| e.to_string()))
        .section("origin_convergence")
        .entry("tail_start", origin.tail_start)
        .entry("tail_max", origin.tail_max)
        .entry("mid_max", origin.mid_max)
        .entry("tol", origin.tol)
        .entry("verdict", origin.verdict.label());
    Ok(SimulateOutcome { trajectory: traj, origin, report })
}

/// Creates `dir` and writes whichever outputs `cfg.output` enables.
pub fn write_outputs(dir: &Path, cfg: &ScenarioConfig, traj: Option<&Trajectory>, report: &Report) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    if let Some(traj) = traj {
        if cfg.output.trajectory {
            write_trajectory(&dir.join("trajectory.csv"), traj)?;
        }
        if cfg.output.plots {
            for i in 0..cfg.dim {
                write_component(&dir.join(format!("x{}.csv", i + 1)), traj, i)?;
            }
        }
    }
    if cfg.output.report {
        report.write(&dir.join("report.csv"))?;
    }
    Ok(())
}
