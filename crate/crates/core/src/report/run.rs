//! Executes a validated scenario and collects its checks.

use std::sync::Arc;

use nalgebra::DVector;

use super::config::{ScenarioConfig, ScenarioKind, StateSpec, SystemSpec};
use super::correspondence::{correspondence_demo, CorrespondenceParams};
use super::{Provenance, RunReport};
use crate::classical::chart::{
    conjugacy_residual, jacobian_residual, round_trip_residual, sample_probes, CanonicalChart, HarmonicChart,
};
use crate::classical::density::{pushforward_density, PhaseSpaceDensity};
use crate::classical::koopman::{born_spectrum_classical, marginal_oracle, ClassicalQuadrature};
use crate::classical::montecarlo::{monte_carlo_oracle, McConfig};
use crate::error::{Error, Result};
use crate::levelset::maps::{LevelSetSystem, ScalarObservableMap};
use crate::levelset::mode::conjugate_time_check;
use crate::levelset::{born_spectrum_levelset, LevelSetMethod};
use crate::numerics::bracket::DEFAULT_STEP;
use crate::numerics::eigen::hermitian_eigendecomposition;
use crate::numerics::{BracketMethod, KernelSpec, C64};
use crate::quantum::observable::random;
use crate::quantum::{
    born_spectrum_quantum, build_superoperators, direct_born_oracle, eigendensity_basis, expand_density,
    joint_spectrum, Observable, QuantumDensity, QuantumTolerances,
};
use crate::quantum::superop::spectrum_law_residual;

pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_LAMBDA_MAX: i64 = 8;
pub const DEFAULT_PROBES: usize = 1000;
pub const DEFAULT_LEVELSET_POINTS: usize = 600;
pub const CORRESPONDENCE_LAMBDA_MAX: i64 = 32;
pub const DEFAULT_SWEEP: [f64; 4] = [5.0, 10.0, 20.0, 40.0];
/// Slack when asking a sweep of relative gaps to be non-increasing.
pub const MONOTONE_NOISE_FLOOR: f64 = 1e-9;
/// Offset used to keep conjugate-time probes clear of the singular set.
const PROBE_CLEARANCE: f64 = 0.25;

const RICHARDSON: BracketMethod = BracketMethod::Richardson { step: DEFAULT_STEP };

/// Default tolerances per claim.
pub mod defaults {
    pub const QUANTUM_BORN: f64 = 1e-12;
    pub const SUPEROPERATOR: f64 = 1e-10;
    pub const GRAM: f64 = 1e-12;
    pub const CLASSICAL_BORN: f64 = 1e-10;
    pub const CLASSICAL_TV: f64 = 0.01;
    pub const LEVELSET_TV: f64 = 0.02;
    pub const ROUND_TRIP: f64 = 1e-12;
    pub const CHART: f64 = 1e-8;
    pub const CONJUGATE_TIME: f64 = 1e-8;
    pub const CORRESPONDENCE: f64 = 0.05;
}

/// Runs `cfg` and returns its report. Module errors come back wrapped with
/// the scenario name.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let out = match cfg.scenario {
        ScenarioKind::Quantum => run_quantum(cfg),
        ScenarioKind::Classical => run_classical(cfg),
        ScenarioKind::Levelset => run_levelset(cfg),
        ScenarioKind::Correspondence => run_correspondence(cfg),
        ScenarioKind::Selftest => crate::selftest::run_selftest(cfg),
    };
    out.map_err(|e| match e {
        e @ Error::Scenario { .. } => e,
        e => e.in_scenario(format!("{} scenario `{}`", cfg.scenario, cfg.name())),
    })
}

fn run_quantum(cfg: &ScenarioConfig) -> Result<RunReport> {
    let SystemSpec::Matrices { observables: sources } = cfg.system()? else {
        unreachable!("validated")
    };
    let tol = QuantumTolerances::default();
    let hbar = cfg.hbar();
    let observables: Vec<Observable> = sources
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let path = format!("system.observables[{i}]");
            Observable::new(s.label(&format!("K_{}", i + 1)), s.load(&cfg.base_dir, &path)?, tol.hermiticity)
        })
        .collect::<Result<_>>()?;
    let joint = joint_spectrum(&observables, &tol)?;
    let d = joint.dim();
    let rho = match cfg.state()? {
        StateSpec::Pure { vector } => {
            if vector.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: vector.len() });
            }
            QuantumDensity::pure(&DVector::from_iterator(d, vector.iter().map(|z| C64::new(z[0], z[1]))))?
        }
        StateSpec::Mixed { matrix } => QuantumDensity::new(matrix.load(&cfg.base_dir, "state.matrix")?, &tol)?,
        StateSpec::Random { mixed } => {
            let mut rng = random::rng(cfg.seed);
            if *mixed {
                random::mixed_density(d, &mut rng)
            } else {
                random::pure_density(d, &mut rng)
            }
        }
        _ => unreachable!("validated"),
    };
    let basis = eigendensity_basis(&joint, hbar)?;
    let eigen = born_spectrum_quantum(&rho, &basis, false)?;
    let direct = direct_born_oracle(&rho, &joint)?;

    let t = &cfg.tolerances;
    let mut report = RunReport::new(Provenance::from_config(cfg));
    report.check(
        "born_equivalence",
        eigen.max_abs_difference(&direct)?,
        t.born_equivalence.unwrap_or(defaults::QUANTUM_BORN),
        "direct <K'|rho|K'> from the joint eigenvectors",
    );
    report.check(
        "probability_total",
        (eigen.total() - 1.0).abs(),
        t.born_equivalence.unwrap_or(defaults::QUANTUM_BORN),
        "Tr rho = 1",
    );
    let mut law: f64 = 0.0;
    for obs in &observables {
        let kappa: Vec<f64> = hermitian_eigendecomposition(&obs.matrix, tol.hermiticity)?.values.iter().copied().collect();
        let ops = build_superoperators(obs, hbar, tol.hermiticity)?;
        law = law.max(spectrum_law_residual(&ops, &kappa, hbar, tol.hermiticity)?);
    }
    let super_tol = t.superoperator.unwrap_or(defaults::SUPEROPERATOR);
    report.check(
        "superoperator_spectrum",
        law,
        super_tol,
        "eigenvalues (k_m + k_n)/2 and (k_m - k_n)/hbar of each observable",
    );
    report.check(
        "eigendensity_relations",
        basis.superoperator_residual(&observables),
        super_tol,
        "anticommutator and commutator applied to |m><n| directly",
    );
    let gram_tol = t.gram.unwrap_or(defaults::GRAM);
    report.check("eigendensity_gram", basis.gram_residual(), gram_tol, "Tr[rho_a rho_b^H] = delta_ab");
    let table = expand_density(&rho, &basis)?;
    report.check(
        "parseval",
        (table.squared_norm() - rho.purity()).abs(),
        gram_tol,
        "Tr rho^2",
    );
    report.metric("dimension", d as f64);
    report.metric("purity", rho.purity());
    report.spectra = vec![eigen, direct];
    Ok(report)
}

fn harmonic_chart(system: &SystemSpec) -> Result<HarmonicChart> {
    match system {
        SystemSpec::Harmonic { oscillators } => {
            HarmonicChart::new(&oscillators.iter().map(|o| (o.mass, o.omega)).collect::<Vec<_>>())
        }
        _ => Err(Error::schema("system.kind", "expected `harmonic`")),
    }
}

fn phase_space_state(state: &StateSpec, chart: Option<&HarmonicChart>) -> Result<PhaseSpaceDensity> {
    match (state, chart) {
        (StateSpec::Thermal { temperature }, Some(c)) => PhaseSpaceDensity::thermal(c, *temperature),
        (StateSpec::Gaussian { p0, q0, sigma_p, sigma_q }, _) => PhaseSpaceDensity::gaussian(p0, q0, sigma_p, sigma_q),
        _ => Err(Error::schema("state.kind", "not a phase-space density for this system")),
    }
}

/// The central part of a support box: `center +- fraction * half-width`.
fn core_box(support: &[(f64, f64)], fraction: f64) -> Vec<(f64, f64)> {
    support
        .iter()
        .map(|&(lo, hi)| {
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo) * fraction;
            (c - h, c + h)
        })
        .collect()
}

fn run_classical(cfg: &ScenarioConfig) -> Result<RunReport> {
    let chart = harmonic_chart(cfg.system()?)?;
    let rho_c = phase_space_state(cfg.state()?, Some(&chart))?;
    let rho = pushforward_density(&rho_c, Arc::new(chart.clone()))?;
    let grid = cfg.grid_spec()?;
    let lambda_max = cfg.lambda_max.unwrap_or(DEFAULT_LAMBDA_MAX);
    let quad = ClassicalQuadrature::for_lambda_max(lambda_max);
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);

    let koopman = born_spectrum_classical(&rho, &grid, &quad)?;
    let marginal = marginal_oracle(&rho, &grid, &quad)?;
    let map = |p: &[f64], q: &[f64]| chart.forward(p, q).0;
    let mc = monte_carlo_oracle(&rho_c, &map, &grid, &McConfig { samples, seed: cfg.seed })?;

    let t = &cfg.tolerances;
    let mut prov = Provenance::from_config(cfg);
    prov.lambda_max = Some(lambda_max);
    prov.samples = Some(samples);
    let mut report = RunReport::new(prov);
    report.check(
        "born_identity",
        koopman.max_density_difference(&marginal)?,
        t.born_equivalence.unwrap_or(defaults::CLASSICAL_BORN),
        "angle marginal of the action-angle density, per bin",
    );
    report.check(
        "monte_carlo_tv",
        koopman.total_variation(&mc.spectrum)?,
        t.total_variation.unwrap_or(defaults::CLASSICAL_TV),
        format!("histogram of {samples} seeded samples"),
    );

    // chart validity on the central part of the density's support
    let probes_wanted = cfg.probes.unwrap_or(DEFAULT_PROBES);
    let c = chart.clone();
    let probes = sample_probes(&core_box(&rho_c.support, 0.3), probes_wanted, cfg.seed, move |p, q| {
        c.forward(p, q).0.iter().all(|&k| k > 0.05)
    });
    report.check(
        "chart_round_trip",
        round_trip_residual(&chart, &probes),
        t.round_trip.unwrap_or(defaults::ROUND_TRIP),
        "inverse(forward(p, q)) = (p, q)",
    );
    let chart_tol = t.chart.unwrap_or(defaults::CHART);
    report.check("chart_jacobian", jacobian_residual(&chart, &probes, RICHARDSON), chart_tol, "det J = 1");
    report.check(
        "chart_brackets",
        conjugacy_residual(&chart, &probes, RICHARDSON),
        chart_tol,
        "{Q_i, K_j} = delta_ij, {Q_i, Q_j} = {K_i, K_j} = 0",
    );
    report.metric("grid_mass", koopman.total());
    report.metric("monte_carlo_out_of_range", mc.out_of_range as f64 / samples as f64);
    report.metric("monte_carlo_empty_bins", mc.empty_bins.len() as f64);
    report.spectra = vec![koopman, marginal, mc.spectrum];
    Ok(report)
}

fn levelset_system(system: &SystemSpec) -> Result<(LevelSetSystem, Option<HarmonicChart>)> {
    match system {
        SystemSpec::FreeParticle { mass, margin } => Ok((LevelSetSystem::free_particle(*mass, *margin)?, None)),
        SystemSpec::Quartic { mass, coupling, margin } => {
            Ok((LevelSetSystem::quartic(*mass, *coupling, *margin)?, None))
        }
        SystemSpec::Harmonic { .. } => {
            let chart = harmonic_chart(system)?;
            let o = chart.modes[0];
            Ok((LevelSetSystem::harmonic(o.mass, o.omega, 0.05)?, Some(chart)))
        }
        SystemSpec::Matrices { .. } => Err(Error::schema("system.kind", "expected a phase-space system")),
    }
}

/// Whether `tau` is defined on a cross of half-width `r` around the point,
/// so finite-difference stencils stay inside its domain.
fn clear_of_singularities(tau: &ScalarObservableMap, p: &[f64], q: &[f64], r: f64) -> bool {
    if !tau.in_domain(p, q) {
        return false;
    }
    for i in 0..p.len() {
        for s in [-r, r] {
            let mut pp = p.to_vec();
            pp[i] += s;
            let mut qq = q.to_vec();
            qq[i] += s;
            if !tau.in_domain(&pp, q) || !tau.in_domain(p, &qq) {
                return false;
            }
        }
    }
    true
}

/// Up to `count` probes in `bounds` where the conjugate time is regular.
pub fn conjugate_time_probes(
    tau: &ScalarObservableMap,
    bounds: &[(f64, f64)],
    count: usize,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    // rejection sampling can starve on a tiny domain; cap the attempts
    let attempts = 50 * count;
    let t = tau.clone();
    let pool = sample_probes(bounds, attempts, seed, |_, _| true);
    pool.into_iter()
        .filter(|(p, q)| clear_of_singularities(&t, p, q, PROBE_CLEARANCE))
        .take(count)
        .collect()
}

fn run_levelset(cfg: &ScenarioConfig) -> Result<RunReport> {
    let (system, chart) = levelset_system(cfg.system()?)?;
    let rho_c = phase_space_state(cfg.state()?, chart.as_ref())?;
    let grid = cfg.grid_spec()?;
    let kernel = match cfg.kernel {
        Some(k) => k,
        None => KernelSpec::bin(grid.axes[0].width())?,
    };
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let points = cfg.quadrature_points.unwrap_or(DEFAULT_LEVELSET_POINTS);
    let quad = born_spectrum_levelset(
        &rho_c,
        &system.observable,
        &grid,
        kernel,
        LevelSetMethod::Quadrature { points },
    )?;
    let mc = born_spectrum_levelset(
        &rho_c,
        &system.observable,
        &grid,
        kernel,
        LevelSetMethod::MonteCarlo { samples, seed: cfg.seed },
    )?;

    let t = &cfg.tolerances;
    let mut prov = Provenance::from_config(cfg);
    prov.samples = Some(samples);
    let mut report = RunReport::new(prov);
    report.check(
        "monte_carlo_tv",
        quad.spectrum.total_variation(&mc.spectrum)?,
        t.total_variation.unwrap_or(defaults::LEVELSET_TV),
        format!("histogram of {samples} seeded samples of K_N"),
    );
    let probes = conjugate_time_probes(
        &system.tau,
        &core_box(&rho_c.support, 0.3),
        cfg.probes.unwrap_or(DEFAULT_PROBES),
        cfg.seed,
    );
    if probes.is_empty() {
        return Err(Error::SingularSupport(format!(
            "no regular probes for the conjugate time of `{}` inside the density support",
            system.name
        )));
    }
    report.check(
        "conjugate_time",
        conjugate_time_check(&system.tau, &system.observable, &probes, RICHARDSON)?,
        t.conjugate_time.unwrap_or(defaults::CONJUGATE_TIME),
        format!("{{tau, K_N}} = 1 on {} probes ({})", probes.len(), system.tau.region),
    );
    report.metric("xi", quad.xi);
    report.metric("outside_mass", quad.outside_mass);
    report.metric("monte_carlo_outside_mass", mc.outside_mass);
    report.spectra = vec![quad.spectrum, mc.spectrum];
    Ok(report)
}

fn run_correspondence(cfg: &ScenarioConfig) -> Result<RunReport> {
    let SystemSpec::Harmonic { oscillators } = cfg.system()? else {
        unreachable!("validated")
    };
    let StateSpec::Coherent { n_bar } = cfg.state()? else {
        unreachable!("validated")
    };
    let lambda_max = cfg.lambda_max.unwrap_or(CORRESPONDENCE_LAMBDA_MAX);
    let params = |n| CorrespondenceParams {
        oscillator: oscillators[0],
        hbar: cfg.hbar(),
        n_bar: n,
        lambda_max,
    };
    let tol = cfg.tolerances.correspondence.unwrap_or(defaults::CORRESPONDENCE);
    let mut prov = Provenance::from_config(cfg);
    prov.lambda_max = Some(lambda_max);
    let mut report = RunReport::new(prov);

    let main = correspondence_demo(&params(*n_bar))?;
    report.check(
        "relative_mean_difference",
        main.relative_mean_difference(),
        tol,
        "both means equal hbar w (n_bar + 1/2) analytically",
    );
    report.check(
        "quantum_mean",
        (main.quantum_mean - main.analytic_mean).abs() / main.analytic_mean,
        tol,
        "hbar w (n_bar + 1/2)",
    );
    report.check(
        "classical_mean",
        (main.classical_mean - main.analytic_mean).abs() / main.analytic_mean,
        tol,
        "hbar w (n_bar + 1/2)",
    );
    report.check(
        "quantum_poisson",
        main.poisson_residual,
        defaults::QUANTUM_BORN,
        "Poisson weights e^{-n_bar} n_bar^n / n! of the truncated coherent state",
    );
    report.metric("n_bar", *n_bar);
    report.metric("fock_cutoff", main.cutoff as f64);
    report.metric("analytic_mean", main.analytic_mean);
    report.metric("quantum_mean", main.quantum_mean);
    report.metric("classical_mean", main.classical_mean);
    report.metric("quantum_variance", main.quantum_variance);
    report.metric("classical_variance", main.classical_variance);
    if let Some(v) = main.relative_variance_difference() {
        report.metric("relative_variance_difference", v);
    }

    let vacuum = correspondence_demo(&params(0.0))?;
    report.check(
        "vacuum_peak_bin",
        vacuum.quantum_peak().max(vacuum.classical_peak()) as f64,
        0.0,
        "ground state concentrates in the lowest energy bin",
    );

    let sweep = cfg.sweep.clone().unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
    let mut gaps = Vec::with_capacity(sweep.len());
    for &n in &sweep {
        let o = correspondence_demo(&params(n))?;
        let gap = o.relative_mean_difference();
        report.metric(format!("sweep.{n}.relative_mean_difference"), gap);
        gaps.push(gap);
    }
    let growth = gaps.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    report.check(
        "mean_gap_monotone",
        growth,
        MONOTONE_NOISE_FLOOR,
        "relative mean gap non-increasing along the sweep",
    );
    report.spectra = vec![main.quantum, main.classical];
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn parse(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_json_str(text, Path::new(".")).unwrap()
    }

    #[test]
    fn qubit_scenario_passes() {
        let cfg = parse(
            r#"{"scenario": "quantum", "name": "qubit",
                "system": {"kind": "matrices", "observables": [{"label": "Z", "diagonal": [1.0, -1.0]}]},
                "state": {"kind": "pure", "vector": [[0.6, 0.0], [0.0, 0.8]]}}"#,
        );
        let r = run_scenario(&cfg).unwrap();
        assert!(r.pass(), "{:?}", r.checks);
        // ascending eigenvalues: -1 first
        assert!((r.spectra[0].rows[0].probability - 0.64).abs() < 1e-15);
        assert_eq!(r.spectrum_files(), ["qubit_eigendensity.csv", "qubit_direct.csv"]);
    }

    #[test]
    fn non_commuting_pair_is_an_error() {
        let cfg = parse(
            r#"{"scenario": "quantum",
                "system": {"kind": "matrices", "observables": [
                    {"label": "X", "dim": 2, "matrix": [[0,0],[1,0],[1,0],[0,0]]},
                    {"label": "Z", "diagonal": [1.0, -1.0]}]},
                "state": {"kind": "random"}}"#,
        );
        let err = run_scenario(&cfg).unwrap_err();
        assert!(matches!(err.root(), Error::NonCommuting { .. }), "{err}");
        assert!(err.to_string().contains("quantum scenario"));
    }

    #[test]
    fn state_dimension_is_checked() {
        let cfg = parse(
            r#"{"scenario": "quantum",
                "system": {"kind": "matrices", "observables": [{"diagonal": [1.0, 2.0, 3.0]}]},
                "state": {"kind": "pure", "vector": [[1, 0], [0, 0]]}}"#,
        );
        assert!(matches!(run_scenario(&cfg).unwrap_err().root(), Error::DimensionMismatch { .. }));
    }

    #[test]
    fn small_levelset_scenario() {
        let cfg = parse(
            r#"{"scenario": "levelset", "seed": 3, "samples": 200000, "quadrature_points": 300, "probes": 50,
                "system": {"kind": "free_particle", "mass": 1.0},
                "state": {"kind": "gaussian", "p0": [0.0], "q0": [0.0], "sigma_p": [1.0], "sigma_q": [1.0]},
                "grid": [{"min": 0.0, "max": 16.0, "bins": 32}]}"#,
        );
        let r = run_scenario(&cfg).unwrap();
        assert!(r.pass(), "{:?}", r.checks);
        assert_eq!(r.spectra.len(), 2);
    }

    #[test]
    fn harmonic_probes_avoid_the_cut() {
        let s = LevelSetSystem::harmonic(1.0, 1.0, 0.05).unwrap();
        let probes = conjugate_time_probes(&s.tau, &[(-3.0, 3.0), (-3.0, 3.0)], 200, 1);
        assert_eq!(probes.len(), 200);
        assert!(conjugate_time_check(&s.tau, &s.observable, &probes, RICHARDSON).unwrap() <= 1e-8);
    }
}
