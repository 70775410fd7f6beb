//! The acceptance suite as data: each criterion is a function returning
//! check records, shared by `bornspace selftest` and the `acceptance` test
//! target.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::classical::chart::{
    angle_delta, angle_from_generating_function, conjugacy_residual, jacobian_residual, round_trip_residual,
    sample_probes, CanonicalChart, HarmonicChart,
};
use crate::classical::density::{pushforward_density, PhaseSpaceDensity};
use crate::classical::koopman::{
    born_spectrum_classical, completeness_residual, koopman_mode, marginal_oracle, orthonormality_residual,
    weak_eigen_residual, ClassicalQuadrature, KoopmanMode,
};
use crate::classical::montecarlo::{monte_carlo_oracle, McConfig};
use crate::error::Result;
use crate::levelset::maps::LevelSetSystem;
use crate::levelset::mode::conjugate_time_check;
use crate::levelset::{born_spectrum_levelset, LevelSetMethod};
use crate::numerics::bracket::DEFAULT_STEP;
use crate::numerics::eigen::hermitian_eigendecomposition;
use crate::numerics::sampling::with_workers;
use crate::numerics::{BracketMethod, GridSpec, KernelSpec, C64};
use crate::quantum::born::merge_over_leading_labels;
use crate::quantum::observable::random;
use crate::quantum::superop::spectrum_law_residual;
use crate::quantum::{
    born_spectrum_quantum, build_superoperators, direct_born_oracle, eigendensity_basis, expand_density,
    joint_spectrum, Observable, QuantumTolerances,
};
use crate::report::run::{conjugate_time_probes, defaults, MONOTONE_NOISE_FLOOR};
use crate::report::{
    correspondence_demo, render_report, run_scenario, CheckRecord, CorrespondenceParams, Provenance, RunReport,
    ScenarioConfig,
};

const RICHARDSON: BracketMethod = BracketMethod::Richardson { step: DEFAULT_STEP };

pub const STATES_PER_KIND: usize = 100;
pub const MC_SAMPLES: usize = 1_000_000;

pub struct Criterion {
    pub name: &'static str,
    pub run: fn(u64) -> Result<Vec<CheckRecord>>,
}

/// Every criterion, in report order.
pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { name: "quantum_born_equivalence", run: quantum_born_equivalence },
        Criterion { name: "superoperator_spectrum", run: superoperator_spectrum },
        Criterion { name: "eigendensity_gram_parseval", run: eigendensity_gram_parseval },
        Criterion { name: "classical_born_identity", run: classical_born_identity },
        Criterion { name: "monte_carlo_cross_check", run: monte_carlo_cross_check },
        Criterion { name: "koopman_orthonormality", run: koopman_orthonormality },
        Criterion { name: "chart_validity", run: chart_validity },
        Criterion { name: "conjugate_time", run: conjugate_time },
        Criterion { name: "correspondence", run: correspondence },
        Criterion { name: "determinism", run: determinism },
    ]
}

/// Runs every criterion with the config's seed.
pub fn run_selftest(cfg: &ScenarioConfig) -> Result<RunReport> {
    let mut report = RunReport::new(Provenance::from_config(cfg));
    for c in criteria() {
        report.checks.extend((c.run)(cfg.seed)?);
    }
    Ok(report)
}

/// `U diag(values) U^H`.
fn rotated(u: &DMatrix<C64>, values: &[f64]) -> DMatrix<C64> {
    let d = DMatrix::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let m = u * d * u.adjoint();
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Observable sets for dimension `d`: one generic observable, and a
/// commuting pair whose first member is degenerate.
fn observable_sets(d: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Result<Vec<Vec<Observable>>> {
    let tol = QuantumTolerances::default();
    let single = vec![Observable::new("K_1", random::hermitian(d, rng), tol.hermiticity)?];
    let u = random::unitary(d, rng);
    let a: Vec<f64> = (0..d).map(|i| (i / 2) as f64).collect();
    let b: Vec<f64> = (0..d).map(|i| 0.5 + i as f64 * 0.75).collect();
    let pair = vec![
        Observable::new("K_1", rotated(&u, &a), tol.hermiticity)?,
        Observable::new("K_2", rotated(&u, &b), tol.hermiticity)?,
    ];
    Ok(vec![single, pair])
}

pub fn quantum_born_equivalence(seed: u64) -> Result<Vec<CheckRecord>> {
    let tol = QuantumTolerances::default();
    let mut rng = random::rng(seed);
    let mut worst: f64 = 0.0;
    let mut worst_merged: f64 = 0.0;
    let mut states = 0usize;
    for d in 2..=8 {
        for set in observable_sets(d, &mut rng)? {
            let joint = joint_spectrum(&set, &tol)?;
            let basis = eigendensity_basis(&joint, 1.0)?;
            for i in 0..2 * STATES_PER_KIND {
                let rho = if i < STATES_PER_KIND {
                    random::pure_density(d, &mut rng)
                } else {
                    random::mixed_density(d, &mut rng)
                };
                let direct = direct_born_oracle(&rho, &joint)?;
                let eigen = born_spectrum_quantum(&rho, &basis, false)?;
                worst = worst.max(eigen.max_abs_difference(&direct)?);
                let merged = born_spectrum_quantum(&rho, &basis, true)?;
                worst_merged = worst_merged.max(merged.max_abs_difference(&merge_over_leading_labels(direct, &joint))?);
                states += 1;
            }
        }
    }
    Ok(vec![
        CheckRecord::at_most(
            "quantum_born_equivalence",
            worst,
            defaults::QUANTUM_BORN,
            format!("<K'|rho|K'> on {states} seeded pure and mixed states, d = 2..8"),
        ),
        CheckRecord::at_most(
            "quantum_born_equivalence_summed",
            worst_merged,
            defaults::QUANTUM_BORN,
            "direct probabilities summed over degenerate leading labels",
        ),
    ])
}

pub fn superoperator_spectrum(seed: u64) -> Result<Vec<CheckRecord>> {
    let mut rng = random::rng(seed ^ 0x5u64);
    let mut worst: f64 = 0.0;
    for d in 1..=8 {
        let k = Observable::new("K", random::hermitian(d, &mut rng), 1e-12)?;
        let kappa: Vec<f64> = hermitian_eigendecomposition(&k.matrix, 1e-12)?.values.iter().copied().collect();
        for hbar in [0.5, 1.0, 2.0] {
            let ops = build_superoperators(&k, hbar, 1e-12)?;
            worst = worst.max(spectrum_law_residual(&ops, &kappa, hbar, 1e-10)?);
        }
    }
    Ok(vec![CheckRecord::at_most(
        "superoperator_spectrum",
        worst,
        defaults::SUPEROPERATOR,
        "(k_m + k_n)/2 and (k_m - k_n)/hbar, d <= 8, hbar in {0.5, 1, 2}",
    )])
}

pub fn eigendensity_gram_parseval(seed: u64) -> Result<Vec<CheckRecord>> {
    let tol = QuantumTolerances::default();
    let mut rng = random::rng(seed ^ 0x6u64);
    let (mut gram, mut parseval): (f64, f64) = (0.0, 0.0);
    for d in 2..=8 {
        for set in observable_sets(d, &mut rng)? {
            let basis = eigendensity_basis(&joint_spectrum(&set, &tol)?, 1.0)?;
            gram = gram.max(basis.gram_residual());
            for mixed in [false, true] {
                let rho = if mixed {
                    random::mixed_density(d, &mut rng)
                } else {
                    random::pure_density(d, &mut rng)
                };
                let table = expand_density(&rho, &basis)?;
                parseval = parseval.max((table.squared_norm() - rho.purity()).abs());
            }
        }
    }
    Ok(vec![
        CheckRecord::at_most("eigendensity_gram", gram, defaults::GRAM, "Tr[rho_a rho_b^H] = delta_ab"),
        CheckRecord::at_most("parseval", parseval, defaults::GRAM, "Tr rho^2"),
    ])
}

/// Thermal state of a unit oscillator and a displaced Gaussian on a
/// different oscillator, each with a 64-bin action grid.
fn classical_cases() -> Result<Vec<(&'static str, HarmonicChart, PhaseSpaceDensity, GridSpec)>> {
    let unit = HarmonicChart::new(&[(1.0, 1.0)])?;
    let thermal = PhaseSpaceDensity::thermal(&unit, 1.0)?;
    let other = HarmonicChart::new(&[(1.3, 0.8)])?;
    let displaced = PhaseSpaceDensity::gaussian(&[0.9], &[-0.6], &[0.7], &[0.8])?;
    Ok(vec![
        ("thermal", unit, thermal, GridSpec::uniform_bins(0.0, 16.0, 64)?),
        ("displaced", other, displaced, GridSpec::uniform_bins(0.0, 12.0, 64)?),
    ])
}

pub fn classical_born_identity(_seed: u64) -> Result<Vec<CheckRecord>> {
    let quad = ClassicalQuadrature::for_lambda_max(8);
    let mut out = Vec::new();
    for (name, chart, rho_c, grid) in classical_cases()? {
        let rho = pushforward_density(&rho_c, Arc::new(chart))?;
        let koopman = born_spectrum_classical(&rho, &grid, &quad)?;
        let marginal = marginal_oracle(&rho, &grid, &quad)?;
        out.push(CheckRecord::at_most(
            format!("classical_born_identity_{name}"),
            koopman.max_density_difference(&marginal)?,
            defaults::CLASSICAL_BORN,
            format!("angle marginal, 64 bins, {} angle points", quad.q_points),
        ));
    }
    Ok(out)
}

pub fn monte_carlo_cross_check(seed: u64) -> Result<Vec<CheckRecord>> {
    let quad = ClassicalQuadrature::for_lambda_max(8);
    let mut out = Vec::new();
    for (name, chart, rho_c, grid) in classical_cases()? {
        let rho = pushforward_density(&rho_c, Arc::new(chart.clone()))?;
        let koopman = born_spectrum_classical(&rho, &grid, &quad)?;
        let map = |p: &[f64], q: &[f64]| chart.forward(p, q).0;
        let mc = monte_carlo_oracle(&rho_c, &map, &grid, &McConfig { samples: MC_SAMPLES, seed })?;
        out.push(CheckRecord::at_most(
            format!("classical_monte_carlo_tv_{name}"),
            koopman.total_variation(&mc.spectrum)?,
            defaults::CLASSICAL_TV,
            format!("histogram of {MC_SAMPLES} seeded samples"),
        ));
    }
    let standard = PhaseSpaceDensity::gaussian(&[0.0], &[0.0], &[1.0], &[1.0])?;
    let narrow = PhaseSpaceDensity::gaussian(&[0.0], &[0.0], &[1.0], &[0.5])?;
    let cases = [
        ("free_particle", LevelSetSystem::free_particle(1.0, 0.1)?, standard),
        ("quartic", LevelSetSystem::quartic(1.0, 1.0, 0.1)?, narrow),
    ];
    let grid = GridSpec::uniform_bins(0.0, 16.0, 64)?;
    let kernel = KernelSpec::bin(grid.axes[0].width())?;
    for (name, system, rho_c) in cases {
        let quad = born_spectrum_levelset(
            &rho_c,
            &system.observable,
            &grid,
            kernel,
            LevelSetMethod::Quadrature { points: 600 },
        )?;
        let mc = born_spectrum_levelset(
            &rho_c,
            &system.observable,
            &grid,
            kernel,
            LevelSetMethod::MonteCarlo { samples: MC_SAMPLES, seed },
        )?;
        out.push(CheckRecord::at_most(
            format!("levelset_monte_carlo_tv_{name}"),
            quad.spectrum.total_variation(&mc.spectrum)?,
            defaults::LEVELSET_TV,
            format!("histogram of {MC_SAMPLES} seeded samples of K_N"),
        ));
    }
    Ok(out)
}

pub fn koopman_orthonormality(_seed: u64) -> Result<Vec<CheckRecord>> {
    let grid = GridSpec::uniform_bins(0.0, 8.0, 32)?;
    let mut modes = Vec::new();
    for cell in 0..grid.len() {
        for l in -4..=4 {
            modes.push(KoopmanMode::for_cell(&grid, cell, &[l])?);
        }
    }
    let gram = orthonormality_residual(&modes, &ClassicalQuadrature::for_lambda_max(4))?;
    let completeness = completeness_residual(&grid, 4)?;

    // smooth periodic test function reaching |Lambda| = 8
    let f = |k: &[f64], q: &[f64]| {
        let g = (-(k[0] - 1.0).powi(2)).exp();
        (0..=8).map(|n| (n as f64 * (q[0] - 0.3 * n as f64)).cos() / (1.0 + n as f64)).sum::<f64>() * g
    };
    let quad = ClassicalQuadrature::for_lambda_max(8);
    let mut weak: f64 = 0.0;
    for l in -8..=8 {
        for kernel in [KernelSpec::bin(0.1)?, KernelSpec::gaussian(0.05)?] {
            for k_prime in [0.6, 1.2] {
                let mode = koopman_mode(&[k_prime], &[l], kernel, &[(0.0, 5.0)])?;
                weak = weak.max(weak_eigen_residual(&mode, 0, &f, &quad, RICHARDSON)?);
            }
        }
    }
    Ok(vec![
        CheckRecord::at_most("koopman_gram", gram, 1e-10, "Kronecker delta, |Lambda| <= 4, 32 bins"),
        CheckRecord::at_most(
            "koopman_completeness",
            completeness,
            1e-10,
            "identity on the collocation grid, |Lambda| <= 4, 32 bins",
        ),
        CheckRecord::at_most(
            "koopman_weak_relation",
            weak,
            1e-6,
            "int R i{K, f} = -Lambda int R f for |Lambda| <= 8, bin and Gaussian kernels",
        ),
    ])
}

pub fn chart_validity(seed: u64) -> Result<Vec<CheckRecord>> {
    let charts = [HarmonicChart::new(&[(1.3, 0.7)])?, HarmonicChart::new(&[(1.0, 1.0), (0.6, 2.5)])?];
    let (mut trip, mut det, mut bracket): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for chart in &charts {
        let n = chart.dim();
        let c = chart.clone();
        let probes = sample_probes(&vec![(-3.0, 3.0); 2 * n], 1000, seed, move |p, q| {
            c.forward(p, q).0.iter().all(|&k| k > 0.05)
        });
        trip = trip.max(round_trip_residual(chart, &probes));
        det = det.max(jacobian_residual(chart, &probes, RICHARDSON));
        bracket = bracket.max(conjugacy_residual(chart, &probes, RICHARDSON));
    }

    // generating-function angle on the p > 0 branch, clear of turning points
    let chart = &charts[0];
    let c = chart.clone();
    let probes = sample_probes(&[(0.0, 3.0), (-3.0, 3.0)], 1000, seed ^ 0x7, move |p, q| {
        let (k, a) = c.forward(p, q);
        k[0] > 0.05 && a[0].cos() > 0.3
    });
    let mut angle: f64 = 0.0;
    for (p, q) in &probes {
        let (k, want) = chart.forward(p, q);
        let got = angle_from_generating_function(chart, q, &k, RICHARDSON)?;
        angle = angle.max(angle_delta(got[0], want[0]).abs());
    }
    Ok(vec![
        CheckRecord::at_most("chart_round_trip", trip, defaults::ROUND_TRIP, "identity on 1000 probes"),
        CheckRecord::at_most("chart_jacobian", det, defaults::CHART, "det J = 1 on 1000 probes"),
        CheckRecord::at_most("chart_brackets", bracket, defaults::CHART, "{Q_i, K_j} = delta_ij on 1000 probes"),
        CheckRecord::at_most(
            "generating_function_angle",
            angle,
            1e-6,
            "closed-form angle atan2(m w q, p) on 1000 probes",
        ),
    ])
}

pub fn conjugate_time(seed: u64) -> Result<Vec<CheckRecord>> {
    let systems = [
        (LevelSetSystem::free_particle(1.0, 0.1)?, [(0.3, 3.0), (-2.0, 2.0)]),
        (LevelSetSystem::quartic(1.0, 1.0, 0.1)?, [(0.3, 3.0), (-2.0, 2.0)]),
        (LevelSetSystem::harmonic(1.3, 0.7, 0.05)?, [(-3.0, 3.0), (-3.0, 3.0)]),
    ];
    let mut out = Vec::new();
    for (system, bounds) in systems {
        let probes = conjugate_time_probes(&system.tau, &bounds, 1000, seed);
        let r = conjugate_time_check(&system.tau, &system.observable, &probes, RICHARDSON)?;
        out.push(CheckRecord::at_most(
            format!("conjugate_time_{}", system.name),
            r,
            defaults::CONJUGATE_TIME,
            format!("{{tau, K_N}} = 1 on {} probes ({})", probes.len(), system.tau.region),
        ));
    }
    Ok(out)
}

pub fn correspondence(_seed: u64) -> Result<Vec<CheckRecord>> {
    let params = |n_bar| CorrespondenceParams {
        oscillator: crate::classical::chart::Oscillator { mass: 1.0, omega: 1.0 },
        hbar: 1.0,
        n_bar,
        lambda_max: 32,
    };
    let main = correspondence_demo(&params(20.0))?;
    let vacuum = correspondence_demo(&params(0.0))?;
    let mut gaps = Vec::new();
    for n in [5.0, 10.0, 20.0, 40.0] {
        gaps.push(correspondence_demo(&params(n))?.relative_mean_difference());
    }
    let growth = gaps.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok(vec![
        CheckRecord::at_most(
            "correspondence_mean",
            main.relative_mean_difference(),
            defaults::CORRESPONDENCE,
            "coherent state n_bar = 20 vs Wigner Gaussian; both means hbar w (n_bar + 1/2)",
        ),
        CheckRecord::at_most(
            "correspondence_vacuum_peak",
            vacuum.quantum_peak().max(vacuum.classical_peak()) as f64,
            0.0,
            "both spectra peak in the lowest bin",
        ),
        CheckRecord::at_most(
            "correspondence_monotone",
            growth,
            MONOTONE_NOISE_FLOOR,
            "relative mean gap non-increasing over n_bar in {5, 10, 20, 40}",
        ),
    ])
}

const DETERMINISM_SCENARIOS: [&str; 2] = [
    r#"{"scenario": "classical", "name": "det_classical", "samples": 50000, "probes": 100,
        "system": {"kind": "harmonic", "oscillators": [{"mass": 1.0, "omega": 1.0}]},
        "state": {"kind": "thermal", "temperature": 1.0},
        "grid": [{"min": 0.0, "max": 16.0, "bins": 64}]}"#,
    r#"{"scenario": "levelset", "name": "det_levelset", "samples": 50000, "quadrature_points": 200, "probes": 50,
        "system": {"kind": "quartic", "mass": 1.0, "coupling": 1.0},
        "state": {"kind": "gaussian", "p0": [0.0], "q0": [0.0], "sigma_p": [1.0], "sigma_q": [0.5]},
        "grid": [{"min": 0.0, "max": 16.0, "bins": 64}]}"#,
];

/// Renders each determinism scenario under 1 and 4 workers and twice under
/// the default pool; counts files whose bytes differ.
pub fn determinism(seed: u64) -> Result<Vec<CheckRecord>> {
    let mut mismatches = 0usize;
    let mut files = 0usize;
    for text in DETERMINISM_SCENARIOS {
        let mut cfg = ScenarioConfig::from_json_str(text, std::path::Path::new("."))?;
        cfg.seed = seed;
        let render = || -> Result<Vec<_>> { render_report(&run_scenario(&cfg)?) };
        let reference = render()?;
        let runs = [render()?, with_workers(1, render)??, with_workers(4, render)??];
        files += reference.len();
        for run in &runs {
            mismatches += reference.iter().zip(run).filter(|(a, b)| a != b).count();
            mismatches += reference.len().abs_diff(run.len());
        }
    }
    Ok(vec![CheckRecord::at_most(
        "determinism",
        mismatches as f64,
        0.0,
        format!("byte comparison of {files} rendered files across reruns and 1 or 4 workers"),
    )])
}
