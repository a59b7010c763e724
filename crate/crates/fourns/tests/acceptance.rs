//! Acceptance suite: one test per quantitative criterion, each printing a
//! single PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them all).

use num_complex::Complex64;
use std::f64::consts::PI;
use std::time::Instant;

use fourns::analysis::ModulationSpectrum;
use fourns::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use fourns::nonlinearity::NonlinearitySpec;
use fourns::propagator::{LinearSymbol, SpaceTimeTrace};
use fourns::solver::{simulate, SolveConfig};
use fourns::spectral::{lp_project, make_grid, BumpProfile, ComplexField, Dyadic, Projection};

fn verdict(idx: u32, name: &str, pass: bool, detail: String, elapsed_s: f64) -> bool {
    println!(
        "criterion {idx:2} [{name}]: {} ({detail}; {elapsed_s:.1} s)",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn run(kind: ExperimentKind, overrides: serde_json::Value) -> fourns::experiments::ResultRecord {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.merge(&overrides).expect("valid overrides");
    run_experiment(&cfg).expect("experiment must run")
}

#[test]
fn criterion_01_hierarchy_n1_reduction() {
    let t = Instant::now();
    let rec = run(ExperimentKind::HierarchyEquivalence, serde_json::json!({}));
    let err = rec.diagnostics["n1_reduction_error"];
    let elapsed = t.elapsed().as_secs_f64();
    let pass = err <= 1e-8 && elapsed < 5.0;
    assert!(
        verdict(1, "hierarchy n=1 reduction", pass, format!("rel err {err:.2e}"), elapsed),
        "n=1 reduction error {err:.3e} (budget 1e-8, {elapsed:.1} s < 5 s)"
    );
}

#[test]
fn criterion_02_hierarchy_n2_equivalence() {
    let t = Instant::now();
    let rec = run(ExperimentKind::HierarchyEquivalence, serde_json::json!({}));
    let disc = rec.diagnostics["n2_discrepancy"];
    let elapsed = t.elapsed().as_secs_f64();
    let pass = disc <= 1e-6 && elapsed < 30.0;
    assert!(
        verdict(2, "hierarchy n=2 equivalence", pass, format!("discrepancy {disc:.2e}"), elapsed),
        "n=2 discrepancy {disc:.3e} (budget 1e-6, {elapsed:.1} s < 30 s)"
    );
}

#[test]
fn criterion_03_norm_inflation_rates() {
    let t0 = Instant::now();
    let mut all = true;
    let mut details = Vec::new();
    for (gamma, s) in [(1u32, -0.25), (2, 0.0), (3, 0.5)] {
        let t = Instant::now();
        let rec = run(
            ExperimentKind::NormInflation,
            serde_json::json!({"gamma": gamma, "s": s}),
        );
        let slope = rec.slope.unwrap();
        let expected = -2.0 * s + gamma as f64 - 1.0;
        let ok = rec.pass && (slope - expected).abs() <= 0.15 && t.elapsed().as_secs_f64() < 120.0;
        details.push(format!("g{gamma}s{s}: {slope:.3} vs {expected}"));
        all &= ok;
    }
    // negative control above the threshold
    for gamma in [1u32, 2, 3] {
        let s = (gamma as f64 - 1.0) / 2.0 + 0.25;
        let rec = run(
            ExperimentKind::NormInflation,
            serde_json::json!({"gamma": gamma, "s": s}),
        );
        let slope = rec.slope.unwrap();
        let ok = rec.pass && slope <= 0.1;
        details.push(format!("ctrl g{gamma}: {slope:.3}"));
        all &= ok;
    }
    let elapsed = t0.elapsed().as_secs_f64();
    assert!(
        verdict(3, "norm inflation rates", all, details.join(", "), elapsed),
        "norm inflation failed: {details:?}"
    );
}

#[test]
fn criterion_04_bilinear_rates() {
    let t = Instant::now();
    let rec = run(ExperimentKind::BilinearSweep, serde_json::json!({}));
    let spread = rec.diagnostics["max_spread_factor"];
    let slope = rec.slope.unwrap();
    let refined = run(ExperimentKind::RefinedBilinearSweep, serde_json::json!({}));
    let slope_minus = refined.diagnostics["slope_sign_minus"];
    let slope_plus = refined.diagnostics["slope_sign_plus"];
    let elapsed = t.elapsed().as_secs_f64();
    let pass = rec.pass && refined.pass && elapsed < 120.0;
    assert!(
        verdict(
            4,
            "bilinear + refined rates",
            pass,
            format!(
                "spread {spread:.2}, slope {slope:.3}, refined slopes {slope_minus:.3}/{slope_plus:.3}"
            ),
            elapsed
        ),
        "bilinear: spread {spread:.2} (<=4), slope {slope:.3} (|.|<=0.1), refined {slope_minus:.3}/{slope_plus:.3}"
    );
}

#[test]
fn criterion_05_linear_estimate_boundedness() {
    let t = Instant::now();
    let rec = run(ExperimentKind::LinearEstimateSweep, serde_json::json!({}));
    let elapsed = t.elapsed().as_secs_f64();
    let detail: Vec<String> = (0..5)
        .map(|k| {
            format!(
                "k{k}: max/ref {:.2}",
                rec.diagnostics[&format!("kind{k}_max_ratio")]
                    / rec.diagnostics[&format!("kind{k}_reference_ratio")]
            )
        })
        .collect();
    let pass = rec.pass && elapsed < 120.0;
    assert!(
        verdict(5, "linear estimate boundedness", pass, detail.join(", "), elapsed),
        "linear estimates: {detail:?}"
    );
}

#[test]
fn criterion_06_scaling_invariance() {
    let t = Instant::now();
    let rec = run(ExperimentKind::ScalingInvariance, serde_json::json!({}));
    let worst = rec.diagnostics["worst_ratio_error"];
    let elapsed = t.elapsed().as_secs_f64();
    assert!(
        verdict(6, "scaling invariance", rec.pass, format!("worst error {worst:.2e}"), elapsed),
        "scaling invariance worst ratio error {worst:.3e} > 1e-6"
    );
}

#[test]
fn criterion_07_conservation() {
    let t = Instant::now();
    let rec = run(ExperimentKind::ConservationDrift, serde_json::json!({}));
    let d0 = rec.diagnostics["integrable_phi0_drift"];
    let d1 = rec.diagnostics["integrable_phi1_drift"];
    let d2 = rec.diagnostics["integrable_phi2_drift"];
    let ctrl = rec.diagnostics["control_over_integrable_phi1"];
    let elapsed = t.elapsed().as_secs_f64();
    let pass = rec.pass && elapsed < 60.0;
    assert!(
        verdict(
            7,
            "integrable conservation",
            pass,
            format!("drifts {d0:.1e}/{d1:.1e}/{d2:.1e}, control x{ctrl:.1e}"),
            elapsed
        ),
        "conservation drifts {d0:.2e}/{d1:.2e}/{d2:.2e} (budgets 1e-8/1e-6/1e-4), control {ctrl:.1}x"
    );
}

#[test]
fn criterion_08_picard_contraction() {
    let t = Instant::now();
    let rec = run(ExperimentKind::PicardConvergence, serde_json::json!({}));
    let ratio = rec.diagnostics["max_contraction_ratio"];
    let mismatch = rec.diagnostics["fixed_point_vs_simulate"];
    let floor = rec.diagnostics["residual_floor_factor"];
    let elapsed = t.elapsed().as_secs_f64();
    let pass = rec.pass && elapsed < 60.0;
    assert!(
        verdict(
            8,
            "Picard contraction",
            pass,
            format!("max ratio {ratio:.2e}, vs stepper {mismatch:.2e}, floor x{floor:.2}"),
            elapsed
        ),
        "picard: ratio {ratio:.3e} (<0.5), stepper mismatch {mismatch:.3e} (<=1e-6), floor factor {floor:.2}"
    );
}

#[test]
fn criterion_09_kernel_self_similarity() {
    let t = Instant::now();
    let rec = run(ExperimentKind::KernelDecay, serde_json::json!({}));
    let slope = rec.slope.unwrap();
    let delta = rec.diagnostics["cutoff_doubling_delta"];
    let collapse = rec.diagnostics["worst_collapse_error"];
    let elapsed = t.elapsed().as_secs_f64();
    assert!(
        verdict(
            9,
            "kernel self-similarity",
            rec.pass,
            format!("slope {slope:.4}, cutoff delta {delta:.1e}, collapse {collapse:.1e}"),
            elapsed
        ),
        "kernel: slope {slope:.4} (-0.25 +- 0.05), cutoff delta {delta:.2e} (<=1e-8)"
    );
}

#[test]
fn criterion_10_numerical_hygiene() {
    let t = Instant::now();
    // 4th-order step halving
    let grid = make_grid(512, 32.0 * PI).unwrap();
    let c = grid.period() / 2.0;
    let u0 = ComplexField::from_fn(grid.clone(), move |x| {
        let xc = x - c;
        Complex64::new(0.5 * (-xc * xc / 25.0).exp(), 0.0)
    });
    let spec = NonlinearitySpec::gauge_power(
        1,
        &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
    .unwrap();
    let run_dt = |dt: f64| {
        let cfg = SolveConfig {
            symbol: LinearSymbol::pure_fourth(),
            spec: spec.clone(),
            t_final: 0.05,
            dt,
            record_every: usize::MAX / 2,
        };
        let tr = simulate(&u0, &cfg).unwrap();
        tr.field(tr.len() - 1).clone()
    };
    let (a, b, cfin) = (run_dt(5e-3), run_dt(2.5e-3), run_dt(1.25e-3));
    let halving = a.sub(&b).unwrap().l2_norm() / b.sub(&cfin).unwrap().l2_norm();

    // FFT round trip and Parseval
    let f = ComplexField::from_fn(grid.clone(), |x| {
        Complex64::new((-(x - 40.0).powi(2) / 9.0).exp(), 0.2 * (0.5 * x).sin())
    });
    let back = ComplexField::from_coefficients(grid.clone(), f.coefficients()).unwrap();
    let roundtrip = back.sub(&f).unwrap().l2_norm() / f.l2_norm();
    let spec_l2 =
        (grid.period() * f.coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
    let parseval = (spec_l2 / f.l2_norm() - 1.0).abs();

    // Littlewood-Paley partition of unity on band-limited data
    // band-limited to |xi| <= 3 on a lattice with Nyquist 16: the telescoped
    // partition low(1) + shells {2, 4} is exactly 1 there
    let band = {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n()];
        for k in -48..=48i64 {
            if k != 0 {
                coeffs[grid.slot_of_mode(k).unwrap()] =
                    Complex64::new(1.0 / (1.0 + (k * k) as f64), 0.3);
            }
        }
        ComplexField::from_coefficients(grid.clone(), coeffs).unwrap()
    };
    let mut sum = lp_project(&band, Projection::Low(Dyadic(0)), BumpProfile::Smooth).unwrap();
    for j in 1..=2 {
        sum = sum
            .add(&lp_project(&band, Projection::Shell(Dyadic(j)), BumpProfile::Smooth).unwrap())
            .unwrap();
    }
    let partition = sum.sub(&band).unwrap().l2_norm() / band.l2_norm();

    // modulation reconstruction on a resolved trace
    let mod_grid = make_grid(128, 8.0 * PI).unwrap();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); mod_grid.n()];
    for k in 2..=6i64 {
        coeffs[mod_grid.slot_of_mode(k).unwrap()] = Complex64::new(0.4, -0.1 * k as f64);
    }
    let seed = ComplexField::from_coefficients(mod_grid.clone(), coeffs).unwrap();
    let trace = SpaceTimeTrace::free(&seed, LinearSymbol::pure_fourth(), 0.0, 1.5, 256).unwrap();
    let spectrum = ModulationSpectrum::of_trace(&trace).unwrap();
    let windowed = spectrum.windowed_trace(&trace).unwrap();
    let amin = Dyadic::ceil_of(spectrum.tau_resolution()).0;
    let amax = 24;
    let mut recon = spectrum
        .project_low(Dyadic(amin), BumpProfile::Smooth, &trace)
        .unwrap();
    for j in amin..=amax {
        let shell = spectrum
            .project(Dyadic(j), BumpProfile::Smooth, &trace)
            .unwrap();
        let fields = (0..recon.len())
            .map(|i| recon.field(i).add(shell.field(i)).unwrap())
            .collect();
        recon = SpaceTimeTrace::new(recon.t0(), recon.dt(), fields).unwrap();
    }
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for j in 0..trace.len() {
        num += recon
            .field(j)
            .sub(windowed.field(j))
            .unwrap()
            .l2_norm()
            .powi(2);
        den += windowed.field(j).l2_norm().powi(2);
    }
    let modulation = (num / den).sqrt();

    let elapsed = t.elapsed().as_secs_f64();
    let pass = (12.0..20.0).contains(&halving)
        && roundtrip <= 1e-10
        && parseval <= 1e-10
        && partition <= 1e-10
        && modulation <= 1e-10;
    assert!(
        verdict(
            10,
            "numerical hygiene",
            pass,
            format!(
                "halving {halving:.1}, roundtrip {roundtrip:.1e}, parseval {parseval:.1e}, \
                 partition {partition:.1e}, modulation {modulation:.1e}"
            ),
            elapsed
        ),
        "hygiene: halving {halving:.2} in [12,20]; roundtrip {roundtrip:.2e}, parseval {parseval:.2e}, \
         partition {partition:.2e}, modulation {modulation:.2e} all <= 1e-10"
    );
}
