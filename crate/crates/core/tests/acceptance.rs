//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Built with `harness = false` so the report is printed even when output
//! capture is on.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stochpsi::dynamics::kepler::{kepler_validation, DEFAULT_DT, DEFAULT_STEPS};
use stochpsi::dynamics::{simulate_pointer, simulate_two_apparatus, DynamicsParams};
use stochpsi::experiments::{
    chsh_search, correlation_sweep, repeated_measurement_stats, run_chsh, run_correlation_in_block, scan_conventions,
    sg_p_sweep, with_threads, Innovation, RepeatConfig, SgConfig,
};
use stochpsi::locality::{
    active_locality_grid, gaussian_oracle_chsh, gaussian_sign_oracle, local_deterministic_bound,
    passive_locality_witness, DEFAULT_AUDIT_PAIRS_DEG,
};
use stochpsi::sampling::{Bounded4Law, GaussianConvention};
use stochpsi::stats::THREE_SIGMA_P;
use stochpsi::{ChshAngles, ExperimentConfig, LabStatus, MeasurementAngle, RandomnessConfig, Result};

const N: u64 = 100_000;
const SEARCH_QUADRUPLES: usize = 1000;
const SEARCH_TRIALS: u64 = 20_000;
const SEED: u64 = 7;

type Criterion = (&'static str, fn() -> Result<Verdict>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn deg(d: f64) -> MeasurementAngle {
    MeasurementAngle::from_degrees(d)
}

fn bounded() -> RandomnessConfig {
    RandomnessConfig::bounded(1.0, SEED)
}

fn gaussian() -> RandomnessConfig {
    RandomnessConfig::gaussian(0.25, SEED)
}

fn single(randomness: RandomnessConfig, n: u64) -> ExperimentConfig {
    ExperimentConfig::single(randomness, 0.0, n)
}

fn dual(randomness: RandomnessConfig, n: u64) -> ExperimentConfig {
    ExperimentConfig::dual(randomness, 2.0, n)
}

fn sg_rates(beta: f64) -> Result<(f64, f64, Duration)> {
    let cfg = SgConfig {
        randomness: bounded(),
        beta,
        n_trials: N,
    };
    let start = Instant::now();
    let row = sg_p_sweep(&[0.5], &cfg)?[0];
    Ok((row.dd_rate, row.nd_rate, start.elapsed()))
}

fn calibration() -> Result<Verdict> {
    let cfg = single(gaussian(), N);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let a = deg(rng.random_range(0.0..360.0));
        let b = deg(rng.random_range(0.0..360.0));
        let c = run_correlation_in_block(a, b, &cfg, 100 + k)?;
        worst = worst.max((c.correlation - gaussian_sign_oracle(a, b)).abs() / c.std_error);
    }
    let pinned_cfg = single(bounded(), N);
    let pinned = run_chsh(ChshAngles::standard(), &pinned_cfg)?;
    let scan = scan_conventions(ChshAngles::standard(), &single(bounded(), N))?;
    let listing: Vec<String> = scan.iter().map(|e| format!("{}={:.3}", e.convention, e.s_value)).collect();
    verdict(
        worst <= 3.0,
        format!(
            "worst |C - oracle| = {worst:.2} sigma over 10 pairs; pinned {} gives S = {:.3}; scan [{}]",
            pinned_cfg.convention,
            pinned.s_value,
            listing.join(" ")
        ),
    )
}

fn c1() -> Result<Verdict> {
    let (dd, nd, t) = sg_rates(1.0)?;
    verdict(
        within(dd, 0.12, 0.02) && within(nd, 0.33, 0.02) && t <= Duration::from_secs(10),
        format!("DD = {:.4}, ND = {:.4}, {:.2} s", dd, nd, t.as_secs_f64()),
    )
}

fn c2() -> Result<Verdict> {
    let (dd, nd, _) = sg_rates(2.0)?;
    verdict(dd <= 0.001 && within(nd, 0.68, 0.02), format!("DD = {dd:.5}, ND = {nd:.4}"))
}

fn c3() -> Result<Verdict> {
    let (dd, _, _) = sg_rates(1.5)?;
    verdict(within(dd, 0.026, 0.01), format!("DD = {dd:.4}"))
}

fn c4() -> Result<Verdict> {
    let s = run_correlation_in_block(deg(0.0), deg(0.0), &dual(bounded(), N), 0)?;
    let exact = s.correlation == -1.0 && s.counts.up_up == 0 && s.counts.down_down == 0;
    verdict(
        exact && within(s.sd_rate, 0.042, 0.01) && within(s.nd_rate, 0.92, 0.01),
        format!(
            "C = {} over {} coincidences, SD = {:.4}, ND = {:.4}",
            s.correlation, s.counts.coincidences, s.sd_rate, s.nd_rate
        ),
    )
}

fn c5() -> Result<Verdict> {
    let s = correlation_sweep(deg(0.0), &[90.0], &dual(bounded(), N)).remove(0)?;
    verdict(
        within(s.correlation, 0.80, 0.05) && within(s.sd_rate, 0.096, 0.015) && within(s.nd_rate, 0.77, 0.02),
        format!("C = {:.4}, SD = {:.4}, ND = {:.4}", s.correlation, s.sd_rate, s.nd_rate),
    )
}

/// Largest `|S|` of a search together with its sigma excess over 2.
fn search_max(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let r = chsh_search(SEARCH_QUADRUPLES, cfg)?;
    Ok((r.best.s_value.abs(), r.max_excess_sigmas()))
}

fn c6() -> Result<Verdict> {
    let s = run_chsh(ChshAngles::standard(), &single(bounded(), N))?;
    let (best, excess) = search_max(&single(bounded(), SEARCH_TRIALS))?;
    let primary = within(s.s_value, 2.11, 0.15) && best >= 2.7;
    let fallback = excess > 3.0 && best <= 2.9;
    verdict(
        primary || fallback,
        format!(
            "standard S = {:.3} ± {:.3}; search max |S| = {best:.3} ({excess:.1} sigma above 2){}",
            s.s_value,
            s.std_error,
            if primary { "" } else { "; fallback" }
        ),
    )
}

fn c7() -> Result<Verdict> {
    let s = run_chsh(ChshAngles::standard(), &dual(bounded(), N))?;
    let bounded_ok = within(s.s_value, 3.37, 0.25);

    // Gaussian dual: scan conventions for the target; otherwise fall back to
    // the search property under the closest convention.
    let mut closest: Option<(f64, ExperimentConfig)> = None;
    for gc in [GaussianConvention::PerComponent, GaussianConvention::PerAmplitude] {
        let base = dual(
            RandomnessConfig {
                gaussian_convention: gc,
                ..gaussian()
            },
            N,
        );
        for e in scan_conventions(ChshAngles::standard(), &base)? {
            if closest.is_none_or(|(v, _)| (e.s_value - 3.53).abs() < (v - 3.53).abs()) {
                closest = Some((
                    e.s_value,
                    ExperimentConfig {
                        convention: e.convention,
                        ..base
                    },
                ));
            }
        }
    }
    let (g_value, g_cfg) = closest.expect("scan is not empty");
    let g_direct = within(g_value, 3.53, 0.25);
    let (g_detail, g_ok) = if g_direct {
        (format!("Gaussian S = {g_value:.3}"), true)
    } else {
        let (best, excess) = search_max(&ExperimentConfig {
            n_trials: SEARCH_TRIALS,
            ..g_cfg
        })?;
        (
            format!(
                "Gaussian closest S = {g_value:.3} ({}, {}), fallback search max |S| = {best:.3} ({excess:.1} sigma above 2)",
                g_cfg.randomness.gaussian_convention, g_cfg.convention
            ),
            excess > 3.0 && best <= 4.0,
        )
    };
    verdict(
        bounded_ok && g_ok,
        format!("bounded S = {:.3} ± {:.3}; {g_detail}", s.s_value, s.std_error),
    )
}

fn c8() -> Result<Verdict> {
    let cfg = single(gaussian(), N);
    let s = run_chsh(ChshAngles::standard(), &cfg)?;
    let oracle = gaussian_oracle_chsh(ChshAngles::standard(), &cfg);
    let (best, excess) = search_max(&single(gaussian(), SEARCH_TRIALS))?;
    verdict(
        within(s.s_value, 1.99, 0.1) && excess <= 3.0,
        format!(
            "standard S = {:.3} (oracle {oracle:.3}); search max |S| = {best:.3}, largest excess {excess:.2} sigma",
            s.s_value
        ),
    )
}

fn c9() -> Result<Verdict> {
    let cfg = single(bounded(), N);
    let mut details = Vec::new();
    let mut ok = true;
    for (k, a) in [0.0, 37.0, 200.0].into_iter().enumerate() {
        let s = run_correlation_in_block(deg(a), deg(a), &cfg, k as u64)?;
        ok &= s.correlation == -1.0 && s.counts.coincidences == N;
        details.push(format!("a = b = {a}: C = {} over {}", s.correlation, s.counts.coincidences));
    }
    verdict(ok, details.join("; "))
}

fn c10() -> Result<Verdict> {
    let start = Instant::now();
    let r = kepler_validation(DEFAULT_DT, DEFAULT_STEPS)?;
    let t = start.elapsed();
    verdict(
        r.max_energy_drift < 1e-5 && r.max_angular_momentum_drift < 1e-5 && t <= Duration::from_secs(5),
        format!(
            "energy drift {:.2e}, angular momentum drift {:.2e}, {:.2} s",
            r.max_energy_drift,
            r.max_angular_momentum_drift,
            t.as_secs_f64()
        ),
    )
}

fn c11() -> Result<Verdict> {
    let params = DynamicsParams::default();
    let duration = params.n_steps as f64 * params.dt;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut sign_ok, mut labels_ok) = (0, 0);
    let runs = 100;
    for k in 0..runs {
        // alternate the sign of f and jitter its size around 0.003
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let f = sign * 0.003 * rng.random_range(0.5..1.5);
        let single = simulate_pointer(&params, f)?;
        let expected = if f > 0.0 { LabStatus::Up } else { LabStatus::Down };
        if single.settled_x.signum() == -f.signum() && single.label == expected {
            sign_ok += 1;
        }
        let two = simulate_two_apparatus(&params, f, rng.random_range(0.0..duration / 2.0))?;
        if two.labels.0 == two.labels.1 && two.labels.0.is_resolved() {
            labels_ok += 1;
        }
    }
    verdict(
        sign_ok == runs && labels_ok == runs,
        format!("sign(X) = -sign(f) in {sign_ok}/{runs}; equal two-apparatus labels in {labels_ok}/{runs}"),
    )
}

fn c12() -> Result<Verdict> {
    let bound = local_deterministic_bound(2)?;
    let cfg = single(bounded(), N);
    let grid = active_locality_grid(deg(0.0), &DEFAULT_AUDIT_PAIRS_DEG, &cfg)?;
    let rejected: Vec<String> = grid
        .entries
        .iter()
        .filter(|e| e.report.reject)
        .map(|e| format!("({},{}) p={:.1e}", e.b1_deg, e.b2_deg, e.report.p_value))
        .collect();
    let witness = passive_locality_witness(deg(0.0), deg(0.0), deg(90.0), &cfg, 1000)?;

    // Same grid under rotation-invariant random parts, for comparison.
    let uniform = active_locality_grid(
        deg(0.0),
        &DEFAULT_AUDIT_PAIRS_DEG,
        &single(
            RandomnessConfig {
                bounded4: Bounded4Law::UniformSphere,
                ..bounded()
            },
            N,
        ),
    )?;
    let gauss = active_locality_grid(deg(0.0), &DEFAULT_AUDIT_PAIRS_DEG, &single(gaussian(), N))?;

    verdict(
        bound == 2.0 && grid.passed() && witness.is_some(),
        format!(
            "bound = {bound}; audit grid (bounded recipe) {} [{}]; uniform-sphere {}, Gaussian {}; witness at draw {:?}",
            if grid.passed() { "passed" } else { "rejected" },
            rejected.join(" "),
            if uniform.passed() { "passed" } else { "rejected" },
            if gauss.passed() { "passed" } else { "rejected" },
            witness.map(|w| w.draw_index)
        ),
    )
}

fn c13() -> Result<Verdict> {
    let redraw = repeated_measurement_stats(&RepeatConfig {
        randomness: bounded(),
        n_trials: N,
        ..Default::default()
    })?;
    let up = redraw.z_up_given_y_up.unwrap_or(f64::NAN);
    let down = redraw.z_up_given_y_down.unwrap_or(f64::NAN);
    let redraw_ok = within(redraw.z_up_rate, 0.5, 3.0 * redraw.z_marginal_se)
        && within(up - down, 0.0, 3.0 * redraw.conditional_diff_se);

    let reuse = |randomness| {
        repeated_measurement_stats(&RepeatConfig {
            randomness,
            n_trials: N,
            innovation: Innovation::Reuse,
            ..Default::default()
        })
    };
    let reuse_gauss = reuse(gaussian())?;
    let reuse_bounded = reuse(bounded())?;
    let gauss_ok = reuse_gauss.binned_test.p_value > THREE_SIGMA_P && reuse_gauss.sign_test.p_value > THREE_SIGMA_P;
    let bounded_ok = reuse_bounded.binned_test.p_value < THREE_SIGMA_P;
    verdict(
        redraw_ok && gauss_ok && bounded_ok,
        format!(
            "redraw z-up = {:.4} (±{:.4}), given y up {up:.4} vs down {down:.4}; reuse Gaussian binned p = {:.3}, sign p = {:.3}; reuse bounded binned p = {:.1e}",
            redraw.z_up_rate,
            3.0 * redraw.z_marginal_se,
            reuse_gauss.binned_test.p_value,
            reuse_gauss.sign_test.p_value,
            reuse_bounded.binned_test.p_value
        ),
    )
}

fn c14() -> Result<Verdict> {
    fn everything() -> Result<String> {
        let sg = sg_p_sweep(
            &[0.1, 0.5, 0.9],
            &SgConfig {
                n_trials: 20_000,
                ..Default::default()
            },
        )?;
        let sweep: Vec<_> = correlation_sweep(deg(10.0), &[0.0, 45.0, 90.0], &dual(bounded(), 20_000))
            .into_iter()
            .collect::<Result<_>>()?;
        let chsh = run_chsh(ChshAngles::standard(), &single(gaussian(), 20_000))?;
        let search = chsh_search(10, &single(bounded(), 5_000))?;
        let repeat = repeated_measurement_stats(&RepeatConfig {
            n_trials: 20_000,
            innovation: Innovation::Reuse,
            ..Default::default()
        })?;
        let audit = active_locality_grid(deg(0.0), &DEFAULT_AUDIT_PAIRS_DEG[..2], &single(bounded(), 5_000))?;
        let pointer = simulate_two_apparatus(&DynamicsParams::default(), 0.003, 20.0)?;
        // Debug formatting of f64 round-trips, so equal strings mean equal bits.
        Ok(format!("{sg:?}{sweep:?}{chsh:?}{search:?}{repeat:?}{audit:?}{pointer:?}"))
    }
    let one = with_threads(1, everything)?;
    let four = with_threads(4, everything)?;
    let again = with_threads(4, everything)?;
    verdict(
        one == four && four == again,
        format!("{} bytes of summary output compared across 1, 4, 4 threads", one.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 15] = [
        ("calibration: Gaussian single apparatus matches the sign oracle", calibration),
        ("1: SG rates at beta = 1", c1),
        ("2: SG rates at beta = 2", c2),
        ("3: SG double detections at beta = 1.5", c3),
        ("4: dual apparatus at zero angle difference", c4),
        ("5: dual apparatus at 90 degrees", c5),
        ("6: CHSH single bounded", c6),
        ("7: CHSH dual bounded and dual Gaussian", c7),
        ("8: CHSH single Gaussian never violates", c8),
        ("9: exact anticorrelation at a = b", c9),
        ("10: Kepler energy and angular momentum", c10),
        ("11: pointer dynamics", c11),
        ("12: locality audit", c12),
        ("13: repeated measurement", c13),
        ("14: determinism across thread counts", c14),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {name} :: {detail} [{:.1} s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
