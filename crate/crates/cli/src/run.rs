//! Resolves a subcommand's configuration and runs it.

use serde_json::{json, Value};
use stochpsi::config::{parse_angle_list, ConfigError, KeyValues, NumberList, Resolver};
use stochpsi::dynamics::{
    kepler_validation_with, simulate_pointer, simulate_two_apparatus, DynamicsParams, Trajectory,
};
use stochpsi::experiments::{
    chsh_search, run_chsh, run_correlation_in_block, run_correlation_with_trials, scan_conventions, sg_p_sweep, sg_trials, Apparatus,
    ChshAngles, ChshConvention, ExperimentConfig, Innovation, RepeatConfig, SgConfig, TrialRecord, ZCentering,
    DEFAULT_TRIALS, STANDARD_ANGLES_DEG,
};
use stochpsi::detection::DdPrecedence;
use stochpsi::forces::pointer_random_force;
use stochpsi::locality::{
    active_locality_grid, corrupted_locality_control, local_deterministic_bound, passive_locality_witness,
    DEFAULT_AUDIT_PAIRS_DEG,
};
use stochpsi::sampling::{Bounded4Law, GaussianConvention, RandomnessConfig, RandomnessMode};
use stochpsi::{CorrelationStats, MeasurementAngle};

use crate::output::{opt, Table};
use crate::CliError;

/// Result of one run, ready to be written.
pub struct Run {
    pub config: KeyValues,
    pub summary: Value,
    pub table: Table,
    pub trials: Option<Table>,
}

pub const SUBCOMMANDS: [&str; 9] = [
    "sg",
    "eprb-single",
    "eprb-dual",
    "chsh",
    "chsh-search",
    "repeat",
    "dynamics",
    "kepler-check",
    "audit",
];

pub fn execute(subcommand: &str, source: KeyValues, want_trials: bool) -> Result<Run, CliError> {
    let mut r = Resolver::new(source);
    let mut run = match subcommand {
        "sg" => sg(&mut r, want_trials)?,
        "eprb-single" => sweep(&mut r, Apparatus::Single, want_trials)?,
        "eprb-dual" => sweep(&mut r, Apparatus::Dual, want_trials)?,
        "chsh" => chsh(&mut r)?,
        "chsh-search" => search(&mut r)?,
        "repeat" => repeat(&mut r)?,
        "dynamics" => dynamics(&mut r)?,
        "kepler-check" => kepler(&mut r)?,
        "audit" => audit(&mut r)?,
        other => return Err(CliError::Usage(format!("unknown subcommand `{other}`"))),
    };
    if want_trials && run.trials.is_none() {
        return Err(CliError::Usage(format!("--dump-trials is not available for `{subcommand}`")));
    }
    run.config = r.finish()?;
    Ok(run)
}

fn randomness(r: &mut Resolver) -> Result<RandomnessConfig, ConfigError> {
    let d = RandomnessConfig::default();
    Ok(RandomnessConfig {
        mode: r.get::<RandomnessMode>("mode", d.mode)?,
        s: r.get("s", d.s)?,
        variance: r.get("variance", d.variance)?,
        gaussian_convention: r.get::<GaussianConvention>("gaussian-convention", d.gaussian_convention)?,
        bounded4: r.get::<Bounded4Law>("sampler4", d.bounded4)?,
        master_seed: r.get("seed", d.master_seed)?,
    })
}

fn experiment(r: &mut Resolver, apparatus: Apparatus) -> Result<ExperimentConfig, ConfigError> {
    r.get::<DdPrecedence>("dd-precedence", DdPrecedence::default())?;
    let default_beta = match apparatus {
        Apparatus::Single => 0.0,
        Apparatus::Dual => 2.0,
    };
    Ok(ExperimentConfig {
        apparatus,
        randomness: randomness(r)?,
        beta: r.get("beta", default_beta)?,
        n_trials: r.get("n-trials", DEFAULT_TRIALS)?,
        convention: r.get::<ChshConvention>("convention", ChshConvention::default())?,
        ..Default::default()
    })
}

fn default_grid(step: f64, end: f64) -> NumberList {
    let n = (end / step).round() as usize;
    NumberList((0..=n).map(|k| k as f64 * step).collect())
}

fn sg(r: &mut Resolver, want_trials: bool) -> Result<Run, CliError> {
    let p_grid = r.get("p", default_grid(0.05, 1.0))?;
    let cfg = SgConfig {
        randomness: randomness(r)?,
        beta: r.get("beta", 1.0)?,
        n_trials: r.get("n-trials", DEFAULT_TRIALS)?,
    };
    let rows = sg_p_sweep(&p_grid.0, &cfg)?;
    let mut table = Table::new(&[
        "p",
        "n_trials",
        "up",
        "down",
        "dd",
        "nd",
        "up_rate_conditional",
        "dd_rate",
        "nd_rate",
        "unresolved",
    ]);
    for row in &rows {
        table.push(vec![
            row.p.to_string(),
            row.n_trials.to_string(),
            row.up.to_string(),
            row.down.to_string(),
            row.dd.to_string(),
            row.nd.to_string(),
            opt(row.up_rate_conditional),
            row.dd_rate.to_string(),
            row.nd_rate.to_string(),
            row.unresolved().to_string(),
        ]);
    }
    let trials = if want_trials {
        let mut t = Table::new(&["p", "trial_index", "f1", "f2", "status"]);
        for (k, &p) in p_grid.0.iter().enumerate() {
            for rec in sg_trials(p, &cfg, k as u64)? {
                t.push(vec![
                    p.to_string(),
                    rec.trial_index.to_string(),
                    rec.f1.to_string(),
                    rec.f2.to_string(),
                    rec.status.to_string(),
                ]);
            }
        }
        Some(t)
    } else {
        None
    };
    Ok(Run {
        config: KeyValues::new(),
        summary: json!({ "rows": rows }),
        table,
        trials,
    })
}

const STATS_COLUMNS: [&str; 16] = [
    "a_deg",
    "b_deg",
    "n_trials",
    "count_uu",
    "count_ud",
    "count_du",
    "count_dd",
    "coincidences",
    "single_detections",
    "double_detections",
    "no_detections",
    "coincidence_rate",
    "sd_rate",
    "dd_rate",
    "nd_rate",
    "correlation",
];

fn stats_cells(s: &CorrelationStats) -> Vec<String> {
    let c = &s.counts;
    vec![
        s.a_deg.to_string(),
        s.b_deg.to_string(),
        s.n_trials.to_string(),
        c.up_up.to_string(),
        c.up_down.to_string(),
        c.down_up.to_string(),
        c.down_down.to_string(),
        c.coincidences.to_string(),
        c.single_detections.to_string(),
        c.double_detections.to_string(),
        c.no_detections.to_string(),
        s.coincidence_rate.to_string(),
        s.sd_rate.to_string(),
        s.dd_rate.to_string(),
        s.nd_rate.to_string(),
        s.correlation.to_string(),
    ]
}

fn columns(prefix: &[&'static str], suffix: &[&'static str]) -> Vec<&'static str> {
    prefix.iter().chain(&STATS_COLUMNS).chain(suffix).copied().collect()
}

fn trial_cells(t: &TrialRecord) -> Vec<String> {
    let mut cells = vec![t.trial_index.to_string()];
    cells.extend(t.forces.iter().map(|f| if f.is_nan() { String::new() } else { f.to_string() }));
    cells.extend([t.alice.to_string(), t.bob.to_string(), t.class.to_string()]);
    cells
}

fn sweep(r: &mut Resolver, apparatus: Apparatus, want_trials: bool) -> Result<Run, CliError> {
    let a = MeasurementAngle::from_degrees(r.get("a", 0.0)?);
    let deltas = r.get("deltas", default_grid(10.0, 180.0))?;
    let cfg = experiment(r, apparatus)?;
    let mut table = Table::new(&columns(&["delta_deg"], &["std_error"]));
    let mut trials = want_trials.then(|| {
        Table::new(&[
            "delta_deg",
            "trial_index",
            "f1",
            "f2",
            "f3",
            "f4",
            "alice",
            "bob",
            "class",
        ])
    });
    let mut all = Vec::new();
    for (k, &d) in deltas.0.iter().enumerate() {
        let b = a.rotated(-d.to_radians());
        let (stats, records) = if want_trials {
            run_correlation_with_trials(a, b, &cfg, k as u64)?
        } else {
            (run_correlation_in_block(a, b, &cfg, k as u64)?, Vec::new())
        };
        let mut row = vec![d.to_string()];
        row.extend(stats_cells(&stats));
        row.push(stats.std_error.to_string());
        table.push(row);
        if let Some(t) = trials.as_mut() {
            for rec in &records {
                let mut cells = vec![d.to_string()];
                cells.extend(trial_cells(rec));
                t.push(cells);
            }
        }
        all.push(json!({ "delta_deg": d, "stats": stats }));
    }
    Ok(Run {
        config: KeyValues::new(),
        summary: json!({ "apparatus": apparatus.to_string(), "sweep": all }),
        table,
        trials,
    })
}

const TERMS: [&str; 4] = ["ab", "a'b", "ab'", "a'b'"];

fn chsh(r: &mut Resolver) -> Result<Run, CliError> {
    let apparatus = r.get::<Apparatus>("apparatus", Apparatus::Single)?;
    let angles_text = r.get("angles", NumberList(STANDARD_ANGLES_DEG.to_vec()))?;
    let angles = ChshAngles::from_degrees(parse_angle_list(&angles_text.to_string())?);
    let scan = r.get("scan-conventions", false)?;
    let cfg = experiment(r, apparatus)?;
    let res = run_chsh(angles, &cfg)?;
    let mut table = Table::new(&columns(&["term"], &["std_error"]));
    for (term, stats) in TERMS.iter().zip(&res.correlations) {
        let mut row = vec![term.to_string()];
        row.extend(stats_cells(stats));
        row.push(stats.std_error.to_string());
        table.push(row);
    }
    let mut s_row = vec![String::new(); table.width()];
    s_row[0] = "S".into();
    let n = s_row.len();
    s_row[n - 2] = res.s_value.to_string();
    s_row[n - 1] = res.std_error.to_string();
    table.push(s_row);
    let scan_json = if scan {
        let entries = scan_conventions(angles, &cfg)?;
        Value::Array(
            entries
                .iter()
                .map(|e| json!({ "convention": e.convention.to_string(), "s_value": e.s_value, "std_error": e.std_error }))
                .collect(),
        )
    } else {
        Value::Null
    };
    Ok(Run {
        config: KeyValues::new(),
        summary: json!({
            "s_value": res.s_value,
            "std_error": res.std_error,
            "angles_deg": res.angles.degrees(),
            "effective_angles_deg": res.effective.degrees(),
            "convention": cfg.convention.to_string(),
            "terms": TERMS,
            "correlations": res.correlations,
            "convention_scan": scan_json,
        }),
        table,
        trials: None,
    })
}

fn search(r: &mut Resolver) -> Result<Run, CliError> {
    let apparatus = r.get::<Apparatus>("apparatus", Apparatus::Single)?;
    let quadruples = r.get("quadruples", 1000usize)?;
    let cfg = experiment(r, apparatus)?;
    let res = chsh_search(quadruples, &cfg)?;
    let mut table = Table::new(&["index", "a_deg", "a_prime_deg", "b_deg", "b_prime_deg", "s_value", "std_error"]);
    for q in &res.quadruples {
        let mut row = vec![q.index.to_string()];
        row.extend(q.angles_deg.iter().map(f64::to_string));
        row.push(opt(q.s_value));
        row.push(opt(q.std_error));
        table.push(row);
    }
    Ok(Run {
        config: KeyValues::new(),
        summary: json!({
            "best_index": res.best_index,
            "best_s_value": res.best.s_value,
            "best_std_error": res.best.std_error,
            "best_angles_deg": res.best.angles.degrees(),
            "max_excess_sigmas": res.max_excess_sigmas(),
            "convention": cfg.convention.to_string(),
            "quadruples": res.quadruples,
        }),
        table,
        trials: None,
    })
}

fn repeat(r: &mut Resolver) -> Result<Run, CliError> {
    let d = RepeatConfig::default();
    let cfg = RepeatConfig {
        innovation: r.get::<Innovation>("innovation", d.innovation)?,
        z_centering: r.get::<ZCentering>("z-centering", d.z_centering)?,
        bins: r.get("bins", d.bins)?,
        n_trials: r.get("n-trials", d.n_trials)?,
        randomness: randomness(r)?,
    };
    let st = stochpsi::experiments::repeated_measurement_stats(&cfg)?;
    let mut table = Table::new(&[
        "innovation",
        "z_centering",
        "n_trials",
        "yup_zup",
        "yup_zdown",
        "ydown_zup",
        "ydown_zdown",
        "z_up_rate",
        "z_up_given_y_up",
        "z_up_given_y_down",
        "z_marginal_se",
        "sign_chi2",
        "sign_p",
        "binned_chi2",
        "binned_dof",
        "binned_p",
        "expectation_covariance",
    ]);
    table.push(vec![
        cfg.innovation.to_string(),
        cfg.z_centering.to_string(),
        st.n_trials.to_string(),
        st.table[0][0].to_string(),
        st.table[0][1].to_string(),
        st.table[1][0].to_string(),
        st.table[1][1].to_string(),
        st.z_up_rate.to_string(),
        opt(st.z_up_given_y_up),
        opt(st.z_up_given_y_down),
        st.z_marginal_se.to_string(),
        st.sign_test.statistic.to_string(),
        st.sign_test.p_value.to_string(),
        st.binned_test.statistic.to_string(),
        st.binned_test.dof.to_string(),
        st.binned_test.p_value.to_string(),
        st.expectation_covariance.to_string(),
    ]);
    Ok(Run {
        config: KeyValues::new(),
        summary: serde_json::to_value(&st).map_err(|e| CliError::Runtime(e.to_string()))?,
        table,
        trials: None,
    })
}

fn trajectory_table(t: &Trajectory) -> Table {
    let mut table = Table::new(&["t", "X", "Y", "X_sec", "energy"]);
    for p in &t.points {
        table.push(vec![
            p.t.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            opt(p.x_sec),
            p.energy.to_string(),
        ]);
    }
    table
}

fn dynamics(r: &mut Resolver) -> Result<Run, CliError> {
    let d = DynamicsParams::default();
    let mut params = DynamicsParams {
        amp_a: r.get("amp-a", d.amp_a)?,
        radius_r: r.get("radius-r", d.radius_r)?,
        alpha: r.get("alpha", d.alpha)?,
        n_big: r.get("n-big", d.n_big)?,
        force_f: d.force_f,
        dt: r.get("dt", d.dt)?,
        n_steps: r.get("n-steps", d.n_steps)?,
        save_every: r.get("save-every", d.save_every)?,
    };
    let t_switch: Option<f64> = r.get_opt("t-switch")?;
    let source: String = r.get("force-source", "direct".to_string())?;
    params.force_f = match source.as_str() {
        "direct" => {
            r.allow(&["mass", "p", "mode", "s", "variance", "gaussian-convention", "sampler4", "seed"]);
            r.get("force-f", d.force_f)?
        }
        "sampled" => {
            r.allow(&["force-f", "sampler4"]);
            let mass = r.get("mass", 0.01)?;
            let p = r.get("p", 0.5)?;
            let rc = randomness(r)?;
            rc.validate()?;
            let v = rc.sample2(&mut rc.streams().trial(0, 0));
            pointer_random_force(p, &v, mass)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "invalid value `{other}` for `force-source`: expected one of: direct, sampled"
            )))
        }
    };
    let f = params.force_f;
    let (summary, table) = match t_switch {
        None => {
            let run = simulate_pointer(&params, f)?;
            let summary = json!({
                "force_f": f,
                "settled_x": run.settled_x,
                "label": run.label.to_string(),
                "final_state": run.final_state,
                "max_energy_drift": run.trajectory.max_energy_drift,
            });
            (summary, trajectory_table(&run.trajectory))
        }
        Some(ts) => {
            let run = simulate_two_apparatus(&params, f, ts)?;
            let summary = json!({
                "force_f": f,
                "t_switch": ts,
                "settled_x": run.settled_x,
                "settled_x_sec": run.settled_x_sec,
                "labels": [run.labels.0.to_string(), run.labels.1.to_string()],
                "y_at_switch": run.y_at_switch,
                "x_sec_force_at_switch": run.x_sec_force_at_switch,
                "max_energy_drift": run.trajectory.max_energy_drift,
            });
            (summary, trajectory_table(&run.trajectory))
        }
    };
    Ok(Run {
        config: KeyValues::new(),
        summary,
        table,
        trials: None,
    })
}

fn kepler(r: &mut Resolver) -> Result<Run, CliError> {
    use stochpsi::dynamics::kepler::{DEFAULT_DT, DEFAULT_ECCENTRICITY, DEFAULT_STEPS};
    let e = r.get("eccentricity", DEFAULT_ECCENTRICITY)?;
    let dt = r.get("dt", DEFAULT_DT)?;
    let n = r.get("n-steps", DEFAULT_STEPS)?;
    let rep = kepler_validation_with(e, dt, n)?;
    let mut table = Table::new(&[
        "eccentricity",
        "dt",
        "n_steps",
        "max_energy_drift",
        "max_angular_momentum_drift",
        "max_position_error",
        "max_radius_deviation",
    ]);
    table.push(vec![
        rep.eccentricity.to_string(),
        rep.dt.to_string(),
        rep.n_steps.to_string(),
        rep.max_energy_drift.to_string(),
        rep.max_angular_momentum_drift.to_string(),
        rep.max_position_error.to_string(),
        rep.max_radius_deviation.to_string(),
    ]);
    Ok(Run {
        config: KeyValues::new(),
        summary: serde_json::to_value(rep).map_err(|e| CliError::Runtime(e.to_string()))?,
        table,
        trials: None,
    })
}

fn audit(r: &mut Resolver) -> Result<Run, CliError> {
    let apparatus = r.get::<Apparatus>("apparatus", Apparatus::Single)?;
    let a = MeasurementAngle::from_degrees(r.get("a", 0.0)?);
    let default_pairs = NumberList(DEFAULT_AUDIT_PAIRS_DEG.iter().flat_map(|&(x, y)| [x, y]).collect());
    let pairs = r.get("pairs", default_pairs)?;
    if pairs.0.len() % 2 != 0 {
        return Err(CliError::Usage("`pairs` needs an even number of angles".into()));
    }
    let pairs: Vec<(f64, f64)> = pairs.0.chunks(2).map(|c| (c[0], c[1])).collect();
    let w1 = MeasurementAngle::from_degrees(r.get("witness-b1", 0.0)?);
    let w2 = MeasurementAngle::from_degrees(r.get("witness-b2", 90.0)?);
    let n_search = r.get("witness-search", 1000u64)?;
    let strength = r.get("control-strength", 0.5)?;
    let cfg = experiment(r, apparatus)?;

    let bound = local_deterministic_bound(2)?;
    let grid = active_locality_grid(a, &pairs, &cfg)?;
    let (c1, c2) = pairs.first().copied().unwrap_or((0.0, 180.0));
    let control = corrupted_locality_control(
        a,
        MeasurementAngle::from_degrees(c1),
        MeasurementAngle::from_degrees(c2),
        &cfg,
        strength,
    )?;
    let witness = passive_locality_witness(a, w1, w2, &cfg, n_search)?;

    let mut table = Table::new(&["b1_deg", "b2_deg", "ks_statistic", "p_value", "alpha", "reject"]);
    for e in &grid.entries {
        table.push(vec![
            e.b1_deg.to_string(),
            e.b2_deg.to_string(),
            e.report.statistic.to_string(),
            e.report.p_value.to_string(),
            grid.alpha_per_test.to_string(),
            e.report.reject.to_string(),
        ]);
    }
    Ok(Run {
        config: KeyValues::new(),
        summary: json!({
            "local_deterministic_bound": bound,
            "active_locality": {
                "passed": grid.passed(),
                "a_deg": grid.a_deg,
                "alpha_per_test": grid.alpha_per_test,
                "entries": grid.entries,
            },
            "corrupted_control": control,
            "passive_witness": witness,
            "witness_search": n_search,
        }),
        table,
        trials: None,
    })
}
