use std::fmt::Display;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochpsi::config::{parse_angle_list, KeyValues, NumberList};

#[derive(Debug, Parser)]
#[command(name = "stochpsi", version, about = "Stochastic-wavefunction measurement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stern-Gerlach detection rates over a grid of p.
    Sg(SgArgs),
    /// Single-needle correlation against angle difference.
    EprbSingle(SweepArgs),
    /// Dual-detector correlation and event rates against angle difference.
    EprbDual(SweepArgs),
    /// CHSH statistic at fixed angles.
    Chsh(ChshArgs),
    /// Random search for the angle quadruple maximizing |S|.
    ChshSearch(SearchArgs),
    /// Joint statistics of a y measurement followed by a z measurement.
    Repeat(RepeatArgs),
    /// Pointer trajectory, optionally with a second apparatus.
    Dynamics(DynamicsArgs),
    /// Integrator check on a Kepler orbit.
    KeplerCheck(KeplerArgs),
    /// Locality audit: local bound, force-distribution KS grid, witness.
    Audit(AuditArgs),
    /// Repeat a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Key=value config file; flags override its entries.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent). A `.manifest` sidecar is written next to it.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Also write per-trial records to `<out>.trials.csv`.
    #[arg(long)]
    pub dump_trials: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    pub threads: Option<usize>,
}

fn put<T: Display>(kv: &mut KeyValues, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        kv.set(key, v.to_string());
    }
}

fn angle_list(s: &str) -> Result<String, String> {
    parse_angle_list(s)
        .map(|a| NumberList(a.to_vec()).to_string())
        .map_err(|e| e.to_string())
}

fn number_list(s: &str) -> Result<String, String> {
    s.parse::<NumberList>().map(|l| l.to_string()).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct RandomArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gaussian amplitudes instead of the bounded sphere.
    #[arg(long)]
    pub gaussian: bool,
    /// Radius of the bounded random part.
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub variance: Option<f64>,
    /// per-component or per-amplitude.
    #[arg(long)]
    pub gaussian_convention: Option<String>,
    /// Four-amplitude bounded law: recipe or uniform-sphere.
    #[arg(long)]
    pub sampler4: Option<String>,
}

impl RandomArgs {
    pub fn overrides(&self, kv: &mut KeyValues) {
        put(kv, "seed", &self.seed);
        if self.gaussian {
            kv.set("mode", "gaussian");
        }
        put(kv, "s", &self.s);
        put(kv, "variance", &self.variance);
        put(kv, "gaussian-convention", &self.gaussian_convention);
        put(kv, "sampler4", &self.sampler4);
    }
}

#[derive(Debug, Args)]
pub struct TrialArgs {
    #[arg(long)]
    pub n_trials: Option<u64>,
    /// Detection threshold.
    #[arg(long)]
    pub beta: Option<f64>,
}

impl TrialArgs {
    pub fn overrides(&self, kv: &mut KeyValues) {
        put(kv, "n-trials", &self.n_trials);
        put(kv, "beta", &self.beta);
    }
}

#[derive(Debug, Args)]
pub struct SgArgs {
    /// Probabilities of "up", comma separated.
    #[arg(long, value_parser = number_list)]
    pub p: Option<String>,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Alice's angle in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Angle differences in degrees, comma separated.
    #[arg(long, value_parser = number_list, allow_hyphen_values = true)]
    pub deltas: Option<String>,
    /// Angle convention, e.g. full/plus/swap-alice.
    #[arg(long)]
    pub convention: Option<String>,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    /// a,a',b,b' in degrees.
    #[arg(long, value_parser = angle_list, allow_hyphen_values = true)]
    pub angles: Option<String>,
    /// single or dual.
    #[arg(long)]
    pub apparatus: Option<String>,
    #[arg(long)]
    pub convention: Option<String>,
    /// Also report S under all eight angle conventions.
    #[arg(long)]
    pub scan_conventions: bool,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Number of random angle quadruples.
    #[arg(long)]
    pub quadruples: Option<usize>,
    #[arg(long)]
    pub apparatus: Option<String>,
    #[arg(long)]
    pub convention: Option<String>,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct RepeatArgs {
    /// redraw or reuse.
    #[arg(long)]
    pub innovation: Option<String>,
    /// linear or subtract-constant.
    #[arg(long)]
    pub z_centering: Option<String>,
    /// Quantile bins per axis for the binned independence test.
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub n_trials: Option<u64>,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct DynamicsArgs {
    #[arg(long)]
    pub amp_a: Option<f64>,
    #[arg(long)]
    pub radius_r: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_big: Option<f64>,
    /// Force on Y (direct force source).
    #[arg(long, allow_hyphen_values = true)]
    pub force_f: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub save_every: Option<usize>,
    /// Switch on a second apparatus at this time.
    #[arg(long)]
    pub t_switch: Option<f64>,
    /// direct, or sampled from a random part with --mass and --p.
    #[arg(long)]
    pub force_source: Option<String>,
    #[arg(long)]
    pub mass: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct KeplerArgs {
    #[arg(long)]
    pub eccentricity: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Alice's angle in degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Bob pairs as b1,b2,b1,b2,... in degrees.
    #[arg(long, value_parser = number_list, allow_hyphen_values = true)]
    pub pairs: Option<String>,
    #[arg(long)]
    pub apparatus: Option<String>,
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub witness_b1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub witness_b2: Option<f64>,
    /// Draws searched for a passive-locality witness.
    #[arg(long)]
    pub witness_search: Option<u64>,
    /// Size of the deliberately nonlocal control shift.
    #[arg(long)]
    pub control_strength: Option<f64>,
    #[command(flatten)]
    pub trials: TrialArgs,
    #[command(flatten)]
    pub random: RandomArgs,
    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// A `.manifest` file or a CSV output with a manifest header.
    pub manifest: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    #[arg(long)]
    pub dump_trials: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    /// Flag values as config entries, plus the I/O options.
    pub fn overrides(&self) -> Option<(KeyValues, &IoArgs)> {
        let mut kv = KeyValues::new();
        let io = match self {
            Command::Sg(a) => {
                put(&mut kv, "p", &a.p);
                a.trials.overrides(&mut kv);
                a.random.overrides(&mut kv);
                &a.io
            }
            Command::EprbSingle(a) | Command::EprbDual(a) => {
                put(&mut kv, "a", &a.a);
                put(&mut kv, "deltas", &a.deltas);
                put(&mut kv, "convention", &a.convention);
                a.trials.overrides(&mut kv);
                a.random.overrides(&mut kv);
                &a.io
            }
            Command::Chsh(a) => {
                put(&mut kv, "angles", &a.angles);
                put(&mut kv, "apparatus", &a.apparatus);
                put(&mut kv, "convention", &a.convention);
                if a.scan_conventions {
                    kv.set("scan-conventions", "true");
                }
                a.trials.overrides(&mut kv);
                a.random.overrides(&mut kv);
                &a.io
            }
            Command::ChshSearch(a) => {
                put(&mut kv, "quadruples", &a.quadruples);
                put(&mut kv, "apparatus", &a.apparatus);
                put(&mut kv, "convention", &a.convention);
                a.trials.overrides(&mut kv);
                a.random.overrides(&mut kv);
                &a.io
            }
            Command::Repeat(a) => {
                put(&mut kv, "innovation", &a.innovation);
                put(&mut kv, "z-centering", &a.z_centering);
                put(&mut kv, "bins", &a.bins);
                put(&mut kv, "n-trials", &a.n_trials);
                a.random.overrides(&mut kv);
                &a.io
            }
            Command::Dynamics(a) => {
                put(&mut kv, "amp-a", &a.amp_a);
                put(&mut kv, "radius-r", &a.radius_r);
                put(&mut kv, "alpha", &a.alpha);
                put(&mut kv, "n-big", &a.n_big);
                put(&mut kv, "force-f", &a.force_f);
                put(&mut kv, "dt", &a.dt);
                put(&mut kv, "n-steps", &a.n_steps);
                put(&mut kv, "save-every", &a.save_every);
                put(&mut kv, "t-switch", &a.t_switch);
                put(&mut kv, "force-source", &a.force_source);
                put(&mut kv, "mass", &a.mass);
                put(&mut kv, "p", &a.p);
                a.random.overrides(&mut kv);
                &a.io
            }
            Command::KeplerCheck(a) => {
                put(&mut kv, "eccentricity", &a.eccentricity);
                put(&mut kv, "dt", &a.dt);
                put(&mut kv, "n-steps", &a.n_steps);
                &a.io
            }
            Command::Audit(a) => {
                put(&mut kv, "a", &a.a);
                put(&mut kv, "pairs", &a.pairs);
                put(&mut kv, "apparatus", &a.apparatus);
                put(&mut kv, "convention", &a.convention);
                put(&mut kv, "witness-b1", &a.witness_b1);
                put(&mut kv, "witness-b2", &a.witness_b2);
                put(&mut kv, "witness-search", &a.witness_search);
                put(&mut kv, "control-strength", &a.control_strength);
                a.trials.overrides(&mut kv);
                a.random.overrides(&mut kv);
                &a.io
            }
            Command::Rerun(_) => return None,
        };
        Some((kv, io))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Sg(_) => "sg",
            Command::EprbSingle(_) => "eprb-single",
            Command::EprbDual(_) => "eprb-dual",
            Command::Chsh(_) => "chsh",
            Command::ChshSearch(_) => "chsh-search",
            Command::Repeat(_) => "repeat",
            Command::Dynamics(_) => "dynamics",
            Command::KeplerCheck(_) => "kepler-check",
            Command::Audit(_) => "audit",
            Command::Rerun(_) => "rerun",
        }
    }
}
