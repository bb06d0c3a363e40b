use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cf_relay::channel::{read_channel, write_channel};
use cf_relay::dof::{dof_report, estimate_dof_gain, DofScheme};
use cf_relay::harness::{self, GapAuditConfig, SlopeMapConfig};
use cf_relay::scenario::{self, generate_scenario, CellularConfig};
use cf_relay::{AntennaProfile, ChannelRealization, Error};

#[derive(Parser)]
#[command(name = "cfrelay", version, about = "Compress-and-forward relay rate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate versus relay budget for one channel
    Sweep(SweepArgs),
    /// Compare the optimized rate with the cut-set bound on random channels
    GapAudit(GapArgs),
    /// Average slopes 1 - 1/λ_i over a grid of relay and destination sizes
    SlopeMap(SlopeArgs),
    /// Degrees-of-freedom formulas next to finite-SNR estimates
    Dof(DofArgs),
    /// Draw a picocell channel and print it in the channel file format
    GenScenario(ScenarioArgs),
}

#[derive(Args)]
struct Common {
    /// Output file, stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Args)]
struct ScenarioSource {
    /// Channel file; takes precedence over scenario generation
    #[arg(long)]
    channel: Option<PathBuf>,
    /// key = value picocell configuration
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "2,3,3,4")]
    profile: String,
    /// Source power, defaults to the scenario's transmit power or 1
    #[arg(long)]
    power: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    source: ScenarioSource,
    #[arg(long, default_value = "0:24:1")]
    c0_grid: String,
}

#[derive(Args)]
struct GapArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    /// Largest s, d, r and t drawn
    #[arg(long, default_value_t = 4)]
    max_antennas: usize,
    #[arg(long, default_value_t = 20.0)]
    c0_max: f64,
}

#[derive(Args)]
struct SlopeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 5)]
    s: usize,
    #[arg(long, default_value_t = 18)]
    t: usize,
    /// Relay antennas as lo:hi
    #[arg(long, default_value = "1:25")]
    r_range: String,
    /// Destination antennas as lo:hi
    #[arg(long, default_value = "1:25")]
    d_range: String,
    #[arg(long, default_value_t = 100)]
    realizations: usize,
    #[arg(long, default_value_t = 1e-3)]
    sigma2: f64,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
}

#[derive(Args)]
struct DofArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "2,3,3,4")]
    profile: String,
    /// Relay budget pre-log α, or "inf"
    #[arg(long, default_value = "inf")]
    alpha: String,
    #[arg(long, default_value_t = 1e5)]
    rho_lo: f64,
    #[arg(long, default_value_t = 1e7)]
    rho_hi: f64,
    #[arg(long, default_value_t = 1.0)]
    power: f64,
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "2,3,3,4")]
    profile: String,
}

enum Failure {
    Lib(Error),
    Audit(Vec<u64>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn output(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn load_config(path: &Option<PathBuf>, seed: u64) -> Result<CellularConfig, Error> {
    let mut cfg = match path {
        Some(p) => fs::read_to_string(p)?.parse()?,
        None => CellularConfig::default(),
    };
    cfg.seed = seed;
    Ok(cfg)
}

fn load_source(src: &ScenarioSource, seed: u64) -> Result<(ChannelRealization, f64), Error> {
    if let Some(path) = &src.channel {
        let ch = read_channel(&fs::read_to_string(path)?)?;
        return Ok((ch, src.power.unwrap_or(1.0)));
    }
    let cfg = load_config(&src.config, seed)?;
    let profile: AntennaProfile = src.profile.parse()?;
    let ch = generate_scenario(&cfg, profile)?;
    Ok((ch, src.power.unwrap_or(cfg.source_power())))
}

fn parse_range(text: &str) -> Result<std::ops::RangeInclusive<usize>, Error> {
    let bad = || Error::Config(format!("bad range {text:?}, expected lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || hi < lo {
        return Err(bad());
    }
    Ok(lo..=hi)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sweep(a) => {
            let grid = harness::parse_grid(&a.c0_grid)?;
            let (ch, power) = load_source(&a.source, a.common.seed)?;
            let rows = harness::run_sweep(&ch, power, &grid, a.common.parallel)?;
            harness::write_csv(output(&a.common.out)?, &rows)?;
        }
        Command::GapAudit(a) => {
            if a.max_antennas == 0 {
                return Err(Error::Config("max-antennas must be positive".into()).into());
            }
            let cfg = GapAuditConfig {
                n_trials: a.trials,
                s_range: 1..=a.max_antennas,
                d_range: 1..=a.max_antennas,
                r_range: 1..=a.max_antennas,
                t_range: 0..=a.max_antennas,
                c0_max: a.c0_max,
                seed: a.common.seed,
                parallel: a.common.parallel,
                ..Default::default()
            };
            let (rows, summary) = harness::run_gap_audit(&cfg)?;
            harness::write_csv(output(&a.common.out)?, &rows)?;
            eprintln!(
                "trials {} max_gap {:.6} mean_gap {:.6} median_gap {:.6} max_fraction_of_bound {:.4}",
                summary.trials, summary.max_gap, summary.mean_gap, summary.median_gap, summary.max_fraction_of_bound
            );
            if !summary.violations.is_empty() {
                return Err(Failure::Audit(summary.violations));
            }
        }
        Command::SlopeMap(a) => {
            let cfg = SlopeMapConfig {
                s: a.s,
                t: a.t,
                r_range: parse_range(&a.r_range)?,
                d_range: parse_range(&a.d_range)?,
                n_realizations: a.realizations,
                sigma2: a.sigma2,
                power: a.power,
                seed: a.common.seed,
                parallel: a.common.parallel,
                ..Default::default()
            };
            let rows = harness::run_slope_map(&cfg)?;
            harness::write_csv(output(&a.common.out)?, &rows)?;
        }
        Command::Dof(a) => {
            let profile: AntennaProfile = a.profile.parse()?;
            let alpha = match a.alpha.trim() {
                "inf" | "infinity" => f64::INFINITY,
                v => v
                    .parse()
                    .map_err(|_| Error::Config(format!("bad alpha {v:?}")))?,
            };
            let report = dof_report(profile, alpha)?;
            let mut rng = <rand_chacha::ChaCha20Rng as rand::SeedableRng>::seed_from_u64(a.common.seed);
            let ch = scenario::rayleigh_channel(profile, 1.0, &mut rng);
            let schemes = [
                ("joint", DofScheme::Joint, report.dof_gain_opt),
                ("iid_quantizer", DofScheme::IidQuantizer, report.dof_gain_iid),
                ("zero_forcing", DofScheme::ZeroForcing, report.dof_gain_opt),
            ];
            let mut out = output(&a.common.out)?;
            writeln!(out, "profile {profile} alpha {alpha}")?;
            writeln!(
                out,
                "formula dof_dest {} dof_relay_inf {} n_det {} combiner_rows {}",
                report.dof_dest, report.dof_relay_inf, report.n_det_components, report.combiner_rows
            )?;
            writeln!(out, "scheme,formula_gain,estimated_gain,estimated_total")?;
            for (name, scheme, formula) in schemes {
                if scheme == DofScheme::ZeroForcing && report.combiner_rows == 0 {
                    writeln!(out, "{name},{formula},,")?;
                    continue;
                }
                let est = estimate_dof_gain(&ch, scheme, alpha, a.rho_lo, a.rho_hi, a.power)?;
                writeln!(out, "{name},{formula},{},{}", est.gain, est.total)?;
            }
        }
        Command::GenScenario(a) => {
            let cfg = load_config(&a.config, a.common.seed)?;
            let profile: AntennaProfile = a.profile.parse()?;
            let ch = generate_scenario(&cfg, profile)?;
            let mut out = output(&a.common.out)?;
            for line in scenario::scenario_metadata(&cfg, profile) {
                writeln!(out, "# {line}")?;
            }
            write!(out, "{}", write_channel(&ch))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Audit(seeds)) => {
            eprintln!("gap bound exceeded for trial seeds {seeds:?}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parse { .. } | Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Dimension(_) | Error::Precondition(_) => 1,
                Error::Singular(_) | Error::NotConverged { .. } | Error::AscentLimit { .. } => 2,
            };
            ExitCode::from(code)
        }
    }
}
