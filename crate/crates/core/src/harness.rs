//! Batch experiments behind the command-line tool: rate sweeps over the
//! relay budget, the constant-gap audit and slope maps. Rows are plain
//! serde records written as CSV.

use std::io::Write;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{AntennaProfile, ChannelRealization};
use crate::error::{precondition, Error, Result};
use crate::input::{cutset_bound, isotropic, waterfilling_dest, waterfilling_pooled};
use crate::joint::{optimize_cf, rate_curve, CfOptions, StartPoint};
use crate::linalg::CMatrix;
use crate::quantizer::{allocation_for_budget, constant_gap_quantizer, gen_eig_system, iid_quantizer_for_budget};
use crate::rates::cf_rate_minform;
use crate::scenario::rayleigh_channel;

/// Parses `lo:hi:step` into an inclusive ascending grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("bad grid {text:?}, expected lo:hi:step")))?;
    match nums[..] {
        [v] if v >= 0.0 => Ok(vec![v]),
        [lo, hi, step] if lo >= 0.0 && hi >= lo && step > 0.0 => {
            let n = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| lo + step * k as f64).collect())
        }
        _ => Err(Error::Config(format!("bad grid {text:?}, expected lo:hi:step with 0 <= lo <= hi, step > 0"))),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Options used for every joint optimization in the batch runs.
pub fn batch_options(power: f64) -> CfOptions {
    CfOptions::new(power)
        .with_start(StartPoint::CutsetMaximizer)
        .with_start(StartPoint::WaterfillingDest)
        .with_start(StartPoint::WaterfillingPooled)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub c0: f64,
    pub cutset: f64,
    pub cf_joint: f64,
    pub cf_wf_sd: f64,
    pub cf_wf_srd: f64,
    pub cf_iid_q: f64,
    pub cf_constant_gap: f64,
}

/// Best rate for a fixed input with the budget split optimally.
pub fn fixed_input_rate(ch: &ChannelRealization, s_x: &CMatrix, c0: f64) -> Result<f64> {
    let (alloc, _) = allocation_for_budget(&gen_eig_system(ch, s_x)?, c0)?;
    Ok(cf_rate_minform(ch, s_x, &alloc.quantizer(), c0)?.max(0.0))
}

/// Rate of the constant-gap scheme: cut-set maximizing input and
/// `Σ = λ/(λ − 1)`.
pub fn constant_gap_rate(ch: &ChannelRealization, s_csb: &CMatrix, c0: f64) -> Result<f64> {
    let q = constant_gap_quantizer(ch, s_csb)?;
    Ok(cf_rate_minform(ch, s_csb, &q, c0)?.max(0.0))
}

pub fn run_sweep(ch: &ChannelRealization, power: f64, c0_grid: &[f64], parallel: usize) -> Result<Vec<SweepRow>> {
    if c0_grid.is_empty() {
        return precondition("empty c0 grid");
    }
    let opts = batch_options(power);
    let curve = rate_curve(ch, c0_grid, &opts)?;
    let wf_sd = waterfilling_dest(ch, power)?;
    let wf_srd = waterfilling_pooled(ch, power)?;
    pool(parallel)?.install(|| {
        curve
            .par_iter()
            .map(|pt| {
                let c0 = pt.c0;
                let cut = cutset_bound(ch, c0, &opts.input)?;
                let joint_sx = &pt.result.s_x;
                let q = iid_quantizer_for_budget(ch, joint_sx, None, c0)?;
                Ok(SweepRow {
                    c0,
                    cutset: cut.value,
                    cf_joint: pt.result.rate,
                    cf_wf_sd: fixed_input_rate(ch, &wf_sd, c0)?,
                    cf_wf_srd: fixed_input_rate(ch, &wf_srd, c0)?,
                    cf_iid_q: cf_rate_minform(ch, joint_sx, &q, c0)?.max(0.0),
                    cf_constant_gap: constant_gap_rate(ch, &cut.s_x, c0)?,
                })
            })
            .collect()
    })
}

#[derive(Debug, Clone)]
pub struct GapAuditConfig {
    pub n_trials: usize,
    /// Inclusive ranges for `s, d, r` (each at least 1) and `t`.
    pub s_range: RangeInclusive<usize>,
    pub d_range: RangeInclusive<usize>,
    pub r_range: RangeInclusive<usize>,
    pub t_range: RangeInclusive<usize>,
    /// `log10 σ²` is drawn uniformly from this interval.
    pub log10_sigma2: (f64, f64),
    pub c0_max: f64,
    /// Fraction of trials run at `c0 = 0`.
    pub zero_budget_fraction: f64,
    pub power: f64,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for GapAuditConfig {
    fn default() -> Self {
        Self {
            n_trials: 200,
            s_range: 1..=4,
            d_range: 1..=4,
            r_range: 1..=4,
            t_range: 0..=4,
            log10_sigma2: (-3.0, 1.0),
            c0_max: 20.0,
            zero_budget_fraction: 0.1,
            power: 1.0,
            seed: 0,
            parallel: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub trial: usize,
    pub seed: u64,
    pub s: usize,
    pub d: usize,
    pub r: usize,
    pub t: usize,
    pub sigma2: f64,
    pub c0: f64,
    pub cutset: f64,
    pub cf_joint: f64,
    pub gap: f64,
    pub bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSummary {
    pub trials: usize,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub median_gap: f64,
    /// Largest `gap / bound` over trials.
    pub max_fraction_of_bound: f64,
    /// Seeds of trials exceeding the bound.
    pub violations: Vec<u64>,
}

/// Allowed numerical slack on top of `min(r, s)`.
pub const GAP_SLACK: f64 = 1e-6;

fn gap_trial(cfg: &GapAuditConfig, trial: usize) -> Result<GapRow> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let s = rng.random_range(cfg.s_range.clone());
    let d = rng.random_range(cfg.d_range.clone());
    let r = rng.random_range(cfg.r_range.clone());
    let t = rng.random_range(cfg.t_range.clone());
    let sigma2 = 10f64.powf(rng.random_range(cfg.log10_sigma2.0..=cfg.log10_sigma2.1));
    let c0 = if rng.random::<f64>() < cfg.zero_budget_fraction {
        0.0
    } else {
        rng.random_range(0.0..=cfg.c0_max)
    };
    let ch = rayleigh_channel(AntennaProfile::new(s, d, r, t)?, sigma2, &mut rng);
    let opts = batch_options(cfg.power);
    let cut = cutset_bound(&ch, c0, &opts.input)?;
    let joint = optimize_cf(&ch, c0, &opts)?;
    let gap = cut.value - joint.rate;
    let bound = r.min(s) as f64;
    Ok(GapRow {
        trial,
        seed,
        s,
        d,
        r,
        t,
        sigma2,
        c0,
        cutset: cut.value,
        cf_joint: joint.rate,
        gap,
        bound,
        within_bound: gap <= bound + GAP_SLACK,
    })
}

pub fn run_gap_audit(cfg: &GapAuditConfig) -> Result<(Vec<GapRow>, GapSummary)> {
    if cfg.n_trials == 0 {
        return precondition("gap audit needs at least one trial");
    }
    if cfg.s_range.is_empty() || cfg.d_range.is_empty() || cfg.r_range.is_empty() || cfg.t_range.is_empty() {
        return precondition("antenna ranges must be non-empty");
    }
    if *cfg.s_range.start() == 0 || *cfg.d_range.start() == 0 || *cfg.r_range.start() == 0 {
        return precondition("s, d and r ranges must start at 1 or more");
    }
    let rows: Vec<GapRow> = pool(cfg.parallel)?.install(|| {
        (0..cfg.n_trials)
            .into_par_iter()
            .map(|k| gap_trial(cfg, k))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    let median = if n % 2 == 1 { gaps[n / 2] } else { 0.5 * (gaps[n / 2 - 1] + gaps[n / 2]) };
    let summary = GapSummary {
        trials: n,
        max_gap: gaps[n - 1],
        mean_gap: gaps.iter().sum::<f64>() / n as f64,
        median_gap: median,
        max_fraction_of_bound: rows
            .iter()
            .map(|r| if r.bound > 0.0 { r.gap / r.bound } else { 0.0 })
            .fold(f64::NEG_INFINITY, f64::max),
        violations: rows.iter().filter(|r| !r.within_bound).map(|r| r.seed).collect(),
    };
    Ok((rows, summary))
}

#[derive(Debug, Clone)]
pub struct SlopeMapConfig {
    pub s: usize,
    pub t: usize,
    pub r_range: RangeInclusive<usize>,
    pub d_range: RangeInclusive<usize>,
    pub n_realizations: usize,
    pub sigma2: f64,
    pub power: f64,
    /// Largest component index reported.
    pub max_index: usize,
    /// Fixed input; isotropic `(P/s) I` when unset.
    pub s_x: Option<CMatrix>,
    pub seed: u64,
    pub parallel: usize,
}

impl Default for SlopeMapConfig {
    fn default() -> Self {
        Self {
            s: 5,
            t: 18,
            r_range: 1..=25,
            d_range: 1..=25,
            n_realizations: 100,
            sigma2: 1e-3,
            power: 1.0,
            max_index: 6,
            s_x: None,
            seed: 0,
            parallel: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub r: usize,
    pub d: usize,
    pub i: usize,
    pub avg_slope: f64,
}

fn slope_cell(cfg: &SlopeMapConfig, r: usize, d: usize, cell: u64) -> Result<Vec<SlopeRow>> {
    let profile = AntennaProfile::new(cfg.s, d, r, cfg.t)?;
    let s_x = cfg.s_x.clone().unwrap_or_else(|| isotropic(cfg.s, cfg.power));
    let k = r.min(cfg.max_index);
    let mut sums = vec![0.0; k];
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(cell));
    for _ in 0..cfg.n_realizations {
        let ch = rayleigh_channel(profile, cfg.sigma2, &mut rng);
        let gen = gen_eig_system(&ch, &s_x)?;
        for (sum, &lambda) in sums.iter_mut().zip(&gen.eigenvalues) {
            *sum += 1.0 - 1.0 / lambda;
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, sum)| SlopeRow {
            r,
            d,
            i: i + 1,
            avg_slope: sum / cfg.n_realizations as f64,
        })
        .collect())
}

pub fn run_slope_map(cfg: &SlopeMapConfig) -> Result<Vec<SlopeRow>> {
    if cfg.r_range.is_empty() || cfg.d_range.is_empty() || cfg.n_realizations == 0 {
        return precondition("slope map ranges and realization count must be non-empty");
    }
    let cells: Vec<(usize, usize)> = cfg
        .r_range
        .clone()
        .flat_map(|r| cfg.d_range.clone().map(move |d| (r, d)))
        .collect();
    let per_cell: Vec<Vec<SlopeRow>> = pool(cfg.parallel)?.install(|| {
        cells
            .par_iter()
            .enumerate()
            .map(|(k, &(r, d))| slope_cell(cfg, r, d, k as u64 * 1_000_003))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_cell.into_iter().flatten().collect())
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
