//! Joint input and quantizer optimization.
//!
//! For a multiplier `μ` the Lagrangian `f_o − μ (f_c − c0)` is maximized by
//! alternating the closed-form quantizer with a projected-gradient input
//! step; `μ` is then searched so that the description rate meets the relay
//! budget.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::channel::{conditionals_unchecked, ChannelRealization};
use crate::error::{precondition, Error, Result};
use crate::input::{
    cutset_bound, isotropic, lagrangian_input_objective, maximize_lagrangian_input, stationarity_residual,
    waterfilling_dest, waterfilling_pooled, InputOptConfig,
};
use crate::linalg::{eigh, hermitian_part, project_trace_psd, CMatrix};
use crate::quantizer::{allocation_for_budget, allocation_for_mu, gen_eig_from, gen_eig_system, QuantAllocation};
use crate::rates::{cf_rate_minform, objective_and_constraint, RelayQuantizer};
use crate::scenario::gaussian_matrix;

/// Initial transmit covariance for one run of the multiplier search.
#[derive(Debug, Clone, PartialEq)]
pub enum StartPoint {
    Isotropic,
    /// Maximizer of the cut-set bound at the requested budget.
    CutsetMaximizer,
    WaterfillingDest,
    WaterfillingPooled,
    Given(CMatrix),
}

#[derive(Debug, Clone)]
pub struct CfOptions {
    pub input: InputOptConfig,
    /// Relative Lagrangian improvement below which alternation stops.
    pub inner_tol: f64,
    pub max_alternations: usize,
    /// Input stationarity accepted as converged without further alternation.
    pub kkt_tol: f64,
    pub starts: Vec<StartPoint>,
    /// Extra random feasible starts.
    pub random_restarts: usize,
    pub seed: u64,
}

impl CfOptions {
    pub fn new(power: f64) -> Self {
        Self {
            input: InputOptConfig::new(power),
            inner_tol: 1e-8,
            max_alternations: 200,
            kkt_tol: 1e-6,
            starts: vec![StartPoint::Isotropic],
            random_restarts: 0,
            seed: 0,
        }
    }

    pub fn power(&self) -> f64 {
        self.input.power
    }

    pub fn with_start(mut self, start: StartPoint) -> Self {
        if !self.starts.contains(&start) {
            self.starts.push(start);
        }
        self
    }
}

/// Fixed point of the alternation at one multiplier.
#[derive(Debug, Clone)]
pub struct InnerRun {
    pub mu: f64,
    pub s_x: CMatrix,
    pub quantizer: RelayQuantizer,
    pub allocation: QuantAllocation,
    pub objective: f64,
    pub constraint: f64,
    /// `f_o − μ f_c` after every half-step.
    pub trace: Vec<f64>,
    pub alternations: usize,
    /// Input stationarity residual at the returned pair, relative to `P`.
    pub input_residual: f64,
}

impl InnerRun {
    pub fn lagrangian(&self) -> f64 {
        self.objective - self.mu * self.constraint
    }
}

fn quantizer_step(ch: &ChannelRealization, s_x: &CMatrix, mu: f64) -> Result<(RelayQuantizer, QuantAllocation, f64, f64)> {
    let cond = conditionals_unchecked(ch, s_x);
    let alloc = allocation_for_mu(&gen_eig_from(&cond)?, mu)?;
    let q = alloc.quantizer();
    let (fo, fc) = objective_and_constraint(ch, s_x, &cond, &q)?;
    Ok((q, alloc, fo, fc))
}

fn input_residual(ch: &ChannelRealization, s_x: &CMatrix, q: &RelayQuantizer, mu: f64, power: f64) -> Result<f64> {
    let grad = lagrangian_input_objective(ch, q, mu).gradient(s_x)?;
    Ok(stationarity_residual(s_x, &grad, power) / power)
}

struct Iterate {
    s: CMatrix,
    q: RelayQuantizer,
    alloc: QuantAllocation,
    fo: f64,
    fc: f64,
}

impl Iterate {
    fn at(ch: &ChannelRealization, s: CMatrix, mu: f64) -> Result<Self> {
        let (q, alloc, fo, fc) = quantizer_step(ch, &s, mu)?;
        Ok(Self { s, q, alloc, fo, fc })
    }

    fn value(&self, mu: f64) -> f64 {
        self.fo - mu * self.fc
    }

    fn into_run(self, mu: f64, trace: Vec<f64>, alternations: usize, input_residual: f64) -> InnerRun {
        InnerRun {
            mu,
            s_x: self.s,
            quantizer: self.q,
            allocation: self.alloc,
            objective: self.fo,
            constraint: self.fc,
            trace,
            alternations,
            input_residual,
        }
    }
}

/// Projected gradient on `S ↦ max_Q L(S, Q)`, whose gradient is the input
/// gradient at the closed-form quantizer. Used once alternation stalls.
fn reduced_ascent(ch: &ChannelRealization, mu: f64, mut cur: Iterate, opts: &CfOptions, trace: &mut Vec<f64>) -> Result<(Iterate, f64)> {
    use crate::input::{ARMIJO, BACKTRACK, MIN_STEP};
    use crate::linalg::inner;
    let power = opts.power();
    let mut grad = lagrangian_input_objective(ch, &cur.q, mu).gradient(&cur.s)?;
    let mut step = opts.input.step_init;
    let mut prev: Option<(CMatrix, CMatrix)> = None;
    for _ in 0..opts.input.max_iters {
        let residual = stationarity_residual(&cur.s, &grad, power) / power;
        if residual <= opts.kkt_tol {
            return Ok((cur, residual));
        }
        if let Some((ds, dg)) = &prev {
            let sy = -inner(ds, dg);
            if sy > 0.0 {
                step = (ds.norm_squared() / sy).clamp(1e-12, 1e12);
            }
        }
        let value = cur.value(mu);
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand = project_trace_psd(&(&cur.s + grad.scale(step)), power);
            let delta = &cand - &cur.s;
            let predicted = inner(&grad, &delta);
            if predicted <= 0.0 {
                break;
            }
            let next = Iterate::at(ch, cand, mu)?;
            if next.value(mu) - value >= ARMIJO * predicted {
                accepted = Some((next, delta));
                break;
            }
            step *= BACKTRACK;
        }
        let Some((next, delta)) = accepted else {
            return Ok((cur, residual));
        };
        let next_grad = lagrangian_input_objective(ch, &next.q, mu).gradient(&next.s)?;
        prev = Some((delta, &next_grad - &grad));
        grad = next_grad;
        cur = next;
        trace.push(cur.value(mu));
    }
    let residual = stationarity_residual(&cur.s, &grad, power) / power;
    Ok((cur, residual))
}

/// Alternates the quantizer and input updates at fixed `mu`, ending with a
/// quantizer update.
pub fn inner_coordinate_ascent(ch: &ChannelRealization, mu: f64, init: &CMatrix, opts: &CfOptions) -> Result<InnerRun> {
    if !(mu > 0.0 && mu < 1.0) {
        return precondition(format!("mu must lie in (0,1), got {mu}"));
    }
    ch.check_input(init)?;
    let power = opts.power();
    let mut cur = Iterate::at(ch, project_trace_psd(init, power), mu)?;
    let mut value = cur.value(mu);
    let mut trace = vec![value];
    for alt in 1..=opts.max_alternations {
        let start_value = value;
        let candidate = match maximize_lagrangian_input(ch, &cur.q, mu, &opts.input, Some(&cur.s)) {
            Ok(sol) => sol.s_x,
            Err(Error::NotConverged { last, .. }) => *last,
            Err(e) => return Err(e),
        };
        let cond = conditionals_unchecked(ch, &candidate);
        let (fo_x, fc_x) = objective_and_constraint(ch, &candidate, &cond, &cur.q)?;
        let moved = fo_x - mu * fc_x >= value;
        if moved {
            value = fo_x - mu * fc_x;
        }
        trace.push(value);
        if moved {
            cur = Iterate::at(ch, candidate, mu)?;
        } else {
            cur = Iterate::at(ch, cur.s, mu)?;
        }
        value = value.max(cur.value(mu));
        trace.push(cur.value(mu));
        let residual = input_residual(ch, &cur.s, &cur.q, mu, power)?;
        if residual <= opts.kkt_tol {
            return Ok(cur.into_run(mu, trace, alt, residual));
        }
        let improvement = value - start_value;
        if improvement <= opts.inner_tol * value.abs().max(1.0) {
            let (cur, residual) = reduced_ascent(ch, mu, cur, opts, &mut trace)?;
            return Ok(cur.into_run(mu, trace, alt, residual));
        }
    }
    Err(Error::AscentLimit {
        mu,
        alternations: opts.max_alternations,
        trace,
    })
}

/// One endpoint of a time-sharing pair.
#[derive(Debug, Clone)]
pub struct OperatingPoint {
    pub mu: f64,
    pub s_x: CMatrix,
    pub quantizer: RelayQuantizer,
    pub objective: f64,
    pub constraint: f64,
}

impl From<&InnerRun> for OperatingPoint {
    fn from(run: &InnerRun) -> Self {
        Self {
            mu: run.mu,
            s_x: run.s_x.clone(),
            quantizer: run.quantizer.clone(),
            objective: run.objective,
            constraint: run.constraint,
        }
    }
}

/// Mixture `θ · low + (1 − θ) · high` whose average description rate is `c0`.
#[derive(Debug, Clone)]
pub struct Timeshare {
    pub theta: f64,
    /// Point above the budget.
    pub low: OperatingPoint,
    /// Point within the budget.
    pub high: OperatingPoint,
}

#[derive(Debug, Clone)]
pub struct JointOptResult {
    pub rate: f64,
    pub s_x: CMatrix,
    pub quantizer: RelayQuantizer,
    pub allocation: QuantAllocation,
    pub mu: f64,
    pub objective: f64,
    pub constraint: f64,
    pub inner_iters: usize,
    pub outer_iters: usize,
    pub timeshare: Option<Timeshare>,
    /// Lagrangian trace of the run that produced `s_x`.
    pub trace: Vec<f64>,
    pub input_residual: f64,
    /// True when the budget does not bind even as `μ → 0`.
    pub saturated: bool,
}

const MU_LO: f64 = 1e-4;
const MU_FLOOR: f64 = 1e-14;
const MU_WIDTH: f64 = 1e-10;

fn logit(mu: f64) -> f64 {
    (mu / (1.0 - mu)).ln()
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn random_start(s: usize, power: f64, rng: &mut ChaCha20Rng) -> CMatrix {
    let g = gaussian_matrix(s, s, rng);
    let m = hermitian_part(&(&g * g.adjoint()));
    let tr = crate::linalg::trace_re(&m);
    m.scale(power / tr)
}

fn resolve_starts(ch: &ChannelRealization, c0: f64, opts: &CfOptions) -> Result<Vec<CMatrix>> {
    let s = ch.profile().s;
    let power = opts.power();
    let mut out = Vec::new();
    for start in &opts.starts {
        out.push(match start {
            StartPoint::Isotropic => isotropic(s, power),
            StartPoint::CutsetMaximizer => cutset_bound(ch, c0, &opts.input)?.s_x,
            StartPoint::WaterfillingDest => waterfilling_dest(ch, power)?,
            StartPoint::WaterfillingPooled => waterfilling_pooled(ch, power)?,
            StartPoint::Given(m) => {
                ch.check_input(m)?;
                m.clone()
            }
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_restarts {
        out.push(random_start(s, power, &mut rng));
    }
    if out.is_empty() {
        out.push(isotropic(s, power));
    }
    Ok(out)
}

/// Operating point with the relay link unused.
pub fn relay_unused(ch: &ChannelRealization, power: f64) -> Result<JointOptResult> {
    let s_x = waterfilling_dest(ch, power)?;
    let (alloc, slope) = allocation_for_budget(&gen_eig_system(ch, &s_x)?, 0.0)?;
    let q = RelayQuantizer::dropped(ch.profile().r);
    let rate = crate::rates::dest_only_rate(ch, &s_x)?;
    Ok(JointOptResult {
        rate,
        s_x,
        quantizer: q,
        allocation: alloc,
        mu: slope,
        objective: rate,
        constraint: 0.0,
        inner_iters: 0,
        outer_iters: 0,
        timeshare: None,
        trace: vec![rate],
        input_residual: 0.0,
        saturated: false,
    })
}

fn finish(ch: &ChannelRealization, run: InnerRun, c0: f64, inner: usize, outer: usize, saturated: bool) -> Result<JointOptResult> {
    let rate = cf_rate_minform(ch, &run.s_x, &run.quantizer, c0)?.max(0.0);
    Ok(JointOptResult {
        rate,
        mu: run.mu,
        objective: run.objective,
        constraint: run.constraint,
        inner_iters: inner,
        outer_iters: outer,
        timeshare: None,
        input_residual: run.input_residual,
        trace: run.trace,
        s_x: run.s_x,
        quantizer: run.quantizer,
        allocation: run.allocation,
        saturated,
    })
}

/// Multiplier search from a single start.
fn search_mu(ch: &ChannelRealization, c0: f64, init: &CMatrix, opts: &CfOptions) -> Result<JointOptResult> {
    let g_tol = 1e-6 * c0.max(1.0);
    let mut inner = 0usize;
    let mut outer = 0usize;
    let mut eval = |u: f64| -> Result<InnerRun> {
        let run = inner_coordinate_ascent(ch, sigmoid(u), init, opts)?;
        inner += run.alternations;
        outer += 1;
        Ok(run)
    };
    let step = 100f64.ln();
    let (u_floor, u_ceil) = (logit(MU_FLOOR), logit(1.0 - MU_FLOOR));

    // low side: description rate above the budget
    let mut ua = logit(MU_LO);
    let mut pa = eval(ua)?;
    let mut found_b: Option<(f64, InnerRun)> = None;
    while pa.constraint - c0 <= 0.0 {
        if (pa.constraint - c0).abs() <= g_tol || ua <= u_floor {
            let saturated = pa.constraint - c0 < -g_tol;
            return finish(ch, pa, c0, inner, outer, saturated);
        }
        let next = (ua - step).max(u_floor);
        found_b = Some((ua, pa));
        ua = next;
        pa = eval(ua)?;
    }
    // high side: description rate within the budget
    let (mut ub, mut pb) = match found_b {
        Some(b) => b,
        None => {
            let mut ub = logit(1.0 - MU_LO);
            let mut pb = eval(ub)?;
            while pb.constraint - c0 > 0.0 && ub < u_ceil {
                ua = ub;
                pa = pb;
                ub = (ub + step).min(u_ceil);
                pb = eval(ub)?;
            }
            (ub, pb)
        }
    };
    if pb.constraint - c0 > g_tol {
        // even μ → 1 describes too much: share with the unused relay
        let unused = relay_unused(ch, opts.power())?;
        let run = InnerRun {
            mu: 1.0 - MU_FLOOR,
            s_x: unused.s_x,
            quantizer: unused.quantizer,
            allocation: unused.allocation,
            objective: unused.objective,
            constraint: 0.0,
            trace: unused.trace,
            alternations: 0,
            input_residual: f64::NAN,
        };
        pa = pb;
        pb = run;
        return timeshare(ch, pa, pb, c0, inner, outer);
    }
    if (pb.constraint - c0).abs() <= g_tol {
        return finish(ch, pb, c0, inner, outer, false);
    }
    let (mut ga, mut gb) = (pa.constraint - c0, pb.constraint - c0);
    let mut side = 0i32;
    let mut k = 0usize;
    while sigmoid(ub) - sigmoid(ua) >= MU_WIDTH && ub - ua > 1e-13 {
        // Illinois steps interleaved with bisection
        let u = if k.is_multiple_of(2) {
            let secant = (ua * gb - ub * ga) / (gb - ga);
            if secant.is_finite() && secant > ua && secant < ub {
                secant
            } else {
                0.5 * (ua + ub)
            }
        } else {
            0.5 * (ua + ub)
        };
        k += 1;
        let pm = eval(u)?;
        let gm = pm.constraint - c0;
        if gm.abs() <= g_tol {
            return finish(ch, pm, c0, inner, outer, false);
        }
        if gm > 0.0 {
            ua = u;
            ga = gm;
            pa = pm;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            ub = u;
            gb = gm;
            pb = pm;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
    }
    let jump = (pa.constraint - c0 > 1e-3 * c0) && (c0 - pb.constraint > 1e-3 * c0);
    if jump {
        return timeshare(ch, pa, pb, c0, inner, outer);
    }
    let rate_a = cf_rate_minform(ch, &pa.s_x, &pa.quantizer, c0)?;
    let rate_b = cf_rate_minform(ch, &pb.s_x, &pb.quantizer, c0)?;
    if rate_a > rate_b {
        finish(ch, pa, c0, inner, outer, false)
    } else {
        finish(ch, pb, c0, inner, outer, false)
    }
}

fn timeshare(
    ch: &ChannelRealization,
    low: InnerRun,
    high: InnerRun,
    c0: f64,
    inner: usize,
    outer: usize,
) -> Result<JointOptResult> {
    let theta = ((c0 - high.constraint) / (low.constraint - high.constraint)).clamp(0.0, 1.0);
    let rate = theta * low.objective + (1.0 - theta) * high.objective;
    let ts = Timeshare {
        theta,
        low: OperatingPoint::from(&low),
        high: OperatingPoint::from(&high),
    };
    let mut out = finish(ch, high, c0, inner, outer, false)?;
    out.rate = rate;
    out.constraint = theta * low.constraint + (1.0 - theta) * out.constraint;
    out.objective = rate;
    out.timeshare = Some(ts);
    Ok(out)
}

/// Maximizes the compress-and-forward rate under relay budget `c0`.
pub fn optimize_cf(ch: &ChannelRealization, c0: f64, opts: &CfOptions) -> Result<JointOptResult> {
    if !(c0 >= 0.0) {
        return precondition(format!("relay budget must be non-negative, got {c0}"));
    }
    if c0 == 0.0 {
        return relay_unused(ch, opts.power());
    }
    let mut best: Option<JointOptResult> = None;
    for init in resolve_starts(ch, c0, opts)? {
        let res = search_mu(ch, c0, &init, opts)?;
        if best.as_ref().is_none_or(|b| res.rate > b.rate) {
            best = Some(res);
        }
    }
    Ok(best.expect("at least one start"))
}

/// First-order optimality measures of a joint solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖S − Π(S + ∇_S L)‖_F / P`.
    pub input: f64,
    /// Largest scaled derivative of the Lagrangian over the transformed
    /// quantizer noise levels.
    pub quantizer: f64,
    /// `|μ (f_c − c0)|`.
    pub slackness: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.input.max(self.quantizer).max(self.slackness)
    }
}

pub fn kkt_residuals(ch: &ChannelRealization, res: &JointOptResult, c0: f64, power: f64) -> Result<KktResiduals> {
    let mu = res.mu;
    let slackness = (mu * (res.constraint - c0)).abs();
    if res.quantizer.is_dropped() && res.constraint == 0.0 && c0 == 0.0 {
        // relay unused: the input is water-filling against the direct link
        let obj = crate::input::LogDetObjective::new(vec![crate::input::LogDetTerm {
            weight: 1.0,
            gain: ch.h_sd().clone(),
            noise: ch.dest_noise_covariance(),
        }]);
        let grad = obj.gradient(&res.s_x)?;
        return Ok(KktResiduals {
            input: stationarity_residual(&res.s_x, &grad, power) / power,
            quantizer: 0.0,
            slackness,
        });
    }
    if !(mu > 0.0 && mu < 1.0) {
        return precondition(format!("multiplier {mu} outside (0,1)"));
    }
    let input = input_residual(ch, &res.s_x, &res.quantizer, mu, power)?;
    let gen = &res.allocation.gen_eig;
    let mut quantizer = 0.0f64;
    for (&lambda, &sigma) in gen.eigenvalues.iter().zip(&res.allocation.sigma_q_diag) {
        let r = if sigma.is_finite() {
            // Σ ∂/∂Σ [(1−μ) ln(λ+Σ) − ln(1+Σ) + μ ln Σ]
            sigma * ((1.0 - mu) / (lambda + sigma) - 1.0 / (1.0 + sigma)) + mu
        } else {
            ((1.0 - mu) * lambda - 1.0).max(0.0)
        };
        quantizer = quantizer.max(r.abs());
    }
    Ok(KktResiduals {
        input,
        quantizer,
        slackness,
    })
}

#[derive(Debug, Clone)]
pub struct RatePoint {
    pub c0: f64,
    pub result: JointOptResult,
    /// The point was taken over from a smaller budget because the search at
    /// this budget returned less.
    pub carried: bool,
}

/// `optimize_cf` over an ascending grid, warm-starting each point with the
/// previous input.
pub fn rate_curve(ch: &ChannelRealization, c0_grid: &[f64], opts: &CfOptions) -> Result<Vec<RatePoint>> {
    if c0_grid.windows(2).any(|w| w[1] < w[0]) {
        return precondition("c0 grid must be sorted ascending");
    }
    let mut out: Vec<RatePoint> = Vec::with_capacity(c0_grid.len());
    for &c0 in c0_grid {
        let mut local = opts.clone();
        if let Some(prev) = out.last() {
            local = local.with_start(StartPoint::Given(prev.result.s_x.clone()));
        }
        let res = optimize_cf(ch, c0, &local)?;
        match out.last() {
            Some(prev) if res.rate < prev.result.rate => {
                let result = prev.result.clone();
                out.push(RatePoint {
                    c0,
                    result,
                    carried: true,
                });
            }
            _ => out.push(RatePoint {
                c0,
                result: res,
                carried: false,
            }),
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of `S_X`, for feasibility checks.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    eigh(m).values.last().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::AntennaProfile;
    use crate::input::cutset_bound;
    use crate::linalg::{diag, real, zeros};
    use crate::rates::{cf_constraint, cf_objective, full_rate};
    use crate::scenario::rayleigh_channel;

    fn scalar(v: f64) -> CMatrix {
        real(1, 1, &[v])
    }

    #[test]
    fn scalar_inner_converges_quickly() {
        let ch = ChannelRealization::new(scalar(1.2), scalar(0.7), zeros(1, 0), zeros(1, 0), 1.0, None).unwrap();
        let run = inner_coordinate_ascent(&ch, 0.3, &scalar(2.0), &CfOptions::new(2.0)).unwrap();
        assert!(run.alternations <= 2);
        assert!(run.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    }

    #[test]
    fn inner_matches_grid_oracle() {
        // real diagonal channel without interference: optimum is diagonal
        let ch = ChannelRealization::new(diag(&[1.3, 0.6]), diag(&[0.4, 0.9]), zeros(2, 0), zeros(2, 0), 0.5, None).unwrap();
        let mu = 0.4;
        let opts = CfOptions::new(2.0);
        let run = inner_coordinate_ascent(&ch, mu, &isotropic(2, 2.0), &opts).unwrap();
        let n = 60;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=n {
            let p1 = 2.0 * i as f64 / n as f64;
            let s = diag(&[p1, 2.0 - p1]);
            for a in 0..=n {
                for b in 0..=n {
                    let level = |k: usize| if k == n { f64::INFINITY } else { (-6.0 + 12.0 * k as f64 / n as f64).exp() };
                    let (sa, sb) = (level(a), level(b));
                    let gen = gen_eig_system(&ch, &s).unwrap();
                    let q = RelayQuantizer::from_transformed(&gen, &[sa, sb]);
                    let l = cf_objective(&ch, &s, &q).unwrap() - mu * cf_constraint(&ch, &s, &q).unwrap();
                    best = best.max(l);
                }
            }
        }
        assert!(run.lagrangian() >= best - 1e-9, "{} vs {best}", run.lagrangian());
        assert!(run.lagrangian() - best < 1e-2);
    }

    #[test]
    fn zero_budget_is_direct_link_optimum() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let ch = rayleigh_channel(AntennaProfile::new(2, 2, 2, 1).unwrap(), 0.1, &mut rng);
        let res = optimize_cf(&ch, 0.0, &CfOptions::new(1.0)).unwrap();
        let cut = cutset_bound(&ch, 0.0, &InputOptConfig::new(1.0)).unwrap();
        assert!((res.rate - cut.value).abs() < 1e-9);
        assert!(res.quantizer.is_dropped());
    }

    #[test]
    fn huge_budget_saturates_at_pooled_capacity() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let ch = rayleigh_channel(AntennaProfile::new(2, 2, 2, 2).unwrap(), 0.1, &mut rng);
        let res = optimize_cf(&ch, 1e4, &CfOptions::new(1.0)).unwrap();
        let cap = full_rate(&ch, &waterfilling_pooled(&ch, 1.0).unwrap()).unwrap();
        assert!((res.rate - cap).abs() < 1e-3, "{} vs {cap}", res.rate);
    }

    #[test]
    fn scalar_correlated_noise_matches_grid_over_q() {
        let ch = ChannelRealization::new(scalar(0.9), scalar(0.5), scalar(1.1), scalar(0.8), 0.2, None).unwrap();
        let p = 1.5;
        let c0 = 0.7;
        let res = optimize_cf(&ch, c0, &CfOptions::new(p)).unwrap();
        let sx = scalar(p);
        let mut best = 0.0f64;
        for k in 0..=200_000 {
            let q = (-12.0 + 24.0 * k as f64 / 200_000.0).exp();
            let quant = RelayQuantizer::from_covariance(&scalar(q)).unwrap();
            if cf_constraint(&ch, &sx, &quant).unwrap() <= c0 {
                best = best.max(cf_objective(&ch, &sx, &quant).unwrap());
            }
        }
        assert!((res.rate - best).abs() < 1e-4, "{} vs {best}", res.rate);
    }

    #[test]
    fn curve_is_monotone_and_below_cutset() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let ch = rayleigh_channel(AntennaProfile::new(2, 2, 2, 2).unwrap(), 0.05, &mut rng);
        let opts = CfOptions::new(1.0);
        let grid: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let curve = rate_curve(&ch, &grid, &opts).unwrap();
        let base = curve[0].result.rate;
        for w in curve.windows(2) {
            assert!(w[1].result.rate >= w[0].result.rate - 1e-6);
        }
        for pt in &curve {
            let cut = cutset_bound(&ch, pt.c0, &opts.input).unwrap().value;
            assert!(pt.result.rate <= cut + 1e-6);
            assert!(pt.result.rate - base <= pt.c0 + 1e-9);
            if !pt.carried && pt.result.timeshare.is_none() {
                let k = kkt_residuals(&ch, &pt.result, pt.c0, 1.0).unwrap();
                assert!(k.max() <= 1e-5, "{k:?} at {}", pt.c0);
            }
        }
    }
}
