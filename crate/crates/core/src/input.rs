//! Transmit covariance design: weighted log-det maximization by projected
//! gradient ascent, water-filling, and the cut-set bound.

use std::f64::consts::LN_2;

use crate::channel::ChannelRealization;
use crate::error::{precondition, Error, Result};
use crate::linalg::{self, eigh, hermitian_part, identity, inner, project_trace_psd, CMatrix};
use crate::rates::{dest_only_rate, effective_observation, full_rate, RelayQuantizer};

/// Settings for the projected-gradient solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputOptConfig {
    pub power: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub step_init: f64,
}

impl InputOptConfig {
    pub fn new(power: f64) -> Self {
        Self {
            power,
            grad_tol: 1e-7,
            max_iters: 5000,
            step_init: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.power > 0.0 && self.power.is_finite()) {
            return precondition(format!("power must be positive, got {}", self.power));
        }
        if !(self.grad_tol > 0.0 && self.step_init > 0.0) || self.max_iters == 0 {
            return precondition("solver tolerances and limits must be positive");
        }
        Ok(())
    }
}

pub(crate) const ARMIJO: f64 = 1e-4;
pub(crate) const BACKTRACK: f64 = 0.5;
pub(crate) const MIN_STEP: f64 = 1e-30;

/// One term `w · log2(|A S A† + N| / |N|)`.
#[derive(Debug, Clone)]
pub struct LogDetTerm {
    pub weight: f64,
    pub gain: CMatrix,
    pub noise: CMatrix,
}

/// Concave objective `Σ_k w_k log2 |A_k S A_k† + N_k| / |N_k|` over `S ⪰ 0`.
#[derive(Debug, Clone)]
pub struct LogDetObjective {
    pub terms: Vec<LogDetTerm>,
}

struct Evaluated {
    value: f64,
    grad: CMatrix,
    /// Cholesky factors of each `A S A† + N`.
    factors: Vec<CMatrix>,
}

impl LogDetObjective {
    pub fn new(terms: Vec<LogDetTerm>) -> Self {
        Self {
            terms: terms.into_iter().filter(|t| t.weight != 0.0).collect(),
        }
    }

    pub fn value(&self, s: &CMatrix) -> Result<f64> {
        let mut total = 0.0;
        for t in &self.terms {
            let w = hermitian_part(&(&t.gain * s * t.gain.adjoint())) + &t.noise;
            let a = linalg::logdet2_pd(&w).ok_or_else(|| Error::Singular("log-det argument".into()))?;
            let b = linalg::logdet2_pd(&t.noise).ok_or_else(|| Error::Singular("log-det noise".into()))?;
            total += t.weight * (a - b);
        }
        Ok(total)
    }

    /// Gradient `Σ w A† (A S A† + N)⁻¹ A / ln 2`.
    pub fn gradient(&self, s: &CMatrix) -> Result<CMatrix> {
        Ok(self.evaluate(s)?.grad)
    }

    fn evaluate(&self, s: &CMatrix) -> Result<Evaluated> {
        let n = s.nrows();
        let mut grad = CMatrix::zeros(n, n);
        let mut value = 0.0;
        let mut factors = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let w = hermitian_part(&(&t.gain * s * t.gain.adjoint())) + &t.noise;
            let chol = nalgebra::Cholesky::new(w).ok_or_else(|| Error::Singular("log-det argument".into()))?;
            let l = chol.l();
            let la = l
                .solve_lower_triangular(&t.gain)
                .ok_or_else(|| Error::Singular("triangular solve".into()))?;
            grad += (la.adjoint() * &la).scale(t.weight / LN_2);
            let ld: f64 = (0..l.nrows()).map(|i| l[(i, i)].re.log2()).sum::<f64>() * 2.0;
            let ln = linalg::logdet2_pd(&t.noise).ok_or_else(|| Error::Singular("log-det noise".into()))?;
            value += t.weight * (ld - ln);
            factors.push(l);
        }
        Ok(Evaluated {
            value,
            grad: hermitian_part(&grad),
            factors,
        })
    }

    /// `value(s + delta) − value(s)` without cancellation, from the factors
    /// at `s`.
    fn increment(&self, at: &Evaluated, delta: &CMatrix) -> Option<f64> {
        let mut total = 0.0;
        for (t, l) in self.terms.iter().zip(&at.factors) {
            let la = l.solve_lower_triangular(&t.gain)?;
            let m = hermitian_part(&(&la * delta * la.adjoint()));
            for e in eigh(&m).values {
                if e <= -1.0 {
                    return None;
                }
                total += t.weight * e.ln_1p() / LN_2;
            }
        }
        Some(total)
    }
}

/// Outcome of a projected-gradient run.
#[derive(Debug, Clone)]
pub struct InputSolution {
    pub s_x: CMatrix,
    pub value: f64,
    pub iterations: usize,
    /// `‖S − Π(S + ∇)‖_F / P` at the returned point.
    pub residual: f64,
    /// Objective value after each accepted step, starting at the initial point.
    pub trace: Vec<f64>,
}

/// First-order optimality residual `‖S − Π(S + ∇)‖_F`.
pub fn stationarity_residual(s: &CMatrix, grad: &CMatrix, power: f64) -> f64 {
    (s - project_trace_psd(&(s + grad), power)).norm()
}

/// Maximizes `obj` over `{S ⪰ 0, tr S ≤ P}` from `init` (projected first).
///
/// Steps start from a Barzilai–Borwein estimate and are backtracked until
/// the Armijo condition holds, so objective values never decrease.
pub fn maximize_logdet(obj: &LogDetObjective, init: &CMatrix, cfg: &InputOptConfig) -> Result<InputSolution> {
    cfg.validate()?;
    let power = cfg.power;
    let mut s = project_trace_psd(init, power);
    let mut cur = obj.evaluate(&s)?;
    let mut trace = vec![cur.value];
    let mut step = cfg.step_init;
    let mut prev: Option<(CMatrix, CMatrix)> = None;
    for it in 0..cfg.max_iters {
        let residual = stationarity_residual(&s, &cur.grad, power);
        if residual <= cfg.grad_tol * power {
            return Ok(InputSolution {
                value: cur.value,
                s_x: s,
                iterations: it,
                residual: residual / power,
                trace,
            });
        }
        if let Some((ds, dg)) = &prev {
            let sy = -inner(ds, dg);
            if sy > 0.0 {
                step = (ds.norm_squared() / sy).clamp(1e-12 * cfg.step_init, 1e12 * cfg.step_init);
            }
        }
        let mut accepted = None;
        while step >= MIN_STEP {
            let cand = project_trace_psd(&(&s + cur.grad.scale(step)), power);
            let delta = &cand - &s;
            let predicted = inner(&cur.grad, &delta);
            if predicted <= 0.0 {
                break;
            }
            if let Some(gain) = obj.increment(&cur, &delta) {
                if gain >= ARMIJO * predicted {
                    accepted = Some((cand, delta, gain));
                    break;
                }
            }
            step *= BACKTRACK;
        }
        let Some((cand, delta, gain)) = accepted else {
            // no ascent direction left at working precision
            return Ok(InputSolution {
                value: cur.value,
                s_x: s,
                iterations: it,
                residual: residual / power,
                trace,
            });
        };
        let next = obj.evaluate(&cand)?;
        let dg = &next.grad - &cur.grad;
        let value = cur.value + gain;
        s = cand;
        cur = next;
        cur.value = value;
        trace.push(value);
        prev = Some((delta, dg));
    }
    let residual = stationarity_residual(&s, &cur.grad, power);
    Err(Error::NotConverged {
        iterations: cfg.max_iters,
        residual: residual / power,
        last: Box::new(s),
    })
}

/// Lagrangian in `S_X` for a fixed quantizer:
/// `(1−μ) log|G S G† + N| + μ log|H_SD S H_SD† + K_22|` up to constants.
pub fn lagrangian_input_objective(ch: &ChannelRealization, q: &RelayQuantizer, mu: f64) -> LogDetObjective {
    let (gain, noise) = effective_observation(ch, q);
    LogDetObjective::new(vec![
        LogDetTerm {
            weight: 1.0 - mu,
            gain,
            noise,
        },
        LogDetTerm {
            weight: mu,
            gain: ch.h_sd().clone(),
            noise: ch.dest_noise_covariance(),
        },
    ])
}

/// Best `S_X` for a fixed quantizer and multiplier.
pub fn maximize_lagrangian_input(
    ch: &ChannelRealization,
    q: &RelayQuantizer,
    mu: f64,
    cfg: &InputOptConfig,
    init: Option<&CMatrix>,
) -> Result<InputSolution> {
    if !(mu > 0.0 && mu < 1.0) {
        return precondition(format!("mu must lie in (0,1), got {mu}"));
    }
    let s = ch.profile().s;
    let start = init.cloned().unwrap_or_else(|| isotropic(s, cfg.power));
    maximize_logdet(&lagrangian_input_objective(ch, q, mu), &start, cfg)
}

/// `(P/s) I`.
pub fn isotropic(s: usize, power: f64) -> CMatrix {
    identity(s).scale(power / s as f64)
}

/// Capacity-achieving covariance for `y = G x + n`, `n ~ CN(0, noise)`.
pub fn waterfilling_input(gain: &CMatrix, noise: &CMatrix, power: f64) -> Result<CMatrix> {
    if !(power > 0.0) {
        return precondition(format!("power must be positive, got {power}"));
    }
    let l = nalgebra::Cholesky::new(hermitian_part(noise))
        .ok_or_else(|| Error::Singular("noise covariance is not positive definite".into()))?
        .l();
    let white = l
        .solve_lower_triangular(gain)
        .ok_or_else(|| Error::Singular("triangular solve".into()))?;
    let eig = eigh(&hermitian_part(&(white.adjoint() * &white)));
    let gmax = eig.values.first().copied().unwrap_or(0.0);
    let gains: Vec<f64> = eig
        .values
        .iter()
        .copied()
        .take_while(|&g| g > 1e-14 * gmax && g > 0.0)
        .collect();
    let n = gain.ncols();
    if gains.is_empty() {
        return Ok(CMatrix::zeros(n, n));
    }
    let mut level = 0.0;
    let mut inv_sum = 0.0;
    for (k, &g) in gains.iter().enumerate() {
        inv_sum += 1.0 / g;
        let candidate = (power + inv_sum) / (k + 1) as f64;
        let next_floor = gains.get(k + 1).map_or(f64::INFINITY, |&g| 1.0 / g);
        if candidate <= next_floor {
            level = candidate;
            break;
        }
    }
    let alloc: Vec<f64> = (0..n)
        .map(|k| gains.get(k).map_or(0.0, |&g| (level - 1.0 / g).max(0.0)))
        .collect();
    let mut scaled = eig.vectors.clone();
    for (j, &p) in alloc.iter().enumerate() {
        scaled.column_mut(j).scale_mut(p.sqrt());
    }
    Ok(hermitian_part(&(&scaled * scaled.adjoint())))
}

/// Water-filling against the source–destination link alone.
pub fn waterfilling_dest(ch: &ChannelRealization, power: f64) -> Result<CMatrix> {
    waterfilling_input(ch.h_sd(), &ch.dest_noise_covariance(), power)
}

/// Water-filling against the pooled relay and destination antennas.
pub fn waterfilling_pooled(ch: &ChannelRealization, power: f64) -> Result<CMatrix> {
    waterfilling_input(&ch.stacked_gain(), &ch.noise_covariance(), power)
}

/// Value of `max_S min{I(X;Y_R,Y_D), I(X;Y_D) + c0}` with its maximizer.
#[derive(Debug, Clone)]
pub struct CutsetResult {
    pub value: f64,
    pub s_x: CMatrix,
    /// Upper estimate from the weighted dual; equals `value` at convergence.
    pub dual_value: f64,
    /// Weight on the broadcast arm at the returned point.
    pub weight: f64,
    /// False when the weight search could not bracket the crossing and the
    /// better endpoint was returned.
    pub bracketed: bool,
}

fn weighted_cutset(ch: &ChannelRealization, w: f64) -> LogDetObjective {
    LogDetObjective::new(vec![
        LogDetTerm {
            weight: w,
            gain: ch.stacked_gain(),
            noise: ch.noise_covariance(),
        },
        LogDetTerm {
            weight: 1.0 - w,
            gain: ch.h_sd().clone(),
            noise: ch.dest_noise_covariance(),
        },
    ])
}

/// Cut-set upper bound by bisection on the arm weight.
pub fn cutset_bound(ch: &ChannelRealization, c0: f64, cfg: &InputOptConfig) -> Result<CutsetResult> {
    cfg.validate()?;
    if !(c0 >= 0.0) {
        return precondition(format!("relay budget must be non-negative, got {c0}"));
    }
    let arms = |s: &CMatrix| -> Result<(f64, f64)> { Ok((full_rate(ch, s)?, dest_only_rate(ch, s)? + c0)) };
    let s1 = waterfilling_pooled(ch, cfg.power)?;
    let (a1, b1) = arms(&s1)?;
    if a1 <= b1 {
        return Ok(CutsetResult {
            value: a1,
            s_x: s1,
            dual_value: a1,
            weight: 1.0,
            bracketed: true,
        });
    }
    let s0 = waterfilling_dest(ch, cfg.power)?;
    let (a0, b0) = arms(&s0)?;
    if b0 <= a0 {
        return Ok(CutsetResult {
            value: b0,
            s_x: s0,
            dual_value: b0,
            weight: 0.0,
            bracketed: true,
        });
    }
    // crossing in (0, 1): a − b is increasing in w
    let (mut lo, mut hi) = (0.0, 1.0);
    let (mut s_lo, mut s_hi) = (s0.clone(), s1.clone());
    let (mut d_lo, mut d_hi) = (a0 - b0, a1 - b1);
    let mut best = if a0.min(b0) >= a1.min(b1) { (a0.min(b0), s0.clone(), 0.0) } else { (a1.min(b1), s1.clone(), 1.0) };
    let mut dual = a1.max(b0);
    let mut warm = linalg::hermitian_part(&((&s0 + &s1).scale(0.5)));
    let mut bracketed = true;
    for _ in 0..60 {
        let w = 0.5 * (lo + hi);
        let sol = match maximize_logdet(&weighted_cutset(ch, w), &warm, cfg) {
            Ok(sol) => sol,
            Err(Error::NotConverged { last, .. }) => {
                bracketed = false;
                let value = weighted_cutset(ch, w).value(&last)?;
                InputSolution {
                    s_x: *last,
                    value,
                    iterations: cfg.max_iters,
                    residual: f64::NAN,
                    trace: Vec::new(),
                }
            }
            Err(e) => return Err(e),
        };
        let (a, b) = arms(&sol.s_x)?;
        dual = dual.min(w * a + (1.0 - w) * b);
        if a.min(b) > best.0 {
            best = (a.min(b), sol.s_x.clone(), w);
        }
        warm = sol.s_x.clone();
        if a > b {
            hi = w;
            s_hi = sol.s_x;
            d_hi = a - b;
        } else {
            lo = w;
            s_lo = sol.s_x;
            d_lo = a - b;
        }
        // both arm solutions mixed so the arms meet on the segment
        let theta = d_hi / (d_hi - d_lo);
        let mix = hermitian_part(&(s_lo.scale(theta) + s_hi.scale(1.0 - theta)));
        let (am, bm) = arms(&mix)?;
        if am.min(bm) > best.0 {
            best = (am.min(bm), mix, w);
        }
        if dual - best.0 <= 1e-10 * best.0.abs().max(1.0) || hi - lo < 1e-12 {
            break;
        }
    }
    Ok(CutsetResult {
        value: best.0,
        s_x: best.1,
        dual_value: dual.max(best.0),
        weight: best.2,
        bracketed,
    })
}
