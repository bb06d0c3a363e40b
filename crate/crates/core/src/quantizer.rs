//! Closed-form quantization design for a fixed transmit covariance.
//!
//! After the congruence `C_R` whitens `S_{Y_R|Y_D,X}` and diagonalizes
//! `S_{Y_R|Y_D}` into `Λ`, the components of `C_R† Y_R` are conditionally
//! independent and the relay budget is split among them by reverse
//! water-filling on `log2(λ_i − 1)`.

use serde::Serialize;

use crate::channel::{conditionals_unchecked, ChannelRealization, RankProfile, RelayConditionals};
use crate::error::{precondition, Result};
use crate::linalg::{self, CMatrix, GenEigSystem};
use crate::rates::RelayQuantizer;

/// Generalized eigenvalues at or below `1 + REVERSELY_DEGRADED_TOL` are
/// treated as exactly one.
pub const REVERSELY_DEGRADED_TOL: f64 = 1e-9;

fn is_degraded(lambda: f64) -> bool {
    lambda <= 1.0 + REVERSELY_DEGRADED_TOL
}

/// Simultaneous diagonalization of `(S_{Y_R|Y_D,X}, S_{Y_R|Y_D})`.
pub fn gen_eig_system(ch: &ChannelRealization, s_x: &CMatrix) -> Result<GenEigSystem> {
    ch.check_input(s_x)?;
    gen_eig_from(&conditionals_unchecked(ch, s_x))
}

pub(crate) fn gen_eig_from(cond: &RelayConditionals) -> Result<GenEigSystem> {
    linalg::simdiag_with_slack(
        &cond.given_dest_input,
        &cond.given_dest,
        linalg::PSD_REL_SLACK * cond.scale,
    )
}

/// Per-component rates and noise levels of a transformed quantizer.
#[derive(Debug, Clone)]
pub struct QuantAllocation {
    pub gen_eig: GenEigSystem,
    /// `c_i` in bits, non-increasing.
    pub rates_c: Vec<f64>,
    /// `Σ_Q^{ii}`, `+∞` for components that are not described.
    pub sigma_q_diag: Vec<f64>,
    /// Lagrange multiplier, which is also the slope `dR̄/dC_0`.
    pub mu: f64,
}

impl QuantAllocation {
    pub fn quantizer(&self) -> RelayQuantizer {
        RelayQuantizer::from_transformed(&self.gen_eig, &self.sigma_q_diag)
    }

    pub fn total_rate(&self) -> f64 {
        self.rates_c.iter().sum()
    }

    pub fn active_count(&self) -> usize {
        self.sigma_q_diag.iter().filter(|v| v.is_finite()).count()
    }

    /// Components receiving no rate.
    pub fn zero_rate_count(&self) -> usize {
        self.rates_c.iter().filter(|&&c| c == 0.0).count()
    }
}

fn log2_csinr(lambda: f64) -> f64 {
    if is_degraded(lambda) {
        f64::NEG_INFINITY
    } else {
        (lambda - 1.0).log2()
    }
}

/// `Σ = λ / (2^c − 1)`, accurate for small `c`.
fn noise_for_rate(lambda: f64, c: f64) -> f64 {
    lambda / (c * std::f64::consts::LN_2).exp_m1()
}

/// Optimal allocation for multiplier `mu`.
pub fn allocation_for_mu(gen: &GenEigSystem, mu: f64) -> Result<QuantAllocation> {
    if !(mu > 0.0 && mu < 1.0) {
        return precondition(format!("mu must lie in (0,1), got {mu}"));
    }
    let threshold = (mu / (1.0 - mu)).log2();
    let mut rates_c = Vec::with_capacity(gen.dim());
    let mut sigma_q_diag = Vec::with_capacity(gen.dim());
    for &lambda in &gen.eigenvalues {
        let c = (log2_csinr(lambda) - threshold).max(0.0);
        rates_c.push(c);
        sigma_q_diag.push(if c > 0.0 { noise_for_rate(lambda, c) } else { f64::INFINITY });
    }
    Ok(QuantAllocation {
        gen_eig: gen.clone(),
        rates_c,
        sigma_q_diag,
        mu,
    })
}

/// Optimal quantizer for fixed `S_X` and multiplier `mu`.
pub fn quantizer_for_mu(ch: &ChannelRealization, s_x: &CMatrix, mu: f64) -> Result<(RelayQuantizer, QuantAllocation)> {
    if !(mu > 0.0 && mu < 1.0) {
        return precondition(format!("mu must lie in (0,1), got {mu}"));
    }
    let alloc = allocation_for_mu(&gen_eig_system(ch, s_x)?, mu)?;
    Ok((alloc.quantizer(), alloc))
}

/// Splits a budget `c0` by reverse water-filling and returns the allocation
/// with the slope `μ*(c0)`.
pub fn allocation_for_budget(gen: &GenEigSystem, c0: f64) -> Result<(QuantAllocation, f64)> {
    if !(c0 >= 0.0) {
        return precondition(format!("relay budget must be non-negative, got {c0}"));
    }
    let levels: Vec<f64> = gen.eigenvalues.iter().map(|&l| log2_csinr(l)).collect();
    let usable = levels.iter().take_while(|l| l.is_finite()).count();
    let r = gen.dim();
    let mut rates_c = vec![0.0; r];
    let mut sigma_q_diag = vec![f64::INFINITY; r];
    if usable == 0 {
        let alloc = QuantAllocation {
            gen_eig: gen.clone(),
            rates_c,
            sigma_q_diag,
            mu: 0.0,
        };
        return Ok((alloc, 0.0));
    }
    // water level τ = log2(μ/(1−μ)); with k active components Σ (ℓ_i − τ) = c0
    let mut level = levels[0];
    let mut prefix = 0.0;
    for k in 1..=usable {
        prefix += levels[k - 1];
        let tau = (prefix - c0) / k as f64;
        let next = if k < usable { levels[k] } else { f64::NEG_INFINITY };
        if tau >= next {
            level = tau;
            break;
        }
    }
    if c0 > 0.0 {
        for i in 0..usable {
            let c = levels[i] - level;
            if c > 0.0 {
                rates_c[i] = c;
                sigma_q_diag[i] = noise_for_rate(gen.eigenvalues[i], c);
            }
        }
    }
    // μ = 1/(1 + 2^{−τ})
    let mu = 1.0 / (1.0 + (-level).exp2());
    let alloc = QuantAllocation {
        gen_eig: gen.clone(),
        rates_c,
        sigma_q_diag,
        mu,
    };
    Ok((alloc, mu))
}

/// Critical budgets and slopes of `R̄_CF` for a fixed input.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeProfile {
    /// `C̄_{0,i}`; `+∞` for reversely degraded components.
    pub critical_budgets: Vec<f64>,
    /// `1 − 1/λ_i`.
    pub slopes_at_critical: Vec<f64>,
    pub n_reversely_degraded: usize,
    pub n_asymptotically_deterministic: usize,
    /// Whether at least `(r − s^r)^+` components are reversely degraded.
    pub degraded_bound_holds: bool,
}

pub fn slope_profile(gen: &GenEigSystem, ranks: &RankProfile) -> SlopeProfile {
    let levels: Vec<f64> = gen.eigenvalues.iter().map(|&l| log2_csinr(l)).collect();
    let mut critical_budgets = Vec::with_capacity(levels.len());
    let mut prefix = 0.0;
    for (i, &li) in levels.iter().enumerate() {
        if li.is_finite() {
            critical_budgets.push(prefix - i as f64 * li);
            prefix += li;
        } else {
            critical_budgets.push(f64::INFINITY);
        }
    }
    let n_reversely_degraded = gen.eigenvalues.iter().filter(|&&l| is_degraded(l)).count();
    let r = gen.dim();
    SlopeProfile {
        critical_budgets,
        slopes_at_critical: gen.eigenvalues.iter().map(|&l| 1.0 - 1.0 / l).collect(),
        n_reversely_degraded,
        n_asymptotically_deterministic: ranks.deterministic_components(),
        degraded_bound_holds: n_reversely_degraded >= r.saturating_sub(ranks.s_rank),
    }
}

/// Quantizer with `Σ^{ii} = λ_i/(λ_i − 1)`, degraded components dropped.
pub fn constant_gap_quantizer(ch: &ChannelRealization, s_x: &CMatrix) -> Result<RelayQuantizer> {
    let gen = gen_eig_system(ch, s_x)?;
    let sigma: Vec<f64> = gen
        .eigenvalues
        .iter()
        .map(|&l| if is_degraded(l) { f64::INFINITY } else { l / (l - 1.0) })
        .collect();
    Ok(RelayQuantizer::from_transformed(&gen, &sigma))
}

/// `Σ_i log2(1 + e_i/q)` with `y = log2 q`, stable for extreme `y`.
fn iid_rate(eig: &[f64], y: f64) -> f64 {
    eig.iter()
        .map(|&e| {
            let z = e.log2() - y;
            if z > 0.0 {
                z + (-z).exp2().ln_1p() / std::f64::consts::LN_2
            } else {
                z.exp2().ln_1p() / std::f64::consts::LN_2
            }
        })
        .sum()
}

/// Scaled-identity noise `q I` after `combiner` (identity when `None`)
/// with `q` chosen so that the description rate equals `c0`.
pub fn iid_quantizer_for_budget(
    ch: &ChannelRealization,
    s_x: &CMatrix,
    combiner: Option<&CMatrix>,
    c0: f64,
) -> Result<RelayQuantizer> {
    ch.check_input(s_x)?;
    if !(c0 >= 0.0) {
        return precondition(format!("relay budget must be non-negative, got {c0}"));
    }
    let r = ch.profile().r;
    let combiner = combiner.cloned().unwrap_or_else(|| linalg::identity(r));
    if c0 == 0.0 || combiner.nrows() == 0 {
        return Ok(RelayQuantizer::dropped(r));
    }
    let cond = conditionals_unchecked(ch, s_x).given_dest;
    let seen = linalg::hermitian_part(&(&combiner * cond * combiner.adjoint()));
    let eig: Vec<f64> = linalg::eigh(&seen).values.into_iter().filter(|&e| e > 0.0).collect();
    if eig.is_empty() {
        return Ok(RelayQuantizer::dropped(r));
    }
    let emax = eig[0];
    let k = eig.len() as f64;
    // rate(lo) ≥ c0 ≥ rate(hi)
    let mut lo = emax.log2() - c0;
    let mut hi = (k * emax / (c0 * std::f64::consts::LN_2)).log2();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if iid_rate(&eig, mid) > c0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(RelayQuantizer::iid(combiner, hi.exp2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{conditional_covariances, noiseless_rank_profile, AntennaProfile};
    use crate::linalg::{identity, zeros};
    use crate::rates::{cf_constraint, cf_objective};
    use crate::scenario::rayleigh_channel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn system(lambdas: &[f64]) -> GenEigSystem {
        GenEigSystem {
            transform: identity(lambdas.len()),
            eigenvalues: lambdas.to_vec(),
        }
    }

    #[test]
    fn single_component_example() {
        let a = allocation_for_mu(&system(&[5.0]), 0.5).unwrap();
        assert!((a.rates_c[0] - 2.0).abs() < 1e-12);
        assert!((a.sigma_q_diag[0] - 5.0 / 3.0).abs() < 1e-12);
        // 1-D grid of the per-component Lagrangian
        let obj = |c: f64| 0.5 * c - (c.exp2() + 4.0).log2();
        let best = (0..=40000).map(|i| i as f64 * 1e-4).max_by(|x, y| obj(*x).total_cmp(&obj(*y))).unwrap();
        assert!((best - 2.0).abs() < 2e-4);
    }

    #[test]
    fn large_multiplier_drops_everything() {
        let a = allocation_for_mu(&system(&[3.0, 1.5, 1.0]), 0.9).unwrap();
        assert_eq!(a.active_count(), 0);
        assert_eq!(a.total_rate(), 0.0);
        let a = allocation_for_mu(&system(&[3.0, 1.0]), 1e-6).unwrap();
        assert_eq!(a.rates_c[1], 0.0);
        assert!(allocation_for_mu(&system(&[3.0]), 1.0).is_err());
        assert!(allocation_for_mu(&system(&[3.0]), 0.0).is_err());
    }

    #[test]
    fn budget_split_at_second_critical_point() {
        let gen = system(&[5.0, 3.0]);
        let (a, slope) = allocation_for_budget(&gen, 1.0).unwrap();
        assert!((a.rates_c[0] - 1.0).abs() < 1e-12);
        assert_eq!(a.rates_c[1], 0.0);
        assert!((slope - 2.0 / 3.0).abs() < 1e-12);
        let (_, slope0) = allocation_for_budget(&gen, 0.0).unwrap();
        assert!((slope0 - 0.8).abs() < 1e-12);
        // brute force over c1 + c2 = 1 of the objective Σ log2(λ(2^c)/(2^c+λ−1))
        let value = |c1: f64, c2: f64| {
            let t = |c: f64, l: f64| (l * c.exp2() / (c.exp2() + l - 1.0)).log2();
            t(c1, 5.0) + t(c2, 3.0)
        };
        let best = (0..=10000)
            .map(|i| i as f64 * 1e-4)
            .max_by(|x, y| value(*x, 1.0 - x).total_cmp(&value(*y, 1.0 - y)))
            .unwrap();
        assert!((best - 1.0).abs() < 2e-4);
    }

    #[test]
    fn budget_is_spent_exactly() {
        let gen = system(&[40.0, 9.0, 2.5, 1.0]);
        for &c0 in &[0.3, 2.0, 5.0, 11.0, 60.0] {
            let (a, mu) = allocation_for_budget(&gen, c0).unwrap();
            assert!((a.total_rate() - c0).abs() < 1e-9 * c0.max(1.0));
            assert!(a.rates_c.windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(a.rates_c[3], 0.0);
            let via_mu = allocation_for_mu(&gen, mu).unwrap();
            for (x, y) in a.rates_c.iter().zip(&via_mu.rates_c) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn degraded_only_gives_zero_slope() {
        let (a, slope) = allocation_for_budget(&system(&[1.0, 1.0]), 3.0).unwrap();
        assert_eq!(slope, 0.0);
        assert_eq!(a.active_count(), 0);
    }

    #[test]
    fn useless_relay_has_unit_eigenvalues() {
        let ch = ChannelRealization::new(zeros(2, 2), identity(2), zeros(2, 0), zeros(2, 0), 1.0, None).unwrap();
        let gen = gen_eig_system(&ch, &identity(2)).unwrap();
        assert!(gen.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-12));
    }

    #[test]
    fn scalar_eigenvalue_is_conditional_snr() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let ch = rayleigh_channel(AntennaProfile::new(2, 2, 1, 2).unwrap(), 0.4, &mut rng);
        let sx = identity(2);
        let cond = conditional_covariances(&ch, &sx).unwrap();
        let gen = gen_eig_system(&ch, &sx).unwrap();
        let (a, b) = (cond.given_dest[(0, 0)].re, cond.given_dest_input[(0, 0)].re);
        assert!((gen.eigenvalues[0] - 1.0 - (a - b) / b).abs() < 1e-10);
    }

    #[test]
    fn independent_noise_transform_is_scaled_unitary() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let ch = rayleigh_channel(AntennaProfile::new(3, 2, 3, 0).unwrap(), 0.25, &mut rng);
        let gen = gen_eig_system(&ch, &identity(3)).unwrap();
        let gram = gen.transform.adjoint() * &gen.transform;
        let off = gram.clone() - CMatrix::from_diagonal(&gram.diagonal());
        assert!(off.norm() < 1e-10);
        assert!((gram - identity(3).scale(4.0)).norm() < 1e-9);
    }

    #[test]
    fn slope_profile_values() {
        let gen = system(&[5.0, 3.0, 1.0]);
        let ranks = RankProfile {
            r_prime: 3,
            r_dprime: 1,
            s_rank: 2,
            r_prime_formula: 3,
            r_dprime_formula: 1,
        };
        let sp = slope_profile(&gen, &ranks);
        assert_eq!(sp.critical_budgets[0], 0.0);
        assert!((sp.critical_budgets[1] - 1.0).abs() < 1e-12);
        assert_eq!(sp.critical_budgets[2], f64::INFINITY);
        assert_eq!(sp.n_reversely_degraded, 1);
        assert_eq!(sp.n_asymptotically_deterministic, 2);
        assert!(sp.degraded_bound_holds);
    }

    #[test]
    fn slope_profile_fig2_profile() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let ch = rayleigh_channel(AntennaProfile::new(5, 2, 6, 7).unwrap(), 1e-3, &mut rng);
        let sx = identity(5);
        let sp = slope_profile(&gen_eig_system(&ch, &sx).unwrap(), &noiseless_rank_profile(&ch, &sx).unwrap());
        assert!(sp.n_reversely_degraded >= 1);
        assert_eq!(sp.n_asymptotically_deterministic, 1);
    }

    #[test]
    fn constant_gap_noise_and_gap_terms() {
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let ch = rayleigh_channel(AntennaProfile::new(2, 2, 3, 2).unwrap(), 0.3, &mut rng);
        let sx = identity(2);
        let q = constant_gap_quantizer(&ch, &sx).unwrap();
        // one component is reversely degraded since r > s
        assert_eq!(q.dim(), 2);
        let gen = gen_eig_system(&ch, &sx).unwrap();
        for &l in &gen.eigenvalues {
            assert!((2.0 - 1.0 / l).log2() <= 1.0);
        }
        let two = system(&[2.0]);
        let q = RelayQuantizer::from_transformed(&two, &[2.0 / (2.0 - 1.0)]);
        assert!((q.noise()[(0, 0)].re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn iid_quantizer_meets_budget() {
        let mut rng = ChaCha20Rng::seed_from_u64(14);
        let ch = rayleigh_channel(AntennaProfile::new(2, 3, 3, 4).unwrap(), 0.01, &mut rng);
        let sx = identity(2);
        for &c0 in &[0.01, 1.0, 7.0, 40.0] {
            let q = iid_quantizer_for_budget(&ch, &sx, None, c0).unwrap();
            let fc = cf_constraint(&ch, &sx, &q).unwrap();
            assert!((fc - c0).abs() < 1e-8 * c0.max(1.0), "{fc} vs {c0}");
        }
        assert!(iid_quantizer_for_budget(&ch, &sx, None, 0.0).unwrap().is_dropped());
    }

    #[test]
    fn budget_allocation_reproduces_constraint() {
        let mut rng = ChaCha20Rng::seed_from_u64(15);
        let ch = rayleigh_channel(AntennaProfile::new(3, 2, 3, 2).unwrap(), 0.05, &mut rng);
        let sx = identity(3);
        let gen = gen_eig_system(&ch, &sx).unwrap();
        for &c0 in &[0.5, 3.0, 9.0] {
            let (a, _) = allocation_for_budget(&gen, c0).unwrap();
            let fc = cf_constraint(&ch, &sx, &a.quantizer()).unwrap();
            assert!((fc - c0).abs() < 1e-9 * c0.max(1.0));
        }
        let mut prev = cf_objective(&ch, &sx, &RelayQuantizer::dropped(3)).unwrap();
        for i in 1..=30 {
            let (a, _) = allocation_for_budget(&gen, 0.3 * i as f64).unwrap();
            let v = cf_objective(&ch, &sx, &a.quantizer()).unwrap();
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}
