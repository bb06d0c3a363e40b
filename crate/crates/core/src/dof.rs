//! Degrees-of-freedom bookkeeping and the distributed zero-forcing combiner.

use serde::Serialize;

use crate::channel::{conditional_covariances, stack, AntennaProfile, ChannelRealization};
use crate::error::{precondition, Error, Result};
use crate::input::isotropic;
use crate::joint::{optimize_cf, CfOptions};
use crate::linalg::{eigh, hermitian_part, null_space, sqrt_psd, CMatrix};
use crate::quantizer::iid_quantizer_for_budget;
use crate::rates::{cf_rate_minform, dest_only_rate};

fn pos(x: isize) -> usize {
    x.max(0) as usize
}

/// `(DoF_D, DoF_R, n_det)` for raw antenna counts, zeros allowed.
pub fn dof_counts(s: usize, d: usize, r: usize, t: usize) -> (usize, usize, usize) {
    let (si, di, ri, ti) = (s as isize, d as isize, r as isize, t as isize);
    let dof_d = s.min(pos(di - ti));
    let dof_r = s.min(pos(ri + di - ti));
    let n_det = r.min(s).min(pos(ri + di - ti)).min(pos(si + ti - di));
    (dof_d, dof_r, n_det)
}

/// Size of the distributed zero-forcing combiner.
pub fn combiner_rows(p: AntennaProfile) -> usize {
    p.r.min(p.s).min(pos(p.r as isize + p.d as isize - p.t as isize))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DofReport {
    pub profile: AntennaProfile,
    pub alpha: f64,
    pub dof_dest: usize,
    pub dof_relay_inf: usize,
    pub dof_gain_opt: f64,
    pub dof_gain_iid: f64,
    pub n_det_components: usize,
    pub combiner_rows: usize,
}

/// Formula values for a relay budget `c0 = α log2 ρ`; `alpha` may be infinite.
pub fn dof_report(profile: AntennaProfile, alpha: f64) -> Result<DofReport> {
    if !(alpha >= 0.0) {
        return precondition(format!("alpha must be non-negative, got {alpha}"));
    }
    let AntennaProfile { s, d, r, t } = profile;
    let (dof_d, dof_r, n_det) = dof_counts(s, d, r, t);
    let gain = (dof_r - dof_d) as f64;
    let r_prime = r.min(pos(s as isize + t as isize - d as isize));
    let iid_factor = if r_prime == 0 { 0.0 } else { (alpha / r_prime as f64).min(1.0) };
    Ok(DofReport {
        profile,
        alpha,
        dof_dest: dof_d,
        dof_relay_inf: dof_r,
        dof_gain_opt: gain.min(alpha),
        dof_gain_iid: gain * iid_factor,
        n_det_components: n_det,
        combiner_rows: combiner_rows(profile),
    })
}

/// Relay and destination parts of the zero-forcing rows `[C̃ A]`.
#[derive(Debug, Clone)]
pub struct ZeroForcingCombiner {
    /// `r̃ × r`, orthonormal rows.
    pub relay: CMatrix,
    /// `r̃ × d`.
    pub dest: CMatrix,
}

const NULL_REL_TOL: f64 = 1e-10;

/// Rows `[C̃ A]` that null `[H_TR; H_TD] S_XT^{1/2}` while keeping `r̃`
/// signal dimensions of `[H_SR; H_SD] S_X^{1/2}`.
pub fn zero_forcing_combiner(ch: &ChannelRealization, s_x: &CMatrix) -> Result<ZeroForcingCombiner> {
    ch.check_input(s_x)?;
    let p = ch.profile();
    let rt = combiner_rows(p);
    if rt == 0 {
        return Ok(ZeroForcingCombiner {
            relay: CMatrix::zeros(0, p.r),
            dest: CMatrix::zeros(0, p.d),
        });
    }
    let interference = ch.stacked_interference_gain() * sqrt_psd(ch.s_xt());
    // left null vectors are the null space of the adjoint
    let basis = if p.t == 0 {
        crate::linalg::identity(p.r + p.d)
    } else {
        null_space(&interference.adjoint(), NULL_REL_TOL)
    };
    let rows = basis.adjoint();
    let signal = &rows * stack(ch.h_sr(), ch.h_sd()) * sqrt_psd(s_x);
    let svd = signal.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    if order.len() < rt {
        return Err(Error::Singular(format!(
            "interference leaves {} signal dimensions, need {rt}",
            order.len()
        )));
    }
    let mut pick = CMatrix::zeros(rows.nrows(), rt);
    for (j, &k) in order.iter().take(rt).enumerate() {
        pick.set_column(j, &u.column(k));
    }
    let w = pick.adjoint() * rows;
    let relay = w.columns(0, p.r).into_owned();
    let dest = w.columns(p.r, p.d).into_owned();
    let gram = hermitian_part(&(&relay * relay.adjoint()));
    let eig = eigh(&gram);
    if eig.values.last().is_none_or(|&v| v <= 1e-12 * eig.values[0].max(f64::MIN_POSITIVE)) {
        return Err(Error::Singular("zero-forcing rows have no relay component".into()));
    }
    let inv_sqrt = eig.map(|v| 1.0 / v.sqrt());
    Ok(ZeroForcingCombiner {
        relay: &inv_sqrt * relay,
        dest: &inv_sqrt * dest,
    })
}

/// Secant estimate `(R(ρ_hi) − R(ρ_lo)) / log2(ρ_hi/ρ_lo)` of the pre-log.
pub fn empirical_dof<F>(mut rate: F, rho_lo: f64, rho_hi: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(rho_lo >= 1e3 && rho_hi > rho_lo) {
        return precondition(format!("need rho_hi > rho_lo >= 1e3, got {rho_lo}, {rho_hi}"));
    }
    Ok((rate(rho_hi)? - rate(rho_lo)?) / (rho_hi / rho_lo).log2())
}

/// Relay budget `α log2 ρ`, with `α = ∞` realized as `50 log2 ρ`.
pub fn budget_for(alpha: f64, rho: f64) -> f64 {
    let a = if alpha.is_finite() { alpha } else { 50.0 };
    a * rho.log2()
}

/// Strategies whose pre-log is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofScheme {
    /// Direct link only, isotropic input.
    DestOnly,
    /// Joint optimization.
    Joint,
    /// Isotropic input, `S_Q = q I`.
    IidQuantizer,
    /// Isotropic input, zero-forcing combiner, then `q I`.
    ZeroForcing,
}

/// Rate of `scheme` on `ch` rescaled to `σ² = 1/ρ`.
pub fn scheme_rate(ch: &ChannelRealization, scheme: DofScheme, alpha: f64, rho: f64, power: f64) -> Result<f64> {
    let ch = ch.with_sigma2(1.0 / rho)?;
    let c0 = budget_for(alpha, rho);
    let s_x = isotropic(ch.profile().s, power);
    match scheme {
        DofScheme::DestOnly => dest_only_rate(&ch, &s_x),
        DofScheme::Joint => Ok(optimize_cf(&ch, c0, &CfOptions::new(power))?.rate),
        DofScheme::IidQuantizer => {
            let q = iid_quantizer_for_budget(&ch, &s_x, None, c0)?;
            cf_rate_minform(&ch, &s_x, &q, c0)
        }
        DofScheme::ZeroForcing => {
            let zf = zero_forcing_combiner(&ch, &s_x)?;
            let q = iid_quantizer_for_budget(&ch, &s_x, Some(&zf.relay), c0)?;
            cf_rate_minform(&ch, &s_x, &q, c0)
        }
    }
}

/// Secant pre-log of `scheme` and of the direct link, and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DofEstimate {
    pub total: f64,
    pub dest: f64,
    pub gain: f64,
}

pub fn estimate_dof_gain(
    ch: &ChannelRealization,
    scheme: DofScheme,
    alpha: f64,
    rho_lo: f64,
    rho_hi: f64,
    power: f64,
) -> Result<DofEstimate> {
    let total = empirical_dof(|rho| scheme_rate(ch, scheme, alpha, rho, power), rho_lo, rho_hi)?;
    let dest = empirical_dof(|rho| scheme_rate(ch, DofScheme::DestOnly, alpha, rho, power), rho_lo, rho_hi)?;
    Ok(DofEstimate {
        total,
        dest,
        gain: total - dest,
    })
}

/// Eigenvalues (descending) of `S_{Y_R|Y_D,X}` at each noise level.
pub fn conditional_eigen_scaling(ch: &ChannelRealization, s_x: &CMatrix, sigma2s: &[f64]) -> Result<Vec<Vec<f64>>> {
    sigma2s
        .iter()
        .map(|&s2| {
            let c = conditional_covariances(&ch.with_sigma2(s2)?, s_x)?;
            Ok(eigh(&c.given_dest_input).values)
        })
        .collect()
}
