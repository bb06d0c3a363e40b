//! Mutual-information functionals of the compress-and-forward scheme, in bits.
//!
//! The relay description is `Ŷ = F Y_R + Z` with `Z ~ CN(0, D)`. Taking
//! `F = I` and `D = S_Q` gives the usual test channel `Ŷ = Y_R + Q`; a
//! quantizer that drops components of `C_R† Y_R` keeps only the
//! corresponding rows of `F`, which is how infinite quantization noise is
//! represented without large floats.

use crate::channel::{conditionals_unchecked, ChannelRealization, RelayConditionals};
use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_part, identity, logdet2_pd, CMatrix, GenEigSystem};

/// Relay compression `Ŷ = F Y_R + Z`, `Z ~ CN(0, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayQuantizer {
    combiner: CMatrix,
    noise: CMatrix,
}

impl RelayQuantizer {
    pub fn new(combiner: CMatrix, noise: CMatrix) -> Result<Self> {
        let k = combiner.nrows();
        if noise.shape() != (k, k) {
            return Err(Error::Dimension(format!(
                "quantization noise is {}x{}, combiner has {k} rows",
                noise.nrows(),
                noise.ncols()
            )));
        }
        linalg::check_psd(&noise, "quantization noise")?;
        Ok(Self {
            combiner,
            noise: hermitian_part(&noise),
        })
    }

    /// The plain test channel `Ŷ = Y_R + Q` with `Q ~ CN(0, S_Q)`.
    pub fn from_covariance(s_q: &CMatrix) -> Result<Self> {
        Self::new(identity(s_q.nrows()), s_q.clone())
    }

    /// No description at all (every component at infinite noise).
    pub fn dropped(relay_antennas: usize) -> Self {
        Self {
            combiner: CMatrix::zeros(0, relay_antennas),
            noise: CMatrix::zeros(0, 0),
        }
    }

    /// Independent quantization of the components of `C_R† Y_R` with noise
    /// variances `sigma_diag`; non-finite entries are dropped.
    pub fn from_transformed(gen: &GenEigSystem, sigma_diag: &[f64]) -> Self {
        let r = gen.transform.nrows();
        let active: Vec<usize> = (0..sigma_diag.len()).filter(|&i| sigma_diag[i].is_finite()).collect();
        let combiner = CMatrix::from_fn(active.len(), r, |i, j| gen.transform[(j, active[i])].conj());
        let noise = linalg::diag(&active.iter().map(|&i| sigma_diag[i]).collect::<Vec<_>>());
        Self { combiner, noise }
    }

    /// Scaled identity noise after an optional combiner.
    pub fn iid(combiner: CMatrix, q: f64) -> Self {
        let k = combiner.nrows();
        Self {
            combiner,
            noise: identity(k).scale(q),
        }
    }

    pub fn combiner(&self) -> &CMatrix {
        &self.combiner
    }
    pub fn noise(&self) -> &CMatrix {
        &self.noise
    }
    /// Number of described components.
    pub fn dim(&self) -> usize {
        self.combiner.nrows()
    }
    pub fn relay_dim(&self) -> usize {
        self.combiner.ncols()
    }
    pub fn is_dropped(&self) -> bool {
        self.dim() == 0
    }

    /// `S_Q` of the equivalent test channel `Ŷ = Y_R + Q`, available when
    /// every relay dimension is described with finite noise.
    pub fn covariance(&self) -> Option<CMatrix> {
        if self.dim() != self.relay_dim() || self.dim() == 0 {
            return None;
        }
        let inv = self.combiner.clone().try_inverse()?;
        Some(hermitian_part(&(&inv * &self.noise * inv.adjoint())))
    }

    fn compress(&self, m: &CMatrix) -> CMatrix {
        hermitian_part(&(&self.combiner * m * self.combiner.adjoint()))
    }

    fn check(&self, ch: &ChannelRealization) -> Result<()> {
        if self.relay_dim() != ch.profile().r {
            return Err(Error::Dimension(format!(
                "quantizer acts on {} relay antennas, channel has {}",
                self.relay_dim(),
                ch.profile().r
            )));
        }
        Ok(())
    }
}

fn logdet(m: &CMatrix, what: &str) -> Result<f64> {
    logdet2_pd(m).ok_or_else(|| Error::Singular(format!("{what} is not positive definite")))
}

/// `block_diag(F, I_d)`.
fn front_end(ch: &ChannelRealization, q: &RelayQuantizer) -> CMatrix {
    let p = ch.profile();
    let k = q.dim();
    let mut t = CMatrix::zeros(k + p.d, p.r + p.d);
    t.view_mut((0, 0), (k, p.r)).copy_from(&q.combiner);
    t.view_mut((k, p.r), (p.d, p.d)).copy_from(&identity(p.d));
    t
}

/// Gain and noise covariance of the effective observation `(Ŷ, Y_D)`.
pub(crate) fn effective_observation(ch: &ChannelRealization, q: &RelayQuantizer) -> (CMatrix, CMatrix) {
    let t = front_end(ch, q);
    let gain = &t * ch.stacked_gain();
    let mut noise = hermitian_part(&(&t * ch.noise_covariance() * t.adjoint()));
    let k = q.dim();
    let mut block = noise.view_mut((0, 0), (k, k));
    block += &q.noise;
    (gain, noise)
}

fn io_rate(gain: &CMatrix, noise: &CMatrix, s_x: &CMatrix) -> Result<f64> {
    let signal = hermitian_part(&(gain * s_x * gain.adjoint()));
    Ok(logdet(&(signal + noise), "observation covariance")? - logdet(noise, "noise covariance")?)
}

/// `f_o = I(X; Ŷ_R, Y_D)`.
pub fn cf_objective(ch: &ChannelRealization, s_x: &CMatrix, q: &RelayQuantizer) -> Result<f64> {
    ch.check_input(s_x)?;
    q.check(ch)?;
    let (gain, noise) = effective_observation(ch, q);
    Ok(io_rate(&gain, &noise, s_x)?.max(0.0))
}

/// `log|F S F† + D| − log|D|`, infinite when `D` is singular on a direction
/// that `F S F†` excites.
fn description_rate(cov: &CMatrix, q: &RelayQuantizer) -> Result<f64> {
    if q.is_dropped() {
        return Ok(0.0);
    }
    let total = q.compress(cov) + &q.noise;
    match logdet2_pd(&q.noise) {
        Some(ld) => Ok((logdet(&total, "described covariance")? - ld).max(0.0)),
        None => Ok(f64::INFINITY),
    }
}

/// `f_c = I(Y_R; Ŷ_R | Y_D) = log|F S_{Y_R|Y_D} F† + D| − log|D|`.
pub fn cf_constraint(ch: &ChannelRealization, s_x: &CMatrix, q: &RelayQuantizer) -> Result<f64> {
    ch.check_input(s_x)?;
    q.check(ch)?;
    description_rate(&conditionals_unchecked(ch, s_x).given_dest, q)
}

/// `f_c` from the joint determinant `|cov(Ŷ, Y_D)| / (|cov Y_D| |D|)`.
pub fn cf_constraint_joint(ch: &ChannelRealization, s_x: &CMatrix, q: &RelayQuantizer) -> Result<f64> {
    ch.check_input(s_x)?;
    q.check(ch)?;
    if q.is_dropped() {
        return Ok(0.0);
    }
    let Some(ld_noise) = logdet2_pd(&q.noise) else {
        return Ok(f64::INFINITY);
    };
    let (gain, noise) = effective_observation(ch, q);
    let joint = hermitian_part(&(&gain * s_x * gain.adjoint())) + noise;
    let dest = hermitian_part(&(ch.h_sd() * s_x * ch.h_sd().adjoint())) + ch.dest_noise_covariance();
    Ok((logdet(&joint, "observation covariance")? - logdet(&dest, "destination covariance")? - ld_noise).max(0.0))
}

/// `I(X; Y_D)`.
pub fn dest_only_rate(ch: &ChannelRealization, s_x: &CMatrix) -> Result<f64> {
    ch.check_input(s_x)?;
    Ok(io_rate(ch.h_sd(), &ch.dest_noise_covariance(), s_x)?.max(0.0))
}

/// `I(X; Y_R, Y_D)`.
pub fn full_rate(ch: &ChannelRealization, s_x: &CMatrix) -> Result<f64> {
    ch.check_input(s_x)?;
    Ok(io_rate(&ch.stacked_gain(), &ch.noise_covariance(), s_x)?.max(0.0))
}

/// `I(Y_R; Ŷ_R | Y_D, X)`. Independent of `S_X`.
pub fn relay_given_dest_input_info(ch: &ChannelRealization, q: &RelayQuantizer) -> Result<f64> {
    q.check(ch)?;
    let r = ch.profile().r;
    let cov = linalg::schur_unchecked(&ch.noise_covariance(), r, linalg::PINV_REL_TOL);
    description_rate(&cov, q)
}

/// `min{ I(X; Ŷ_R, Y_D), I(X; Y_D) + c0 − I(Y_R; Ŷ_R | Y_D, X) }`.
pub fn cf_rate_minform(ch: &ChannelRealization, s_x: &CMatrix, q: &RelayQuantizer, c0: f64) -> Result<f64> {
    let fo = cf_objective(ch, s_x, q)?;
    let relay_arm = dest_only_rate(ch, s_x)? + c0 - relay_given_dest_input_info(ch, q)?;
    Ok(fo.min(relay_arm))
}

/// `f_o − μ (f_c − c0)`.
pub fn lagrangian(ch: &ChannelRealization, s_x: &CMatrix, q: &RelayQuantizer, mu: f64, c0: f64) -> Result<f64> {
    Ok(cf_objective(ch, s_x, q)? - mu * (cf_constraint(ch, s_x, q)? - c0))
}

/// `f_o` and `f_c` sharing one set of conditional covariances.
pub(crate) fn objective_and_constraint(
    ch: &ChannelRealization,
    s_x: &CMatrix,
    cond: &RelayConditionals,
    q: &RelayQuantizer,
) -> Result<(f64, f64)> {
    let fo = if q.is_dropped() {
        io_rate(ch.h_sd(), &ch.dest_noise_covariance(), s_x)?
    } else {
        let (gain, noise) = effective_observation(ch, q);
        io_rate(&gain, &noise, s_x)?
    };
    Ok((fo.max(0.0), description_rate(&cond.given_dest, q)?))
}
