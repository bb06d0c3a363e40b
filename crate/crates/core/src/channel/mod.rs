//! Channel instances and the covariances derived from them.
//!
//! The relay sees `Y_R = H_SR X + H_TR X_T + N_1` and the destination sees
//! `Y_D = H_SD X + H_TD X_T + N_2`, with the interference `X_T ~ CN(0, S_XT)`
//! common to both and `N_1`, `N_2` white with power `σ²`.

mod format;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{precondition, Error, Result};
use crate::linalg::{self, hermitian_part, identity, numeric_rank, rank_above, schur_unchecked, CMatrix, PINV_REL_TOL};

pub use format::{read_channel, write_channel};

/// Antenna counts at the source, destination, relay and all interferers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct AntennaProfile {
    pub s: usize,
    pub d: usize,
    pub r: usize,
    pub t: usize,
}

impl AntennaProfile {
    pub fn new(s: usize, d: usize, r: usize, t: usize) -> Result<Self> {
        if s == 0 || d == 0 || r == 0 {
            return precondition(format!("antenna counts s,d,r must be positive, got ({s},{d},{r},{t})"));
        }
        Ok(Self { s, d, r, t })
    }
}

impl fmt::Display for AntennaProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.s, self.d, self.r, self.t)
    }
}

impl FromStr for AntennaProfile {
    type Err = Error;

    /// Parses `s,d,r,t`.
    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(Error::Config(format!("profile must be s,d,r,t, got {text:?}")));
        }
        let mut v = [0usize; 4];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Config(format!("bad antenna count {p:?} in profile")))?;
        }
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// One snapshot of the relay channel with its noise statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h_sr: CMatrix,
    h_sd: CMatrix,
    h_tr: CMatrix,
    h_td: CMatrix,
    sigma2: f64,
    s_xt: CMatrix,
}

impl ChannelRealization {
    /// Builds and validates a channel. `s_xt` defaults to the identity.
    pub fn new(
        h_sr: CMatrix,
        h_sd: CMatrix,
        h_tr: CMatrix,
        h_td: CMatrix,
        sigma2: f64,
        s_xt: Option<CMatrix>,
    ) -> Result<Self> {
        let (r, s) = h_sr.shape();
        let d = h_sd.nrows();
        let t = h_tr.ncols();
        let bad = |what: &str, got: (usize, usize), want: (usize, usize)| {
            Err(Error::Dimension(format!("{what} is {}x{}, expected {}x{}", got.0, got.1, want.0, want.1)))
        };
        if h_sd.ncols() != s {
            return bad("H_SD", h_sd.shape(), (d, s));
        }
        if h_tr.nrows() != r {
            return bad("H_TR", h_tr.shape(), (r, t));
        }
        if h_td.shape() != (d, t) {
            return bad("H_TD", h_td.shape(), (d, t));
        }
        AntennaProfile::new(s, d, r, t)?;
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return precondition(format!("sigma2 must be positive and finite, got {sigma2}"));
        }
        let s_xt = s_xt.unwrap_or_else(|| identity(t));
        if s_xt.shape() != (t, t) {
            return bad("S_XT", s_xt.shape(), (t, t));
        }
        linalg::check_psd(&s_xt, "S_XT")?;
        Ok(Self {
            h_sr,
            h_sd,
            h_tr,
            h_td,
            sigma2,
            s_xt: hermitian_part(&s_xt),
        })
    }

    pub fn profile(&self) -> AntennaProfile {
        AntennaProfile {
            s: self.h_sr.ncols(),
            d: self.h_sd.nrows(),
            r: self.h_sr.nrows(),
            t: self.h_tr.ncols(),
        }
    }

    pub fn h_sr(&self) -> &CMatrix {
        &self.h_sr
    }
    pub fn h_sd(&self) -> &CMatrix {
        &self.h_sd
    }
    pub fn h_tr(&self) -> &CMatrix {
        &self.h_tr
    }
    pub fn h_td(&self) -> &CMatrix {
        &self.h_td
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn s_xt(&self) -> &CMatrix {
        &self.s_xt
    }

    /// Same channel with a different background noise power.
    pub fn with_sigma2(&self, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return precondition(format!("sigma2 must be positive and finite, got {sigma2}"));
        }
        Ok(Self { sigma2, ..self.clone() })
    }

    /// `H = [H_SR; H_SD]`.
    pub fn stacked_gain(&self) -> CMatrix {
        stack(&self.h_sr, &self.h_sd)
    }

    /// `[H_TR; H_TD]`.
    pub fn stacked_interference_gain(&self) -> CMatrix {
        stack(&self.h_tr, &self.h_td)
    }

    /// `S_int + σ² I`, the covariance of `(N_R, N_D)`.
    pub fn noise_covariance(&self) -> CMatrix {
        let p = self.profile();
        interference_covariance(self) + identity(p.r + p.d).scale(self.sigma2)
    }

    /// `S_int^(2,2) + σ² I_d`, the destination noise covariance.
    pub fn dest_noise_covariance(&self) -> CMatrix {
        let d = self.profile().d;
        hermitian_part(&(&self.h_td * &self.s_xt * self.h_td.adjoint())) + identity(d).scale(self.sigma2)
    }

    pub(crate) fn check_input(&self, s_x: &CMatrix) -> Result<()> {
        let s = self.profile().s;
        if s_x.shape() != (s, s) {
            return Err(Error::Dimension(format!(
                "S_X is {}x{}, expected {s}x{s}",
                s_x.nrows(),
                s_x.ncols()
            )));
        }
        linalg::check_psd(s_x, "S_X")
    }
}

pub(crate) fn stack(top: &CMatrix, bottom: &CMatrix) -> CMatrix {
    let cols = top.ncols();
    let mut out = CMatrix::zeros(top.nrows() + bottom.nrows(), cols);
    out.view_mut((0, 0), top.shape()).copy_from(top);
    out.view_mut((top.nrows(), 0), bottom.shape()).copy_from(bottom);
    out
}

/// `S_int` over `(relay, destination)` antennas.
pub fn interference_covariance(ch: &ChannelRealization) -> CMatrix {
    let g = ch.stacked_interference_gain();
    hermitian_part(&(&g * &ch.s_xt * g.adjoint()))
}

/// Joint covariance of `(Y_R, Y_D, X)` with background noise `sigma2`.
pub(crate) fn joint_with_input(ch: &ChannelRealization, s_x: &CMatrix, sigma2: f64) -> CMatrix {
    let p = ch.profile();
    let m = p.r + p.d;
    let h = ch.stacked_gain();
    let hs = &h * s_x;
    let yy = hermitian_part(&(&hs * h.adjoint())) + interference_covariance(ch) + identity(m).scale(sigma2);
    let mut joint = CMatrix::zeros(m + p.s, m + p.s);
    joint.view_mut((0, 0), (m, m)).copy_from(&yy);
    joint.view_mut((0, m), (m, p.s)).copy_from(&hs);
    joint.view_mut((m, 0), (p.s, m)).copy_from(&hs.adjoint());
    joint.view_mut((m, m), (p.s, p.s)).copy_from(s_x);
    hermitian_part(&joint)
}

/// Conditional covariances of the relay observation.
#[derive(Debug, Clone)]
pub struct RelayConditionals {
    /// `S_{Y_R | Y_D}`.
    pub given_dest: CMatrix,
    /// `S_{Y_R | Y_D, X}`.
    pub given_dest_input: CMatrix,
    /// Largest diagonal entry of the covariance that was conditioned, the
    /// magnitude against which rounding in both Schur complements is judged.
    pub scale: f64,
}

fn max_diagonal(m: &CMatrix) -> f64 {
    m.diagonal().iter().fold(0.0f64, |a, z| a.max(z.re))
}

/// `S_{Y_R|Y_D}` and `S_{Y_R|Y_D,X}`.
///
/// Conditioning on `X` first leaves exactly the noise covariance of
/// `(N_R, N_D)`, so the second form is the Schur complement of
/// `S_int + σ² I`. The (r+d+s)-dimensional joint path is kept in
/// [`conditionals_via_joint`] and agrees with this one.
pub fn conditional_covariances(ch: &ChannelRealization, s_x: &CMatrix) -> Result<RelayConditionals> {
    ch.check_input(s_x)?;
    Ok(conditionals_unchecked(ch, s_x))
}

pub(crate) fn conditionals_unchecked(ch: &ChannelRealization, s_x: &CMatrix) -> RelayConditionals {
    let r = ch.profile().r;
    let h = ch.stacked_gain();
    let noise = ch.noise_covariance();
    let observed = hermitian_part(&(&h * s_x * h.adjoint())) + &noise;
    RelayConditionals {
        given_dest: schur_unchecked(&observed, r, PINV_REL_TOL),
        given_dest_input: schur_unchecked(&noise, r, PINV_REL_TOL),
        scale: max_diagonal(&observed),
    }
}

/// Both conditionals computed from the explicit joint of `(Y_R, Y_D, X)`
/// with noise power `sigma2` (which may be zero).
pub fn conditionals_via_joint(ch: &ChannelRealization, s_x: &CMatrix, sigma2: f64) -> Result<RelayConditionals> {
    ch.check_input(s_x)?;
    let p = ch.profile();
    let joint = joint_with_input(ch, s_x, sigma2);
    let m = p.r + p.d;
    let yy = joint.view((0, 0), (m, m)).into_owned();
    // move X in front of Y_R: retain Y_R, condition on (Y_D, X)
    let given_dest = schur_unchecked(&yy, p.r, PINV_REL_TOL);
    let given_dest_input = schur_unchecked(&joint, p.r, PINV_REL_TOL);
    Ok(RelayConditionals {
        given_dest,
        given_dest_input,
        scale: max_diagonal(&yy),
    })
}

/// Ranks of the noiseless conditional covariances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankProfile {
    /// rank `S_{Ȳ_R|Ȳ_D}` measured numerically.
    pub r_prime: usize,
    /// rank `S_{Ȳ_R|Ȳ_D,X}` measured numerically.
    pub r_dprime: usize,
    /// rank of `S_X`.
    pub s_rank: usize,
    /// `min(r, (s^r + t − d)^+)`.
    pub r_prime_formula: usize,
    /// `min(r, (t − d)^+)`.
    pub r_dprime_formula: usize,
}

impl RankProfile {
    pub fn matches_closed_form(&self) -> bool {
        self.r_prime == self.r_prime_formula && self.r_dprime == self.r_dprime_formula
    }

    /// Number of asymptotically deterministic components, `r′ − r″`.
    pub fn deterministic_components(&self) -> usize {
        self.r_prime.saturating_sub(self.r_dprime)
    }
}

pub const RANK_REL_TOL: f64 = 1e-9;
/// Rank cutoff for noiseless conditionals, relative to the joint's scale.
const NOISELESS_RANK_REL_TOL: f64 = 1e-8;

/// `(r′, r″)` from antenna counts and the number of input streams.
pub fn closed_form_ranks(profile: AntennaProfile, s_rank: usize) -> (usize, usize) {
    let AntennaProfile { d, r, t, .. } = profile;
    let r_prime = r.min((s_rank + t).saturating_sub(d));
    let r_dprime = r.min(t.saturating_sub(d));
    (r_prime, r_dprime)
}

/// Ranks of `S_{Ȳ_R|Ȳ_D}` and `S_{Ȳ_R|Ȳ_D,X}` for the σ²-free observations,
/// alongside the closed forms. Disagreement is reported, not an error.
pub fn noiseless_rank_profile(ch: &ChannelRealization, s_x: &CMatrix) -> Result<RankProfile> {
    ch.check_input(s_x)?;
    let p = ch.profile();
    let s_rank = numeric_rank(s_x, RANK_REL_TOL);
    let joint = joint_with_input(ch, s_x, 0.0);
    let scale = linalg::eigh(&joint).values.first().copied().unwrap_or(0.0).abs();
    let cutoff = NOISELESS_RANK_REL_TOL * scale;
    let cond = conditionals_via_joint(ch, s_x, 0.0)?;
    let (r_prime_formula, r_dprime_formula) = closed_form_ranks(p, s_rank);
    Ok(RankProfile {
        r_prime: rank_above(&cond.given_dest, cutoff),
        r_dprime: rank_above(&cond.given_dest_input, cutoff),
        s_rank,
        r_prime_formula,
        r_dprime_formula,
    })
}
