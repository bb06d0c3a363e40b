//! Compress-and-forward rate optimization for MIMO relay channels whose
//! relay and destination noises are correlated through common interference.
//!
//! The relay observes `Y_R = H_SR X + H_TR X_T + N_1`, the destination
//! `Y_D = H_SD X + H_TD X_T + N_2`, and the relay forwards a Wyner–Ziv
//! description of `Y_R` over a digital link of `C_0` bits per use.
//!
//! ```
//! use cf_relay::{optimize_cf, CfOptions, AntennaProfile};
//! use cf_relay::scenario::rayleigh_channel;
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
//! let ch = rayleigh_channel(AntennaProfile::new(2, 2, 2, 1).unwrap(), 0.1, &mut rng);
//! let res = optimize_cf(&ch, 2.0, &CfOptions::new(1.0)).unwrap();
//! assert!(res.rate > 0.0);
//! ```

// range checks are written `!(x >= 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod dof;
pub mod error;
pub mod harness;
pub mod input;
pub mod joint;
pub mod linalg;
pub mod quantizer;
pub mod rates;
pub mod scenario;

pub use channel::{AntennaProfile, ChannelRealization};
pub use error::{Error, Result};
pub use joint::{optimize_cf, rate_curve, CfOptions, JointOptResult, StartPoint};
pub use linalg::{CMatrix, C64};
pub use rates::RelayQuantizer;
