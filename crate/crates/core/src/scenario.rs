//! Picocell snapshots: hexagonal interferer layout, distance path loss,
//! lognormal shadowing and Rayleigh fading.
//!
//! Gains are expressed relative to the thermal noise power `N0·B`, so the
//! generated channel has `σ² = 1` and the source power constraint is the
//! transmit power in watts. Rates are unaffected by this normalization.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::channel::{AntennaProfile, ChannelRealization};
use crate::error::{precondition, Error, Result};
use crate::linalg::{c, identity, CMatrix};

/// Name of the generator behind every seeded draw in this crate.
pub const RNG_ALGORITHM: &str = "ChaCha20";

#[derive(Debug, Clone, PartialEq)]
pub struct CellularConfig {
    pub tx_power_watts: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub bs_user_dist_m: f64,
    pub relay_user_dist_m: f64,
    pub bs_grid_spacing_m: f64,
    pub shadowing_sigma_db: f64,
    pub pathloss_a: f64,
    pub pathloss_b: f64,
    /// Number of active interfering base stations; `t / antennas_per_interferer` when unset.
    pub n_interferers: Option<usize>,
    pub antennas_per_interferer: usize,
    /// Angle in radians between the user→relay and user→BS directions.
    pub relay_angle_rad: f64,
    pub seed: u64,
}

impl Default for CellularConfig {
    fn default() -> Self {
        Self {
            tx_power_watts: 1.0,
            bandwidth_hz: 1e7,
            noise_psd_dbm_hz: -174.0,
            bs_user_dist_m: 100.0,
            relay_user_dist_m: 10.0,
            bs_grid_spacing_m: 200.0,
            shadowing_sigma_db: 10.0,
            pathloss_a: 140.7,
            pathloss_b: 36.7,
            n_interferers: None,
            antennas_per_interferer: 1,
            relay_angle_rad: 0.0,
            seed: 0,
        }
    }
}

impl CellularConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tx_power_watts", self.tx_power_watts),
            ("bandwidth_hz", self.bandwidth_hz),
            ("bs_user_dist_m", self.bs_user_dist_m),
            ("relay_user_dist_m", self.relay_user_dist_m),
            ("bs_grid_spacing_m", self.bs_grid_spacing_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::Config("shadowing_sigma_db must be non-negative".into()));
        }
        if self.antennas_per_interferer == 0 {
            return Err(Error::Config("antennas_per_interferer must be positive".into()));
        }
        Ok(())
    }

    /// Thermal noise power in watts.
    pub fn noise_power_watts(&self) -> f64 {
        10f64.powf((self.noise_psd_dbm_hz - 30.0) / 10.0) * self.bandwidth_hz
    }

    /// Source power constraint in the normalized channel.
    pub fn source_power(&self) -> f64 {
        self.tx_power_watts
    }

    /// `a + b log10(d_km)`.
    pub fn pathloss_db(&self, d_km: f64) -> Result<f64> {
        if !(d_km > 0.0) {
            return precondition(format!("distance must be positive, got {d_km} km"));
        }
        Ok(self.pathloss_a + self.pathloss_b * d_km.log10())
    }

    /// Interferer count implied by `t` when not set explicitly.
    pub fn interferers_for(&self, t: usize) -> Result<usize> {
        let n = self.n_interferers.unwrap_or(t / self.antennas_per_interferer);
        if n * self.antennas_per_interferer != t {
            return Err(Error::Config(format!(
                "{n} interferers with {} antennas each cannot give t = {t}",
                self.antennas_per_interferer
            )));
        }
        Ok(n)
    }
}

impl FromStr for CellularConfig {
    type Err = Error;

    /// Parses `key = value` lines; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                msg: format!("expected key = value, got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || Error::Parse {
                line: n + 1,
                msg: format!("invalid value {value:?} for {key}"),
            };
            let num = || value.parse::<f64>().map_err(|_| bad());
            match key {
                "tx_power_watts" => cfg.tx_power_watts = num()?,
                "bandwidth_hz" => cfg.bandwidth_hz = num()?,
                "noise_psd_dbm_hz" => cfg.noise_psd_dbm_hz = num()?,
                "bs_user_dist_m" => cfg.bs_user_dist_m = num()?,
                "relay_user_dist_m" => cfg.relay_user_dist_m = num()?,
                "bs_grid_spacing_m" => cfg.bs_grid_spacing_m = num()?,
                "shadowing_sigma_db" => cfg.shadowing_sigma_db = num()?,
                "pathloss_a" => cfg.pathloss_a = num()?,
                "pathloss_b" => cfg.pathloss_b = num()?,
                "relay_angle_rad" => cfg.relay_angle_rad = num()?,
                "n_interferers" => cfg.n_interferers = Some(value.parse().map_err(|_| bad())?),
                "antennas_per_interferer" => cfg.antennas_per_interferer = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                _ => {
                    return Err(Error::Parse {
                        line: n + 1,
                        msg: format!("unknown key {key:?}"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Path loss in dB with the default coefficients.
pub fn pathloss_db(d_km: f64) -> Result<f64> {
    CellularConfig::default().pathloss_db(d_km)
}

/// Positions (metres) of the serving BS, the user, the relay and the
/// interfering BSs, nearest to the serving BS first.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub bs: (f64, f64),
    pub user: (f64, f64),
    pub relay: (f64, f64),
    pub interferers: Vec<(f64, f64)>,
}

pub fn layout(cfg: &CellularConfig, n_interferers: usize) -> Layout {
    let user = (cfg.bs_user_dist_m, 0.0);
    // toward the BS is the negative x direction from the user
    let dir = std::f64::consts::PI + cfg.relay_angle_rad;
    let relay = (
        user.0 + cfg.relay_user_dist_m * dir.cos(),
        user.1 + cfg.relay_user_dist_m * dir.sin(),
    );
    let a = cfg.bs_grid_spacing_m;
    let mut rings = 1i64;
    let mut sites = Vec::new();
    while sites.len() < n_interferers {
        sites.clear();
        for i in -rings..=rings {
            for j in -rings..=rings {
                if (i, j) == (0, 0) || (i + j).abs() > rings {
                    continue;
                }
                let (fi, fj) = (i as f64, j as f64);
                sites.push((a * (fi + 0.5 * fj), a * fj * 3f64.sqrt() / 2.0));
            }
        }
        rings += 1;
    }
    let key = |p: &(f64, f64)| ((p.0.hypot(p.1) * 1e6).round() as i64, p.1.atan2(p.0).rem_euclid(std::f64::consts::TAU));
    sites.sort_by(|p, q| {
        let (dp, ap) = key(p);
        let (dq, aq) = key(q);
        dp.cmp(&dq).then(ap.total_cmp(&aq))
    });
    sites.truncate(n_interferers);
    Layout {
        bs: (0.0, 0.0),
        user,
        relay,
        interferers: sites,
    }
}

fn distance(p: (f64, f64), q: (f64, f64)) -> f64 {
    (p.0 - q.0).hypot(p.1 - q.1)
}

/// Large-scale gain in dB over distance `d_m`: minus path loss plus one
/// shadowing draw.
pub fn shadowed_gain_db<R: Rng + ?Sized>(cfg: &CellularConfig, d_m: f64, rng: &mut R) -> Result<f64> {
    let shadow = Normal::new(0.0, cfg.shadowing_sigma_db)
        .map_err(|e| Error::Config(e.to_string()))?
        .sample(rng);
    Ok(-cfg.pathloss_db(d_m / 1000.0)? + shadow)
}

/// Single draw of `CN(0, 1)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> crate::linalg::C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Channel with i.i.d. `CN(0, 1)` entries and `S_XT = I`.
pub fn rayleigh_channel<R: Rng + ?Sized>(profile: AntennaProfile, sigma2: f64, rng: &mut R) -> ChannelRealization {
    let AntennaProfile { s, d, r, t } = profile;
    let h_sr = gaussian_matrix(r, s, rng);
    let h_sd = gaussian_matrix(d, s, rng);
    let h_tr = gaussian_matrix(r, t, rng);
    let h_td = gaussian_matrix(d, t, rng);
    ChannelRealization::new(h_sr, h_sd, h_tr, h_td, sigma2, None).expect("Rayleigh draw has consistent shapes")
}

/// Fading block `rows × cols` whose column groups of `group` antennas share
/// one large-scale amplitude each.
fn faded_block<R: Rng + ?Sized>(amplitudes: &[f64], rows: usize, group: usize, rng: &mut R) -> CMatrix {
    let mut m = gaussian_matrix(rows, amplitudes.len() * group, rng);
    for (k, &a) in amplitudes.iter().enumerate() {
        for j in k * group..(k + 1) * group {
            m.column_mut(j).scale_mut(a);
        }
    }
    m
}

/// Draws one snapshot, deterministic in `cfg.seed`.
pub fn generate_scenario(cfg: &CellularConfig, profile: AntennaProfile) -> Result<ChannelRealization> {
    cfg.validate()?;
    let n_int = cfg.interferers_for(profile.t)?;
    let geo = layout(cfg, n_int);
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let noise = cfg.noise_power_watts();
    let amplitude = |from: (f64, f64), to: (f64, f64), rng: &mut ChaCha20Rng| -> Result<f64> {
        let db = shadowed_gain_db(cfg, distance(from, to), rng)?;
        Ok((10f64.powf(db / 10.0) / noise).sqrt())
    };
    let a_sr = amplitude(geo.bs, geo.relay, &mut rng)?;
    let a_sd = amplitude(geo.bs, geo.user, &mut rng)?;
    let mut a_tr = Vec::with_capacity(n_int);
    let mut a_td = Vec::with_capacity(n_int);
    for &site in &geo.interferers {
        a_tr.push(amplitude(site, geo.relay, &mut rng)?);
        a_td.push(amplitude(site, geo.user, &mut rng)?);
    }
    let g = cfg.antennas_per_interferer;
    let h_sr = gaussian_matrix(profile.r, profile.s, &mut rng).scale(a_sr);
    let h_sd = gaussian_matrix(profile.d, profile.s, &mut rng).scale(a_sd);
    let h_tr = faded_block(&a_tr, profile.r, g, &mut rng);
    let h_td = faded_block(&a_td, profile.d, g, &mut rng);
    let s_xt = identity(profile.t).scale(cfg.tx_power_watts / g as f64);
    ChannelRealization::new(h_sr, h_sd, h_tr, h_td, 1.0, Some(s_xt))
}

/// Comment lines describing how a scenario was drawn.
pub fn scenario_metadata(cfg: &CellularConfig, profile: AntennaProfile) -> Vec<String> {
    vec![
        format!("profile {profile}"),
        format!("rng {RNG_ALGORITHM} seed {}", cfg.seed),
        format!("power {}", cfg.source_power()),
        format!("noise_watts {:e}", cfg.noise_power_watts()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::interference_covariance;
    use crate::linalg::numeric_rank;

    #[test]
    fn pathloss_values() {
        assert!((pathloss_db(1.0).unwrap() - 140.7).abs() < 1e-12);
        assert!((pathloss_db(0.1).unwrap() - 104.0).abs() < 1e-12);
        assert!((pathloss_db(0.01).unwrap() - 67.3).abs() < 1e-12);
        assert!(pathloss_db(0.0).is_err());
        assert!(pathloss_db(-1.0).is_err());
    }

    #[test]
    fn same_seed_same_channel() {
        let p = AntennaProfile::new(2, 3, 3, 4).unwrap();
        let cfg = CellularConfig {
            seed: 77,
            ..Default::default()
        };
        assert_eq!(generate_scenario(&cfg, p).unwrap(), generate_scenario(&cfg, p).unwrap());
        let other = CellularConfig { seed: 78, ..cfg };
        assert_ne!(generate_scenario(&cfg, p).unwrap(), generate_scenario(&other, p).unwrap());
    }

    #[test]
    fn no_interferers_no_interference() {
        let ch = generate_scenario(&CellularConfig::default(), AntennaProfile::new(2, 2, 2, 0).unwrap()).unwrap();
        assert_eq!(interference_covariance(&ch).norm(), 0.0);
    }

    #[test]
    fn ten_times_closer_is_pathloss_slope_stronger() {
        let cfg = CellularConfig::default();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let n = 10_000;
        let (mut near, mut far) = (0.0, 0.0);
        let mut shadows = Vec::with_capacity(n);
        for _ in 0..n {
            let a = shadowed_gain_db(&cfg, 10.0, &mut rng).unwrap();
            near += a;
            far += shadowed_gain_db(&cfg, 100.0, &mut rng).unwrap();
            shadows.push(a + cfg.pathloss_db(0.01).unwrap());
        }
        let diff = (near - far) / n as f64;
        assert!((diff - 36.7).abs() < 1.0, "{diff}");
        let mean = shadows.iter().sum::<f64>() / n as f64;
        let sd = (shadows.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd - 10.0).abs() < 0.5, "{sd}");
    }

    #[test]
    fn rayleigh_draws_are_full_rank() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let p = AntennaProfile::new(3, 2, 4, 3).unwrap();
        for _ in 0..1000 {
            let ch = rayleigh_channel(p, 1.0, &mut rng);
            for (m, full) in [(ch.h_sr(), 3), (ch.h_sd(), 2), (ch.h_tr(), 3), (ch.h_td(), 2)] {
                assert_eq!(numeric_rank(&(m * m.adjoint()), 1e-9).max(numeric_rank(&(m.adjoint() * m), 1e-9)), full);
            }
        }
    }

    #[test]
    fn hex_layout_nearest_ring_first() {
        let cfg = CellularConfig::default();
        let geo = layout(&cfg, 8);
        for p in &geo.interferers[..6] {
            assert!((p.0.hypot(p.1) - 200.0).abs() < 1e-9);
        }
        assert!(geo.interferers[6].0.hypot(geo.interferers[6].1) > 300.0);
        assert!((distance(geo.relay, geo.user) - 10.0).abs() < 1e-12);
        assert!((distance(geo.relay, geo.bs) - 90.0).abs() < 1e-12);
    }

    #[test]
    fn config_file_parsing() {
        let cfg: CellularConfig = "# picocell\nseed = 5\nshadowing_sigma_db=8 # dB\nn_interferers = 2\n".parse().unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.shadowing_sigma_db, 8.0);
        assert_eq!(cfg.n_interferers, Some(2));
        assert!("bogus = 1".parse::<CellularConfig>().is_err());
        assert!("seed".parse::<CellularConfig>().is_err());
        assert!("tx_power_watts = -1".parse::<CellularConfig>().is_err());
        assert!(cfg.interferers_for(3).is_err());
    }

    #[test]
    fn normalized_noise_and_power() {
        let cfg = CellularConfig::default();
        assert!((cfg.noise_power_watts() - 10f64.powf(-13.4)).abs() < 1e-25);
        let ch = generate_scenario(&cfg, AntennaProfile::new(2, 3, 3, 4).unwrap()).unwrap();
        assert_eq!(ch.sigma2(), 1.0);
        assert!((ch.s_xt() - identity(4)).norm() < 1e-15);
    }
}
