//! Channel gains, per-link rates, interference, jamming and eavesdropping
//! leakage.
//!
//! Node indexing for the forwarding phase follows the extended node set:
//! receiver `0` is the base station and receiver `f >= 1` is LE-UAV `f - 1`.
//! All rates are spectral efficiencies in bit/s/Hz (log base 2).

use crate::config::ChannelParams;
use crate::env::JointAction;
use crate::error::{Error, Result};
use crate::geometry::{dist3, linear_to_db, Vec2};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// `omega0 * d^-alpha` for the Euclidean distance between two points.
pub fn large_scale_gain(omega0: f64, alpha: f64, pos_a: [f64; 3], pos_b: [f64; 3]) -> Result<f64> {
    let d = dist3(pos_a, pos_b);
    if !(d > 0.0) {
        return Err(Error::DegenerateDistance(pos_a, pos_b));
    }
    Ok(omega0 * d.powf(-alpha))
}

/// Draws a unit-power Rician coefficient with K-factor `rician_k`.
///
/// The LoS term has unit modulus and a random phase; the NLoS term is
/// circularly-symmetric complex Gaussian with unit variance.
pub fn rician_sample<R: Rng + ?Sized>(rng: &mut R, rician_k: f64) -> Complex64 {
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let los = Complex64::from_polar(1.0, phase);
    if rician_k.is_infinite() {
        return los;
    }
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    let nlos = Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2;
    los * (rician_k / (1.0 + rician_k)).sqrt() + nlos * (1.0 / (1.0 + rician_k)).sqrt()
}

/// Stationary, spatially correlated log-normal shadowing over ground-to-air
/// links, indexed by (aerial x, aerial y, ground x, ground y).
///
/// Realised with random Fourier features, so its covariance approximates
/// `std^2 * exp(-|dx|^2 / (2 corr^2))`. The digital twin never sees it
/// directly; it has to learn it from measurements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShadowingField {
    std_db: f64,
    freqs: Vec<[f64; 4]>,
    phases: Vec<f64>,
}

impl ShadowingField {
    const FEATURES: usize = 256;

    pub fn new<R: Rng + ?Sized>(std_db: f64, corr_m: f64, rng: &mut R) -> Self {
        let mut freqs = Vec::with_capacity(Self::FEATURES);
        let mut phases = Vec::with_capacity(Self::FEATURES);
        for _ in 0..Self::FEATURES {
            let mut w = [0.0; 4];
            for wi in w.iter_mut() {
                let n: f64 = StandardNormal.sample(rng);
                *wi = n / corr_m;
            }
            freqs.push(w);
            phases.push(rng.random_range(0.0..std::f64::consts::TAU));
        }
        ShadowingField { std_db, freqs, phases }
    }

    pub fn flat() -> Self {
        ShadowingField { std_db: 0.0, freqs: Vec::new(), phases: Vec::new() }
    }

    pub fn db(&self, aerial: Vec2, ground: Vec2) -> f64 {
        if self.std_db == 0.0 || self.freqs.is_empty() {
            return 0.0;
        }
        let x = [aerial.x, aerial.y, ground.x, ground.y];
        let s: f64 = self
            .freqs
            .iter()
            .zip(&self.phases)
            .map(|(w, b)| (w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3] + b).cos())
            .sum();
        self.std_db * (2.0 / self.freqs.len() as f64).sqrt() * s
    }

    /// Precomputes the ground half of every feature for a fixed set of
    /// ground points, so a whole row of links costs one sincos per feature.
    pub fn for_grounds(&self, grounds: &[Vec2]) -> GroundShadowing {
        let k = self.freqs.len();
        let scale = if k == 0 { 0.0 } else { self.std_db * (2.0 / k as f64).sqrt() };
        let mut cos_g = Vec::with_capacity(grounds.len() * k);
        let mut sin_g = Vec::with_capacity(grounds.len() * k);
        for g in grounds {
            for (w, b) in self.freqs.iter().zip(&self.phases) {
                let c = w[2] * g.x + w[3] * g.y + b;
                cos_g.push(c.cos());
                sin_g.push(c.sin());
            }
        }
        GroundShadowing { scale, aerial_freqs: self.freqs.iter().map(|w| [w[0], w[1]]).collect(), cos_g, sin_g, grounds: grounds.len() }
    }
}

/// [`ShadowingField`] restricted to a fixed ground layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundShadowing {
    scale: f64,
    aerial_freqs: Vec<[f64; 2]>,
    /// `[ground * K + k]`
    cos_g: Vec<f64>,
    sin_g: Vec<f64>,
    grounds: usize,
}

impl GroundShadowing {
    /// Shadowing (dB) from `aerial` to every ground point, in layout order.
    pub fn row(&self, aerial: Vec2) -> Vec<f64> {
        let k = self.aerial_freqs.len();
        if k == 0 || self.scale == 0.0 {
            return vec![0.0; self.grounds];
        }
        let (sa, ca): (Vec<f64>, Vec<f64>) = self.aerial_freqs.iter().map(|w| (w[0] * aerial.x + w[1] * aerial.y).sin_cos()).unzip();
        (0..self.grounds)
            .map(|q| {
                let (cg, sg) = (&self.cos_g[q * k..(q + 1) * k], &self.sin_g[q * k..(q + 1) * k]);
                let mut acc = 0.0;
                for i in 0..k {
                    acc += ca[i] * cg[i] - sa[i] * sg[i];
                }
                self.scale * acc
            })
            .collect()
    }
}

/// Positions needed to evaluate every link of one slot.
#[derive(Debug, Clone, Copy)]
pub struct Geometry<'a> {
    pub gu: &'a [Vec2],
    pub le: &'a [Vec2],
    pub ea: Vec2,
    pub altitude: f64,
    pub bs: Vec2,
    pub bs_height: f64,
}

impl Geometry<'_> {
    /// 3D position of forwarding receiver `f` (0 = BS).
    pub fn node(&self, f: usize) -> [f64; 3] {
        if f == 0 {
            self.bs.at_height(self.bs_height)
        } else {
            self.le[f - 1].at_height(self.altitude)
        }
    }
}

/// Deterministic ground-to-air gain in dB (path loss only).
pub fn ground_air_baseline_db(params: &ChannelParams, aerial: Vec2, ground: Vec2, altitude: f64) -> Result<f64> {
    let g = large_scale_gain(params.omega0, params.alpha_ground, aerial.at_height(altitude), ground.at_height(0.0))?;
    Ok(linear_to_db(g))
}

/// Power gains |h|^2 of every link for one slot; held fixed across sub-slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    /// `gu_uav[q][z]`
    pub gu_uav: Vec<Vec<f64>>,
    /// `gu_eave[q]`
    pub gu_eave: Vec<f64>,
    /// `uav_node[z][f]`, `f = 0` is the BS; the diagonal entry `f = z + 1` is unused (0).
    pub uav_node: Vec<Vec<f64>>,
    /// `uav_eave[z]`, used for both forwarding leakage and jamming.
    pub uav_eave: Vec<f64>,
}

impl ChannelDraw {
    /// Samples the real channel: path loss, shadowing on ground-to-air links,
    /// Rician fading on ground-to-air links, pure LoS between aerial nodes.
    pub fn sample<R: Rng + ?Sized>(
        params: &ChannelParams,
        geo: &Geometry<'_>,
        shadowing: &GroundShadowing,
        rng: &mut R,
    ) -> Result<Self> {
        let ga = |aerial: Vec2, ground: Vec2, shadow_db: f64, rng: &mut R| -> Result<f64> {
            let base = ground_air_baseline_db(params, aerial, ground, geo.altitude)?;
            let h = rician_sample(rng, params.rician_k);
            Ok(10f64.powf((base + shadow_db) / 10.0) * h.norm_sqr())
        };
        let le_rows: Vec<Vec<f64>> = geo.le.iter().map(|&u| shadowing.row(u)).collect();
        let ea_row = shadowing.row(geo.ea);
        let mut gu_uav = Vec::with_capacity(geo.gu.len());
        let mut gu_eave = Vec::with_capacity(geo.gu.len());
        for (q, &g) in geo.gu.iter().enumerate() {
            let mut row = Vec::with_capacity(geo.le.len());
            for (z, &u) in geo.le.iter().enumerate() {
                row.push(ga(u, g, le_rows[z][q], rng)?);
            }
            gu_uav.push(row);
            gu_eave.push(ga(geo.ea, g, ea_row[q], rng)?);
        }
        let (uav_node, uav_eave) = air_links(params, geo)?;
        Ok(ChannelDraw { gu_uav, gu_eave, uav_node, uav_eave })
    }
}

/// Deterministic LoS gains among aerial nodes and towards the BS and EA.
pub fn air_links(params: &ChannelParams, geo: &Geometry<'_>) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let z_count = geo.le.len();
    let mut uav_node = vec![vec![0.0; z_count + 1]; z_count];
    let mut uav_eave = vec![0.0; z_count];
    for z in 0..z_count {
        let pz = geo.le[z].at_height(geo.altitude);
        for f in 0..=z_count {
            if f == z + 1 {
                continue;
            }
            uav_node[z][f] = large_scale_gain(params.omega0, params.alpha_air, pz, geo.node(f))?;
        }
        uav_eave[z] = large_scale_gain(params.omega0, params.alpha_air, pz, geo.ea.at_height(geo.altitude))?;
    }
    Ok((uav_node, uav_eave))
}

/// Per-slot link rates and the interference terms that produced them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RateReport {
    /// `r_gu[q][z]`, GU to LE-UAV (bit/s/Hz).
    pub r_gu: Vec<Vec<f64>>,
    /// `s_u2u[z][f]`, LE-UAV to receiver `f` (0 = BS).
    pub s_u2u: Vec<Vec<f64>>,
    pub r_eave_gu: Vec<f64>,
    pub s_eave_uav: Vec<f64>,
    /// Rate-weighted leakage `sum t_c R_qe + sum t_r S_ze` (bits/Hz).
    pub eave_total: f64,
    /// Interference at the serving UAV of each GU (0 when unscheduled).
    pub interference_gu: Vec<f64>,
    pub interference_eave_gu: Vec<f64>,
    pub interference_eave_uav: Vec<f64>,
    pub jam_at_eave_gu: Vec<f64>,
    pub jam_at_eave_uav: Vec<f64>,
}

fn serving_uav(action: &JointAction, q: usize) -> Option<usize> {
    action.schedule[q].iter().position(|&x| x == 1)
}

fn forwarding_target(action: &JointAction, z: usize) -> Option<usize> {
    action.formation[z].iter().position(|&x| x == 1)
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

/// Interference at UAV `z` from the other GUs scheduled to it.
pub fn gu_interference(action: &JointAction, q: usize, z: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    (0..action.schedule.len())
        .filter(|&o| o != q && action.schedule[o][z] == 1)
        .map(|o| p.gu_tx_power_w * draw.gu_uav[o][z])
        .sum()
}

/// Jamming power received by the EA, excluding UAV `exclude` if given.
pub fn jamming_at_eave(action: &JointAction, exclude: Option<usize>, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    (0..action.modes.len())
        .filter(|&j| Some(j) != exclude && action.modes[j] == 1)
        .map(|j| p.jam_power_w * draw.uav_eave[j])
        .sum()
}

/// Uplink rate from GU `q` to LE-UAV `z`. Jamming is known to legitimate
/// receivers and cancelled, so only co-scheduled GUs interfere.
pub fn gu_uplink_rate(action: &JointAction, q: usize, z: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    if action.schedule[q][z] == 0 {
        return 0.0;
    }
    let i = gu_interference(action, q, z, draw, p);
    log2_1p(p.gu_tx_power_w * draw.gu_uav[q][z] / (p.noise_power_w + i))
}

/// Interference at the EA from the other scheduled GUs.
pub fn gu_interference_at_eave(action: &JointAction, q: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    (0..action.schedule.len())
        .filter(|&o| o != q && serving_uav(action, o).is_some())
        .map(|o| p.gu_tx_power_w * draw.gu_eave[o])
        .sum()
}

/// Rate at which the EA overhears GU `q`.
pub fn eavesdrop_rate_gu(action: &JointAction, q: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    let Some(z) = serving_uav(action, q) else {
        return 0.0;
    };
    let i = gu_interference_at_eave(action, q, draw, p);
    let g = jamming_at_eave(action, Some(z), draw, p);
    log2_1p(p.gu_tx_power_w * draw.gu_eave[q] / (p.noise_power_w + i + g))
}

/// Interference at receiver `f` from the other UAVs forwarding to it.
pub fn u2u_interference(action: &JointAction, z: usize, f: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    (0..action.formation.len())
        .filter(|&o| o != z && action.formation[o][f] == 1)
        .map(|o| p.uav_tx_power_w * draw.uav_node[o][f])
        .sum()
}

/// Forwarding rate from LE-UAV `z` to receiver `f` (0 = BS).
pub fn u2u_rate(action: &JointAction, z: usize, f: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    if action.formation[z][f] == 0 {
        return 0.0;
    }
    let i = u2u_interference(action, z, f, draw, p);
    log2_1p(p.uav_tx_power_w * draw.uav_node[z][f] / (p.noise_power_w + i))
}

/// Interference at the EA from the other forwarding UAVs.
pub fn uav_interference_at_eave(action: &JointAction, z: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    (0..action.formation.len())
        .filter(|&o| o != z && forwarding_target(action, o).is_some())
        .map(|o| p.uav_tx_power_w * draw.uav_eave[o])
        .sum()
}

/// Rate at which the EA overhears LE-UAV `z` while it forwards.
pub fn eavesdrop_rate_uav(action: &JointAction, z: usize, draw: &ChannelDraw, p: &ChannelParams) -> f64 {
    if forwarding_target(action, z).is_none() {
        return 0.0;
    }
    let i = uav_interference_at_eave(action, z, draw, p);
    let g = jamming_at_eave(action, Some(z), draw, p);
    log2_1p(p.uav_tx_power_w * draw.uav_eave[z] / (p.noise_power_w + i + g))
}

/// Sub-slot weighted leakage; the forwarding term is weighted by the
/// forwarding sub-slot.
pub fn total_eavesdrop(r_eave_gu: &[f64], s_eave_uav: &[f64], t_collect: f64, t_forward: f64) -> f64 {
    t_collect * r_eave_gu.iter().sum::<f64>() + t_forward * s_eave_uav.iter().sum::<f64>()
}

pub fn compute_rates(action: &JointAction, draw: &ChannelDraw, p: &ChannelParams, t_collect: f64, t_forward: f64) -> RateReport {
    let q_count = action.schedule.len();
    let z_count = action.modes.len();
    let mut rep = RateReport {
        r_gu: vec![vec![0.0; z_count]; q_count],
        s_u2u: vec![vec![0.0; z_count + 1]; z_count],
        r_eave_gu: vec![0.0; q_count],
        s_eave_uav: vec![0.0; z_count],
        interference_gu: vec![0.0; q_count],
        interference_eave_gu: vec![0.0; q_count],
        interference_eave_uav: vec![0.0; z_count],
        jam_at_eave_gu: vec![0.0; q_count],
        jam_at_eave_uav: vec![0.0; z_count],
        eave_total: 0.0,
    };
    for q in 0..q_count {
        if let Some(z) = serving_uav(action, q) {
            rep.r_gu[q][z] = gu_uplink_rate(action, q, z, draw, p);
            rep.interference_gu[q] = gu_interference(action, q, z, draw, p);
            rep.interference_eave_gu[q] = gu_interference_at_eave(action, q, draw, p);
            rep.jam_at_eave_gu[q] = jamming_at_eave(action, Some(z), draw, p);
            rep.r_eave_gu[q] = eavesdrop_rate_gu(action, q, draw, p);
        }
    }
    for z in 0..z_count {
        if let Some(f) = forwarding_target(action, z) {
            rep.s_u2u[z][f] = u2u_rate(action, z, f, draw, p);
            rep.interference_eave_uav[z] = uav_interference_at_eave(action, z, draw, p);
            rep.jam_at_eave_uav[z] = jamming_at_eave(action, Some(z), draw, p);
            rep.s_eave_uav[z] = eavesdrop_rate_uav(action, z, draw, p);
        }
    }
    rep.eave_total = total_eavesdrop(&rep.r_eave_gu, &rep.s_eave_uav, t_collect, t_forward);
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_params() -> ChannelParams {
        ChannelParams {
            omega0: 1.0,
            alpha_ground: 2.0,
            alpha_air: 2.0,
            rician_k: 10.0,
            noise_power_w: 1.0,
            gu_tx_power_w: 1.0,
            uav_tx_power_w: 1.0,
            jam_power_w: 1.0,
            shadowing_std_db: 0.0,
            shadowing_corr_m: 100.0,
        }
    }

    /// `q` GUs, `z` UAVs, all gains zero, nothing scheduled.
    fn empty(q: usize, z: usize) -> (JointAction, ChannelDraw) {
        let a = JointAction::idle(q, z);
        let d = ChannelDraw {
            gu_uav: vec![vec![0.0; z]; q],
            gu_eave: vec![0.0; q],
            uav_node: vec![vec![0.0; z + 1]; z],
            uav_eave: vec![0.0; z],
        };
        (a, d)
    }

    #[test]
    fn large_scale_gain_examples() {
        let o = [0.0, 0.0, 0.0];
        assert_eq!(large_scale_gain(1.0, 2.0, o, [1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((large_scale_gain(1.0, 2.0, o, [0.0, 10.0, 0.0]).unwrap() - 0.01).abs() < 1e-15);
        // 1e-3 * 100^-2.5 = 1e-3 * 1e-5
        let g = large_scale_gain(1e-3, 2.5, o, [0.0, 0.0, 100.0]).unwrap();
        assert!((g / 1e-8 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_scale_gain_rejects_coincident_points() {
        let p = [3.0, 4.0, 5.0];
        assert!(matches!(large_scale_gain(1.0, 2.0, p, p), Err(Error::DegenerateDistance(..))));
    }

    #[test]
    fn rician_pure_los_has_unit_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let h = rician_sample(&mut rng, f64::INFINITY);
            assert!((h.norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rician_unit_mean_power() {
        for k in [0.0, 1.0, 10.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let n = 100_000;
            let m: f64 = (0..n).map(|_| rician_sample(&mut rng, k).norm_sqr()).sum::<f64>() / n as f64;
            assert!((0.98..=1.02).contains(&m), "K={k}: mean power {m}");
        }
    }

    #[test]
    fn uplink_rate_examples() {
        let p = unit_params();
        let (mut a, mut d) = empty(2, 1);
        assert_eq!(gu_uplink_rate(&a, 0, 0, &d, &p), 0.0);
        a.schedule[0][0] = 1;
        d.gu_uav[0][0] = 1.0;
        assert!((gu_uplink_rate(&a, 0, 0, &d, &p) - 1.0).abs() < 1e-15);
        // p|h|^2 = 4 sigma^2 with one equal-power interferer: log2(1 + 4/5)
        d.gu_uav[0][0] = 4.0;
        d.gu_uav[1][0] = 4.0;
        a.schedule[1][0] = 1;
        let r = gu_uplink_rate(&a, 0, 0, &d, &p);
        assert!((r - 0.847_996_906_554_950).abs() < 1e-12, "{r}");
    }

    #[test]
    fn eavesdrop_gu_examples() {
        let p = unit_params();
        let (mut a, mut d) = empty(1, 2);
        d.gu_eave[0] = 10.0;
        assert_eq!(eavesdrop_rate_gu(&a, 0, &d, &p), 0.0);
        a.schedule[0][0] = 1;
        assert!((eavesdrop_rate_gu(&a, 0, &d, &p) - 11f64.log2()).abs() < 1e-12);
        // jammer UAV 1 delivers 9 sigma^2 at the EA
        a.modes[1] = 1;
        d.uav_eave[1] = 9.0;
        assert!((eavesdrop_rate_gu(&a, 0, &d, &p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn u2u_examples() {
        let p = unit_params();
        let (mut a, mut d) = empty(1, 2);
        assert_eq!(u2u_rate(&a, 0, 0, &d, &p), 0.0);
        a.formation[0][0] = 1;
        d.uav_node[0][0] = 3.0;
        assert!((u2u_rate(&a, 0, 0, &d, &p) - 2.0).abs() < 1e-12);
        d.uav_node[0][0] = 1.0;
        d.uav_node[1][0] = 1.0;
        a.formation[1][0] = 1;
        let r = u2u_rate(&a, 0, 0, &d, &p);
        assert!((r - 1.5f64.log2()).abs() < 1e-12);
        assert!((r - 0.585).abs() < 1e-3);
    }

    #[test]
    fn eavesdrop_uav_examples() {
        let p = unit_params();
        let (mut a, mut d) = empty(1, 2);
        d.uav_eave[0] = 10.0;
        assert_eq!(eavesdrop_rate_uav(&a, 0, &d, &p), 0.0);
        a.formation[0][0] = 1;
        a.modes[1] = 1;
        d.uav_eave[1] = 4.0;
        assert!((eavesdrop_rate_uav(&a, 0, &d, &p) - 3f64.log2()).abs() < 1e-12);
        d.uav_eave[1] = 1e300;
        assert!(eavesdrop_rate_uav(&a, 0, &d, &p) < 1e-290);
    }

    #[test]
    fn total_eavesdrop_examples() {
        assert_eq!(total_eavesdrop(&[0.0, 0.0], &[0.0], 0.3, 0.3), 0.0);
        assert!((total_eavesdrop(&[2.0], &[], 0.3, 0.3) - 0.6).abs() < 1e-12);
        assert!((total_eavesdrop(&[1.0], &[2.0], 0.3, 0.3) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn ground_rows_match_the_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = ShadowingField::new(4.0, 300.0, &mut rng);
        let grounds = [Vec2::new(10.0, 20.0), Vec2::new(1500.0, 700.0), Vec2::new(0.0, 2000.0)];
        let gs = f.for_grounds(&grounds);
        for a in [Vec2::new(0.0, 0.0), Vec2::new(812.5, 1333.0)] {
            let row = gs.row(a);
            for (q, g) in grounds.iter().enumerate() {
                assert!((row[q] - f.db(a, *g)).abs() < 1e-9);
            }
        }
        assert_eq!(ShadowingField::flat().for_grounds(&grounds).row(Vec2::ZERO), vec![0.0; 3]);
    }

    #[test]
    fn shadowing_field_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = ShadowingField::new(4.0, 300.0, &mut rng);
        let n = 4000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for i in 0..n {
            let a = Vec2::new((i * 37 % 2000) as f64 * 7.3 % 2000.0, (i * 91 % 2000) as f64);
            let g = Vec2::new((i * 13 % 2000) as f64, (i * 57 % 2000) as f64 * 3.1 % 2000.0);
            let v = f.db(a, g);
            s += v;
            s2 += v * v;
        }
        let std = (s2 / n as f64 - (s / n as f64).powi(2)).sqrt();
        assert!(std > 2.0 && std < 6.0, "std {std}");
        // nearby points are strongly correlated
        let a = Vec2::new(500.0, 500.0);
        let g = Vec2::new(800.0, 300.0);
        assert!((f.db(a, g) - f.db(a + Vec2::new(5.0, 0.0), g)).abs() < 0.5);
    }
}
