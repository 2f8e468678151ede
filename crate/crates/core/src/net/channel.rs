//! Propagation: log-distance path loss, log-normal shadowing and Rayleigh
//! block fading per RBG.

use super::{BaseStation, Rat, UserEquipment};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Normal};

/// Distances below this are clamped (co-located placement).
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Path loss in dB.
///
/// LTE macro: `128.1 + 37.6 log10(d_km)`. NR small cell:
/// `32.4 + 21 log10(d_m) + 20 log10(f_GHz)`.
pub fn path_loss_db(rat: Rat, distance_m: f64, carrier_hz: f64) -> f64 {
    let d = distance_m.max(MIN_DISTANCE_M);
    match rat {
        Rat::Lte => 128.1 + 37.6 * (d / 1000.0).log10(),
        Rat::Nr => 32.4 + 21.0 * d.log10() + 20.0 * (carrier_hz / 1e9).log10(),
    }
}

/// Linear power gain from path loss and shadowing (both dB of loss) and a
/// linear fast-fading power factor.
pub fn channel_gain(path_loss_db: f64, shadowing_db: f64, fading: f64) -> f64 {
    10f64.powf(-(path_loss_db + shadowing_db) / 10.0) * fading
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub shadowing_sigma_db: f64,
    pub fast_fading: bool,
    /// Effective noise power spectral density N0 in W/Hz.
    pub noise_density: f64,
}

/// One TTI's channel: g_{h,u,b} for every UE, base station and RBG.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    noise_density: f64,
    ue_count: usize,
    offsets: Vec<usize>,
    rbg_counts: Vec<usize>,
    stride: usize,
    gains: Vec<f64>,
}

impl ChannelRealization {
    /// All gains start at 1.0.
    pub fn new(ue_count: usize, rbg_counts: &[usize], noise_density: f64) -> Self {
        assert!(noise_density > 0.0, "N0 must be positive");
        let mut offsets = Vec::with_capacity(rbg_counts.len());
        let mut acc = 0;
        for &n in rbg_counts {
            offsets.push(acc);
            acc += n;
        }
        Self {
            noise_density,
            ue_count,
            offsets,
            rbg_counts: rbg_counts.to_vec(),
            stride: acc,
            gains: vec![1.0; ue_count * acc],
        }
    }

    pub fn noise_density(&self) -> f64 {
        self.noise_density
    }

    pub fn ue_count(&self) -> usize {
        self.ue_count
    }

    #[inline]
    fn index(&self, h: usize, u: usize, b: usize) -> usize {
        debug_assert!(h < self.rbg_counts[b]);
        u * self.stride + self.offsets[b] + h
    }

    #[inline]
    pub fn gain(&self, h: usize, u: usize, b: usize) -> f64 {
        self.gains[self.index(h, u, b)]
    }

    pub fn set_gain(&mut self, h: usize, u: usize, b: usize, gain: f64) {
        assert!(gain > 0.0, "channel gains must be positive");
        let i = self.index(h, u, b);
        self.gains[i] = gain;
    }

    fn link_mut(&mut self, u: usize, b: usize) -> &mut [f64] {
        let start = u * self.stride + self.offsets[b];
        &mut self.gains[start..start + self.rbg_counts[b]]
    }
}

/// Large-scale state of a drop plus the per-TTI fading sampler.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    params: ChannelParams,
    /// Path loss + shadowing as linear gain, indexed `[u][b]`.
    large_scale: Vec<Vec<f64>>,
    realization: ChannelRealization,
}

impl ChannelModel {
    /// Draws shadowing once for every UE/BS pair; it stays frozen for the run.
    pub fn new<R: Rng + ?Sized>(
        bss: &[BaseStation],
        ues: &[UserEquipment],
        params: ChannelParams,
        rng: &mut R,
    ) -> Self {
        let shadow = Normal::new(0.0, params.shadowing_sigma_db.max(0.0))
            .expect("non-negative sigma");
        let large_scale = ues
            .iter()
            .map(|ue| {
                bss.iter()
                    .map(|bs| {
                        let pl = path_loss_db(
                            bs.rat,
                            ue.position.distance(&bs.position),
                            bs.carrier_freq,
                        );
                        let s = if params.shadowing_sigma_db > 0.0 {
                            shadow.sample(rng)
                        } else {
                            0.0
                        };
                        channel_gain(pl, s, 1.0)
                    })
                    .collect()
            })
            .collect();
        let rbg_counts: Vec<usize> = bss.iter().map(|b| b.rbg_count).collect();
        let mut model = Self {
            params,
            large_scale,
            realization: ChannelRealization::new(ues.len(), &rbg_counts, params.noise_density),
        };
        model.fill_without_fading();
        model
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    /// Path loss and shadowing of link (u, b), linear.
    pub fn large_scale_gain(&self, u: usize, b: usize) -> f64 {
        self.large_scale[u][b]
    }

    /// One gain sample for (u, b) on a single RBG with a fresh fading draw.
    pub fn sample_gain<R: Rng + ?Sized>(&self, u: usize, b: usize, rng: &mut R) -> f64 {
        let fading = if self.params.fast_fading {
            Exp1.sample(rng)
        } else {
            1.0
        };
        self.large_scale[u][b] * fading
    }

    fn fill_without_fading(&mut self) {
        for u in 0..self.large_scale.len() {
            for b in 0..self.large_scale[u].len() {
                let g = self.large_scale[u][b];
                self.realization.link_mut(u, b).fill(g);
            }
        }
    }

    /// Resamples fast fading for every (h, u, b). Draw order is fixed
    /// (UE-major, then BS, then RBG) so it never depends on traffic or policy.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &ChannelRealization {
        if self.params.fast_fading {
            for u in 0..self.large_scale.len() {
                for b in 0..self.large_scale[u].len() {
                    let g = self.large_scale[u][b];
                    for slot in self.realization.link_mut(u, b) {
                        let f: f64 = Exp1.sample(rng);
                        // Exp(1) can return exactly 0; keep gains strictly positive.
                        *slot = g * f.max(f64::MIN_POSITIVE);
                    }
                }
            }
        }
        &self.realization
    }

    pub fn realization(&self) -> &ChannelRealization {
        &self.realization
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::Position;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_link(d: f64, rat: Rat, fading: bool, sigma: f64) -> (Vec<BaseStation>, Vec<UserEquipment>, ChannelParams) {
        let bs = BaseStation::new(0, rat, 40.0, 10e6, 3.5e9, Position::new(0.0, 0.0), 50);
        let ue = UserEquipment {
            id: 0,
            position: Position::new(d, 0.0),
            lte_bs: 0,
            nr_bs: 0,
            flows: vec![],
        };
        let params = ChannelParams {
            shadowing_sigma_db: sigma,
            fast_fading: fading,
            noise_density: 1e-20,
        };
        (vec![bs], vec![ue], params)
    }

    #[test]
    fn lte_path_loss_at_one_km() {
        assert!((path_loss_db(Rat::Lte, 1000.0, 2e9) - 128.1).abs() < 1e-12);
        let (bss, ues, p) = one_link(1000.0, Rat::Lte, false, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let model = ChannelModel::new(&bss, &ues, p, &mut rng);
        let g = model.sample_gain(0, 0, &mut rng);
        let want = 10f64.powf(-12.81);
        assert!(((g - want) / want).abs() < 1e-12, "{g} vs {want}");
    }

    #[test]
    fn nr_path_loss_formula() {
        // 32.4 + 21*2 + 20*log10(0.8)
        let want = 32.4 + 42.0 + 20.0 * 0.8f64.log10();
        assert!((path_loss_db(Rat::Nr, 100.0, 0.8e9) - want).abs() < 1e-12);
    }

    #[test]
    fn zero_distance_clamps_to_one_meter() {
        assert_eq!(
            path_loss_db(Rat::Nr, 0.0, 3.5e9),
            path_loss_db(Rat::Nr, 1.0, 3.5e9)
        );
        assert_eq!(
            path_loss_db(Rat::Lte, 0.0, 3.5e9),
            path_loss_db(Rat::Lte, MIN_DISTANCE_M, 3.5e9)
        );
    }

    #[test]
    fn same_seed_same_gain() {
        let (bss, ues, p) = one_link(350.0, Rat::Nr, true, 8.0);
        let draw = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let model = ChannelModel::new(&bss, &ues, p, &mut rng);
            model.sample_gain(0, 0, &mut rng)
        };
        assert_eq!(draw().to_bits(), draw().to_bits());
    }

    #[test]
    fn rayleigh_fading_has_unit_mean() {
        let (bss, ues, p) = one_link(1000.0, Rat::Lte, true, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = ChannelModel::new(&bss, &ues, p, &mut rng);
        let base = model.large_scale_gain(0, 0);
        let n = 100_000;
        let mean = (0..n).map(|_| model.sample_gain(0, 0, &mut rng) / base).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean fading {mean}");
    }

    #[test]
    fn advance_resamples_every_rbg() {
        let (bss, ues, p) = one_link(500.0, Rat::Lte, true, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = ChannelModel::new(&bss, &ues, p, &mut rng);
        let first = model.advance(&mut rng).clone();
        let r = model.advance(&mut rng).clone();
        assert!((0..50).all(|h| r.gain(h, 0, 0) != first.gain(h, 0, 0)));
        assert!((0..50).all(|h| r.gain(h, 0, 0) > 0.0));
    }
}
