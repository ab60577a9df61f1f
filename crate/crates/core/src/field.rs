//! Uniform periodic grids, spectral transforms, absorbing layers and the
//! transmission bookkeeping shared by the Dirac and Schrödinger engines.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Points per standard deviation a packet must span, in position and in momentum.
pub const MIN_POINTS_PER_SIGMA: f64 = 8.0;
/// Fraction of the domain covered by each absorbing layer.
pub const ABSORBER_FRACTION: f64 = 0.1;
/// Peak amplitude-damping rate (per ħ/E_r) at the outer edge of the layer.
pub const ABSORBER_RATE: f64 = 0.5;
/// Norm plus absorbed probability may drift at most this much.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Accuracy bound `dt · max|V| < 0.1` of the split-step schemes.
pub const PHASE_STEP_LIMIT: f64 = 0.1;
/// Norm outside the domain above which a packet is rejected as clipped.
pub const CLIP_LIMIT: f64 = 1e-6;

/// Uniform periodic grid `z_i = z_min + i·dz`, `i < n_points`, `dz = (z_max-z_min)/n_points`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    z_min: f64,
    z_max: f64,
    n_points: usize,
}

impl GridSpec {
    pub fn new(z_min: f64, z_max: f64, n_points: usize) -> Result<Self> {
        if !(z_min.is_finite() && z_max.is_finite() && z_max > z_min) {
            return Err(Error::invalid("grid", format!("need z_max > z_min, got [{z_min}, {z_max}]")));
        }
        if n_points < 256 || !n_points.is_power_of_two() {
            return Err(Error::invalid("n_points", format!("must be a power of two >= 256, got {n_points}")));
        }
        Ok(Self { z_min, z_max, n_points })
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }
    pub fn z_max(&self) -> f64 {
        self.z_max
    }
    pub fn n_points(&self) -> usize {
        self.n_points
    }
    pub fn length(&self) -> f64 {
        self.z_max - self.z_min
    }
    pub fn dz(&self) -> f64 {
        self.length() / self.n_points as f64
    }
    pub fn dk(&self) -> f64 {
        TAU / self.length()
    }
    /// Largest representable momentum `π/dz`.
    pub fn k_max(&self) -> f64 {
        PI / self.dz()
    }

    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.z(i)).collect()
    }

    /// Momenta in FFT order: `0, dk, …, (N/2-1)dk, -N/2·dk, …, -dk`.
    pub fn momenta(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = self.dk();
        (0..n).map(|j| if j < n / 2 { j as f64 * dk } else { (j - n) as f64 * dk }).collect()
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.z_min && z < self.z_max
    }

    /// Checks that a Gaussian packet of position width `sigma_z` centred at
    /// `z0` is resolved in both spaces and that `z0 ± 5σ` lies inside the domain.
    pub fn check_packet(&self, z0: f64, sigma_z: f64) -> Result<()> {
        if !(sigma_z.is_finite() && sigma_z > 0.0) {
            return Err(Error::invalid("sigma_z", format!("must be positive, got {sigma_z}")));
        }
        if z0 - 5.0 * sigma_z < self.z_min || z0 + 5.0 * sigma_z > self.z_max {
            return Err(Error::invalid(
                "z0",
                format!("packet z0 ± 5σ = [{}, {}] leaves the domain", z0 - 5.0 * sigma_z, z0 + 5.0 * sigma_z),
            ));
        }
        if sigma_z / self.dz() < MIN_POINTS_PER_SIGMA {
            return Err(Error::UnderResolved {
                what: format!("packet width σ_z = {sigma_z} with dz = {}", self.dz())
            });
        }
        let sigma_q = 1.0 / (2.0 * sigma_z);
        if sigma_q / self.dk() < MIN_POINTS_PER_SIGMA {
            return Err(Error::UnderResolved {
                what: format!("momentum width σ_q = {sigma_q} with dk = {}", self.dk()),
            });
        }
        Ok(())
    }
}

/// Forward/inverse FFT pair on one grid size.
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: [Vec<Complex64>; 2],
}

impl Spectral {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let zero = vec![Complex64::new(0.0, 0.0); len];
        Self { forward, inverse, scratch: [zero.clone(), zero] }
    }

    pub(crate) fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch[0]);
    }

    /// Inverse transform without the `1/N` factor; callers fold it into their own multipliers.
    pub(crate) fn inverse_unscaled(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch[0]);
    }

    /// Transforms two components, concurrently when the `parallel` feature is on.
    pub(crate) fn forward_pair(&mut self, a: &mut [Complex64], b: &mut [Complex64]) {
        let fft = &self.forward;
        pair(&mut self.scratch, a, b, |x, s| fft.process_with_scratch(x, s));
    }

    pub(crate) fn inverse_unscaled_pair(&mut self, a: &mut [Complex64], b: &mut [Complex64]) {
        let fft = &self.inverse;
        pair(&mut self.scratch, a, b, |x, s| fft.process_with_scratch(x, s));
    }
}

fn pair<F>(scratch: &mut [Vec<Complex64>; 2], a: &mut [Complex64], b: &mut [Complex64], f: F)
where
    F: Fn(&mut [Complex64], &mut [Complex64]) + Sync,
{
    let [sa, sb] = scratch;
    #[cfg(feature = "parallel")]
    rayon::join(|| f(a, sa), || f(b, sb));
    #[cfg(not(feature = "parallel"))]
    {
        f(a, sa);
        f(b, sb);
    }
}

/// Cosine-ramp amplitude mask over the outer [`ABSORBER_FRACTION`] of each side.
#[derive(Clone, Debug)]
pub(crate) struct Absorber {
    mask: Vec<f64>,
    loss: Vec<f64>,
    /// Indices `..left_end` and `right_start..` carry a nontrivial mask.
    left_end: usize,
    right_start: usize,
}

impl Absorber {
    pub(crate) fn new(grid: &GridSpec, dt: f64) -> Self {
        let width = ABSORBER_FRACTION * grid.length();
        let left_edge = grid.z_min + width;
        let right_edge = grid.z_max - width;
        let mask: Vec<f64> = grid
            .positions()
            .into_iter()
            .map(|z| {
                let depth = if z < left_edge {
                    (left_edge - z) / width
                } else if z > right_edge {
                    (z - right_edge) / width
                } else {
                    0.0
                };
                let ramp = 0.5 * (1.0 - (PI * depth.min(1.0)).cos());
                (-ABSORBER_RATE * dt * ramp).exp()
            })
            .collect();
        let loss: Vec<f64> = mask.iter().map(|m| 1.0 - m * m).collect();
        let half = grid.n_points / 2;
        let left_end = loss[..half].iter().rposition(|&l| l != 0.0).map_or(0, |i| i + 1);
        let right_start = loss[half..].iter().position(|&l| l != 0.0).map_or(grid.n_points, |i| half + i);
        Self { mask, loss, left_end, right_start }
    }

    /// Probability the mask is about to remove from `comp`, as `(left, right)` sums of `|ψ|²·(1 - m²)`.
    fn tally(&self, comp: &[Complex64]) -> (f64, f64) {
        let sum = |r: std::ops::Range<usize>| -> f64 {
            comp[r.clone()].iter().zip(&self.loss[r]).map(|(x, l)| x.norm_sqr() * l).sum()
        };
        (sum(0..self.left_end), sum(self.right_start..comp.len()))
    }

    #[cfg(test)]
    fn apply(&self, comp: &mut [Complex64], dz: f64) -> (f64, f64) {
        let (l, r) = self.tally(comp);
        for (x, m) in comp.iter_mut().zip(&self.mask) {
            *x *= m;
        }
        (l * dz, r * dz)
    }
}

/// Diagonal potential phases of a split-step scheme, with the absorbing
/// mask folded in. The mask is real, so it commutes with the phase and the
/// removed probability can be tallied before the combined multiply.
pub(crate) struct PotentialStep {
    half: Vec<Complex64>,
    half_masked: Vec<Complex64>,
    full_masked: Vec<Complex64>,
    absorber: Option<Absorber>,
    dz: f64,
}

impl PotentialStep {
    pub(crate) fn new(grid: &GridSpec, v: &[f64], dt: f64, absorber: bool) -> Self {
        let absorber = absorber.then(|| Absorber::new(grid, dt));
        let mask = |i: usize| absorber.as_ref().map_or(1.0, |a| a.mask[i]);
        let half: Vec<Complex64> = v.iter().map(|&v| Complex64::from_polar(1.0, -0.5 * v * dt)).collect();
        let half_masked = half.iter().enumerate().map(|(i, p)| p * mask(i)).collect();
        let full_masked = v.iter().enumerate().map(|(i, &v)| Complex64::from_polar(mask(i), -v * dt)).collect();
        Self { half, half_masked, full_masked, absorber, dz: grid.dz() }
    }

    /// Opening half step, before the first kinetic step.
    pub(crate) fn open(&self, comps: &mut [&mut [Complex64]]) {
        for c in comps.iter_mut() {
            mul(c, &self.half);
        }
    }

    /// Closes one step: a fused full phase (or the final half phase) and the
    /// mask. Returns the probability absorbed on each side.
    pub(crate) fn close(&self, comps: &mut [&mut [Complex64]], last: bool) -> (f64, f64) {
        let (mut left, mut right) = (0.0, 0.0);
        if let Some(a) = &self.absorber {
            for c in comps.iter() {
                let (l, r) = a.tally(c);
                left += l;
                right += r;
            }
        }
        let phase = if last { &self.half_masked } else { &self.full_masked };
        for c in comps.iter_mut() {
            mul(c, phase);
        }
        (left * self.dz, right * self.dz)
    }
}

fn mul(x: &mut [Complex64], phase: &[Complex64]) {
    for (a, p) in x.iter_mut().zip(phase) {
        *a *= p;
    }
}

/// Common view of the Dirac spinor and the Schrödinger scalar wavefunction.
pub trait WaveField {
    fn grid(&self) -> &GridSpec;
    /// Total probability density `Σ|ψ_c|²` at every grid point.
    fn density(&self) -> Vec<f64>;
    /// Probability removed by the `(left, right)` absorbers so far.
    fn absorbed(&self) -> (f64, f64);
    fn time(&self) -> f64;

    fn norm(&self) -> f64 {
        self.density().iter().sum::<f64>() * self.grid().dz()
    }

    /// Norm on the grid plus absorbed probability; conserved by evolution.
    fn total_probability(&self) -> f64 {
        let (l, r) = self.absorbed();
        self.norm() + l + r
    }
}

/// Population split at the end of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmissionResult {
    pub transmitted: f64,
    pub reflected: f64,
    pub remaining: f64,
    pub detect_z: f64,
    pub time: f64,
}

/// Splits the probability into three regions, normalized to the conserved total:
///
/// * transmitted: `z > detect_z` plus everything absorbed on the right;
/// * reflected: `z < reflect_z` (in front of the barrier) plus everything absorbed on the left;
/// * remaining: the strip `reflect_z ≤ z ≤ detect_z`.
pub fn transmission<F: WaveField + ?Sized>(f: &F, reflect_z: f64, detect_z: f64) -> Result<TransmissionResult> {
    let grid = f.grid();
    if !grid.contains(detect_z) {
        return Err(Error::invalid("detect_z", format!("{detect_z} outside the domain")));
    }
    if reflect_z.is_nan() || detect_z.is_nan() || reflect_z > detect_z {
        return Err(Error::invalid("reflect_z", format!("{reflect_z} must not exceed detect_z = {detect_z}")));
    }
    let dz = grid.dz();
    let (abs_left, abs_right) = f.absorbed();
    let (mut beyond, mut before, mut between) = (0.0, 0.0, 0.0);
    for (i, rho) in f.density().into_iter().enumerate() {
        let z = grid.z(i);
        if z > detect_z {
            beyond += rho;
        } else if z < reflect_z {
            before += rho;
        } else {
            between += rho;
        }
    }
    let transmitted = beyond * dz + abs_right;
    let reflected = before * dz + abs_left;
    let remaining = between * dz;
    let total = transmitted + reflected + remaining;
    Ok(TransmissionResult {
        transmitted: transmitted / total,
        reflected: reflected / total,
        remaining: remaining / total,
        detect_z,
        time: f.time(),
    })
}

pub(crate) fn check_drift(initial: f64, current: f64, time: f64) -> Result<()> {
    let drift = (current - initial).abs();
    if drift.is_nan() || drift > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift { drift, time });
    }
    Ok(())
}

pub(crate) fn check_phase_step(dt: f64, v_max: f64) -> Result<()> {
    let product = dt.abs() * v_max;
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::invalid("dt", format!("must be finite and nonzero, got {dt}")));
    }
    if product >= PHASE_STEP_LIMIT {
        return Err(Error::TimeStepTooLarge { dt, product });
    }
    Ok(())
}

/// Normalized Gaussian envelope `exp(-(z-z0)²/(4σ²) + i k z)` on the grid,
/// rejected when more than [`CLIP_LIMIT`] of an untruncated packet would lie outside.
pub(crate) fn gaussian(grid: &GridSpec, z0: f64, sigma_z: f64, k: f64) -> Result<Vec<Complex64>> {
    grid.check_packet(z0, sigma_z)?;
    // fraction of |ψ|² (a normal with std σ) outside [z_min, z_max]
    let outside = 0.5 * erfc((z0 - grid.z_min) / (sigma_z * 2f64.sqrt()))
        + 0.5 * erfc((grid.z_max - z0) / (sigma_z * 2f64.sqrt()));
    if outside > CLIP_LIMIT {
        return Err(Error::PacketClipped { outside });
    }
    let mut psi: Vec<Complex64> = grid
        .positions()
        .into_iter()
        .map(|z| Complex64::from_polar((-(z - z0).powi(2) / (4.0 * sigma_z * sigma_z)).exp(), k * z))
        .collect();
    let norm = (psi.iter().map(|x| x.norm_sqr()).sum::<f64>() * grid.dz()).sqrt();
    for x in &mut psi {
        *x /= norm;
    }
    Ok(psi)
}

/// Complementary error function (Numerical Recipes `erfcc`, |rel err| < 1.2e-7).
pub(crate) fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.265_512_23
            + t * (1.000_023_68
                + t * (0.374_091_96
                    + t * (0.096_784_18
                        + t * (-0.186_288_06
                            + t * (0.278_868_07
                                + t * (-1.135_203_98
                                    + t * (1.488_515_87 + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 1.0, 300).is_err());
        assert!(GridSpec::new(0.0, 1.0, 128).is_err());
        assert!(GridSpec::new(1.0, 0.0, 256).is_err());
        let g = GridSpec::new(-600.0, 1000.0, 1 << 14).unwrap();
        assert_eq!(g.dz(), 1600.0 / 16384.0);
        let k = g.momenta();
        assert_eq!(k[1], g.dk());
        assert_eq!(k[(1 << 13) + 1], -((1 << 13) as f64 - 1.0) * g.dk());
    }

    #[test]
    fn packet_resolution_checks() {
        let g = GridSpec::new(-600.0, 1000.0, 1 << 14).unwrap();
        assert!(g.check_packet(0.0, 10.0).is_ok());
        // too narrow in momentum: sigma_q / dk < 8
        assert!(matches!(
            g.check_packet(0.0, 200.0),
            Err(Error::UnderResolved { .. }) | Err(Error::InvalidParameter { .. })
        ));
        assert!(g.check_packet(-595.0, 10.0).is_err());
        let coarse = GridSpec::new(-600.0, 1000.0, 256).unwrap();
        assert!(matches!(coarse.check_packet(0.0, 10.0), Err(Error::UnderResolved { .. })));
    }

    #[test]
    fn gaussian_is_normalized() {
        let g = GridSpec::new(-600.0, 600.0, 1 << 12).unwrap();
        let psi = gaussian(&g, 10.0, 10.0, 0.9).unwrap();
        let n: f64 = psi.iter().map(|x| x.norm_sqr()).sum::<f64>() * g.dz();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.157_299_207_050_285_1).abs() < 1e-7);
        assert!((erfc(-1.0) - 1.842_700_792_949_715).abs() < 1e-7);
    }

    #[test]
    fn absorber_accounts_every_bit_removed() {
        let g = GridSpec::new(-100.0, 100.0, 1024).unwrap();
        let a = Absorber::new(&g, 0.1);
        let mut psi = vec![Complex64::new(0.1, 0.05); 1024];
        let before: f64 = psi.iter().map(|x| x.norm_sqr()).sum::<f64>() * g.dz();
        let (l, r) = a.apply(&mut psi, g.dz());
        let after: f64 = psi.iter().map(|x| x.norm_sqr()).sum::<f64>() * g.dz();
        assert!((before - after - l - r).abs() < 1e-13 * before);
        // the grid is one point short of symmetric
        assert!(l > 0.0 && (l - r).abs() < 2e-2 * l);
        // interior untouched
        assert_eq!(psi[512], Complex64::new(0.1, 0.05));
    }

    #[test]
    fn spectral_round_trip() {
        let mut s = Spectral::new(256);
        let orig: Vec<Complex64> = (0..256).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut x = orig.clone();
        s.forward(&mut x);
        s.inverse_unscaled(&mut x);
        for (a, b) in x.iter().zip(&orig) {
            assert!((a / 256.0 - b).norm() < 1e-13);
        }
    }
}
