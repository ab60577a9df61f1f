//! Scalar Schrödinger propagation in the full lattice plus slow potential.
//!
//! `i∂ψ/∂t = (p² + V(z) + V_slow(z))ψ` in recoil units. This resolves the
//! microscopic band physics that the Dirac model coarse-grains, and serves as
//! its oracle.

use std::f64::consts::{PI, TAU};

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bandstructure::{build_bloch_matrix, eigensolve, LatticeParams};
use crate::dirac::{moments, SlowPotential};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{self, check_drift, check_phase_step, GridSpec, PotentialStep, Spectral, WaveField};

const DRIFT_CHECK_EVERY: usize = 1024;
/// Completeness deficit of [`band_populations`] above which a warning is logged.
pub const COMPLETENESS_WARN: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub psi: Vec<Complex64>,
    pub time: f64,
    pub absorbed_left: f64,
    pub absorbed_right: f64,
}

impl WaveField for ScalarField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|x| x.norm_sqr()).collect()
    }
    fn absorbed(&self) -> (f64, f64) {
        (self.absorbed_left, self.absorbed_right)
    }
    fn time(&self) -> f64 {
        self.time
    }
}

impl ScalarField {
    pub fn centroid(&self) -> f64 {
        moments(&self.grid, &self.density()).0
    }

    pub fn width(&self) -> f64 {
        moments(&self.grid, &self.density()).1
    }

    /// `⟨p⟩` from the spectral representation.
    pub fn mean_momentum(&self) -> f64 {
        let mut s = Spectral::new(self.grid.n_points());
        let mut x = self.psi.clone();
        s.forward(&mut x);
        let (mut w, mut m) = (0.0, 0.0);
        for (a, k) in x.iter().zip(self.grid.momenta()) {
            w += a.norm_sqr();
            m += a.norm_sqr() * k;
        }
        m / w
    }
}

/// Normalized Gaussian `exp(-(z-z0)²/(4σ²))·e^{i p0 z}` with lab-frame momentum `p0`.
pub fn init_gaussian(grid: &GridSpec, p0: f64, sigma_z: f64, z0: f64) -> Result<ScalarField> {
    if !p0.is_finite() {
        return Err(Error::invalid("p0", "must be finite"));
    }
    let reach = p0.abs() + 5.0 / (2.0 * sigma_z);
    if reach >= grid.k_max() {
        return Err(Error::UnderResolved { what: format!("momenta up to {reach} with k_max = {}", grid.k_max()) });
    }
    let psi = field::gaussian(grid, z0, sigma_z, p0)?;
    Ok(ScalarField { grid: *grid, psi, time: 0.0, absorbed_left: 0.0, absorbed_right: 0.0 })
}

/// Gaussian superposition of Bloch states of a single band around `q0`,
/// centred at `z0`: the state an ideal (adiabatic) band loading would prepare.
///
/// Bloch vectors are gauge-fixed so that their dominant plane-wave component
/// at `q0` is real and positive at every `q`.
pub fn init_band_packet(
    grid: &GridSpec,
    lat: &LatticeParams,
    band: usize,
    q0: f64,
    sigma_z: f64,
    z0: f64,
    n_cut: usize,
) -> Result<ScalarField> {
    if band > 2 * n_cut {
        return Err(Error::invalid("band", format!("{band} exceeds the basis of n_cut = {n_cut}")));
    }
    grid.check_packet(z0, sigma_z)?;
    let sigma_q = 1.0 / (2.0 * sigma_z);
    let reference = eigensolve(&build_bloch_matrix(q0, lat, n_cut)?)?;
    let ref_row = (0..2 * n_cut + 1)
        .max_by(|&a, &b| reference.vectors[(a, band)].norm().total_cmp(&reference.vectors[(b, band)].norm()))
        .expect("non-empty basis");
    let max_p = (q0.abs() + 6.0 * sigma_q) + 2.0 * n_cut as f64;
    if max_p >= grid.k_max() {
        return Err(Error::UnderResolved { what: format!("plane waves up to {max_p} with k_max = {}", grid.k_max()) });
    }
    // replicas of the synthesized packet sit 2L apart. The envelope moves to
    // z0 through e^{-iqz0}; the periodic part stays locked to the lattice.
    let dq = PI / grid.length();
    let half = (6.0 * sigma_q / dq).ceil() as i64;
    let n = grid.n_points();
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    for j in -half..=half {
        let q = q0 + j as f64 * dq;
        let weight = (-(q - q0).powi(2) / (4.0 * sigma_q * sigma_q)).exp();
        let eig = eigensolve(&build_bloch_matrix(q, lat, n_cut)?)?;
        let pivot = eig.vectors[(ref_row, band)];
        let gauge = pivot.conj() / pivot.norm();
        for (row, m) in (-(n_cut as i64)..=n_cut as i64).enumerate() {
            let c = eig.vectors[(row, band)] * gauge * weight;
            if c.norm() < 1e-14 {
                continue;
            }
            let k = q + 2.0 * m as f64;
            accumulate_plane_wave(&mut psi, grid, k, c * Complex64::from_polar(1.0, -q * z0));
        }
    }
    let norm = (psi.iter().map(|x| x.norm_sqr()).sum::<f64>() * grid.dz()).sqrt();
    for x in &mut psi {
        *x /= norm;
    }
    Ok(ScalarField { grid: *grid, psi, time: 0.0, absorbed_left: 0.0, absorbed_right: 0.0 })
}

/// `psi[i] += c · e^{i k z_i}`, using a rotation recurrence.
fn accumulate_plane_wave(psi: &mut [Complex64], grid: &GridSpec, k: f64, c: Complex64) {
    let step = Complex64::from_polar(1.0, k * grid.dz());
    let mut ph = c;
    for (i, x) in psi.iter_mut().enumerate() {
        if i % 1024 == 0 {
            ph = c * Complex64::from_polar(1.0, k * grid.z(i));
        }
        *x += ph;
        ph *= step;
    }
}

/// Strang split-step propagator for the full scalar Hamiltonian.
pub struct SchrodingerPropagator {
    grid: GridSpec,
    dt: f64,
    potential: PotentialStep,
    kinetic: Vec<Complex64>,
    spectral: Spectral,
}

impl SchrodingerPropagator {
    pub fn new(grid: &GridSpec, lat: &LatticeParams, pot: &SlowPotential, dt: f64, absorber: bool) -> Result<Self> {
        let v: Vec<f64> = grid.positions().into_iter().map(|z| lat.potential(z) + pot.eval(z)).collect();
        let v_max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        check_phase_step(dt, v_max)?;
        if absorber && dt < 0.0 {
            return Err(Error::invalid("dt", "absorbing boundaries need dt > 0"));
        }
        let scale = 1.0 / grid.n_points() as f64;
        Ok(Self {
            grid: *grid,
            dt,
            potential: PotentialStep::new(grid, &v, dt, absorber),
            kinetic: grid.momenta().into_iter().map(|p| Complex64::from_polar(scale, -p * p * dt)).collect(),
            spectral: Spectral::new(grid.n_points()),
        })
    }

    pub fn run(&mut self, f: &mut ScalarField, n_steps: usize) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::invalid("grid", "field and propagator grids differ"));
        }
        if n_steps == 0 {
            return Ok(());
        }
        let initial = f.total_probability();
        let t0 = f.time;
        self.potential.open(&mut [&mut f.psi]);
        for step in 0..n_steps {
            self.spectral.forward(&mut f.psi);
            for (x, k) in f.psi.iter_mut().zip(&self.kinetic) {
                *x *= k;
            }
            self.spectral.inverse_unscaled(&mut f.psi);
            let (l, r) = self.potential.close(&mut [&mut f.psi], step + 1 == n_steps);
            f.absorbed_left += l;
            f.absorbed_right += r;
            f.time = t0 + (step + 1) as f64 * self.dt;
            if (step + 1) % DRIFT_CHECK_EVERY == 0 {
                check_drift(initial, f.total_probability(), f.time)?;
            }
        }
        check_drift(initial, f.total_probability(), f.time)
    }
}

pub fn evolve_full(
    mut f: ScalarField,
    lat: &LatticeParams,
    pot: &SlowPotential,
    dt: f64,
    n_steps: usize,
    absorber: bool,
) -> Result<ScalarField> {
    SchrodingerPropagator::new(&f.grid, lat, pot, dt, absorber)?.run(&mut f, n_steps)?;
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandPopulations {
    /// Probability in bands `0..n_bands`, relative to the on-grid norm.
    pub per_band: Vec<f64>,
    /// Summed probability over every band of the truncated basis.
    pub completeness: f64,
}

pub fn band_populations(f: &ScalarField, lat: &LatticeParams, n_cut: usize, n_bands: usize) -> Result<BandPopulations> {
    band_populations_with(f, lat, n_cut, n_bands, Execution::default())
}

/// Projects `ψ` onto Bloch states.
///
/// Quasimomenta are taken on `M = ⌈L/π⌉` points `q_j = -1 + (j+½)Δ`,
/// `Δ = 2/M ≤ 2π/L`, so the plane waves `q_j + 2n` form one uniform grid fine
/// enough for the discrete Parseval sum to be exact for a field supported
/// on the box. Plane-wave amplitudes come from a direct Fourier sum.
pub fn band_populations_with(
    f: &ScalarField,
    lat: &LatticeParams,
    n_cut: usize,
    n_bands: usize,
    exec: Execution,
) -> Result<BandPopulations> {
    let dim = 2 * n_cut + 1;
    if n_bands > dim {
        return Err(Error::invalid("n_bands", format!("{n_bands} exceeds basis size {dim}")));
    }
    let grid = &f.grid;
    let norm = f.norm();
    if norm.is_nan() || norm <= 0.0 {
        return Err(Error::invalid("field", "has no probability on the grid"));
    }
    let (lo, hi) = support(&f.psi);
    let m = (grid.length() / PI).ceil() as usize;
    let delta = 2.0 / m as f64;
    let qs: Vec<f64> = (0..m).map(|j| -1.0 + (j as f64 + 0.5) * delta).collect();
    let per_q = exec.map(&qs, |&q| -> Result<(Vec<f64>, f64)> {
        let eig = eigensolve(&build_bloch_matrix(q, lat, n_cut)?)?;
        let amps: Vec<Complex64> = (0..dim)
            .map(|row| {
                let k = q + 2.0 * (row as f64 - n_cut as f64);
                fourier_amplitude(&f.psi[lo..hi], grid.z(lo), grid.dz(), k)
            })
            .collect();
        let amps = DMatrix::from_column_slice(dim, 1, &amps);
        let proj = eig.vectors.adjoint() * amps;
        Ok((proj.iter().map(|a| a.norm_sqr()).collect(), proj.iter().map(|a| a.norm_sqr()).sum()))
    });
    let weight = delta / TAU;
    let mut per_band = vec![0.0; n_bands];
    let mut total = 0.0;
    for r in per_q {
        let (pops, sum) = r?;
        for (acc, p) in per_band.iter_mut().zip(&pops) {
            *acc += p * weight;
        }
        total += sum * weight;
    }
    for p in &mut per_band {
        *p /= norm;
    }
    let completeness = total / norm;
    if (1.0 - completeness).abs() > COMPLETENESS_WARN {
        warn!("band projection incomplete: captured {completeness:.4} of the norm (n_cut = {n_cut})");
    }
    Ok(BandPopulations { per_band, completeness })
}

/// Index range holding every point with `|ψ|²` above `1e-24` of the peak.
fn support(psi: &[Complex64]) -> (usize, usize) {
    let peak = psi.iter().fold(0.0f64, |m, x| m.max(x.norm_sqr()));
    let cut = peak * 1e-24;
    let lo = psi.iter().position(|x| x.norm_sqr() > cut).unwrap_or(0);
    let hi = psi.iter().rposition(|x| x.norm_sqr() > cut).map_or(psi.len(), |i| i + 1);
    (lo, hi)
}

/// `Σ_i ψ_i e^{-i k z_i} dz` over a contiguous slice starting at `z_start`.
fn fourier_amplitude(psi: &[Complex64], z_start: f64, dz: f64, k: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -k * dz);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut ph = Complex64::from_polar(1.0, -k * z_start);
    for (i, x) in psi.iter().enumerate() {
        if i % 1024 == 0 {
            ph = Complex64::from_polar(1.0, -k * (z_start + i as f64 * dz));
        }
        acc += x * ph;
        ph *= step;
    }
    acc * dz
}
