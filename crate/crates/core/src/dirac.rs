//! Two-component Dirac propagation in the slow potential.
//!
//! `H = m c² σ_z + c q̂ σ_x + V_slow(z)` acting on `(ψ₂, ψ₁)`, stored here as
//! `psi_upper` and `psi_lower`. The kinetic part is applied exactly per
//! momentum mode; the potential as a phase in position space.

use num_complex::Complex64;

use crate::bandstructure::DiracParams;
use crate::error::{Error, Result};
use crate::field::{self, check_drift, check_phase_step, GridSpec, PotentialStep, Spectral, WaveField};

pub use crate::field::{transmission, TransmissionResult};

/// Steps between norm-drift checks.
const DRIFT_CHECK_EVERY: usize = 1024;

/// `V_slow(z) = -v0·exp(-2((z-z_c)/w0)²) - grav·(z-z_c)`: a Gaussian dipole
/// well tilted by gravity, which pulls towards `+z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlowPotential {
    pub v0: f64,
    pub w0: f64,
    pub grav: f64,
    pub z_center: f64,
}

impl SlowPotential {
    pub fn new(v0: f64, w0: f64, grav: f64, z_center: f64) -> Result<Self> {
        if !(v0.is_finite() && v0 >= 0.0) {
            return Err(Error::invalid("v0", format!("must be non-negative, got {v0}")));
        }
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(Error::invalid("w0", format!("must be positive, got {w0}")));
        }
        if !(grav.is_finite() && grav >= 0.0) {
            return Err(Error::invalid("grav", format!("must be non-negative, got {grav}")));
        }
        if !z_center.is_finite() {
            return Err(Error::invalid("z_center", "must be finite"));
        }
        Ok(Self { v0, w0, grav, z_center })
    }

    pub fn flat() -> Self {
        Self { v0: 0.0, w0: 1.0, grav: 0.0, z_center: 0.0 }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let x = z - self.z_center;
        -self.v0 * (-2.0 * (x / self.w0).powi(2)).exp() - self.grav * x
    }

    pub fn derivative(&self, z: f64) -> f64 {
        let x = z - self.z_center;
        self.v0 * 4.0 * x / (self.w0 * self.w0) * (-2.0 * (x / self.w0).powi(2)).exp() - self.grav
    }

    pub fn max_abs_on(&self, grid: &GridSpec) -> f64 {
        (0..grid.n_points()).map(|i| self.eval(grid.z(i)).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    pub grid: GridSpec,
    pub psi_upper: Vec<Complex64>,
    pub psi_lower: Vec<Complex64>,
    pub time: f64,
    pub absorbed_left: f64,
    pub absorbed_right: f64,
}

impl WaveField for SpinorField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn density(&self) -> Vec<f64> {
        self.psi_upper.iter().zip(&self.psi_lower).map(|(u, l)| u.norm_sqr() + l.norm_sqr()).collect()
    }
    fn absorbed(&self) -> (f64, f64) {
        (self.absorbed_left, self.absorbed_right)
    }
    fn time(&self) -> f64 {
        self.time
    }
}

impl SpinorField {
    /// `⟨z⟩` over the probability still on the grid.
    pub fn centroid(&self) -> f64 {
        moments(&self.grid, &self.density()).0
    }

    pub fn width(&self) -> f64 {
        moments(&self.grid, &self.density()).1
    }

    /// Probability per momentum mode (FFT order), normalized to the on-grid norm.
    pub fn momentum_density(&self) -> Vec<f64> {
        let mut s = Spectral::new(self.grid.n_points());
        let mut u = self.psi_upper.clone();
        let mut l = self.psi_lower.clone();
        s.forward(&mut u);
        s.forward(&mut l);
        let scale = self.grid.dz() / self.grid.n_points() as f64;
        u.iter().zip(&l).map(|(a, b)| (a.norm_sqr() + b.norm_sqr()) * scale).collect()
    }
}

/// Mean and standard deviation of a density on the grid.
pub(crate) fn moments(grid: &GridSpec, rho: &[f64]) -> (f64, f64) {
    let (mut w, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (i, r) in rho.iter().enumerate() {
        let z = grid.z(i);
        w += r;
        m1 += r * z;
        m2 += r * z * z;
    }
    let mean = m1 / w;
    (mean, (m2 / w - mean * mean).max(0.0).sqrt())
}

/// Unit eigenvector of `m c² σ_z + c q σ_x` with the positive eigenvalue.
/// Phase convention: first component real and positive.
pub fn positive_energy_spinor(q: f64, d: &DiracParams) -> Result<[Complex64; 2]> {
    let m = d.rest_energy;
    let cq = d.c_eff * q;
    let omega = m.hypot(cq);
    let a = m + omega;
    if a == 0.0 {
        return Err(Error::DegenerateSpinor);
    }
    let norm = a.hypot(cq);
    Ok([Complex64::new(a / norm, 0.0), Complex64::new(cq / norm, 0.0)])
}

/// Gaussian packet `exp(-(z-z0)²/(4σ²))·e^{i q0 z}` on the positive-energy branch at `q0`.
pub fn init_packet(grid: &GridSpec, q0: f64, sigma_z: f64, z0: f64, d: &DiracParams) -> Result<SpinorField> {
    if !(q0.is_finite() && q0.abs() <= 1.0) {
        return Err(Error::invalid("q0", format!("must lie in the first zone [-1, 1], got {q0}")));
    }
    let spinor = positive_energy_spinor(q0, d)?;
    let env = field::gaussian(grid, z0, sigma_z, q0)?;
    Ok(SpinorField {
        grid: *grid,
        psi_upper: env.iter().map(|e| e * spinor[0]).collect(),
        psi_lower: env.iter().map(|e| e * spinor[1]).collect(),
        time: 0.0,
        absorbed_left: 0.0,
        absorbed_right: 0.0,
    })
}

/// Precomputed Strang split-step propagator for one (grid, potential, params, dt).
pub struct DiracPropagator {
    grid: GridSpec,
    dt: f64,
    potential: PotentialStep,
    /// Per mode `(cos ωdt, m·sin ωdt/ω, cq·sin ωdt/ω)`, each times 1/N.
    /// The diagonal entries are `c ∓ i·a` and the off-diagonal is `-i·b`;
    /// keeping three reals instead of three complex arrays halves the memory
    /// traffic of the step.
    kinetic: Vec<[f64; 3]>,
    spectral: Spectral,
}

impl DiracPropagator {
    /// `dt` may be negative (backwards in time) only without absorbers.
    pub fn new(grid: &GridSpec, pot: &SlowPotential, d: &DiracParams, dt: f64, absorber: bool) -> Result<Self> {
        check_phase_step(dt, pot.max_abs_on(grid))?;
        if absorber && dt < 0.0 {
            return Err(Error::invalid("dt", "absorbing boundaries need dt > 0"));
        }
        let n = grid.n_points();
        let v: Vec<f64> = grid.positions().into_iter().map(|z| pot.eval(z)).collect();
        // exp(-i(mσ_z + cqσ_x)dt) = cos(ωdt) - i sin(ωdt)/ω (mσ_z + cqσ_x), scaled by the 1/N of the inverse FFT
        let scale = 1.0 / n as f64;
        let m = d.rest_energy;
        let kinetic = grid
            .momenta()
            .into_iter()
            .map(|q| {
                let cq = d.c_eff * q;
                let omega = m.hypot(cq);
                let (cos, sinc) =
                    if omega == 0.0 { (1.0, dt) } else { ((omega * dt).cos(), (omega * dt).sin() / omega) };
                [cos * scale, sinc * m * scale, sinc * cq * scale]
            })
            .collect();
        Ok(Self {
            grid: *grid,
            dt,
            potential: PotentialStep::new(grid, &v, dt, absorber),
            kinetic,
            spectral: Spectral::new(n),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn kinetic(&mut self, f: &mut SpinorField) {
        self.spectral.forward_pair(&mut f.psi_upper, &mut f.psi_lower);
        for ((u, l), &[c, a, b]) in f.psi_upper.iter_mut().zip(f.psi_lower.iter_mut()).zip(&self.kinetic) {
            // (c - ia)u - ib·l and -ib·u + (c + ia)l, written out in reals
            let (ur, ui, lr, li) = (u.re, u.im, l.re, l.im);
            *u = Complex64::new(c * ur + a * ui + b * li, c * ui - a * ur - b * lr);
            *l = Complex64::new(b * ui + c * lr - a * li, -b * ur + c * li + a * lr);
        }
        self.spectral.inverse_unscaled_pair(&mut f.psi_upper, &mut f.psi_lower);
    }

    /// Advances `f` by `n_steps` Strang steps. Adjacent potential half-steps
    /// are fused into one full phase; the absorbing mask commutes with the
    /// potential phase and is applied once per step.
    pub fn run(&mut self, f: &mut SpinorField, n_steps: usize) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::invalid("grid", "field and propagator grids differ"));
        }
        if n_steps == 0 {
            return Ok(());
        }
        let initial = f.total_probability();
        let t0 = f.time;
        self.potential.open(&mut [&mut f.psi_upper, &mut f.psi_lower]);
        for step in 0..n_steps {
            self.kinetic(f);
            let (l, r) = self.potential.close(&mut [&mut f.psi_upper, &mut f.psi_lower], step + 1 == n_steps);
            f.absorbed_left += l;
            f.absorbed_right += r;
            f.time = t0 + (step + 1) as f64 * self.dt;
            if (step + 1) % DRIFT_CHECK_EVERY == 0 {
                // mid-run the fields carry an extra half phase, which leaves |ψ|² unchanged
                check_drift(initial, f.total_probability(), f.time)?;
            }
        }
        check_drift(initial, f.total_probability(), f.time)
    }
}

/// Evolves `f` for `n_steps` of size `dt` under the Dirac Hamiltonian.
pub fn evolve(
    mut f: SpinorField,
    pot: &SlowPotential,
    d: &DiracParams,
    dt: f64,
    n_steps: usize,
    absorber: bool,
) -> Result<SpinorField> {
    DiracPropagator::new(&f.grid, pot, d, dt, absorber)?.run(&mut f, n_steps)?;
    Ok(f)
}

/// Landau-Zener estimate of barrier transmission.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauZener {
    /// Single passage `exp(-π (mc²)² / (c F))`.
    pub single: f64,
    /// Entry and exit passages treated as independent (`single²`); diagnostic only.
    pub double: f64,
}

/// Diabatic crossing probability of the upper branch sweeping through the
/// gap under a constant force `force` (E_r per 1/k), with ħ = 1.
pub fn landau_zener_transmission(d: &DiracParams, force: f64) -> Result<LandauZener> {
    if !(force.is_finite() && force > 0.0) {
        return Err(Error::invalid("force", format!("must be positive, got {force}")));
    }
    let single = (-std::f64::consts::PI * d.rest_energy * d.rest_energy / (d.c_eff * force)).exp();
    Ok(LandauZener { single, double: single * single })
}

/// Extremal quasimomenta of a semiclassical trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasimomentumRange {
    pub q_min: f64,
    pub q_max: f64,
    /// `|q| ≥ 1` somewhere: the trajectory leaves the first Brillouin zone.
    pub zone_edge: bool,
}

/// Samples used along the trajectory by [`semiclassical_q_range`].
pub const TRAJECTORY_SAMPLES: usize = 4001;

/// Follows `E = ±sqrt((mc²)² + (c q)²) + V_slow(z)` from `z_start` to `z_end`
/// for a forward-moving particle. Where `E - V` is positive the particle is on
/// the upper branch with `q > 0`; once the potential lifts it below the
/// crossing it continues on the lower branch, where forward motion means
/// `q < 0`. Points inside the gap (`|E - V| < mc²`) are skipped, i.e. the gap
/// is crossed diabatically.
pub fn semiclassical_q_range(
    e_total: f64,
    pot: &SlowPotential,
    d: &DiracParams,
    z_start: f64,
    z_end: f64,
) -> Result<QuasimomentumRange> {
    let (mut q_min, mut q_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..TRAJECTORY_SAMPLES {
        let z = z_start + (z_end - z_start) * i as f64 / (TRAJECTORY_SAMPLES - 1) as f64;
        let kinetic = e_total - pot.eval(z);
        let excess = kinetic * kinetic - d.rest_energy * d.rest_energy;
        if excess < 0.0 {
            continue;
        }
        let q = kinetic.signum() * excess.sqrt() / d.c_eff;
        q_min = q_min.min(q);
        q_max = q_max.max(q);
    }
    if q_min > q_max {
        return Err(Error::ClassicallyForbidden);
    }
    Ok(QuasimomentumRange { q_min, q_max, zone_edge: q_min <= -1.0 || q_max >= 1.0 })
}
