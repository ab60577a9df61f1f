//! The experiments: band structure at the crossing, single Klein-tunneling
//! runs, phase and barrier-height sweeps, and the analytic estimates.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use log::warn;

use crate::bandstructure::{fit_dirac, DiracFit, DiracParams, LatticeParams, DEFAULT_FIT_HALFWIDTH, DEFAULT_N_CUT};
use crate::dirac::{self, init_packet, semiclassical_q_range, DiracPropagator, SlowPotential, SpinorField};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field::{transmission, GridSpec, TransmissionResult, ABSORBER_FRACTION};
use crate::io::{self, fmt_sig};
use crate::plot::{flagged_bands, Figure, Series};
use crate::roots::bisect;
use crate::schrodinger::{init_band_packet, init_gaussian, ScalarField, SchrodingerPropagator};
use crate::units::{gravity_slope, recoil_scale, PhysicalConstants};

/// Upper end of the trap-depth search bracket (E_r).
pub const V0_SEARCH_MAX: f64 = 1e4;
pub const DEFAULT_VB: f64 = 5.0;
/// `2ω₀ ≈ 46 µm`.
pub const DEFAULT_W0_UM: f64 = 23.0;
pub const DEFAULT_Q0: f64 = 0.9;
/// Momentum width 0.05 ħk.
pub const DEFAULT_SIGMA_Z: f64 = 10.0;
pub const DEFAULT_TIME_MS: f64 = 5.0;
/// Time step (ħ/E_r). Set by the phase guard `dt·max|V| < 0.1` on the default domain;
/// transmissions agree with `dt = 5e-4` to about 1e-10.
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_Z_MIN: f64 = -600.0;
pub const DEFAULT_Z_MAX: f64 = 1000.0;
pub const DIRAC_POINTS: usize = 1 << 14;
pub const SCHRODINGER_POINTS: usize = 1 << 16;
/// Detection plane sits this many waists beyond the barrier maximum.
pub const DEFAULT_DETECT_OFFSET_W0: f64 = 0.5;
pub const DEFAULT_PHI_POINTS: usize = 41;
pub const DEFAULT_VB_POINTS: usize = 26;
pub const DEFAULT_VB_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Dirac,
    Schrodinger,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Dirac => "dirac",
            Engine::Schrodinger => "schrodinger",
        }
    }
}

/// Initial state of the Schrödinger engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loading {
    /// Bare Gaussian at lab momentum `q0 ± 2` with the lattice switched on suddenly.
    Sudden,
    /// Gaussian superposition of second-excited-band Bloch states.
    Band,
}

impl Loading {
    pub fn name(self) -> &'static str {
        match self {
            Loading::Sudden => "sudden",
            Loading::Band => "band",
        }
    }
}

/// One fully specified scenario. Lengths in 1/k, times in ħ/E_r, energies in E_r.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub lattice: LatticeParams,
    pub constants: PhysicalConstants,
    pub barrier_height_vb: f64,
    pub w0: f64,
    /// Quasimomentum relative to the crossing (ħk).
    pub q0: f64,
    pub sigma_z: f64,
    pub total_time: f64,
    pub engine: Engine,
    pub loading: Loading,
    pub z_min: f64,
    pub z_max: f64,
    /// `None` picks the engine default.
    pub n_points: Option<usize>,
    pub dt: f64,
    pub n_cut: usize,
    pub fit_halfwidth: f64,
    /// Distance of the detection plane beyond the barrier maximum.
    pub detect_offset: f64,
    /// Shift of the initial packet from the trap minimum (ballistic fall during preparation).
    pub fall_offset: f64,
    pub absorber: bool,
    pub phi_points: usize,
    pub vb_points: usize,
    pub vb_max: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::with_constants(PhysicalConstants::rb87())
    }
}

impl ScenarioConfig {
    /// Reference scenario with the SI-derived defaults (waist, duration) taken from `constants`.
    pub fn with_constants(constants: PhysicalConstants) -> Self {
        let scale = recoil_scale(&constants);
        let w0 = scale.length_from_si(DEFAULT_W0_UM * 1e-6);
        Self {
            lattice: LatticeParams::experiment(std::f64::consts::PI),
            constants,
            barrier_height_vb: DEFAULT_VB,
            w0,
            q0: DEFAULT_Q0,
            sigma_z: DEFAULT_SIGMA_Z,
            total_time: scale.time_from_si(DEFAULT_TIME_MS * 1e-3),
            engine: Engine::Dirac,
            loading: Loading::Sudden,
            z_min: DEFAULT_Z_MIN,
            z_max: DEFAULT_Z_MAX,
            n_points: None,
            dt: DEFAULT_DT,
            n_cut: DEFAULT_N_CUT,
            fit_halfwidth: DEFAULT_FIT_HALFWIDTH,
            detect_offset: DEFAULT_DETECT_OFFSET_W0 * w0,
            fall_offset: 0.0,
            absorber: true,
            phi_points: DEFAULT_PHI_POINTS,
            vb_points: DEFAULT_VB_POINTS,
            vb_max: DEFAULT_VB_MAX,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points.unwrap_or(match self.engine {
            Engine::Dirac => DIRAC_POINTS,
            Engine::Schrodinger => SCHRODINGER_POINTS,
        })
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.z_min, self.z_max, self.n_points())
    }

    pub fn gravity_slope(&self) -> f64 {
        gravity_slope(&self.constants)
    }

    /// Lab-frame momentum of the second-excited-band packet: the dominant
    /// plane wave of band 2 at quasimomentum `q` is `q + 2·sign(q)`.
    pub fn lab_momentum(&self) -> f64 {
        self.q0 + if self.q0 < 0.0 { -2.0 } else { 2.0 }
    }

    pub fn n_steps(&self) -> usize {
        (self.total_time / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.barrier_height_vb.is_finite() && self.barrier_height_vb >= 0.0) {
            return Err(Error::invalid("barrier_height_vb", "must be non-negative"));
        }
        if !(self.total_time.is_finite() && self.total_time >= 0.0) {
            return Err(Error::invalid("total_time", "must be non-negative"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if !(self.w0.is_finite() && self.w0 > 0.0) {
            return Err(Error::invalid("w0", "must be positive"));
        }
        if !(self.q0.is_finite() && self.q0.abs() <= 1.0) {
            return Err(Error::invalid("q0", "must lie in [-1, 1]"));
        }
        if !(self.detect_offset.is_finite() && self.detect_offset >= 0.0) {
            return Err(Error::invalid("detect_offset", "must be non-negative"));
        }
        if self.phi_points == 0 || self.vb_points == 0 {
            return Err(Error::invalid("sweep points", "must be positive"));
        }
        self.grid()?;
        Ok(())
    }

    /// Resolved configuration as `key=value` lines, every default filled in.
    /// Values use the shortest exact decimal form, so parsing the echo back
    /// reproduces this configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("engine", &self.engine.name());
        kv("loading", &self.loading.name());
        kv("v1_Er", &self.lattice.v1());
        kv("v2_Er", &self.lattice.v2());
        kv("phi_rad", &self.lattice.phi());
        kv("barrier_height_Er", &self.barrier_height_vb);
        kv("w0", &self.w0);
        kv("q0", &self.q0);
        kv("sigma_z", &self.sigma_z);
        kv("total_time", &self.total_time);
        kv("dt", &self.dt);
        kv("z_min", &self.z_min);
        kv("z_max", &self.z_max);
        kv("n_points", &self.n_points());
        kv("n_cut", &self.n_cut);
        kv("fit_halfwidth", &self.fit_halfwidth);
        kv("detect_offset", &self.detect_offset);
        kv("fall_offset", &self.fall_offset);
        kv("absorber", &self.absorber);
        kv("phi_points", &self.phi_points);
        kv("vb_points", &self.vb_points);
        kv("vb_max_Er", &self.vb_max);
        kv("wavelength_m", &self.constants.wavelength());
        kv("atom_mass_kg", &self.constants.atom_mass());
        kv("planck_h", &self.constants.planck_h());
        kv("gravity", &self.constants.gravity());
        out
    }
}

/// Trap and barrier extrema of the slow potential for a target barrier height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierGeometry {
    pub pot: SlowPotential,
    /// Local minimum (trap centre, shifted by gravity).
    pub z_trap: f64,
    /// Local maximum on the downhill side. Infinite without gravity.
    pub z_barrier: f64,
    /// Minimum and maximum have merged into an inflection point (`V_b = 0`).
    pub degenerate: bool,
}

impl BarrierGeometry {
    pub fn height(&self) -> f64 {
        if self.z_barrier.is_infinite() {
            self.pot.v0
        } else {
            self.pot.eval(self.z_barrier) - self.pot.eval(self.z_trap)
        }
    }

    /// Steepest slope of the rising edge between trap and barrier.
    pub fn max_force(&self) -> f64 {
        let n = 2001;
        let end = if self.z_barrier.is_finite() { self.z_barrier } else { self.pot.z_center + 2.0 * self.pot.w0 };
        (0..n)
            .map(|i| self.z_trap + (end - self.z_trap) * i as f64 / (n - 1) as f64)
            .map(|z| self.pot.derivative(z))
            .fold(0.0, f64::max)
    }
}

/// Depth at which trap minimum and barrier maximum merge: the steepest
/// Gaussian slope `v0·(2/w0)·e^{-1/2}` equals `grav`.
pub fn critical_depth(w0: f64, grav: f64) -> f64 {
    0.5 * grav * w0 * 0.5f64.exp()
}

/// Extrema of `V_slow` for a given depth, relative to `z_center = 0`.
pub fn barrier_geometry_for_depth(v0: f64, w0: f64, grav: f64) -> Result<BarrierGeometry> {
    let pot = SlowPotential::new(v0, w0, grav, 0.0)?;
    if grav == 0.0 {
        return Ok(BarrierGeometry { pot, z_trap: 0.0, z_barrier: f64::INFINITY, degenerate: false });
    }
    let v_crit = critical_depth(w0, grav);
    let peak = 0.5 * w0;
    if v0 <= v_crit {
        return Err(Error::BarrierDestroyed { grav, v0_max: v0 });
    }
    let slope = |x: f64| pot.derivative(x);
    let z_trap = bisect(slope, 0.0, peak, 1e-12 * w0);
    let mut far = 2.0 * peak;
    while slope(far) > 0.0 {
        far *= 2.0;
    }
    let z_barrier = bisect(slope, peak, far, 1e-12 * w0);
    Ok(BarrierGeometry { pot, z_trap, z_barrier, degenerate: false })
}

/// Barrier height above the trap minimum for a given depth (0 at or below the critical depth).
pub fn barrier_height(v0: f64, w0: f64, grav: f64) -> Result<f64> {
    if grav > 0.0 && v0 <= critical_depth(w0, grav) {
        return Ok(0.0);
    }
    Ok(barrier_geometry_for_depth(v0, w0, grav)?.height())
}

/// Finds the depth `v0` whose barrier rises `vb` above the trap minimum.
///
/// The search runs over `v0 ∈ (v_crit, V0_SEARCH_MAX]`. With `grav = 0` the
/// height is the depth itself. `vb = 0` returns the merged inflection point,
/// flagged as degenerate.
pub fn barrier_from_height(vb: f64, w0: f64, grav: f64) -> Result<BarrierGeometry> {
    if !(vb.is_finite() && vb >= 0.0) {
        return Err(Error::invalid("vb", format!("must be non-negative, got {vb}")));
    }
    if grav == 0.0 {
        return barrier_geometry_for_depth(vb, w0, grav);
    }
    let v_crit = critical_depth(w0, grav);
    if vb == 0.0 {
        let pot = SlowPotential::new(v_crit, w0, grav, 0.0)?;
        let z = 0.5 * w0;
        return Ok(BarrierGeometry { pot, z_trap: z, z_barrier: z, degenerate: true });
    }
    if barrier_height(V0_SEARCH_MAX, w0, grav)? < vb {
        return Err(Error::BarrierDestroyed { grav, v0_max: V0_SEARCH_MAX });
    }
    let mut hi = (v_crit + vb).max(2.0 * v_crit);
    while barrier_height(hi, w0, grav)? < vb {
        hi = (2.0 * hi).min(V0_SEARCH_MAX);
    }
    let v0 = bisect(|v| barrier_height(v, w0, grav).unwrap_or(0.0) - vb, v_crit, hi, 1e-13 * hi);
    barrier_geometry_for_depth(v0, w0, grav)
}

/// Scenario with every derived quantity resolved.
#[derive(Clone, Debug)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub grid: GridSpec,
    pub geometry: BarrierGeometry,
    pub z0: f64,
    pub reflect_z: f64,
    pub detect_z: f64,
}

impl ResolvedScenario {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let grav = config.gravity_slope();
        if grav == 0.0 {
            return Err(Error::invalid("gravity", "barrier scenarios need gravity to tilt the trap"));
        }
        let geometry = barrier_from_height(config.barrier_height_vb, config.w0, grav)?;
        let grid = config.grid()?;
        let z0 = geometry.z_trap + config.fall_offset;
        let reflect_z = geometry.z_barrier;
        let detect_z = geometry.z_barrier + config.detect_offset;
        if !grid.contains(detect_z) {
            return Err(Error::invalid("detect_offset", format!("detection plane {detect_z} leaves the domain")));
        }
        Ok(Self { config: config.clone(), grid, geometry, z0, reflect_z, detect_z })
    }

    /// Total energy of the packet centre on the positive branch, relative to the crossing.
    pub fn initial_energy(&self, d: &DiracParams) -> f64 {
        d.branch_energy(self.config.q0) + self.geometry.pot.eval(self.z0)
    }

    /// Whether the semiclassical trajectory from the trap over the barrier
    /// crest reaches the Brillouin-zone edge.
    pub fn zone_edge(&self, d: &DiracParams) -> Result<bool> {
        let end = if self.geometry.z_barrier > self.z0 { self.geometry.z_barrier } else { self.z0 };
        Ok(semiclassical_q_range(self.initial_energy(d), &self.geometry.pot, d, self.z0, end)?.zone_edge)
    }
}

/// Final state of an engine run.
#[derive(Clone, Debug)]
pub enum FinalField {
    Spinor(SpinorField),
    Scalar(ScalarField),
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub scenario: ResolvedScenario,
    pub dirac: DiracParams,
    pub fit_residual: f64,
    pub transmission: TransmissionResult,
    pub field: FinalField,
}

impl RunOutput {
    pub fn density_csv(&self, stride: usize) -> String {
        match &self.field {
            FinalField::Spinor(f) => io::spinor_density_csv(f, &self.scenario.geometry.pot, stride),
            FinalField::Scalar(f) => io::scalar_density_csv(f, &self.scenario.geometry.pot, stride),
        }
    }

    pub fn snapshot(&self) -> Vec<u8> {
        match &self.field {
            FinalField::Spinor(f) => io::encode_spinor(f),
            FinalField::Scalar(f) => io::encode_scalar(f),
        }
    }
}

/// Fit of the Dirac parameters, accepting an ill-conditioned fit with a warning.
pub fn dirac_for(lattice: &LatticeParams, cfg: &ScenarioConfig) -> Result<(DiracFit, Option<String>)> {
    match fit_dirac(lattice, cfg.n_cut, cfg.fit_halfwidth) {
        Ok(fit) => Ok((fit, None)),
        Err(Error::IllConditionedFit { residual, fit, .. }) => {
            let msg = format!("fit residual {residual:.3e} E_r above limit");
            warn!("phi = {:.4}: {msg}", lattice.phi());
            Ok((*fit, Some(msg)))
        }
        Err(e) => Err(e),
    }
}

/// Runs the configured engine from the trap to `total_time`.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput> {
    let scenario = ResolvedScenario::new(cfg)?;
    let (fit, _) = dirac_for(&cfg.lattice, cfg)?;
    run_resolved(scenario, fit)
}

fn run_resolved(scenario: ResolvedScenario, fit: DiracFit) -> Result<RunOutput> {
    let cfg = &scenario.config;
    let d = fit.params;
    let pot = scenario.geometry.pot;
    let n_steps = cfg.n_steps();
    check_momentum_reach(&scenario, &d)?;
    let (field, result) = match cfg.engine {
        Engine::Dirac => {
            let mut f = init_packet(&scenario.grid, cfg.q0, cfg.sigma_z, scenario.z0, &d)?;
            DiracPropagator::new(&scenario.grid, &pot, &d, cfg.dt, cfg.absorber)?.run(&mut f, n_steps)?;
            let t = transmission(&f, scenario.reflect_z, scenario.detect_z)?;
            (FinalField::Spinor(f), t)
        }
        Engine::Schrodinger => {
            let mut f = match cfg.loading {
                Loading::Sudden => init_gaussian(&scenario.grid, cfg.lab_momentum(), cfg.sigma_z, scenario.z0)?,
                Loading::Band => init_band_packet(
                    &scenario.grid,
                    &cfg.lattice,
                    2,
                    cfg.q0,
                    cfg.sigma_z,
                    scenario.z0,
                    cfg.n_cut.min(8),
                )?,
            };
            SchrodingerPropagator::new(&scenario.grid, &cfg.lattice, &pot, cfg.dt, cfg.absorber)?
                .run(&mut f, n_steps)?;
            let t = transmission(&f, scenario.reflect_z, scenario.detect_z)?;
            (FinalField::Scalar(f), t)
        }
    };
    Ok(RunOutput { scenario, dirac: d, fit_residual: fit.residual, transmission: result, field })
}

/// Gravity keeps accelerating the packet, so its local momentum downhill must
/// stay below the grid's Nyquist limit wherever it can get to before the
/// absorber or the end of the run; past that the packet aliases.
fn check_momentum_reach(scenario: &ResolvedScenario, d: &DiracParams) -> Result<()> {
    let cfg = &scenario.config;
    let grid = &scenario.grid;
    let pot = &scenario.geometry.pot;
    let edge = if cfg.absorber { grid.z_max() - ABSORBER_FRACTION * grid.length() } else { grid.z_max() };
    let spread = 4.0 / (2.0 * cfg.sigma_z);
    let (reach, k) = match cfg.engine {
        Engine::Dirac => {
            let reach = edge.min(scenario.z0 + d.c_eff * cfg.total_time + 4.0 * cfg.sigma_z);
            let k = (scenario.initial_energy(d) - pot.eval(reach)).abs() / d.c_eff;
            (reach, k)
        }
        Engine::Schrodinger => {
            // Bloch harmonics sit up to two lattice momenta (4 ħk) above the carrier
            let e = cfg.lab_momentum().powi(2) + pot.eval(scenario.z0);
            (edge, (e - pot.eval(edge)).max(0.0).sqrt() + 4.0)
        }
    };
    let nyquist = std::f64::consts::PI / grid.dz();
    if k + spread > nyquist {
        return Err(Error::UnderResolved {
            what: format!("momentum {:.2} reached near z = {reach:.1} (Nyquist limit {nyquist:.2})", k + spread),
        });
    }
    Ok(())
}

/// One row of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub phi: f64,
    pub vb: f64,
    pub dirac: DiracParams,
    pub compton_um: f64,
    pub transmission: TransmissionResult,
    pub zone_edge: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// `"phi"` or `"vb"`.
    pub axis: &'static str,
    /// Sorted by φ, then by barrier height.
    pub points: Vec<SweepPoint>,
    /// Points that could not be computed, with the reason.
    pub failures: Vec<(f64, f64, String)>,
    pub echo: String,
}

impl SweepResult {
    pub fn axis_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| if self.axis == "phi" { p.phi } else { p.vb }).collect()
    }

    pub fn transmitted(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.transmission.transmitted).collect()
    }

    /// Points with the given phase (exact match), in axis order.
    pub fn series(&self, phi: f64) -> Vec<&SweepPoint> {
        self.points.iter().filter(|p| p.phi == phi).collect()
    }

    /// `phi,vb,gap,c_eff,compton_um,transmitted,reflected,remaining,zone_edge_flag`
    /// preceded by the resolved configuration as `# key=value` lines.
    /// Transmission curves: one per phase for a barrier sweep, with the
    /// zone-edge heights of the phase closest to π shaded.
    pub fn figure(&self) -> Figure {
        if self.axis == "phi" {
            Figure {
                title: "transmission versus lattice phase".into(),
                x_label: "phi (rad)".into(),
                y_label: "transmitted fraction".into(),
                series: vec![Series::new("transmitted", self.axis_values(), self.transmitted())],
                bands: Vec::new(),
            }
        } else {
            let mut phis: Vec<f64> = self.points.iter().map(|p| p.phi).collect();
            phis.dedup();
            let series = phis
                .iter()
                .map(|&phi| {
                    let pts = self.series(phi);
                    Series::new(
                        format!("phi = {phi:.3}"),
                        pts.iter().map(|p| p.vb).collect(),
                        pts.iter().map(|p| p.transmission.transmitted).collect(),
                    )
                })
                .collect();
            // shade barrier heights whose trajectories reach the zone edge in the gapless case
            let closest = phis.iter().copied().min_by(|a, b| (a - PI).abs().total_cmp(&(b - PI).abs()));
            let bands = closest.map_or_else(Vec::new, |phi| {
                let pts = self.series(phi);
                let vbs: Vec<f64> = pts.iter().map(|p| p.vb).collect();
                let flags: Vec<bool> = pts.iter().map(|p| p.zone_edge).collect();
                flagged_bands(&vbs, &flags)
            });
            Figure {
                title: "transmission versus barrier height".into(),
                x_label: "V_b (E_r)".into(),
                y_label: "transmitted fraction".into(),
                series,
                bands,
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for line in self.echo.lines() {
            let _ = writeln!(out, "# {line}");
        }
        for (phi, vb, why) in &self.failures {
            let _ = writeln!(out, "# failed phi={} vb={}: {why}", fmt_sig(*phi), fmt_sig(*vb));
        }
        out.push_str("phi,vb,gap,c_eff,compton_um,transmitted,reflected,remaining,zone_edge_flag\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                fmt_sig(p.phi),
                fmt_sig(p.vb),
                fmt_sig(p.dirac.gap),
                fmt_sig(p.dirac.c_eff),
                fmt_sig(p.compton_um),
                fmt_sig(p.transmission.transmitted),
                fmt_sig(p.transmission.reflected),
                fmt_sig(p.transmission.remaining),
                u8::from(p.zone_edge)
            );
        }
        out
    }
}

fn sweep_point(cfg: &ScenarioConfig, phi: f64, vb: f64) -> Result<SweepPoint> {
    let mut point_cfg = cfg.clone();
    point_cfg.lattice = cfg.lattice.with_phi(phi);
    point_cfg.barrier_height_vb = vb;
    let scenario = ResolvedScenario::new(&point_cfg)?;
    let (fit, warning) = dirac_for(&point_cfg.lattice, &point_cfg)?;
    let zone_edge = scenario.zone_edge(&fit.params)?;
    let out = run_resolved(scenario, fit)?;
    let scale = recoil_scale(&cfg.constants);
    Ok(SweepPoint {
        phi,
        vb,
        dirac: out.dirac,
        compton_um: out.dirac.compton_wavelength_si(&scale) * 1e6,
        transmission: out.transmission,
        zone_edge,
        warnings: warning.into_iter().collect(),
    })
}

fn run_sweep(cfg: &ScenarioConfig, axis: &'static str, jobs: Vec<(f64, f64)>, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    let results = exec.map(&jobs, |&(phi, vb)| sweep_point(cfg, phi, vb));
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for ((phi, vb), r) in jobs.into_iter().zip(results) {
        match r {
            Ok(p) => points.push(p),
            Err(e) => {
                warn!("sweep point phi={phi} vb={vb} failed: {e}");
                failures.push((phi, vb, e.to_string()));
            }
        }
    }
    points.sort_by(|a, b| a.phi.total_cmp(&b.phi).then(a.vb.total_cmp(&b.vb)));
    Ok(SweepResult { axis, points, failures, echo: cfg.echo() })
}

/// `n` phases `2πi/n` covering `[0, 2π)`.
pub fn default_phis(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

pub fn default_barrier_heights(n: usize, vb_max: f64) -> Vec<f64> {
    crate::bandstructure::uniform_grid(0.0, vb_max, n)
}

/// Transmission versus lattice phase at the configured barrier height.
pub fn phase_sweep(cfg: &ScenarioConfig, phis: &[f64], exec: Execution) -> Result<SweepResult> {
    let jobs = phis.iter().map(|&phi| (phi, cfg.barrier_height_vb)).collect();
    run_sweep(cfg, "phi", jobs, exec)
}

/// Transmission versus barrier height for each phase in `phis`.
pub fn barrier_sweep(cfg: &ScenarioConfig, vbs: &[f64], phis: &[f64], exec: Execution) -> Result<SweepResult> {
    let jobs = phis.iter().flat_map(|&phi| vbs.iter().map(move |&vb| (phi, vb))).collect();
    run_sweep(cfg, "vb", jobs, exec)
}

/// Non-relativistic tunneling probability `exp(-2·√(2mE_r)·z/ħ)` through a
/// barrier of width `width_z` (1/k) for an atom one recoil energy below the
/// barrier top. Since `√(2mE_r) = ħk` the exponent is simply `2kz`.
pub fn wkb_estimate(width_z: f64) -> Result<f64> {
    if !(width_z.is_finite() && width_z > 0.0) {
        return Err(Error::invalid("width_z", format!("must be positive, got {width_z}")));
    }
    Ok((-2.0 * width_z).exp())
}

/// `log10` of [`wkb_estimate`], usable far below `f64` underflow.
pub fn wkb_log10(width_z: f64) -> f64 {
    -2.0 * width_z / std::f64::consts::LN_10
}

/// Density profile of a run, ready for plotting against the slow potential.
#[derive(Clone, Debug)]
pub struct ProfileOutput {
    pub csv: String,
    pub snapshot: Vec<u8>,
    pub transmission: TransmissionResult,
    pub echo: String,
}

/// Rows of the density CSV are thinned to at most this many.
pub const PROFILE_ROWS: usize = 4096;

pub fn density_profile_run(cfg: &ScenarioConfig) -> Result<ProfileOutput> {
    let out = run_scenario(cfg)?;
    let stride = (out.scenario.grid.n_points() / PROFILE_ROWS).max(1);
    Ok(ProfileOutput {
        csv: out.density_csv(stride),
        snapshot: out.snapshot(),
        transmission: out.transmission,
        echo: cfg.echo(),
    })
}

/// Least-squares `data ≈ amplitude·model + offset`.
pub fn affine_fit(model: &[f64], data: &[f64]) -> Option<(f64, f64)> {
    if model.len() != data.len() || model.len() < 2 {
        return None;
    }
    let n = model.len() as f64;
    let mx = model.iter().sum::<f64>() / n;
    let my = data.iter().sum::<f64>() / n;
    let sxx: f64 = model.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = model.iter().zip(data).map(|(x, y)| (x - mx) * (y - my)).sum();
    let amplitude = sxy / sxx;
    Some((amplitude, my - amplitude * mx))
}

/// Estimated Landau-Zener transmission for the resolved barrier, using its steepest slope.
pub fn landau_zener_for(scenario: &ResolvedScenario, d: &DiracParams) -> Result<dirac::LandauZener> {
    dirac::landau_zener_transmission(d, scenario.geometry.max_force())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const GRAV: f64 = 0.0711;
    const W0: f64 = 184.6;

    #[test]
    fn no_gravity_height_is_depth() {
        let g = barrier_from_height(5.0, W0, 0.0).unwrap();
        assert_eq!(g.pot.v0, 5.0);
        assert_eq!(g.height(), 5.0);
    }

    #[test]
    fn barrier_root_finding_matches_extrema() {
        let g = barrier_from_height(5.0, W0, GRAV).unwrap();
        // oracle: extrema by dense scan of V_slow itself
        let zs: Vec<f64> = (0..=200_000).map(|i| -100.0 + 500.0 * i as f64 / 200_000.0).collect();
        let vs: Vec<f64> = zs.iter().map(|&z| g.pot.eval(z)).collect();
        let mut mins = vec![];
        let mut maxs = vec![];
        for i in 1..vs.len() - 1 {
            if vs[i] < vs[i - 1] && vs[i] < vs[i + 1] {
                mins.push(vs[i]);
            }
            if vs[i] > vs[i - 1] && vs[i] > vs[i + 1] {
                maxs.push(vs[i]);
            }
        }
        assert_eq!((mins.len(), maxs.len()), (1, 1));
        assert!((maxs[0] - mins[0] - 5.0).abs() < 1e-6);
        assert!(g.z_trap > 0.0 && g.z_barrier > g.z_trap);
        assert_relative_eq!(barrier_height(g.pot.v0, W0, GRAV).unwrap(), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_height_is_the_inflection() {
        let g = barrier_from_height(0.0, W0, GRAV).unwrap();
        assert!(g.degenerate);
        assert_relative_eq!(g.pot.v0, critical_depth(W0, GRAV), epsilon = 1e-12);
        assert!(g.pot.derivative(g.z_trap).abs() < 1e-12);
        assert!(barrier_geometry_for_depth(0.5 * g.pot.v0, W0, GRAV).is_err());
    }

    #[test]
    fn destroyed_barrier_is_reported() {
        assert!(matches!(barrier_from_height(1e6, W0, GRAV), Err(Error::BarrierDestroyed { .. })));
    }

    #[test]
    fn wkb_values() {
        let p = wkb_estimate(184.6).unwrap();
        assert!((p.log10() + 160.3).abs() < 0.1, "{}", p.log10());
        assert_relative_eq!(wkb_estimate(1e-12).unwrap(), 1.0, epsilon = 1e-11);
        let a = wkb_estimate(30.0).unwrap();
        assert_relative_eq!(wkb_estimate(60.0).unwrap(), a * a, max_relative = 1e-12);
        assert!(wkb_estimate(0.0).is_err());
        assert_relative_eq!(wkb_log10(184.6), p.log10(), epsilon = 1e-9);
    }

    #[test]
    fn default_scenario_resolves() {
        let cfg = ScenarioConfig::default();
        assert!((cfg.w0 - 184.6).abs() < 0.2, "{}", cfg.w0);
        assert!((cfg.total_time - 117.66).abs() < 0.1);
        let s = ResolvedScenario::new(&cfg).unwrap();
        assert!(s.reflect_z < s.detect_z);
        assert!(s.z0 < s.reflect_z);
        assert_eq!(cfg.lab_momentum(), 2.9);
        assert!(cfg.echo().contains("engine=dirac\n"));
    }

    #[test]
    fn aliasing_downhill_is_refused() {
        let cfg = ScenarioConfig { z_min: -400.0, z_max: 700.0, n_points: Some(1024), ..ScenarioConfig::default() };
        let s = ResolvedScenario::new(&cfg).unwrap();
        let d = DiracParams::massless();
        assert!(matches!(check_momentum_reach(&s, &d), Err(Error::UnderResolved { .. })));
        let short = ResolvedScenario::new(&ScenarioConfig { total_time: 5.0, ..cfg }).unwrap();
        check_momentum_reach(&short, &d).unwrap();
    }

    #[test]
    fn affine_fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 0.7 * v + 0.3).collect();
        let (a, b) = affine_fit(&x, &y).unwrap();
        assert_relative_eq!(a, 0.7, epsilon = 1e-14);
        assert_relative_eq!(b, 0.3, epsilon = 1e-14);
        assert!(affine_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn default_axes() {
        let p = default_phis(41);
        assert_eq!(p.len(), 41);
        assert_eq!(p[0], 0.0);
        assert!(p[40] < TAU);
        let v = default_barrier_heights(26, 10.0);
        assert_eq!((v[0], v[25]), (0.0, 10.0));
        assert_relative_eq!(v[1], 0.4, epsilon = 1e-15);
    }
}
