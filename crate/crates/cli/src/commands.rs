use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use klein_core::bandstructure::{band_scan, uniform_grid, DiracFit};
use klein_core::config::parse_config_with_overrides;
use klein_core::experiments::{
    barrier_sweep, default_barrier_heights, default_phis, density_profile_run, dirac_for, phase_sweep, run_scenario,
    Engine, ScenarioConfig, SweepResult,
};
use klein_core::io::fmt_sig;
use klein_core::plot::{Figure, Series};
use klein_core::units::recoil_scale;
use klein_core::Execution;

use crate::{Command, Common};

pub const ECHO_FILE: &str = "resolved_config.txt";
const BAND_Q_POINTS: usize = 401;
const BAND_COUNT: usize = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {}: {source}", path.display())]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] klein_core::Error),
}

impl CliError {
    pub fn category(&self) -> &'static str {
        match self {
            CliError::ReadConfig { .. } | CliError::Write { .. } => "io",
            CliError::Core(e) => e.category(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Output {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.written.push(path);
        Ok(())
    }

    fn plot(&mut self, name: &str, fig: &Figure) -> Result<()> {
        let svg = fig.render()?;
        self.write(name, svg)
    }
}

fn load_config(common: &Common, command: Command) -> Result<ScenarioConfig> {
    let text = match &common.config {
        Some(path) => fs::read_to_string(path).map_err(|source| CliError::ReadConfig { path: path.clone(), source })?,
        None => String::new(),
    };
    let mut cfg = parse_config_with_overrides(&text, &common.overrides)?;
    match command {
        Command::DiracRun => cfg.engine = Engine::Dirac,
        Command::SchrodingerRun => cfg.engine = Engine::Schrodinger,
        _ => {}
    }
    Ok(cfg)
}

/// Runs one command and returns the files it wrote, echo file first.
pub fn run(command: Command, common: &Common) -> Result<Vec<PathBuf>> {
    let cfg = load_config(common, command)?;
    let exec = if common.sequential { Execution::Sequential } else { Execution::Parallel };
    let mut out = Output::new(&common.out)?;
    out.write(ECHO_FILE, cfg.echo())?;
    match command {
        Command::Bands => bands(&cfg, exec, &mut out)?,
        Command::DiracRun | Command::SchrodingerRun => single_run(&cfg, &mut out)?,
        Command::PhaseSweep => {
            let sweep = phase_sweep(&cfg, &default_phis(cfg.phi_points), exec)?;
            write_sweep(&sweep, &mut out, "phase_sweep")?;
        }
        Command::BarrierSweep => {
            let vbs = default_barrier_heights(cfg.vb_points, cfg.vb_max);
            let sweep = barrier_sweep(&cfg, &vbs, &[0.0, PI], exec)?;
            write_sweep(&sweep, &mut out, "barrier_sweep")?;
        }
        Command::Profile => profile(&cfg, &mut out)?,
    }
    Ok(out.written)
}

fn fit_report(cfg: &ScenarioConfig, fit: &DiracFit, warning: Option<String>) -> String {
    let scale = recoil_scale(&cfg.constants);
    let d = &fit.params;
    let mut s = format!(
        "gap_Er={}\nc_eff={}\nc_eff_cm_per_s={}\nrest_energy_Er={}\ncompton_um={}\ncrossing_q={}\ncrossing_energy_Er={}\nfit_residual_Er={}\n",
        fmt_sig(d.gap),
        fmt_sig(d.c_eff),
        fmt_sig(scale.velocity_to_si(d.c_eff) * 100.0),
        fmt_sig(d.rest_energy),
        fmt_sig(d.compton_wavelength_si(&scale) * 1e6),
        fmt_sig(d.crossing_q),
        fmt_sig(d.crossing_energy),
        fmt_sig(fit.residual),
    );
    if let Some(w) = warning {
        s.push_str(&format!("# warning: {w}\n"));
    }
    s
}

fn bands(cfg: &ScenarioConfig, exec: Execution, out: &mut Output) -> Result<()> {
    let qs = uniform_grid(-1.0, 1.0, BAND_Q_POINTS);
    let sol = band_scan(&cfg.lattice, &qs, BAND_COUNT, cfg.n_cut, exec)?;
    out.write("bands.csv", sol.to_csv())?;
    let (fit, warning) = dirac_for(&cfg.lattice, cfg)?;
    out.write("dirac_params.txt", fit_report(cfg, &fit, warning))?;
    let fig = Figure {
        title: format!("phi = {:.4} rad", cfg.lattice.phi()),
        x_label: "quasimomentum q (hbar k)".into(),
        y_label: "energy (E_r)".into(),
        series: (0..BAND_COUNT)
            .map(|b| Series::new(format!("band {b}"), qs.clone(), sol.energies.iter().map(|e| e[b]).collect()))
            .collect(),
        bands: Vec::new(),
    };
    out.plot("bands.svg", &fig)
}

fn transmission_report(t: &klein_core::TransmissionResult) -> String {
    format!(
        "transmitted={}\nreflected={}\nremaining={}\ndetect_z={}\ntime={}\n",
        fmt_sig(t.transmitted),
        fmt_sig(t.reflected),
        fmt_sig(t.remaining),
        fmt_sig(t.detect_z),
        fmt_sig(t.time)
    )
}

fn single_run(cfg: &ScenarioConfig, out: &mut Output) -> Result<()> {
    let run = run_scenario(cfg)?;
    let mut report = transmission_report(&run.transmission);
    report.push_str(&format!("gap_Er={}\nfit_residual_Er={}\n", fmt_sig(run.dirac.gap), fmt_sig(run.fit_residual)));
    out.write("transmission.txt", report)?;
    out.write("density.csv", run.density_csv(1))?;
    out.write("snapshot.bin", run.snapshot())
}

fn profile(cfg: &ScenarioConfig, out: &mut Output) -> Result<()> {
    let p = density_profile_run(cfg)?;
    out.write("profile.csv", &p.csv)?;
    out.write("snapshot.bin", &p.snapshot)?;
    out.write("transmission.txt", transmission_report(&p.transmission))?;
    let rows: Vec<Vec<f64>> =
        p.csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect()).collect();
    let z: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    // all columns between z and V_slow are densities
    let density: Vec<f64> = rows.iter().map(|r| r[1..r.len() - 1].iter().sum()).collect();
    let pot: Vec<f64> = rows.iter().map(|r| r[r.len() - 1]).collect();
    // rescale the potential onto the density axis so both curves share one plot
    let peak = density.iter().copied().fold(0.0, f64::max);
    let (vmin, vmax) = pot.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let scaled: Vec<f64> = pot.iter().map(|v| peak * (v - vmin) / span).collect();
    let fig = Figure {
        title: format!("t = {:.2} hbar/E_r", p.transmission.time),
        x_label: "z (1/k)".into(),
        y_label: "density".into(),
        series: vec![Series::new("density", z.clone(), density), Series::new("V_slow (scaled)", z, scaled)],
        bands: Vec::new(),
    };
    out.plot("profile.svg", &fig)
}

fn write_sweep(sweep: &SweepResult, out: &mut Output, stem: &str) -> Result<()> {
    out.write(&format!("{stem}.csv"), sweep.to_csv())?;
    let fig = sweep.figure();
    if fig.series.iter().all(|s| !s.x.is_empty()) && !fig.series.is_empty() {
        out.plot(&format!("{stem}.svg"), &fig)?;
    }
    Ok(())
}
