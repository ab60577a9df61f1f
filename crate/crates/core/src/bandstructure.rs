//! Bloch bands of the bichromatic lattice and the effective Dirac parameters
//! at the crossing of the first and second excited bands.
//!
//! The Hamiltonian at quasimomentum `q` is written in the plane waves
//! `e^{i(q+2n)z}`, `n ∈ [-n_cut, n_cut]`. Kinetic energy is diagonal,
//! `(q+2n)²`; the `cos(2kz)` harmonic couples `n ↔ n±1` with `v1/4` and the
//! `cos(4kz+φ)` harmonic couples `n → n+2` with `(v2/4)e^{iφ}`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::roots::golden_min;
use crate::units::RecoilScale;

pub const DEFAULT_N_CUT: usize = 16;
/// Uniform scan resolution of the crossing search over `q ∈ [-1, 1]`.
pub const CROSSING_SCAN_POINTS: usize = 2001;
/// Golden-section refinement tolerance of the crossing quasimomentum.
pub const CROSSING_TOL: f64 = 1e-6;
pub const DEFAULT_FIT_HALFWIDTH: f64 = 0.2;
/// Samples across the fit window.
pub const FIT_SAMPLES: usize = 41;
/// RMS residual (E_r) of the hyperbola fit above which the fit is rejected.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.05;
/// QR iteration cap handed to the Hermitian eigensolver.
pub const EIGEN_MAX_ITER: usize = 10_000;
/// Gaps below this are treated as closed (Compton wavelength diverges).
pub const CLOSED_GAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeParams {
    v1: f64,
    v2: f64,
    phi: f64,
}

impl LatticeParams {
    /// Amplitudes in E_r; `phi` is reduced to `[0, 2π)`.
    pub fn new(v1: f64, v2: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("v1", v1), ("v2", v2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be non-negative, got {v}")));
            }
        }
        if !phi.is_finite() {
            return Err(Error::invalid("phi", "must be finite"));
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Ok(Self { v1, v2, phi })
    }

    /// The experimental lattice: `V1 = 5`, `V2 = 1.6`.
    pub fn experiment(phi: f64) -> Self {
        Self::new(5.0, 1.6, phi).expect("valid lattice")
    }

    pub fn free() -> Self {
        Self { v1: 0.0, v2: 0.0, phi: 0.0 }
    }

    pub fn v1(&self) -> f64 {
        self.v1
    }
    pub fn v2(&self) -> f64 {
        self.v2
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self::new(self.v1, self.v2, phi).expect("phi finite")
    }

    /// `V(z)` in E_r at `z` in 1/k.
    pub fn potential(&self, z: f64) -> f64 {
        0.5 * self.v1 * (2.0 * z).cos() + 0.5 * self.v2 * (4.0 * z + self.phi).cos()
    }

    pub fn max_abs_potential(&self) -> f64 {
        0.5 * (self.v1 + self.v2)
    }
}

/// Hermitian plane-wave Hamiltonian at one quasimomentum.
#[derive(Clone, Debug)]
pub struct BlochMatrix {
    pub n_cut: usize,
    pub q: f64,
    pub entries: DMatrix<Complex64>,
}

impl BlochMatrix {
    pub fn dim(&self) -> usize {
        2 * self.n_cut + 1
    }
}

pub fn build_bloch_matrix(q: f64, lat: &LatticeParams, n_cut: usize) -> Result<BlochMatrix> {
    if n_cut < 2 {
        return Err(Error::Truncation(n_cut));
    }
    let dim = 2 * n_cut + 1;
    let first = Complex64::new(lat.v1 / 4.0, 0.0);
    let second = Complex64::from_polar(lat.v2 / 4.0, lat.phi);
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        let p = q + 2.0 * (i as f64 - n_cut as f64);
        m[(i, i)] = Complex64::new(p * p, 0.0);
        if i + 1 < dim {
            m[(i + 1, i)] = first;
            m[(i, i + 1)] = first;
        }
        if i + 2 < dim {
            m[(i + 2, i)] = second;
            m[(i, i + 2)] = second.conj();
        }
    }
    Ok(BlochMatrix { n_cut, q, entries: m })
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// as columns.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

pub fn eigensolve(m: &BlochMatrix) -> Result<Eigen> {
    hermitian_eigen(&m.entries)
}

/// Eigen-decomposition of a Hermitian matrix. Only the lower triangle is read.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<Eigen> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::EigenNoConvergence { max_iter: EIGEN_MAX_ITER })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(Eigen { values, vectors })
}

pub fn band_energies(q: f64, lat: &LatticeParams, n_bands: usize, n_cut: usize) -> Result<Vec<f64>> {
    let m = build_bloch_matrix(q, lat, n_cut)?;
    if n_bands > m.dim() {
        return Err(Error::invalid("n_bands", format!("{n_bands} exceeds basis size {}", m.dim())));
    }
    let mut e = eigensolve(&m)?.values;
    e.truncate(n_bands);
    Ok(e)
}

/// Band energies and Bloch vectors over a quasimomentum grid.
#[derive(Clone, Debug)]
pub struct BandSolution {
    pub q_grid: Vec<f64>,
    pub energies: Vec<Vec<f64>>,
    /// Columns are the lowest `n_bands` eigenvectors at each `q`.
    pub vectors: Vec<DMatrix<Complex64>>,
    pub n_cut: usize,
}

impl BandSolution {
    /// Band CSV: `q,E0,E1,...`, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let n_bands = self.energies.first().map_or(0, Vec::len);
        let mut out = String::from("q");
        for b in 0..n_bands {
            out.push_str(&format!(",E{b}"));
        }
        out.push('\n');
        for (q, es) in self.q_grid.iter().zip(&self.energies) {
            out.push_str(&crate::io::fmt_sig(*q));
            for e in es {
                out.push(',');
                out.push_str(&crate::io::fmt_sig(*e));
            }
            out.push('\n');
        }
        out
    }
}

/// `n` points uniformly covering `[a, b]`, endpoints included.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * (i as f64) / ((n - 1) as f64)).collect(),
    }
}

pub fn band_scan(
    lat: &LatticeParams,
    q_grid: &[f64],
    n_bands: usize,
    n_cut: usize,
    exec: Execution,
) -> Result<BandSolution> {
    let per_q = exec.map(q_grid, |&q| -> Result<(Vec<f64>, DMatrix<Complex64>)> {
        let m = build_bloch_matrix(q, lat, n_cut)?;
        if n_bands > m.dim() {
            return Err(Error::invalid("n_bands", format!("{n_bands} exceeds basis size {}", m.dim())));
        }
        let eig = eigensolve(&m)?;
        Ok((eig.values[..n_bands].to_vec(), eig.vectors.columns(0, n_bands).into_owned()))
    });
    let mut energies = Vec::with_capacity(q_grid.len());
    let mut vectors = Vec::with_capacity(q_grid.len());
    for r in per_q {
        let (e, v) = r?;
        energies.push(e);
        vectors.push(v);
    }
    Ok(BandSolution { q_grid: q_grid.to_vec(), energies, vectors, n_cut })
}

/// Location and size of the minimum splitting between bands 1 and 2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub gap: f64,
    pub q: f64,
}

fn excited_splitting(q: f64, lat: &LatticeParams, n_cut: usize) -> Result<f64> {
    let e = band_energies(q, lat, 3, n_cut)?;
    Ok(e[2] - e[1])
}

pub fn excited_gap(lat: &LatticeParams, n_cut: usize) -> Result<Crossing> {
    excited_gap_with(lat, n_cut, Execution::default())
}

/// Scans `q` on [`CROSSING_SCAN_POINTS`] uniform points in `[-1, 1]` and
/// refines the minimum by golden section to [`CROSSING_TOL`].
pub fn excited_gap_with(lat: &LatticeParams, n_cut: usize, exec: Execution) -> Result<Crossing> {
    let qs = uniform_grid(-1.0, 1.0, CROSSING_SCAN_POINTS);
    let gaps = exec.map(&qs, |&q| excited_splitting(q, lat, n_cut));
    let mut best = (0usize, f64::INFINITY);
    for (i, g) in gaps.into_iter().enumerate() {
        let g = g?;
        if g < best.1 {
            best = (i, g);
        }
    }
    let (i, grid_gap) = best;
    let lo = qs[i.saturating_sub(1)];
    let hi = qs[(i + 1).min(qs.len() - 1)];
    // eigensolver failures inside the bracket were already ruled out on the grid
    let (q_ref, g_ref) =
        golden_min(|q| excited_splitting(q, lat, n_cut).unwrap_or(f64::INFINITY), lo, hi, CROSSING_TOL);
    Ok(if g_ref < grid_gap { Crossing { gap: g_ref, q: q_ref } } else { Crossing { gap: grid_gap, q: qs[i] } })
}

/// Effective parameters of the 1D Dirac model at the excited-band crossing.
/// Units: energies E_r, velocity E_r/(ħk), lengths 1/k, quasimomentum ħk.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiracParams {
    pub gap: f64,
    pub c_eff: f64,
    pub rest_energy: f64,
    pub compton_wavelength: f64,
    pub crossing_energy: f64,
    pub crossing_q: f64,
}

impl DiracParams {
    pub fn new(gap: f64, c_eff: f64) -> Result<Self> {
        if !(gap.is_finite() && gap >= 0.0) {
            return Err(Error::invalid("gap", format!("must be non-negative, got {gap}")));
        }
        if !(c_eff.is_finite() && c_eff > 0.0) {
            return Err(Error::invalid("c_eff", format!("must be positive, got {c_eff}")));
        }
        let compton_wavelength = if gap < CLOSED_GAP { f64::INFINITY } else { 2.0 * c_eff * TAU / gap };
        Ok(Self { gap, c_eff, rest_energy: gap / 2.0, compton_wavelength, crossing_energy: 0.0, crossing_q: 0.0 })
    }

    /// Massless Dirac point with the lattice light speed `c = 4`.
    pub fn massless() -> Self {
        Self::new(0.0, 4.0).expect("valid")
    }

    pub fn with_crossing(mut self, energy: f64, q: f64) -> Self {
        self.crossing_energy = energy;
        self.crossing_q = q;
        self
    }

    pub fn compton_diverges(&self) -> bool {
        self.gap < CLOSED_GAP
    }

    pub fn compton_wavelength_si(&self, scale: &RecoilScale) -> f64 {
        scale.length_to_si(self.compton_wavelength)
    }

    /// Positive-branch energy `sqrt((mc²)² + (c q)²)` relative to the crossing.
    pub fn branch_energy(&self, q: f64) -> f64 {
        self.rest_energy.hypot(self.c_eff * q)
    }
}

/// Result of the hyperbola fit around the crossing.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracFit {
    pub params: DiracParams,
    /// RMS deviation (E_r) of the fitted half-splitting from the bands.
    pub residual: f64,
    pub halfwidth: f64,
}

pub fn fit_dirac(lat: &LatticeParams, n_cut: usize, fit_halfwidth: f64) -> Result<DiracFit> {
    fit_dirac_with(lat, n_cut, fit_halfwidth, Execution::default())
}

/// Fits `E_{1,2}(q) = E₀ ∓ sqrt((ΔE/2)² + c²δq²)` around the crossing.
///
/// The gap is pinned to the measured minimum splitting, so `c²` is the only
/// free parameter of the half-splitting and follows from linear least squares
/// in `δq²`. `E₀` is the band midpoint at the crossing. Fails with
/// [`Error::IllConditionedFit`] when the RMS residual exceeds
/// [`FIT_RESIDUAL_LIMIT`]; the rejected fit is carried in the error.
pub fn fit_dirac_with(lat: &LatticeParams, n_cut: usize, fit_halfwidth: f64, exec: Execution) -> Result<DiracFit> {
    if !(fit_halfwidth.is_finite() && fit_halfwidth > 0.0) {
        return Err(Error::invalid("fit_halfwidth", format!("must be positive, got {fit_halfwidth}")));
    }
    let crossing = excited_gap_with(lat, n_cut, exec)?;
    let half_gap = crossing.gap / 2.0;
    let qs = uniform_grid(crossing.q - fit_halfwidth, crossing.q + fit_halfwidth, FIT_SAMPLES);
    let samples = exec.map(&qs, |&q| band_energies(q, lat, 3, n_cut));
    let mut dq2 = Vec::with_capacity(qs.len());
    let mut half = Vec::with_capacity(qs.len());
    for (q, e) in qs.iter().zip(samples) {
        let e = e?;
        dq2.push((q - crossing.q).powi(2));
        half.push(0.5 * (e[2] - e[1]));
    }
    let num: f64 = dq2.iter().zip(&half).map(|(x, h)| x * (h * h - half_gap * half_gap)).sum();
    let den: f64 = dq2.iter().map(|x| x * x).sum();
    let c2 = num / den;
    let c_eff = c2.max(0.0).sqrt();
    let residual = (dq2.iter().zip(&half).map(|(x, h)| (half_gap.hypot(c_eff * x.sqrt()) - h).powi(2)).sum::<f64>()
        / dq2.len() as f64)
        .sqrt();
    let mid = band_energies(crossing.q, lat, 3, n_cut)?;
    let params = DiracParams::new(crossing.gap, c_eff)?.with_crossing(0.5 * (mid[1] + mid[2]), crossing.q);
    let fit = DiracFit { params, residual, halfwidth: fit_halfwidth };
    if residual > FIT_RESIDUAL_LIMIT || c_eff.is_nan() || c_eff <= 0.0 {
        return Err(Error::IllConditionedFit { residual, threshold: FIT_RESIDUAL_LIMIT, fit: Box::new(fit) });
    }
    Ok(fit)
}

/// Lowest-order estimate of the excited splitting at `q = 0`: second-order
/// Bragg from the `2kz` harmonic interfering with first-order Bragg from the
/// `4kz` harmonic. Useful as a sanity check on the numerics.
pub fn perturbative_gap(lat: &LatticeParams) -> f64 {
    let second_order = Complex64::new((lat.v1 / 4.0).powi(2) / 4.0, 0.0);
    let first_order = Complex64::from_polar(lat.v2 / 4.0, lat.phi);
    2.0 * (second_order + first_order).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_particle_matrix_is_diagonal() {
        let m = build_bloch_matrix(0.0, &LatticeParams::free(), 2).unwrap();
        let diag: Vec<f64> = (0..5).map(|i| m.entries[(i, i)].re).collect();
        assert_eq!(diag, vec![16.0, 4.0, 0.0, 4.0, 16.0]);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(m.entries[(i, j)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn first_harmonic_couples_neighbours() {
        let lat = LatticeParams::new(5.0, 0.0, 0.0).unwrap();
        let m = build_bloch_matrix(0.5, &lat, 2).unwrap();
        let diag: Vec<f64> = (0..5).map(|i| m.entries[(i, i)].re).collect();
        assert_eq!(diag, vec![12.25, 2.25, 0.25, 6.25, 20.25]);
        for i in 0..4 {
            assert_eq!(m.entries[(i + 1, i)], c(1.25, 0.0));
            assert_eq!(m.entries[(i, i + 1)], c(1.25, 0.0));
        }
        for i in 0..3 {
            assert_eq!(m.entries[(i + 2, i)], c(0.0, 0.0));
        }
    }

    #[test]
    fn second_harmonic_carries_phase() {
        let lat = LatticeParams::new(5.0, 1.6, PI).unwrap();
        let m = build_bloch_matrix(0.0, &lat, 2).unwrap();
        for i in 0..3 {
            assert!((m.entries[(i + 2, i)] - c(-0.4, 0.0)).norm() < 1e-15);
            assert!((m.entries[(i, i + 2)] - c(-0.4, 0.0)).norm() < 1e-15);
        }
        let lat = LatticeParams::new(0.0, 1.6, 0.3).unwrap();
        let m = build_bloch_matrix(0.2, &lat, 4).unwrap();
        let h = &m.entries;
        assert_eq!(h.adjoint(), *h);
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                if i.abs_diff(j) > 2 {
                    assert_eq!(h[(i, j)], c(0.0, 0.0));
                }
            }
        }
        assert_relative_eq!(h[(2, 0)].arg(), 0.3, epsilon = 1e-15);
    }

    #[test]
    fn rejects_small_truncation() {
        assert!(matches!(build_bloch_matrix(0.0, &LatticeParams::free(), 1), Err(Error::Truncation(1))));
    }

    #[test]
    fn phi_is_normalized() {
        let lat = LatticeParams::new(1.0, 1.0, -PI / 2.0).unwrap();
        assert_relative_eq!(lat.phi(), 1.5 * PI, epsilon = 1e-15);
        assert!(LatticeParams::new(-1.0, 0.0, 0.0).is_err());
        assert!(LatticeParams::new(1.0, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn eigensolve_diagonal_and_pauli() {
        let mut d = DMatrix::<Complex64>::zeros(3, 3);
        d[(0, 0)] = c(16.0, 0.0);
        d[(1, 1)] = c(0.0, 0.0);
        d[(2, 2)] = c(4.0, 0.0);
        let e = hermitian_eigen(&d).unwrap();
        assert_eq!(e.values, vec![0.0, 4.0, 16.0]);
        for (col, row) in [(0, 1), (1, 2), (2, 0)] {
            assert_relative_eq!(e.vectors[(row, col)].norm(), 1.0, epsilon = 1e-15);
        }

        let g = 0.7;
        let p = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(g, 0.0), c(g, 0.0), c(0.0, 0.0)]);
        let e = hermitian_eigen(&p).unwrap();
        assert_relative_eq!(e.values[0], -g, epsilon = 1e-15);
        assert_relative_eq!(e.values[1], g, epsilon = 1e-15);
    }

    #[test]
    fn eigensolve_residuals_and_orthonormality() {
        let lat = LatticeParams::new(5.0, 1.6, 1.1).unwrap();
        let m = build_bloch_matrix(0.37, &lat, 16).unwrap();
        let e = eigensolve(&m).unwrap();
        let norm = m.entries.norm();
        for (i, &l) in e.values.iter().enumerate() {
            let v = e.vectors.column(i);
            let r = &m.entries * v - v * c(l, 0.0);
            assert!(r.norm() < 1e-9 * norm);
        }
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!((gram - DMatrix::<Complex64>::identity(33, 33)).norm() < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn free_bands_fold_the_parabola() {
        let e = band_energies(0.0, &LatticeParams::free(), 5, 8).unwrap();
        for (a, b) in e.iter().zip([0.0, 4.0, 4.0, 16.0, 16.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let e = band_energies(1.0, &LatticeParams::free(), 4, 8).unwrap();
        for (a, b) in e.iter().zip([1.0, 1.0, 9.0, 9.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(band_energies(0.0, &LatticeParams::free(), 6, 2).is_err());
    }

    #[test]
    fn free_crossing_is_closed_at_zero() {
        let x = excited_gap(&LatticeParams::new(0.0, 0.0, 1.3).unwrap(), 8).unwrap();
        assert!(x.gap < 1e-12);
        assert!(x.q.abs() < 1e-6);
    }

    #[test]
    fn gap_closes_at_pi_for_experiment_lattice() {
        let x = excited_gap(&LatticeParams::experiment(PI), DEFAULT_N_CUT).unwrap();
        assert!(x.gap < 0.05, "{}", x.gap);
        assert!(x.q.abs() < 1e-3);
    }

    #[test]
    fn real_symmetric_cases_have_symmetric_bands() {
        for phi in [0.0, PI] {
            let lat = LatticeParams::experiment(phi);
            for q in [0.13, 0.5, 0.91] {
                let a = band_energies(q, &lat, 6, 16).unwrap();
                let b = band_energies(-q, &lat, 6, 16).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn truncation_is_converged() {
        let lat = LatticeParams::experiment(PI);
        for q in [0.0, 0.45, 0.9] {
            let a = band_energies(q, &lat, 4, 12).unwrap();
            let b = band_energies(q, &lat, 4, 16).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn gap_symmetries_in_phase() {
        for phi in [0.4, 1.9, 2.8] {
            let a = excited_gap(&LatticeParams::experiment(phi), 16).unwrap().gap;
            let b = excited_gap(&LatticeParams::experiment(-phi), 16).unwrap().gap;
            let c = excited_gap(&LatticeParams::experiment(phi + TAU), 16).unwrap().gap;
            assert!((a - b).abs() < 1e-9, "{a} {b}");
            assert!((a - c).abs() < 1e-12, "{a} {c}");
        }
    }

    #[test]
    fn weak_second_harmonic_opens_first_order_gap() {
        for v2 in [0.05, 0.1, 0.2] {
            let lat = LatticeParams::new(0.0, v2, 0.7).unwrap();
            let g = band_energies(0.0, &lat, 3, 16).unwrap();
            let gap = g[2] - g[1];
            assert!((gap - v2 / 2.0).abs() < 0.05 * v2 / 2.0, "v2={v2} gap={gap}");
        }
    }

    #[test]
    fn perturbative_gap_tracks_interference() {
        assert!(perturbative_gap(&LatticeParams::experiment(PI)) < 0.03);
        assert!(perturbative_gap(&LatticeParams::experiment(0.0)) > 1.5);
    }

    #[test]
    fn dirac_fit_at_crossing() {
        let fit = fit_dirac(&LatticeParams::experiment(PI), DEFAULT_N_CUT, DEFAULT_FIT_HALFWIDTH).unwrap();
        assert!((fit.params.c_eff - 4.0).abs() < 0.6, "{:?}", fit);
        assert_eq!(fit.params.rest_energy, fit.params.gap / 2.0);
    }

    #[test]
    fn dirac_params_invariants() {
        let d = DiracParams::new(1.0, 4.0).unwrap();
        assert_eq!(d.rest_energy, 0.5);
        assert_relative_eq!(d.compton_wavelength, 16.0 * PI, epsilon = 1e-12);
        assert!(DiracParams::new(0.0, 4.0).unwrap().compton_diverges());
        assert!(DiracParams::new(-0.1, 4.0).is_err());
        assert!(DiracParams::new(0.1, 0.0).is_err());
    }

    #[test]
    fn rejects_bad_fit_window() {
        assert!(fit_dirac(&LatticeParams::experiment(PI), 8, 0.0).is_err());
    }

    #[test]
    fn band_csv_layout() {
        let sol = band_scan(&LatticeParams::free(), &[0.0, 1.0], 3, 4, Execution::Sequential).unwrap();
        let csv = sol.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("q,E0,E1,E2"));
        assert_eq!(lines.count(), 2);
    }
}
