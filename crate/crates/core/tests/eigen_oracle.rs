//! Eigensolver checks against an independent characteristic-polynomial root finder.

use klein_core::bandstructure::{build_bloch_matrix, eigensolve, hermitian_eigen, LatticeParams};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// det(M - λI) by Gaussian elimination with partial pivoting. For Hermitian
/// `M` and real `λ` the result is real up to rounding.
fn char_poly(m: &DMatrix<Complex64>, lambda: f64) -> f64 {
    let n = m.nrows();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] -= lambda;
    }
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[(x, col)].norm().total_cmp(&a[(y, col)].norm())).unwrap();
        if a[(pivot, col)].norm() == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap_rows(pivot, col);
            det = -det;
        }
        let p = a[(col, col)];
        det *= p;
        for r in col + 1..n {
            let factor = a[(r, col)] / p;
            for c in col..n {
                let v = a[(col, c)];
                a[(r, c)] -= factor * v;
            }
        }
    }
    det.re
}

/// Real roots of the characteristic polynomial: sign changes on a fine scan
/// of the Gershgorin interval, refined by bisection.
fn oracle_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let n = m.nrows();
    let radius = (0..n)
        .map(|i| m[(i, i)].re.abs() + (0..n).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        + 1.0;
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut x0 = -radius;
    let mut f0 = char_poly(m, x0);
    for k in 1..=steps {
        let x1 = -radius + 2.0 * radius * k as f64 / steps as f64;
        let f1 = char_poly(m, x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let fm = char_poly(m, mid);
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
                if b - a < 1e-14 * radius {
                    break;
                }
            }
            roots.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(rng.random_range(-3.0..3.0), 0.0);
        for j in 0..i {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

#[test]
fn random_5x5_hermitian_matches_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..20 {
        let m = random_hermitian(&mut rng, 5);
        let eig = hermitian_eigen(&m).unwrap();
        let roots = oracle_eigenvalues(&m);
        assert_eq!(roots.len(), 5, "{roots:?}");
        for (a, b) in eig.values.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-8, "{:?} vs {roots:?}", eig.values);
        }
    }
}

#[test]
fn bloch_matrix_eigenvalues_match_characteristic_polynomial() {
    // n_cut = 2 gives a 5x5 Bloch matrix with both harmonics present
    let lat = LatticeParams::new(5.0, 1.6, 0.7).unwrap();
    for q in [-0.9, -0.3, 0.0, 0.45, 1.0] {
        let m = build_bloch_matrix(q, &lat, 2).unwrap();
        let eig = eigensolve(&m).unwrap();
        let roots = oracle_eigenvalues(&m.entries);
        assert_eq!(roots.len(), 5);
        for (a, b) in eig.values.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-8, "q = {q}: {:?} vs {roots:?}", eig.values);
        }
    }
}

fn residual_and_orthonormality(m: &DMatrix<Complex64>) -> (f64, f64) {
    let eig = hermitian_eigen(m).unwrap();
    let n = m.nrows();
    let mut worst = 0.0f64;
    for k in 0..n {
        let v = eig.vectors.column(k);
        let r = m * v - v * Complex64::new(eig.values[k], 0.0);
        worst = worst.max(r.norm());
    }
    let gram = eig.vectors.adjoint() * &eig.vectors;
    let ortho = (gram - DMatrix::<Complex64>::identity(n, n)).norm();
    (worst / m.norm(), ortho)
}

#[test]
fn bloch_residuals_at_production_truncation() {
    let lat = LatticeParams::experiment(std::f64::consts::PI);
    for q in [-1.0, -0.2, 0.0, 0.013, 0.7] {
        let m = build_bloch_matrix(q, &lat, 16).unwrap();
        let (res, ortho) = residual_and_orthonormality(&m.entries);
        assert!(res < 1e-9, "residual {res}");
        assert!(ortho < 1e-10, "orthonormality {ortho}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigen_residuals_are_small(seed in any::<u64>(), n in 2usize..24) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(&mut rng, n);
        let (res, ortho) = residual_and_orthonormality(&m);
        prop_assert!(res < 1e-9);
        prop_assert!(ortho < 1e-10);
    }

    #[test]
    fn bloch_matrix_is_hermitian(q in -1.0f64..1.0, v1 in 0.0f64..10.0, v2 in 0.0f64..5.0, phi in -10.0f64..10.0) {
        let m = build_bloch_matrix(q, &LatticeParams::new(v1, v2, phi).unwrap(), 6).unwrap();
        prop_assert_eq!(m.entries.adjoint(), m.entries.clone());
    }
}
