use datahide::linalg::{c, is_psd, max_abs, pinv_sqrt, psd_sqrt, support_projector, trace, trace_norm, CMatrix};
use datahide::random::{ginibre, sample_haar_unitary, SeededRng};
use num_complex::Complex64;
use proptest::prelude::*;

/// Singular values by one-sided (Hestenes) Jacobi rotations on the columns.
fn jacobi_singular_values(a: &CMatrix) -> Vec<f64> {
    let mut m = a.clone();
    let n = m.ncols();
    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = m.column(p).norm_squared();
                let beta = m.column(q).norm_squared();
                let gamma = m.column(p).dotc(&m.column(q));
                let g = gamma.norm();
                if g <= 1e-300 || alpha * beta == 0.0 {
                    continue;
                }
                off = off.max(g / (alpha * beta).sqrt());
                // rephase column q so that the overlap is real and positive
                let phase = gamma / g;
                for i in 0..m.nrows() {
                    m[(i, q)] *= phase.conj();
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..m.nrows() {
                    let x = m[(i, p)];
                    let y = m[(i, q)];
                    m[(i, p)] = x * cs - y * sn;
                    m[(i, q)] = x * sn + y * cs;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    (0..n).map(|j| m.column(j).norm()).collect()
}

fn random_hermitian(dim: usize, seed: u64) -> CMatrix {
    let g = ginibre(dim, dim, &mut SeededRng::new(seed, 0));
    (&g + g.adjoint()) * c(0.5, 0.0)
}

/// PSD matrix of the given rank.
fn random_psd(dim: usize, rank: usize, seed: u64) -> CMatrix {
    let g = ginibre(dim, rank, &mut SeededRng::new(seed, 1));
    &g * g.adjoint()
}

#[test]
fn jacobi_oracle_on_diagonal() {
    let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0, 0.0), c(0.0, -2.0), c(0.5, 0.0)]));
    let mut sv = jacobi_singular_values(&m);
    sv.sort_by(f64::total_cmp);
    assert!((sv[0] - 0.5).abs() < 1e-15 && (sv[1] - 2.0).abs() < 1e-15 && (sv[2] - 3.0).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trace_norm_matches_jacobi_general(dim in 1usize..12, seed in any::<u64>()) {
        let g = ginibre(dim, dim, &mut SeededRng::new(seed, 2));
        let oracle: f64 = jacobi_singular_values(&g).iter().sum();
        let got = trace_norm(&g).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-10 * oracle.max(1.0), "{got} vs {oracle}");
    }

    #[test]
    fn trace_norm_matches_jacobi_hermitian(dim in 1usize..12, seed in any::<u64>()) {
        let h = random_hermitian(dim, seed);
        let oracle: f64 = jacobi_singular_values(&h).iter().sum();
        let got = trace_norm(&h).unwrap();
        prop_assert!((got - oracle).abs() <= 1e-10 * oracle.max(1.0), "{got} vs {oracle}");
    }

    #[test]
    fn trace_norm_is_unitarily_invariant(dim in 2usize..8, seed in any::<u64>()) {
        let h = random_hermitian(dim, seed);
        let mut rng = SeededRng::new(seed, 3);
        let u = sample_haar_unitary(dim, &mut rng).unwrap();
        let v = sample_haar_unitary(dim, &mut rng).unwrap();
        let a = trace_norm(&h).unwrap();
        let b = trace_norm(&(&u * &h * &v)).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn pinv_sqrt_squared_times_m_is_support(dim in 2usize..10, rank_frac in 0.1f64..1.0, seed in any::<u64>()) {
        let rank = ((dim as f64 * rank_frac).ceil() as usize).clamp(1, dim);
        let m = random_psd(dim, rank, seed);
        let p = pinv_sqrt(&m, 1e-10).unwrap();
        let proj = support_projector(&m, 1e-10).unwrap();
        prop_assert!(max_abs(&(&p * &p * &m - &proj)) <= 1e-8);
        prop_assert!((trace(&proj).re - rank as f64).abs() <= 1e-8);
        let s = psd_sqrt(&m, 1e-12).unwrap();
        prop_assert!(max_abs(&(&s * &s - &m)) <= 1e-8 * max_abs(&m).max(1.0));
        prop_assert!(is_psd(&s, 1e-10));
    }
}

#[test]
fn scaled_identity_singular_values() {
    let m = CMatrix::identity(5, 5) * Complex64::new(0.0, 2.0);
    assert!((trace_norm(&m).unwrap() - 10.0).abs() < 1e-12);
    assert!((jacobi_singular_values(&m).iter().sum::<f64>() - 10.0).abs() < 1e-12);
}
