use gis_core::linalg::{induced_matrix_norm, matrix_sqrt_spd, sym_eig_max, sym_eigen, vec_norm, Matrix, NormKind};
use gis_core::lognorm::{log_norm, mu_p_quadratic_form};
use proptest::prelude::*;

fn entries(n: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, n * n)
}

fn matrix(n: usize) -> impl Strategy<Value = Matrix> {
    entries(n, 5.0).prop_map(move |d| Matrix::new(n, n, d).unwrap())
}

/// `BᵀB + I/2`: well-conditioned SPD weights.
fn spd(n: usize) -> impl Strategy<Value = Matrix> {
    entries(n, 2.0).prop_map(move |d| {
        let b = Matrix::new(n, n, d).unwrap();
        b.transpose().matmul(&b).unwrap().shift_diagonal(0.5).unwrap()
    })
}

fn kind(n: usize) -> impl Strategy<Value = NormKind> {
    prop_oneof![
        Just(NormKind::L1),
        Just(NormKind::L2),
        Just(NormKind::LInf),
        spd(n).prop_map(|p| NormKind::weighted(p).unwrap()),
    ]
}

fn pair_with_kind() -> impl Strategy<Value = (Matrix, Matrix, NormKind)> {
    (2usize..=6).prop_flat_map(|n| (matrix(n), matrix(n), kind(n)))
}

fn slack(scale: f64) -> f64 {
    1e-10 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(250))]

    #[test]
    fn induced_norm_is_subadditive_and_submultiplicative((a, b, k) in pair_with_kind()) {
        let na = induced_matrix_norm(&a, &k).unwrap();
        let nb = induced_matrix_norm(&b, &k).unwrap();
        let sum = induced_matrix_norm(&a.add(&b).unwrap(), &k).unwrap();
        let prod = induced_matrix_norm(&a.matmul(&b).unwrap(), &k).unwrap();
        prop_assert!(sum <= na + nb + slack(na + nb));
        prop_assert!(prod <= na * nb + slack(na * nb));
        let id = induced_matrix_norm(&Matrix::identity(a.rows()), &k).unwrap();
        prop_assert!((id - 1.0).abs() < 1e-12);
    }

    #[test]
    fn induced_norm_is_consistent_with_vector_norm(
        (a, v, k) in (2usize..=6).prop_flat_map(|n| (matrix(n), prop::collection::vec(-5.0..5.0f64, n), kind(n)))
    ) {
        let av = vec_norm(&a.matvec(&v).unwrap(), &k).unwrap();
        let bound = induced_matrix_norm(&a, &k).unwrap() * vec_norm(&v, &k).unwrap();
        prop_assert!(av <= bound + slack(bound));
    }

    #[test]
    fn largest_eigenvalue_dominates_rayleigh_quotients(
        (a, vs) in (2usize..=6).prop_flat_map(|n| (matrix(n), prop::collection::vec(prop::collection::vec(-1.0..1.0f64, n), 50)))
    ) {
        let s = a.sym_part_doubled().unwrap();
        let lmax = sym_eig_max(&s).unwrap();
        let mut best = f64::NEG_INFINITY;
        for v in &vs {
            let vv: f64 = v.iter().map(|x| x * x).sum();
            if vv < 1e-6 {
                continue;
            }
            let sv = s.matvec(v).unwrap();
            let q: f64 = v.iter().zip(&sv).map(|(x, y)| x * y).sum::<f64>() / vv;
            best = best.max(q);
        }
        prop_assert!(best <= lmax + slack(lmax.abs()));
        // The top eigenvector attains it.
        let eig = sym_eigen(&s).unwrap();
        let n = s.rows();
        let top = eig.vectors.column(n - 1);
        let st = s.matvec(&top).unwrap();
        let q: f64 = top.iter().zip(&st).map(|(x, y)| x * y).sum();
        prop_assert!((q - lmax).abs() <= slack(lmax.abs()) * 10.0);
    }

    #[test]
    fn spd_square_root_is_symmetric_positive_and_squares_back(p in (2usize..=6).prop_flat_map(spd)) {
        let r = matrix_sqrt_spd(&p).unwrap();
        prop_assert!(r.asymmetry() <= 1e-12 * r.max_abs());
        prop_assert!(sym_eigen(&r).unwrap().values[0] > 0.0);
        let back = r.matmul(&r).unwrap();
        prop_assert!(back.sub(&p).unwrap().max_abs() <= 1e-10 * p.max_abs());
    }

    #[test]
    fn log_norm_is_convex((a, b, k) in pair_with_kind(), c in 0.0..=1.0f64) {
        let mix = a.scale(c).add(&b.scale(1.0 - c)).unwrap();
        let lhs = log_norm(&mix, &k).unwrap();
        let rhs = c * log_norm(&a, &k).unwrap() + (1.0 - c) * log_norm(&b, &k).unwrap();
        prop_assert!(lhs <= rhs + 1e-10, "{} > {}", lhs, rhs);
    }

    #[test]
    fn log_norm_is_lipschitz((a, b, k) in pair_with_kind()) {
        let gap = (log_norm(&a, &k).unwrap() - log_norm(&b, &k).unwrap()).abs();
        let dist = induced_matrix_norm(&a.sub(&b).unwrap(), &k).unwrap();
        prop_assert!(gap <= dist + 1e-10, "{} > {}", gap, dist);
    }

    #[test]
    fn log_norm_translation_and_homogeneity((a, _b, k) in pair_with_kind(), c in -10.0..10.0f64, s in 0.0..10.0f64) {
        let mu = log_norm(&a, &k).unwrap();
        let shifted = log_norm(&a.shift_diagonal(c).unwrap(), &k).unwrap();
        prop_assert!((shifted - (mu + c)).abs() <= 1e-12 * (1.0 + mu.abs() + c.abs()) * 10.0);
        let scaled = log_norm(&a.scale(s), &k).unwrap();
        prop_assert!((scaled - s * mu).abs() <= 1e-12 * (1.0 + (s * mu).abs()) * 10.0);
    }

    #[test]
    fn log_norm_lies_between_norm_bounds((a, _b, k) in pair_with_kind()) {
        let mu = log_norm(&a, &k).unwrap();
        let norm = induced_matrix_norm(&a, &k).unwrap();
        prop_assert!(-norm - slack(norm) <= mu && mu <= norm + slack(norm));
    }

    #[test]
    fn log_norm_bounds_triangular_spectrum(
        (a, k) in (2usize..=6).prop_flat_map(|n| (matrix(n), kind(n)))
    ) {
        let n = a.rows();
        let mut upper = a.clone();
        for i in 0..n {
            for j in 0..i {
                upper[(i, j)] = 0.0;
            }
        }
        let mu = log_norm(&upper, &k).unwrap();
        for i in 0..n {
            prop_assert!(upper[(i, i)] <= mu + slack(mu.abs()));
        }
    }

    #[test]
    fn weighted_routes_agree((a, p) in (2usize..=6).prop_flat_map(|n| (matrix(n), spd(n)))) {
        let closed = log_norm(&a, &NormKind::weighted(p.clone()).unwrap()).unwrap();
        let quad = mu_p_quadratic_form(&a, &p).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-8 * closed.abs().max(1.0));
    }
}
