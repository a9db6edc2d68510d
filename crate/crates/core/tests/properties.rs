use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use qtomo::io::{problem_from_str, problem_to_string};
use qtomo::linalg::{eigh, hermitize, hs_inner_complex, matrix_exp, matrix_log, DensityMatrix, HermitianMatrix, C64};
use qtomo::model::{objective, r_map, MeasurementEnsemble};

fn hermitian(dim: usize, scale: f64) -> impl Strategy<Value = HermitianMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |v| {
        let m = DMatrix::from_iterator(dim, dim, v.into_iter().map(|(re, im)| C64::new(re * scale, im * scale)));
        hermitize(&m).unwrap()
    })
}

fn sized_hermitian(max_dim: usize, scale: f64) -> impl Strategy<Value = HermitianMatrix> {
    (1..=max_dim).prop_flat_map(move |d| hermitian(d, scale))
}

fn density(dim: usize) -> impl Strategy<Value = DensityMatrix> {
    hermitian(dim, 1.0).prop_map(move |h| {
        let p = matrix_exp(&h).unwrap();
        let t = p.trace();
        DensityMatrix::new(p.scale(1.0 / t)).unwrap()
    })
}

fn rank_one(dim: usize) -> impl Strategy<Value = HermitianMatrix> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim).prop_map(move |v| {
        let v = DVector::from_iterator(dim, v.into_iter().map(|(a, b)| C64::new(a, b)));
        HermitianMatrix::outer(&v.unscale(v.norm().max(1e-3)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_inverts_exp(h in sized_hermitian(16, 1.0)) {
        // Keep the spectrum within [-5, 5] so exp(h) stays well conditioned.
        let e = eigh(&h).unwrap();
        let radius = e.max_eigenvalue().abs().max(e.min_eigenvalue().abs()).max(1e-3);
        let h = h.scale(5.0 / radius);
        let back = matrix_log(&matrix_exp(&h).unwrap(), 1e-300).unwrap();
        prop_assert!((&back - &h).frobenius_norm() <= 1e-9 * (1.0 + h.frobenius_norm()));
    }

    #[test]
    fn eigh_reconstructs(h in sized_hermitian(16, 10.0)) {
        let rebuilt = eigh(&h).unwrap().apply(|x| x);
        prop_assert!((&rebuilt - &h).frobenius_norm() <= 1e-12 * (1.0 + h.frobenius_norm()));
    }

    #[test]
    fn hs_inner_of_hermitians_is_real(a in hermitian(5, 2.0), b in hermitian(5, 2.0)) {
        let z = hs_inner_complex(&a, &b).unwrap();
        prop_assert!(z.im.abs() <= 1e-12 * (1.0 + z.re.abs()));
    }

    #[test]
    fn r_map_has_unit_trace_against_rho(
        rho in density(4),
        elements in prop::collection::vec(rank_one(4), 4..10),
    ) {
        let mut all = elements;
        all.push(HermitianMatrix::identity(4));
        let n = all.len();
        let ens = MeasurementEnsemble::new(all, vec![1.0 / n as f64; n]).unwrap();
        let r = r_map(&ens, &rho).unwrap();
        prop_assert!((hs_inner_complex(&r, rho.as_hermitian()).unwrap().re - 1.0).abs() <= 1e-12);
        prop_assert!(objective(&ens, &rho).unwrap().is_finite());
    }

    #[test]
    fn problem_files_round_trip(seed in 0u64..1000, dim in 2usize..5) {
        let inst = qtomo::problems::gen_instance(&qtomo::problems::GenConfig {
            dim, bases: 2, shots_per_basis: 100, rank: 1, seed,
        }).unwrap();
        let text = problem_to_string(&inst).unwrap();
        prop_assert_eq!(problem_from_str(&text).unwrap(), inst);
    }
}
