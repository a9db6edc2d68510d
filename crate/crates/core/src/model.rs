//! The tomography likelihood problem.
//!
//! An ensemble of PSD measurement elements `M_n` with empirical weights `w_n`
//! defines the negative log-likelihood `f(ρ) = Σ w_n · (-log tr(M_n ρ))` over
//! density matrices, its negative gradient `R(ρ) = Σ w_n M_n / tr(M_n ρ)`, and
//! the computable bound `f(ρ) - min f ≤ log λ_max(R(ρ))`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    check_dims, eigh, ensure_positive_definite, hs_inner, log_from_eigen, DensityMatrix, HermitianMatrix, C64,
    DEFAULT_LOG_FLOOR, PSD_TOL,
};

/// Default relative threshold used by [`kernel_reduce`].
pub const DEFAULT_REDUCTION_TOL: f64 = 1e-10;

/// PSD measurement elements paired with positive weights that sum to one.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    dim: usize,
    elements: Vec<HermitianMatrix>,
    weights: Vec<f64>,
}

impl MeasurementEnsemble {
    pub fn new(elements: Vec<HermitianMatrix>, weights: Vec<f64>) -> Result<Self> {
        let ens = Self::unvalidated(elements, weights)?;
        for (n, m) in ens.elements.iter().enumerate() {
            let eig = eigh(m)?;
            let scale = eig.max_eigenvalue().abs().max(f64::MIN_POSITIVE);
            if eig.min_eigenvalue() < -PSD_TOL * scale {
                return Err(Error::InvalidEnsemble(format!(
                    "element {n} is not positive semidefinite (eigenvalue {:e})",
                    eig.min_eigenvalue()
                )));
            }
        }
        Ok(ens)
    }

    /// Builds an ensemble from raw outcome counts; zero-count elements are dropped.
    pub fn from_counts(elements: Vec<HermitianMatrix>, counts: &[u64]) -> Result<Self> {
        if elements.len() != counts.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} elements but {} counts",
                elements.len(),
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let (kept, weights): (Vec<_>, Vec<_>) = elements
            .into_iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(m, &c)| (m, c as f64 / total as f64))
            .unzip();
        Self::new(kept, weights)
    }

    /// Skips the per-element PSD check; used for elements that are PSD by construction.
    pub(crate) fn from_trusted(elements: Vec<HermitianMatrix>, weights: Vec<f64>) -> Result<Self> {
        Self::unvalidated(elements, weights)
    }

    fn unvalidated(elements: Vec<HermitianMatrix>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::EmptyEnsemble);
        };
        let dim = first.dim();
        if elements.len() != weights.len() {
            return Err(Error::InvalidEnsemble(format!(
                "{} elements but {} weights",
                elements.len(),
                weights.len()
            )));
        }
        if let Some(m) = elements.iter().find(|m| m.dim() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                actual: m.dim(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidEnsemble(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            dim,
            elements,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ w_n M_n`.
    pub fn weighted_sum(&self) -> HermitianMatrix {
        weighted_sum(&self.elements, &self.weights)
    }
}

fn weighted_sum(elements: &[HermitianMatrix], coefficients: &[f64]) -> HermitianMatrix {
    let dim = elements[0].dim();
    let mut acc = DMatrix::<C64>::zeros(dim, dim);
    for (m, &c) in elements.iter().zip(coefficients) {
        acc.zip_apply(m.as_matrix(), |a, b| *a += b * c);
    }
    HermitianMatrix::from_hermitian_unchecked(acc)
}

/// Born probabilities `p_n = tr(M_n ρ)`.
pub fn born_probabilities(ens: &MeasurementEnsemble, rho: &DensityMatrix) -> Result<Vec<f64>> {
    check_dims(ens.dim(), rho.dim())?;
    ens.elements
        .iter()
        .enumerate()
        .map(|(index, m)| {
            let p = hs_inner(m, rho.as_hermitian())?;
            if p > 0.0 {
                Ok(p)
            } else {
                Err(Error::NonPositiveLikelihood { index, value: p })
            }
        })
        .collect()
}

/// Negative log-likelihood `f(ρ) = Σ w_n · (-log p_n)`.
pub fn objective(ens: &MeasurementEnsemble, rho: &DensityMatrix) -> Result<f64> {
    let p = born_probabilities(ens, rho)?;
    Ok(ens.weights.iter().zip(&p).map(|(w, p)| -w * p.ln()).sum())
}

/// `R(ρ) = -∇f(ρ) = Σ w_n M_n / p_n`.
pub fn r_map(ens: &MeasurementEnsemble, rho: &DensityMatrix) -> Result<HermitianMatrix> {
    let p = born_probabilities(ens, rho)?;
    let coefficients: Vec<f64> = ens.weights.iter().zip(&p).map(|(w, p)| w / p).collect();
    Ok(weighted_sum(&ens.elements, &coefficients))
}

/// Upper bound on the optimality gap together with the state attaining it.
#[derive(Clone, Debug)]
pub struct Certificate {
    /// `log λ_max(R(ρ))`, which bounds `f(ρ) - f(ρ̂)` from above.
    pub bound: f64,
    /// Projector onto a top eigenvector of `R(ρ)`, the maximizing `σ`.
    pub direction: DensityMatrix,
}

pub fn certificate(ens: &MeasurementEnsemble, rho: &DensityMatrix) -> Result<Certificate> {
    certificate_from_r(&r_map(ens, rho)?)
}

pub(crate) fn certificate_from_r(r: &HermitianMatrix) -> Result<Certificate> {
    let eig = eigh(r)?;
    ensure_positive_definite(&eig)?;
    let direction = DensityMatrix::pure(&eig.top_eigenvector())?;
    Ok(Certificate {
        bound: eig.max_eigenvalue().ln(),
        direction,
    })
}

/// `log R(ρ)` through one eigendecomposition, also returning the certificate bound.
pub(crate) fn log_r_and_bound(r: &HermitianMatrix) -> Result<(HermitianMatrix, f64)> {
    let eig = eigh(r)?;
    let log_r = log_from_eigen(&eig, DEFAULT_LOG_FLOOR)?;
    Ok((log_r, eig.max_eigenvalue().ln()))
}

/// Isometry onto the orthogonal complement of the common kernel of the elements.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionMap {
    pub original_dim: usize,
    pub reduced_dim: usize,
    /// `D x D'` matrix with orthonormal columns.
    pub isometry: DMatrix<C64>,
}

impl ReductionMap {
    pub fn identity(dim: usize) -> Self {
        Self {
            original_dim: dim,
            reduced_dim: dim,
            isometry: DMatrix::identity(dim, dim),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.original_dim == self.reduced_dim
    }
}

/// Restricts the problem to the span of the elements so that `Σ M_n` is positive definite.
pub fn kernel_reduce(
    ens: &MeasurementEnsemble,
    tol: f64,
) -> Result<(MeasurementEnsemble, ReductionMap)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reduction tolerance must be positive, got {tol}"
        )));
    }
    let eig = eigh(&ens.weighted_sum())?;
    let top = eig.max_eigenvalue();
    if !(top > 0.0) {
        return Err(Error::EmptyEnsemble);
    }
    let keep: Vec<usize> = (0..eig.dim())
        .filter(|&j| eig.eigenvalues[j] > tol * top)
        .collect();
    if keep.len() == ens.dim() {
        return Ok((ens.clone(), ReductionMap::identity(ens.dim())));
    }
    let isometry = DMatrix::from_fn(ens.dim(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
    let elements = ens
        .elements
        .iter()
        .map(|m| m.compress(&isometry))
        .collect::<Result<Vec<_>>>()?;
    let reduced = MeasurementEnsemble::from_trusted(elements, ens.weights.clone())?;
    let map = ReductionMap {
        original_dim: ens.dim(),
        reduced_dim: keep.len(),
        isometry,
    };
    Ok((reduced, map))
}

/// Maps a reduced-space state back to the original space as `U ρ' U†`.
pub fn lift_state(rho_reduced: &DensityMatrix, map: &ReductionMap) -> Result<DensityMatrix> {
    check_dims(map.reduced_dim, rho_reduced.dim())?;
    if map.is_identity() {
        return Ok(rho_reduced.clone());
    }
    let lifted = rho_reduced.as_hermitian().expand(&map.isometry)?;
    Ok(DensityMatrix::from_trusted(lifted))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn diag(d: &[f64]) -> HermitianMatrix {
        HermitianMatrix::from_real_diagonal(d)
    }

    fn plus() -> HermitianMatrix {
        let v = DVector::from_vec(vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]);
        HermitianMatrix::outer(&v)
    }

    fn two_projectors(w0: f64) -> MeasurementEnsemble {
        MeasurementEnsemble::new(vec![diag(&[1., 0.]), diag(&[0., 1.])], vec![w0, 1. - w0]).unwrap()
    }

    fn state(p: &[f64]) -> DensityMatrix {
        DensityMatrix::from_probabilities(p).unwrap()
    }

    #[test]
    fn ensemble_validation() {
        assert!(MeasurementEnsemble::new(vec![diag(&[1., 0.])], vec![0.9]).is_err());
        assert!(MeasurementEnsemble::new(vec![diag(&[1., -1.])], vec![1.0]).is_err());
        assert!(MeasurementEnsemble::new(vec![], vec![]).is_err());
        assert!(MeasurementEnsemble::new(vec![diag(&[1., 0.]), diag(&[1.])], vec![0.5, 0.5]).is_err());
        let ens = MeasurementEnsemble::from_counts(vec![diag(&[1., 0.]), diag(&[0., 1.])], &[3, 1]).unwrap();
        assert_eq!(ens.weights(), &[0.75, 0.25]);
        let ens = MeasurementEnsemble::from_counts(vec![diag(&[1., 0.]), diag(&[0., 1.])], &[5, 0]).unwrap();
        assert_eq!(ens.len(), 1);
    }

    #[test]
    fn born_probability_examples() {
        let ens = two_projectors(0.5);
        assert_eq!(born_probabilities(&ens, &DensityMatrix::maximally_mixed(2)).unwrap(), vec![0.5, 0.5]);
        assert_eq!(born_probabilities(&ens, &state(&[0.75, 0.25])).unwrap(), vec![0.75, 0.25]);
        let ens = MeasurementEnsemble::new(vec![plus()], vec![1.0]).unwrap();
        let p = born_probabilities(&ens, &state(&[0.75, 0.25])).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_is_an_error() {
        let ens = two_projectors(0.5);
        let err = born_probabilities(&ens, &state(&[1.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::NonPositiveLikelihood { index: 1, .. }));
    }

    #[test]
    fn objective_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((objective(&two_projectors(0.5), &mixed).unwrap() - LN_2).abs() < 1e-15);
        let f = objective(&two_projectors(0.5), &state(&[0.75, 0.25])).unwrap();
        assert!((f - 0.836_988_216_785_835_8).abs() < 1e-12);
        let f = objective(&two_projectors(0.75), &state(&[0.75, 0.25])).unwrap();
        assert!((f - 0.562_335_144_618_808_3).abs() < 1e-12);
    }

    #[test]
    fn r_map_examples() {
        let mixed = DensityMatrix::maximally_mixed(2);
        let r = r_map(&two_projectors(0.5), &mixed).unwrap();
        assert!((&r - &HermitianMatrix::identity(2)).frobenius_norm() < 1e-15);
        let r = r_map(&two_projectors(0.5), &state(&[0.75, 0.25])).unwrap();
        assert!((&r - &diag(&[2. / 3., 2.])).frobenius_norm() < 1e-15);
        let r = r_map(&two_projectors(0.75), &mixed).unwrap();
        assert!((&r - &diag(&[1.5, 0.5])).frobenius_norm() < 1e-15);
    }

    #[test]
    fn certificate_examples() {
        let ens = two_projectors(0.5);
        let cert = certificate(&ens, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!(cert.bound.abs() < 1e-15);

        let rho = state(&[0.75, 0.25]);
        let cert = certificate(&ens, &rho).unwrap();
        assert!((cert.bound - LN_2).abs() < 1e-14);
        let gap = objective(&ens, &rho).unwrap() - LN_2;
        assert!((gap - 0.143_841_036_225_890_45).abs() < 1e-12);
        assert!(gap <= cert.bound);
        // Top eigenvector of diag(2/3, 2) is e2.
        assert!((cert.direction.as_hermitian().get(1, 1).re - 1.0).abs() < 1e-14);

        let ens = two_projectors(0.75);
        let cert = certificate(&ens, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert!((cert.bound - 1.5f64.ln()).abs() < 1e-14);
        let gap = LN_2 - 0.562_335_144_618_808_3;
        assert!(gap <= cert.bound);
    }

    #[test]
    fn kernel_reduce_examples() {
        let ens = MeasurementEnsemble::new(vec![diag(&[1., 0.])], vec![1.0]).unwrap();
        let (red, map) = kernel_reduce(&ens, DEFAULT_REDUCTION_TOL).unwrap();
        assert_eq!(map.reduced_dim, 1);
        assert!((red.elements()[0].get(0, 0).re - 1.0).abs() < 1e-15);
        assert!((map.isometry[(0, 0)].norm() - 1.0).abs() < 1e-15);
        assert!(map.isometry[(1, 0)].norm() < 1e-15);

        let ens = two_projectors(0.5);
        let (red, map) = kernel_reduce(&ens, DEFAULT_REDUCTION_TOL).unwrap();
        assert!(map.is_identity());
        assert_eq!(red, ens);
        assert_eq!(map.isometry, DMatrix::identity(2, 2));

        let ens = MeasurementEnsemble::new(vec![plus(), plus()], vec![0.5, 0.5]).unwrap();
        let (red, map) = kernel_reduce(&ens, DEFAULT_REDUCTION_TOL).unwrap();
        assert_eq!(map.reduced_dim, 1);
        for m in red.elements() {
            assert!((m.get(0, 0).re - 1.0).abs() < 1e-14);
        }
        let u0 = map.isometry[(0, 0)];
        let u1 = map.isometry[(1, 0)];
        assert!((u0.norm() - FRAC_1_SQRT_2).abs() < 1e-14);
        assert!((u1 - u0).norm() < 1e-14);
    }

    #[test]
    fn kernel_reduce_rejects_zero_ensemble() {
        let ens = MeasurementEnsemble::new(vec![diag(&[0., 0.])], vec![1.0]).unwrap();
        assert!(matches!(
            kernel_reduce(&ens, DEFAULT_REDUCTION_TOL),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn lift_state_examples() {
        let rho = state(&[0.3, 0.7]);
        assert_eq!(lift_state(&rho, &ReductionMap::identity(2)).unwrap(), rho);

        let one = DensityMatrix::maximally_mixed(1);
        let e1 = ReductionMap {
            original_dim: 2,
            reduced_dim: 1,
            isometry: DMatrix::from_column_slice(2, 1, &[C64::new(1., 0.), C64::new(0., 0.)]),
        };
        let lifted = lift_state(&one, &e1).unwrap();
        assert!((lifted.as_hermitian() - &diag(&[1., 0.])).frobenius_norm() < 1e-15);

        let plus_map = ReductionMap {
            original_dim: 2,
            reduced_dim: 1,
            isometry: DMatrix::from_element(2, 1, C64::new(FRAC_1_SQRT_2, 0.)),
        };
        let lifted = lift_state(&one, &plus_map).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((lifted.as_hermitian().get(i, j).re - 0.5).abs() < 1e-15);
            }
        }
        assert!(lift_state(&rho, &plus_map).is_err());
    }
}
