//! Cover's multiplicative update for the growth-optimal portfolio, which is
//! the commuting special case of the tomography problem.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigh, DensityMatrix, HermitianMatrix, C64};
use crate::model::MeasurementEnsemble;

use super::StopReason;

const SIMPLEX_TOL: f64 = 1e-12;
const COMMUTE_TOL: f64 = 1e-10;

/// A point of the probability simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("empty simplex vector".into()));
        }
        if let Some(x) = entries.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative simplex entry {x}")));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!(
                "simplex entries sum to {total}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn uniform(dim: usize) -> Self {
        Self(vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }
}

/// `min_x Σ w_n · (-log <a_n, x>)` over the simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioProblem {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl PortfolioProblem {
    pub fn new(vectors: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::EmptyEnsemble);
        };
        let dim = first.len();
        if dim == 0 || vectors.iter().any(|a| a.len() != dim) {
            return Err(Error::InvalidArgument("ragged return vectors".into()));
        }
        if weights.len() != vectors.len() {
            return Err(Error::InvalidArgument(format!(
                "{} vectors but {} weights",
                vectors.len(),
                weights.len()
            )));
        }
        for (row, a) in vectors.iter().enumerate() {
            if let Some((column, &value)) = a.iter().enumerate().find(|(_, x)| !(**x >= 0.0)) {
                return Err(Error::InvalidReturns { row, column, value });
            }
        }
        if let Some(column) = (0..dim).find(|&d| vectors.iter().all(|a| a[d] <= 0.0)) {
            return Err(Error::DegenerateAsset { column });
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidArgument(format!("weights sum to {total}")));
        }
        Ok(Self {
            dim,
            vectors,
            weights,
        })
    }

    pub fn with_uniform_weights(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let n = vectors.len().max(1);
        Self::new(vectors, vec![1.0 / n as f64; n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn inner_products(&self, x: &SimplexVector) -> Result<Vec<f64>> {
        self.vectors
            .iter()
            .enumerate()
            .map(|(index, a)| {
                let value: f64 = a.iter().zip(x.entries()).map(|(a, x)| a * x).sum();
                if value > 0.0 {
                    Ok(value)
                } else {
                    Err(Error::NonPositiveLikelihood { index, value })
                }
            })
            .collect()
    }

    pub fn objective(&self, x: &SimplexVector) -> Result<f64> {
        let p = self.inner_products(x)?;
        Ok(self.weights.iter().zip(&p).map(|(w, p)| -w * p.ln()).sum())
    }

    /// `-∇g(x) = Σ w_n a_n / <a_n, x>`.
    pub fn neg_gradient(&self, x: &SimplexVector) -> Result<Vec<f64>> {
        let p = self.inner_products(x)?;
        let mut grad = vec![0.0; self.dim];
        for ((a, w), p) in self.vectors.iter().zip(&self.weights).zip(&p) {
            for (g, a) in grad.iter_mut().zip(a) {
                *g += w * a / p;
            }
        }
        Ok(grad)
    }

    /// `log max_d (-∇g(x))_d`, an upper bound on `g(x) - min g`.
    pub fn certificate(&self, x: &SimplexVector) -> Result<f64> {
        let grad = self.neg_gradient(x)?;
        Ok(grad.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln())
    }
}

/// `x ∘ (-∇g(x))`; the result already sums to one.
pub fn step_cover(prob: &PortfolioProblem, x: &SimplexVector) -> Result<SimplexVector> {
    let grad = prob.neg_gradient(x)?;
    SimplexVector::new(x.entries().iter().zip(&grad).map(|(x, g)| x * g).collect())
}

/// A commuting ensemble rewritten as a classical problem in its common eigenbasis.
#[derive(Clone, Debug)]
pub struct DiagonalForm {
    pub problem: PortfolioProblem,
    /// Unitary whose columns form the common eigenbasis.
    pub basis: DMatrix<C64>,
}

impl DiagonalForm {
    /// The density matrix `V diag(x) V†`.
    pub fn state(&self, x: &SimplexVector) -> DensityMatrix {
        DensityMatrix::from_trusted(HermitianMatrix::from_spectrum(x.entries(), &self.basis))
    }

    /// Diagonal of `V† ρ V`.
    pub fn coordinates(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        Ok(rho.as_hermitian().compress(&self.basis)?.diagonal())
    }
}

pub fn diagonal_extract(ens: &MeasurementEnsemble) -> Result<DiagonalForm> {
    // A generic combination separates joint eigenspaces that Σ M_n alone may merge.
    let n = ens.len();
    let mut combo = HermitianMatrix::zeros(ens.dim());
    for (i, m) in ens.elements().iter().enumerate() {
        let c = 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_894_9).fract() + i as f64 / n as f64;
        combo = &combo + &m.scale(c);
    }
    let basis = eigh(&combo)?.eigenvectors;

    let mut vectors = Vec::with_capacity(n);
    for (i, m) in ens.elements().iter().enumerate() {
        let rotated = m.compress(&basis)?;
        let total = rotated.frobenius_norm();
        let d = rotated.dim();
        let off_diag = (0..d)
            .flat_map(|r| (0..d).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| rotated.get(r, c).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off_diag > COMMUTE_TOL * total.max(f64::MIN_POSITIVE) {
            let (second, residual) = worst_commutator(ens, i)?;
            return Err(Error::NotCommuting {
                first: i,
                second,
                residual,
            });
        }
        vectors.push(rotated.diagonal().into_iter().map(|x| x.max(0.0)).collect());
    }
    let problem = PortfolioProblem::new(vectors, ens.weights().to_vec())?;
    Ok(DiagonalForm { problem, basis })
}

fn worst_commutator(ens: &MeasurementEnsemble, i: usize) -> Result<(usize, f64)> {
    let mut worst = (i, 0.0);
    for (j, other) in ens.elements().iter().enumerate() {
        let c = ens.elements()[i].commutator_norm(other)?;
        if c > worst.1 {
            worst = (j, c);
        }
    }
    Ok(worst)
}

/// One recorded iterate of a classical Cover run.
#[derive(Clone, Debug, Serialize)]
pub struct PortfolioRecord {
    pub k: usize,
    pub objective_at_x: f64,
    pub objective_at_x_bar: f64,
    pub certificate_at_x: f64,
    pub certificate_at_x_bar: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PortfolioReport {
    pub x: SimplexVector,
    pub x_bar: SimplexVector,
    pub records: Vec<PortfolioRecord>,
    pub stop_reason: StopReason,
}

/// Runs Cover's method from the uniform portfolio, stopping on the certificate.
pub fn run_cover(
    prob: &PortfolioProblem,
    max_iters: usize,
    certificate_tol: f64,
    record_every: usize,
) -> Result<PortfolioReport> {
    if max_iters == 0 || record_every == 0 || !(certificate_tol >= 0.0) {
        return Err(Error::InvalidArgument(
            "max_iters and record_every must be positive, tolerance non-negative".into(),
        ));
    }
    let mut x = SimplexVector::uniform(prob.dim());
    let mut x_bar = x.clone();
    let mut records = Vec::new();
    let mut k = 1;
    loop {
        let cert_x = prob.certificate(&x)?;
        let cert_bar = prob.certificate(&x_bar)?;
        let stop = if cert_x.min(cert_bar) <= certificate_tol {
            Some(StopReason::CertificateMet)
        } else if k >= max_iters {
            Some(StopReason::MaxIters)
        } else {
            None
        };
        if stop.is_some() || k % record_every == 0 {
            records.push(PortfolioRecord {
                k,
                objective_at_x: prob.objective(&x)?,
                objective_at_x_bar: prob.objective(&x_bar)?,
                certificate_at_x: cert_x,
                certificate_at_x_bar: cert_bar,
            });
        }
        if let Some(stop_reason) = stop {
            return Ok(PortfolioReport {
                x,
                x_bar,
                records,
                stop_reason,
            });
        }
        x = step_cover(prob, &x)?;
        k += 1;
        let w = 1.0 / k as f64;
        x_bar = SimplexVector(
            x_bar
                .0
                .iter()
                .zip(x.entries())
                .map(|(m, v)| m + (v - m) * w)
                .collect(),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn basis_problem(w0: f64) -> PortfolioProblem {
        PortfolioProblem::new(vec![vec![1., 0.], vec![0., 1.]], vec![w0, 1. - w0]).unwrap()
    }

    fn x(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn cover_examples() {
        let prob = basis_problem(0.5);
        let next = step_cover(&prob, &x(&[0.75, 0.25])).unwrap();
        assert!((next.entries()[0] - 0.5).abs() < 1e-15);
        assert!((next.entries()[1] - 0.5).abs() < 1e-15);
        assert_eq!(step_cover(&prob, &x(&[0.5, 0.5])).unwrap(), x(&[0.5, 0.5]));

        let next = step_cover(&basis_problem(0.75), &x(&[0.5, 0.5])).unwrap();
        assert!((next.entries()[0] - 0.75).abs() < 1e-15);
        assert!((next.entries()[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cover_rejects_zero_inner_product() {
        let prob = basis_problem(0.5);
        assert!(matches!(
            step_cover(&prob, &x(&[1.0, 0.0])),
            Err(Error::NonPositiveLikelihood { index: 1, .. })
        ));
    }

    #[test]
    fn problem_validation() {
        assert!(matches!(
            PortfolioProblem::with_uniform_weights(vec![vec![1., -1.]]),
            Err(Error::InvalidReturns { row: 0, column: 1, .. })
        ));
        assert!(matches!(
            PortfolioProblem::with_uniform_weights(vec![vec![1., 0.], vec![2., 0.]]),
            Err(Error::DegenerateAsset { column: 1 })
        ));
    }

    #[test]
    fn diagonal_extract_examples() {
        let ens = MeasurementEnsemble::new(
            vec![
                HermitianMatrix::from_real_diagonal(&[1., 0.]),
                HermitianMatrix::from_real_diagonal(&[0., 1.]),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let form = diagonal_extract(&ens).unwrap();
        let a = form.problem.vectors();
        assert!((a[0][0] - 1.0).abs() < 1e-14 && a[0][1].abs() < 1e-14);
        assert!(a[1][0].abs() < 1e-14 && (a[1][1] - 1.0).abs() < 1e-14);

        let ens = MeasurementEnsemble::new(
            vec![
                HermitianMatrix::identity(2).scale(0.5),
                HermitianMatrix::from_real_diagonal(&[1., 0.]),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        let form = diagonal_extract(&ens).unwrap();
        let a = form.problem.vectors();
        assert!(a[0].iter().all(|v| (v - 0.5).abs() < 1e-14));
        let mut second = a[1].clone();
        second.sort_by(|p, q| q.total_cmp(p));
        assert!((second[0] - 1.0).abs() < 1e-14 && second[1].abs() < 1e-14);
    }

    #[test]
    fn diagonal_extract_rotated_basis() {
        let h = FRAC_1_SQRT_2;
        let plus = DVector::from_vec(vec![C64::new(h, 0.), C64::new(h, 0.)]);
        let minus = DVector::from_vec(vec![C64::new(h, 0.), C64::new(-h, 0.)]);
        let ens = MeasurementEnsemble::new(
            vec![HermitianMatrix::outer(&plus), HermitianMatrix::outer(&minus)],
            vec![0.5, 0.5],
        )
        .unwrap();
        let form = diagonal_extract(&ens).unwrap();
        let a = form.problem.vectors();
        // Each projector reads as a distinct standard basis vector.
        for row in a {
            let mut sorted = row.clone();
            sorted.sort_by(|p, q| q.total_cmp(p));
            assert!((sorted[0] - 1.0).abs() < 1e-14 && sorted[1].abs() < 1e-14);
        }
        assert!((a[0][0] - a[1][1]).abs() < 1e-14);
        let u0 = form.basis.column(0).into_owned();
        let overlap = u0.dotc(&plus).norm().max(u0.dotc(&minus).norm());
        assert!((overlap - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_extract_rejects_non_commuting() {
        let h = FRAC_1_SQRT_2;
        let plus = DVector::from_vec(vec![C64::new(h, 0.), C64::new(h, 0.)]);
        let ens = MeasurementEnsemble::new(
            vec![
                HermitianMatrix::from_real_diagonal(&[1., 0.]),
                HermitianMatrix::outer(&plus),
            ],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(matches!(
            diagonal_extract(&ens),
            Err(Error::NotCommuting { .. })
        ));
    }

    #[test]
    fn run_cover_reaches_symmetric_optimum() {
        let prob = PortfolioProblem::with_uniform_weights(vec![vec![2., 1.], vec![1., 2.]]).unwrap();
        let report = run_cover(&prob, 100, 1e-12, 1).unwrap();
        assert_eq!(report.stop_reason, StopReason::CertificateMet);
        assert!((report.x.entries()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn constant_objective_is_immediately_optimal() {
        let prob = PortfolioProblem::with_uniform_weights(vec![vec![1.; 4]]).unwrap();
        let report = run_cover(&prob, 100, 0.0, 1).unwrap();
        assert_eq!(report.records.len(), 1);
        assert!(report.records[0].certificate_at_x.abs() < 1e-15);
    }
}
