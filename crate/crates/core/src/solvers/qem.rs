use crate::error::Result;
use crate::linalg::{eigh, DensityMatrix};
use crate::model::{log_r_and_bound, r_map, MeasurementEnsemble};

use super::SolverState;

/// One step of the matrix-exponentiated update
/// `ρ_{k+1} = N(exp(log ρ_k + log R(ρ_k)))`.
///
/// The iterate is carried in log form as well, so `log ρ_k` is never
/// recovered from a matrix whose small eigenvalues have been lost to
/// roundoff. `last_tau` is the pre-normalization trace, which never exceeds
/// one.
pub fn step_qem(ens: &MeasurementEnsemble, state: &SolverState) -> Result<SolverState> {
    let log_rho = state.log_rho_or_compute()?;
    let r = r_map(ens, &state.rho)?;
    let (log_r, _) = log_r_and_bound(&r)?;
    let exponent = &log_rho + &log_r;

    // exp(L) / tr exp(L), evaluated with the spectrum shifted so the largest
    // exponent is zero.
    let eig = eigh(&exponent)?;
    let top = eig.max_eigenvalue();
    let weights: Vec<f64> = eig.eigenvalues.iter().map(|&l| (l - top).exp()).collect();
    let sum: f64 = weights.iter().sum();
    let log_tau = top + sum.ln();
    let rho = eig.apply(|l| (l - top).exp() / sum);
    let next_log = exponent.shift(-log_tau);

    Ok(state.advance(
        DensityMatrix::from_trusted(rho),
        log_tau.exp(),
        None,
        Some(next_log),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::HermitianMatrix;

    fn two_projectors(w0: f64) -> MeasurementEnsemble {
        MeasurementEnsemble::new(
            vec![
                HermitianMatrix::from_real_diagonal(&[1., 0.]),
                HermitianMatrix::from_real_diagonal(&[0., 1.]),
            ],
            vec![w0, 1. - w0],
        )
        .unwrap()
    }

    #[test]
    fn reaches_classical_optimum_in_one_step() {
        let ens = two_projectors(0.75);
        let next = step_qem(&ens, &SolverState::initial(2)).unwrap();
        let expected = HermitianMatrix::from_real_diagonal(&[0.75, 0.25]);
        assert!((next.rho.as_hermitian() - &expected).frobenius_norm() < 1e-15);
        assert!((next.last_tau - 1.0).abs() < 1e-15);
        assert_eq!(next.k, 2);
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let ens = two_projectors(0.5);
        let next = step_qem(&ens, &SolverState::initial(2)).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!((next.rho.as_hermitian() - mixed.as_hermitian()).frobenius_norm() < 1e-15);
        assert!((next.rho_bar.as_hermitian() - mixed.as_hermitian()).frobenius_norm() < 1e-15);
    }
}
