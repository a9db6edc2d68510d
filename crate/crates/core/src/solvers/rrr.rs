//! The `RρR` fixed-point iteration and its diluted, line-searched variants.

use crate::error::{Error, Result};
use crate::linalg::{eigh, trace_normalize, DensityMatrix, HermitianMatrix};
use crate::model::{objective, r_map, MeasurementEnsemble};

use super::SolverState;

/// How the dilution parameter `α` of `(R + αI) ρ (R + αI)` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineSearch {
    /// Golden-section minimization of the objective over `α ∈ [0, 10 λ_max(R)]`.
    Exact,
    /// Backtracking on `t = 1 / (1 + α)` with a sufficient-decrease test.
    Armijo,
}

/// Relative tolerance on `α` for the exact search.
pub const EXACT_ALPHA_RTOL: f64 = 1e-10;
/// Upper end of the exact-search bracket, in units of `λ_max(R)`.
pub const EXACT_BRACKET_SCALE: f64 = 10.0;
/// Sufficient-decrease constant of the Armijo rule.
pub const ARMIJO_C: f64 = 1e-4;
/// Maximum number of step halvings in the Armijo rule.
pub const ARMIJO_MAX_HALVINGS: usize = 60;

const DESCENT_SLACK: f64 = 1e-12;

pub fn step_rrr(ens: &MeasurementEnsemble, state: &SolverState) -> Result<SolverState> {
    let r = r_map(ens, &state.rho)?;
    let (rho, tau) = trace_normalize(&r.sandwich(state.rho.as_hermitian())?)?;
    Ok(state.advance(rho, tau, None, None))
}

/// `N((R + αI) ρ (R + αI))` and its pre-normalization trace.
pub fn diluted_update(
    rho: &DensityMatrix,
    r: &HermitianMatrix,
    alpha: f64,
) -> Result<(DensityMatrix, f64)> {
    let factor = r.shift(alpha);
    trace_normalize(&factor.sandwich(rho.as_hermitian())?)
}

/// Diluted step with a caller-supplied `α`.
pub fn step_diluted_with_alpha(
    ens: &MeasurementEnsemble,
    state: &SolverState,
    alpha: f64,
) -> Result<SolverState> {
    let r = r_map(ens, &state.rho)?;
    let (rho, tau) = diluted_update(&state.rho, &r, alpha)?;
    Ok(state.advance(rho, tau, Some(alpha), None))
}

pub fn step_diluted(
    ens: &MeasurementEnsemble,
    state: &SolverState,
    strategy: LineSearch,
) -> Result<SolverState> {
    let r = r_map(ens, &state.rho)?;
    let f0 = objective(ens, &state.rho)?;
    let (alpha, rho, tau) = match strategy {
        LineSearch::Exact => exact_search(ens, &state.rho, &r, f0)?,
        LineSearch::Armijo => armijo_search(ens, &state.rho, &r, f0)?,
    };
    Ok(state.advance(rho, tau, Some(alpha), None))
}

fn exact_search(
    ens: &MeasurementEnsemble,
    rho: &DensityMatrix,
    r: &HermitianMatrix,
    f0: f64,
) -> Result<(f64, DensityMatrix, f64)> {
    let lambda_max = eigh(r)?.max_eigenvalue();
    let mut hi = EXACT_BRACKET_SCALE * lambda_max;
    let mut evaluations = 0;
    let mut phi = |alpha: f64| -> Result<f64> {
        evaluations += 1;
        let (next, _) = diluted_update(rho, r, alpha)?;
        objective(ens, &next)
    };

    let (mut best_alpha, mut best_f) = golden_section(&mut phi, 0.0, hi, EXACT_ALPHA_RTOL)?;
    for alpha in [0.0, hi] {
        let f = phi(alpha)?;
        if f < best_f {
            (best_alpha, best_f) = (alpha, f);
        }
    }
    // The update tends to ρ as α grows, so widening the bracket eventually
    // yields a non-increasing step.
    let mut widenings = 0;
    while best_f > f0 + DESCENT_SLACK {
        if widenings == 40 {
            return Err(Error::LineSearchFailed { evaluations });
        }
        hi *= 4.0;
        widenings += 1;
        let f = phi(hi)?;
        if f < best_f {
            (best_alpha, best_f) = (hi, f);
        }
    }
    let (next, tau) = diluted_update(rho, r, best_alpha)?;
    Ok((best_alpha, next, tau))
}

fn armijo_search(
    ens: &MeasurementEnsemble,
    rho: &DensityMatrix,
    r: &HermitianMatrix,
    f0: f64,
) -> Result<(f64, DensityMatrix, f64)> {
    // d/dt f along t ↦ N((tR + (1-t)I) ρ (tR + (1-t)I)) at t = 0 equals
    // -2 (tr(RρR) - 1), which is never positive.
    let decrease = 2.0 * (r.sandwich(rho.as_hermitian())?.trace() - 1.0);
    let mut t = 1.0;
    for _ in 0..=ARMIJO_MAX_HALVINGS {
        let alpha = (1.0 - t) / t;
        let (next, tau) = diluted_update(rho, r, alpha)?;
        if objective(ens, &next)? <= f0 - ARMIJO_C * t * decrease {
            return Ok((alpha, next, tau));
        }
        t *= 0.5;
    }
    if decrease <= DESCENT_SLACK {
        // Stationary up to roundoff: R ≈ I on the support of ρ.
        return Ok((f64::INFINITY, rho.clone(), 1.0));
    }
    Err(Error::LineSearchFailed {
        evaluations: ARMIJO_MAX_HALVINGS + 1,
    })
}

/// Golden-section minimization on `[lo, hi]`; returns the best point seen and its value.
pub fn golden_section<F>(phi: &mut F, lo: f64, hi: f64, rtol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = phi(c)?;
    let mut fd = phi(d)?;
    for _ in 0..200 {
        if b - a <= rtol * 0.5 * (a.abs() + b.abs()) + f64::MIN_POSITIVE {
            break;
        }
        if fc <= fd {
            b = d;
            (d, fd) = (c, fc);
            c = b - INV_PHI * (b - a);
            fc = phi(c)?;
        } else {
            a = c;
            (c, fc) = (d, fd);
            d = a + INV_PHI * (b - a);
            fd = phi(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

#[cfg(test)]
mod tests {
    use super::*;

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

    fn state_at(p: &[f64]) -> SolverState {
        SolverState::from_state(DensityMatrix::from_probabilities(p).unwrap())
    }

    fn diag_close(rho: &DensityMatrix, p: &[f64], tol: f64) -> bool {
        (rho.as_hermitian() - &HermitianMatrix::from_real_diagonal(p)).frobenius_norm() <= tol
    }

    #[test]
    fn rrr_examples() {
        let next = step_rrr(&two_projectors(0.5), &SolverState::initial(2)).unwrap();
        assert!(diag_close(&next.rho, &[0.5, 0.5], 1e-15));

        let ens = two_projectors(0.75);
        let next = step_rrr(&ens, &SolverState::initial(2)).unwrap();
        assert!(diag_close(&next.rho, &[0.9, 0.1], 1e-15));
        assert!((next.last_tau - 1.25).abs() < 1e-15);

        let back = step_rrr(&ens, &next).unwrap();
        assert!(diag_close(&back.rho, &[0.5, 0.5], 1e-15));
    }

    #[test]
    fn zero_dilution_is_rrr() {
        let ens = two_projectors(0.75);
        let s = state_at(&[0.6, 0.4]);
        let a = step_diluted_with_alpha(&ens, &s, 0.0).unwrap();
        let b = step_rrr(&ens, &s).unwrap();
        assert_eq!(a.rho, b.rho);
    }

    #[test]
    fn huge_dilution_barely_moves() {
        let ens = two_projectors(0.75);
        let s = state_at(&[0.6, 0.4]);
        let next = step_diluted_with_alpha(&ens, &s, 1e8).unwrap();
        assert!((next.rho.as_hermitian() - s.rho.as_hermitian()).frobenius_norm() <= 1e-6);
    }

    #[test]
    fn exact_search_hits_closed_form() {
        let ens = two_projectors(0.75);
        let next = step_diluted(&ens, &SolverState::initial(2), LineSearch::Exact).unwrap();
        let alpha = next.last_alpha.unwrap();
        assert!((alpha - 3f64.sqrt() / 2.0).abs() < 1e-6, "alpha = {alpha}");
        assert!(diag_close(&next.rho, &[0.75, 0.25], 1e-8), "{:?}", next.rho);
    }

    #[test]
    fn armijo_descends() {
        let ens = two_projectors(0.75);
        let mut s = SolverState::initial(2);
        let mut f = objective(&ens, &s.rho).unwrap();
        for _ in 0..50 {
            s = step_diluted(&ens, &s, LineSearch::Armijo).unwrap();
            let next = objective(&ens, &s.rho).unwrap();
            assert!(next <= f + 1e-12);
            f = next;
        }
        assert!((f - 0.562_335_144_618_808_3).abs() < 1e-10);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let mut phi = |x: f64| -> Result<f64> { Ok((x - 1.3).powi(2)) };
        let (x, _) = golden_section(&mut phi, 0.0, 5.0, 1e-10).unwrap();
        assert!((x - 1.3).abs() < 1e-8);
    }
}
