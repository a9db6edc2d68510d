//! Iterative maximum-likelihood solvers and the run loop that drives them.
//!
//! Every quantum algorithm starts from the maximally mixed state `I / D`. The
//! loop tracks the running average `ρ̄_k = (ρ_1 + ... + ρ_k) / k` next to the
//! last iterate and stops once the cheaper of the two gap certificates drops
//! below the requested tolerance.

mod cover;
mod qem;
mod rrr;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use web_time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{matrix_log, DensityMatrix, HermitianMatrix, DEFAULT_LOG_FLOOR};
use crate::model::{
    certificate, kernel_reduce, lift_state, objective, MeasurementEnsemble, ReductionMap,
    DEFAULT_REDUCTION_TOL,
};

pub use cover::{
    diagonal_extract, run_cover, step_cover, DiagonalForm, PortfolioProblem, PortfolioRecord,
    PortfolioReport, SimplexVector,
};
pub use qem::step_qem;
pub use rrr::{
    diluted_update, golden_section, step_diluted, step_diluted_with_alpha, step_rrr, LineSearch,
    ARMIJO_C, ARMIJO_MAX_HALVINGS, EXACT_ALPHA_RTOL, EXACT_BRACKET_SCALE,
};

/// Slack allowed on the Golden-Thompson bound `tr exp(log ρ + log R) ≤ 1`.
pub const GOLDEN_THOMPSON_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// `ρ ← N(exp(log ρ + log R(ρ)))`.
    Qem,
    /// `ρ ← N(R ρ R)`.
    Rrr,
    DrrrExact,
    DrrrArmijo,
    /// Cover's method in the common eigenbasis of a commuting ensemble.
    Cover,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Qem,
        Algorithm::Rrr,
        Algorithm::DrrrExact,
        Algorithm::DrrrArmijo,
        Algorithm::Cover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qem => "qem",
            Algorithm::Rrr => "rrr",
            Algorithm::DrrrExact => "drrr-exact",
            Algorithm::DrrrArmijo => "drrr-armijo",
            Algorithm::Cover => "cover",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.trim().to_ascii_lowercase().replace('_', "-");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == normalized)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOptions {
    pub algorithm: Algorithm,
    pub max_iters: usize,
    /// Stop once a certificate at `ρ_k` or `ρ̄_k` is at most this value.
    pub certificate_tol: f64,
    pub record_every: usize,
}

impl SolverOptions {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            ..Self::default()
        }
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn certificate_tol(mut self, tol: f64) -> Self {
        self.certificate_tol = tol;
        self
    }

    pub fn record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        if !(self.certificate_tol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "certificate tolerance must be non-negative, got {}",
                self.certificate_tol
            )));
        }
        Ok(())
    }
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Qem,
            max_iters: 1000,
            certificate_tol: 1e-8,
            record_every: 1,
        }
    }
}

/// Iterate `ρ_k`, running mean `ρ̄_k` and the diagnostics of the step that produced `ρ_k`.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub k: usize,
    pub rho: DensityMatrix,
    pub rho_bar: DensityMatrix,
    /// Trace of the last update before normalization.
    pub last_tau: f64,
    /// Dilution parameter of the last diluted step.
    pub last_alpha: Option<f64>,
    log_rho: Option<HermitianMatrix>,
}

impl SolverState {
    /// `ρ_1 = I / D`.
    pub fn initial(dim: usize) -> Self {
        let log_rho = HermitianMatrix::identity(dim).scale(-(dim as f64).ln());
        Self {
            log_rho: Some(log_rho),
            ..Self::from_state(DensityMatrix::maximally_mixed(dim))
        }
    }

    /// Starts at an arbitrary density matrix (used by tests and diagnostics).
    pub fn from_state(rho: DensityMatrix) -> Self {
        Self {
            k: 1,
            rho_bar: rho.clone(),
            rho,
            last_tau: 1.0,
            last_alpha: None,
            log_rho: None,
        }
    }

    /// `log ρ_k` as carried by the log-domain update, when available.
    pub fn log_rho(&self) -> Option<&HermitianMatrix> {
        self.log_rho.as_ref()
    }

    fn log_rho_or_compute(&self) -> Result<HermitianMatrix> {
        match &self.log_rho {
            Some(l) => Ok(l.clone()),
            None => matrix_log(self.rho.as_hermitian(), DEFAULT_LOG_FLOOR),
        }
    }

    fn advance(
        &self,
        rho: DensityMatrix,
        tau: f64,
        alpha: Option<f64>,
        log_rho: Option<HermitianMatrix>,
    ) -> Self {
        let k = self.k + 1;
        Self {
            k,
            rho_bar: self.rho_bar.running_mean(&rho, k),
            rho,
            last_tau: tau,
            last_alpha: alpha,
            log_rho,
        }
    }
}

/// Advances `state` by one step of `algorithm`. Cover's method needs the
/// diagonal form and is driven by [`run`] instead.
pub fn step(ens: &MeasurementEnsemble, state: &SolverState, algorithm: Algorithm) -> Result<SolverState> {
    match algorithm {
        Algorithm::Qem => step_qem(ens, state),
        Algorithm::Rrr => step_rrr(ens, state),
        Algorithm::DrrrExact => step_diluted(ens, state, LineSearch::Exact),
        Algorithm::DrrrArmijo => step_diluted(ens, state, LineSearch::Armijo),
        Algorithm::Cover => {
            let form = diagonal_extract(ens)?;
            let x = SimplexVector::new(form.coordinates(&state.rho)?)?;
            let next = step_cover(&form.problem, &x)?;
            let tau = next.entries().iter().sum();
            Ok(state.advance(form.state(&next), tau, None, None))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub k: usize,
    pub objective_at_rho: f64,
    pub objective_at_rho_bar: f64,
    pub certificate_at_rho: f64,
    pub certificate_at_rho_bar: f64,
    pub tau: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CertificateMet,
    MaxIters,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::CertificateMet => "certificate_met",
            StopReason::MaxIters => "max_iters",
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub algorithm: Algorithm,
    /// Last iterate, lifted back to the original dimension.
    pub final_rho: DensityMatrix,
    pub final_rho_bar: DensityMatrix,
    pub records: Vec<TraceRecord>,
    pub stop_reason: StopReason,
    /// Index of the last iterate.
    pub iterations: usize,
    /// Smallest objective value seen at any `ρ_k` or `ρ̄_k`.
    pub best_objective: f64,
    pub reduction: ReductionMap,
    pub total_time_ms: f64,
}

impl ConvergenceReport {
    pub fn last_record(&self) -> &TraceRecord {
        self.records.last().expect("reports always hold a record")
    }

    /// The smaller of the final certificates at `ρ_k` and `ρ̄_k`.
    pub fn final_certificate(&self) -> f64 {
        let r = self.last_record();
        r.certificate_at_rho.min(r.certificate_at_rho_bar)
    }
}

/// Solves the maximum-likelihood problem for `ens`.
///
/// The common kernel of the elements is projected out first; the returned
/// states live in the original space.
pub fn run(ens: &MeasurementEnsemble, opts: &SolverOptions) -> Result<ConvergenceReport> {
    opts.validate()?;
    let start = Instant::now();
    let (reduced, reduction) = kernel_reduce(ens, DEFAULT_REDUCTION_TOL)?;
    let diagonal = match opts.algorithm {
        Algorithm::Cover => Some(diagonal_extract(&reduced)?),
        _ => None,
    };

    let mut state = SolverState::initial(reduced.dim());
    let mut cover_x = SimplexVector::uniform(reduced.dim());
    let mut records = Vec::new();
    let mut best_objective = f64::INFINITY;

    loop {
        let f_rho = objective(&reduced, &state.rho)?;
        let f_bar = objective(&reduced, &state.rho_bar)?;
        best_objective = best_objective.min(f_rho).min(f_bar);
        let cert_rho = certificate(&reduced, &state.rho)?.bound;
        let cert_bar = if state.k == 1 {
            cert_rho
        } else {
            certificate(&reduced, &state.rho_bar)?.bound
        };

        let stop = if cert_rho.min(cert_bar) <= opts.certificate_tol {
            Some(StopReason::CertificateMet)
        } else if state.k >= opts.max_iters {
            Some(StopReason::MaxIters)
        } else {
            None
        };
        if stop.is_some() || state.k % opts.record_every == 0 {
            records.push(TraceRecord {
                k: state.k,
                objective_at_rho: f_rho,
                objective_at_rho_bar: f_bar,
                certificate_at_rho: cert_rho,
                certificate_at_rho_bar: cert_bar,
                tau: state.last_tau,
                elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        if let Some(stop_reason) = stop {
            return Ok(ConvergenceReport {
                algorithm: opts.algorithm,
                final_rho: lift_state(&state.rho, &reduction)?,
                final_rho_bar: lift_state(&state.rho_bar, &reduction)?,
                iterations: state.k,
                records,
                stop_reason,
                best_objective,
                reduction,
                total_time_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }

        state = match &diagonal {
            Some(form) => {
                cover_x = step_cover(&form.problem, &cover_x)?;
                let tau = cover_x.entries().iter().sum();
                state.advance(form.state(&cover_x), tau, None, None)
            }
            None => step(&reduced, &state, opts.algorithm)?,
        };
        if opts.algorithm == Algorithm::Qem && state.last_tau > 1.0 + GOLDEN_THOMPSON_SLACK {
            return Err(Error::InvariantViolated(format!(
                "Golden-Thompson bound violated at k = {}: tau = {}",
                state.k, state.last_tau
            )));
        }
    }
}
