//! Synthetic tomography instances.
//!
//! All generators are deterministic in their arguments. Randomness comes from
//! ChaCha20 (`rand_chacha` 0.3) seeded with `seed_from_u64(seed)`; each use
//! gets its own stream so that one draw never shifts another:
//!
//! | purpose                          | stream                   |
//! |----------------------------------|--------------------------|
//! | ground-truth state               | `0`                      |
//! | Haar unitary for basis `b`       | `STREAM_BASIS + b`       |
//! | multinomial counts for basis `b` | `STREAM_COUNTS + b`      |
//! | commuting ensembles              | `STREAM_COMMUTING`       |
//!
//! Complex normal draws take the real part first, then the imaginary part,
//! each `N(0, 1/2)`, filling matrices column by column.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitize, hs_inner, trace_normalize, DensityMatrix, HermitianMatrix, C64};
use crate::model::MeasurementEnsemble;
use crate::solvers::PortfolioProblem;

pub const STREAM_BASIS: u64 = 1 << 32;
pub const STREAM_COUNTS: u64 = 2 << 32;
pub const STREAM_COMMUTING: u64 = 3 << 32;

/// A tomography problem plus whatever is known about how it was made.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub ensemble: MeasurementEnsemble,
    /// Raw outcome counts aligned with the ensemble elements, when the weights came from counts.
    pub counts: Option<Vec<u64>>,
    pub true_state: Option<DensityMatrix>,
    pub metadata: InstanceMetadata,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bases: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_basis: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.ensemble.dim()
    }
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_normal<R: Rng>(rng: &mut R) -> C64 {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * scale, im * scale)
}

fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng);
        }
    }
    m
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let qr = ginibre(dim, dim, rng).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `N(G G†)` for a `D x rank` complex Gaussian `G`.
pub fn gen_true_state(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if dim == 0 || rank == 0 || rank > dim {
        return Err(Error::InvalidArgument(format!(
            "rank must satisfy 1 <= rank <= dim, got rank {rank} for dim {dim}"
        )));
    }
    let g = ginibre(dim, rank, &mut rng_for(seed, 0));
    let gram = hermitize(&(&g * g.adjoint()))?;
    Ok(trace_normalize(&gram)?.0)
}

/// Rank-one projectors of `bases` orthonormal bases; basis 0 is the standard basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveMeasurement {
    pub dim: usize,
    pub bases: Vec<Vec<HermitianMatrix>>,
}

impl ProjectiveMeasurement {
    pub fn elements(&self) -> Vec<HermitianMatrix> {
        self.bases.iter().flatten().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.bases.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every outcome weighted equally; useful as an ideal (infinite-shot-free) ensemble.
    pub fn uniform_ensemble(&self) -> Result<MeasurementEnsemble> {
        let n = self.len();
        MeasurementEnsemble::from_trusted(self.elements(), vec![1.0 / n as f64; n])
    }
}

pub fn gen_projective_ensemble(dim: usize, bases: usize, seed: u64) -> Result<ProjectiveMeasurement> {
    if dim == 0 || bases == 0 {
        return Err(Error::InvalidArgument(format!(
            "need dim >= 1 and bases >= 1, got dim {dim}, bases {bases}"
        )));
    }
    let mut out = Vec::with_capacity(bases);
    for b in 0..bases {
        let unitary = if b == 0 {
            DMatrix::identity(dim, dim)
        } else {
            haar_unitary(dim, &mut rng_for(seed, STREAM_BASIS + b as u64))
        };
        let projectors = (0..dim)
            .map(|j| HermitianMatrix::outer(&unitary.column(j).into_owned()))
            .collect();
        out.push(projectors);
    }
    Ok(ProjectiveMeasurement { dim, bases: out })
}

/// Finite-shot data: a multinomial draw of `shots_per_basis` outcomes per basis.
///
/// Returns the ensemble (zero-count outcomes dropped) and the surviving counts.
pub fn sample_counts(
    measurement: &ProjectiveMeasurement,
    true_state: &DensityMatrix,
    shots_per_basis: u64,
    seed: u64,
) -> Result<(MeasurementEnsemble, Vec<u64>)> {
    if true_state.dim() != measurement.dim {
        return Err(Error::Dimension {
            expected: measurement.dim,
            actual: true_state.dim(),
        });
    }
    let mut elements = Vec::new();
    let mut counts = Vec::new();
    for (b, basis) in measurement.bases.iter().enumerate() {
        let probs = basis
            .iter()
            .map(|m| hs_inner(m, true_state.as_hermitian()).map(|p| p.max(0.0)))
            .collect::<Result<Vec<_>>>()?;
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "Born probabilities of basis {b} sum to {total}"
            )));
        }
        let mut rng = rng_for(seed, STREAM_COUNTS + b as u64);
        let drawn = multinomial(shots_per_basis, &probs, &mut rng)?;
        for (m, c) in basis.iter().zip(drawn) {
            if c > 0 {
                elements.push(m.clone());
                counts.push(c);
            }
        }
    }
    let ensemble = MeasurementEnsemble::from_counts(elements, &counts)?;
    Ok((ensemble, counts))
}

/// Sequential conditional-binomial multinomial sampler.
fn multinomial<R: Rng>(trials: u64, probs: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut remaining = trials;
    let mut mass: f64 = probs.iter().sum();
    let mut out = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        if i + 1 == probs.len() {
            out.push(remaining);
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = if remaining == 0 || q == 0.0 {
            0
        } else {
            Binomial::new(remaining, q)
                .map_err(|e| Error::InvalidArgument(e.to_string()))?
                .sample(rng)
        };
        out.push(k);
        remaining -= k;
        mass -= p;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub dim: usize,
    pub bases: usize,
    pub shots_per_basis: u64,
    pub rank: usize,
    pub seed: u64,
}

/// Ground-truth state, projective bases and sampled counts in one go.
pub fn gen_instance(cfg: &GenConfig) -> Result<ProblemInstance> {
    let truth = gen_true_state(cfg.dim, cfg.rank, cfg.seed)?;
    let measurement = gen_projective_ensemble(cfg.dim, cfg.bases, cfg.seed)?;
    let (ensemble, counts) = sample_counts(&measurement, &truth, cfg.shots_per_basis, cfg.seed)?;
    Ok(ProblemInstance {
        ensemble,
        counts: Some(counts),
        true_state: Some(truth),
        metadata: InstanceMetadata {
            seed: Some(cfg.seed),
            bases: Some(cfg.bases),
            shots_per_basis: Some(cfg.shots_per_basis),
            rank: Some(cfg.rank),
            notes: None,
        },
    })
}

/// Two-outcome instance on which `RρR` started at `I/2` alternates between
/// `I/2` and `diag(0.9, 0.1)` forever; the maximum-likelihood state is `diag(0.75, 0.25)`.
pub fn rrr_cycle_instance() -> ProblemInstance {
    let elements = vec![
        HermitianMatrix::from_real_diagonal(&[1.0, 0.0]),
        HermitianMatrix::from_real_diagonal(&[0.0, 1.0]),
    ];
    let counts = vec![3, 1];
    let ensemble = MeasurementEnsemble::from_counts(elements, &counts)
        .expect("two diagonal projectors form a valid ensemble");
    ProblemInstance {
        ensemble,
        counts: Some(counts),
        true_state: Some(DensityMatrix::from_trusted(HermitianMatrix::from_real_diagonal(&[
            0.75, 0.25,
        ]))),
        metadata: InstanceMetadata {
            notes: Some("RρR period-2 cycle instance".into()),
            ..InstanceMetadata::default()
        },
    }
}

/// Commuting ensemble `U diag(a_n) U†` with `a_n` supported on the first `support` coordinates.
///
/// `support < dim` leaves a common kernel of dimension `dim - support`.
pub fn gen_commuting_ensemble(
    dim: usize,
    support: usize,
    elements: usize,
    seed: u64,
) -> Result<(MeasurementEnsemble, DMatrix<C64>)> {
    if support == 0 || support > dim || elements == 0 {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= support <= dim and elements >= 1 (dim {dim}, support {support}, elements {elements})"
        )));
    }
    let mut rng = rng_for(seed, STREAM_COMMUTING);
    let unitary = haar_unitary(dim, &mut rng);
    let mut mats = Vec::with_capacity(elements);
    for n in 0..elements {
        let mut a = vec![0.0; dim];
        for (d, slot) in a.iter_mut().enumerate().take(support) {
            // Sparse-ish entries, with coordinate n mod support always present so
            // that every supported coordinate is covered.
            let u: f64 = rng.gen();
            *slot = if d == n % support || u > 0.3 { rng.gen_range(0.05..1.0) } else { 0.0 };
        }
        mats.push(HermitianMatrix::from_spectrum(&a, &unitary));
    }
    let raw: Vec<f64> = (0..elements).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    // Absorb the rounding residue so the weights sum to one within 1e-12.
    let residue = 1.0 - weights.iter().sum::<f64>();
    weights[0] += residue;
    let ens = MeasurementEnsemble::from_trusted(mats, weights)?;
    Ok((ens, unitary))
}

/// Classical growth-optimal portfolio problem from a table of per-period returns.
pub fn portfolio_from_returns(
    returns: &[Vec<f64>],
    weights: Option<Vec<f64>>,
) -> Result<PortfolioProblem> {
    let rows = returns.to_vec();
    match weights {
        Some(w) => PortfolioProblem::new(rows, w),
        None => PortfolioProblem::with_uniform_weights(rows),
    }
}

/// Normalized pure state from a complex vector.
pub fn pure_state(v: &[C64]) -> Result<DensityMatrix> {
    DensityMatrix::pure(&DVector::from_column_slice(v))
}
