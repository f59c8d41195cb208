//! Observation models: the normal density `f`, the abnormal density `g`,
//! sampling, pointwise log-likelihood ratios and KL divergences.
//!
//! All logarithms are natural (nats). The log-likelihood ratio of an
//! observation `y` is `log(g(y) / f(y))`, so samples drawn from `g` produce
//! a random walk with positive drift `D(g||f)` and samples drawn from `f` a
//! walk with negative drift `-D(f||g)`.

use rand::distributions::Open01;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

/// Tolerance on the total mass of a discrete probability vector.
const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(
        "Rayleigh scale must be positive and finite, got sigma_f={sigma_f}, sigma_g={sigma_g}"
    )]
    NonPositiveScale { sigma_f: f64, sigma_g: f64 },

    #[error("Rayleigh scales are equal ({0}); normal and abnormal laws coincide")]
    EqualScales(f64),

    #[error("probability vectors must have the same length >= 2 (got {f} and {g})")]
    TableShape { f: usize, g: usize },

    #[error("{which} does not sum to 1 (sum = {sum})")]
    TableMass { which: &'static str, sum: f64 },

    #[error("{which} has an invalid entry at symbol {index}: {value}")]
    TableEntry {
        which: &'static str,
        index: usize,
        value: f64,
    },

    #[error("p_f and p_g do not share support at symbol {0}")]
    SupportMismatch(usize),

    #[error("normal and abnormal tables are identical")]
    IdenticalTables,

    #[error("observation {0} is outside the support of the model")]
    OutOfSupport(f64),
}

/// Hidden state of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Normal,
    Abnormal,
}

/// The two parametric families the simulator supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ModelKind {
    Rayleigh {
        sigma_f: f64,
        sigma_g: f64,
    },
    /// Finite alphabet; observations are symbol indices carried as `f64`.
    TableDiscrete {
        p_f: Vec<f64>,
        p_g: Vec<f64>,
    },
}

/// KL divergences between the abnormal and normal laws, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlPair {
    /// `D(g||f)`: expected LLR increment when probing a target.
    pub d_g_f: f64,
    /// `D(f||g)`: expected LLR decrement when probing a normal cell.
    pub d_f_g: f64,
}

impl KlPair {
    pub fn new(d_g_f: f64, d_f_g: f64) -> Self {
        Self { d_g_f, d_f_g }
    }
}

/// A validated `(f, g)` pair. Immutable after construction and cheap to share
/// between concurrently running episodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    kind: ModelKind,
    // Precomputed per-symbol LLRs for the discrete model.
    table_llr: Vec<f64>,
}

impl ObservationModel {
    pub fn rayleigh(sigma_f: f64, sigma_g: f64) -> Result<Self, ModelError> {
        let valid = |s: f64| s.is_finite() && s > 0.0;
        if !valid(sigma_f) || !valid(sigma_g) {
            return Err(ModelError::NonPositiveScale { sigma_f, sigma_g });
        }
        if sigma_f == sigma_g {
            return Err(ModelError::EqualScales(sigma_f));
        }
        Ok(Self {
            kind: ModelKind::Rayleigh { sigma_f, sigma_g },
            table_llr: Vec::new(),
        })
    }

    pub fn table(p_f: Vec<f64>, p_g: Vec<f64>) -> Result<Self, ModelError> {
        if p_f.len() != p_g.len() || p_f.len() < 2 {
            return Err(ModelError::TableShape {
                f: p_f.len(),
                g: p_g.len(),
            });
        }
        for (which, p) in [("p_f", &p_f), ("p_g", &p_g)] {
            if let Some((index, &value)) = p
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > 1.0)
            {
                return Err(ModelError::TableEntry {
                    which,
                    index,
                    value,
                });
            }
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                return Err(ModelError::TableMass { which, sum });
            }
        }
        if let Some(i) = (0..p_f.len()).find(|&i| (p_f[i] == 0.0) != (p_g[i] == 0.0)) {
            return Err(ModelError::SupportMismatch(i));
        }
        if p_f == p_g {
            return Err(ModelError::IdenticalTables);
        }
        let table_llr = p_f
            .iter()
            .zip(&p_g)
            .map(|(&f, &g)| if f > 0.0 { (g / f).ln() } else { 0.0 })
            .collect();
        Ok(Self {
            kind: ModelKind::TableDiscrete { p_f, p_g },
            table_llr,
        })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// The same model with the roles of `f` and `g` exchanged.
    pub fn swapped(&self) -> Self {
        match &self.kind {
            ModelKind::Rayleigh { sigma_f, sigma_g } => Self::rayleigh(*sigma_g, *sigma_f),
            ModelKind::TableDiscrete { p_f, p_g } => Self::table(p_g.clone(), p_f.clone()),
        }
        .expect("swapping a valid model keeps it valid")
    }

    /// Draws one observation. Uses exactly one uniform variate from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, state: CellState, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        match &self.kind {
            ModelKind::Rayleigh { sigma_f, sigma_g } => {
                let sigma = match state {
                    CellState::Normal => *sigma_f,
                    CellState::Abnormal => *sigma_g,
                };
                sigma * (-2.0 * u.ln()).sqrt()
            }
            ModelKind::TableDiscrete { p_f, p_g } => {
                let p = match state {
                    CellState::Normal => p_f,
                    CellState::Abnormal => p_g,
                };
                inverse_cdf(p, u) as f64
            }
        }
    }

    pub fn llr(&self, y: f64) -> Result<f64, ModelError> {
        match &self.kind {
            ModelKind::Rayleigh { sigma_f, sigma_g } => {
                if !(y.is_finite() && y > 0.0) {
                    return Err(ModelError::OutOfSupport(y));
                }
                let (vf, vg) = (sigma_f * sigma_f, sigma_g * sigma_g);
                Ok((vf / vg).ln() + 0.5 * y * y * (1.0 / vf - 1.0 / vg))
            }
            ModelKind::TableDiscrete { p_f, .. } => {
                let idx = y as usize;
                if y < 0.0 || y.fract() != 0.0 || idx >= p_f.len() || p_f[idx] == 0.0 {
                    return Err(ModelError::OutOfSupport(y));
                }
                Ok(self.table_llr[idx])
            }
        }
    }

    /// Samples an observation for a cell in `state` and returns its LLR.
    pub fn sample_llr<R: Rng + ?Sized>(&self, state: CellState, rng: &mut R) -> f64 {
        let y = self.sample(state, rng);
        self.llr(y)
            .expect("sampled observations lie in the support")
    }

    /// Closed-form divergences.
    pub fn kl(&self) -> KlPair {
        match &self.kind {
            ModelKind::Rayleigh { sigma_f, sigma_g } => KlPair {
                d_f_g: rayleigh_kl(*sigma_f, *sigma_g),
                d_g_f: rayleigh_kl(*sigma_g, *sigma_f),
            },
            ModelKind::TableDiscrete { p_f, p_g } => KlPair {
                d_f_g: discrete_kl(p_f, p_g),
                d_g_f: discrete_kl(p_g, p_f),
            },
        }
    }

    /// Sample-mean estimates of both divergences from `n` draws under each law.
    pub fn kl_monte_carlo<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> KlPair {
        assert!(n >= 1, "kl_monte_carlo needs at least one sample");
        let mean = |state, rng: &mut R| {
            (0..n).map(|_| self.sample_llr(state, rng)).sum::<f64>() / n as f64
        };
        let d_g_f = mean(CellState::Abnormal, rng);
        let d_f_g = -mean(CellState::Normal, rng);
        KlPair { d_g_f, d_f_g }
    }
}

/// `D(Rayleigh(a) || Rayleigh(b))`.
fn rayleigh_kl(a: f64, b: f64) -> f64 {
    2.0 * (b / a).ln() + (a * a - b * b) / (b * b)
}

fn discrete_kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0)
}

fn inverse_cdf(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // Rounding in the cumulative sum can leave u just above the total mass.
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}
