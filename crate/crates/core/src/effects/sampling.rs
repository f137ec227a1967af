//! Reproducible joint draws from an [`EffectModel`].
//!
//! All randomness comes from one ChaCha8 key derived from the user seed.
//! ChaCha is a counter-based generator, so draw `k` reads a fixed window of
//! the keystream (stream 0, words `k·w .. (k+1)·w` where `w` is the number
//! of 32-bit words one draw consumes). Any partition of the draws across
//! workers therefore yields bit-identical output.
//!
//! Other consumers use disjoint streams of the same key:
//! stream `k + 1` breaks rank ties in draw `k`, and the last stream derives
//! per-task seeds (e.g. one per sweep grid point).

use nalgebra::SymmetricEigen;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{covariance_matrix, Distribution, EffectModel, SampleMatrix};
use crate::error::{RankError, Result};
use crate::normal;

pub const DEFAULT_DRAWS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 20_200_101;

/// Draws per work unit; fixed so the reduction order never depends on the
/// thread count.
pub(crate) const CHUNK_ROWS: usize = 4096;

const SAMPLE_STREAM: u64 = 0;
const DERIVE_STREAM: u64 = u64::MAX;

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_draws: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_draws: DEFAULT_DRAWS,
            seed: DEFAULT_SEED,
        }
    }
}

impl McConfig {
    pub fn new(n_draws: usize, seed: u64) -> Self {
        Self { n_draws, seed }
    }

    /// The same configuration with the seed replaced by the `index`-th derived seed.
    pub fn derived(&self, index: u64) -> Self {
        Self {
            n_draws: self.n_draws,
            seed: derive_seed(self.seed, index),
        }
    }
}

/// Deterministically derives an independent seed from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DERIVE_STREAM);
    rng.set_word_pos(u128::from(index) * 2);
    rng.next_u64()
}

/// Generator for the tie-breaking randomness of row `k`.
pub(crate) fn row_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64 + 1);
    rng
}

/// Uniform on the open interval (0, 1) from the top 53 bits.
#[inline]
fn open_unit(x: u64) -> f64 {
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    normal::quantile(open_unit(rng.next_u64()))
}

/// Per-model state needed to turn keystream words into one joint draw.
enum Sampler<'a> {
    Independent { means: &'a [f64], sds: &'a [f64] },
    Correlated { means: &'a [f64], factor: Vec<f64> },
    Resample { samples: &'a SampleMatrix },
}

impl<'a> Sampler<'a> {
    fn new(model: &'a EffectModel) -> Result<Self> {
        Ok(match model.distribution() {
            Distribution::MarginalNormal(m) => Self::Independent {
                means: &m.means,
                sds: &m.sds,
            },
            Distribution::JointNormal(j) => {
                // Σ = Q Λ Qᵀ ⇒ x = M + Q √Λ z; tolerates singular Σ.
                let t = j.means.len();
                let eig = SymmetricEigen::new(covariance_matrix(&j.covariance));
                let mut factor = vec![0.0; t * t];
                for r in 0..t {
                    for c in 0..t {
                        factor[r * t + c] =
                            eig.eigenvectors[(r, c)] * eig.eigenvalues[c].max(0.0).sqrt();
                    }
                }
                Self::Correlated {
                    means: &j.means,
                    factor,
                }
            }
            Distribution::Empirical(e) => {
                if e.samples.n_rows() == 0 {
                    return Err(RankError::EmptySamples);
                }
                Self::Resample {
                    samples: &e.samples,
                }
            }
        })
    }

    /// 32-bit keystream words consumed by one draw.
    fn words_per_draw(&self, t: usize) -> u128 {
        match self {
            Self::Independent { .. } | Self::Correlated { .. } => 2 * t as u128,
            Self::Resample { .. } => 2,
        }
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64], z: &mut [f64]) {
        match self {
            Self::Independent { means, sds } => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = means[i] + sds[i] * std_normal(rng);
                }
            }
            Self::Correlated { means, factor } => {
                let t = means.len();
                for zi in z.iter_mut() {
                    *zi = std_normal(rng);
                }
                for (r, o) in out.iter_mut().enumerate() {
                    let row = &factor[r * t..(r + 1) * t];
                    *o = means[r] + row.iter().zip(z.iter()).map(|(a, b)| a * b).sum::<f64>();
                }
            }
            Self::Resample { samples } => {
                // widening multiply maps a u64 onto 0..S with bias below S/2^64
                let s = samples.n_rows() as u128;
                let k = ((u128::from(rng.next_u64()) * s) >> 64) as usize;
                out.copy_from_slice(samples.row(k));
            }
        }
    }
}

/// Draws `n_draws` joint samples of (μ_1, …, μ_T) from `model`.
///
/// Empirical models are resampled with replacement. The result depends only
/// on `(model, n_draws, seed)`, never on the rayon pool width.
pub fn draw_samples(model: &EffectModel, n_draws: usize, seed: u64) -> Result<SampleMatrix> {
    if n_draws == 0 {
        return Err(RankError::ZeroDraws);
    }
    let sampler = Sampler::new(model)?;
    let t = model.len();
    let words = sampler.words_per_draw(t);
    let mut base = ChaCha8Rng::seed_from_u64(seed);
    base.set_stream(SAMPLE_STREAM);

    let mut data = vec![0.0; n_draws * t];
    data.par_chunks_mut(CHUNK_ROWS * t)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = base.clone();
            rng.set_word_pos((chunk * CHUNK_ROWS) as u128 * words);
            let mut z = vec![0.0; t];
            for row in out.chunks_exact_mut(t) {
                sampler.fill(&mut rng, row, &mut z);
            }
        });
    Ok(SampleMatrix::new(model.names(), data)?.with_seed(seed))
}
