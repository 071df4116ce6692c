//! Block partitions of control-point indices and Frobenius-weighted block
//! sampling.
//!
//! A block `I` is drawn with probability `||A[:, I]||_F^2 / ||A||_F^2`. The
//! sampler owns a ChaCha8 stream seeded from a `u64`, so a seed fully
//! determines the draw sequence on every platform.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bspline::CollocationMatrix;
use crate::error::{Error, Result};

/// Disjoint contiguous index blocks covering `0..universe`. Every block has
/// `nominal` indices except possibly the last, which holds the remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Vec<usize>>,
    universe: usize,
    nominal: usize,
}

impl BlockPartition {
    /// Blocks `{0..tau-1}, {tau..2tau-1}, ...` over `count` indices.
    pub fn uniform(count: usize, tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::Argument("block size must be positive".into()));
        }
        if count == 0 {
            return Err(Error::Argument("cannot partition an empty index set".into()));
        }
        if tau > count {
            return Err(Error::Argument(format!("block size {tau} exceeds index count {count}")));
        }
        let blocks = (0..count)
            .step_by(tau)
            .map(|start| (start..(start + tau).min(count)).collect())
            .collect();
        Ok(Self {
            blocks,
            universe: count,
            nominal: tau,
        })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn universe_size(&self) -> usize {
        self.universe
    }

    pub fn nominal_size(&self) -> usize {
        self.nominal
    }
}

/// `||A[:, I_b]||_F^2 / ||A||_F^2` for every block `b`.
pub fn block_probabilities(a: &CollocationMatrix, part: &BlockPartition) -> Result<Vec<f64>> {
    if part.universe_size() != a.ncols() {
        return Err(Error::Shape(format!(
            "partition covers {} indices but the matrix has {} columns",
            part.universe_size(),
            a.ncols()
        )));
    }
    let total = a.frobenius_sq();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Rank("matrix has zero Frobenius norm".into()));
    }
    Ok(part.blocks().iter().map(|b| a.block_norm_sq(b) / total).collect())
}

/// Draws block indices with Frobenius-weighted probabilities.
#[derive(Clone, Debug)]
pub struct BlockSampler {
    partition: BlockPartition,
    probabilities: Vec<f64>,
    block_norms_sq: Vec<f64>,
    zero_blocks: Vec<usize>,
    dist: WeightedIndex<f64>,
    rng: ChaCha8Rng,
    seed: u64,
}

impl BlockSampler {
    pub fn new(a: &CollocationMatrix, partition: BlockPartition, seed: u64) -> Result<Self> {
        Self::with_stream(a, partition, seed, 0)
    }

    /// Like [`BlockSampler::new`] but on ChaCha stream `stream`, so two
    /// samplers sharing a seed draw independently.
    pub fn with_stream(a: &CollocationMatrix, partition: BlockPartition, seed: u64, stream: u64) -> Result<Self> {
        let probabilities = block_probabilities(a, &partition)?;
        let block_norms_sq = partition.blocks().iter().map(|b| a.block_norm_sq(b)).collect();
        let zero_blocks = probabilities
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == 0.0)
            .map(|(b, _)| b)
            .collect();
        let dist = WeightedIndex::new(&probabilities)
            .map_err(|e| Error::Argument(format!("invalid block weights: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self {
            partition,
            probabilities,
            block_norms_sq,
            zero_blocks,
            dist,
            rng,
            seed,
        })
    }

    /// Next block index.
    pub fn sample(&mut self) -> usize {
        self.dist.sample(&mut self.rng)
    }

    pub fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `||A[:, I_b]||_F^2`.
    pub fn block_norm_sq(&self, b: usize) -> f64 {
        self.block_norms_sq[b]
    }

    /// Blocks whose columns are identically zero; they are never drawn.
    pub fn zero_probability_blocks(&self) -> &[usize] {
        &self.zero_blocks
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Free-function form of [`BlockSampler::sample`].
pub fn sample_block(s: &mut BlockSampler) -> usize {
    s.sample()
}
