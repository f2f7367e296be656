//! Inner folding: a seeded balanced partition into `r` folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Assigns every instance to exactly one of `r` folds; fold sizes differ by
/// at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    r: usize,
}

impl FoldAssignment {
    pub fn seeded(n: usize, r: usize, seed: u64) -> Result<Self> {
        if r < 2 {
            return Err(Error::Config("inner folding needs at least 2 folds".into()));
        }
        if r > n {
            return Err(Error::Config(format!("{r} folds for {n} instances")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut fold_of = vec![0usize; n];
        for (pos, &instance) in order.iter().enumerate() {
            fold_of[instance] = pos % r;
        }
        Ok(FoldAssignment { fold_of, r })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    /// Instance ids of fold `j`, ascending.
    pub fn test_ids(&self, j: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == j).collect()
    }

    /// Instance ids of every fold except `j`, ascending.
    pub fn train_ids(&self, j: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != j).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.r];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}
