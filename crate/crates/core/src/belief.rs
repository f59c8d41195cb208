//! Per-cell sum LLRs and the statistics derived from them.
//!
//! Cells are indexed from 0. Ranking breaks ties by ascending cell index.

use std::cmp::Ordering;

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    time: u64,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

/// Cell indices ordered by sum LLR, highest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedCells(Vec<usize>);

impl RankedCells {
    pub fn order(&self) -> &[usize] {
        &self.0
    }

    /// The `i`-th highest cell (0-based rank).
    pub fn at(&self, rank: usize) -> usize {
        self.0[rank]
    }

    pub fn top(&self, n: usize) -> &[usize] {
        &self.0[..n]
    }
}

impl BeliefState {
    pub fn new(cells: usize) -> Self {
        assert!(cells >= 2, "need at least two cells, got {cells}");
        Self {
            time: 0,
            sums: vec![0.0; cells],
            counts: vec![0; cells],
        }
    }

    /// Builds a belief with the given sums, for tests and tooling. Counts are
    /// left at zero.
    pub fn from_sums(sums: Vec<f64>) -> Self {
        assert!(sums.len() >= 2, "need at least two cells");
        let cells = sums.len();
        Self {
            time: 0,
            sums,
            counts: vec![0; cells],
        }
    }

    pub fn cells(&self) -> usize {
        self.sums.len()
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    pub fn sum(&self, cell: usize) -> f64 {
        self.sums[cell]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Adds one step's observations and advances time by one. An empty slice
    /// is an idle step.
    ///
    /// Panics if a cell appears twice.
    pub fn apply_observations(&mut self, obs: &[(usize, f64)]) {
        for (i, (cell, _)) in obs.iter().enumerate() {
            assert!(
                obs[..i].iter().all(|(c, _)| c != cell),
                "cell {cell} observed twice in one step"
            );
        }
        for &(cell, llr) in obs {
            self.sums[cell] += llr;
            self.counts[cell] += 1;
        }
        self.time += 1;
    }

    pub fn ranked(&self) -> RankedCells {
        let mut order: Vec<usize> = (0..self.sums.len()).collect();
        order.sort_by(|&a, &b| rank_cmp(&self.sums, a, b));
        RankedCells(order)
    }

    /// The `n` highest cells without sorting the full vector.
    pub fn top(&self, n: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.sums.len()).collect();
        if n < order.len() {
            order.select_nth_unstable_by(n, |&a, &b| rank_cmp(&self.sums, a, b));
            order.truncate(n);
        }
        order.sort_by(|&a, &b| rank_cmp(&self.sums, a, b));
        order
    }

    /// Gap between the `l`-th and `(l+1)`-th highest sums (`l` is 1-based).
    pub fn delta_l_s(&self, l: usize) -> f64 {
        assert!(
            l >= 1 && l < self.sums.len(),
            "L must satisfy 1 <= L < M (L={l}, M={})",
            self.sums.len()
        );
        let top = self.top(l + 1);
        self.sums[top[l - 1]] - self.sums[top[l]]
    }

    /// Number of cells with strictly positive sum LLR.
    pub fn h1_count(&self) -> usize {
        self.sums.iter().filter(|&&s| s > 0.0).count()
    }
}

fn rank_cmp(sums: &[f64], a: usize, b: usize) -> Ordering {
    sums[b].total_cmp(&sums[a]).then(a.cmp(&b))
}
