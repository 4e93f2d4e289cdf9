//! Block semidefinite programs in LMI form, compilation of symbolic systems,
//! a primal-dual interior-point solver and SDPA sparse file I/O.
//!
//! A [`BlockSdp`] with cost `b` and blocks `(F_0, …, F_p)` stands for
//!
//! ```text
//! minimize bᵀy  subject to  Σ y_i F_i − F_0 ⪰ 0 in every block.
//! ```

mod compile;
mod sdpa;
mod solver;

pub use compile::{compile, CompiledSdp, Objective, Sense};
pub use sdpa::{export_sdpa, import_sdpa};
pub use solver::{solve, SdpOptions, SdpSolution, SdpStatus};

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// One nonzero of matrix `mat` (0 for F_0) at `(row, col)`, `row ≤ col`, zero based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpEntry {
    pub mat: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpBlock {
    pub size: usize,
    /// Only diagonal entries are allowed.
    pub diagonal: bool,
    pub label: String,
    entries: Vec<SdpEntry>,
}

impl SdpBlock {
    pub fn new(size: usize, diagonal: bool, label: impl Into<String>) -> Self {
        SdpBlock {
            size,
            diagonal,
            label: label.into(),
            entries: Vec::new(),
        }
    }

    /// Adds `value` to entry (row, col) and (col, row) of matrix `mat`.
    pub fn add(&mut self, mat: usize, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            let (row, col) = if row <= col { (row, col) } else { (col, row) };
            self.entries.push(SdpEntry { mat, row, col, value });
        }
    }

    /// Sorts entries by (mat, row, col), merging duplicates and dropping zeros.
    pub fn canonicalize(&mut self) {
        self.entries
            .sort_by(|a, b| (a.mat, a.row, a.col).cmp(&(b.mat, b.row, b.col)));
        let mut out: Vec<SdpEntry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match out.last_mut() {
                Some(last) if (last.mat, last.row, last.col) == (e.mat, e.row, e.col) => {
                    last.value += e.value
                }
                _ => out.push(e),
            }
        }
        out.retain(|e| e.value != 0.0);
        self.entries = out;
    }

    pub fn entries(&self) -> &[SdpEntry] {
        &self.entries
    }

    /// Dense symmetric matrix F_mat of this block.
    pub fn matrix(&self, mat: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        for e in self.entries.iter().filter(|e| e.mat == mat) {
            m[(e.row, e.col)] += e.value;
            if e.row != e.col {
                m[(e.col, e.row)] += e.value;
            }
        }
        m
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BlockSdp {
    pub cost: Vec<f64>,
    pub blocks: Vec<SdpBlock>,
}

impl BlockSdp {
    pub fn new(cost: Vec<f64>) -> Self {
        BlockSdp {
            cost,
            blocks: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    pub fn push_block(&mut self, mut block: SdpBlock) {
        block.canonicalize();
        self.blocks.push(block);
    }

    /// Checks index ranges, diagonal structure and finiteness.
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.cost.iter().find(|c| !c.is_finite()) {
            return Err(Error::domain("cost entries must be finite", *c));
        }
        for (bi, b) in self.blocks.iter().enumerate() {
            if b.size == 0 {
                return Err(Error::Shape(format!("block {} ({}) is empty", bi + 1, b.label)));
            }
            for e in &b.entries {
                let bad = e.mat > self.num_vars()
                    || e.col >= b.size
                    || e.row > e.col
                    || (b.diagonal && e.row != e.col)
                    || !e.value.is_finite();
                if bad {
                    return Err(Error::Shape(format!(
                        "block {} ({}): invalid entry {:?}",
                        bi + 1,
                        b.label,
                        e
                    )));
                }
            }
        }
        Ok(())
    }

    /// Σ y_i F_i − F_0 for block `b`.
    pub fn slack(&self, b: usize, y: &[f64]) -> DMatrix<f64> {
        let blk = &self.blocks[b];
        let mut m = DMatrix::zeros(blk.size, blk.size);
        for e in &blk.entries {
            let c = if e.mat == 0 { -1.0 } else { y[e.mat - 1] };
            m[(e.row, e.col)] += c * e.value;
            if e.row != e.col {
                m[(e.col, e.row)] += c * e.value;
            }
        }
        m
    }

    /// Smallest eigenvalue of Σ y_i F_i − F_0 over all blocks (+∞ without blocks).
    pub fn min_slack_eigenvalue(&self, y: &[f64]) -> f64 {
        (0..self.blocks.len())
            .map(|b| {
                let m = self.slack(b, y);
                m.symmetric_eigenvalues().min()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The problem with an extra last variable s entering every block as −sI,
    /// bounded by s ≤ 1, and the objective replaced by maximizing s.
    pub fn with_margin(&self) -> BlockSdp {
        let s = self.num_vars() + 1;
        let mut cost = vec![0.0; s];
        cost[s - 1] = -1.0;
        let mut out = BlockSdp::new(cost);
        let mut lp: Option<SdpBlock> = None;
        for b in &self.blocks {
            let mut nb = b.clone();
            for i in 0..b.size {
                nb.add(s, i, i, -1.0);
            }
            if b.diagonal && lp.is_none() {
                lp = Some(nb);
            } else {
                out.push_block(nb);
            }
        }
        let mut lp = lp.unwrap_or_else(|| SdpBlock::new(0, true, "scalars"));
        let row = lp.size;
        lp.size += 1;
        lp.add(0, row, row, -1.0);
        lp.add(s, row, row, -1.0);
        out.push_block(lp);
        out
    }
}
