//! Haar projection, shifted (adapted) Haar projection, and the dyadic
//! projection of cadlag paths onto their most recent dyadic grid value.

use crate::error::{Error, Result};
use crate::prm::MarkSpace;
use crate::semigroup::norm_e;
use crate::skorokhod::PiecewiseConstPath;

/// A function on `(0,1]` sampled as one value block per dyadic cell of order
/// `m` (cell `i` covers `(i 2^-m, (i+1) 2^-m]`). Blocks are plain vectors;
/// mark-indexed functions store their per-mark vectors concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    m: u32,
    values: Vec<Vec<f64>>,
}

impl SampledFunction {
    pub fn from_blocks(m: u32, values: Vec<Vec<f64>>) -> Result<Self> {
        let cells = 1usize << m;
        if values.len() != cells {
            return Err(Error::invalid(format!(
                "expected {cells} blocks for order {m}, got {}",
                values.len()
            )));
        }
        let width = values.first().map(|b| b.len()).unwrap_or(0);
        if width == 0 || values.iter().any(|b| b.len() != width) {
            return Err(Error::invalid("blocks must be nonempty and equally sized"));
        }
        Ok(SampledFunction { m, values })
    }

    /// Sample a function at cell midpoints.
    pub fn from_fn(m: u32, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let cells = 1usize << m;
        let h = (cells as f64).recip();
        let values = (0..cells).map(|i| f((i as f64 + 0.5) * h)).collect();
        Self::from_blocks(m, values)
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn block_width(&self) -> usize {
        self.values[0].len()
    }

    /// `L^p((0,1]; E)` norm, treating each block as an E-vector.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let h = (self.values.len() as f64).recip();
        let s: f64 = self.values.iter().map(|b| norm_e(b).powf(p) * h).sum();
        s.powf(p.recip())
    }

    /// `L^p((0,1]; L^p(Z,nu;E))` norm for mark-indexed blocks laid out as
    /// `marks * d` values per cell.
    pub fn lp_norm_marked(&self, p: f64, space: &MarkSpace) -> Result<f64> {
        let width = self.block_width();
        let nmarks = space.len();
        if width % nmarks != 0 {
            return Err(Error::invalid(format!(
                "block width {width} not divisible by {nmarks} marks"
            )));
        }
        let d = width / nmarks;
        let h = (self.values.len() as f64).recip();
        let mut s = 0.0;
        for b in &self.values {
            for (z, w) in space.weights.iter().enumerate() {
                s += norm_e(&b[z * d..(z + 1) * d]).powf(p) * w * h;
            }
        }
        Ok(s.powf(p.recip()))
    }
}

/// `L^p` distance between two sampled functions on the same grid.
pub fn lp_distance(a: &SampledFunction, b: &SampledFunction, p: f64) -> Result<f64> {
    if a.m != b.m || a.block_width() != b.block_width() {
        return Err(Error::invalid("sampled functions live on different grids"));
    }
    let h = (a.values.len() as f64).recip();
    let s: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| {
            let diff: Vec<f64> = x.iter().zip(y).map(|(u, v)| u - v).collect();
            norm_e(&diff).powf(p) * h
        })
        .sum();
    Ok(s.powf(p.recip()))
}

fn check_order(n: u32, f: &SampledFunction) -> Result<()> {
    if f.m < n {
        return Err(Error::Resolution { m: f.m, n });
    }
    Ok(())
}

// Mean by pairwise halving (the span is always a power of two). Averaging a
// run of identical blocks returns the block bit-exactly, which makes the
// projections exactly idempotent.
fn pairwise_mean(blocks: &[Vec<f64>]) -> Vec<f64> {
    if blocks.len() == 1 {
        return blocks[0].clone();
    }
    let half = blocks.len() / 2;
    let a = pairwise_mean(&blocks[..half]);
    let b = pairwise_mean(&blocks[half..]);
    a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// Exact mean of `f` over the order-`n` dyadic cell `((j-1) 2^-n, j 2^-n]`,
/// `j` counted from 1.
pub fn cell_average(n: u32, j: usize, f: &SampledFunction) -> Result<Vec<f64>> {
    check_order(n, f)?;
    let coarse_cells = 1usize << n;
    if j < 1 || j > coarse_cells {
        return Err(Error::invalid(format!(
            "cell index {j} outside 1..={coarse_cells}"
        )));
    }
    let span = 1usize << (f.m - n);
    let start = (j - 1) * span;
    Ok(pairwise_mean(&f.values[start..start + span]))
}

/// Order-`n` Haar projection: piecewise constant on dyadic cells of order
/// `n`, taking the cell average on every cell.
pub fn haar_project(n: u32, f: &SampledFunction) -> Result<SampledFunction> {
    check_order(n, f)?;
    let span = 1usize << (f.m - n);
    let mut values = Vec::with_capacity(f.values.len());
    for j in 1..=(1usize << n) {
        let avg = cell_average(n, j, f)?;
        for _ in 0..span {
            values.push(avg.clone());
        }
    }
    SampledFunction::from_blocks(f.m, values)
}

/// Order-`n` shifted Haar projection: zero on the first cell, then each cell
/// carries the previous cell's average, so the output on `(s, s']` depends
/// only on the input before `s`.
pub fn shifted_haar_project(n: u32, f: &SampledFunction) -> Result<SampledFunction> {
    check_order(n, f)?;
    let span = 1usize << (f.m - n);
    let width = f.block_width();
    let mut values = Vec::with_capacity(f.values.len());
    for _ in 0..span {
        values.push(vec![0.0; width]);
    }
    for j in 1..(1usize << n) {
        let avg = cell_average(n, j, f)?;
        for _ in 0..span {
            values.push(avg.clone());
        }
    }
    SampledFunction::from_blocks(f.m, values)
}

/// Order-`n` dyadic projection of a cadlag path on `[0,1]`:
/// `(pi_n x)(t) = x(2^-n floor(2^n t))` for `t < 1`, and `x(1)` at `t = 1`.
/// Right-continuous by construction.
pub fn dyadic_project(n: u32, x: &PiecewiseConstPath) -> Result<PiecewiseConstPath> {
    if (x.horizon() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "dyadic projection expects a path on the unit horizon",
        ));
    }
    let cells = 1u64 << n;
    let initial = x.value(0.0).to_vec();
    let mut jumps: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut current = initial.clone();
    for c in 1..cells {
        let t = c as f64 / cells as f64;
        let v = x.value(t).to_vec();
        if v != current {
            jumps.push((t, v.clone()));
            current = v;
        }
    }
    let end = x.value(1.0).to_vec();
    if end != current {
        jumps.push((1.0, end));
    }
    PiecewiseConstPath::new(1.0, initial, jumps)
}
