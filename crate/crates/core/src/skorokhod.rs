//! Cadlag step paths, piecewise-linear time changes, and certified upper
//! bounds on the Skorokhod metric
//! `d0(x,y) = inf_lambda max(||lambda||_log, sup_t ||x(t) - y(lambda(t))||)`.
//!
//! The bound is computed by dynamic programming over monotone paths on the
//! order-`g` dyadic lattice of both time axes. Any admissible time change
//! bounds the infimum from above, so the returned value is always a valid
//! upper bound and comes with its witness.

use crate::error::{Error, Result};
use crate::semigroup::norm_e;

/// Largest lattice order the DP accepts; `(2^g + 1)^2` table entries.
pub const MAX_GRID_ORDER: u32 = 11;

/// Bound on the lattice span of a single witness segment. Slopes are ratios
/// `b/a` with `a, b <= MAX_EDGE_SPAN`; doubling the lattice order keeps every
/// coarse segment representable (split `2a x 2b` into two `a x b` pieces), so
/// bounds are nonincreasing in `g`.
const MAX_EDGE_SPAN: usize = 16;

/// A right-continuous step path: `value(t)` is `initial` before the first
/// jump time and the latest post-jump value afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstPath {
    horizon: f64,
    initial: Vec<f64>,
    jumps: Vec<(f64, Vec<f64>)>,
}

impl PiecewiseConstPath {
    pub fn new(horizon: f64, initial: Vec<f64>, jumps: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::invalid("horizon must be positive"));
        }
        if initial.is_empty() {
            return Err(Error::invalid("path dimension must be >= 1"));
        }
        let mut prev = 0.0;
        for (t, v) in &jumps {
            if !(*t > prev && *t <= horizon) {
                return Err(Error::invalid(format!(
                    "jump times must be strictly increasing in (0, {horizon}], got {t}"
                )));
            }
            if v.len() != initial.len() {
                return Err(Error::invalid("jump value dimension mismatch"));
            }
            prev = *t;
        }
        Ok(PiecewiseConstPath {
            horizon,
            initial,
            jumps,
        })
    }

    pub fn constant(horizon: f64, value: Vec<f64>) -> Result<Self> {
        Self::new(horizon, value, vec![])
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn jumps(&self) -> &[(f64, Vec<f64>)] {
        &self.jumps
    }

    pub fn jump_times(&self) -> Vec<f64> {
        self.jumps.iter().map(|(t, _)| *t).collect()
    }

    pub fn value(&self, t: f64) -> &[f64] {
        let k = self.jumps.partition_point(|(tau, _)| *tau <= t);
        if k == 0 {
            &self.initial
        } else {
            &self.jumps[k - 1].1
        }
    }

    /// Same path with time rescaled onto `[0,1]`.
    pub fn rescaled_to_unit(&self) -> Self {
        PiecewiseConstPath {
            horizon: 1.0,
            initial: self.initial.clone(),
            jumps: self
                .jumps
                .iter()
                .map(|(t, v)| (*t / self.horizon, v.clone()))
                .collect(),
        }
    }
}

/// A strictly increasing piecewise-linear time change of `[0,1]` onto itself.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChange {
    nodes: Vec<(f64, f64)>,
}

impl TimeChange {
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::invalid("time change needs at least two nodes"));
        }
        let first = nodes[0];
        let last = nodes[nodes.len() - 1];
        if first != (0.0, 0.0) || last != (1.0, 1.0) {
            return Err(Error::invalid(
                "time change must map (0,0) to (1,1) at its endpoints",
            ));
        }
        for w in nodes.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::invalid(
                    "time change nodes must be strictly increasing in both coordinates",
                ));
            }
        }
        Ok(TimeChange { nodes })
    }

    pub fn identity() -> Self {
        TimeChange {
            nodes: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn apply(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        let k = self.nodes.partition_point(|(s, _)| *s <= t);
        let (t0, l0) = self.nodes[k - 1];
        let (t1, l1) = self.nodes[k];
        l0 + (l1 - l0) * (t - t0) / (t1 - t0)
    }

    /// The inverse time change (swap the axes).
    pub fn inverse(&self) -> Self {
        TimeChange {
            nodes: self.nodes.iter().map(|&(a, b)| (b, a)).collect(),
        }
    }
}

/// `sup |log((lambda(t) - lambda(s)) / (t - s))|`. For piecewise-linear
/// time changes every difference quotient is a convex combination of segment
/// slopes, so the maximum over segments attains the sup.
pub fn lambda_log_norm(lambda: &TimeChange) -> f64 {
    lambda
        .nodes
        .windows(2)
        .map(|w| {
            let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            slope.ln().abs()
        })
        .fold(0.0, f64::max)
}

/// `sup_t ||x(t) - y(t)||`, the identity-time-change specialization. Exact
/// for step paths: evaluated on the union of both jump sets.
pub fn sup_distance(x: &PiecewiseConstPath, y: &PiecewiseConstPath) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::invalid("paths have different dimensions"));
    }
    if (x.horizon() - y.horizon()).abs() > 1e-12 {
        return Err(Error::invalid("paths have different horizons"));
    }
    let mut best = diff_norm(x.initial(), y.initial());
    for (t, _) in x.jumps().iter().chain(y.jumps().iter()) {
        best = best.max(diff_norm(x.value(*t), y.value(*t)));
    }
    Ok(best)
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
    norm_e(&d)
}

/// Exact sup of `||x(t) - y(lambda(t))||` over `t in [t0, t1)` for a linear
/// lambda segment mapping `[t0, t1] -> [l0, l1]`. Both paths are piecewise
/// constant, so it suffices to evaluate at the segment start, at x's jump
/// times inside the segment, and at the lambda-preimages of y's jump times.
fn segment_sup(
    x: &PiecewiseConstPath,
    y: &PiecewiseConstPath,
    x_jump_times: &[f64],
    y_jump_times: &[f64],
    t0: f64,
    t1: f64,
    l0: f64,
    l1: f64,
) -> f64 {
    let slope = (l1 - l0) / (t1 - t0);
    let mut sup = diff_norm(x.value(t0), y.value(l0));
    let lo = x_jump_times.partition_point(|&tau| tau <= t0);
    let hi = x_jump_times.partition_point(|&tau| tau < t1);
    for &tau in &x_jump_times[lo..hi] {
        let lt = l0 + slope * (tau - t0);
        sup = sup.max(diff_norm(x.value(tau), y.value(lt)));
    }
    let lo = y_jump_times.partition_point(|&sig| sig <= l0);
    let hi = y_jump_times.partition_point(|&sig| sig < l1);
    for &sig in &y_jump_times[lo..hi] {
        let t = t0 + (sig - l0) / slope;
        // evaluate y exactly at its jump; the preimage may carry float noise
        sup = sup.max(diff_norm(x.value(t), y.value(sig)));
    }
    sup
}

/// Certified upper bound on `d0(x, y)` with its witness time change.
///
/// Minimizes `max(||lambda||_log, sup ||x - y o lambda||)` over piecewise
/// linear time changes whose nodes lie on the order-`g` dyadic lattice of
/// both axes (segment spans up to [`MAX_EDGE_SPAN`] lattice steps), and
/// returns the minimum of the optimum and the identity-witness value
/// [`sup_distance`].
pub fn d0_upper(
    x: &PiecewiseConstPath,
    y: &PiecewiseConstPath,
    g: u32,
) -> Result<(f64, TimeChange)> {
    if g < 1 {
        return Err(Error::invalid("grid order must be >= 1"));
    }
    if g > MAX_GRID_ORDER {
        return Err(Error::Resource {
            requested: g,
            max_feasible: MAX_GRID_ORDER,
        });
    }
    if x.dim() != y.dim() {
        return Err(Error::invalid("paths have different dimensions"));
    }
    if (x.horizon() - 1.0).abs() > 1e-12 || (y.horizon() - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "d0 is defined on the unit horizon; rescale the paths first",
        ));
    }

    let identity_bound = sup_distance(x, y)?;
    if identity_bound == 0.0 {
        return Ok((0.0, TimeChange::identity()));
    }

    let m = 1usize << g;
    let n_nodes = m + 1;
    let span = MAX_EDGE_SPAN.min(m);
    let x_jump_times = x.jump_times();
    let y_jump_times = y.jump_times();

    // |log(b/a)| for every admissible segment shape
    let mut log_cost = vec![0.0f64; (span + 1) * (span + 1)];
    for a in 1..=span {
        for b in 1..=span {
            log_cost[a * (span + 1) + b] = ((b as f64) / (a as f64)).ln().abs();
        }
    }

    let inf = f64::INFINITY;
    let mut cost = vec![inf; n_nodes * n_nodes];
    let mut back: Vec<u32> = vec![u32::MAX; n_nodes * n_nodes];
    cost[0] = 0.0;
    let scale = (m as f64).recip();

    for i in 0..=m {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let dst = i * n_nodes + j;
            let t1 = i as f64 * scale;
            let l1 = j as f64 * scale;
            let mut best = inf;
            let mut best_src = u32::MAX;
            for a in 1..=span.min(i) {
                let t0 = (i - a) as f64 * scale;
                for b in 1..=span.min(j) {
                    let src = (i - a) * n_nodes + (j - b);
                    let base = cost[src].max(log_cost[a * (span + 1) + b]);
                    if base >= best {
                        continue;
                    }
                    let l0 = (j - b) as f64 * scale;
                    let sup = segment_sup(x, y, &x_jump_times, &y_jump_times, t0, t1, l0, l1);
                    let cand = base.max(sup);
                    if cand < best {
                        best = cand;
                        best_src = src as u32;
                    }
                }
            }
            cost[dst] = best;
            back[dst] = best_src;
        }
    }

    // close the sup over [0,1] with the endpoint t = 1 (lambda(1) = 1)
    let end = diff_norm(x.value(1.0), y.value(1.0));
    let dp_bound = cost[n_nodes * n_nodes - 1].max(end);

    if identity_bound <= dp_bound {
        return Ok((identity_bound, TimeChange::identity()));
    }

    // walk the backpointers for the witness
    let mut chain = Vec::new();
    let mut node = n_nodes * n_nodes - 1;
    loop {
        let i = node / n_nodes;
        let j = node % n_nodes;
        chain.push((i as f64 * scale, j as f64 * scale));
        if node == 0 {
            break;
        }
        node = back[node] as usize;
    }
    chain.reverse();
    Ok((dp_bound, TimeChange::new(chain)?))
}

/// Symmetric certified bound: best of both orientations (a time change for
/// one direction inverts to one for the other with equal log norm).
pub fn d0_symmetrized(x: &PiecewiseConstPath, y: &PiecewiseConstPath, g: u32) -> Result<f64> {
    let (a, _) = d0_upper(x, y, g)?;
    let (b, _) = d0_upper(y, x, g)?;
    Ok(a.min(b))
}
