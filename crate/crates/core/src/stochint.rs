//! Compensated stochastic integrals of step processes, stochastic
//! convolutions against a semigroup, drift convolutions, and the
//! strong-identity residual.
//!
//! Paths are evaluated on an event-augmented grid: a uniform grid of step
//! `dt`, every atom time of the driving realization, and every breakpoint of
//! the integrand. Between consecutive nodes the compensator integral has a
//! closed form per eigenmode, so step integrands are evaluated exactly at the
//! nodes; grid-sampled integrands use cell-midpoint values with the same
//! closed-form weights (O(dt) for Lipschitz integrands).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prm::{MarkSpace, PrmRealization};
use crate::projections::SampledFunction;
use crate::semigroup::GeneratorOp;
use crate::skorokhod::PiecewiseConstPath;

/// A predictable step process: constant per-mark blocks on a partition of
/// `[0, t_n]`, zero afterwards. Block `j` applies on `(t_j, t_{j+1}]` and is
/// fixed at the cell's left endpoint, so the process is adapted by
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepIntegrand {
    /// `[0 = t_0 < t_1 < ... < t_n]`
    partition: Vec<f64>,
    /// `values[j][z]` is the d-vector for mark `z` on `(t_j, t_{j+1}]`
    values: Vec<Vec<Vec<f64>>>,
}

impl StepIntegrand {
    pub fn new(partition: Vec<f64>, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if partition.len() < 2 || partition[0] != 0.0 {
            return Err(Error::invalid("partition must start at 0 and have >= 2 points"));
        }
        if !partition.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid("partition must be strictly increasing"));
        }
        if values.len() != partition.len() - 1 {
            return Err(Error::invalid(format!(
                "expected {} value blocks, got {}",
                partition.len() - 1,
                values.len()
            )));
        }
        let nmarks = values[0].len();
        let dim = values[0].first().map(|v| v.len()).unwrap_or(0);
        if nmarks == 0 || dim == 0 {
            return Err(Error::invalid("value blocks must be nonempty"));
        }
        for cell in &values {
            if cell.len() != nmarks || cell.iter().any(|v| v.len() != dim) {
                return Err(Error::invalid("ragged value blocks"));
            }
        }
        Ok(StepIntegrand { partition, values })
    }

    /// Constant value `c` for every mark on `(0, t_end]`.
    pub fn constant(t_end: f64, nmarks: usize, value: Vec<f64>) -> Result<Self> {
        Self::new(
            vec![0.0, t_end],
            vec![(0..nmarks).map(|_| value.clone()).collect()],
        )
    }

    pub fn dim(&self) -> usize {
        self.values[0][0].len()
    }

    pub fn nmarks(&self) -> usize {
        self.values[0].len()
    }

    pub fn end_time(&self) -> f64 {
        *self.partition.last().unwrap()
    }

    pub fn partition(&self) -> &[f64] {
        &self.partition
    }

    fn cell_of(&self, t: f64) -> Option<usize> {
        if t <= 0.0 || t > self.end_time() {
            return None;
        }
        // cell j covers (partition[j], partition[j+1]]
        Some(self.partition.partition_point(|&b| b < t) - 1)
    }

    pub fn value(&self, t: f64, z: usize) -> &[f64] {
        static ZERO: [f64; 0] = [];
        match self.cell_of(t) {
            Some(j) => &self.values[j][z],
            None => &ZERO,
        }
    }
}

/// Deterministic function of `(t, z)` given by samples: the value at `t` is
/// the sample at the latest grid time `<= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSampled {
    times: Vec<f64>,
    values: Vec<Vec<Vec<f64>>>,
}

impl GridSampled {
    pub fn new(times: Vec<f64>, values: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid("need equally many sample times and blocks"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid("sample times must be strictly increasing"));
        }
        let nmarks = values[0].len();
        let dim = values[0].first().map(|v| v.len()).unwrap_or(0);
        if nmarks == 0 || dim == 0 {
            return Err(Error::invalid("sample blocks must be nonempty"));
        }
        for b in &values {
            if b.len() != nmarks || b.iter().any(|v| v.len() != dim) {
                return Err(Error::invalid("ragged sample blocks"));
            }
        }
        Ok(GridSampled { times, values })
    }

    fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn value(&self, t: f64, z: usize) -> &[f64] {
        &self.values[self.index_at(t)][z]
    }
}

/// `xi(t, z) = (base + slope * min(N(t-), cap)) * mark_weight(z) * direction`
/// where `N(t-)` counts the realization's atoms strictly before `t`. A
/// predictable functional of the noise's own past.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpCountIntegrand {
    pub base: f64,
    pub slope: f64,
    #[serde(default)]
    pub cap: Option<u64>,
    pub mark_weights: Vec<f64>,
    pub direction: Vec<f64>,
}

impl JumpCountIntegrand {
    fn factor(&self, t: f64, eta: &PrmRealization) -> f64 {
        let mut n = eta.atoms_before(t).len() as u64;
        if let Some(cap) = self.cap {
            n = n.min(cap);
        }
        self.base + self.slope * n as f64
    }
}

/// The integrand families supported by the convolution engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrand {
    Step(StepIntegrand),
    Grid(GridSampled),
    JumpCount(JumpCountIntegrand),
}

impl Integrand {
    pub fn dim(&self) -> usize {
        match self {
            Integrand::Step(s) => s.dim(),
            Integrand::Grid(g) => g.values[0][0].len(),
            Integrand::JumpCount(j) => j.direction.len(),
        }
    }

    pub fn nmarks(&self) -> usize {
        match self {
            Integrand::Step(s) => s.nmarks(),
            Integrand::Grid(g) => g.values[0].len(),
            Integrand::JumpCount(j) => j.mark_weights.len(),
        }
    }

    /// `xi(t, z)` for the given realization (only the jump-count family
    /// actually reads the realization, and only its strict past).
    pub fn value(&self, t: f64, z: usize, eta: &PrmRealization) -> Vec<f64> {
        match self {
            Integrand::Step(s) => s.value(t, z).to_vec(),
            Integrand::Grid(g) => g.value(t, z).to_vec(),
            Integrand::JumpCount(j) => {
                let f = j.factor(t, eta) * j.mark_weights[z];
                j.direction.iter().map(|d| d * f).collect()
            }
        }
    }

    /// `sum_z xi(t, z) nu(z)`, the compensator density.
    pub fn mark_average(&self, t: f64, eta: &PrmRealization, space: &MarkSpace) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (z, w) in space.weights.iter().enumerate() {
            let v = self.value(t, z, eta);
            for (o, x) in out.iter_mut().zip(&v) {
                *o += w * x;
            }
        }
        out
    }

    /// Times at which the integrand may change value; between consecutive
    /// breakpoints it is constant.
    pub fn breakpoints(&self, horizon: f64, eta: &PrmRealization) -> Vec<f64> {
        let mut pts = match self {
            Integrand::Step(s) => s.partition.clone(),
            Integrand::Grid(g) => g.times.clone(),
            Integrand::JumpCount(_) => eta.atoms().iter().map(|&(t, _)| t).collect(),
        };
        pts.retain(|&t| t > 0.0 && t < horizon);
        pts
    }

    /// Exact `int_0^T int_Z ||xi(t,z)||^p nu(dz) dt`, using the fact that
    /// every supported integrand is constant between breakpoints.
    pub fn p_mass(&self, p: f64, horizon: f64, eta: &PrmRealization, space: &MarkSpace) -> f64 {
        let mut pts = self.breakpoints(horizon, eta);
        pts.push(0.0);
        pts.push(horizon);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        let mut total = 0.0;
        for w in pts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let mut density = 0.0;
            for (z, nu) in space.weights.iter().enumerate() {
                let v = self.value(mid, z, eta);
                density += nu * crate::semigroup::norm_e(&v).powf(p);
            }
            total += density * (w[1] - w[0]);
        }
        total
    }

    pub fn scaled(&self, c: f64) -> Integrand {
        match self {
            Integrand::Step(s) => Integrand::Step(StepIntegrand {
                partition: s.partition.clone(),
                values: s
                    .values
                    .iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|v| v.iter().map(|x| c * x).collect())
                            .collect()
                    })
                    .collect(),
            }),
            Integrand::Grid(g) => Integrand::Grid(GridSampled {
                times: g.times.clone(),
                values: g
                    .values
                    .iter()
                    .map(|cell| {
                        cell.iter()
                            .map(|v| v.iter().map(|x| c * x).collect())
                            .collect()
                    })
                    .collect(),
            }),
            Integrand::JumpCount(j) => Integrand::JumpCount(JumpCountIntegrand {
                base: c * j.base,
                slope: c * j.slope,
                cap: j.cap,
                mark_weights: j.mark_weights.clone(),
                direction: j.direction.clone(),
            }),
        }
    }
}

/// Declarative integrand description, read from JSON. Jump-count integrands
/// may omit `mark_weights`; the mark space fills them with ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum IntegrandSpec {
    Step {
        partition: Vec<f64>,
        values: Vec<Vec<Vec<f64>>>,
    },
    Grid {
        times: Vec<f64>,
        values: Vec<Vec<Vec<f64>>>,
    },
    JumpCount {
        base: f64,
        slope: f64,
        #[serde(default)]
        cap: Option<u64>,
        #[serde(default)]
        mark_weights: Option<Vec<f64>>,
        direction: Vec<f64>,
    },
}

impl IntegrandSpec {
    pub fn build(&self, nmarks: usize) -> Result<Integrand> {
        let built = match self {
            IntegrandSpec::Step { partition, values } => {
                Integrand::Step(StepIntegrand::new(partition.clone(), values.clone())?)
            }
            IntegrandSpec::Grid { times, values } => {
                Integrand::Grid(GridSampled::new(times.clone(), values.clone())?)
            }
            IntegrandSpec::JumpCount {
                base,
                slope,
                cap,
                mark_weights,
                direction,
            } => {
                let weights = mark_weights.clone().unwrap_or_else(|| vec![1.0; nmarks]);
                if direction.is_empty() {
                    return Err(Error::invalid("jump-count direction must be nonempty"));
                }
                Integrand::JumpCount(JumpCountIntegrand {
                    base: *base,
                    slope: *slope,
                    cap: *cap,
                    mark_weights: weights,
                    direction: direction.clone(),
                })
            }
        };
        if built.nmarks() != nmarks {
            return Err(Error::invalid(format!(
                "integrand has {} mark blocks, mark space has {nmarks}",
                built.nmarks()
            )));
        }
        Ok(built)
    }
}

/// A cadlag path sampled on an event-augmented grid. Node values are right
/// limits; every atom time of the driving realization is a node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl GridPath {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::invalid("path must start at node 0"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid("node times must be strictly increasing"));
        }
        if values.len() != times.len() {
            return Err(Error::invalid("one value per node required"));
        }
        let d = values[0].len();
        if d == 0 || values.iter().any(|v| v.len() != d) {
            return Err(Error::invalid("ragged node values"));
        }
        Ok(GridPath { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Value at an exact node time (the node set is the path's resolution).
    pub fn value_at(&self, t: f64) -> Option<&[f64]> {
        self.times
            .binary_search_by(|x| x.partial_cmp(&t).unwrap())
            .ok()
            .map(|i| self.values[i].as_slice())
    }

    /// Step-path view on the unit horizon (node values held constant until
    /// the next node), for Skorokhod-distance work.
    pub fn as_unit_step_path(&self) -> Result<PiecewiseConstPath> {
        let horizon = self.horizon();
        let initial = self.values[0].clone();
        let jumps = self
            .times
            .iter()
            .zip(&self.values)
            .skip(1)
            .map(|(t, v)| (*t / horizon, v.clone()))
            .collect();
        PiecewiseConstPath::new(1.0, initial, jumps)
    }
}

/// Build the event-augmented node set: uniform grid of step `dt` on `[0, T]`
/// plus every atom time and integrand breakpoint.
fn node_set(horizon: f64, dt: Option<f64>, atoms: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut nodes = vec![0.0, horizon];
    if let Some(dt) = dt {
        let mut k = 1u64;
        loop {
            let t = k as f64 * dt;
            if t >= horizon {
                break;
            }
            nodes.push(t);
            k += 1;
        }
    }
    nodes.extend(atoms.iter().copied().filter(|&t| t > 0.0 && t < horizon));
    nodes.extend(extra.iter().copied().filter(|&t| t > 0.0 && t < horizon));
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nodes.dedup();
    nodes
}

/// Shared engine: evolve `du + Au dt = source dt + jumps` along a node set.
/// `source(a, b)` is treated as constant on `(a, b)` (exact when the node set
/// contains every breakpoint); `jump_at(t)` is added at nodes that carry
/// atoms. Everything is computed per eigenmode with closed-form weights.
fn evolve_on_nodes(
    op: &GeneratorOp,
    nodes: &[f64],
    mut source: impl FnMut(f64, f64) -> Vec<f64>,
    mut jump_at: impl FnMut(f64) -> Option<Vec<f64>>,
) -> Result<GridPath> {
    let d = op.dim();
    // Recursion between consecutive nodes:
    //   u(s_{i+1}) = S(h) u(s_i) + phi(A; h) source_mid + jump(s_{i+1})
    // with phi(A; h) = (1 - e^{-mu h}) / mu per eigenmode (h at mu = 0), the
    // integral of the semigroup against a constant source over the interval.
    let mut state = vec![0.0; d];
    let mut values = Vec::with_capacity(nodes.len());
    values.push(state.clone());

    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        let mid = source(a, b);
        if mid.len() != d {
            return Err(Error::invalid("source dimension mismatch"));
        }
        state = op.apply_semigroup(h, &state)?;
        let weighted = op.apply_spectral_map(&mid, |mu| {
            if mu == 0.0 {
                h
            } else {
                (1.0 - (-mu * h).exp()) / mu
            }
        })?;
        for (s, x) in state.iter_mut().zip(&weighted) {
            *s += x;
        }
        if let Some(j) = jump_at(b) {
            if j.len() != d {
                return Err(Error::invalid("jump dimension mismatch"));
            }
            for (s, x) in state.iter_mut().zip(&j) {
                *s += x;
            }
        }
        values.push(state.clone());
    }
    GridPath::new(nodes.to_vec(), values)
}

/// Group atoms by exact node time and sum the integrand's jump values there.
fn jump_table(
    xi: &Integrand,
    eta: &PrmRealization,
    map: impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<(f64, Vec<f64>)> {
    let mut table: Vec<(f64, Vec<f64>)> = Vec::new();
    for &(t, z) in eta.atoms() {
        let v = map(&xi.value(t, z, eta));
        match table.last_mut() {
            Some((lt, acc)) if *lt == t => {
                for (a, x) in acc.iter_mut().zip(&v) {
                    *a += x;
                }
            }
            _ => table.push((t, v)),
        }
    }
    debug_assert!(table.windows(2).all(|w| w[1].0 > w[0].0));
    table
}

fn lookup_jump(table: &[(f64, Vec<f64>)], t: f64) -> Option<Vec<f64>> {
    table
        .binary_search_by(|(tt, _)| tt.partial_cmp(&t).unwrap())
        .ok()
        .map(|i| table[i].1.clone())
}

/// The compensated integral of a step process against the realization:
/// `I(t) = sum_{atoms <= t} xi - int_0^t (sum_z xi nu(z)) ds`, exact at every
/// node (jumps plus piecewise-linear drift).
pub fn step_integral(xi: &StepIntegrand, eta: &PrmRealization) -> Result<GridPath> {
    step_integral_on(xi, eta, &[])
}

/// Same integral, with extra evaluation nodes merged into the node set (the
/// result is exact at every node, so refining the grid only adds samples).
pub fn step_integral_on(
    xi: &StepIntegrand,
    eta: &PrmRealization,
    extra_nodes: &[f64],
) -> Result<GridPath> {
    if xi.end_time() > eta.horizon() + 1e-12 {
        return Err(Error::invalid(format!(
            "integrand partition ends at {} beyond horizon {}",
            xi.end_time(),
            eta.horizon()
        )));
    }
    if xi.nmarks() != eta.space().len() {
        return Err(Error::invalid("integrand mark count does not match the space"));
    }
    let integrand = Integrand::Step(xi.clone());
    let zero_op = GeneratorOp::zero(xi.dim())?;
    let atom_times: Vec<f64> = eta.atoms().iter().map(|&(t, _)| t).collect();
    let mut extra = integrand.breakpoints(eta.horizon(), eta);
    extra.extend_from_slice(extra_nodes);
    let nodes = node_set(eta.horizon(), None, &atom_times, &extra);
    compensated_on_nodes(&zero_op, &integrand, eta, &nodes)
}

fn compensated_on_nodes(
    op: &GeneratorOp,
    xi: &Integrand,
    eta: &PrmRealization,
    nodes: &[f64],
) -> Result<GridPath> {
    let space = eta.space().clone();
    let jumps = jump_table(xi, eta, |v| v.to_vec());
    evolve_on_nodes(
        op,
        nodes,
        |a, b| {
            let mut m = xi.mark_average(0.5 * (a + b), eta, &space);
            for x in m.iter_mut() {
                *x = -*x;
            }
            m
        },
        |t| lookup_jump(&jumps, t),
    )
}

/// The stochastic convolution `u(t) = int_0^t int_Z S(t-s) xi(s,z)
/// eta~(ds,dz)` on the event-augmented grid of step `dt`. Exact at the nodes
/// for step integrands; cell-midpoint compensator quadrature otherwise.
pub fn convolve(
    op: &GeneratorOp,
    xi: &Integrand,
    eta: &PrmRealization,
    dt: f64,
) -> Result<GridPath> {
    if !(dt > 0.0) {
        return Err(Error::invalid("grid step must be positive"));
    }
    if op.dim() != xi.dim() {
        return Err(Error::invalid("integrand and generator dimensions differ"));
    }
    if xi.nmarks() != eta.space().len() {
        return Err(Error::invalid("integrand mark count does not match the space"));
    }
    let atom_times: Vec<f64> = eta.atoms().iter().map(|&(t, _)| t).collect();
    let extra = xi.breakpoints(eta.horizon(), eta);
    let nodes = node_set(eta.horizon(), Some(dt), &atom_times, &extra);
    compensated_on_nodes(op, xi, eta, &nodes)
}

/// `Phi_t` applied to a sampled function on `[0,1] x Z`:
/// `s -> 1_{[0,t)}(s) S(t-s) xi(s)`, evaluated at the cells' left endpoints.
pub fn phi_apply(op: &GeneratorOp, xi: &SampledFunction, t: f64) -> Result<SampledFunction> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("time {t} outside [0, 1]")));
    }
    let d = op.dim();
    let width = xi.block_width();
    if width % d != 0 {
        return Err(Error::invalid(format!(
            "block width {width} is not a multiple of the dimension {d}"
        )));
    }
    let cells = xi.blocks().len();
    let h = (cells as f64).recip();
    let mut out = Vec::with_capacity(cells);
    for (i, block) in xi.blocks().iter().enumerate() {
        let s = i as f64 * h; // left endpoint of cell i
        if s < t {
            let mut b = Vec::with_capacity(width);
            for chunk in block.chunks_exact(d) {
                b.extend(op.apply_semigroup(t - s, chunk)?);
            }
            out.push(b);
        } else {
            out.push(vec![0.0; width]);
        }
    }
    SampledFunction::from_blocks(xi.order(), out)
}

/// A drift path sampled on a grid covering `[0, horizon]`; the value at `t`
/// is the sample at the latest grid time `<= t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledDrift {
    horizon: f64,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl SampledDrift {
    pub fn new(horizon: f64, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::invalid("drift needs equally many times and samples"));
        }
        if times[0] != 0.0 || !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::invalid(
                "drift sample times must start at 0 and increase strictly",
            ));
        }
        if *times.last().unwrap() > horizon {
            return Err(Error::invalid("drift samples exceed the horizon"));
        }
        let d = values[0].len();
        if d == 0 || values.iter().any(|v| v.len() != d) {
            return Err(Error::invalid("ragged drift samples"));
        }
        Ok(SampledDrift {
            horizon,
            times,
            values,
        })
    }

    pub fn zero(horizon: f64, dim: usize) -> Self {
        SampledDrift {
            horizon,
            times: vec![0.0],
            values: vec![vec![0.0; dim]],
        }
    }

    pub fn constant(horizon: f64, value: Vec<f64>) -> Result<Self> {
        Self::new(horizon, vec![0.0], vec![value])
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn value(&self, t: f64) -> &[f64] {
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1);
        &self.values[i]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|x| *x == 0.0))
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.times
            .iter()
            .copied()
            .filter(|&t| t > 0.0 && t < self.horizon)
            .collect()
    }

    /// `L^p([0, T]; E)` norm of the sampled drift (exact for the staircase).
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mut pts = self.times.clone();
        pts.push(self.horizon);
        pts.dedup();
        let mut s = 0.0;
        for w in pts.windows(2) {
            let v = self.value(0.5 * (w[0] + w[1]));
            s += crate::semigroup::norm_e(v).powf(p) * (w[1] - w[0]);
        }
        s.powf(p.recip())
    }
}

/// Declarative drift description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DriftSpec {
    Zero,
    Constant { value: Vec<f64> },
    Samples { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl Default for DriftSpec {
    fn default() -> Self {
        DriftSpec::Zero
    }
}

impl DriftSpec {
    pub fn build(&self, horizon: f64, dim: usize) -> Result<SampledDrift> {
        let b = match self {
            DriftSpec::Zero => SampledDrift::zero(horizon, dim),
            DriftSpec::Constant { value } => SampledDrift::constant(horizon, value.clone())?,
            DriftSpec::Samples { times, values } => {
                SampledDrift::new(horizon, times.clone(), values.clone())?
            }
        };
        if b.dim() != dim {
            return Err(Error::invalid(format!(
                "drift dimension {} does not match state dimension {dim}",
                b.dim()
            )));
        }
        Ok(b)
    }
}

/// Deterministic convolution `v(t) = int_0^t S(t-s) b(s) ds`, evaluated with
/// per-cell constant `b` and closed-form eigenmode weights.
pub fn drift_convolve(op: &GeneratorOp, b: &SampledDrift, dt: f64) -> Result<GridPath> {
    if !(dt > 0.0) {
        return Err(Error::invalid("grid step must be positive"));
    }
    if op.dim() != b.dim() {
        return Err(Error::invalid("drift and generator dimensions differ"));
    }
    let nodes = node_set(b.horizon(), Some(dt), &[], &b.breakpoints());
    drift_on_nodes(op, b, &nodes)
}

fn drift_on_nodes(op: &GeneratorOp, b: &SampledDrift, nodes: &[f64]) -> Result<GridPath> {
    evolve_on_nodes(
        op,
        nodes,
        |x, y| b.value(0.5 * (x + y)).to_vec(),
        |_| None,
    )
}

/// Mild solution of `du + Au dt = b dt + int_Z xi deta~`:
/// drift convolution plus stochastic convolution on one shared node set.
pub fn solve_spde(
    op: &GeneratorOp,
    b: &SampledDrift,
    xi: &Integrand,
    eta: &PrmRealization,
    dt: f64,
) -> Result<GridPath> {
    solve_spde_on(op, b, xi, eta, dt, &[])
}

/// [`solve_spde`] with extra evaluation times merged into the node set, so
/// probe times can be read off exactly.
pub fn solve_spde_on(
    op: &GeneratorOp,
    b: &SampledDrift,
    xi: &Integrand,
    eta: &PrmRealization,
    dt: f64,
    extra_nodes: &[f64],
) -> Result<GridPath> {
    if !(dt > 0.0) {
        return Err(Error::invalid("grid step must be positive"));
    }
    if (b.horizon() - eta.horizon()).abs() > 1e-12 {
        return Err(Error::invalid("drift and realization horizons differ"));
    }
    let atom_times: Vec<f64> = eta.atoms().iter().map(|&(t, _)| t).collect();
    let mut extra = xi.breakpoints(eta.horizon(), eta);
    extra.extend(b.breakpoints());
    extra.extend_from_slice(extra_nodes);
    let nodes = node_set(eta.horizon(), Some(dt), &atom_times, &extra);
    let stochastic = compensated_on_nodes(op, xi, eta, &nodes)?;
    if b.is_zero() {
        return Ok(stochastic);
    }
    let drift = drift_on_nodes(op, b, &nodes)?;
    let values = stochastic
        .values()
        .iter()
        .zip(drift.values())
        .map(|(u, v)| u.iter().zip(v).map(|(a, c)| a + c).collect())
        .collect();
    GridPath::new(nodes, values)
}

/// Max-norm residual of the strong identity
/// `A^{-1} u(t) + int_0^t u(s) ds = I_{A^{-1} xi}(t)`
/// satisfied by the mild solution of `du + Au dt = int_Z xi deta~` (check it
/// by integrating the equation). The time integral is evaluated by the
/// trapezoid rule on the atom-augmented grid, using left limits at jump
/// nodes.
pub fn strong_identity_residual(
    op: &GeneratorOp,
    xi: &Integrand,
    eta: &PrmRealization,
    dt: f64,
) -> Result<f64> {
    if !op.is_invertible() {
        return Err(Error::Singular(
            "strong identity requires an invertible generator".into(),
        ));
    }
    let u = convolve(op, xi, eta, dt)?;
    let nodes = u.times().to_vec();
    let space = eta.space().clone();

    // compensated integral of A^{-1} xi on the same nodes
    let zero_op = GeneratorOp::zero(op.dim())?;
    let jumps = jump_table(xi, eta, |v| op.apply_power(-1.0, v).unwrap());
    let compensated = evolve_on_nodes(
        &zero_op,
        &nodes,
        |a, b| {
            let m = xi.mark_average(0.5 * (a + b), eta, &space);
            let mut m = op.apply_power(-1.0, &m).unwrap();
            for x in m.iter_mut() {
                *x = -*x;
            }
            m
        },
        |t| lookup_jump(&jumps, t),
    )?;

    // raw jump sizes, for recovering left limits of u at atom nodes
    let raw_jumps = jump_table(xi, eta, |v| v.to_vec());

    let d = op.dim();
    let mut integral = vec![0.0; d];
    let mut residual: f64 = 0.0;
    for i in 0..nodes.len() {
        if i > 0 {
            let h = nodes[i] - nodes[i - 1];
            let left_limit: Vec<f64> = match lookup_jump(&raw_jumps, nodes[i]) {
                Some(j) => u.values()[i].iter().zip(&j).map(|(v, x)| v - x).collect(),
                None => u.values()[i].clone(),
            };
            for k in 0..d {
                integral[k] += 0.5 * h * (u.values()[i - 1][k] + left_limit[k]);
            }
        }
        let lhs = op.apply_power(-1.0, &u.values()[i])?;
        let mut err = 0.0;
        for k in 0..d {
            let r = lhs[k] + integral[k] - compensated.values()[i][k];
            err += r * r;
        }
        residual = residual.max(err.sqrt());
    }
    Ok(residual)
}
