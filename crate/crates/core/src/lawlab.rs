//! Monte-Carlo experiments on the law of the triple (path, integrand, noise):
//! equality of laws across noise constructions, the maximal inequality for
//! contraction semigroups, and the analytic fractional-power bound.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prm::{Construction, MarkSpace, PrmRealization};
use crate::rng;
use crate::semigroup::{norm_e, power_decay_constant, GeneratorOp, GeneratorSpec};
use crate::skorokhod::{d0_upper, PiecewiseConstPath};
use crate::stochint::{
    convolve, solve_spde_on, DriftSpec, GridPath, Integrand, IntegrandSpec, SampledDrift,
};

pub use crate::stats::{energy_distance, energy_distance_raw, ks_two_sample, permutation_pvalue};

/// A complete experiment description: noise, generator, integrand, drift,
/// discretization, functional probes, and sampling plan. Serialized as JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub generator: GeneratorSpec,
    pub marks: MarkSpace,
    pub integrand: IntegrandSpec,
    #[serde(default)]
    pub drift: DriftSpec,
    pub horizon: f64,
    pub dt: f64,
    pub p: f64,
    pub alpha: f64,
    pub probes: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub construction: Construction,
    /// Optional extra functional coordinate: the Skorokhod upper bound from
    /// the path to the zero path, at this lattice order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d0_reference_grid: Option<u32>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.compile()?; // surface validation errors at load time
        Ok(s)
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut s = self.clone();
        s.seed = seed;
        s
    }

    pub fn with_construction(&self, construction: Construction) -> Scenario {
        let mut s = self.clone();
        s.construction = construction;
        s
    }

    /// The law-determining part of the scenario: everything except the seed
    /// and the construction variant.
    fn law_key(&self) -> Scenario {
        let mut s = self.clone();
        s.seed = 0;
        s.construction = Construction::Exponential;
        s
    }

    pub fn same_law_as(&self, other: &Scenario) -> bool {
        self.law_key() == other.law_key()
    }

    pub fn compile(&self) -> Result<CompiledScenario> {
        if !(self.horizon > 0.0) {
            return Err(Error::Config("horizon must be positive".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("grid step must be positive".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("need at least one sample".into()));
        }
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(Error::Config(format!("p = {} outside (1, 2]", self.p)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::Config("alpha must be positive".into()));
        }
        if self.alpha * self.p >= 1.0 {
            return Err(Error::Hypothesis(format!(
                "alpha * p = {} must be < 1",
                self.alpha * self.p
            )));
        }
        if self.probes.is_empty()
            || self
                .probes
                .iter()
                .any(|t| !(*t > 0.0 && *t <= self.horizon))
        {
            return Err(Error::Config(
                "probe times must be nonempty and inside (0, horizon]".into(),
            ));
        }
        let op = self.generator.build()?;
        let space = Arc::new(self.marks.clone());
        let integrand = self.integrand.build(space.len())?;
        if integrand.dim() != op.dim() {
            return Err(Error::Config(format!(
                "integrand dimension {} != generator dimension {}",
                integrand.dim(),
                op.dim()
            )));
        }
        let drift = self.drift.build(self.horizon, op.dim())?;
        Ok(CompiledScenario {
            op,
            space,
            integrand,
            drift,
            horizon: self.horizon,
            dt: self.dt,
            p: self.p,
            alpha: self.alpha,
            probes: self.probes.clone(),
            samples: self.samples,
            seed: self.seed,
            construction: self.construction,
            d0_reference_grid: self.d0_reference_grid,
        })
    }
}

/// Stable hex digest of the scenario's canonical JSON form.
pub fn scenario_digest(s: &Scenario) -> String {
    let json = serde_json::to_string(s).expect("scenario serializes");
    let hash = Sha256::digest(json.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// A validated scenario with its built operators.
#[derive(Debug, Clone)]
pub struct CompiledScenario {
    pub op: GeneratorOp,
    pub space: Arc<MarkSpace>,
    pub integrand: Integrand,
    pub drift: SampledDrift,
    pub horizon: f64,
    pub dt: f64,
    pub p: f64,
    pub alpha: f64,
    pub probes: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub construction: Construction,
    pub d0_reference_grid: Option<u32>,
}

impl CompiledScenario {
    /// Names of the per-draw functional coordinates, in sample order.
    pub fn functional_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for t in &self.probes {
            for i in 0..self.op.dim() {
                names.push(format!("u({t})[{i}]"));
            }
        }
        if self.op.is_invertible() {
            names.push("lp_domain_norm".into());
            names.push("sup_extrapolation_norm".into());
        }
        names.push("jump_count".into());
        names.push("xi_p_mass".into());
        if !self.drift.is_zero() {
            names.push("drift_lp_norm".into());
        }
        if self.d0_reference_grid.is_some() {
            names.push("d0_to_zero".into());
        }
        names
    }

    fn simulate(&self, index: u64) -> Result<PrmRealization> {
        let mut r = rng::stream(self.seed, index);
        self.construction
            .simulate_with(&self.space, self.horizon, &mut r)
    }
}

/// Left-endpoint quadrature of `||A^alpha u||^p` over the path's node
/// intervals (the `L^p([0,T]; D(A^alpha))` norm raised to `p`).
fn domain_norm_pth_power(op: &GeneratorOp, alpha: f64, p: f64, u: &GridPath) -> Result<f64> {
    let mut total = 0.0;
    for (i, w) in u.times().windows(2).enumerate() {
        let v = op.apply_power(alpha, &u.values()[i])?;
        total += norm_e(&v).powf(p) * (w[1] - w[0]);
    }
    Ok(total)
}

fn sup_extrapolation_norm(op: &GeneratorOp, u: &GridPath) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for v in u.values() {
        sup = sup.max(norm_e(&op.apply_power(-1.0, v)?));
    }
    Ok(sup)
}

/// Simulate draw `index` of the scenario and evaluate every law functional:
/// path marginals at the probe times, the fractional-domain path norm, the
/// extrapolation sup, the jump count, and the integrand's p-mass.
pub fn sample_triple_functionals(s: &CompiledScenario, index: u64) -> Result<Vec<f64>> {
    let eta = s.simulate(index)?;
    let u = solve_spde_on(&s.op, &s.drift, &s.integrand, &eta, s.dt, &s.probes)?;
    let mut coords = Vec::new();
    for t in &s.probes {
        let v = u
            .value_at(*t)
            .ok_or_else(|| Error::invalid(format!("probe {t} missing from the node set")))?;
        coords.extend_from_slice(v);
    }
    if s.op.is_invertible() {
        coords.push(domain_norm_pth_power(&s.op, s.alpha, s.p, &u)?.powf(s.p.recip()));
        coords.push(sup_extrapolation_norm(&s.op, &u)?);
    }
    coords.push(eta.total_count() as f64);
    coords.push(s.integrand.p_mass(s.p, s.horizon, &eta, &s.space));
    if !s.drift.is_zero() {
        coords.push(s.drift.lp_norm(s.p));
    }
    if let Some(g) = s.d0_reference_grid {
        let step = u.as_unit_step_path()?;
        let zero = PiecewiseConstPath::constant(1.0, vec![0.0; u.dim()])?;
        coords.push(d0_upper(&step, &zero, g)?.0);
    }
    Ok(coords)
}

/// The whole ensemble of functional vectors, draw-indexed and therefore
/// identical whether generated serially or in parallel.
pub fn ensemble(s: &CompiledScenario) -> Result<Vec<Vec<f64>>> {
    let indices: Vec<u64> = (0..s.samples as u64).collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        indices
            .par_iter()
            .map(|&i| sample_triple_functionals(s, i))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        indices
            .iter()
            .map(|&i| sample_triple_functionals(s, i))
            .collect()
    }
}

/// Options for the law-equality experiment.
#[derive(Debug, Clone, Copy)]
pub struct LawOptions {
    /// Run even when the two scenarios describe different laws.
    pub force: bool,
    pub n_permutations: usize,
}

impl Default for LawOptions {
    fn default() -> Self {
        LawOptions {
            force: false,
            n_permutations: 199,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordinateTest {
    pub name: String,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
}

/// Outcome of a two-ensemble comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub energy_statistic: f64,
    pub permutation_p_value: f64,
    pub n_permutations: usize,
    pub permutation_seed: u64,
    pub coordinates: Vec<CoordinateTest>,
    pub samples_a: usize,
    pub samples_b: usize,
    pub seed_a: u64,
    pub seed_b: u64,
    pub scenario_digest_a: String,
    pub scenario_digest_b: String,
    pub forced: bool,
}

fn combine_seeds(a: u64, b: u64) -> u64 {
    a ^ b.rotate_left(32) ^ 0x9e37_79b9_7f4a_7c15
}

/// Compare the law of the functional triple under two scenarios that share
/// every law parameter but may differ in seed and noise construction.
/// Refuses mismatched laws unless `force` is set (the negative-control path).
pub fn law_equality_experiment(
    scenario_a: &Scenario,
    scenario_b: &Scenario,
    options: LawOptions,
) -> Result<TestReport> {
    if !scenario_a.same_law_as(scenario_b) && !options.force {
        return Err(Error::Config(
            "scenarios differ in law parameters; pass force to run a negative control".into(),
        ));
    }
    let ca = scenario_a.compile()?;
    let cb = scenario_b.compile()?;
    let a = ensemble(&ca)?;
    let b = ensemble(&cb)?;
    let perm_seed = combine_seeds(scenario_a.seed, scenario_b.seed);
    let (p, stat) = permutation_pvalue(&a, &b, options.n_permutations, perm_seed)?;

    // permutation_pvalue has already rejected dimension mismatches, so the
    // two ensembles share one coordinate layout here
    let names = ca.functional_names();
    let mut coordinates = Vec::with_capacity(names.len());
    for (k, name) in names.iter().enumerate() {
        let xs: Vec<f64> = a.iter().map(|v| v[k]).collect();
        let ys: Vec<f64> = b.iter().map(|v| v[k]).collect();
        let (d, kp) = ks_two_sample(&xs, &ys)?;
        coordinates.push(CoordinateTest {
            name: name.clone(),
            ks_statistic: d,
            ks_p_value: kp,
        });
    }

    Ok(TestReport {
        energy_statistic: stat,
        permutation_p_value: p,
        n_permutations: options.n_permutations,
        permutation_seed: perm_seed,
        coordinates,
        samples_a: a.len(),
        samples_b: b.len(),
        seed_a: scenario_a.seed,
        seed_b: scenario_b.seed,
        scenario_digest_a: scenario_digest(scenario_a),
        scenario_digest_b: scenario_digest(scenario_b),
        forced: options.force,
    })
}

/// Result of the maximal-inequality measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaximalRatioReport {
    /// `E sup ||u||^q' / E (int int ||xi||^p)^{q'/p}`; 0 when degenerate.
    pub ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub q_prime: f64,
    pub samples: usize,
    /// Set when the integrand mass vanishes (0/0 guarded to 0).
    pub degenerate: bool,
}

/// Monte-Carlo estimate of the maximal-inequality ratio
/// `E sup_{t} ||u(t)||^{q'} / E (int_0^T int_Z ||xi||^p dnu ds)^{q'/p}`
/// for the contraction semigroup case.
pub fn maximal_ratio_experiment(scenario: &Scenario, q_prime: f64) -> Result<MaximalRatioReport> {
    let s = scenario.compile()?;
    if s.op.min_eigenvalue() < 0.0 {
        return Err(Error::Hypothesis(
            "maximal inequality requires a contraction semigroup".into(),
        ));
    }
    if !(q_prime > 0.0 && q_prime <= s.p) {
        return Err(Error::Hypothesis(format!(
            "q' = {q_prime} outside (0, p = {}]",
            s.p
        )));
    }
    let per_draw = |i: u64| -> Result<(f64, f64)> {
        let eta = s.simulate(i)?;
        let u = convolve(&s.op, &s.integrand, &eta, s.dt)?;
        let sup = u.values().iter().map(|v| norm_e(v)).fold(0.0, f64::max);
        let mass = s.integrand.p_mass(s.p, s.horizon, &eta, &s.space);
        Ok((sup.powf(q_prime), mass.powf(q_prime / s.p)))
    };
    let indices: Vec<u64> = (0..s.samples as u64).collect();
    #[cfg(feature = "parallel")]
    let draws: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        indices.par_iter().map(|&i| per_draw(i)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let draws: Vec<(f64, f64)> = indices.iter().map(|&i| per_draw(i)).collect::<Result<_>>()?;

    let n = draws.len() as f64;
    let lhs = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let rhs = draws.iter().map(|d| d.1).sum::<f64>() / n;
    let degenerate = rhs == 0.0;
    Ok(MaximalRatioReport {
        ratio: if degenerate { 0.0 } else { lhs / rhs },
        lhs,
        rhs,
        q_prime,
        samples: s.samples,
        degenerate,
    })
}

/// Result of the analytic fractional-power bound measurement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticBoundReport {
    /// `E ||A^alpha u||_{L^p(0,T;E)}^p`
    pub lhs: f64,
    /// `C_{alpha,p} * E int int ||xi||^p dnu ds`
    pub rhs: f64,
    pub ratio: f64,
    /// `C_{alpha,p} = (alpha/e)^{alpha p} T^{1 - alpha p} / (1 - alpha p)`
    pub constant: f64,
    pub samples: usize,
}

/// Monte-Carlo check of
/// `E ||A^alpha u||_{L^p}^p <= C_{alpha,p} E int int ||xi||^p dnu ds`
/// with the sharp symmetric-generator constant.
pub fn analytic_bound_experiment(scenario: &Scenario) -> Result<AnalyticBoundReport> {
    let s = scenario.compile()?;
    if !s.op.is_invertible() {
        return Err(Error::Singular(
            "analytic bound experiment requires an invertible generator".into(),
        ));
    }
    let ap = s.alpha * s.p;
    let constant = power_decay_constant(s.alpha).powf(s.p) * s.horizon.powf(1.0 - ap) / (1.0 - ap);

    let per_draw = |i: u64| -> Result<(f64, f64)> {
        let eta = s.simulate(i)?;
        let u = convolve(&s.op, &s.integrand, &eta, s.dt)?;
        let lhs = domain_norm_pth_power(&s.op, s.alpha, s.p, &u)?;
        let mass = s.integrand.p_mass(s.p, s.horizon, &eta, &s.space);
        Ok((lhs, mass))
    };
    let indices: Vec<u64> = (0..s.samples as u64).collect();
    #[cfg(feature = "parallel")]
    let draws: Vec<(f64, f64)> = {
        use rayon::prelude::*;
        indices.par_iter().map(|&i| per_draw(i)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let draws: Vec<(f64, f64)> = indices.iter().map(|&i| per_draw(i)).collect::<Result<_>>()?;

    let n = draws.len() as f64;
    let lhs = draws.iter().map(|d| d.0).sum::<f64>() / n;
    let rhs = constant * draws.iter().map(|d| d.1).sum::<f64>() / n;
    Ok(AnalyticBoundReport {
        lhs,
        rhs,
        ratio: if rhs == 0.0 { 0.0 } else { lhs / rhs },
        constant,
        samples: s.samples,
    })
}
