//! Time-homogeneous Poisson random measures on `[0,T] x Z` for a finite mark
//! space: two constructions with the same law, box counts, and compensators.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A finite mark space `(Z, nu)`: named marks with strictly positive weights.
/// Deserialization goes through [`MarkSpace::new`], so the invariants hold for
/// every instance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(try_from = "RawMarkSpace")]
pub struct MarkSpace {
    pub marks: Vec<String>,
    pub weights: Vec<f64>,
    #[serde(skip)]
    total_mass: f64,
}

#[derive(Deserialize)]
struct RawMarkSpace {
    marks: Vec<String>,
    weights: Vec<f64>,
}

impl TryFrom<RawMarkSpace> for MarkSpace {
    type Error = Error;

    fn try_from(raw: RawMarkSpace) -> Result<Self> {
        MarkSpace::new(raw.marks, raw.weights)
    }
}

impl MarkSpace {
    pub fn new(marks: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if marks.is_empty() || marks.len() != weights.len() {
            return Err(Error::invalid(format!(
                "mark space needs equally many marks and weights, got {} and {}",
                marks.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::invalid(
                "every mark weight must be strictly positive and finite",
            ));
        }
        let total_mass = weights.iter().sum();
        Ok(MarkSpace {
            marks,
            weights,
            total_mass,
        })
    }

    /// Convenience constructor with synthetic mark names `z0, z1, ...`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let marks = (0..weights.len()).map(|i| format!("z{i}")).collect();
        Self::new(marks, weights)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    /// nu(Z), the total intensity.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// nu(U) for a subset of mark indices (set semantics: duplicate indices
    /// count once, matching how box counts treat subsets).
    pub fn subset_mass(&self, subset: &[usize]) -> Result<f64> {
        let mut seen = vec![false; self.len()];
        let mut m = 0.0;
        for &z in subset {
            let w = self
                .weights
                .get(z)
                .ok_or_else(|| Error::invalid(format!("mark index {z} out of range")))?;
            if !seen[z] {
                seen[z] = true;
                m += w;
            }
        }
        Ok(m)
    }
}

/// One realized draw of the random measure: an ordered atom list over a mark
/// space. Immutable after construction.
#[derive(Debug, Clone)]
pub struct PrmRealization {
    horizon: f64,
    atoms: Vec<(f64, usize)>,
    space: Arc<MarkSpace>,
}

impl PrmRealization {
    pub fn new(horizon: f64, atoms: Vec<(f64, usize)>, space: Arc<MarkSpace>) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::invalid("horizon must be positive"));
        }
        let mut prev = 0.0;
        for &(t, z) in &atoms {
            if !(t > 0.0 && t <= horizon) {
                return Err(Error::invalid(format!(
                    "atom time {t} outside (0, {horizon}]"
                )));
            }
            if t < prev {
                return Err(Error::invalid("atom times must be nondecreasing"));
            }
            if z >= space.len() {
                return Err(Error::invalid(format!("atom mark index {z} out of range")));
            }
            prev = t;
        }
        Ok(PrmRealization {
            horizon,
            atoms,
            space,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn atoms(&self) -> &[(f64, usize)] {
        &self.atoms
    }

    pub fn space(&self) -> &MarkSpace {
        &self.space
    }

    pub fn space_arc(&self) -> Arc<MarkSpace> {
        Arc::clone(&self.space)
    }

    /// `N(t,U) - N(s,U)`: atoms with time in `(a, b]` and mark in `subset`.
    pub fn count(&self, a: f64, b: f64, subset: &[usize]) -> Result<u64> {
        if !(0.0 <= a && a <= b && b <= self.horizon) {
            return Err(Error::invalid(format!(
                "interval ({a}, {b}] not inside [0, {}]",
                self.horizon
            )));
        }
        for &z in subset {
            if z >= self.space.len() {
                return Err(Error::invalid(format!("mark index {z} out of range")));
            }
        }
        let mut n = 0;
        for &(t, z) in &self.atoms {
            if t > a && t <= b && subset.contains(&z) {
                n += 1;
            }
        }
        Ok(n)
    }

    /// Total number of atoms, `eta((0,T] x Z)`.
    pub fn total_count(&self) -> u64 {
        self.atoms.len() as u64
    }

    /// Atoms with time strictly below `t` (the strict past used by
    /// predictable integrands).
    pub fn atoms_before(&self, t: f64) -> &[(f64, usize)] {
        let end = self.atoms.partition_point(|&(tau, _)| tau < t);
        &self.atoms[..end]
    }
}

/// The compensator `gamma((a,b] x U) = (b - a) * nu(U)`.
pub fn compensator(space: &MarkSpace, a: f64, b: f64, subset: &[usize]) -> Result<f64> {
    if b < a || a < 0.0 {
        return Err(Error::invalid(format!("invalid interval ({a}, {b}]")));
    }
    Ok((b - a) * space.subset_mass(subset)?)
}

fn draw_mark<R: Rng>(space: &MarkSpace, rng: &mut R) -> usize {
    // Inverse-CDF draw over the finite weight vector.
    let u: f64 = rng.gen::<f64>() * space.total_mass();
    let mut acc = 0.0;
    for (z, w) in space.weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return z;
        }
    }
    space.len() - 1
}

fn validate_sim_inputs(space: &MarkSpace, horizon: f64) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    if space.is_empty() || space.total_mass() <= 0.0 {
        return Err(Error::invalid("mark space must have positive total mass"));
    }
    Ok(())
}

/// Construction 1: exponential inter-arrival times at rate `nu(Z)`, marks
/// drawn with probability `nu(z)/nu(Z)`. Deterministic given the seed.
pub fn simulate_prm_exponential(
    space: &Arc<MarkSpace>,
    horizon: f64,
    seed: u64,
) -> Result<PrmRealization> {
    validate_sim_inputs(space, horizon)?;
    let mut rng = rng::stream(seed, 0);
    simulate_exponential_with(space, horizon, &mut rng)
}

pub(crate) fn simulate_exponential_with<R: Rng>(
    space: &Arc<MarkSpace>,
    horizon: f64,
    rng: &mut R,
) -> Result<PrmRealization> {
    let rate = space.total_mass();
    let mut atoms = Vec::new();
    let mut t = 0.0;
    loop {
        let u: f64 = rng.gen::<f64>();
        // Inverse CDF of Exp(rate); 1-u stays in (0,1].
        t += -(1.0 - u).ln() / rate;
        if t > horizon {
            break;
        }
        atoms.push((t, draw_mark(space, rng)));
    }
    PrmRealization::new(horizon, atoms, Arc::clone(space))
}

/// Construction 2 (same law): a Poisson number of atoms, uniform sorted
/// times, independent marks. Deterministic given the seed.
pub fn simulate_prm_binomial(
    space: &Arc<MarkSpace>,
    horizon: f64,
    seed: u64,
) -> Result<PrmRealization> {
    validate_sim_inputs(space, horizon)?;
    let mut rng = rng::stream(seed, 0);
    simulate_binomial_with(space, horizon, &mut rng)
}

pub(crate) fn simulate_binomial_with<R: Rng>(
    space: &Arc<MarkSpace>,
    horizon: f64,
    rng: &mut R,
) -> Result<PrmRealization> {
    let mean = horizon * space.total_mass();
    let poi = Poisson::new(mean).map_err(|e| Error::invalid(format!("bad Poisson mean: {e}")))?;
    let n = poi.sample(rng) as usize;
    let mut times: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            (1.0 - u) * horizon // in (0, horizon]
        })
        .collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let atoms = times
        .into_iter()
        .map(|t| (t, draw_mark(space, rng)))
        .collect();
    PrmRealization::new(horizon, atoms, Arc::clone(space))
}

/// Which of the two constructions to use when a scenario draws its noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Exponential,
    Binomial,
}

impl Construction {
    pub fn simulate_with<R: Rng>(
        self,
        space: &Arc<MarkSpace>,
        horizon: f64,
        rng: &mut R,
    ) -> Result<PrmRealization> {
        validate_sim_inputs(space, horizon)?;
        match self {
            Construction::Exponential => simulate_exponential_with(space, horizon, rng),
            Construction::Binomial => simulate_binomial_with(space, horizon, rng),
        }
    }
}
