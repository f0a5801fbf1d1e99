//! Browser bindings for the interactive demo page. Each export takes a JSON
//! parameter string and returns a JSON result string, so the page needs no
//! generated TypeScript types.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use levyconv::lawlab::Scenario;
use levyconv::prm::{Construction, MarkSpace};
use levyconv::projections::dyadic_project;
use levyconv::semigroup::GeneratorSpec;
use levyconv::skorokhod::{d0_upper, sup_distance, PiecewiseConstPath};
use levyconv::stochint::{solve_spde, DriftSpec, IntegrandSpec};

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(err)
}

#[derive(Deserialize)]
struct ConvolutionParams {
    mu: Vec<f64>,
    weights: Vec<f64>,
    base: f64,
    slope: f64,
    direction: Vec<f64>,
    horizon: f64,
    dt: f64,
    seed: u64,
    construction: String,
    #[serde(default)]
    drift: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct PathOut {
    times: Vec<f64>,
    /// one series per state dimension
    series: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct ConvolutionOut {
    path: PathOut,
    atoms: Vec<(f64, usize)>,
    marks: Vec<String>,
}

fn simulate_convolution_impl(params: &str) -> Result<String, String> {
    let p: ConvolutionParams = serde_json::from_str(params).map_err(err)?;
    let construction = match p.construction.as_str() {
        "binomial" => Construction::Binomial,
        _ => Construction::Exponential,
    };
    let scenario = Scenario {
        generator: GeneratorSpec::Diagonal { mu: p.mu },
        marks: MarkSpace::from_weights(p.weights).map_err(err)?,
        integrand: IntegrandSpec::JumpCount {
            base: p.base,
            slope: p.slope,
            cap: None,
            mark_weights: None,
            direction: p.direction,
        },
        drift: match p.drift {
            Some(value) => DriftSpec::Constant { value },
            None => DriftSpec::Zero,
        },
        horizon: p.horizon,
        dt: p.dt,
        p: 2.0,
        alpha: 0.4,
        probes: vec![p.horizon],
        samples: 1,
        seed: p.seed,
        construction,
        d0_reference_grid: None,
    };
    let cs = scenario.compile().map_err(err)?;
    let mut rng = levyconv::rng::stream(cs.seed, 0);
    let eta = construction
        .simulate_with(&cs.space, cs.horizon, &mut rng)
        .map_err(err)?;
    let u = solve_spde(&cs.op, &cs.drift, &cs.integrand, &eta, cs.dt).map_err(err)?;
    let dim = u.dim();
    let series = (0..dim)
        .map(|k| u.values().iter().map(|v| v[k]).collect())
        .collect();
    to_json(&ConvolutionOut {
        path: PathOut {
            times: u.times().to_vec(),
            series,
        },
        atoms: eta.atoms().to_vec(),
        marks: cs.space.marks.clone(),
    })
}

fn random_step_path(seed: u64, jumps: usize) -> PiecewiseConstPath {
    use rand::Rng;
    let mut rng = levyconv::rng::stream(seed, 0);
    let jumps = jumps.clamp(1, 12);
    let mut slots: Vec<u32> = (1..64).collect();
    for i in (1..slots.len()).rev() {
        let j = rng.gen_range(0..=i);
        slots.swap(i, j);
    }
    let mut picked: Vec<u32> = Vec::new();
    for s in slots {
        if picked.iter().all(|t| t.abs_diff(s) >= 4) {
            picked.push(s);
            if picked.len() == jumps {
                break;
            }
        }
    }
    picked.sort_unstable();
    let mut value = rng.gen::<f64>() * 2.0 - 1.0;
    let initial = vec![value];
    let jump_list = picked
        .iter()
        .map(|&k| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            value += sign * (0.3 + rng.gen::<f64>() * 0.7);
            (k as f64 / 64.0, vec![value])
        })
        .collect();
    PiecewiseConstPath::new(1.0, initial, jump_list).expect("generated path is valid")
}

fn step_path_out(p: &PiecewiseConstPath) -> PathOut {
    let mut times = vec![0.0];
    let mut series = vec![p.initial()[0]];
    for (t, v) in p.jumps() {
        times.push(*t);
        series.push(v[0]);
    }
    PathOut {
        times,
        series: vec![series],
    }
}

#[derive(Deserialize)]
struct ProjectionParams {
    seed: u64,
    jumps: usize,
    order: u32,
}

#[derive(Serialize)]
struct ProjectionOut {
    original: PathOut,
    projected: PathOut,
    d0_bound: f64,
}

fn dyadic_projection_demo_impl(params: &str) -> Result<String, String> {
    let p: ProjectionParams = serde_json::from_str(params).map_err(err)?;
    let order = p.order.min(8);
    let x = random_step_path(p.seed, p.jumps);
    let projected = dyadic_project(order, &x).map_err(err)?;
    let g = (order + 3).min(levyconv::skorokhod::MAX_GRID_ORDER);
    let (bound_fwd, _) = d0_upper(&x, &projected, g).map_err(err)?;
    let (bound_rev, _) = d0_upper(&projected, &x, g).map_err(err)?;
    to_json(&ProjectionOut {
        original: step_path_out(&x),
        projected: step_path_out(&projected),
        d0_bound: bound_fwd.min(bound_rev),
    })
}

#[derive(Deserialize)]
struct DistanceParams {
    seed_a: u64,
    jumps_a: usize,
    seed_b: u64,
    jumps_b: usize,
    grid: u32,
}

#[derive(Serialize)]
struct DistanceOut {
    a: PathOut,
    b: PathOut,
    bound: f64,
    sup_distance: f64,
    witness: Vec<(f64, f64)>,
}

fn skorokhod_distance_demo_impl(params: &str) -> Result<String, String> {
    let p: DistanceParams = serde_json::from_str(params).map_err(err)?;
    let a = random_step_path(p.seed_a, p.jumps_a);
    let b = random_step_path(p.seed_b, p.jumps_b);
    let g = p.grid.clamp(1, levyconv::skorokhod::MAX_GRID_ORDER);
    let (bound, witness) = d0_upper(&a, &b, g).map_err(err)?;
    to_json(&DistanceOut {
        a: step_path_out(&a),
        b: step_path_out(&b),
        bound,
        sup_distance: sup_distance(&a, &b).map_err(err)?,
        witness: witness.nodes().to_vec(),
    })
}


/// Simulate one draw of the jump noise and its stochastic convolution.
#[wasm_bindgen]
pub fn simulate_convolution(params: &str) -> Result<String, JsValue> {
    simulate_convolution_impl(params).map_err(|e| JsValue::from_str(&e))
}

/// A random cadlag step path against its order-n dyadic projection, with a
/// certified Skorokhod-distance upper bound between them.
#[wasm_bindgen]
pub fn dyadic_projection_demo(params: &str) -> Result<String, JsValue> {
    dyadic_projection_demo_impl(params).map_err(|e| JsValue::from_str(&e))
}

/// Skorokhod-distance upper bound between two random step paths, with the
/// optimal lattice time change as a witness.
#[wasm_bindgen]
pub fn skorokhod_distance_demo(params: &str) -> Result<String, JsValue> {
    skorokhod_distance_demo_impl(params).map_err(|e| JsValue::from_str(&e))
}
