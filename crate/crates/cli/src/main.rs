//! Batch front end: scenario loading, subcommand dispatch, deterministic
//! report emission. Identical inputs and seeds produce byte-identical
//! outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use levyconv::error::Error;
use levyconv::io;
use levyconv::lawlab::{
    analytic_bound_experiment, law_equality_experiment, maximal_ratio_experiment,
    scenario_digest, LawOptions, Scenario,
};
use levyconv::prm::Construction;
use levyconv::projections;
use levyconv::skorokhod::{d0_symmetrized, d0_upper};
use levyconv::stochint::solve_spde;

/// Default output directory when --out is not given.
const OUT_ENV: &str = "LEVYCONV_OUT";

#[derive(Parser)]
#[command(
    name = "levyconv",
    about = "Simulate compensated-Poisson stochastic convolutions and test law equality",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Output directory (default: $LEVYCONV_OUT, then the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace the scenario's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the scenario's sample count
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw Poisson-random-measure realizations and write them as CSV
    Simulate {
        scenario: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Solve the scenario's equation for one draw and write the path CSV
    Convolve {
        scenario: PathBuf,
        /// Draw index within the seed stream
        #[arg(long, default_value_t = 0)]
        draw: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Project step paths (Haar, shifted Haar, or dyadic)
    Project {
        /// Step-path CSV (columns path,t,v1,...,vd)
        input: PathBuf,
        /// haar | shifted | dyadic
        #[arg(long)]
        kind: String,
        /// Projection order n
        #[arg(long)]
        order: u32,
        /// Horizon the input paths live on (projection rescales to [0,1])
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pairwise Skorokhod-distance upper bounds between step paths
    Distance {
        /// Step-path CSV (columns path,t,v1,...,vd)
        input: PathBuf,
        /// Dyadic lattice order for the time-change search
        #[arg(long, default_value_t = 6)]
        grid: u32,
        /// Horizon the input paths live on (the metric rescales to [0,1])
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Also export the witness time change for one pair, as "idA,idB"
        #[arg(long)]
        witness: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-ensemble law-equality experiment
    Lawtest {
        /// Either one scenario (the partner flips the construction) or
        /// a JSON object {"a": scenario, "b": scenario}
        scenario: PathBuf,
        /// Run even when the scenarios disagree in law parameters
        #[arg(long)]
        force: bool,
        #[arg(long, default_value_t = 199)]
        permutations: usize,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Measure the maximal-inequality ratio and the analytic bound
    VerifyBounds {
        scenario: PathBuf,
        /// Exponent q' for the maximal inequality (default: the scenario's p)
        #[arg(long)]
        q_prime: Option<f64>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

fn out_dir(opt: &Option<PathBuf>) -> PathBuf {
    opt.clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn load_scenario(path: &Path, common: &CommonOpts) -> Result<Scenario, Error> {
    let text = fs::read_to_string(path)?;
    let mut s = Scenario::from_json(&text)?;
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    if let Some(samples) = common.samples {
        s.samples = samples;
    }
    s.compile()?;
    Ok(s)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

#[derive(Serialize)]
struct RunMeta {
    scenario_digest: String,
    resolved_seed: u64,
    samples: usize,
    construction: Construction,
}

impl RunMeta {
    fn of(s: &Scenario) -> Self {
        RunMeta {
            scenario_digest: scenario_digest(s),
            resolved_seed: s.seed,
            samples: s.samples,
            construction: s.construction,
        }
    }
}

fn run_simulate(scenario: &Path, common: &CommonOpts) -> Result<(), Error> {
    let s = load_scenario(scenario, common)?;
    let cs = s.compile()?;
    let dir = out_dir(&common.out);
    let mut files = Vec::new();
    let mut total_atoms = 0u64;
    for i in 0..s.samples as u64 {
        let mut r = levyconv::rng::stream(s.seed, i);
        let eta = s.construction.simulate_with(&cs.space, s.horizon, &mut r)?;
        total_atoms += eta.total_count();
        let name = format!("realization-{i:04}.csv");
        write(&dir, &name, &io::realization_to_csv(&eta))?;
        files.push(name);
    }
    #[derive(Serialize)]
    struct Report {
        meta: RunMeta,
        files: Vec<String>,
        total_atoms: u64,
    }
    let report = Report {
        meta: RunMeta::of(&s),
        files,
        total_atoms,
    };
    let path = write(&dir, "simulate-report.json", &pretty(&report)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_convolve(scenario: &Path, draw: u64, common: &CommonOpts) -> Result<(), Error> {
    let s = load_scenario(scenario, common)?;
    let cs = s.compile()?;
    let mut r = levyconv::rng::stream(s.seed, draw);
    let eta = s.construction.simulate_with(&cs.space, s.horizon, &mut r)?;
    let u = solve_spde(&cs.op, &cs.drift, &cs.integrand, &eta, s.dt)?;
    let dir = out_dir(&common.out);
    write(&dir, "path.csv", &io::path_to_csv(&u))?;
    write(&dir, "atoms.csv", &io::realization_to_csv(&eta))?;
    #[derive(Serialize)]
    struct Report {
        meta: RunMeta,
        draw: u64,
        nodes: usize,
        atoms: u64,
    }
    let report = Report {
        meta: RunMeta::of(&s),
        draw,
        nodes: u.len(),
        atoms: eta.total_count(),
    };
    let path = write(&dir, "convolve-report.json", &pretty(&report)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_project(
    input: &Path,
    kind: &str,
    order: u32,
    horizon: f64,
    out: &Option<PathBuf>,
) -> Result<(), Error> {
    let text = fs::read_to_string(input)?;
    let paths = io::read_step_paths(&text, Some(horizon))?;
    let dir = out_dir(out);
    let mut rows = String::from("path,t");
    let d = paths[0].1.dim();
    for i in 1..=d {
        rows.push_str(&format!(",v{i}"));
    }
    rows.push('\n');
    match kind {
        "dyadic" => {
            for (id, p) in &paths {
                let projected = projections::dyadic_project(order, &p.rescaled_to_unit())?;
                append_step_path(&mut rows, id, &projected);
            }
        }
        "haar" | "shifted" => {
            let m = (order + 4).max(8);
            for (id, p) in &paths {
                let unit = p.rescaled_to_unit();
                let f = projections::SampledFunction::from_fn(m, |t| unit.value(t).to_vec())?;
                let projected = if kind == "haar" {
                    projections::haar_project(order, &f)?
                } else {
                    projections::shifted_haar_project(order, &f)?
                };
                append_sampled(&mut rows, id, &projected);
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown projection kind {other:?} (expected haar, shifted, or dyadic)"
            )))
        }
    }
    let path = write(&dir, &format!("projected-{kind}-{order}.csv"), &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn append_step_path(rows: &mut String, id: &str, p: &levyconv::skorokhod::PiecewiseConstPath) {
    let mut emit = |t: f64, v: &[f64]| {
        rows.push_str(id);
        rows.push(',');
        rows.push_str(&io::format_float(t));
        for x in v {
            rows.push(',');
            rows.push_str(&io::format_float(*x));
        }
        rows.push('\n');
    };
    emit(0.0, p.initial());
    for (t, v) in p.jumps() {
        emit(*t, v);
    }
}

fn append_sampled(rows: &mut String, id: &str, f: &projections::SampledFunction) {
    let cells = f.blocks().len() as f64;
    for (i, b) in f.blocks().iter().enumerate() {
        rows.push_str(id);
        rows.push(',');
        rows.push_str(&io::format_float(i as f64 / cells));
        for x in b {
            rows.push(',');
            rows.push_str(&io::format_float(*x));
        }
        rows.push('\n');
    }
}

fn run_distance(
    input: &Path,
    grid: u32,
    horizon: f64,
    witness: &Option<String>,
    out: &Option<PathBuf>,
) -> Result<(), Error> {
    let text = fs::read_to_string(input)?;
    let paths = io::read_step_paths(&text, Some(horizon))?;
    let unit: Vec<(String, levyconv::skorokhod::PiecewiseConstPath)> = paths
        .iter()
        .map(|(id, p)| (id.clone(), p.rescaled_to_unit()))
        .collect();
    let n = unit.len();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = d0_symmetrized(&unit[i].1, &unit[j].1, grid)?;
            matrix[i][j] = dij;
            matrix[j][i] = dij;
        }
    }
    let labels: Vec<String> = unit.iter().map(|(id, _)| id.clone()).collect();
    let dir = out_dir(out);
    let path = write(&dir, "distance-matrix.csv", &io::matrix_to_csv(&labels, &matrix))?;
    println!("wrote {} (upper bounds on d0)", path.display());

    if let Some(pair) = witness {
        let (ia, ib) = pair
            .split_once(',')
            .ok_or_else(|| Error::Config("witness pair must be \"idA,idB\"".into()))?;
        let a = labels
            .iter()
            .position(|l| l == ia)
            .ok_or_else(|| Error::Config(format!("unknown path id {ia:?}")))?;
        let b = labels
            .iter()
            .position(|l| l == ib)
            .ok_or_else(|| Error::Config(format!("unknown path id {ib:?}")))?;
        let (bound, lambda) = d0_upper(&unit[a].1, &unit[b].1, grid)?;
        let mut csv = String::from("t,lambda\n");
        for (t, l) in lambda.nodes() {
            csv.push_str(&io::format_float(*t));
            csv.push(',');
            csv.push_str(&io::format_float(*l));
            csv.push('\n');
        }
        let wpath = write(&dir, &format!("witness-{ia}-{ib}.csv"), &csv)?;
        println!("wrote {} (bound {})", wpath.display(), bound);
    }
    Ok(())
}

fn run_lawtest(
    scenario: &Path,
    force: bool,
    permutations: usize,
    common: &CommonOpts,
) -> Result<(), Error> {
    let text = fs::read_to_string(scenario)?;
    #[derive(serde::Deserialize)]
    struct Pair {
        a: Scenario,
        b: Scenario,
    }
    let (mut a, mut b) = match serde_json::from_str::<Pair>(&text) {
        Ok(pair) => (pair.a, pair.b),
        Err(_) => {
            let a = Scenario::from_json(&text)?;
            // derived partner: flipped construction, decorrelated seed
            let mut b = a.with_construction(match a.construction {
                Construction::Exponential => Construction::Binomial,
                Construction::Binomial => Construction::Exponential,
            });
            b.seed = a.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
            (a, b)
        }
    };
    if let Some(seed) = common.seed {
        a.seed = seed;
        b.seed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
    }
    if let Some(samples) = common.samples {
        a.samples = samples;
        b.samples = samples;
    }
    let report = law_equality_experiment(
        &a,
        &b,
        LawOptions {
            force,
            n_permutations: permutations,
        },
    )?;
    let dir = out_dir(&common.out);
    write(&dir, "lawtest-report.json", &pretty(&report)?)?;
    let mut csv = String::from("coordinate,ks_statistic,ks_p_value\n");
    for c in &report.coordinates {
        csv.push_str(&format!(
            "{},{},{}\n",
            c.name,
            io::format_float(c.ks_statistic),
            io::format_float(c.ks_p_value)
        ));
    }
    let path = write(&dir, "lawtest-coordinates.csv", &csv)?;
    println!(
        "wrote {} (energy statistic {}, permutation p = {})",
        path.display(),
        report.energy_statistic,
        report.permutation_p_value
    );
    Ok(())
}

fn run_verify_bounds(
    scenario: &Path,
    q_prime: Option<f64>,
    common: &CommonOpts,
) -> Result<(), Error> {
    let s = load_scenario(scenario, common)?;
    let q = q_prime.unwrap_or(s.p);
    let maximal = maximal_ratio_experiment(&s, q)?;
    let analytic = analytic_bound_experiment(&s)?;
    #[derive(Serialize)]
    struct Report {
        meta: RunMeta,
        maximal: levyconv::lawlab::MaximalRatioReport,
        analytic: levyconv::lawlab::AnalyticBoundReport,
        analytic_bound_holds: bool,
    }
    let report = Report {
        meta: RunMeta::of(&s),
        analytic_bound_holds: analytic.lhs <= analytic.rhs,
        maximal,
        analytic,
    };
    let dir = out_dir(&common.out);
    let path = write(&dir, "bounds-report.json", &pretty(&report)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> Result<String, Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Configuration-stage failures exit 2, runtime failures exit 1.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::Hypothesis(_)
        | Error::Json(_)
        | Error::Resolution { .. }
        | Error::Resource { .. } => 2,
        Error::Singular(_) | Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { scenario, common } => run_simulate(scenario, common),
        Command::Convolve {
            scenario,
            draw,
            common,
        } => run_convolve(scenario, *draw, common),
        Command::Project {
            input,
            kind,
            order,
            horizon,
            out,
        } => run_project(input, kind, *order, *horizon, out),
        Command::Distance {
            input,
            grid,
            horizon,
            witness,
            out,
        } => run_distance(input, *grid, *horizon, witness, out),
        Command::Lawtest {
            scenario,
            force,
            permutations,
            common,
        } => run_lawtest(scenario, *force, *permutations, common),
        Command::VerifyBounds {
            scenario,
            q_prime,
            common,
        } => run_verify_bounds(scenario, *q_prime, common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
