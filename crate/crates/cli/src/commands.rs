use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use detdiff::billiard::default_checkpoints;
use detdiff::density::{heuristic_d, omega_approx_d};
use detdiff::report::{write_csv, write_json, Provenance};
use detdiff::{
    build_transition_matrices, closed_form_d, diffusion_spectral, estimate_stats, evolve, gaussian_profile,
    kolmogorov_distance, scan_lambda, simulate_channel, simulate_ensemble, Channel, DiffusionReport,
    EnsembleConfig, Error, Execution, Force, LatticeDensity, Method, Result, Wall,
};
use serde::Serialize;

use crate::input::{parse_list, resolve_partition, solve_system, MapInput};
use crate::{BilliardArgs, DiffusionArgs, EvolveArgs, MethodArg, ModelArg, ScanArgs, SimulateArgs, SolveArgs};

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut out: Box<dyn Write>) -> Result<()> {
    out.flush()?;
    Ok(())
}

fn warn(lines: &[String]) {
    for w in lines {
        eprintln!("warning: {w}");
    }
}

pub fn solve_partition(args: &SolveArgs) -> Result<()> {
    let (solution, canonical) = solve_system(&args.system)?;
    let prov = Provenance::new(&canonical, None);
    #[derive(Serialize)]
    struct Body<'a> {
        solution: &'a detdiff::PartitionSolution,
    }
    let mut out = output(args.out.as_deref())?;
    write_json(&mut out, &prov, &Body { solution: &solution })?;
    finish(out)
}

#[derive(Serialize)]
struct MethodFailure {
    method: &'static str,
    error: String,
}

#[derive(Serialize)]
struct Delta {
    a: &'static str,
    b: &'static str,
    delta: f64,
}

#[derive(Serialize)]
struct DiffusionBody {
    reports: Vec<DiffusionReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    failures: Vec<MethodFailure>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    deltas: Vec<Delta>,
}

fn load_map(words: &[String], system: Option<&PathBuf>) -> Result<(MapInput, Option<detdiff::PartitionSolution>)> {
    let solution = system.map(|p| solve_system(p)).transpose()?.map(|(s, _)| s);
    let map = match (words.is_empty(), &solution) {
        (false, _) => crate::input::parse_map(words)?,
        (true, Some(s)) => MapInput::from_spec(detdiff::MapSpec::Linear {
            lambda: detdiff::surd::Scalar::Number(s.lambda),
        })?,
        (true, None) => return Err(Error::InvalidArgument("--map or --partition-system is required".into())),
    };
    Ok((map, solution))
}

fn run_method(method: Method, args: &DiffusionArgs, input: &MapInput, solution: Option<&detdiff::PartitionSolution>) -> Result<DiffusionReport> {
    match method {
        Method::ClosedForm => Ok(DiffusionReport::new(method, closed_form_d(&input.map)?, 0.0)),
        Method::Spectral => {
            let partition = resolve_partition(&input.map, args.partition.as_deref(), solution)?;
            let mut r = diffusion_spectral(&build_transition_matrices(&input.map, &partition)?)?;
            r.diagnostics.insert("cells".into(), partition.cell_count() as f64);
            Ok(r)
        }
        Method::Heuristic => Ok(DiffusionReport::new(method, heuristic_d(input.linear_slope()?), 0.0)),
        Method::Omega => Ok(DiffusionReport::new(method, omega_approx_d(input.linear_slope()?), 0.0)),
        Method::MonteCarlo => {
            let cfg = EnsembleConfig::new(args.mc.samples, args.mc.steps, args.mc.seed);
            let s = estimate_stats(&simulate_ensemble(&input.map, &cfg)?)?;
            warn(&s.warnings);
            let mut r = DiffusionReport::new(method, s.d_estimate, s.drift);
            r.diagnostics = BTreeMap::from([
                ("stderr".to_string(), s.stderr),
                ("d_naive".to_string(), s.d_naive),
                ("samples".to_string(), s.samples as f64),
                ("aborted".to_string(), s.aborted as f64),
            ]);
            if let Some(ks) = s.ks {
                r.diagnostics.insert("ks".into(), ks);
            }
            Ok(r)
        }
    }
}

pub fn diffusion(args: &DiffusionArgs) -> Result<()> {
    let (input, solution) = load_map(&args.map, args.partition_system.as_ref())?;
    let methods: Vec<Method> = match args.method {
        MethodArg::All => vec![Method::ClosedForm, Method::Spectral, Method::Heuristic, Method::Omega, Method::MonteCarlo],
        m => vec![m.into()],
    };
    let mut body = DiffusionBody { reports: Vec::new(), failures: Vec::new(), deltas: Vec::new() };
    for &m in &methods {
        match run_method(m, args, &input, solution.as_ref()) {
            Ok(r) => body.reports.push(r),
            // A single requested method reports its own failure.
            Err(e) if methods.len() == 1 => return Err(e),
            Err(e) => body.failures.push(MethodFailure { method: m.as_str(), error: e.to_string() }),
        }
    }
    if body.reports.is_empty() {
        return Err(Error::InvalidArgument("no method succeeded for this map".into()));
    }
    for (i, a) in body.reports.iter().enumerate() {
        for b in &body.reports[i + 1..] {
            body.deltas.push(Delta { a: a.method.as_str(), b: b.method.as_str(), delta: a.d - b.d });
        }
    }
    let seed = methods.contains(&Method::MonteCarlo).then_some(args.mc.seed);
    let mut out = output(args.out.as_deref())?;
    write_json(&mut out, &Provenance::new(&input.canonical, seed), &body)?;
    finish(out)
}

pub fn scan(args: &ScanArgs) -> Result<()> {
    let grid = match (&args.lambda_grid, args.from, args.to, args.step) {
        (Some(g), None, None, None) => parse_list(g)?,
        (None, Some(from), Some(to), Some(step)) => {
            if !(step > 0.0 && to >= from) {
                return Err(Error::InvalidArgument(format!("bad grid {from}..{to} step {step}")));
            }
            let count = ((to - from) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| from + i as f64 * step).collect()
        }
        _ => return Err(Error::InvalidArgument("give either --lambda-grid or all of --from, --to, --step".into())),
    };
    let description = serde_json::to_string(&grid)?;
    let rows = scan_lambda(&grid, args.mc.samples, args.mc.steps, args.mc.seed, Execution::default());
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("warning: lambda = {}: {e}", r.lambda);
        }
    }
    let mut out = output(args.out.as_deref())?;
    write_csv(&mut out, &Provenance::new(&description, Some(args.mc.seed)), &rows)?;
    finish(out)
}

#[derive(Serialize)]
struct SimulateRow {
    samples: usize,
    aborted: usize,
    steps: usize,
    mean: f64,
    variance: f64,
    d_estimate: f64,
    stderr: f64,
    d_naive: f64,
    stderr_naive: f64,
    drift: f64,
    ks: Option<f64>,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let input = crate::input::parse_map(&args.map)?;
    let mut cfg = EnsembleConfig::new(args.mc.samples, args.mc.steps, args.mc.seed);
    cfg.dither = !args.no_dither;
    let s = estimate_stats(&simulate_ensemble(&input.map, &cfg)?)?;
    warn(&s.warnings);
    let row = SimulateRow {
        samples: s.samples,
        aborted: s.aborted,
        steps: s.steps,
        mean: s.mean,
        variance: s.variance,
        d_estimate: s.d_estimate,
        stderr: s.stderr,
        d_naive: s.d_naive,
        stderr_naive: s.stderr_naive,
        drift: s.drift,
        ks: s.ks,
    };
    let mut out = output(args.out.as_deref())?;
    write_csv(&mut out, &Provenance::new(&input.canonical, Some(args.mc.seed)), &[row])?;
    finish(out)
}

#[derive(Serialize)]
struct SnapshotRow {
    step: usize,
    k: i64,
    j: usize,
    density: f64,
    mass: f64,
    gaussian: f64,
}

#[derive(Serialize)]
struct TraceRow {
    step: usize,
    kolmogorov_distance: f64,
    total_mass: f64,
    variance: f64,
}

pub fn evolve_cmd(args: &EvolveArgs) -> Result<()> {
    let (input, solution) = load_map(&args.map, args.partition_system.as_ref())?;
    let partition = resolve_partition(&input.map, args.partition.as_deref(), solution.as_ref())?;
    let set = build_transition_matrices(&input.map, &partition)?;
    let report = diffusion_spectral(&set)?;
    let alpha = report.alpha.clone().unwrap_or_default();
    let lengths = partition.lengths();
    let mut snapshots = match &args.checkpoints {
        Some(c) => c.clone(),
        None => default_checkpoints(args.steps),
    };
    snapshots.sort_unstable();
    snapshots.dedup();
    if snapshots.first() == Some(&0) || snapshots.last().is_some_and(|&s| s > args.steps) {
        return Err(Error::InvalidArgument(format!("checkpoints must lie in 1..={}", args.steps)));
    }
    let mut density = LatticeDensity::delta(&lengths);
    let (mut rows, mut trace) = (Vec::new(), Vec::new());
    for &n in &snapshots {
        density = evolve(&set, &density, n - density.step(), Execution::default())?;
        let profile = gaussian_profile(report.d, report.drift, &alpha, &lengths, n)?;
        trace.push(TraceRow {
            step: n,
            kolmogorov_distance: kolmogorov_distance(&density, &profile)?,
            total_mass: density.total_mass(),
            variance: density.lattice_variance(),
        });
        rows.extend(density.rows().into_iter().map(|r| SnapshotRow {
            step: n,
            k: r.k,
            j: r.j,
            density: r.density,
            mass: r.mass,
            gaussian: profile.density(r.k, r.j - 1),
        }));
    }
    let prov = Provenance::new(&input.canonical, None);
    let mut out = output(args.out.as_deref())?;
    write_csv(&mut out, &prov, &rows)?;
    finish(out)?;
    match &args.trace {
        Some(p) => {
            let mut t = output(Some(p))?;
            write_csv(&mut t, &prov, &trace)?;
            finish(t)
        }
        None => write_csv(io::stderr().lock(), &prov, &trace),
    }
}

pub fn billiard(args: &BilliardArgs) -> Result<()> {
    let channel = match args.model {
        ModelArg::Approximate => {
            let lambda = args.lambda.ok_or_else(|| Error::InvalidArgument("--lambda is required".into()))?;
            Channel::Approximate { force: if lambda == 0.0 { Force::Zero } else { Force::Sawtooth { lambda } } }
        }
        ModelArg::Exact => {
            let (Some(h), Some(amplitude)) = (args.h, args.amplitude) else {
                return Err(Error::InvalidArgument("--h and --amplitude are required for the exact model".into()));
            };
            Channel::Exact { wall: Wall { h, amplitude } }
        }
    };
    let r = simulate_channel(
        &channel,
        args.samples,
        args.steps,
        args.seed,
        args.checkpoints.as_deref(),
        Execution::default(),
    )?;
    warn(&r.warnings);
    eprintln!("growth exponent {:.4} ({} samples, {} discarded)", r.exponent, r.samples, r.discarded);
    let mut out = output(args.out.as_deref())?;
    write_csv(&mut out, &Provenance::new(&serde_json::to_string(&channel)?, Some(args.seed)), &r.rows)?;
    finish(out)
}
