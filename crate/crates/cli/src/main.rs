//! `hyperstate`: construct, certify and analyse multipartite pure states.
//!
//! Every subcommand prints one JSON report on stdout. Exit status is 0 on
//! success, 1 for a certified negative answer, 2 for usage or input errors.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hyperstate::constructors::method2::StageRecord;
use hyperstate::io::{load_state_file, save_state_with, LoadedState, Metadata};
use hyperstate::{
    degree_bipartite, degree_multipartite, hyperentanglement_test, method1_build, method1_windows, method2_build,
    paper_state, repair_bipartite, schmidt_decompose, window_certificate, AlsOptions, CorrelationQuery,
    GeometricWeights, Overall, PairingFn, PaperState, Projector, RankTolerance, StateTensor, Subsystem, Window,
};

const THREADS_VAR: &str = "HYPERSTATE_THREADS";

#[derive(Parser, Debug)]
#[command(name = "hyperstate", version, about = "Construct and certify hyperentangled pure states")]
struct Cli {
    /// Include wall-clock timing in the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a state and write it to a file.
    Construct {
        #[command(subcommand)]
        method: Construct,
    },
    /// Run the hyperentanglement test, optionally with window certificates.
    Certify {
        #[command(flatten)]
        input: Input,
        /// Absolute singular-value cutoff; the scaled default otherwise.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = Windows::None)]
        windows: Windows,
    },
    /// Schmidt decomposition across a split such as `0|1,2`.
    Schmidt {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        split: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Witness projector predicting a given projector with probability ≥ 1 − ε.
    Witness {
        #[command(flatten)]
        input: Input,
        /// JSON file `{"basis": [[[re, im], ...], ...]}` spanning the range of P′.
        #[arg(long)]
        pprime_file: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// `S|S′`; P acts on S, P′ on S′.
        #[arg(long)]
        split: String,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Degree of entanglement.
    Degree {
        #[command(flatten)]
        input: Input,
        /// Exact value across this split instead of the multipartite search.
        #[arg(long)]
        split: Option<String>,
        #[arg(long, default_value_t = hyperstate::degree::DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, default_value_t = hyperstate::degree::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = hyperstate::degree::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = hyperstate::degree::DEFAULT_MAX_ITERS)]
        max_iters: usize,
    },
}

#[derive(Subcommand, Debug)]
enum Construct {
    /// Pairing-pattern truncation over the given bounds.
    Method1 {
        /// Comma-separated bound per factor (3 or 4 factors).
        #[arg(long)]
        bounds: String,
        #[arg(long, default_value = "injection_2a3b")]
        pairing: String,
        /// Amplitude `ratio^(sum of coordinates)` on the support.
        #[arg(long, default_value_t = 0.5)]
        ratio: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seed-and-extend iteration from the default seed.
    Method2 {
        #[arg(long)]
        stages: usize,
        /// Comma-separated ε per stage; defaults to 0.01 halved at each stage.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// A named example state.
    Paper {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fill vanishing Schmidt coefficients of a bipartite state.
    Repair {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        split: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Input {
    /// State file.
    path: Option<PathBuf>,
    /// Named example state instead of a file.
    #[arg(long)]
    paper: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Windows {
    None,
    Full,
}

struct Outcome {
    command: &'static str,
    args: Value,
    result: Value,
    tolerances: Value,
    negative: bool,
}

fn load_input(input: &Input) -> anyhow::Result<(LoadedState, Value)> {
    match (&input.path, &input.paper) {
        (Some(path), None) => {
            let loaded = load_state_file(path).with_context(|| format!("cannot load {}", path.display()))?;
            Ok((loaded, json!({"path": path.display().to_string()})))
        }
        (None, Some(name)) => {
            let which: PaperState = name.parse()?;
            let mut metadata = Metadata::new();
            metadata.insert("construction".into(), json!({"method": "paper", "name": which.name()}));
            Ok((
                LoadedState {
                    state: paper_state(which),
                    metadata,
                },
                json!({"paper": which.name()}),
            ))
        }
        _ => bail!("give exactly one of a state file or --paper"),
    }
}

fn tolerance(tol: Option<f64>) -> anyhow::Result<RankTolerance> {
    let t = match tol {
        None => RankTolerance::Default,
        Some(t) => RankTolerance::Absolute(t),
    };
    t.validate()?;
    Ok(t)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> anyhow::Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| anyhow!("invalid {what} entry '{}' in '{text}'", s.trim()))
        })
        .collect()
}

/// `"0|1,2"`: factors left of `|` form S, the right side must be its complement.
fn parse_split(text: &str, n_factors: usize) -> anyhow::Result<Subsystem> {
    let (left, right) = text
        .split_once('|')
        .ok_or_else(|| anyhow!("split '{text}' must have the form S|S'"))?;
    let s: Vec<usize> = parse_list(left, "split")?;
    let mut rest: Vec<usize> = parse_list(right, "split")?;
    let subsystem = Subsystem::new(s, n_factors)?;
    rest.sort_unstable();
    if rest != subsystem.complement().indices() {
        bail!(
            "split '{text}': right side must be the complement {:?}",
            subsystem.complement().indices()
        );
    }
    Ok(subsystem)
}

fn write_state(state: &StateTensor, metadata: &Metadata, out: &PathBuf) -> anyhow::Result<()> {
    save_state_with(state, metadata, out).with_context(|| format!("cannot write {}", out.display()))
}

fn construct(method: &Construct) -> anyhow::Result<Outcome> {
    let (state, metadata, args, extra) = match method {
        Construct::Method1 {
            bounds,
            pairing,
            ratio,
            out,
        } => {
            let bounds: Vec<usize> = parse_list(bounds, "bound")?;
            let j: PairingFn = pairing.parse()?;
            if !(ratio.is_finite() && *ratio > 0.0) {
                bail!("--ratio must be positive, got {ratio}");
            }
            let state = method1_build(&bounds, j, &GeometricWeights { ratio: *ratio })?;
            let mut metadata = Metadata::new();
            metadata.insert(
                "construction".into(),
                json!({"method": "method1", "pairing": j.name(), "bounds": bounds, "ratio": ratio}),
            );
            let args = json!({"method": "method1", "bounds": bounds, "pairing": j.name(), "ratio": ratio, "out": out.display().to_string()});
            (state, metadata, args, Value::Null)
        }
        Construct::Method2 { stages, eps, out } => {
            let schedule: Vec<f64> = match eps {
                Some(text) => parse_list(text, "epsilon")?,
                None => (0..*stages).map(|k| 0.01 / 2f64.powi(k as i32)).collect(),
            };
            if schedule.len() != *stages {
                bail!("--eps lists {} values for {} stages", schedule.len(), stages);
            }
            let built = method2_build(&hyperstate::default_seed(), &schedule, RankTolerance::Default)?;
            let stage_json = report::stages(&built.stages);
            let mut metadata = Metadata::new();
            metadata.insert(
                "construction".into(),
                json!({"method": "method2", "seed": "unit_origin", "stages": stage_json}),
            );
            let args = json!({"method": "method2", "stages": stages, "eps": schedule, "out": out.display().to_string()});
            (built.state, metadata, args, json!({"stages": stage_json}))
        }
        Construct::Paper { name, out } => {
            let which: PaperState = name.parse()?;
            let mut metadata = Metadata::new();
            metadata.insert("construction".into(), json!({"method": "paper", "name": which.name()}));
            let args = json!({"method": "paper", "name": which.name(), "out": out.display().to_string()});
            (paper_state(which), metadata, args, Value::Null)
        }
        Construct::Repair {
            input,
            split,
            delta,
            out,
        } => {
            let (loaded, source) = load_input(input)?;
            let subsystem = parse_split(split, loaded.state.n_factors())?;
            let repaired = repair_bipartite(&loaded.state, &subsystem, *delta, RankTolerance::Default)?;
            let mut metadata = Metadata::new();
            metadata.insert(
                "construction".into(),
                json!({"method": "repair", "source": source, "split": split, "delta": delta}),
            );
            let args = json!({"method": "repair", "input": source, "split": split, "delta": delta, "out": out.display().to_string()});
            let extra = json!({"filled": repaired.filled, "distance": repaired.distance});
            (repaired.state, metadata, args, extra)
        }
    };
    let out = match method {
        Construct::Method1 { out, .. }
        | Construct::Method2 { out, .. }
        | Construct::Paper { out, .. }
        | Construct::Repair { out, .. } => out,
    };
    write_state(&state, &metadata, out)?;
    let mut result = json!({
        "dims": state.dims(),
        "nnz": state.nnz(),
        "norm": state.norm(),
        "truncated_from_infinite": state.truncated_from_infinite(),
        "out": out.display().to_string(),
    });
    if let Value::Object(extra) = extra {
        result.as_object_mut().expect("object").extend(extra);
    }
    Ok(Outcome {
        command: "construct",
        args,
        result,
        tolerances: json!({"rank": RankTolerance::Default}),
        negative: false,
    })
}

/// Windows recorded by the construction, or every complement index.
fn provenance_windows(loaded: &LoadedState) -> anyhow::Result<Vec<(Value, Window)>> {
    let construction = loaded.metadata.get("construction");
    let method = construction.and_then(|c| c.get("method")).and_then(Value::as_str);
    match method {
        Some("method2") => {
            let stages: Vec<StageRecord> = report::parse_stages(construction.and_then(|c| c.get("stages")))?;
            Ok(hyperstate::method2_windows(&stages)
                .into_iter()
                .map(|(s, family, w)| (json!({"stage": s, "family": family, "bound": stages[s].p}), w))
                .collect())
        }
        Some("method1") => {
            let c = construction.expect("method present");
            let bounds: Vec<usize> = serde_json::from_value(c.get("bounds").cloned().unwrap_or(Value::Null))
                .context("metadata construction.bounds")?;
            let pairing: PairingFn = c
                .get("pairing")
                .and_then(Value::as_str)
                .ok_or_else(|| anyhow!("metadata construction.pairing missing"))?
                .parse()?;
            if bounds != loaded.state.dims() {
                bail!("metadata construction.bounds {bounds:?} disagree with dims {:?}", loaded.state.dims());
            }
            Ok(method1_windows(&bounds, pairing)?
                .into_iter()
                .map(|w| (json!({"axis": w.axis_set[0], "kind": "pairing_range"}), w))
                .collect())
        }
        _ => (0..loaded.state.n_factors())
            .map(|axis| {
                Ok((
                    json!({"axis": axis, "kind": "full"}),
                    Window::full(loaded.state.dims(), axis)?,
                ))
            })
            .collect(),
    }
}

fn certify(input: &Input, tol: Option<f64>, windows: Windows) -> anyhow::Result<Outcome> {
    let tol_policy = tolerance(tol)?;
    let (loaded, source) = load_input(input)?;
    let verdict = hyperentanglement_test(&loaded.state, tol_policy)?;
    let mut result = report::verdict(&verdict);
    let mut negative = verdict.overall != Overall::Hyperentangled;
    if windows == Windows::Full {
        let mut rows = Vec::new();
        let mut all_pass = true;
        for (label, w) in provenance_windows(&loaded)? {
            let outcome = window_certificate(&loaded.state, &w, tol_policy)?;
            all_pass &= outcome.pass;
            rows.push(report::window(label, &w, &outcome));
        }
        result["windows"] = Value::Array(rows);
        result["windows_pass"] = Value::Bool(all_pass);
        // A truncation is judged by its window certificates.
        if loaded.state.truncated_from_infinite() {
            negative = !all_pass;
        } else {
            negative |= !all_pass;
        }
    }
    Ok(Outcome {
        command: "certify",
        args: json!({"input": source, "tol": tol, "windows": match windows { Windows::None => "none", Windows::Full => "full" }}),
        result,
        tolerances: json!({"rank": tol_policy, "unit_norm": hyperstate::bilinear::UNIT_TOL}),
        negative,
    })
}

fn schmidt(input: &Input, split: &str, tol: Option<f64>) -> anyhow::Result<Outcome> {
    let tol_policy = tolerance(tol)?;
    let (loaded, source) = load_input(input)?;
    let subsystem = parse_split(split, loaded.state.n_factors())?;
    let s = schmidt_decompose(&loaded.state, &subsystem, tol_policy)?;
    Ok(Outcome {
        command: "schmidt",
        args: json!({"input": source, "split": split, "tol": tol}),
        result: report::schmidt(&s),
        tolerances: json!({"rank": tol_policy}),
        negative: false,
    })
}

fn read_projector(path: &PathBuf, subsystem: Subsystem, dims: &[usize]) -> anyhow::Result<Projector> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
    let basis: Vec<Vec<[f64; 2]>> = serde_json::from_value(
        value
            .get("basis")
            .cloned()
            .ok_or_else(|| anyhow!("{}: missing field basis", path.display()))?,
    )
    .with_context(|| format!("{}: basis must be a list of [re, im] vectors", path.display()))?;
    let basis = basis
        .into_iter()
        .map(|v| v.into_iter().map(|[re, im]| num_complex::Complex64::new(re, im)).collect())
        .collect();
    Ok(Projector::new(subsystem, dims, basis)?)
}

fn witness(input: &Input, pprime: &PathBuf, epsilon: f64, split: &str, tol: Option<f64>) -> anyhow::Result<Outcome> {
    let tol_policy = tolerance(tol)?;
    let (loaded, source) = load_input(input)?;
    let subsystem = parse_split(split, loaded.state.n_factors())?;
    let p_prime = read_projector(pprime, subsystem.complement(), loaded.state.dims())?;
    let query = CorrelationQuery {
        state: loaded.state.clone(),
        subsystem,
        p_prime: p_prime.clone(),
        epsilon,
    };
    let args = json!({"input": source, "pprime_file": pprime.display().to_string(), "epsilon": epsilon, "split": split, "tol": tol});
    let tolerances = json!({"rank": tol_policy});
    match hyperstate::correlation_witness(&query, tol_policy) {
        Ok(w) => {
            let check = hyperstate::conditional_probability(&loaded.state, &w.projector, &p_prime)?;
            Ok(Outcome {
                command: "witness",
                args,
                result: json!({
                    "achieved": w.achieved,
                    "reevaluated": check,
                    "marginal": w.marginal,
                    "below_target": w.below_target,
                    "projector": report::vectors(w.projector.basis()),
                }),
                tolerances,
                negative: w.below_target,
            })
        }
        Err(hyperstate::Error::NotCyclic { subsystem, rank, full }) => Ok(Outcome {
            command: "witness",
            args,
            result: json!({"not_cyclic": {"subsystem": subsystem, "rank": rank, "full_dim": full}}),
            tolerances,
            negative: true,
        }),
        Err(e) => Err(e.into()),
    }
}

fn degree(input: &Input, split: Option<&str>, opts: AlsOptions) -> anyhow::Result<Outcome> {
    let (loaded, source) = load_input(input)?;
    let (result, method) = match split {
        Some(split) => {
            let subsystem = parse_split(split, loaded.state.n_factors())?;
            (degree_bipartite(&loaded.state, &subsystem)?, "schmidt")
        }
        None => (degree_multipartite(&loaded.state, opts)?, "alternating"),
    };
    let mut payload = serde_json::to_value(&result)?;
    payload["method"] = json!(method);
    Ok(Outcome {
        command: "degree",
        args: json!({"input": source, "split": split, "restarts": opts.restarts, "seed": opts.seed, "tol": opts.tol, "max_iters": opts.max_iters}),
        result: payload,
        tolerances: json!({"convergence": opts.tol}),
        negative: false,
    })
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(text) = std::env::var(THREADS_VAR) {
        let n: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| anyhow!("{THREADS_VAR} must be a positive integer, got '{text}'"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the worker pool")?;
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    match &cli.command {
        Command::Construct { method } => construct(method),
        Command::Certify { input, tol, windows } => certify(input, *tol, *windows),
        Command::Schmidt { input, split, tol } => schmidt(input, split, *tol),
        Command::Witness {
            input,
            pprime_file,
            epsilon,
            split,
            tol,
        } => witness(input, pprime_file, *epsilon, split, *tol),
        Command::Degree {
            input,
            split,
            restarts,
            seed,
            tol,
            max_iters,
        } => degree(
            input,
            split.as_deref(),
            AlsOptions {
                restarts: *restarts,
                tol: *tol,
                max_iters: *max_iters,
                seed: *seed,
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let start = Instant::now();
    match run(&cli) {
        Ok(outcome) => {
            let mut report = json!({
                "command": outcome.command,
                "args": outcome.args,
                "result": outcome.result,
                "tolerances": outcome.tolerances,
            });
            if cli.timing {
                report["timing"] = json!({"wall_seconds": start.elapsed().as_secs_f64()});
            }
            match serde_json::to_string_pretty(&report) {
                Ok(text) => println!("{text}"),
                Err(e) => {
                    eprintln!("error: cannot serialize report: {e}");
                    return ExitCode::from(2);
                }
            }
            ExitCode::from(if outcome.negative { 1 } else { 0 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
