use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use eprb::census::census_counts;
use eprb::fine::{default_w_grid, fine_construct, reality_matrix, verify_crm_identity, vertex_matrix};
use eprb::hidden::generated_reality_matrix;
use eprb::instance_file::parse_instance;
use eprb::model::{correlations, s_functions, CorrelationVector, DetectorProbs, GenericParams, QmAngles};
use eprb::qm::{equivalence_truth_table, extremize_sbar};
use eprb::scalar::{format_rational, parse_rational};
use eprb::sim::{estimate, goodness_of_fit, read_csv, write_csv, Simulator, Tally};
use eprb::slice::{slice, SliceModel};
use eprb::{Error, Rational, Scalar};

mod report;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(name = "eprb", version, about = "Parametric EPRB model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance for floating-point comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Minimal,
    QmMax,
}

#[derive(Subcommand)]
enum Command {
    /// Correlations, CHSH, locality conditions and predictability of an instance file.
    Classify { file: PathBuf },
    /// Bell-real decomposition of a correlation vector (w, x, y, z).
    #[command(allow_negative_numbers = true)]
    Fine { w: String, x: String, y: String, z: String },
    /// Exact deterministic and predictability counts.
    Census {
        /// Random QM angle triples checked for measurement predictability.
        #[arg(long, default_value_t = 10_000)]
        sweep: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Slice of an achievable-correlation set at fixed w.
    Slice {
        #[arg(long)]
        model: String,
        #[arg(long, allow_negative_numbers = true)]
        w: String,
        /// Samples per grid axis for surface models.
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Monte Carlo trials from an instance file or a preset.
    Simulate {
        #[arg(conflicts_with = "preset", required_unless_present = "preset")]
        file: Option<PathBuf>,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Standard errors required to report a CHSH violation.
        #[arg(long, default_value_t = 5.0)]
        z: f64,
        /// Also write the trial records as CSV to this path.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Estimates correlations from a trial CSV file (trial,u,v,s,t).
    Estimate {
        file: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        z: f64,
    },
    /// Matrix self-checks, including C·R·M(w)ᵀ = V(w) over the exact w grid.
    Verify,
    /// Global extrema of an s̄ function over the QM angles.
    Extremize {
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=4))]
        k: u8,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// QM / Bell-real / Bell-local achievability table with witnesses.
    TruthTable,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Infeasible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible { .. } => Failure::Infeasible(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

enum Output {
    Json(Value),
    Text(Vec<u8>),
}

fn envelope(command: &str, input: Value, result: Value) -> Output {
    Output::Json(json!({ "tool": "eprb", "version": VERSION, "command": command, "input": input, "result": result }))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn exact(text: &str, what: &str) -> Result<Rational, Failure> {
    parse_rational(text).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn classify(path: &Path, tol: f64) -> Result<Output, Failure> {
    let text = read_text(path)?;
    let spec = parse_instance(&text)?;
    let echo: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
    let result = if spec.is_qm() {
        report::classify(&spec.gamma_f64(), &spec.delta_f64(), tol)
    } else {
        report::classify(&spec.gamma_exact(), &spec.delta, tol)
    };
    let mut result = result;
    result["kind"] = json!(spec.instance.kind());
    Ok(envelope("classify", json!({ "file": path.display().to_string(), "instance": echo }), result))
}

fn fine(args: [&str; 4]) -> Result<Output, Failure> {
    let names = ["w", "x", "y", "z"];
    let mut p: [Rational; 4] = std::array::from_fn(|_| Rational::zero());
    for i in 0..4 {
        p[i] = exact(args[i], names[i])?;
    }
    let cv = CorrelationVector::new(p.clone())?;
    let r = fine_construct(&cv)?;
    let back = correlations(&r.gamma);
    let err = (0..4).map(|i| (back.as_array()[i].clone() - p[i].clone()).abs()).fold(Rational::zero(), Scalar::max);
    let strings = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
    let columns: Vec<Vec<String>> =
        vertex_matrix(cv.w())?.columns.iter().map(|c| strings(c)).collect();
    Ok(envelope(
        "fine",
        json!({ "p": strings(&p) }),
        json!({
            "vertices": columns,
            "lambda": strings(&r.lambda.weights),
            "rho": strings(r.rho.as_array()),
            "gamma": strings(r.gamma.as_array()),
            "round_trip_error": err.to_f64(),
        }),
    ))
}

fn census(sweep: usize, seed: u64) -> Result<Output, Failure> {
    let counts = census_counts(sweep, seed);
    Ok(envelope("census", json!({ "sweep": sweep, "seed": seed }), json!(counts)))
}

fn slice_cmd(model: &str, w: &str, grid: usize, format: Format) -> Result<Output, Failure> {
    let model: SliceModel = model.parse()?;
    let wq = exact(w, "w")?;
    let data = slice(model, &wq, grid)?;
    match format {
        Format::Csv => {
            let mut buf = Vec::new();
            data.write_csv(&mut buf)?;
            Ok(Output::Text(buf))
        }
        Format::Json => {
            Ok(envelope("slice", json!({ "model": model.tag(), "w": w, "grid": grid }), json!(data)))
        }
    }
}

fn simulate(
    file: Option<&Path>,
    preset: Option<Preset>,
    trials: u64,
    seed: u64,
    z: f64,
    records: Option<&Path>,
) -> Result<Output, Failure> {
    if trials == 0 {
        return Err(Failure::Input("--trials must be at least 1".into()));
    }
    let (gamma, delta, source): (GenericParams<f64>, DetectorProbs<f64>, Value) = match (file, preset) {
        (Some(path), _) => {
            let text = read_text(path)?;
            let spec = parse_instance(&text)?;
            let echo: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
            (spec.gamma_f64(), spec.delta_f64(), json!({ "file": path.display().to_string(), "instance": echo }))
        }
        (None, Some(Preset::Minimal)) => (GenericParams::minimal(), DetectorProbs::uniform(), json!("minimal")),
        (None, Some(Preset::QmMax)) => {
            let angles = QmAngles::from_degrees(22.5, 22.5, 22.5)?;
            (eprb::model::qm_gamma(&angles), DetectorProbs::uniform(), json!("qm-max"))
        }
        (None, None) => return Err(Failure::Input("give an instance file or --preset".into())),
    };
    let sim = Simulator::new(&gamma, &delta);
    let tally = match records {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let mut tally = Tally::default();
            let stream = sim.records(trials, seed).inspect(|r| tally.add(r));
            write_csv(stream, io::BufWriter::new(file))?;
            tally
        }
        None => sim.tally(trials, seed),
    };
    let report = estimate(&tally, z)?;
    let fit = goodness_of_fit(&tally, sim.joint());
    let expected = s_functions(&correlations(&gamma)).to_f64();
    Ok(envelope(
        "simulate",
        json!({ "source": source, "trials": trials, "seed": seed, "z": z }),
        json!({ "estimate": report, "cells": tally.cells, "goodness_of_fit": fit, "model_s": expected }),
    ))
}

fn estimate_cmd(path: &Path, z: f64) -> Result<Output, Failure> {
    let file = fs::File::open(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let records = read_csv(io::BufReader::new(file))?;
    let tally = Tally::from_records(&records);
    let report = estimate(&tally, z)?;
    Ok(envelope("estimate", json!({ "file": path.display().to_string(), "z": z }), json!({ "estimate": report })))
}

fn verify() -> Result<Output, Failure> {
    let grid: Vec<Rational> = default_w_grid();
    let deviation = verify_crm_identity(&grid)?;
    let reality = reality_matrix() == generated_reality_matrix();
    let ok = deviation.is_zero_tol(0.0) && reality;
    Ok(envelope(
        "verify",
        json!({ "w_points": grid.len() }),
        json!({
            "crm_identity_max_deviation": format_rational(&deviation),
            "reality_matrix_matches_outcome_rule": reality,
            "ok": ok,
        }),
    ))
}

fn extremize(k: u8, seed: u64) -> Result<Output, Failure> {
    let r = extremize_sbar(k as usize, seed);
    Ok(envelope("extremize", json!({ "k": k, "seed": seed }), json!(r)))
}

fn truth_table() -> Result<Output, Failure> {
    Ok(envelope("truth-table", json!({}), json!(equivalence_truth_table())))
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    match &cli.command {
        Command::Classify { file } => classify(file, cli.tol),
        Command::Fine { w, x, y, z } => fine([w, x, y, z]),
        Command::Census { sweep, seed } => census(*sweep, *seed),
        Command::Slice { model, w, grid } => slice_cmd(model, w, *grid, cli.format),
        Command::Simulate { file, preset, trials, seed, z, records } => {
            simulate(file.as_deref(), *preset, *trials, *seed, *z, records.as_deref())
        }
        Command::Estimate { file, z } => estimate_cmd(file, *z),
        Command::Verify => verify(),
        Command::Extremize { k, seed } => extremize(*k, *seed),
        Command::TruthTable => truth_table(),
    }
}

fn emit(output: Output, out: Option<&Path>) -> io::Result<()> {
    let bytes = match output {
        Output::Json(v) => {
            let mut s = serde_json::to_vec_pretty(&v).expect("JSON values serialize");
            s.push(b'\n');
            s
        }
        Output::Text(b) => b,
    };
    match out {
        Some(path) => fs::write(path, bytes),
        None => io::stdout().lock().write_all(&bytes),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.format == Format::Csv && !matches!(cli.command, Command::Slice { .. }) {
        eprintln!("error: --format csv is only available for slice");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(output) => match emit(output, cli.out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(3)
        }
    }
}
