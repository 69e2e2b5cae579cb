use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::warn;
use serde_json::{json, Value};

use cnot_parallelism::algebra::PHYSICAL_TOL;
use cnot_parallelism::channels::{channel, verify_expansion, ChannelName};
use cnot_parallelism::fidelity::{
    label_string, measurement_plan, BasisSetting, FidelityTriple, DEFAULT_EQUALITY_TOL,
};
use cnot_parallelism::formats::{evaluate_counts, write_atomic, ChannelFile, CountsFile, SettingCounts};
use cnot_parallelism::sampling::{build_noisy_channel, sample_canonical, NoiseModel, NoiseParams};
use cnot_parallelism::Error;

#[derive(Parser)]
#[command(name = "cnotpar", version, about = "Three-fidelity characterization of CNOT gates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the channel expansion identity and that the named channels are CPTP.
    Verify {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Sample a synthetic counts file from a noisy gate model.
    Simulate {
        /// werner, zx_dephase, depolarize or local_flip
        #[arg(long, default_value = "werner")]
        model: NoiseModel,
        #[arg(long)]
        strength: f64,
        /// Shots per prepared input.
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a counts file into a report.
    Evaluate {
        #[arg(long)]
        counts: PathBuf,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_EQUALITY_TOL)]
        equality_tol: f64,
    },
    /// Reconstruct the channel implied by three fidelities.
    Channel {
        #[arg(allow_negative_numbers = true)]
        f1: f64,
        #[arg(allow_negative_numbers = true)]
        f2: f64,
        #[arg(allow_negative_numbers = true)]
        f3: f64,
        /// Output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the 16 measured probabilities that determine the fidelities.
    Plan {
        #[arg(long)]
        json: bool,
    },
}

fn emit(out: Option<&Path>, text: &str) -> cnot_parallelism::Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(tol: f64) -> bool {
    let mut ok = true;
    let mut line = |name: String, residual: f64| {
        let pass = residual < tol;
        ok &= pass;
        println!(
            "{} {name}: residual {residual:.3e} (tol {tol:e})",
            if pass { "ok  " } else { "FAIL" }
        );
    };
    line("expansion CNOT = L1 + L2 + L3 - 2D".into(), verify_expansion(tol).residual);
    for name in ChannelName::ALL {
        let s = channel(name).superop;
        line(format!("{name} trace preservation"), s.trace_preservation_defect());
        line(format!("{name} complete positivity"), (-s.min_choi_eigenvalue()).max(0.0));
    }
    ok
}

fn simulate(
    model: NoiseModel,
    strength: f64,
    shots: u64,
    seed: u64,
    out: &Path,
) -> cnot_parallelism::Result<()> {
    let params = NoiseParams { model, strength };
    let s = build_noisy_channel(&params)?;
    let records = sample_canonical(&s, shots, seed)?;
    let settings = BasisSetting::CANONICAL
        .iter()
        .zip(records.iter())
        .map(|(setting, r)| SettingCounts::from_records(*setting, r))
        .collect();
    let metadata: BTreeMap<String, Value> = [
        ("synthetic", json!(true)),
        ("generator", json!("cnotpar simulate")),
        ("model", json!(model.to_string())),
        ("strength", json!(strength)),
        ("shots_per_input", json!(shots)),
        ("seed", json!(seed)),
        ("rng", json!("chacha8, per-setting seed = seed xor 0x5a5a00000000000k")),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let file = CountsFile::new(metadata, settings);
    write_atomic(out, file.to_json_string()?.as_bytes())
}

fn evaluate(counts: &Path, out: Option<&Path>, equality_tol: f64) -> cnot_parallelism::Result<()> {
    let file = CountsFile::read(counts)?;
    if file.metadata.get("synthetic") == Some(&Value::Bool(true)) {
        log::info!("{} holds synthetic data", counts.display());
    }
    let (report, warnings) = evaluate_counts(&file, equality_tol)?;
    for w in warnings {
        warn!("{w}");
    }
    emit(out, &report.to_json_string()?)?;
    eprintln!(
        "F1 = {:.6}  F2 = {:.6}  F3 = {:.6}  sum = {:.6}  criterion_met = {}",
        report.fidelities.f1, report.fidelities.f2, report.fidelities.f3, report.sum, report.criterion_met
    );
    Ok(())
}

fn reconstruct(f: [f64; 3], out: Option<&Path>) -> cnot_parallelism::Result<()> {
    let triple = FidelityTriple::new(f[0], f[1], f[2])?;
    let file = ChannelFile::build(&triple)?;
    if !file.is_cp {
        warn!(
            "reconstruction is not completely positive (min Choi eigenvalue {:e}, tol {PHYSICAL_TOL:e})",
            file.min_choi_eigenvalue
        );
    }
    emit(out, &file.to_json_string()?)
}

fn plan(as_json: bool) -> cnot_parallelism::Result<()> {
    let entries = measurement_plan();
    if as_json {
        let items: Vec<Value> = entries
            .iter()
            .map(|e| {
                json!({
                    "fidelity": e.fidelity,
                    "setting": e.setting.to_string(),
                    "input_basis": e.setting.input_basis,
                    "output_basis": e.setting.output_basis,
                    "input": label_string(e.input),
                    "outcome": label_string(e.outcome),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&items)?);
    } else {
        for e in &entries {
            println!(
                "{:?}  setting {}  input {} ({}{})  outcome {} ({}{})",
                e.fidelity,
                e.setting,
                label_string(e.input),
                e.setting.input_basis[0],
                e.setting.input_basis[1],
                label_string(e.outcome),
                e.setting.output_basis[0],
                e.setting.output_basis[1],
            );
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> ExitCode {
    if err.is_io_or_schema() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify { tol } => {
            return if verify(tol) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Simulate {
            model,
            strength,
            shots,
            seed,
            out,
        } => simulate(model, strength, shots, seed, &out),
        Command::Evaluate {
            counts,
            out,
            equality_tol,
        } => evaluate(&counts, out.as_deref(), equality_tol),
        Command::Channel { f1, f2, f3, out } => reconstruct([f1, f2, f3], out.as_deref()),
        Command::Plan { json } => plan(json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
