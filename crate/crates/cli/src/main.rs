//! Command-line front end: expansion printing, the analyzer table,
//! Monte Carlo simulation, exact security analysis, and a self-check.
//!
//! Exit codes: 0 success, 1 failed verification, 2 usage error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qdh_core::analysis::{self, local_count_strategy, trace_distance};
use qdh_core::fock::FockState;
use qdh_core::gba;
use qdh_core::protocol::{self, SessionConfig, SessionReport};
use qdh_core::states::{
    self, bell, BellKind, SourceParams, StateSet, DECOMPOSITION_SIGNS, DECOMPOSITION_TERMS,
};

#[derive(Parser)]
#[command(name = "qdh", version, about = "Data hiding on a heralded two-pair photon source")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print one stage of the source expansion (1 = single pass,
    /// 2 = double pass, 3 = four-photon component, 4 = its decomposition)
    Expand {
        /// Expansion stage, 1..=4
        #[arg(long)]
        eq: u8,
        /// Pair-emission probability per pass
        #[arg(long, default_value_t = 0.01)]
        p: f64,
        /// Write the corresponding state in text form to this file
        #[arg(long, value_name = "FILE")]
        dump_state: Option<PathBuf>,
    },
    /// Print the analyzer's click-pattern table for the ten basis states
    GbaTable,
    /// Run seeded end-to-end hiding sessions and report statistics
    Simulate(SimulateArgs),
    /// Exact security analysis of the n-pair hiding ensembles
    Analyze(AnalyzeArgs),
    /// Re-run the built-in identities and calibration checks
    Verify,
}

#[derive(Args)]
struct SimulateArgs {
    /// Pairs per hidden bit
    #[arg(long)]
    n: usize,
    /// Hidden bit (0 or 1)
    #[arg(long)]
    secret: u8,
    /// Pair-emission probability per pass
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    /// Independent sessions to run
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Root seed; per-trial seeds are derived deterministically
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the machine report here instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    /// Include one record per trial in the report
    #[arg(long)]
    per_trial: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Pairs per hidden bit (exact analysis, n <= 3)
    #[arg(long)]
    n: usize,
    /// Prior probability of secret bit 1
    #[arg(long, default_value_t = 0.5)]
    prior: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    report: Format,
    /// Write the machine report here instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Serialize, Deserialize)]
struct AnalyzeReport {
    n: usize,
    prior: [f64; 2],
    trace_distance: f64,
    strategy: String,
    mutual_information_bits: f64,
    information_bound_bits: f64,
    overhead_factor: f64,
    bound_curve: Vec<BoundPoint>,
}

#[derive(Serialize, Deserialize)]
struct BoundPoint {
    m: u32,
    bound_bits: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Expand { eq, p, dump_state } => expand(eq, p, dump_state),
        Command::GbaTable => gba_table(),
        Command::Simulate(args) => simulate(args),
        Command::Analyze(args) => analyze(args),
        Command::Verify => Ok(verify()),
    }
}

fn write_report(output: &Option<PathBuf>, body: &str) -> Result<(), String> {
    match output {
        Some(path) => {
            fs::write(path, body).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => {
            println!("{body}");
            Ok(())
        }
    }
}

fn expand(eq: u8, p: f64, dump_state: Option<PathBuf>) -> Result<ExitCode, String> {
    let params = SourceParams::new(p).map_err(|e| e.to_string())?;
    let state: FockState = match eq {
        1 => {
            let sectors = states::spdc_single_pass(&params, 1, 2).map_err(|e| e.to_string())?;
            println!("single-pass expansion on paths (1, 2), p = {p}:");
            print_sectors(&sectors);
            sectors_state(&sectors)
        }
        2 => {
            let sectors = states::spdc_double_pass(&params).map_err(|e| e.to_string())?;
            println!("double-pass expansion on paths 1..4, p = {p}:");
            print_sectors(&sectors);
            sectors_state(&sectors)
        }
        3 => {
            let poly = states::theta_poly();
            println!("four-photon component (unnormalized):");
            println!("  {}", poly.pretty());
            println!("  exact norm^2 = {}", poly.exact_norm2());
            states::theta().normalized()
        }
        4 => {
            let c = states::verify_decomposition().map_err(|e| e.to_string())?;
            println!("four-photon component = {c} * sum of:");
            for ((left, right), sign) in DECOMPOSITION_TERMS.iter().zip(DECOMPOSITION_SIGNS) {
                println!(
                    "  {} {}(1,3) x {}(2,4)",
                    if sign > 0 { "+" } else { "-" },
                    left.symbol(),
                    right.symbol()
                );
            }
            states::theta().normalized()
        }
        other => return Err(format!("--eq must be 1..=4, got {other}")),
    };
    if let Some(path) = dump_state {
        fs::write(&path, state.dump())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        println!("state written to {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_sectors(sectors: &[states::Sector]) {
    for s in sectors {
        println!(
            "  {} pair(s), weight {:.6}: {}",
            s.pairs,
            s.weight,
            s.poly.pretty()
        );
    }
}

fn sectors_state(sectors: &[states::Sector]) -> FockState {
    let mut state = FockState::zero();
    for s in sectors {
        let part = s
            .poly
            .apply_to_vacuum()
            .scaled(Complex64::new(s.weight, 0.0));
        state = state.add(&part);
    }
    state.normalized()
}

fn gba_table() -> Result<ExitCode, String> {
    let circuit = gba::calibrate().map_err(|e| e.to_string())?;
    println!("{:<8} {:<4} {:<9} click patterns", "state", "set", "class");
    for kind in BellKind::ALL {
        let state = bell(kind, 2, 4).map_err(|e| e.to_string())?;
        let branches =
            gba::outcome_distribution(&state, (2, 4), &circuit).map_err(|e| e.to_string())?;
        let mut patterns: Vec<String> = branches
            .iter()
            .map(|b| format!("{} ({:.2})", b.pattern, b.probability))
            .collect();
        patterns.sort();
        println!(
            "{:<8} {:<4} {:<9} {}",
            kind.symbol(),
            match kind.set() {
                StateSet::S1 => "S1",
                StateSet::S2 => "S2",
            },
            kind.gba_class().to_string().replace("class ", "class-"),
            patterns.join(", ")
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(args: SimulateArgs) -> Result<ExitCode, String> {
    if args.secret > 1 {
        return Err(format!("--secret must be 0 or 1, got {}", args.secret));
    }
    let config = SessionConfig {
        n: args.n,
        secret: args.secret,
        p: args.p,
        trials: args.trials,
        seed: args.seed,
    };
    let report = protocol::run_sessions(&config, args.per_trial).map_err(|e| e.to_string())?;
    let s = &report.stats;
    println!(
        "{} trial(s), n = {}, secret = {}: decode success rate {:.4}",
        s.trials, config.n, config.secret, s.success_rate
    );
    println!(
        "pairs {} (classes {}/{}/{}), S1 fraction {:.4}, mean pulses per pair {:.1}",
        s.pairs_total, s.class_hist[0], s.class_hist[1], s.class_hist[2], s.s1_fraction,
        s.pulses_mean
    );
    let body = match args.format {
        Format::Json => serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?,
        Format::Csv => simulate_csv(&report),
    };
    write_report(&args.output, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn simulate_csv(report: &SessionReport) -> String {
    let mut out = String::new();
    if let Some(per_trial) = &report.per_trial {
        out.push_str(
            "trial,n,secret,decoded_bit,pulses_total,pairs_drawn,pairs_rejected,\
             class1,class2,class3,s1_fraction_estimate\n",
        );
        for t in per_trial {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                t.trial,
                t.n,
                t.secret,
                t.decoded_bit,
                t.pulses_total,
                t.pairs_drawn,
                t.pairs_rejected,
                t.class_histogram[0],
                t.class_histogram[1],
                t.class_histogram[2],
                t.s1_fraction_estimate
            ));
        }
    } else {
        let s = &report.stats;
        out.push_str(
            "trials,success_rate,class1,class2,class3,pairs_total,s1_fraction,pulses_mean\n",
        );
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.trials,
            s.success_rate,
            s.class_hist[0],
            s.class_hist[1],
            s.class_hist[2],
            s.pairs_total,
            s.s1_fraction,
            s.pulses_mean
        ));
    }
    out
}

fn analyze(args: AnalyzeArgs) -> Result<ExitCode, String> {
    if args.n == 0 || args.n > analysis::MAX_EXACT_PAIRS {
        return Err(format!(
            "n <= {} for exact analysis, got {}",
            analysis::MAX_EXACT_PAIRS,
            args.n
        ));
    }
    if !(0.0..=1.0).contains(&args.prior) {
        return Err(format!("--prior must be in [0, 1], got {}", args.prior));
    }
    let prior = [1.0 - args.prior, args.prior];
    let r0 = analysis::hiding_density_matrix(0, args.n).map_err(|e| e.to_string())?;
    let r1 = analysis::hiding_density_matrix(1, args.n).map_err(|e| e.to_string())?;
    let dist = trace_distance(&r0, &r1).map_err(|e| e.to_string())?;
    let strategy = if prior == [0.5, 0.5] {
        local_count_strategy(args.n).map_err(|e| e.to_string())?
    } else {
        analysis::local_count_strategy_for(
            &r0,
            &r1,
            &prior,
            &format!("local-count(n={})", args.n),
        )
        .map_err(|e| e.to_string())?
    };
    let curve = analysis::bound_curve(&prior, 20).map_err(|e| e.to_string())?;
    let source = protocol::PairSource::new(
        SourceParams::new(0.01).map_err(|e| e.to_string())?,
        gba::calibrate().map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let overhead = analysis::overhead_from_fraction(source.exact_s1_fraction())
        .map_err(|e| e.to_string())?;

    let report = AnalyzeReport {
        n: args.n,
        prior,
        trace_distance: dist,
        strategy: strategy.strategy.clone(),
        mutual_information_bits: strategy.mutual_information,
        information_bound_bits: strategy.bound,
        overhead_factor: overhead,
        bound_curve: curve
            .into_iter()
            .map(|(m, bound_bits)| BoundPoint { m, bound_bits })
            .collect(),
    };
    println!(
        "n = {}: trace distance {:.6}, local counting leaks {:.6} bits (bound {:.6})",
        report.n, report.trace_distance, report.mutual_information_bits,
        report.information_bound_bits
    );
    println!("source overhead factor {:.4}", report.overhead_factor);
    let body = match args.report {
        Format::Json => serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?,
        Format::Csv => analyze_csv(&report),
    };
    write_report(&args.output, &body)?;
    Ok(ExitCode::SUCCESS)
}

fn analyze_csv(report: &AnalyzeReport) -> String {
    let mut out = String::from("key,value\n");
    out.push_str(&format!("n,{}\n", report.n));
    out.push_str(&format!("prior0,{}\n", report.prior[0]));
    out.push_str(&format!("prior1,{}\n", report.prior[1]));
    out.push_str(&format!("trace_distance,{}\n", report.trace_distance));
    out.push_str(&format!("strategy,{}\n", report.strategy));
    out.push_str(&format!(
        "mutual_information_bits,{}\n",
        report.mutual_information_bits
    ));
    out.push_str(&format!(
        "information_bound_bits,{}\n",
        report.information_bound_bits
    ));
    out.push_str(&format!("overhead_factor,{}\n", report.overhead_factor));
    for point in &report.bound_curve {
        out.push_str(&format!("bound_m{},{}\n", point.m, point.bound_bits));
    }
    out
}

fn verify() -> ExitCode {
    let mut ok = true;
    let mut check = |name: &str, passed: bool| {
        println!("{name}: {}", if passed { "ok" } else { "FAILED" });
        ok &= passed;
    };

    check(
        "four-photon decomposition constant is 1/2",
        states::verify_decomposition()
            .map(|c| c == qdh_core::algebra::Sqrt2Ext::ratio(1, 2))
            .unwrap_or(false),
    );
    check(
        "four-photon norm^2 is 5/2",
        states::theta_poly().exact_norm2() == qdh_core::algebra::Sqrt2Ext::ratio(5, 2),
    );
    check(
        "analyzer calibration matches the click table",
        gba::calibrate()
            .map(|c| gba::circuit_matches_table(&c))
            .unwrap_or(false),
    );
    check("basis states orthonormal", {
        let kets: Vec<FockState> = BellKind::ALL
            .iter()
            .map(|&k| bell(k, 2, 4).unwrap())
            .collect();
        let mut worst = 0.0f64;
        for (i, a) in kets.iter().enumerate() {
            for (j, b) in kets.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst <= 1e-12
    });
    check("label probabilities uniform at 1/10", {
        states::label_probabilities()
            .values()
            .all(|&p| (p - 0.1).abs() <= 1e-10)
    });
    check("one-pair hiding ensembles orthogonal", {
        match (
            analysis::hiding_density_matrix(0, 1),
            analysis::hiding_density_matrix(1, 1),
        ) {
            (Ok(r0), Ok(r1)) => trace_distance(&r0, &r1)
                .map(|d| (d - 1.0).abs() <= 1e-10)
                .unwrap_or(false),
            _ => false,
        }
    });
    check("class frequencies are (0.2, 0.2, 0.6)", {
        let circuit = gba::calibrate().unwrap();
        let theta = states::theta().normalized();
        let mut freq = [0.0f64; 3];
        for b in gba::outcome_distribution(&theta, (1, 3), &circuit).unwrap() {
            if let Ok(k) = gba::classify(&b.pattern) {
                freq[k.index()] += b.probability;
            }
        }
        (freq[0] - 0.2).abs() <= 1e-10
            && (freq[1] - 0.2).abs() <= 1e-10
            && (freq[2] - 0.6).abs() <= 1e-10
    });

    if ok {
        println!("all checks passed");
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
