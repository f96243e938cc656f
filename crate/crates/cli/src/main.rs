// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! `exmm`: check exception and interrupt litmus tests against the model.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exmm::harness::{self, SuiteResult};
use exmm::litmus::{parse_test, validate_test};
use exmm::{CheckOptions, EnumOptions, HarnessError, ModelConfig, Outcome, Verdict};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RESOURCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "exmm",
    version,
    about = "Axiomatic checker for exception and interrupt litmus tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check one test under one model configuration.
    Check(CheckArgs),
    /// Check every `.elitmus` file in a directory under several variants.
    Suite(SuiteArgs),
    /// Report diagnostics for test files.
    Lint { files: Vec<PathBuf> },
    /// Print a test in canonical form.
    Print { file: PathBuf },
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// FEAT_ExS: exception entry and return are not context synchronising
    /// unless --eis/--eos.
    #[arg(long)]
    exs: bool,
    #[arg(long)]
    eis: bool,
    #[arg(long)]
    eos: bool,
    #[arg(long)]
    sea_r: bool,
    #[arg(long)]
    sea_w: bool,
    #[arg(long)]
    no_ets2: bool,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    eoimode: u8,
    /// Enable the GIC extension even if the test uses no GIC register.
    #[arg(long)]
    gic: bool,
    /// A named variant such as `sea_rw+no_ets2`; combined with the flags.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    witness: bool,
    #[arg(long, default_value_t = 1_000_000)]
    max_candidates: usize,
    /// SGI takes per thread.
    #[arg(long, default_value_t = 2)]
    max_takes: usize,
}

#[derive(Args)]
struct SuiteArgs {
    dir: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "default")]
    matrix: Vec<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    json: bool,
    #[arg(long, default_value_t = 1_000_000)]
    max_candidates: usize,
}

fn config_from(a: &CheckArgs) -> Result<ModelConfig, HarnessError> {
    let mut c = match &a.variant {
        Some(v) => ModelConfig::from_variant(v)?,
        None => ModelConfig::default(),
    };
    c.feat_exs |= a.exs;
    c.eis |= a.eis;
    c.eos |= a.eos;
    c.sea_r |= a.sea_r;
    c.sea_w |= a.sea_w;
    c.ets2 &= !a.no_ets2;
    c.eoimode = c.eoimode.max(a.eoimode);
    c.gic |= a.gic;
    c.validate()?;
    Ok(c)
}

fn error_code(e: &HarnessError) -> u8 {
    if e.is_resource() {
        EXIT_RESOURCE
    } else {
        EXIT_USAGE
    }
}

fn outcome_word(o: Outcome) -> &'static str {
    match o {
        Outcome::Allowed => "Allowed",
        Outcome::Forbidden => "Forbidden",
    }
}

fn verdict_line(v: &Verdict) -> String {
    let exp = match (v.expected, v.matches) {
        (Some(e), Some(true)) => format!("expected {}, ok", e.keyword()),
        (Some(e), Some(false)) => format!("expected {}, MISMATCH", e.keyword()),
        (Some(e), None) => format!("expected {}", e.keyword()),
        (None, _) => "no expectation".into(),
    };
    format!(
        "{} [{}]: {} ({exp}; {} of {} candidates consistent; {} ms)",
        v.test,
        v.config,
        outcome_word(v.outcome),
        v.candidates_consistent,
        v.candidates_total,
        v.time_ms
    )
}

fn run_check(a: &CheckArgs) -> Result<u8, HarnessError> {
    let cfg = config_from(a)?;
    let test = harness::load_file(&a.file)?;
    let opts = CheckOptions {
        enumeration: EnumOptions {
            max_candidates: a.max_candidates,
            max_takes: a.max_takes,
            ..EnumOptions::default()
        },
        witness: a.witness,
    };
    let v = harness::check(&test, &cfg, &opts)?;
    if a.json {
        println!("{}", v.to_json());
    } else {
        println!("{}", verdict_line(&v));
        if let Some(w) = &v.witness {
            println!("witness:");
            for (i, e) in w.events.iter().enumerate() {
                println!("  e{i}: {e}");
            }
            println!("  rf: {:?}", w.rf);
            println!("  co: {:?}", w.co);
            if !w.interrupt.is_empty() {
                println!("  interrupt: {:?}", w.interrupt);
            }
            for r in &w.gic_runs {
                println!("  gic T{}: {:?}", r.thread, r.order);
            }
        }
    }
    Ok(if v.matches == Some(false) {
        EXIT_MISMATCH
    } else {
        0
    })
}

fn run_suite(a: &SuiteArgs) -> Result<u8, HarnessError> {
    let configs = a
        .matrix
        .iter()
        .map(|m| ModelConfig::from_variant(m))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = CheckOptions {
        enumeration: EnumOptions {
            max_candidates: a.max_candidates,
            ..EnumOptions::default()
        },
        witness: false,
    };
    let report = harness::run_suite(&a.dir, &configs, a.jobs, &opts)?;
    for e in &report.entries {
        if a.json {
            let line = match &e.result {
                SuiteResult::Verdict(v) => v.to_json(),
                SuiteResult::Error { error, resource } => serde_json::json!({
                    "schema": 1,
                    "file": e.file,
                    "config": e.config,
                    "error": error,
                    "resource": resource,
                }),
            };
            println!("{line}");
        } else {
            match &e.result {
                SuiteResult::Verdict(v) => println!("{}", verdict_line(v)),
                SuiteResult::Error { error, .. } => {
                    println!("{} [{}]: error: {error}", e.file.display(), e.config)
                }
            }
        }
    }
    let (n, mism, errs) = (report.entries.len(), report.mismatches(), report.errors());
    if !a.json {
        println!("{n} checks, {mism} mismatches, {errs} errors");
    }
    Ok(if errs > report.resource_errors() {
        EXIT_USAGE
    } else if errs > 0 {
        EXIT_RESOURCE
    } else if mism > 0 {
        EXIT_MISMATCH
    } else {
        0
    })
}

fn run_lint(files: &[PathBuf]) -> Result<u8, HarnessError> {
    let mut code = 0;
    for f in files {
        let src = std::fs::read_to_string(f).map_err(|source| HarnessError::Io {
            path: f.clone(),
            source,
        })?;
        match parse_test(&src) {
            Err(e) => {
                println!("{}:{}:{}: {}", f.display(), e.line, e.column, e.message);
                code = EXIT_USAGE;
            }
            Ok(t) => {
                for d in validate_test(&t) {
                    println!("{}: {:?}: {}", f.display(), d.severity, d.message);
                    code = EXIT_USAGE;
                }
            }
        }
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check(a) => run_check(a),
        Command::Suite(a) => run_suite(a),
        Command::Lint { files } => run_lint(files),
        Command::Print { file } => harness::load_file(file).map(|t| {
            print!("{t}");
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("exmm: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}
