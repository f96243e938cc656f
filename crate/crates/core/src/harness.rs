// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Checking tests against the model and running suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::enumerate::{
    check_final, enumerate_candidates, CandidateExecution, EnumError, EnumOptions,
};
use crate::gic::{feasible_witness, GicRun};
use crate::isa::{BarrierType, Event, EventKind, ExceptionCause, GicOp};
use crate::litmus::{
    parse_test, validate_test, Diagnostic, Expectation, LitmusTest, ParseError, Severity,
};
use crate::model::{check_axioms, derive, ConfigError, ModelConfig};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("invalid test: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Enumeration(#[from] EnumError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Resource exhaustion, as opposed to a malformed input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            HarnessError::Enumeration(EnumError::TooManyCandidates { .. } | EnumError::Diverged)
        )
    }
}

/// Parses and validates; warnings are accepted.
pub fn load_test(src: &str) -> Result<LitmusTest, HarnessError> {
    let t = parse_test(src)?;
    let errors: Vec<Diagnostic> = validate_test(&t)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(t)
    } else {
        Err(HarnessError::Invalid(errors))
    }
}

pub fn load_file(path: &Path) -> Result<LitmusTest, HarnessError> {
    let src = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_test(&src)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Allowed,
    Forbidden,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckOptions {
    pub enumeration: EnumOptions,
    pub witness: bool,
}

/// An allowed execution satisfying the final condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub events: Vec<String>,
    pub rf: Vec<(usize, usize)>,
    pub co: Vec<(usize, usize)>,
    pub interrupt: Vec<(usize, usize)>,
    pub gic_runs: Vec<GicRun>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub test: String,
    pub config: String,
    pub outcome: Outcome,
    pub expected: Option<Expectation>,
    /// `None` when there is no comparable expectation.
    #[serde(rename = "match")]
    pub matches: Option<bool>,
    pub candidates_total: usize,
    pub candidates_consistent: usize,
    pub time_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Verdict {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("verdict serialises");
        v.as_object_mut()
            .expect("object")
            .insert("schema".into(), 1.into());
        v
    }
}

fn loc_name(c: &CandidateExecution, l: usize) -> &str {
    &c.locations[l]
}

/// One-line rendering of an event.
pub fn describe_event(c: &CandidateExecution, e: &Event) -> String {
    let who = match e.thread {
        None => "init".to_string(),
        Some(t) if e.in_handler => format!("T{t}h"),
        Some(t) => format!("T{t}"),
    };
    let what = match &e.kind {
        EventKind::Read {
            loc,
            value,
            acquire,
            exclusive,
        } => {
            let m = if *acquire {
                "Racq"
            } else if *exclusive {
                "Rx"
            } else {
                "R"
            };
            format!("{m} {}={value}", loc_name(c, *loc))
        }
        EventKind::Write {
            loc,
            value,
            release,
            exclusive,
        } => {
            let m = if *release {
                "Wrel"
            } else if *exclusive {
                "Wx"
            } else {
                "W"
            };
            format!("{m} {}={value}", loc_name(c, *loc))
        }
        EventKind::Barrier(BarrierType::Dmb(k)) => format!("DMB.{}", k.suffix()),
        EventKind::Barrier(BarrierType::Dsb(k)) => format!("DSB.{}", k.suffix()),
        EventKind::Barrier(BarrierType::Isb) => "ISB".into(),
        EventKind::TakeException(ExceptionCause::Svc(i)) => format!("TE(SVC #{i})"),
        EventKind::TakeException(ExceptionCause::PageFault) => "TE(PageFault)".into(),
        EventKind::TakeException(ExceptionCause::Irq { intid: Some(i), .. }) => {
            format!("TakeInterrupt(SGI {i})")
        }
        EventKind::TakeException(ExceptionCause::Irq { intid: None, .. }) => {
            "TakeInterrupt(IRQ)".into()
        }
        EventKind::Eret => "ERET".into(),
        EventKind::Msr { sysreg, value } => format!("MSR {sysreg}={value:#x}"),
        EventKind::Mrs { sysreg, value } => format!("MRS {sysreg}={value:#x}"),
        EventKind::Gic(GicOp::Generate { intid, targets }) => {
            format!("GenerateSGI({intid} -> {targets:?})")
        }
        EventKind::Gic(GicOp::Acknowledge { intid }) => format!("Acknowledge({intid})"),
        EventKind::Gic(GicOp::Drop { intid }) => format!("PriorityDrop({intid})"),
        EventKind::Gic(GicOp::Deactivate { intid }) => format!("Deactivate({intid})"),
    };
    format!("{who}: {what}")
}

/// Effective model configuration: the GIC extension is on for any test that
/// touches a GIC register.
pub fn effective_config(test: &LitmusTest, cfg: &ModelConfig) -> ModelConfig {
    ModelConfig {
        gic: cfg.gic || test.uses_gic(),
        ..*cfg
    }
}

/// Decides whether the final condition is reachable by some consistent,
/// GIC-feasible candidate.
pub fn check(
    test: &LitmusTest,
    cfg: &ModelConfig,
    opts: &CheckOptions,
) -> Result<Verdict, HarnessError> {
    cfg.validate()?;
    let start = Instant::now();
    let eff = effective_config(test, cfg);
    let enum_opts = EnumOptions {
        eoimode: cfg.eoimode,
        ..opts.enumeration
    };
    let mut consistent = 0usize;
    let mut witness: Option<Witness> = None;
    let mut allowed = false;
    let stats = enumerate_candidates(test, &enum_opts, |c| {
        let (_, rels) = derive(c, &eff);
        if !check_axioms(&rels).consistent() {
            return;
        }
        let runs = if eff.gic {
            match feasible_witness(c, &rels.ob) {
                Some(r) => r,
                None => return,
            }
        } else {
            Vec::new()
        };
        consistent += 1;
        if check_final(test, c) && !allowed {
            allowed = true;
            if opts.witness {
                witness = Some(Witness {
                    events: c.events.iter().map(|e| describe_event(c, e)).collect(),
                    rf: c.rf.pairs().collect(),
                    co: c.co.pairs().collect(),
                    interrupt: c.interrupt.pairs().collect(),
                    gic_runs: runs,
                });
            }
        }
    })?;
    let outcome = if allowed {
        Outcome::Allowed
    } else {
        Outcome::Forbidden
    };
    let expected = test.expectation(&cfg.variant_name());
    let matches = match expected {
        Some(Expectation::Allow) => Some(outcome == Outcome::Allowed),
        Some(Expectation::Forbid) => Some(outcome == Outcome::Forbidden),
        Some(Expectation::Unknown) | None => None,
    };
    Ok(Verdict {
        test: test.name.clone(),
        config: cfg.variant_name(),
        outcome,
        expected,
        matches,
        candidates_total: stats.candidates,
        candidates_consistent: consistent,
        time_ms: start.elapsed().as_millis() as u64,
        witness,
    })
}

#[derive(Debug, Serialize)]
pub struct SuiteEntry {
    pub file: PathBuf,
    pub config: String,
    #[serde(flatten)]
    pub result: SuiteResult,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum SuiteResult {
    Verdict(Verdict),
    Error { error: String, resource: bool },
}

#[derive(Debug, Default, Serialize)]
pub struct SuiteReport {
    pub entries: Vec<SuiteEntry>,
}

impl SuiteReport {
    pub fn verdicts(&self) -> impl Iterator<Item = &Verdict> {
        self.entries.iter().filter_map(|e| match &e.result {
            SuiteResult::Verdict(v) => Some(v),
            SuiteResult::Error { .. } => None,
        })
    }

    pub fn mismatches(&self) -> usize {
        self.verdicts().filter(|v| v.matches == Some(false)).count()
    }

    pub fn errors(&self) -> usize {
        self.entries.len() - self.verdicts().count()
    }

    pub fn resource_errors(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| matches!(e.result, SuiteResult::Error { resource: true, .. }))
            .count()
    }
}

/// `.elitmus` files directly under `dir`, sorted.
pub fn suite_files(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let rd = fs::read_dir(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "elitmus"))
        .collect();
    files.sort();
    Ok(files)
}

/// Checks every file under `dir` against every configuration, on `jobs`
/// worker threads.
pub fn run_suite(
    dir: &Path,
    configs: &[ModelConfig],
    jobs: usize,
    opts: &CheckOptions,
) -> Result<SuiteReport, HarnessError> {
    let files = suite_files(dir)?;
    let work: Vec<(PathBuf, ModelConfig)> = files
        .iter()
        .flat_map(|f| configs.iter().map(move |c| (f.clone(), *c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .expect("thread pool");
    let entries = pool.install(|| {
        work.par_iter()
            .map(|(file, cfg)| {
                let result = match load_file(file).and_then(|t| check(&t, cfg, opts)) {
                    Ok(v) => SuiteResult::Verdict(v),
                    Err(e) => SuiteResult::Error {
                        resource: e.is_resource(),
                        error: e.to_string(),
                    },
                };
                SuiteEntry {
                    file: file.clone(),
                    config: cfg.variant_name(),
                    result,
                }
            })
            .collect()
    });
    Ok(SuiteReport { entries })
}
