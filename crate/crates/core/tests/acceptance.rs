// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

// One line per acceptance criterion. Expected verdicts are pinned here and
// are independent of the `@expect` annotations in the corpus files.

mod common;

use std::time::{Duration, Instant};

use exmm::harness::{check, load_file};
use exmm::{CheckOptions, ModelConfig, Outcome};

use Outcome::{Allowed as A, Forbidden as F};

fn verdict(stem: &str, variant: &str) -> Result<Outcome, String> {
    let path = common::corpus_dir().join(format!("{stem}.elitmus"));
    let t = load_file(&path).map_err(|e| format!("{stem}: {e}"))?;
    let cfg = ModelConfig::from_variant(variant).map_err(|e| e.to_string())?;
    check(&t, &cfg, &CheckOptions::default())
        .map(|v| v.outcome)
        .map_err(|e| format!("{stem}: {e}"))
}

/// Mismatches among `(test, variant, expected)` triples.
fn expect_all<S: AsRef<str>>(cases: &[(S, &str, Outcome)]) -> Vec<String> {
    cases
        .iter()
        .filter_map(|(stem, variant, want)| {
            let stem = stem.as_ref();
            match verdict(stem, variant) {
                Ok(got) if got == *want => None,
                Ok(got) => Some(format!("{stem} [{variant}] {got:?}, want {want:?}")),
                Err(e) => Some(e),
            }
        })
        .collect()
}

fn with(
    variant: &'static str,
    stems: &[&str],
    want: Outcome,
) -> Vec<(String, &'static str, Outcome)> {
    stems
        .iter()
        .map(|s| (s.to_string(), variant, want))
        .collect()
}

fn criterion_1() -> Vec<String> {
    let mut cases = with(
        "default",
        &[
            "MP+dmb+svc",
            "MP+dmb+eret",
            "MP+dmb+svceret",
            "SB+dmb+svc",
            "SB+dmb+eret",
            "S+dmb+svc",
            "S+dmb+eret",
            "MP+svc+dmb",
            "MP+eret+dmb",
            "MP+dmb+eretsvc",
            "MP+svc+addr",
            "MP.EL1+dmb+svc",
            "SB+dmb+rfisvc-addr",
            "MP+dmb+svc-ctrl-rfi-addr",
        ],
        A,
    );
    cases.extend(with(
        "default",
        &[
            "MP+dmb+ctrlsvc",
            "MP+dmb+ctrleret",
            "MP+dmb+ctrl-rfisvc-addr",
            "MP+dmb+ctrl-rfisvceret-addr",
        ],
        F,
    ));
    expect_all(&cases)
}

fn criterion_2() -> Vec<String> {
    let mut out = expect_all(&with(
        "default",
        &[
            "MP.EL1+dmb+dataesrsvc",
            "MP.EL1+dmb+ctrlvbarsvc",
            "MP+dmb+ctrlelr",
            "MP.EL1+dmb+dataelrsvc",
        ],
        F,
    ));
    // Reported, not asserted: the expectation must be recorded as unknown.
    let path = common::corpus_dir().join("MP.EL1+dmb+datatpidrsvc.elitmus");
    match load_file(&path).map(|t| check(&t, &ModelConfig::default(), &CheckOptions::default())) {
        Ok(Ok(v)) if v.matches.is_none() => {}
        Ok(Ok(v)) => out.push(format!("datatpidrsvc compared against {:?}", v.expected)),
        Ok(Err(e)) | Err(e) => out.push(e.to_string()),
    }
    out
}

fn criterion_3() -> Vec<String> {
    let mut cases = with("sea_r", &["LB+po+po", "MP+dmb.sy+isb"], F);
    cases.extend(with("sea_w", &["MP+po+addr"], F));
    // Orderings that rest only on exception entry/return synchronising.
    cases.extend(with(
        "exs",
        &[
            "MP+dmb+ctrlsvc",
            "MP+dmb+ctrleret",
            "MP+dmb+ctrl-rfisvc-addr",
            "MP+dmb+ctrl-rfisvceret-addr",
            "MP+dmb+ctrlelr",
            "MP.EL1+dmb+dataesrsvc",
            "MP.EL1+dmb+ctrlvbarsvc",
            "MP.EL1+dmb+dataelrsvc",
        ],
        A,
    ));
    let mut out = expect_all(&cases);
    let opts = CheckOptions::default();
    for (path, t) in common::corpus() {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let get =
            |v: &str| check(&t, &ModelConfig::from_variant(v).unwrap(), &opts).map(|v| v.outcome);
        let Ok(default) = get("default") else {
            out.push(format!("{name}: error"));
            continue;
        };
        if common::sc_interpretable(&t) {
            for v in ["exs", "exs_eis", "exs_eos", "exs_eis_eos"] {
                if get(v).ok() != Some(default) {
                    out.push(format!("{name} changes under {v}"));
                }
            }
        }
        for v in ["sea_r", "sea_w", "sea_rw"] {
            if get(v).ok() == Some(A) && default == F {
                out.push(format!("{name} allowed under {v} only"));
            }
        }
    }
    out
}

fn criterion_4() -> Vec<String> {
    expect_all(&[
        ("MP+dmb.sy+fault", "default", F),
        ("MP+dmb.sy+fault", "no_ets2", A),
        ("MP+dmb.sy+int", "default", A),
        ("MP+dmb.sy+int", "no_ets2", A),
    ])
}

fn criterion_5() -> Vec<String> {
    let mut cases = with(
        "default",
        &[
            "MPviaSGI",
            "LBviaSGI",
            "SviaSGI",
            "SBviaSGI",
            "RCU-MP",
            "SBVerona",
            "CoRR0forSGIs",
            "IRIWforSGIs",
            "WRCforSGIs",
            "MP+SGISlowPropagation",
            "R+SGISlowPropagation",
            "SBonlySGIs",
        ],
        A,
    );
    cases.extend(with(
        "default",
        &[
            "MPviaSGIEIOmode0sequence",
            "MPviaSGIEIOmode1sequence",
            "RCU-MP+dsb.st",
            "SBVerona+dsb.st",
            "LBonlySGIs",
        ],
        F,
    ));
    // Each listed step removed, the trailing ISB excepted.
    for step in ["dsb.st", "iar", "and", "dsb.sy", "eoir", "isb"] {
        for mode in ["0", "1"] {
            cases.push((
                format!("MPviaSGIEIOmode{mode}sequence-{step}"),
                "default",
                A,
            ));
        }
    }
    cases.extend(with(
        "default",
        &[
            "MPviaSGIEIOmode1sequence-dsb.sy2",
            "MPviaSGIEIOmode1sequence-dir",
        ],
        A,
    ));
    expect_all(&cases)
}

fn criterion_6() -> Vec<String> {
    let mut cases = with(
        "default",
        &[
            "SGITakenTwice",
            "SGITakenTwice+IAR",
            "SGITakenTwice+EOIR",
            "SGITakenTwice+DIR",
            "SGITakenTwice+EOIR-DSB-IAR",
            "SGITakenTwice+IAR-EOIR",
            "SGITakenTwice+IAR-DSB-DIR+eoimode0",
            "SGIconflate+SameINTIDSameSrcPEs",
            "SGIconflate+SameINTIDDifferentSrcPEs",
        ],
        A,
    );
    cases.extend(with(
        "default",
        &[
            "SGITakenTwice+IAR-DSB-EOIR+eoimode0",
            "SGITakenTwice+IAR-DSB-EOIR-DSB-DIR+eoimode1",
            "SGITakenTwice+IAR-DSB-DIR+eoimode1",
            "SGIconflate+DifferentINTIDSameSrcPEs",
        ],
        F,
    ));
    expect_all(&cases)
}

fn criterion_7() -> Vec<String> {
    let mut cases = with(
        "default",
        &["MP+dmb+addr", "SB+dmb+dmb", "LB+addr+addr", "CoRR"],
        F,
    );
    cases.extend(with("default", &["MP+po+po", "LB+po+po", "SB+po+po"], A));
    expect_all(&cases)
}

fn criterion_8() -> Vec<String> {
    let mut out = Vec::new();
    for law in common::relation_law_violations(7, 1000) {
        out.push(format!("relation law: {law}"));
    }
    let bad = common::closure_disagreements(11, 600);
    if bad > 0 {
        out.push(format!("closure/acyclicity: {bad} of 600 graphs disagree"));
    }
    let bad = common::gic_disagreements(13, 600);
    if bad > 0 {
        out.push(format!("GIC feasibility: {bad} of 600 traces disagree"));
    }
    let (mut counted, mut sc) = (0, 0);
    for (path, t) in common::corpus() {
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        if !t.uses_sgis() && common::max_memory_events(&t) <= 8 {
            let v = check(&t, &ModelConfig::default(), &CheckOptions::default()).unwrap();
            let want = common::naive_candidate_count(&t);
            if v.candidates_total != want {
                out.push(format!(
                    "{name}: {} candidates, naive {want}",
                    v.candidates_total
                ));
            }
            counted += 1;
        }
        if common::sc_interpretable(&t) {
            let model = common::model_outcomes(&t, &ModelConfig::default());
            if !common::sc_outcomes(&t).is_subset(&model) {
                out.push(format!("{name}: SC outcome not allowed"));
            }
            sc += 1;
        }
    }
    if counted < 30 || sc < 10 {
        out.push(format!("too few oracle tests: {counted} counted, {sc} SC"));
    }
    out
}

/// Corpus under the five-variant matrix in under 60 s, no test over 1 s.
/// Debug builds are slower, so this is the stricter check.
fn runtime_budget() -> Vec<String> {
    let start = Instant::now();
    let mut out = Vec::new();
    for (path, t) in common::corpus() {
        for v in ["default", "sea_r", "sea_w", "sea_rw", "exs"] {
            let s = Instant::now();
            let _ = check(
                &t,
                &ModelConfig::from_variant(v).unwrap(),
                &CheckOptions::default(),
            );
            if s.elapsed() > Duration::from_secs(1) {
                out.push(format!("{} [{v}] took {:?}", path.display(), s.elapsed()));
            }
        }
    }
    if start.elapsed() > Duration::from_secs(60) {
        out.push(format!("matrix took {:?}", start.elapsed()));
    }
    out
}

type Criterion = fn() -> Vec<String>;

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion); 9] = [
        ("1 exception-boundary verdicts", criterion_1),
        ("2 system-register verdicts", criterion_2),
        ("3 variant matrix and monotonicity", criterion_3),
        ("4 ETS2 fault ordering", criterion_4),
        ("5 SGI corpus", criterion_5),
        ("6 GIC lifecycle and conflation", criterion_6),
        ("7 baseline regression", criterion_7),
        ("8 property suites", criterion_8),
        ("runtime budget", runtime_budget),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let problems = f();
        if problems.is_empty() {
            println!("PASS criterion {name}");
        } else {
            println!("FAIL criterion {name}: {}", problems.join("; "));
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
