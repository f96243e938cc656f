// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Inputs shared by the benchmarks.

use std::path::PathBuf;

/// The test corpus at the workspace root.
pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Reads one corpus test by file stem.
pub fn corpus_test(stem: &str) -> exmm::LitmusTest {
    let path = corpus_dir().join(format!("{stem}.elitmus"));
    let src = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    exmm::load_test(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
