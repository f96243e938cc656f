// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Axiomatic checking of litmus tests with precise exceptions and
//! software-generated interrupts.
//!
//! A test is parsed ([`litmus`]), each thread is run under every choice of
//! read values and interrupt takes ([`isa`]), threads are combined into
//! candidate executions ([`enumerate`]), and each candidate is judged by the
//! model ([`model`], [`gic`]) using the relation algebra in [`relation`].
//! [`harness`] ties these together.

pub mod enumerate;
pub mod gic;
pub mod harness;
pub mod isa;
pub mod litmus;
pub mod model;
pub mod relation;

pub use enumerate::{
    check_final, enumerate_candidates, CandidateExecution, EnumError, EnumOptions,
};
pub use harness::{check, load_test, run_suite, CheckOptions, HarnessError, Outcome, Verdict};
pub use litmus::{parse_test, LitmusTest, ParseError};
pub use model::{consistent, AxiomReport, ModelConfig};
pub use relation::{EventId, EventSet, Relation};
