// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Semantic checks on parsed tests.

use serde::Serialize;

use super::*;
use crate::model::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    UnknownVariant(String),
    UndeclaredLocation(String),
    NoSuchThread(ThreadId),
    /// A thread can raise an exception but has no handler.
    MissingHandler(ThreadId),
    /// Exceptions raised from handler code are not modelled.
    NestedException(ThreadId),
    HandlerWithoutEret(ThreadId),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: DiagnosticKind,
    pub message: String,
}

fn diag(severity: Severity, kind: DiagnosticKind, message: String) -> Diagnostic {
    Diagnostic {
        severity,
        kind,
        message,
    }
}

/// Returns all diagnostics; an empty list means the test is clean.
pub fn validate_test(t: &LitmusTest) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let locs = t.locations();
    let nthreads = t.threads.len();

    for k in t.expectations.keys() {
        if let Err(e) = ModelConfig::from_variant(k) {
            out.push(diag(
                Severity::Error,
                DiagnosticKind::UnknownVariant(k.clone()),
                e.to_string(),
            ));
        }
    }
    for a in t.final_cond.expr.atoms() {
        match a {
            Atom::Mem { loc, .. } if !locs.contains(loc) => out.push(diag(
                Severity::Error,
                DiagnosticKind::UndeclaredLocation(loc.clone()),
                format!("final condition mentions undeclared location `{loc}`"),
            )),
            Atom::Reg { thread, .. } if *thread >= nthreads => out.push(diag(
                Severity::Error,
                DiagnosticKind::NoSuchThread(*thread),
                format!("final condition mentions missing thread {thread}"),
            )),
            _ => {}
        }
    }
    let init_threads = t
        .init
        .registers
        .iter()
        .map(|r| r.thread)
        .chain(t.init.threads.keys().copied());
    for tid in init_threads {
        if tid >= nthreads {
            out.push(diag(
                Severity::Error,
                DiagnosticKind::NoSuchThread(tid),
                format!("init mentions missing thread {tid}"),
            ));
        }
    }
    for (tid, p) in t.threads.iter().enumerate() {
        let raises = p
            .instrs
            .iter()
            .any(|i| matches!(i, Instruction::Svc(_)) || i.is_faulting());
        let interrupted = t.injections.iter().any(|j| j.thread == tid);
        if (raises || interrupted) && !t.handlers.contains_key(&tid) {
            out.push(diag(
                Severity::Error,
                DiagnosticKind::MissingHandler(tid),
                format!("thread {tid} can take an exception but has no handler"),
            ));
        }
    }
    for (tid, h) in &t.handlers {
        if h.instrs
            .iter()
            .any(|i| matches!(i, Instruction::Svc(_)) || i.is_faulting())
        {
            out.push(diag(
                Severity::Error,
                DiagnosticKind::NestedException(*tid),
                format!("handler {tid} raises an exception"),
            ));
        }
        if !h.instrs.iter().any(|i| matches!(i, Instruction::Eret)) {
            out.push(diag(
                Severity::Warning,
                DiagnosticKind::HandlerWithoutEret(*tid),
                format!("handler {tid} never returns"),
            ));
        }
    }
    out
}
