// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Interrupt controller: the `ob` extension for GIC events and the per-INTID
//! state machine that a candidate's interrupt traffic must be able to drive.

use std::collections::HashSet;

use serde::Serialize;

use crate::enumerate::CandidateExecution;
use crate::isa::{EventKind, ExceptionCause, GicOp};
use crate::litmus::{SysReg, ThreadId};
use crate::model::EventClasses;
use crate::relation::{EventId, EventSet, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum IntidState {
    Inactive,
    Pending,
    Active,
    ActivePending,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GicStep {
    /// A generated SGI reaches the target's redistributor.
    Assert,
    /// The PE takes the interrupt.
    Take,
    Ack,
    Drop,
    Deact,
}

impl IntidState {
    /// Successor state, or `None` if the step is not enabled.
    pub fn step(self, s: GicStep) -> Option<IntidState> {
        use IntidState::*;
        Some(match (s, self) {
            // A second assertion while pending is absorbed.
            (GicStep::Assert, Inactive) => Pending,
            (GicStep::Assert, Active) => ActivePending,
            (GicStep::Assert, st) => st,
            // An interrupt that was never deactivated is delivered again.
            (GicStep::Take, Inactive) => return None,
            (GicStep::Take, st) => st,
            (GicStep::Ack, Pending) => Active,
            (GicStep::Ack, st) => st,
            (GicStep::Drop, st) => st,
            (GicStep::Deact, Active) => Inactive,
            (GicStep::Deact, ActivePending) => Pending,
            (GicStep::Deact, st) => st,
        })
    }
}

/// Largest INTID tracked by the state machine; SGIs use 0-15.
pub const MAX_INTID: usize = 16;

/// Whether a Deactivate event changes state: with `EOImode` 0 only the
/// EOIR write deactivates, with 1 only the DIR write.
fn effective_deactivate(c: &CandidateExecution, e: EventId, t: ThreadId) -> bool {
    let via_dir = (0..c.events.len()).any(|m| {
        c.iio.contains(m, e)
            && matches!(
                c.events[m].kind,
                EventKind::Msr {
                    sysreg: SysReg::Dir,
                    ..
                }
            )
    });
    via_dir == (c.eoimode.get(t).copied().unwrap_or(0) == 1)
}

/// GIC steps of thread `t` in a candidate: assertions of SGIs targeting it,
/// its SGI takes and its own acknowledge, drop and deactivate events.
pub fn thread_steps(c: &CandidateExecution, t: ThreadId) -> Vec<(EventId, GicStep, u32)> {
    let mut out = Vec::new();
    for (i, e) in c.events.iter().enumerate() {
        match &e.kind {
            EventKind::Gic(GicOp::Generate { intid, targets }) if targets.contains(&t) => {
                out.push((i, GicStep::Assert, *intid));
            }
            EventKind::Gic(op) if e.thread == Some(t) => {
                let s = match op {
                    GicOp::Generate { .. } => continue,
                    GicOp::Acknowledge { .. } => GicStep::Ack,
                    GicOp::Drop { .. } => GicStep::Drop,
                    GicOp::Deactivate { .. } if effective_deactivate(c, i, t) => GicStep::Deact,
                    GicOp::Deactivate { .. } => continue,
                };
                out.push((i, s, op.intid()));
            }
            EventKind::TakeException(ExceptionCause::Irq {
                external: false,
                intid: Some(id),
            }) if e.thread == Some(t) => {
                out.push((i, GicStep::Take, *id));
            }
            _ => {}
        }
    }
    out
}

/// A linearisation of one thread's GIC steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GicRun {
    pub thread: ThreadId,
    pub order: Vec<EventId>,
}

/// Finds an order of `steps` that respects `ob` and that the state machine
/// accepts from all-inactive.
pub fn linearise(steps: &[(EventId, GicStep, u32)], ob: &Relation) -> Option<Vec<EventId>> {
    let n = steps.len();
    assert!(n <= 64, "too many GIC steps");
    let preds: Vec<u64> = (0..n)
        .map(|j| {
            (0..n)
                .filter(|&i| ob.contains(steps[i].0, steps[j].0))
                .fold(0u64, |m, i| m | 1 << i)
        })
        .collect();
    let mut seen = HashSet::new();
    let mut order = Vec::with_capacity(n);
    let states = [IntidState::Inactive; MAX_INTID];
    fn go(
        steps: &[(EventId, GicStep, u32)],
        preds: &[u64],
        done: u64,
        states: [IntidState; MAX_INTID],
        seen: &mut HashSet<(u64, [IntidState; MAX_INTID])>,
        order: &mut Vec<EventId>,
    ) -> bool {
        if order.len() == steps.len() {
            return true;
        }
        if !seen.insert((done, states)) {
            return false;
        }
        for (j, &(e, s, id)) in steps.iter().enumerate() {
            if done & (1 << j) != 0 || preds[j] & !done != 0 {
                continue;
            }
            let slot = (id as usize).min(MAX_INTID - 1);
            let Some(next) = states[slot].step(s) else {
                continue;
            };
            let mut st = states;
            st[slot] = next;
            order.push(e);
            if go(steps, preds, done | 1 << j, st, seen, order) {
                return true;
            }
            order.pop();
        }
        false
    }
    go(steps, &preds, 0, states, &mut seen, &mut order).then_some(order)
}

/// One run per thread with GIC steps, or `None` if some thread's steps
/// admit no accepted order.
pub fn feasible_witness(c: &CandidateExecution, ob: &Relation) -> Option<Vec<GicRun>> {
    let mut runs = Vec::new();
    for t in 0..c.nthreads {
        let steps = thread_steps(c, t);
        if steps.is_empty() {
            continue;
        }
        // A deactivation is visible to every later take on its own PE.
        let mut ob = ob.clone();
        for &(d, _, _) in steps.iter().filter(|s| s.1 == GicStep::Deact) {
            for &(tk, ts, _) in &steps {
                if ts == GicStep::Take && c.po_full.contains(d, tk) {
                    ob.insert(d, tk);
                }
            }
        }
        let order = linearise(&steps, &ob)?;
        runs.push(GicRun { thread: t, order });
    }
    Some(runs)
}

fn write_like(c: &CandidateExecution, i: EventId) -> bool {
    match &c.events[i].kind {
        EventKind::Write { .. } | EventKind::Msr { .. } => true,
        EventKind::Gic(op) => !matches!(op, GicOp::Acknowledge { .. }),
        _ => false,
    }
}

fn read_like(c: &CandidateExecution, i: EventId) -> bool {
    matches!(
        &c.events[i].kind,
        EventKind::Read { .. } | EventKind::Mrs { .. } | EventKind::Gic(GicOp::Acknowledge { .. })
    )
}

/// Ordering contributed by GIC events: the interrupt relation, DSBs
/// between a GIC event and anything else in full program order, and
/// instruction-to-GIC-event edges.
pub fn gic_ob_extension(c: &CandidateExecution, k: &EventClasses) -> Relation {
    let n = c.events.len();
    let pof = &c.po_full;
    let wl = EventSet::from_iter(n, (0..n).filter(|&i| write_like(c, i)));
    let rl = EventSet::from_iter(n, (0..n).filter(|&i| read_like(c, i)));
    let through = |up: &EventSet, dsb: &EventSet| {
        Relation::identity_on(up)
            .compose(pof)
            .compose(&Relation::identity_on(dsb))
            .compose(pof)
    };
    let via_dsb = through(&k.all, &k.dsb_sy)
        .union(&through(&wl, &k.dsb_st))
        .union(&through(&rl, &k.dsb_ld));
    let gic = &k.gic;
    let b = via_dsb
        .range_restrict(gic)
        .union(&via_dsb.domain_restrict(gic));
    c.interrupt.union(&b).union(&c.iio)
}
