// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Candidate executions: per-thread traces over a value domain closed under
//! the writes the program can perform, combined with every reads-from,
//! coherence and interrupt-delivery choice.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::isa::{
    elaborate_thread, Choices, ElabError, Event, EventKind, ExceptionCause, GicOp, ThreadParams,
    ThreadTrace,
};
use crate::litmus::{Atom, LitmusTest, ThreadId};
use crate::relation::{EventId, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EnumOptions {
    pub max_candidates: usize,
    /// SGI takes per thread.
    pub max_takes: usize,
    pub max_steps: usize,
    /// Used for threads whose `EOIMode` is not set by the test.
    pub eoimode: u8,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            max_candidates: 1_000_000,
            max_takes: 2,
            max_steps: 256,
            eoimode: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error(transparent)]
    Elab(#[from] ElabError),
    #[error("more than {limit} candidate executions")]
    TooManyCandidates { limit: usize },
    #[error("value domain did not converge")]
    Diverged,
}

/// A candidate execution. Initial writes come first, one per location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateExecution {
    pub events: Vec<Event>,
    pub nthreads: usize,
    pub locations: Vec<String>,
    /// Full program order, GIC events included.
    pub po_full: Relation,
    /// Program order over non-GIC events.
    pub po: Relation,
    pub addr: Relation,
    pub data: Relation,
    pub ctrl: Relation,
    pub rmw: Relation,
    pub iio: Relation,
    pub rf: Relation,
    pub co: Relation,
    /// Generate event to the SGI take it causes.
    pub interrupt: Relation,
    /// Final register values per thread.
    pub regs: Vec<Vec<u64>>,
    /// Effective `EOImode` per thread.
    pub eoimode: Vec<u8>,
}

impl CandidateExecution {
    /// Final value of each location: the coherence-last write.
    pub fn final_memory(&self) -> Vec<u64> {
        (0..self.locations.len())
            .map(|l| {
                let last = self
                    .events
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.is_write() && e.loc() == Some(l))
                    .find(|(i, _)| self.co.successors(*i).next().is_none());
                last.and_then(|(_, e)| e.value()).unwrap_or(0)
            })
            .collect()
    }

    pub fn eval_atom(&self, a: &Atom) -> bool {
        match a {
            Atom::Reg { thread, reg, value } => self
                .regs
                .get(*thread)
                .is_some_and(|r| r[reg.index()] == *value),
            Atom::Mem { loc, value } => {
                let mem = self.final_memory();
                self.locations
                    .iter()
                    .position(|l| l == loc)
                    .is_some_and(|i| mem[i] == *value)
            }
        }
    }
}

/// Whether the candidate's final state satisfies the test's condition.
pub fn check_final(test: &LitmusTest, c: &CandidateExecution) -> bool {
    test.final_cond.expr.eval(&|a| c.eval_atom(a))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EnumStats {
    pub candidates: usize,
    pub thread_traces: usize,
}

/// Replays a recorded prefix of choices and extends it with first options.
struct Tape<'a> {
    tape: &'a mut Vec<(usize, usize)>,
    pos: usize,
    values: &'a [Vec<u64>],
    intids: &'a [u32],
}

impl Tape<'_> {
    fn choose(&mut self, n: usize) -> usize {
        let c = if self.pos < self.tape.len() {
            self.tape[self.pos].0
        } else {
            self.tape.push((0, n));
            0
        };
        self.pos += 1;
        c
    }
}

impl Choices for Tape<'_> {
    fn read_value(&mut self, _: ThreadId, loc: usize) -> u64 {
        let dom = &self.values[loc];
        dom[self.choose(dom.len())]
    }

    fn take_interrupt(&mut self, _: ThreadId, _: usize) -> Option<u32> {
        if self.intids.is_empty() {
            return None;
        }
        match self.choose(self.intids.len() + 1) {
            0 => None,
            i => Some(self.intids[i - 1]),
        }
    }

    fn exclusive_succeeds(&mut self, _: ThreadId) -> bool {
        self.choose(2) == 0
    }
}

fn advance(tape: &mut Vec<(usize, usize)>) -> bool {
    while let Some((c, n)) = tape.pop() {
        if c + 1 < n {
            tape.push((c + 1, n));
            return true;
        }
    }
    false
}

fn all_traces(
    test: &LitmusTest,
    tid: ThreadId,
    params: ThreadParams,
    values: &[Vec<u64>],
    intids: &[u32],
) -> Result<Vec<ThreadTrace>, ElabError> {
    let mut out: Vec<ThreadTrace> = Vec::new();
    let mut tape = Vec::new();
    loop {
        let mut ch = Tape {
            tape: &mut tape,
            pos: 0,
            values,
            intids,
        };
        let t = elaborate_thread(test, tid, params, &mut ch)?;
        if !out.contains(&t) {
            out.push(t);
        }
        if !advance(&mut tape) {
            return Ok(out);
        }
    }
}

const MAX_ROUNDS: usize = 16;

/// Stands in for INTIDs not yet discovered while exploring handlers that
/// only run when interrupted.
const PLACEHOLDER_INTID: u32 = u32::MAX;

fn traces_round(
    test: &LitmusTest,
    opts: &EnumOptions,
    values: &[BTreeSet<u64>],
    intids: &BTreeSet<u32>,
    targets: &BTreeSet<ThreadId>,
) -> Result<Vec<Vec<ThreadTrace>>, ElabError> {
    let vals: Vec<Vec<u64>> = values.iter().map(|s| s.iter().copied().collect()).collect();
    let ids: Vec<u32> = intids.iter().copied().collect();
    (0..test.threads.len())
        .map(|tid| {
            let params = ThreadParams {
                eoimode: thread_eoimode(test, opts, tid),
                interruptible: targets.contains(&tid),
                max_takes: opts.max_takes,
                max_steps: opts.max_steps,
            };
            all_traces(test, tid, params, &vals, &ids)
        })
        .collect()
}

fn thread_eoimode(test: &LitmusTest, opts: &EnumOptions, tid: ThreadId) -> u8 {
    test.thread_config(tid).eoimode.unwrap_or(opts.eoimode)
}

/// All traces of every thread, over value and INTID domains closed under
/// what the traces themselves write and generate.
pub fn thread_traces(
    test: &LitmusTest,
    opts: &EnumOptions,
) -> Result<Vec<Vec<ThreadTrace>>, EnumError> {
    let locs = test.locations();
    let mut values: Vec<BTreeSet<u64>> = locs
        .iter()
        .map(|l| {
            let init = test
                .init
                .memory
                .iter()
                .find(|(m, _)| m == l)
                .map_or(0, |(_, v)| *v);
            BTreeSet::from([init])
        })
        .collect();
    let mut intids: BTreeSet<u32> = BTreeSet::new();
    let mut targets: BTreeSet<ThreadId> = BTreeSet::new();
    // Handlers may generate the very SGIs that make them run, so exploration
    // interrupts every handler thread with a placeholder INTID.
    let sgis = test.uses_sgis();
    let handler_threads: BTreeSet<ThreadId> = test.handlers.keys().copied().collect();
    for _ in 0..MAX_ROUNDS {
        let (ex_ids, ex_targets) = if sgis {
            let mut ids = intids.clone();
            ids.insert(PLACEHOLDER_INTID);
            (ids, handler_threads.clone())
        } else {
            (intids.clone(), targets.clone())
        };
        let traces = traces_round(test, opts, &values, &ex_ids, &ex_targets)?;
        let (mut nv, mut ni, mut nt) = (values.clone(), intids.clone(), targets.clone());
        for e in traces.iter().flatten().flat_map(|t| &t.events) {
            match &e.kind {
                EventKind::Write { loc, value, .. } => {
                    nv[*loc].insert(*value);
                }
                EventKind::Gic(GicOp::Generate { intid, targets }) => {
                    ni.insert(*intid);
                    nt.extend(
                        targets
                            .iter()
                            .copied()
                            .filter(|t| test.handlers.contains_key(t)),
                    );
                }
                _ => {}
            }
        }
        if nv == values && ni == intids && nt == targets {
            if !sgis {
                return Ok(traces);
            }
            return Ok(traces_round(test, opts, &values, &intids, &targets)?);
        }
        (values, intids, targets) = (nv, ni, nt);
    }
    Err(EnumError::Diverged)
}

/// Thread-level part of a candidate shared by all its rf/co choices.
fn assemble(test: &LitmusTest, opts: &EnumOptions, combo: &[&ThreadTrace]) -> CandidateExecution {
    let locs = test.locations();
    let mut events: Vec<Event> = locs
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let value = test
                .init
                .memory
                .iter()
                .find(|(m, _)| m == l)
                .map_or(0, |(_, v)| *v);
            Event {
                thread: None,
                kind: EventKind::Write {
                    loc: i,
                    value,
                    release: false,
                    exclusive: false,
                },
                in_handler: false,
                pc: None,
            }
        })
        .collect();
    let mut offsets = Vec::new();
    for t in combo {
        offsets.push(events.len());
        events.extend(t.events.iter().cloned());
    }
    let n = events.len();
    let mut po_full = Relation::empty(n);
    let mut po = Relation::empty(n);
    let (mut addr, mut data, mut ctrl, mut rmw, mut iio) = (
        Relation::empty(n),
        Relation::empty(n),
        Relation::empty(n),
        Relation::empty(n),
        Relation::empty(n),
    );
    for (t, off) in combo.iter().zip(&offsets) {
        let len = t.events.len();
        for i in 0..len {
            for j in i + 1..len {
                po_full.insert(off + i, off + j);
                if !t.events[i].is_gic() && !t.events[j].is_gic() {
                    po.insert(off + i, off + j);
                }
            }
        }
        for (rel, pairs) in [
            (&mut addr, &t.addr),
            (&mut data, &t.data),
            (&mut ctrl, &t.ctrl),
            (&mut rmw, &t.rmw),
            (&mut iio, &t.iio),
        ] {
            for &(a, b) in pairs {
                rel.insert(off + a, off + b);
            }
        }
    }
    CandidateExecution {
        events,
        nthreads: combo.len(),
        locations: locs,
        po_full,
        po,
        addr,
        data,
        ctrl,
        rmw,
        iio,
        rf: Relation::empty(n),
        co: Relation::empty(n),
        interrupt: Relation::empty(n),
        regs: combo.iter().map(|t| t.regs.clone()).collect(),
        eoimode: (0..combo.len())
            .map(|t| thread_eoimode(test, opts, t))
            .collect(),
    }
}

/// Steps an odometer with per-digit bounds; false when it wraps.
fn step_odometer(digits: &mut [usize], bounds: &[usize]) -> bool {
    for (d, b) in digits.iter_mut().zip(bounds).rev() {
        *d += 1;
        if *d < *b {
            return true;
        }
        *d = 0;
    }
    false
}

fn permutations(items: &[EventId]) -> Vec<Vec<EventId>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// Interrupt relations: each SGI take is caused by a non-empty set of
/// compatible Generate events, and every Generate reaches every target with
/// a handler.
fn interrupt_choices(test: &LitmusTest, c: &CandidateExecution) -> Vec<Relation> {
    let n = c.events.len();
    let gens: Vec<(EventId, u32, &Vec<ThreadId>)> = c
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match &e.kind {
            EventKind::Gic(GicOp::Generate { intid, targets }) => Some((i, *intid, targets)),
            _ => None,
        })
        .collect();
    let takes: Vec<(EventId, Vec<EventId>)> = c
        .events
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match e.kind {
            EventKind::TakeException(ExceptionCause::Irq {
                external: false,
                intid: Some(id),
            }) => {
                let t = e.thread.expect("takes belong to threads");
                let compat = gens
                    .iter()
                    .filter(|(_, gi, tg)| *gi == id && tg.contains(&t))
                    .map(|g| g.0)
                    .collect();
                Some((i, compat))
            }
            _ => None,
        })
        .collect();
    if takes.iter().any(|(_, g)| g.is_empty()) {
        return Vec::new();
    }
    let bounds: Vec<usize> = takes.iter().map(|(_, g)| (1usize << g.len()) - 1).collect();
    let mut digits = vec![0; takes.len()];
    let mut out = Vec::new();
    loop {
        let mut rel = Relation::empty(n);
        for ((take, compat), d) in takes.iter().zip(&digits) {
            let mask = d + 1;
            for (k, g) in compat.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    rel.insert(*g, *take);
                }
            }
        }
        let covered = gens.iter().all(|(g, _, targets)| {
            targets
                .iter()
                .filter(|t| test.handlers.contains_key(t))
                .all(|t| rel.successors(*g).any(|e| c.events[e].thread == Some(*t)))
        });
        if covered {
            out.push(rel);
        }
        if !step_odometer(&mut digits, &bounds) {
            return out;
        }
    }
}

/// Calls `f` on every candidate execution of `test`.
pub fn enumerate_candidates(
    test: &LitmusTest,
    opts: &EnumOptions,
    mut f: impl FnMut(&CandidateExecution),
) -> Result<EnumStats, EnumError> {
    let traces = thread_traces(test, opts)?;
    let mut stats = EnumStats {
        candidates: 0,
        thread_traces: traces.iter().map(Vec::len).sum(),
    };
    let bounds: Vec<usize> = traces.iter().map(Vec::len).collect();
    let mut digits = vec![0; traces.len()];
    loop {
        let combo: Vec<&ThreadTrace> = traces.iter().zip(&digits).map(|(t, d)| &t[*d]).collect();
        let mut base = assemble(test, opts, &combo);
        let irqs = interrupt_choices(test, &base);
        if !irqs.is_empty() {
            let n = base.events.len();
            let reads: Vec<EventId> = (0..n).filter(|&i| base.events[i].is_read()).collect();
            let sources: Vec<Vec<EventId>> = reads
                .iter()
                .map(|&r| {
                    (0..n)
                        .filter(|&w| {
                            base.events[w].is_write()
                                && base.events[w].loc() == base.events[r].loc()
                                && base.events[w].value() == base.events[r].value()
                        })
                        .collect()
                })
                .collect();
            if sources.iter().all(|s| !s.is_empty()) {
                let co_orders: Vec<Vec<Vec<EventId>>> = (0..base.locations.len())
                    .map(|l| {
                        let ws: Vec<EventId> = (base.locations.len()..n)
                            .filter(|&w| {
                                base.events[w].is_write() && base.events[w].loc() == Some(l)
                            })
                            .collect();
                        permutations(&ws)
                            .into_iter()
                            .map(|p| std::iter::once(l).chain(p).collect())
                            .collect()
                    })
                    .collect();
                let rf_bounds: Vec<usize> = sources.iter().map(Vec::len).collect();
                let co_bounds: Vec<usize> = co_orders.iter().map(Vec::len).collect();
                let mut rf_d = vec![0; reads.len()];
                loop {
                    base.rf = Relation::from_pairs(
                        n,
                        reads
                            .iter()
                            .zip(&rf_d)
                            .zip(&sources)
                            .map(|((r, d), s)| (s[*d], *r)),
                    );
                    let mut co_d = vec![0; co_orders.len()];
                    loop {
                        let mut co = Relation::empty(n);
                        for (orders, d) in co_orders.iter().zip(&co_d) {
                            let o = &orders[*d];
                            for i in 0..o.len() {
                                for j in i + 1..o.len() {
                                    co.insert(o[i], o[j]);
                                }
                            }
                        }
                        base.co = co;
                        for irq in &irqs {
                            stats.candidates += 1;
                            if stats.candidates > opts.max_candidates {
                                return Err(EnumError::TooManyCandidates {
                                    limit: opts.max_candidates,
                                });
                            }
                            base.interrupt = irq.clone();
                            f(&base);
                        }
                        if !step_odometer(&mut co_d, &co_bounds) {
                            break;
                        }
                    }
                    if !step_odometer(&mut rf_d, &rf_bounds) {
                        break;
                    }
                }
            }
        }
        if !step_odometer(&mut digits, &bounds) {
            return Ok(stats);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::litmus::parse_test;

    fn all(src: &str) -> (LitmusTest, Vec<CandidateExecution>) {
        let t = parse_test(src).unwrap();
        let mut out = Vec::new();
        let stats =
            enumerate_candidates(&t, &EnumOptions::default(), |c| out.push(c.clone())).unwrap();
        assert_eq!(stats.candidates, out.len());
        (t, out)
    }

    #[test]
    fn message_passing_has_four_candidates() {
        let (t, cs) = all(include_str!("../../../corpus/MP+po+po.elitmus"));
        assert_eq!(cs.len(), 4);
        assert_eq!(cs.iter().filter(|c| check_final(&t, c)).count(), 1);
        for c in &cs {
            // One initial write per location, then the threads' events.
            assert_eq!(c.co.len(), 2);
            assert_eq!(c.rf.len(), 2);
        }
    }

    #[test]
    fn own_write_or_initial_value() {
        let (_, cs) = all("name: t\ninit: x=0; 0:X1=x\nthread 0:\n  MOV X0,#1\n  STR X0,[X1]\n  LDR X2,[X1]\nfinal exists:\n");
        assert_eq!(cs.len(), 2);
        let read_values: BTreeSet<u64> = cs.iter().map(|c| c.regs[0][2]).collect();
        assert_eq!(read_values, BTreeSet::from([0, 1]));
    }

    #[test]
    fn empty_condition_holds_everywhere() {
        let (t, cs) = all("name: t\nthread 0:\n  NOP\nfinal exists:\n");
        assert_eq!(cs.len(), 1);
        assert!(check_final(&t, &cs[0]));
    }

    #[test]
    fn same_intid_generates_may_share_a_take() {
        let (_, cs) = all(include_str!(
            "../../../corpus/SGIconflate+SameINTIDSameSrcPEs.elitmus"
        ));
        let shared = cs.iter().any(|c| {
            let takes: BTreeSet<EventId> = c.interrupt.pairs().map(|(_, t)| t).collect();
            takes.len() == 1 && c.interrupt.len() == 2
        });
        assert!(shared);
    }

    #[test]
    fn every_take_has_a_cause_and_every_generate_is_taken() {
        let (_, cs) = all(include_str!(
            "../../../corpus/SGIconflate+DifferentINTIDSameSrcPEs.elitmus"
        ));
        assert!(!cs.is_empty());
        for c in &cs {
            let takes = c
                .events
                .iter()
                .enumerate()
                .filter(|(_, e)| {
                    matches!(e.kind, EventKind::TakeException(ExceptionCause::Irq { .. }))
                })
                .count();
            assert_eq!(takes, 2);
            assert_eq!(c.interrupt.range().len(), takes);
        }
    }

    #[test]
    fn handler_generates_are_discovered() {
        let t = parse_test(include_str!("../../../corpus/LBonlySGIs.elitmus")).unwrap();
        let traces = thread_traces(&t, &EnumOptions::default()).unwrap();
        for ts in &traces {
            assert!(ts.iter().any(|tr| tr
                .events
                .iter()
                .any(|e| matches!(e.kind, EventKind::Gic(GicOp::Generate { .. })))));
        }
    }

    #[test]
    fn candidate_bound_is_reported() {
        let t = parse_test(include_str!("../../../corpus/SB+po+po.elitmus")).unwrap();
        let opts = EnumOptions {
            max_candidates: 2,
            ..EnumOptions::default()
        };
        assert_eq!(
            enumerate_candidates(&t, &opts, |_| {}),
            Err(EnumError::TooManyCandidates { limit: 2 })
        );
    }

    #[test]
    fn odometer_visits_every_digit_combination() {
        let mut d = vec![0, 0];
        let mut n = 1;
        while step_odometer(&mut d, &[2, 3]) {
            n += 1;
        }
        assert_eq!(n, 6);
        assert_eq!(permutations(&[1, 2, 3]).len(), 6);
    }
}
