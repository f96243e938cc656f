// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

// Independent oracles shared by the property and acceptance tests. None of
// them calls the algorithm it checks.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;

use exmm::enumerate::thread_traces;
use exmm::gic::{linearise, GicStep};
use exmm::isa::{address_location, location_address, EventKind};
use exmm::litmus::{Addressing, Cond, InitValue, Instruction, MemOperand, Operand, StoreKind};
use exmm::model::{check_axioms, derive};
use exmm::{enumerate_candidates, EnumOptions, EventSet, LitmusTest, ModelConfig, Relation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Vec<(PathBuf, LitmusTest)> {
    exmm::harness::suite_files(&corpus_dir())
        .expect("corpus directory")
        .into_iter()
        .map(|p| {
            let t = exmm::harness::load_file(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (p, t)
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- relations -------------------------------------------------------------

pub fn random_pairs(rng: &mut impl Rng, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if rng.gen_bool(density) {
                out.push((a, b));
            }
        }
    }
    out
}

/// Floyd-Warshall reachability on a boolean matrix.
pub fn brute_closure(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in pairs {
        m[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if m[i][k] && m[k][j] {
                    m[i][j] = true;
                }
            }
        }
    }
    m
}

/// Three-colour DFS cycle detection.
pub fn dfs_acyclic(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in pairs {
        adj[a].push(b);
    }
    fn visit(v: usize, adj: &[Vec<usize>], colour: &mut [u8]) -> bool {
        colour[v] = 1;
        for &w in &adj[v] {
            if colour[w] == 1 || (colour[w] == 0 && !visit(w, adj, colour)) {
                return false;
            }
        }
        colour[v] = 2;
        true
    }
    let mut colour = vec![0u8; n];
    (0..n).all(|v| colour[v] != 0 || visit(v, &adj, &mut colour))
}

/// Random graphs of at most 30 nodes: closure and acyclicity against the
/// brute-force versions. Returns the number of disagreements.
pub fn closure_disagreements(seed: u64, cases: usize) -> usize {
    let mut r = rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let n = r.gen_range(1..=30);
        let density = r.gen_range(0.0..0.15);
        let pairs = random_pairs(&mut r, n, density);
        let rel = Relation::from_pairs(n, pairs.iter().copied());
        let tc = rel.transitive_closure();
        let want = brute_closure(n, &pairs);
        let closure_ok = (0..n).all(|a| (0..n).all(|b| tc.contains(a, b) == want[a][b]));
        if !closure_ok || rel.acyclic() != dfs_acyclic(n, &pairs) {
            bad += 1;
        }
    }
    bad
}

fn subset(a: &Relation, b: &Relation) -> bool {
    a.difference(b).is_empty()
}

/// Algebraic laws over random relations on carriers that straddle the
/// 64-bit word boundary. Returns the names of violated laws.
pub fn relation_law_violations(seed: u64, cases: usize) -> Vec<String> {
    let mut r = rng(seed);
    let mut bad = BTreeSet::new();
    for _ in 0..cases {
        let n = r.gen_range(1..=70);
        let d = r.gen_range(0.0..0.08);
        let [a, b, c] = [0, 1, 2].map(|_| Relation::from_pairs(n, random_pairs(&mut r, n, d)));
        let set = EventSet::from_iter(n, (0..n).filter(|_| r.gen_bool(0.5)));
        let id = Relation::identity_on(&EventSet::full(n));
        let mut law = |name: &str, ok: bool| {
            if !ok {
                bad.insert(name.to_string());
            }
        };
        law("union commutes", a.union(&b) == b.union(&a));
        law(
            "union associates",
            a.union(&b).union(&c) == a.union(&b.union(&c)),
        );
        law(
            "intersection distributes",
            a.intersect(&b.union(&c)) == a.intersect(&b).union(&a.intersect(&c)),
        );
        law(
            "composition associates",
            a.compose(&b).compose(&c) == a.compose(&b.compose(&c)),
        );
        law(
            "composition distributes left",
            a.compose(&b.union(&c)) == a.compose(&b).union(&a.compose(&c)),
        );
        law(
            "composition distributes right",
            b.union(&c).compose(&a) == b.compose(&a).union(&c.compose(&a)),
        );
        law(
            "identity is neutral",
            a.compose(&id) == a && id.compose(&a) == a,
        );
        law("inverse is an involution", a.inverse().inverse() == a);
        law(
            "inverse reverses composition",
            a.compose(&b).inverse() == b.inverse().compose(&a.inverse()),
        );
        law(
            "difference splits",
            a.difference(&b).union(&a.intersect(&b)) == a
                && a.difference(&b).intersect(&b).is_empty(),
        );
        let tc = a.transitive_closure();
        law("closure extends", subset(&a, &tc));
        law("closure is transitive", subset(&tc.compose(&tc), &tc));
        law("closure is idempotent", tc.transitive_closure() == tc);
        law("closure is least", subset(&tc, &a.union(&a.compose(&tc))));
        law(
            "acyclic iff closure irreflexive",
            a.acyclic() == tc.irreflexive(),
        );
        law(
            "restriction is composition with identity",
            a.range_restrict(&set) == a.compose(&Relation::identity_on(&set))
                && a.domain_restrict(&set) == Relation::identity_on(&set).compose(&a),
        );
        law(
            "domain of inverse is range",
            a.inverse().domain() == a.range(),
        );
    }
    bad.into_iter().collect()
}

// ---- GIC automaton ---------------------------------------------------------

/// The lifecycle automaton as a table: states Inactive, Pending, Active,
/// ActivePending; `NO` marks a disabled step.
const NO: u8 = 255;
const TABLE: [[u8; 4]; 5] = [
    /* assert */ [1, 1, 3, 3],
    /* take   */ [NO, 1, 2, 3],
    /* ack    */ [0, 2, 2, 3],
    /* drop   */ [0, 1, 2, 3],
    /* deact  */ [0, 1, 0, 1],
];

fn row(s: GicStep) -> usize {
    match s {
        GicStep::Assert => 0,
        GicStep::Take => 1,
        GicStep::Ack => 2,
        GicStep::Drop => 3,
        GicStep::Deact => 4,
    }
}

/// Whether an order of the steps is accepted by the table and respects `ob`.
pub fn order_accepted(
    steps: &[(usize, GicStep, u32)],
    ob: &[(usize, usize)],
    order: &[usize],
) -> bool {
    let pos = |e: usize| order.iter().position(|&x| x == e);
    if order.len() != steps.len() || steps.iter().any(|s| pos(s.0).is_none()) {
        return false;
    }
    if ob.iter().any(|&(a, b)| pos(a) > pos(b)) {
        return false;
    }
    let mut st = [0u8; 16];
    for e in order {
        let (_, s, id) = steps.iter().find(|s| s.0 == *e).expect("step");
        let next = TABLE[row(*s)][st[*id as usize] as usize];
        if next == NO {
            return false;
        }
        st[*id as usize] = next;
    }
    true
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
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

pub fn brute_gic_feasible(steps: &[(usize, GicStep, u32)], ob: &[(usize, usize)]) -> bool {
    let ids: Vec<usize> = steps.iter().map(|s| s.0).collect();
    permutations(&ids)
        .iter()
        .any(|o| order_accepted(steps, ob, o))
}

/// Random step sets with random acyclic ordering constraints: the
/// linearisation search against exhaustive permutation. Returns the number
/// of disagreements (including returned orders the table rejects).
pub fn gic_disagreements(seed: u64, cases: usize) -> usize {
    const KINDS: [GicStep; 5] = [
        GicStep::Assert,
        GicStep::Take,
        GicStep::Ack,
        GicStep::Drop,
        GicStep::Deact,
    ];
    let mut r = rng(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let n = r.gen_range(1..=7);
        let steps: Vec<(usize, GicStep, u32)> = (0..n)
            .map(|i| {
                // Bias towards asserts and takes so feasible cases are common.
                let k = if r.gen_bool(0.5) {
                    KINDS[r.gen_range(0..2)]
                } else {
                    *KINDS.choose(&mut r).unwrap()
                };
                (i, k, r.gen_range(0..3))
            })
            .collect();
        let mut topo: Vec<usize> = (0..n).collect();
        topo.shuffle(&mut r);
        let mut ob = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if r.gen_bool(0.25) {
                    ob.push((topo[i], topo[j]));
                }
            }
        }
        let got = linearise(&steps, &Relation::from_pairs(n, ob.iter().copied()));
        let want = brute_gic_feasible(&steps, &ob);
        let ok = match &got {
            Some(order) => want && order_accepted(&steps, &ob, order),
            None => !want,
        };
        if !ok {
            bad += 1;
        }
    }
    bad
}

// ---- candidates ------------------------------------------------------------

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Memory events of the largest combination of thread traces.
pub fn max_memory_events(test: &LitmusTest) -> usize {
    let traces = thread_traces(test, &EnumOptions::default()).expect("traces");
    traces
        .iter()
        .map(|ts| {
            ts.iter()
                .map(|t| {
                    t.events
                        .iter()
                        .filter(|e| e.is_read() || e.is_write())
                        .count()
                })
                .max()
                .unwrap_or(0)
        })
        .sum()
}

/// Candidate count by formula: for every combination of thread traces, the
/// product of the number of same-value writes each read could read from
/// and the number of coherence orders of each location. Tests without SGIs
/// only.
pub fn naive_candidate_count(test: &LitmusTest) -> usize {
    assert!(!test.uses_sgis());
    let traces = thread_traces(test, &EnumOptions::default()).expect("traces");
    let locs = test.locations();
    let init: Vec<u64> = locs
        .iter()
        .map(|l| {
            test.init
                .memory
                .iter()
                .find(|(m, _)| m == l)
                .map_or(0, |(_, v)| *v)
        })
        .collect();
    let mut total = 0;
    let mut idx = vec![0usize; traces.len()];
    loop {
        let events: Vec<&EventKind> = traces
            .iter()
            .zip(&idx)
            .flat_map(|(ts, i)| ts[*i].events.iter().map(|e| &e.kind))
            .collect();
        let mut writes: Vec<Vec<u64>> = init.iter().map(|v| vec![*v]).collect();
        for e in &events {
            if let EventKind::Write { loc, value, .. } = e {
                writes[*loc].push(*value);
            }
        }
        let mut n = 1usize;
        for e in &events {
            if let EventKind::Read { loc, value, .. } = e {
                n *= writes[*loc].iter().filter(|v| *v == value).count();
            }
        }
        for w in &writes {
            n *= factorial(w.len() - 1);
        }
        total += n;
        let mut k = idx.len();
        loop {
            if k == 0 {
                return total;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < traces[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub type Outcome = (Vec<Vec<u64>>, Vec<u64>);

/// Final register files and memory of every consistent candidate.
pub fn model_outcomes(test: &LitmusTest, cfg: &ModelConfig) -> HashSet<Outcome> {
    let mut out = HashSet::new();
    enumerate_candidates(test, &EnumOptions::default(), |c| {
        if check_axioms(&derive(c, cfg).1).consistent() {
            out.insert((c.regs.clone(), c.final_memory()));
        }
    })
    .expect("enumeration");
    out
}

/// Whether the test only uses instructions the interleaving interpreter
/// understands.
pub fn sc_interpretable(test: &LitmusTest) -> bool {
    test.handlers.is_empty()
        && test.injections.is_empty()
        && test
            .threads
            .iter()
            .flat_map(|p| &p.instrs)
            .all(|i| match i {
                Instruction::Svc(_)
                | Instruction::Eret
                | Instruction::Mrs { .. }
                | Instruction::Msr { .. } => false,
                Instruction::MsrDaif { .. } => false,
                i => !i.is_faulting(),
            })
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct Sc {
    pcs: Vec<usize>,
    regs: Vec<Vec<u64>>,
    flags: Vec<bool>,
    monitor: Vec<Option<usize>>,
    mem: Vec<u64>,
}

fn operand(regs: &[u64], o: &Operand) -> u64 {
    match o {
        Operand::Reg(r) => regs[r.index()],
        Operand::Imm { value, shift } => value << shift,
    }
}

/// Address of an access, applying post-increment.
fn access(regs: &mut [u64], m: &MemOperand) -> u64 {
    match m.mode {
        Addressing::Base(r) => regs[r.index()],
        Addressing::Offset(r, off) => regs[r.index()].wrapping_add(off),
        Addressing::RegOffset(r, x) => regs[r.index()].wrapping_add(regs[x.index()]),
        Addressing::PostIndex(r, off) => {
            let a = regs[r.index()];
            regs[r.index()] = a.wrapping_add(off);
            a
        }
    }
}

/// Successor states of thread `t` executing one instruction.
fn sc_step(test: &LitmusTest, s: &Sc, t: usize) -> Vec<Sc> {
    let prog = &test.threads[t];
    let nlocs = s.mem.len();
    let mut n = s.clone();
    let jump = |n: &mut Sc, target: &str| n.pcs[t] = prog.label(target).expect("label");
    n.pcs[t] += 1;
    match &prog.instrs[s.pcs[t]] {
        Instruction::Mov { dst, src } => n.regs[t][dst.index()] = operand(&s.regs[t], src),
        Instruction::Alu { op, dst, lhs, rhs } => {
            n.regs[t][dst.index()] = op.apply(s.regs[t][lhs.index()], operand(&s.regs[t], rhs));
        }
        Instruction::Cmp { lhs, rhs } => {
            n.flags[t] = s.regs[t][lhs.index()] == operand(&s.regs[t], rhs)
        }
        Instruction::B { target } => jump(&mut n, target),
        Instruction::BCond { cond, target } => {
            if (*cond == Cond::Eq) == s.flags[t] {
                jump(&mut n, target);
            }
        }
        Instruction::Cbz { reg, target } => {
            if s.regs[t][reg.index()] == 0 {
                jump(&mut n, target);
            }
        }
        Instruction::Cbnz { reg, target } => {
            if s.regs[t][reg.index()] != 0 {
                jump(&mut n, target);
            }
        }
        Instruction::Load { kind, rt, addr } => {
            let a = access(&mut n.regs[t], addr);
            let l = address_location(a, nlocs).expect("address");
            n.regs[t][rt.index()] = s.mem[l];
            if *kind == exmm::litmus::LoadKind::Exclusive {
                n.monitor[t] = Some(l);
            }
        }
        Instruction::Store {
            kind: StoreKind::Plain | StoreKind::Release,
            rt,
            addr,
        } => {
            let a = access(&mut n.regs[t], addr);
            let l = address_location(a, nlocs).expect("address");
            n.mem[l] = s.regs[t][rt.index()];
            for (u, m) in n.monitor.iter_mut().enumerate() {
                if u != t && *m == Some(l) {
                    *m = None;
                }
            }
        }
        Instruction::Stxr { status, rt, addr } => {
            let a = access(&mut n.regs[t], addr);
            let l = address_location(a, nlocs).expect("address");
            // Failure is always possible; success needs an intact monitor.
            let mut fail = n.clone();
            fail.regs[t][status.index()] = 1;
            fail.monitor[t] = None;
            let mut out = vec![fail];
            if s.monitor[t] == Some(l) {
                n.mem[l] = s.regs[t][rt.index()];
                n.regs[t][status.index()] = 0;
                for m in n.monitor.iter_mut() {
                    if *m == Some(l) {
                        *m = None;
                    }
                }
                out.push(n);
            }
            return out;
        }
        Instruction::Dmb(_) | Instruction::Dsb(_) | Instruction::Isb | Instruction::Nop => {}
        i => panic!("not interpretable: {i:?}"),
    }
    vec![n]
}

/// Final states of every sequentially consistent interleaving.
pub fn sc_outcomes(test: &LitmusTest) -> HashSet<Outcome> {
    let locs = test.locations();
    let mut regs = vec![vec![0u64; exmm::litmus::NUM_REGS]; test.threads.len()];
    for ri in &test.init.registers {
        regs[ri.thread][ri.reg.index()] = match &ri.value {
            InitValue::Const(v) => *v,
            InitValue::Location(l) => {
                location_address(locs.iter().position(|x| x == l).expect("location"))
            }
        };
    }
    let mem = locs
        .iter()
        .map(|l| {
            test.init
                .memory
                .iter()
                .find(|(m, _)| m == l)
                .map_or(0, |(_, v)| *v)
        })
        .collect();
    let nt = test.threads.len();
    let start = Sc {
        pcs: vec![0; nt],
        regs,
        flags: vec![false; nt],
        monitor: vec![None; nt],
        mem,
    };
    let mut seen = HashSet::new();
    let mut stack = vec![start];
    let mut out = HashSet::new();
    while let Some(s) = stack.pop() {
        if !seen.insert(s.clone()) {
            continue;
        }
        let live: Vec<usize> = (0..nt)
            .filter(|&t| s.pcs[t] < test.threads[t].instrs.len())
            .collect();
        if live.is_empty() {
            out.insert((s.regs.clone(), s.mem.clone()));
        }
        for t in live {
            stack.extend(sc_step(test, &s, t));
        }
    }
    out
}
