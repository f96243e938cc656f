// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! The axiomatic model: event classes, derived relations and the three
//! consistency axioms, parameterised by the exception and interrupt
//! features of the configuration.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::enumerate::CandidateExecution;
use crate::gic;
use crate::isa::{BarrierType, EventKind, ExceptionCause, GicOp};
use crate::litmus::BarrierKind;
use crate::relation::{EventId, EventSet, Relation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ModelConfig {
    /// Reads may be synchronous external aborts: everything po-after a read
    /// is speculative.
    pub sea_r: bool,
    pub sea_w: bool,
    pub feat_exs: bool,
    /// With `feat_exs`, whether exception entry is context synchronising.
    pub eis: bool,
    /// With `feat_exs`, whether exception return is context synchronising.
    pub eos: bool,
    pub ets2: bool,
    pub eoimode: u8,
    /// Forces the GIC extension on for tests that use no GIC register.
    pub gic: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            sea_r: false,
            sea_w: false,
            feat_exs: false,
            eis: false,
            eos: false,
            ets2: true,
            eoimode: 0,
            gic: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("unknown model variant `{0}`")]
    UnknownVariant(String),
    #[error("EIS and EOS are only meaningful with FEAT_ExS")]
    EisEosWithoutExs,
    #[error("EOImode must be 0 or 1, got {0}")]
    BadEoiMode(u8),
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if (self.eis || self.eos) && !self.feat_exs {
            return Err(ConfigError::EisEosWithoutExs);
        }
        if self.eoimode > 1 {
            return Err(ConfigError::BadEoiMode(self.eoimode));
        }
        Ok(())
    }

    /// Parses a variant such as `default`, `sea_rw` or `exs_eis+no_ets2`.
    pub fn from_variant(name: &str) -> Result<ModelConfig, ConfigError> {
        let mut c = ModelConfig::default();
        for part in name.split('+').map(str::trim) {
            match part {
                "default" => {}
                "sea_r" => c.sea_r = true,
                "sea_w" => c.sea_w = true,
                "sea_rw" => (c.sea_r, c.sea_w) = (true, true),
                "exs" => c.feat_exs = true,
                "exs_eis" => (c.feat_exs, c.eis) = (true, true),
                "exs_eos" => (c.feat_exs, c.eos) = (true, true),
                "exs_eis_eos" => (c.feat_exs, c.eis, c.eos) = (true, true, true),
                "no_ets2" => c.ets2 = false,
                "eoimode0" => c.eoimode = 0,
                "eoimode1" => c.eoimode = 1,
                "gic" => c.gic = true,
                _ => return Err(ConfigError::UnknownVariant(name.to_string())),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Canonical variant name; `from_variant(c.variant_name()) == c`.
    pub fn variant_name(&self) -> String {
        let mut parts: Vec<&str> = Vec::new();
        match (self.sea_r, self.sea_w) {
            (true, true) => parts.push("sea_rw"),
            (true, false) => parts.push("sea_r"),
            (false, true) => parts.push("sea_w"),
            _ => {}
        }
        if self.feat_exs {
            parts.push(match (self.eis, self.eos) {
                (false, false) => "exs",
                (true, false) => "exs_eis",
                (false, true) => "exs_eos",
                (true, true) => "exs_eis_eos",
            });
        }
        if !self.ets2 {
            parts.push("no_ets2");
        }
        if self.eoimode == 1 {
            parts.push("eoimode1");
        }
        if self.gic {
            parts.push("gic");
        }
        if parts.is_empty() {
            "default".into()
        } else {
            parts.join("+")
        }
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.variant_name())
    }
}

/// Event classes over a candidate's events.
#[derive(Debug, Clone)]
pub struct EventClasses {
    pub all: EventSet,
    pub init: EventSet,
    pub r: EventSet,
    pub w: EventSet,
    /// Acquire reads.
    pub a: EventSet,
    /// Acquire-PC reads; no instruction produces them.
    pub q: EventSet,
    /// Release writes.
    pub l: EventSet,
    pub x: EventSet,
    pub dmb_ld: EventSet,
    pub dmb_st: EventSet,
    pub dmb_full: EventSet,
    pub dsb: EventSet,
    pub dsb_ld: EventSet,
    pub dsb_st: EventSet,
    pub dsb_sy: EventSet,
    pub isb: EventSet,
    pub te: EventSet,
    pub te_page_fault: EventSet,
    pub take_interrupt: EventSet,
    pub eret: EventSet,
    /// Context-changing system register writes.
    pub msr: EventSet,
    pub mrs: EventSet,
    pub gic: EventSet,
    pub gen: EventSet,
    pub ack: EventSet,
    pub drop: EventSet,
    pub deact: EventSet,
    pub cse: EventSet,
}

impl EventClasses {
    pub fn new(c: &CandidateExecution, cfg: &ModelConfig) -> EventClasses {
        let n = c.events.len();
        let pick = |f: &dyn Fn(EventId) -> bool| EventSet::from_iter(n, (0..n).filter(|&i| f(i)));
        let kind = |i: EventId| &c.events[i].kind;
        let barrier = |i: EventId, want: &dyn Fn(BarrierType) -> bool| matches!(kind(i), EventKind::Barrier(b) if want(*b));
        let isb = pick(&|i| barrier(i, &|b| b == BarrierType::Isb));
        let te = pick(&|i| matches!(kind(i), EventKind::TakeException(_)));
        let eret = pick(&|i| matches!(kind(i), EventKind::Eret));
        let te_cse = !(cfg.feat_exs && !cfg.eis);
        let eret_cse = !(cfg.feat_exs && !cfg.eos);
        let cse = pick(&|i| {
            isb.contains(i) || (te_cse && te.contains(i)) || (eret_cse && eret.contains(i))
        });
        let gic_op =
            |i: EventId, f: &dyn Fn(&GicOp) -> bool| matches!(kind(i), EventKind::Gic(op) if f(op));
        EventClasses {
            all: EventSet::full(n),
            init: pick(&|i| c.events[i].thread.is_none()),
            r: pick(&|i| matches!(kind(i), EventKind::Read { .. })),
            w: pick(&|i| matches!(kind(i), EventKind::Write { .. })),
            a: pick(&|i| matches!(kind(i), EventKind::Read { acquire: true, .. })),
            q: EventSet::empty(n),
            l: pick(&|i| matches!(kind(i), EventKind::Write { release: true, .. })),
            x: pick(&|i| {
                matches!(
                    kind(i),
                    EventKind::Read {
                        exclusive: true,
                        ..
                    } | EventKind::Write {
                        exclusive: true,
                        ..
                    }
                )
            }),
            dmb_ld: pick(&|i| {
                barrier(
                    i,
                    &|b| matches!(b, BarrierType::Dmb(k) | BarrierType::Dsb(k) if k != BarrierKind::St),
                )
            }),
            dmb_st: pick(&|i| {
                barrier(
                    i,
                    &|b| matches!(b, BarrierType::Dmb(k) | BarrierType::Dsb(k) if k != BarrierKind::Ld),
                )
            }),
            dmb_full: pick(&|i| {
                barrier(i, &|b| {
                    matches!(
                        b,
                        BarrierType::Dmb(BarrierKind::Sy) | BarrierType::Dsb(BarrierKind::Sy)
                    )
                })
            }),
            dsb: pick(&|i| barrier(i, &|b| matches!(b, BarrierType::Dsb(_)))),
            dsb_ld: pick(&|i| barrier(i, &|b| b == BarrierType::Dsb(BarrierKind::Ld))),
            dsb_st: pick(&|i| barrier(i, &|b| b == BarrierType::Dsb(BarrierKind::St))),
            dsb_sy: pick(&|i| barrier(i, &|b| b == BarrierType::Dsb(BarrierKind::Sy))),
            isb: isb.clone(),
            te_page_fault: pick(&|i| {
                matches!(kind(i), EventKind::TakeException(ExceptionCause::PageFault))
            }),
            take_interrupt: pick(&|i| {
                matches!(
                    kind(i),
                    EventKind::TakeException(ExceptionCause::Irq { .. })
                )
            }),
            te,
            eret,
            msr: pick(
                &|i| matches!(kind(i), EventKind::Msr { sysreg, .. } if !sysreg.is_special_purpose()),
            ),
            mrs: pick(&|i| matches!(kind(i), EventKind::Mrs { .. })),
            gic: pick(&|i| matches!(kind(i), EventKind::Gic(_))),
            gen: pick(&|i| gic_op(i, &|op| matches!(op, GicOp::Generate { .. }))),
            ack: pick(&|i| gic_op(i, &|op| matches!(op, GicOp::Acknowledge { .. }))),
            drop: pick(&|i| gic_op(i, &|op| matches!(op, GicOp::Drop { .. }))),
            deact: pick(&|i| gic_op(i, &|op| matches!(op, GicOp::Deactivate { .. }))),
            cse,
        }
    }
}

/// Every relation the model derives, kept for inspection.
#[derive(Debug, Clone)]
pub struct DerivedRelations {
    pub po: Relation,
    pub po_loc: Relation,
    pub rf: Relation,
    pub rfe: Relation,
    pub rfi: Relation,
    pub co: Relation,
    pub coe: Relation,
    pub fr: Relation,
    pub fre: Relation,
    pub rmw: Relation,
    pub obs: Relation,
    pub speculative: Relation,
    pub dob: Relation,
    pub aob: Relation,
    pub bob: Relation,
    pub ctxob: Relation,
    pub asyncob: Relation,
    pub ets2ob: Relation,
    pub gicob: Relation,
    pub ob: Relation,
}

fn id(s: &EventSet) -> Relation {
    Relation::identity_on(s)
}

fn seq(rs: &[&Relation]) -> Relation {
    let mut it = rs.iter();
    let first = (*it.next().expect("non-empty sequence")).clone();
    it.fold(first, |acc, r| acc.compose(r))
}

/// Derives all relations of the model for a candidate.
pub fn derive(c: &CandidateExecution, cfg: &ModelConfig) -> (EventClasses, DerivedRelations) {
    let k = EventClasses::new(c, cfg);
    let n = c.events.len();
    let po = c.po.clone();
    let same_loc = Relation::from_pairs(
        n,
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                let (la, lb) = (c.events[a].loc(), c.events[b].loc());
                la.is_some() && la == lb
            }),
    );
    let ext = Relation::from_pairs(
        n,
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                let (ta, tb) = (c.events[a].thread, c.events[b].thread);
                ta.is_none() || tb.is_none() || ta != tb
            }),
    );
    let int = Relation::from_pairs(
        n,
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| {
                let (ta, tb) = (c.events[a].thread, c.events[b].thread);
                ta.is_some() && ta == tb
            }),
    );
    let po_loc = po.intersect(&same_loc);
    let rf = c.rf.clone();
    let co = c.co.clone();
    let rfe = rf.intersect(&ext);
    let rfi = rf.intersect(&int);
    let coe = co.intersect(&ext);
    let coi = co.intersect(&int);
    let fr = rf.inverse().compose(&co);
    let fre = fr.intersect(&ext);
    let obs = rfe.union(&fr).union(&co);

    let rd = id(&k.r);
    let wr = id(&k.w);
    let mut speculative = c.ctrl.union(&c.addr.compose(&po));
    if cfg.sea_r {
        speculative = speculative.union(&rd.compose(&po));
    }
    if cfg.sea_w {
        speculative = speculative.union(&wr.compose(&po));
    }

    let addr_data = c.addr.union(&c.data);
    let dob = addr_data
        .union(&seq(&[&speculative, &wr]))
        .union(&seq(&[&speculative, &id(&k.isb)]))
        .union(&seq(&[&addr_data, &rfi]));

    let rmw_range = c.rmw.range();
    let aob = c
        .rmw
        .union(&seq(&[&id(&rmw_range), &rfi, &id(&k.a.union(&k.q))]));

    let rel = id(&k.l);
    let bob = seq(&[&po, &id(&k.dmb_full), &po])
        .union(&seq(&[&rel, &po, &id(&k.a)]))
        .union(&seq(&[&rd, &po, &id(&k.dmb_ld), &po]))
        .union(&seq(&[&id(&k.a.union(&k.q)), &po]))
        .union(&seq(&[&wr, &po, &id(&k.dmb_st), &po, &wr]))
        .union(&seq(&[&po, &rel]))
        .union(&seq(&[&po, &rel, &coi]))
        .union(&seq(&[&id(&k.dsb), &po]));

    let cse = id(&k.cse);
    let msr = id(&k.msr);
    let ctxob = seq(&[&speculative, &id(&k.msr.union(&k.cse))])
        .union(&seq(&[&msr, &po, &cse]))
        .union(&seq(&[&cse, &po]));

    let asy = id(&k.take_interrupt);
    let asyncob = seq(&[&speculative, &asy]).union(&seq(&[&asy, &po]));

    let ets2ob = if cfg.ets2 {
        seq(&[&id(&k.r.union(&k.w)), &po, &id(&k.te_page_fault)])
    } else {
        Relation::empty(n)
    };

    let gicob = if cfg.gic {
        gic::gic_ob_extension(c, &k)
    } else {
        Relation::empty(n)
    };

    let ob = obs
        .union(&dob)
        .union(&aob)
        .union(&bob)
        .union(&ctxob)
        .union(&asyncob)
        .union(&ets2ob)
        .union(&gicob)
        .transitive_closure();

    let rels = DerivedRelations {
        po,
        po_loc,
        rf,
        rfe,
        rfi,
        co,
        coe,
        fr,
        fre,
        rmw: c.rmw.clone(),
        obs,
        speculative,
        dob,
        aob,
        bob,
        ctxob,
        asyncob,
        ets2ob,
        gicob,
        ob,
    };
    (k, rels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Axiom {
    Internal,
    External,
    Atomic,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axiom::Internal => "internal",
            Axiom::External => "external",
            Axiom::Atomic => "atomic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub internal: bool,
    pub external: bool,
    pub atomic: bool,
    /// A violating cycle for the first failing acyclicity axiom.
    pub cycle: Option<(Axiom, Vec<EventId>)>,
}

impl AxiomReport {
    pub fn consistent(&self) -> bool {
        self.internal && self.external && self.atomic
    }
}

/// Checks the three axioms.
pub fn consistent(c: &CandidateExecution, cfg: &ModelConfig) -> AxiomReport {
    let (_, r) = derive(c, cfg);
    check_axioms(&r)
}

pub fn check_axioms(r: &DerivedRelations) -> AxiomReport {
    let internal_rel = r.po_loc.union(&r.fr).union(&r.co).union(&r.rf);
    let internal = internal_rel.acyclic();
    let external = r.ob.irreflexive();
    let atomic = r.rmw.intersect(&r.fre.compose(&r.coe)).is_empty();
    let cycle = if !internal {
        internal_rel.find_cycle().map(|c| (Axiom::Internal, c))
    } else if !external {
        let base = r
            .obs
            .union(&r.dob)
            .union(&r.aob)
            .union(&r.bob)
            .union(&r.ctxob)
            .union(&r.asyncob)
            .union(&r.ets2ob)
            .union(&r.gicob);
        base.find_cycle().map(|c| (Axiom::External, c))
    } else {
        None
    };
    AxiomReport {
        internal,
        external,
        atomic,
        cycle,
    }
}
