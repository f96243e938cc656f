// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Per-thread instruction semantics: running a thread's program under a
//! fixed set of choices yields its events and intra-thread relations.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::litmus::*;

/// Address of the `index`-th memory location.
pub fn location_address(index: usize) -> u64 {
    0x1000 * (index as u64 + 1)
}

pub fn address_location(addr: u64, nlocs: usize) -> Option<usize> {
    if addr == 0 || !addr.is_multiple_of(0x1000) {
        return None;
    }
    let i = (addr / 0x1000 - 1) as usize;
    (i < nlocs).then_some(i)
}

/// INTID returned by an acknowledge with nothing to acknowledge.
pub const SPURIOUS_INTID: u32 = 1023;

const ESR_SVC: u64 = 0x15 << 26;
const ESR_DATA_ABORT: u64 = 0x24 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ExceptionCause {
    Svc(u16),
    PageFault,
    /// `intid` is `None` for an injected interrupt.
    Irq {
        external: bool,
        intid: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BarrierType {
    Dmb(BarrierKind),
    Dsb(BarrierKind),
    Isb,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum GicOp {
    Generate { intid: u32, targets: Vec<ThreadId> },
    Acknowledge { intid: u32 },
    Drop { intid: u32 },
    Deactivate { intid: u32 },
}

impl GicOp {
    pub fn intid(&self) -> u32 {
        match self {
            GicOp::Generate { intid, .. }
            | GicOp::Acknowledge { intid }
            | GicOp::Drop { intid }
            | GicOp::Deactivate { intid } => *intid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum EventKind {
    Read {
        loc: usize,
        value: u64,
        acquire: bool,
        exclusive: bool,
    },
    Write {
        loc: usize,
        value: u64,
        release: bool,
        exclusive: bool,
    },
    Barrier(BarrierType),
    TakeException(ExceptionCause),
    Eret,
    Msr {
        sysreg: SysReg,
        value: u64,
    },
    Mrs {
        sysreg: SysReg,
        value: u64,
    },
    Gic(GicOp),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Event {
    /// `None` for initial writes.
    pub thread: Option<ThreadId>,
    pub kind: EventKind,
    pub in_handler: bool,
    /// Index of the inducing instruction in its program.
    pub pc: Option<usize>,
}

impl Event {
    pub fn is_read(&self) -> bool {
        matches!(self.kind, EventKind::Read { .. })
    }

    pub fn is_write(&self) -> bool {
        matches!(self.kind, EventKind::Write { .. })
    }

    pub fn is_mem(&self) -> bool {
        self.is_read() || self.is_write()
    }

    pub fn is_gic(&self) -> bool {
        matches!(self.kind, EventKind::Gic(_))
    }

    pub fn loc(&self) -> Option<usize> {
        match self.kind {
            EventKind::Read { loc, .. } | EventKind::Write { loc, .. } => Some(loc),
            _ => None,
        }
    }

    pub fn value(&self) -> Option<u64> {
        match self.kind {
            EventKind::Read { value, .. } | EventKind::Write { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn gic(&self) -> Option<&GicOp> {
        match &self.kind {
            EventKind::Gic(op) => Some(op),
            _ => None,
        }
    }

    pub fn take_cause(&self) -> Option<ExceptionCause> {
        match self.kind {
            EventKind::TakeException(c) => Some(c),
            _ => None,
        }
    }
}

/// Events of one thread in full program order, with local indices in the
/// relations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThreadTrace {
    pub thread: ThreadId,
    pub events: Vec<Event>,
    pub addr: Vec<(usize, usize)>,
    pub data: Vec<(usize, usize)>,
    pub ctrl: Vec<(usize, usize)>,
    pub rmw: Vec<(usize, usize)>,
    /// Instruction to the GIC events it induces.
    pub iio: Vec<(usize, usize)>,
    pub regs: Vec<u64>,
}

/// Resolution of the nondeterminism met while running a thread.
pub trait Choices {
    fn read_value(&mut self, thread: ThreadId, loc: usize) -> u64;
    /// Whether to take an SGI before `pc`, and with which INTID.
    fn take_interrupt(&mut self, thread: ThreadId, pc: usize) -> Option<u32>;
    fn exclusive_succeeds(&mut self, thread: ThreadId) -> bool;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ElabError {
    #[error("thread {thread}: exceeded {limit} steps")]
    StepLimit { thread: ThreadId, limit: usize },
    #[error("thread {thread}: access to address {addr:#x} which is not a location")]
    BadAddress { thread: ThreadId, addr: u64 },
    #[error("thread {thread}: exception raised with no handler")]
    NoHandler { thread: ThreadId },
    #[error("thread {thread}: exception raised inside a handler")]
    NestedException { thread: ThreadId },
}

/// Per-thread parameters for a run.
#[derive(Debug, Clone, Copy)]
pub struct ThreadParams {
    pub eoimode: u8,
    /// Whether SGIs may be taken at instruction boundaries of the main
    /// program.
    pub interruptible: bool,
    pub max_takes: usize,
    pub max_steps: usize,
}

type Taint = BTreeSet<usize>;

#[derive(Clone, Copy)]
struct HandlerFrame {
    return_pc: Option<usize>,
    saved_mask: bool,
    intid: Option<u32>,
}

struct Runner<'a, C: Choices> {
    test: &'a LitmusTest,
    nlocs: usize,
    tid: ThreadId,
    choices: &'a mut C,
    out: ThreadTrace,
    taint: Vec<Taint>,
    flags: (bool, Taint),
    ctrl: Taint,
    sys: [(u64, Taint); 4],
    monitor: Option<(u64, usize)>,
    masked: bool,
    frame: Option<HandlerFrame>,
    takes: usize,
}

fn sys_slot(r: SysReg) -> Option<usize> {
    match r {
        SysReg::EsrEl1 => Some(0),
        SysReg::ElrEl1 => Some(1),
        SysReg::VbarEl1 => Some(2),
        SysReg::TpidrEl1 => Some(3),
        _ => None,
    }
}

impl<C: Choices> Runner<'_, C> {
    fn emit(&mut self, kind: EventKind, pc: usize) -> usize {
        let e = self.out.events.len();
        let is_gic = matches!(kind, EventKind::Gic(_));
        self.out.events.push(Event {
            thread: Some(self.tid),
            kind,
            in_handler: self.frame.is_some(),
            pc: Some(pc),
        });
        if !is_gic {
            self.out.ctrl.extend(self.ctrl.iter().map(|&s| (s, e)));
        }
        e
    }

    fn operand(&self, o: &Operand) -> (u64, Taint) {
        match *o {
            Operand::Reg(r) => (self.out.regs[r.index()], self.taint[r.index()].clone()),
            Operand::Imm { value, shift } => {
                (value.checked_shl(shift as u32).unwrap_or(0), Taint::new())
            }
        }
    }

    fn address(&self, m: &MemOperand) -> (u64, Taint) {
        let reg = |r: Reg| (self.out.regs[r.index()], &self.taint[r.index()]);
        match m.mode {
            Addressing::Base(r) | Addressing::PostIndex(r, _) => (reg(r).0, reg(r).1.clone()),
            Addressing::Offset(r, i) => (reg(r).0.wrapping_add(i), reg(r).1.clone()),
            Addressing::RegOffset(r, x) => {
                let t = reg(r).1.union(reg(x).1).copied().collect();
                (reg(r).0.wrapping_add(reg(x).0), t)
            }
        }
    }

    fn location(&self, addr: u64) -> Result<usize, ElabError> {
        address_location(addr, self.nlocs).ok_or(ElabError::BadAddress {
            thread: self.tid,
            addr,
        })
    }

    fn writeback(&mut self, m: &MemOperand) {
        if let Addressing::PostIndex(r, i) = m.mode {
            self.out.regs[r.index()] = self.out.regs[r.index()].wrapping_add(i);
        }
    }

    /// Enters the handler. Returns the handler start, or an error if there
    /// is none.
    fn take(
        &mut self,
        cause: ExceptionCause,
        pc: usize,
        return_pc: Option<usize>,
    ) -> Result<(), ElabError> {
        if self.frame.is_some() {
            return Err(ElabError::NestedException { thread: self.tid });
        }
        if !self.test.handlers.contains_key(&self.tid) {
            return Err(ElabError::NoHandler { thread: self.tid });
        }
        // The vector base is read on every exception entry.
        let vbar = self.sys[2].1.clone();
        self.ctrl.extend(vbar);
        self.emit(EventKind::TakeException(cause), pc);
        match cause {
            ExceptionCause::Svc(imm) => self.sys[0] = (ESR_SVC | imm as u64, Taint::new()),
            ExceptionCause::PageFault => self.sys[0] = (ESR_DATA_ABORT, Taint::new()),
            ExceptionCause::Irq { .. } => self.sys[0].1 = Taint::new(),
        }
        self.sys[1] = (return_pc.unwrap_or(u64::MAX as usize) as u64, Taint::new());
        let intid = match cause {
            ExceptionCause::Irq { intid, .. } => intid,
            _ => None,
        };
        self.frame = Some(HandlerFrame {
            return_pc,
            saved_mask: self.masked,
            intid,
        });
        self.masked = true;
        Ok(())
    }

    fn gic(&mut self, inducing: usize, op: GicOp, pc: usize) {
        let g = self.emit(EventKind::Gic(op), pc);
        self.out.iio.push((inducing, g));
    }

    fn sgi_targets(&self, v: u64) -> Vec<ThreadId> {
        let n = self.test.threads.len();
        if v & (1 << 40) != 0 {
            (0..n).filter(|t| *t != self.tid).collect()
        } else {
            (0..n.min(16)).filter(|t| v & (1 << t) != 0).collect()
        }
    }
}

/// Runs thread `tid` of `test` to completion.
pub fn elaborate_thread<C: Choices>(
    test: &LitmusTest,
    tid: ThreadId,
    params: ThreadParams,
    choices: &mut C,
) -> Result<ThreadTrace, ElabError> {
    let locs = test.locations();
    let mut regs = vec![0u64; NUM_REGS];
    for r in test.init.registers.iter().filter(|r| r.thread == tid) {
        regs[r.reg.index()] = match &r.value {
            InitValue::Const(v) => *v,
            InitValue::Location(l) => {
                location_address(locs.iter().position(|x| x == l).unwrap_or(usize::MAX - 1))
            }
        };
    }
    let out = ThreadTrace {
        thread: tid,
        events: Vec::new(),
        addr: Vec::new(),
        data: Vec::new(),
        ctrl: Vec::new(),
        rmw: Vec::new(),
        iio: Vec::new(),
        regs,
    };
    let mut r = Runner {
        test,
        nlocs: locs.len(),
        tid,
        choices,
        out,
        taint: vec![Taint::new(); NUM_REGS],
        flags: (false, Taint::new()),
        ctrl: Taint::new(),
        sys: Default::default(),
        monitor: None,
        masked: false,
        frame: None,
        takes: 0,
    };
    let main = &test.threads[tid];
    let handler = test.handlers.get(&tid);
    let mut pending_injections: Vec<usize> = test
        .injections
        .iter()
        .filter(|j| j.thread == tid)
        .filter_map(|j| main.label(&j.label))
        .collect();
    let mut pending_irq = false;
    let mut pc = 0usize;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > params.max_steps {
            return Err(ElabError::StepLimit {
                thread: tid,
                limit: params.max_steps,
            });
        }
        if r.frame.is_none() {
            if let Some(i) = pending_injections.iter().position(|p| *p == pc) {
                pending_injections.swap_remove(i);
                pending_irq = true;
            }
            if !r.masked && pending_irq {
                pending_irq = false;
                r.take(
                    ExceptionCause::Irq {
                        external: true,
                        intid: None,
                    },
                    pc,
                    Some(pc),
                )?;
                pc = 0;
                continue;
            }
            if !r.masked && params.interruptible && r.takes < params.max_takes && handler.is_some()
            {
                if let Some(intid) = r.choices.take_interrupt(tid, pc) {
                    r.takes += 1;
                    r.take(
                        ExceptionCause::Irq {
                            external: false,
                            intid: Some(intid),
                        },
                        pc,
                        Some(pc),
                    )?;
                    pc = 0;
                    continue;
                }
            }
        }
        let prog = if r.frame.is_some() {
            handler.expect("frame implies handler")
        } else {
            main
        };
        let Some(ins) = prog.instrs.get(pc) else {
            break;
        };
        let mut next = pc + 1;
        match ins {
            Instruction::Mov { dst, src } => {
                let (v, t) = r.operand(src);
                r.out.regs[dst.index()] = v;
                r.taint[dst.index()] = t;
            }
            Instruction::Alu { op, dst, lhs, rhs } => {
                let (b, tb) = r.operand(rhs);
                let a = r.out.regs[lhs.index()];
                let t = r.taint[lhs.index()].union(&tb).copied().collect();
                r.out.regs[dst.index()] = op.apply(a, b);
                r.taint[dst.index()] = t;
            }
            Instruction::Cmp { lhs, rhs } => {
                let (b, tb) = r.operand(rhs);
                let t = r.taint[lhs.index()].union(&tb).copied().collect();
                r.flags = (r.out.regs[lhs.index()] == b, t);
            }
            Instruction::B { target } => next = prog.label(target).unwrap_or(prog.instrs.len()),
            Instruction::BCond { cond, target } => {
                let ft = r.flags.1.clone();
                r.ctrl.extend(ft);
                if r.flags.0 == (*cond == Cond::Eq) {
                    next = prog.label(target).unwrap_or(prog.instrs.len());
                }
            }
            Instruction::Cbz { reg, target } | Instruction::Cbnz { reg, target } => {
                let t = r.taint[reg.index()].clone();
                r.ctrl.extend(t);
                let zero = r.out.regs[reg.index()] == 0;
                if zero == matches!(ins, Instruction::Cbz { .. }) {
                    next = prog.label(target).unwrap_or(prog.instrs.len());
                }
            }
            Instruction::Load { kind, rt, addr } => {
                let (a, at) = r.address(addr);
                if addr.fault {
                    r.ctrl.extend(at);
                    r.take(ExceptionCause::PageFault, pc, None)?;
                    pc = 0;
                    continue;
                }
                let loc = r.location(a)?;
                let value = r.choices.read_value(tid, loc);
                let ev = EventKind::Read {
                    loc,
                    value,
                    acquire: *kind == LoadKind::Acquire,
                    exclusive: *kind == LoadKind::Exclusive,
                };
                let e = r.emit(ev, pc);
                r.out.addr.extend(at.iter().map(|&s| (s, e)));
                r.writeback(addr);
                r.out.regs[rt.index()] = value;
                r.taint[rt.index()] = Taint::from([e]);
                if *kind == LoadKind::Exclusive {
                    r.monitor = Some((a, e));
                }
            }
            Instruction::Store { kind, rt, addr } => {
                let (a, at) = r.address(addr);
                if addr.fault {
                    r.ctrl.extend(at);
                    r.take(ExceptionCause::PageFault, pc, None)?;
                    pc = 0;
                    continue;
                }
                let loc = r.location(a)?;
                let value = r.out.regs[rt.index()];
                let dt = r.taint[rt.index()].clone();
                let ev = EventKind::Write {
                    loc,
                    value,
                    release: *kind == StoreKind::Release,
                    exclusive: false,
                };
                let e = r.emit(ev, pc);
                r.out.addr.extend(at.iter().map(|&s| (s, e)));
                r.out.data.extend(dt.iter().map(|&s| (s, e)));
                r.writeback(addr);
            }
            Instruction::Stxr { status, rt, addr } => {
                let (a, at) = r.address(addr);
                if addr.fault {
                    r.ctrl.extend(at);
                    r.take(ExceptionCause::PageFault, pc, None)?;
                    pc = 0;
                    continue;
                }
                let loc = r.location(a)?;
                let monitor = r.monitor.take();
                let ok = match monitor {
                    Some((ma, _)) if ma == a => r.choices.exclusive_succeeds(tid),
                    _ => false,
                };
                if ok {
                    let value = r.out.regs[rt.index()];
                    let dt = r.taint[rt.index()].clone();
                    let e = r.emit(
                        EventKind::Write {
                            loc,
                            value,
                            release: false,
                            exclusive: true,
                        },
                        pc,
                    );
                    r.out.addr.extend(at.iter().map(|&s| (s, e)));
                    r.out.data.extend(dt.iter().map(|&s| (s, e)));
                    if let Some((_, re)) = monitor {
                        r.out.rmw.push((re, e));
                    }
                }
                r.out.regs[status.index()] = u64::from(!ok);
                r.taint[status.index()] = Taint::new();
            }
            Instruction::Dmb(k) => {
                r.emit(EventKind::Barrier(BarrierType::Dmb(*k)), pc);
            }
            Instruction::Dsb(k) => {
                r.emit(EventKind::Barrier(BarrierType::Dsb(*k)), pc);
            }
            Instruction::Isb => {
                r.emit(EventKind::Barrier(BarrierType::Isb), pc);
            }
            Instruction::Nop => {}
            Instruction::Svc(imm) => {
                r.take(ExceptionCause::Svc(*imm), pc, Some(pc + 1))?;
                pc = 0;
                continue;
            }
            Instruction::Eret => {
                let elr = r.sys[1].1.clone();
                r.ctrl.extend(elr);
                r.emit(EventKind::Eret, pc);
                if let Some(frame) = r.frame.take() {
                    r.masked = frame.saved_mask;
                    match frame.return_pc {
                        Some(ret) => next = ret,
                        None => break,
                    }
                }
            }
            Instruction::Mrs { dst, sysreg } => {
                if *sysreg == SysReg::Iar {
                    let intid = r.frame.and_then(|f| f.intid).unwrap_or(SPURIOUS_INTID);
                    let m = r.emit(
                        EventKind::Mrs {
                            sysreg: *sysreg,
                            value: intid as u64,
                        },
                        pc,
                    );
                    if intid != SPURIOUS_INTID {
                        r.gic(m, GicOp::Acknowledge { intid }, pc);
                    }
                    r.out.regs[dst.index()] = intid as u64;
                    r.taint[dst.index()] = Taint::new();
                } else {
                    let (v, t) = match sys_slot(*sysreg) {
                        Some(s) => r.sys[s].clone(),
                        None => (0, Taint::new()),
                    };
                    r.emit(
                        EventKind::Mrs {
                            sysreg: *sysreg,
                            value: v,
                        },
                        pc,
                    );
                    r.out.regs[dst.index()] = v;
                    r.taint[dst.index()] = t;
                }
            }
            Instruction::Msr { sysreg, src } => {
                let v = r.out.regs[src.index()];
                let t = r.taint[src.index()].clone();
                let m = r.emit(
                    EventKind::Msr {
                        sysreg: *sysreg,
                        value: v,
                    },
                    pc,
                );
                r.out.data.extend(t.iter().map(|&s| (s, m)));
                if let Some(s) = sys_slot(*sysreg) {
                    r.sys[s] = (v, t);
                }
                match sysreg {
                    SysReg::IccSgi1rEl1 => {
                        let targets = r.sgi_targets(v);
                        r.gic(
                            m,
                            GicOp::Generate {
                                intid: ((v >> 24) & 0xF) as u32,
                                targets,
                            },
                            pc,
                        );
                    }
                    SysReg::Eoir => {
                        let intid = (v & 0xFF_FFFF) as u32;
                        r.gic(m, GicOp::Drop { intid }, pc);
                        if params.eoimode == 0 {
                            r.gic(m, GicOp::Deactivate { intid }, pc);
                        }
                    }
                    SysReg::Dir => {
                        let intid = (v & 0xFF_FFFF) as u32;
                        r.gic(m, GicOp::Deactivate { intid }, pc);
                    }
                    _ => {}
                }
            }
            Instruction::MsrDaif { op, imm } => {
                if imm & DAIF_I != 0 {
                    r.masked = *op == DaifOp::Set;
                }
            }
        }
        pc = next;
    }
    Ok(r.out)
}
