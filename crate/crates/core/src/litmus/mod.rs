// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Litmus tests with exception handlers, interrupt injections and GIC
//! configuration, written in the `.elitmus` text format.
//!
//! ```text
//! name: MP+dmb+svc
//! @expect default=allow sea_r=forbid
//! init: x=0; y=0; 0:X1=x; 0:X3=y; 1:X1=y; 1:X3=x
//! thread 0:
//!   MOV X0,#1
//!   STR X0,[X1]
//!   DMB SY
//!   STR X0,[X3]
//! thread 1:
//!   LDR X0,[X1]
//!   SVC #0
//! handler 1:
//!   LDR X2,[X3]
//!   ERET
//! final exists: 1:X0=1 /\ 1:X2=0
//! ```

mod parse;
mod print;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

pub use parse::{parse_test, ParseError};
pub use validate::{validate_test, Diagnostic, DiagnosticKind, Severity};

pub type ThreadId = usize;

/// Number of general-purpose registers, X0 to X30.
pub const NUM_REGS: usize = 31;

/// A general-purpose register X0 to X30.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Reg(pub u8);

impl Reg {
    pub fn new(index: u8) -> Option<Reg> {
        ((index as usize) < NUM_REGS).then_some(Reg(index))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X{}", self.0)
    }
}

/// System registers reachable through MRS/MSR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SysReg {
    EsrEl1,
    ElrEl1,
    VbarEl1,
    TpidrEl1,
    /// Writing it generates a software-generated interrupt.
    IccSgi1rEl1,
    /// Interrupt acknowledge register.
    Iar,
    /// End-of-interrupt register.
    Eoir,
    /// Deactivate-interrupt register.
    Dir,
}

impl SysReg {
    pub const ALL: [SysReg; 8] = [
        SysReg::EsrEl1,
        SysReg::ElrEl1,
        SysReg::VbarEl1,
        SysReg::TpidrEl1,
        SysReg::IccSgi1rEl1,
        SysReg::Iar,
        SysReg::Eoir,
        SysReg::Dir,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SysReg::EsrEl1 => "ESR_EL1",
            SysReg::ElrEl1 => "ELR_EL1",
            SysReg::VbarEl1 => "VBAR_EL1",
            SysReg::TpidrEl1 => "TPIDR_EL1",
            SysReg::IccSgi1rEl1 => "ICC_SGI1R_EL1",
            SysReg::Iar => "IAR",
            SysReg::Eoir => "EOIR",
            SysReg::Dir => "DIR",
        }
    }

    pub fn from_name(s: &str) -> Option<SysReg> {
        let upper = s.to_ascii_uppercase();
        let canonical = match upper.as_str() {
            "ICC_IAR1_EL1" => "IAR",
            "ICC_EOIR1_EL1" => "EOIR",
            "ICC_DIR_EL1" => "DIR",
            "SGI1R" => "ICC_SGI1R_EL1",
            other => other,
        };
        SysReg::ALL.into_iter().find(|r| r.name() == canonical)
    }

    /// Registers of the GIC CPU interface.
    pub fn is_gic(self) -> bool {
        matches!(
            self,
            SysReg::IccSgi1rEl1 | SysReg::Iar | SysReg::Eoir | SysReg::Dir
        )
    }

    /// Special-purpose registers are self-synchronising and stay out of the
    /// context-changing `MSR` event class.
    pub fn is_special_purpose(self) -> bool {
        matches!(self, SysReg::ElrEl1)
    }
}

impl fmt::Display for SysReg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DaifOp {
    Set,
    Clr,
}

/// DAIF bit for IRQ masking in the `#imm` of `MSR DAIFSet/DAIFClr`.
pub const DAIF_I: u8 = 0b0010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Operand {
    Reg(Reg),
    /// `#value` optionally shifted: `#value, LSL #shift`.
    Imm {
        value: u64,
        shift: u8,
    },
}

impl Operand {
    pub fn imm(value: u64) -> Operand {
        Operand::Imm { value, shift: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AluOp {
    Add,
    And,
    Eor,
    Orr,
}

impl AluOp {
    pub fn mnemonic(self) -> &'static str {
        match self {
            AluOp::Add => "ADD",
            AluOp::And => "AND",
            AluOp::Eor => "EOR",
            AluOp::Orr => "ORR",
        }
    }

    pub fn apply(self, a: u64, b: u64) -> u64 {
        match self {
            AluOp::Add => a.wrapping_add(b),
            AluOp::And => a & b,
            AluOp::Eor => a ^ b,
            AluOp::Orr => a | b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Cond {
    Eq,
    Ne,
}

/// Shareability is not modelled; `ISH` variants map onto these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BarrierKind {
    Ld,
    St,
    Sy,
}

impl BarrierKind {
    pub fn suffix(self) -> &'static str {
        match self {
            BarrierKind::Ld => "LD",
            BarrierKind::St => "ST",
            BarrierKind::Sy => "SY",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Addressing {
    /// `[Xn]`
    Base(Reg),
    /// `[Xn,#imm]`
    Offset(Reg, u64),
    /// `[Xn,Xm]`
    RegOffset(Reg, Reg),
    /// `[Xn],#imm`: access at `Xn`, then `Xn += imm`.
    PostIndex(Reg, u64),
}

impl Addressing {
    pub fn base(self) -> Reg {
        match self {
            Addressing::Base(r)
            | Addressing::Offset(r, _)
            | Addressing::RegOffset(r, _)
            | Addressing::PostIndex(r, _) => r,
        }
    }
}

/// A memory operand; `fault` marks the access as translation-faulting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MemOperand {
    pub mode: Addressing,
    pub fault: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LoadKind {
    Plain,
    Acquire,
    Exclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum StoreKind {
    Plain,
    Release,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Instruction {
    Mov {
        dst: Reg,
        src: Operand,
    },
    Alu {
        op: AluOp,
        dst: Reg,
        lhs: Reg,
        rhs: Operand,
    },
    Cmp {
        lhs: Reg,
        rhs: Operand,
    },
    B {
        target: String,
    },
    BCond {
        cond: Cond,
        target: String,
    },
    Cbz {
        reg: Reg,
        target: String,
    },
    Cbnz {
        reg: Reg,
        target: String,
    },
    Load {
        kind: LoadKind,
        rt: Reg,
        addr: MemOperand,
    },
    Store {
        kind: StoreKind,
        rt: Reg,
        addr: MemOperand,
    },
    /// `STXR Ws, Xt, [Xn]`: `Ws` receives 0 on success, 1 on failure.
    Stxr {
        status: Reg,
        rt: Reg,
        addr: MemOperand,
    },
    Dmb(BarrierKind),
    Dsb(BarrierKind),
    Isb,
    Svc(u16),
    Eret,
    Nop,
    Mrs {
        dst: Reg,
        sysreg: SysReg,
    },
    Msr {
        sysreg: SysReg,
        src: Reg,
    },
    MsrDaif {
        op: DaifOp,
        imm: u8,
    },
}

impl Instruction {
    pub fn branch_target(&self) -> Option<&str> {
        match self {
            Instruction::B { target }
            | Instruction::BCond { target, .. }
            | Instruction::Cbz { target, .. }
            | Instruction::Cbnz { target, .. } => Some(target),
            _ => None,
        }
    }

    pub fn mem_operand(&self) -> Option<&MemOperand> {
        match self {
            Instruction::Load { addr, .. }
            | Instruction::Store { addr, .. }
            | Instruction::Stxr { addr, .. } => Some(addr),
            _ => None,
        }
    }

    pub fn is_faulting(&self) -> bool {
        self.mem_operand().is_some_and(|m| m.fault)
    }
}

/// Straight-line code with labels; a label may point one past the last
/// instruction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Program {
    pub instrs: Vec<Instruction>,
    pub labels: BTreeMap<String, usize>,
}

impl Program {
    pub fn label(&self, name: &str) -> Option<usize> {
        self.labels.get(name).copied()
    }

    pub fn labels_at(&self, index: usize) -> impl Iterator<Item = &str> {
        self.labels
            .iter()
            .filter(move |(_, i)| **i == index)
            .map(|(l, _)| l.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum InitValue {
    Const(u64),
    /// The address of a memory location.
    Location(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegInit {
    pub thread: ThreadId,
    pub reg: Reg,
    pub value: InitValue,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ThreadConfig {
    /// `PSTATE.EL` at start. Recorded, induces no ordering.
    pub pstate_el: Option<u8>,
    /// GIC `EOImode`; overrides the model configuration for this thread.
    pub eoimode: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Init {
    pub memory: Vec<(String, u64)>,
    pub registers: Vec<RegInit>,
    pub threads: BTreeMap<ThreadId, ThreadConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum InjectionKind {
    Irq,
}

/// An asynchronous interrupt delivered at `label` of the thread's program.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Injection {
    pub thread: ThreadId,
    pub label: String,
    pub kind: InjectionKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Atom {
    Reg {
        thread: ThreadId,
        reg: Reg,
        value: u64,
    },
    Mem {
        loc: String,
        value: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CondExpr {
    True,
    Atom(Atom),
    Not(Box<CondExpr>),
    And(Box<CondExpr>, Box<CondExpr>),
    Or(Box<CondExpr>, Box<CondExpr>),
}

impl CondExpr {
    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        fn go<'a>(e: &'a CondExpr, out: &mut Vec<&'a Atom>) {
            match e {
                CondExpr::True => {}
                CondExpr::Atom(a) => out.push(a),
                CondExpr::Not(x) => go(x, out),
                CondExpr::And(a, b) | CondExpr::Or(a, b) => {
                    go(a, out);
                    go(b, out);
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn eval(&self, lookup: &impl Fn(&Atom) -> bool) -> bool {
        match self {
            CondExpr::True => true,
            CondExpr::Atom(a) => lookup(a),
            CondExpr::Not(x) => !x.eval(lookup),
            CondExpr::And(a, b) => a.eval(lookup) && b.eval(lookup),
            CondExpr::Or(a, b) => a.eval(lookup) || b.eval(lookup),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantifier {
    Exists,
    /// Same condition as `Exists`; additionally implies a `default=forbid`
    /// expectation when none is given.
    Forbidden,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FinalCondition {
    pub quantifier: Quantifier,
    pub expr: CondExpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Expectation {
    Allow,
    Forbid,
    /// The architectural intent is open; never compared.
    Unknown,
}

impl Expectation {
    pub fn keyword(self) -> &'static str {
        match self {
            Expectation::Allow => "allow",
            Expectation::Forbid => "forbid",
            Expectation::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LitmusTest {
    pub name: String,
    /// Variant name (e.g. `default`, `sea_r`, `exs+no_ets2`) to expectation.
    pub expectations: BTreeMap<String, Expectation>,
    pub init: Init,
    pub threads: Vec<Program>,
    pub handlers: BTreeMap<ThreadId, Program>,
    pub injections: Vec<Injection>,
    pub final_cond: FinalCondition,
}

impl LitmusTest {
    /// Memory locations in order of first declaration in `init`; a location
    /// named only in the final condition is not one.
    pub fn locations(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |l: &str| {
            if !out.iter().any(|x| x == l) {
                out.push(l.to_string());
            }
        };
        for (l, _) in &self.init.memory {
            push(l);
        }
        for r in &self.init.registers {
            if let InitValue::Location(l) = &r.value {
                push(l);
            }
        }
        out
    }

    /// Expectation for a variant, falling back to the one implied by a
    /// `final forbidden:` clause for `default`.
    pub fn expectation(&self, variant: &str) -> Option<Expectation> {
        self.expectations.get(variant).copied().or_else(|| {
            (variant == "default" && self.final_cond.quantifier == Quantifier::Forbidden)
                .then_some(Expectation::Forbid)
        })
    }

    pub fn thread_config(&self, thread: ThreadId) -> ThreadConfig {
        self.init.threads.get(&thread).copied().unwrap_or_default()
    }

    /// Whether any thread or handler writes `ICC_SGI1R_EL1`.
    pub fn uses_sgis(&self) -> bool {
        self.programs().any(|p| {
            p.instrs.iter().any(|i| {
                matches!(
                    i,
                    Instruction::Msr {
                        sysreg: SysReg::IccSgi1rEl1,
                        ..
                    }
                )
            })
        })
    }

    /// Whether the test touches any GIC register.
    pub fn uses_gic(&self) -> bool {
        self.programs().any(|p| {
            p.instrs.iter().any(|i| match i {
                Instruction::Msr { sysreg, .. } | Instruction::Mrs { sysreg, .. } => {
                    sysreg.is_gic()
                }
                _ => false,
            })
        })
    }

    pub fn programs(&self) -> impl Iterator<Item = &Program> {
        self.threads.iter().chain(self.handlers.values())
    }
}

impl fmt::Display for LitmusTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_test(self, f)
    }
}
