// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Canonical pretty-printer. Parsing its output yields an equal test.

use std::fmt::{self, Write};

use super::*;

fn imm(v: u64) -> String {
    if v >= 0x100 {
        format!("#0x{v:x}")
    } else {
        format!("#{v}")
    }
}

fn operand(o: &Operand) -> String {
    match o {
        Operand::Reg(r) => r.to_string(),
        Operand::Imm { value, shift: 0 } => imm(*value),
        Operand::Imm { value, shift } => format!("{}, LSL #{shift}", imm(*value)),
    }
}

fn mem(m: &MemOperand) -> String {
    let mut s = match m.mode {
        Addressing::Base(r) => format!("[{r}]"),
        Addressing::Offset(r, i) => format!("[{r},{}]", imm(i)),
        Addressing::RegOffset(r, x) => format!("[{r},{x}]"),
        Addressing::PostIndex(r, _) => format!("[{r}]"),
    };
    if m.fault {
        s.push_str("!fault");
    }
    if let Addressing::PostIndex(_, i) = m.mode {
        let _ = write!(s, ",{}", imm(i));
    }
    s
}

pub(crate) fn instruction(i: &Instruction) -> String {
    match i {
        Instruction::Mov { dst, src } => format!("MOV {dst},{}", operand(src)),
        Instruction::Alu { op, dst, lhs, rhs } => {
            format!("{} {dst},{lhs},{}", op.mnemonic(), operand(rhs))
        }
        Instruction::Cmp { lhs, rhs } => format!("CMP {lhs},{}", operand(rhs)),
        Instruction::B { target } => format!("B {target}"),
        Instruction::BCond {
            cond: Cond::Eq,
            target,
        } => format!("B.EQ {target}"),
        Instruction::BCond {
            cond: Cond::Ne,
            target,
        } => format!("B.NE {target}"),
        Instruction::Cbz { reg, target } => format!("CBZ {reg},{target}"),
        Instruction::Cbnz { reg, target } => format!("CBNZ {reg},{target}"),
        Instruction::Load { kind, rt, addr } => {
            let m = match kind {
                LoadKind::Plain => "LDR",
                LoadKind::Acquire => "LDAR",
                LoadKind::Exclusive => "LDXR",
            };
            format!("{m} {rt},{}", mem(addr))
        }
        Instruction::Store { kind, rt, addr } => {
            let m = match kind {
                StoreKind::Plain => "STR",
                StoreKind::Release => "STLR",
            };
            format!("{m} {rt},{}", mem(addr))
        }
        Instruction::Stxr { status, rt, addr } => format!("STXR W{},{rt},{}", status.0, mem(addr)),
        Instruction::Dmb(k) => format!("DMB {}", k.suffix()),
        Instruction::Dsb(k) => format!("DSB {}", k.suffix()),
        Instruction::Isb => "ISB".into(),
        Instruction::Svc(n) => format!("SVC #{n}"),
        Instruction::Eret => "ERET".into(),
        Instruction::Nop => "NOP".into(),
        Instruction::Mrs { dst, sysreg } => format!("MRS {dst},{sysreg}"),
        Instruction::Msr { sysreg, src } => format!("MSR {sysreg},{src}"),
        Instruction::MsrDaif {
            op: DaifOp::Set,
            imm,
        } => format!("MSR DAIFSet,#{imm}"),
        Instruction::MsrDaif {
            op: DaifOp::Clr,
            imm,
        } => format!("MSR DAIFClr,#{imm}"),
    }
}

fn program(p: &Program, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    for (idx, ins) in p.instrs.iter().enumerate() {
        let labels: Vec<&str> = p.labels_at(idx).collect();
        let prefix: String = labels.iter().map(|l| format!("{l}: ")).collect();
        writeln!(f, "  {prefix}{}", instruction(ins))?;
    }
    for l in p.labels_at(p.instrs.len()) {
        writeln!(f, "  {l}:")?;
    }
    Ok(())
}

fn prec(e: &CondExpr) -> u8 {
    match e {
        CondExpr::Or(..) => 0,
        CondExpr::And(..) => 1,
        _ => 2,
    }
}

fn expr(e: &CondExpr, out: &mut String) {
    let child = |c: &CondExpr, min: u8, out: &mut String| {
        if prec(c) < min {
            out.push('(');
            expr(c, out);
            out.push(')');
        } else {
            expr(c, out);
        }
    };
    match e {
        CondExpr::True => out.push_str("true"),
        CondExpr::Atom(Atom::Reg { thread, reg, value }) => {
            let _ = write!(out, "{thread}:{reg}={value}");
        }
        CondExpr::Atom(Atom::Mem { loc, value }) => {
            let _ = write!(out, "{loc}={value}");
        }
        CondExpr::Not(x) => {
            out.push('~');
            child(x, 2, out);
        }
        // Binary operators parse left-associatively, so the right operand
        // needs parentheses at equal precedence.
        CondExpr::And(a, b) => {
            child(a, 1, out);
            out.push_str(" /\\ ");
            child(b, 2, out);
        }
        CondExpr::Or(a, b) => {
            child(a, 0, out);
            out.push_str(" \\/ ");
            child(b, 1, out);
        }
    }
}

pub(crate) fn cond_expr(e: &CondExpr) -> String {
    let mut s = String::new();
    expr(e, &mut s);
    s
}

pub(super) fn write_test(t: &LitmusTest, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    writeln!(f, "name: {}", t.name)?;
    if !t.expectations.is_empty() {
        let parts: Vec<String> = t
            .expectations
            .iter()
            .map(|(k, v)| format!("{k}={}", v.keyword()))
            .collect();
        writeln!(f, "@expect {}", parts.join(" "))?;
    }
    let mut init: Vec<String> = t
        .init
        .memory
        .iter()
        .map(|(l, v)| format!("{l}={v}"))
        .collect();
    for r in &t.init.registers {
        match &r.value {
            InitValue::Const(v) => init.push(format!("{}:{}={v}", r.thread, r.reg)),
            InitValue::Location(l) => init.push(format!("{}:{}={l}", r.thread, r.reg)),
        }
    }
    for (tid, cfg) in &t.init.threads {
        if let Some(el) = cfg.pstate_el {
            init.push(format!("{tid}:PSTATE.EL={el}"));
        }
        if let Some(m) = cfg.eoimode {
            init.push(format!("{tid}:EOIMode={m}"));
        }
    }
    writeln!(f, "init: {}", init.join("; "))?;
    for (tid, p) in t.threads.iter().enumerate() {
        writeln!(f, "thread {tid}:")?;
        program(p, f)?;
        if let Some(h) = t.handlers.get(&tid) {
            writeln!(f, "handler {tid}:")?;
            program(h, f)?;
        }
    }
    for (tid, h) in &t.handlers {
        if *tid >= t.threads.len() {
            writeln!(f, "handler {tid}:")?;
            program(h, f)?;
        }
    }
    for inj in &t.injections {
        writeln!(f, "inject {} at {}: IRQ", inj.thread, inj.label)?;
    }
    let q = match t.final_cond.quantifier {
        Quantifier::Exists => "exists",
        Quantifier::Forbidden => "forbidden",
    };
    writeln!(f, "final {q}: {}", cond_expr(&t.final_cond.expr))
}
