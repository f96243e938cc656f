// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Parser for the `.elitmus` format.

use std::collections::BTreeMap;

use thiserror::Error;

use super::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Error within a line: the offending fragment, used to locate a column.
struct Local {
    token: String,
    message: String,
}

fn local(token: &str, message: impl Into<String>) -> Local {
    Local {
        token: token.to_string(),
        message: message.into(),
    }
}

type LResult<T> = Result<T, Local>;

enum Section {
    None,
    Thread(ThreadId),
    Handler(ThreadId),
}

fn strip_comment(line: &str) -> &str {
    let line = match line.find("//") {
        Some(i) => &line[..i],
        None => line,
    };
    if line.trim_start().starts_with('#') {
        ""
    } else {
        line
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn parse_u64(s: &str) -> Option<u64> {
    let s = s.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else {
        s.parse().ok()
    }
}

fn parse_reg(s: &str) -> LResult<Reg> {
    let t = s.trim();
    let upper = t.to_ascii_uppercase();
    let digits = upper.strip_prefix('X').or_else(|| upper.strip_prefix('W'));
    digits
        .and_then(|d| d.parse::<u8>().ok())
        .and_then(Reg::new)
        .ok_or_else(|| local(t, format!("expected register X0-X30, found `{t}`")))
}

fn parse_imm(s: &str) -> LResult<u64> {
    let t = s.trim();
    t.strip_prefix('#')
        .and_then(parse_u64)
        .ok_or_else(|| local(t, format!("expected immediate `#n`, found `{t}`")))
}

/// Splits operands on commas outside brackets.
fn split_operands(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

/// Parses a register or immediate starting at `ops[0]`, with an optional
/// trailing `LSL #n`.
fn parse_operand(ops: &[&str]) -> LResult<Operand> {
    let first = ops[0];
    if first.starts_with('#') {
        let value = parse_imm(first)?;
        let shift = match ops.get(1) {
            None => 0,
            Some(s) => {
                let rest = s
                    .trim()
                    .strip_prefix("LSL")
                    .or_else(|| s.trim().strip_prefix("lsl"))
                    .ok_or_else(|| local(s, format!("expected `LSL #n`, found `{s}`")))?;
                let n = parse_imm(rest)?;
                if n >= 64 {
                    return Err(local(s, "shift out of range"));
                }
                n as u8
            }
        };
        Ok(Operand::Imm { value, shift })
    } else {
        if let Some(extra) = ops.get(1) {
            return Err(local(extra, format!("unexpected operand `{extra}`")));
        }
        Ok(Operand::Reg(parse_reg(first)?))
    }
}

fn parse_mem(ops: &[&str]) -> LResult<MemOperand> {
    let tok = ops
        .first()
        .ok_or_else(|| local("", "missing memory operand"))?
        .trim();
    let (body, fault) = match tok.strip_suffix("!fault") {
        Some(b) => (b.trim(), true),
        None => (tok, false),
    };
    let inner = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| {
            local(
                tok,
                format!("expected memory operand `[Xn...]`, found `{tok}`"),
            )
        })?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    let base = parse_reg(parts[0])?;
    let mode = match (parts.len(), ops.get(1)) {
        (1, None) => Addressing::Base(base),
        (1, Some(post)) => {
            if let Some(extra) = ops.get(2) {
                return Err(local(extra, format!("unexpected operand `{extra}`")));
            }
            Addressing::PostIndex(base, parse_imm(post)?)
        }
        (2, None) if parts[1].starts_with('#') => Addressing::Offset(base, parse_imm(parts[1])?),
        (2, None) => Addressing::RegOffset(base, parse_reg(parts[1])?),
        (_, Some(extra)) => return Err(local(extra, format!("unexpected operand `{extra}`"))),
        _ => return Err(local(tok, "too many components in memory operand")),
    };
    Ok(MemOperand { mode, fault })
}

fn parse_barrier(s: Option<&&str>, mnemonic: &str) -> LResult<BarrierKind> {
    let arg = s
        .map(|a| a.trim().to_ascii_uppercase())
        .unwrap_or_else(|| "SY".into());
    match arg.as_str() {
        "SY" | "ISH" | "OSH" | "NSH" => Ok(BarrierKind::Sy),
        "ST" | "ISHST" | "OSHST" | "NSHST" => Ok(BarrierKind::St),
        "LD" | "ISHLD" | "OSHLD" | "NSHLD" => Ok(BarrierKind::Ld),
        _ => Err(local(&arg, format!("unknown {mnemonic} option `{arg}`"))),
    }
}

fn parse_sysreg(s: &str) -> LResult<SysReg> {
    let t = s.trim();
    SysReg::from_name(t).ok_or_else(|| {
        let upper = t.to_ascii_uppercase();
        if upper.starts_with("GICR_") || upper.starts_with("GICD_") || upper.starts_with("ICC_") {
            local(t, format!("reserved register `{t}` is not modelled"))
        } else {
            local(t, format!("unknown system register `{t}`"))
        }
    })
}

fn expect_count(ops: &[&str], n: usize, mnemonic: &str, whole: &str) -> LResult<()> {
    if ops.len() == n {
        Ok(())
    } else {
        Err(local(
            whole,
            format!("{mnemonic} takes {n} operand(s), found {}", ops.len()),
        ))
    }
}

fn parse_label_ref(s: &str) -> LResult<String> {
    let t = s.trim();
    if is_ident(t) {
        Ok(t.to_string())
    } else {
        Err(local(t, format!("expected label, found `{t}`")))
    }
}

fn parse_instruction(text: &str) -> LResult<Instruction> {
    let text = text.trim();
    let (mnemonic, rest) = match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], text[i..].trim()),
        None => (text, ""),
    };
    let m = mnemonic.to_ascii_uppercase();
    let ops = split_operands(rest);
    let n = |k: usize| expect_count(&ops, k, &m, text);
    let ins = match m.as_str() {
        "MOV" => {
            if ops.len() < 2 {
                return Err(local(text, "MOV takes a destination and a source"));
            }
            Instruction::Mov {
                dst: parse_reg(ops[0])?,
                src: parse_operand(&ops[1..])?,
            }
        }
        "ADD" | "AND" | "EOR" | "ORR" => {
            if ops.len() < 3 {
                return Err(local(text, format!("{m} takes three operands")));
            }
            let op = match m.as_str() {
                "ADD" => AluOp::Add,
                "AND" => AluOp::And,
                "EOR" => AluOp::Eor,
                _ => AluOp::Orr,
            };
            Instruction::Alu {
                op,
                dst: parse_reg(ops[0])?,
                lhs: parse_reg(ops[1])?,
                rhs: parse_operand(&ops[2..])?,
            }
        }
        "CMP" => {
            if ops.len() < 2 {
                return Err(local(text, "CMP takes two operands"));
            }
            Instruction::Cmp {
                lhs: parse_reg(ops[0])?,
                rhs: parse_operand(&ops[1..])?,
            }
        }
        "B" => {
            n(1)?;
            Instruction::B {
                target: parse_label_ref(ops[0])?,
            }
        }
        "B.EQ" | "B.NE" => {
            n(1)?;
            let cond = if m == "B.EQ" { Cond::Eq } else { Cond::Ne };
            Instruction::BCond {
                cond,
                target: parse_label_ref(ops[0])?,
            }
        }
        "CBZ" | "CBNZ" => {
            n(2)?;
            let reg = parse_reg(ops[0])?;
            let target = parse_label_ref(ops[1])?;
            if m == "CBZ" {
                Instruction::Cbz { reg, target }
            } else {
                Instruction::Cbnz { reg, target }
            }
        }
        "LDR" | "LDAR" | "LDXR" => {
            if ops.len() < 2 {
                return Err(local(text, format!("{m} takes a register and an address")));
            }
            let kind = match m.as_str() {
                "LDR" => LoadKind::Plain,
                "LDAR" => LoadKind::Acquire,
                _ => LoadKind::Exclusive,
            };
            let addr = parse_mem(&ops[1..])?;
            if kind != LoadKind::Plain && !matches!(addr.mode, Addressing::Base(_)) {
                return Err(local(
                    ops[1],
                    format!("{m} only supports `[Xn]` addressing"),
                ));
            }
            Instruction::Load {
                kind,
                rt: parse_reg(ops[0])?,
                addr,
            }
        }
        "STR" | "STLR" => {
            if ops.len() < 2 {
                return Err(local(text, format!("{m} takes a register and an address")));
            }
            let kind = if m == "STR" {
                StoreKind::Plain
            } else {
                StoreKind::Release
            };
            let addr = parse_mem(&ops[1..])?;
            if kind != StoreKind::Plain && !matches!(addr.mode, Addressing::Base(_)) {
                return Err(local(
                    ops[1],
                    format!("{m} only supports `[Xn]` addressing"),
                ));
            }
            Instruction::Store {
                kind,
                rt: parse_reg(ops[0])?,
                addr,
            }
        }
        "STXR" => {
            n(3)?;
            let addr = parse_mem(&ops[2..])?;
            if !matches!(addr.mode, Addressing::Base(_)) {
                return Err(local(ops[2], "STXR only supports `[Xn]` addressing"));
            }
            Instruction::Stxr {
                status: parse_reg(ops[0])?,
                rt: parse_reg(ops[1])?,
                addr,
            }
        }
        "DMB" | "DSB" => {
            if ops.len() > 1 {
                return Err(local(text, format!("{m} takes at most one option")));
            }
            let k = parse_barrier(ops.first(), &m)?;
            if m == "DMB" {
                Instruction::Dmb(k)
            } else {
                Instruction::Dsb(k)
            }
        }
        "ISB" => {
            n(0)?;
            Instruction::Isb
        }
        "ERET" => {
            n(0)?;
            Instruction::Eret
        }
        "NOP" => {
            n(0)?;
            Instruction::Nop
        }
        "SVC" => {
            n(1)?;
            let v = parse_imm(ops[0])?;
            let imm = u16::try_from(v).map_err(|_| local(ops[0], "SVC immediate out of range"))?;
            Instruction::Svc(imm)
        }
        "MRS" => {
            n(2)?;
            Instruction::Mrs {
                dst: parse_reg(ops[0])?,
                sysreg: parse_sysreg(ops[1])?,
            }
        }
        "MSR" => {
            n(2)?;
            let target = ops[0].to_ascii_uppercase();
            if target == "DAIFSET" || target == "DAIFCLR" {
                let v = parse_imm(ops[1])?;
                if v > 0xF {
                    return Err(local(ops[1], "DAIF immediate out of range"));
                }
                let op = if target == "DAIFSET" {
                    DaifOp::Set
                } else {
                    DaifOp::Clr
                };
                Instruction::MsrDaif { op, imm: v as u8 }
            } else {
                Instruction::Msr {
                    sysreg: parse_sysreg(ops[0])?,
                    src: parse_reg(ops[1])?,
                }
            }
        }
        _ => return Err(local(mnemonic, format!("unknown instruction `{mnemonic}`"))),
    };
    Ok(ins)
}

fn parse_thread_id(s: &str) -> LResult<ThreadId> {
    s.trim()
        .parse()
        .map_err(|_| local(s, format!("expected thread number, found `{}`", s.trim())))
}

fn parse_init_item(item: &str, init: &mut Init) -> LResult<()> {
    let (lhs, rhs) = item
        .split_once('=')
        .ok_or_else(|| local(item, format!("expected `name=value`, found `{item}`")))?;
    let (lhs, rhs) = (lhs.trim(), rhs.trim());
    if let Some((tid, what)) = lhs.split_once(':') {
        let thread = parse_thread_id(tid)?;
        let what = what.trim();
        let cfg = || init.threads.get(&thread).copied().unwrap_or_default();
        match what.to_ascii_uppercase().as_str() {
            "PSTATE.EL" => {
                let el = parse_u64(rhs)
                    .filter(|v| *v <= 3)
                    .ok_or_else(|| local(rhs, "PSTATE.EL must be 0-3"))?;
                let mut c = cfg();
                c.pstate_el = Some(el as u8);
                init.threads.insert(thread, c);
            }
            "EOIMODE" => {
                let m = parse_u64(rhs)
                    .filter(|v| *v <= 1)
                    .ok_or_else(|| local(rhs, "EOIMode must be 0 or 1"))?;
                let mut c = cfg();
                c.eoimode = Some(m as u8);
                init.threads.insert(thread, c);
            }
            _ => {
                let reg = parse_reg(what)?;
                let value = match parse_u64(rhs) {
                    Some(v) => InitValue::Const(v),
                    None if is_ident(rhs) => InitValue::Location(rhs.to_string()),
                    None => return Err(local(rhs, format!("bad initial value `{rhs}`"))),
                };
                init.registers.push(RegInit { thread, reg, value });
            }
        }
    } else {
        if !is_ident(lhs) {
            return Err(local(lhs, format!("bad location name `{lhs}`")));
        }
        let v = parse_u64(rhs).ok_or_else(|| local(rhs, format!("bad initial value `{rhs}`")))?;
        if init.memory.iter().any(|(l, _)| l == lhs) {
            return Err(local(lhs, format!("location `{lhs}` initialised twice")));
        }
        init.memory.push((lhs.to_string(), v));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    And,
    Or,
    Not,
    LParen,
    RParen,
    Word(String),
}

fn tokenize_cond(s: &str) -> LResult<Vec<Tok>> {
    let mut out = Vec::new();
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if s[i..].starts_with("/\\") {
            out.push(Tok::And);
            i += 2;
        } else if s[i..].starts_with("\\/") {
            out.push(Tok::Or);
            i += 2;
        } else if c == ',' {
            out.push(Tok::And);
            i += 1;
        } else if c == '~' {
            out.push(Tok::Not);
            i += 1;
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b"_:=.".contains(&b[i])) {
                i += 1;
            }
            out.push(Tok::Word(s[start..i].to_string()));
        } else {
            return Err(local(
                &s[i..i + c.len_utf8()],
                format!("unexpected `{c}` in condition"),
            ));
        }
    }
    Ok(out)
}

struct CondParser {
    toks: Vec<Tok>,
    pos: usize,
}

impl CondParser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn or(&mut self) -> LResult<CondExpr> {
        let mut lhs = self.and()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = CondExpr::Or(Box::new(lhs), Box::new(self.and()?));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> LResult<CondExpr> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = CondExpr::And(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> LResult<CondExpr> {
        let tok = self.peek().cloned();
        self.pos += 1;
        match tok {
            Some(Tok::Not) => Ok(CondExpr::Not(Box::new(self.unary()?))),
            Some(Tok::LParen) => {
                let e = self.or()?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(local(")", "missing `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(Tok::Word(w)) if w == "true" => Ok(CondExpr::True),
            Some(Tok::Word(w)) => parse_atom(&w).map(CondExpr::Atom),
            _ => Err(local("", "unexpected end of condition")),
        }
    }
}

fn parse_atom(w: &str) -> LResult<Atom> {
    let (lhs, rhs) = w
        .split_once('=')
        .ok_or_else(|| local(w, format!("expected `name=value`, found `{w}`")))?;
    let value = parse_u64(rhs).ok_or_else(|| local(w, format!("bad value `{rhs}`")))?;
    match lhs.split_once(':') {
        Some((t, r)) => Ok(Atom::Reg {
            thread: parse_thread_id(t)?,
            reg: parse_reg(r)?,
            value,
        }),
        None if is_ident(lhs) => Ok(Atom::Mem {
            loc: lhs.to_string(),
            value,
        }),
        None => Err(local(w, format!("bad location `{lhs}`"))),
    }
}

fn parse_cond(s: &str) -> LResult<CondExpr> {
    let toks = tokenize_cond(s)?;
    if toks.is_empty() {
        return Ok(CondExpr::True);
    }
    let mut p = CondParser { toks, pos: 0 };
    let e = p.or()?;
    if p.pos < p.toks.len() {
        return Err(local(s, "trailing tokens in condition"));
    }
    Ok(e)
}

fn parse_expectation(v: &str) -> Option<Expectation> {
    match v.to_ascii_lowercase().as_str() {
        "allow" | "allowed" => Some(Expectation::Allow),
        "forbid" | "forbidden" => Some(Expectation::Forbid),
        "unknown" => Some(Expectation::Unknown),
        _ => None,
    }
}

/// Strips leading `label:` prefixes, returning the labels and the rest.
fn split_labels(mut s: &str) -> (Vec<&str>, &str) {
    let mut labels = Vec::new();
    while let Some(i) = s.find(':') {
        let cand = s[..i].trim();
        if cand.is_empty()
            || !is_ident(cand)
            || cand.contains('.') && cand.to_ascii_uppercase().starts_with("B.")
        {
            break;
        }
        labels.push(cand);
        s = s[i + 1..].trim_start();
    }
    (labels, s.trim())
}

/// Parses a complete `.elitmus` test.
pub fn parse_test(src: &str) -> Result<LitmusTest, ParseError> {
    let mut name = None;
    let mut expectations = BTreeMap::new();
    let mut init = Init::default();
    let mut threads: Vec<Program> = Vec::new();
    let mut handlers: BTreeMap<ThreadId, Program> = BTreeMap::new();
    let mut injections = Vec::new();
    let mut final_cond = None;
    let mut section = Section::None;
    // (line, column, target, program key) for label resolution.
    let mut branch_refs: Vec<(usize, usize, String, Option<ThreadId>, ThreadId)> = Vec::new();
    let mut inject_lines = Vec::new();

    for (lineno, raw) in src.lines().enumerate() {
        let lineno = lineno + 1;
        let line = strip_comment(raw);
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        let col_of = |tok: &str| -> usize {
            if tok.is_empty() {
                indent + 1
            } else {
                raw.find(tok).map_or(indent + 1, |i| i + 1)
            }
        };
        let fail = |l: Local| ParseError {
            line: lineno,
            column: col_of(&l.token),
            message: l.message,
        };
        let words: Vec<&str> = t.split_whitespace().collect();
        let first = words[0].to_ascii_lowercase();

        if let Some(rest) = t.strip_prefix("name:") {
            let n = rest.trim();
            if n.is_empty() {
                return Err(fail(local("name:", "empty test name")));
            }
            name = Some(n.to_string());
            section = Section::None;
        } else if first == "@expect" {
            for kv in &words[1..] {
                let (k, v) = kv.split_once('=').ok_or_else(|| {
                    fail(local(
                        kv,
                        format!("expected `variant=verdict`, found `{kv}`"),
                    ))
                })?;
                let e = parse_expectation(v)
                    .ok_or_else(|| fail(local(kv, format!("unknown verdict `{v}`"))))?;
                expectations.insert(k.to_string(), e);
            }
        } else if let Some(rest) = t.strip_prefix("init:") {
            for item in rest.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                parse_init_item(item, &mut init).map_err(fail)?;
            }
            section = Section::None;
        } else if (first == "thread" || first == "handler")
            && words.len() == 2
            && words[1].ends_with(':')
        {
            let tid = parse_thread_id(words[1].trim_end_matches(':')).map_err(fail)?;
            if first == "thread" {
                if tid != threads.len() {
                    return Err(fail(local(
                        words[1],
                        format!("expected `thread {}:`", threads.len()),
                    )));
                }
                threads.push(Program::default());
                section = Section::Thread(tid);
            } else {
                if handlers.contains_key(&tid) {
                    return Err(fail(local(
                        words[1],
                        format!("duplicate handler for thread {tid}"),
                    )));
                }
                handlers.insert(tid, Program::default());
                section = Section::Handler(tid);
            }
        } else if first == "inject" {
            // inject N at L: IRQ
            let ok = words.len() == 5 && words[2] == "at" && words[3].ends_with(':');
            if !ok {
                return Err(fail(local(t, "expected `inject N at LABEL: IRQ`")));
            }
            if !words[4].eq_ignore_ascii_case("IRQ") {
                return Err(fail(local(
                    words[4],
                    format!("unsupported injection `{}`", words[4]),
                )));
            }
            let thread = parse_thread_id(words[1]).map_err(fail)?;
            let label = words[3].trim_end_matches(':').to_string();
            inject_lines.push((lineno, col_of(words[3])));
            injections.push(Injection {
                thread,
                label,
                kind: InjectionKind::Irq,
            });
            section = Section::None;
        } else if first == "final" {
            let rest = t[5..].trim_start();
            let (quantifier, body) = if let Some(b) = rest.strip_prefix("exists:") {
                (Quantifier::Exists, b)
            } else if let Some(b) = rest.strip_prefix("forbidden:") {
                (Quantifier::Forbidden, b)
            } else {
                return Err(fail(local(
                    rest,
                    "expected `final exists:` or `final forbidden:`",
                )));
            };
            if final_cond.is_some() {
                return Err(fail(local("final", "duplicate final condition")));
            }
            let expr = parse_cond(body).map_err(fail)?;
            final_cond = Some(FinalCondition { quantifier, expr });
            section = Section::None;
        } else {
            let (prog, key) = match section {
                Section::Thread(n) => (&mut threads[n], (None, n)),
                Section::Handler(n) => {
                    (handlers.get_mut(&n).expect("handler section"), (Some(n), n))
                }
                Section::None => return Err(fail(local(t, format!("unexpected line `{t}`")))),
            };
            let (labels, rest) = split_labels(t);
            for l in labels {
                if prog
                    .labels
                    .insert(l.to_string(), prog.instrs.len())
                    .is_some()
                {
                    return Err(fail(local(l, format!("duplicate label `{l}`"))));
                }
            }
            if !rest.is_empty() {
                let ins = parse_instruction(rest).map_err(fail)?;
                if let Some(target) = ins.branch_target() {
                    branch_refs.push((lineno, col_of(target), target.to_string(), key.0, key.1));
                }
                prog.instrs.push(ins);
            }
        }
    }

    let name = name.ok_or(ParseError {
        line: 1,
        column: 1,
        message: "missing `name:`".into(),
    })?;
    let line_count = src.lines().count().max(1);
    let final_cond = final_cond.ok_or(ParseError {
        line: line_count,
        column: 1,
        message: "missing `final` condition".into(),
    })?;
    if threads.is_empty() {
        return Err(ParseError {
            line: line_count,
            column: 1,
            message: "test has no threads".into(),
        });
    }
    for (line, column, target, handler, tid) in branch_refs {
        let prog = match handler {
            Some(h) => &handlers[&h],
            None => &threads[tid],
        };
        if prog.label(&target).is_none() {
            return Err(ParseError {
                line,
                column,
                message: format!("undefined label `{target}`"),
            });
        }
    }
    for (inj, (line, column)) in injections.iter().zip(inject_lines) {
        let found = threads.get(inj.thread).and_then(|p| p.label(&inj.label));
        if found.is_none() {
            return Err(ParseError {
                line,
                column,
                message: format!("undefined label `{}` in thread {}", inj.label, inj.thread),
            });
        }
    }
    if let Some(h) = handlers.keys().find(|h| **h >= threads.len()) {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: format!("handler for missing thread {h}"),
        });
    }
    Ok(LitmusTest {
        name,
        expectations,
        init,
        threads,
        handlers,
        injections,
        final_cond,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instruction_forms() {
        let cases = [
            "MOV X0,#1",
            "MOV X2,#1, LSL #40",
            "ADD X0,X0,#1",
            "EOR X1,X0,X0",
            "LDR X0,[X1,X2]",
            "LDR X0,[X1]!fault",
            "STR X0,[X1],#8",
            "STXR W4,X0,[X1]",
            "DSB ST",
            "MSR DAIFSet,#2",
            "MRS X0,IAR",
            "MSR ICC_SGI1R_EL1,X2",
            "CBNZ X0,L0",
            "B.NE L0",
        ];
        for c in cases {
            let i = parse_instruction(c).unwrap_or_else(|e| panic!("{c}: {}", e.message));
            let again = parse_instruction(&print::instruction(&i)).ok();
            assert_eq!(again.as_ref(), Some(&i), "{c}");
        }
    }

    #[test]
    fn ish_barriers_map_to_base_kinds() {
        assert_eq!(
            parse_instruction("DMB ISH").ok(),
            Some(Instruction::Dmb(BarrierKind::Sy))
        );
        assert_eq!(
            parse_instruction("DSB ISHST").ok(),
            Some(Instruction::Dsb(BarrierKind::St))
        );
    }

    #[test]
    fn reserved_register_rejected() {
        let e = parse_instruction("MSR GICR_IPRIORITYR,X0")
            .err()
            .map(|e| e.message);
        assert!(e.is_some_and(|m| m.contains("reserved")));
    }

    #[test]
    fn condition_precedence() {
        let e = parse_cond("x=1 \\/ y=1 /\\ ~z=0").ok();
        let s = e.as_ref().map(print::cond_expr);
        assert_eq!(s.as_deref(), Some("x=1 \\/ y=1 /\\ ~z=0"));
        let r = parse_cond("a=1 /\\ (b=1 /\\ c=1)").ok();
        assert_eq!(
            r.as_ref().map(print::cond_expr).as_deref(),
            Some("a=1 /\\ (b=1 /\\ c=1)")
        );
    }

    #[test]
    fn error_positions() {
        let src = "name: t\ninit: x=0\nthread 0:\n  FROB X0\nfinal exists: true\n";
        let e = parse_test(src).unwrap_err();
        assert_eq!((e.line, e.column), (4, 3));
        let src = "name: t\ninit: x=0\nthread 0:\n  B nowhere\nfinal exists: true\n";
        let e = parse_test(src).unwrap_err();
        assert_eq!(e.line, 4);
        assert!(e.message.contains("nowhere"));
    }
}
