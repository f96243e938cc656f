// Copyright 2026 The exmm Authors
// SPDX-License-Identifier: Apache-2.0

//! Finite binary relations over a dense carrier of event ids.
//!
//! Both [`Relation`] and [`EventSet`] store one bit per element, so a
//! relation over `n` events is an `n x n` bit matrix stored row-major.
//! All binary operations require both operands to share a carrier; the
//! `try_*` forms report a mismatch as [`CarrierMismatch`], the plain forms
//! panic on it.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

/// Dense index of an event within a candidate execution.
pub type EventId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("carrier mismatch: {left} events vs {right} events")]
pub struct CarrierMismatch {
    pub left: usize,
    pub right: usize,
}

fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

/// A subset of the carrier `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EventSet {
    n: usize,
    bits: Vec<u64>,
}

impl EventSet {
    pub fn empty(n: usize) -> Self {
        EventSet {
            n,
            bits: vec![0; words_for(n)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for e in 0..n {
            s.insert(e);
        }
        s
    }

    pub fn from_iter(n: usize, it: impl IntoIterator<Item = EventId>) -> Self {
        let mut s = Self::empty(n);
        for e in it {
            s.insert(e);
        }
        s
    }

    pub fn carrier_size(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, e: EventId) {
        assert!(e < self.n, "event {e} outside carrier of size {}", self.n);
        self.bits[e / 64] |= 1 << (e % 64);
    }

    pub fn contains(&self, e: EventId) -> bool {
        e < self.n && self.bits[e / 64] & (1 << (e % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = EventId> + '_ {
        (0..self.n).filter(move |e| self.contains(*e))
    }

    fn check(&self, other: &EventSet) -> Result<(), CarrierMismatch> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(CarrierMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    pub fn try_union(&self, other: &EventSet) -> Result<EventSet, CarrierMismatch> {
        self.check(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a | b)
            .collect();
        Ok(EventSet { n: self.n, bits })
    }

    pub fn try_intersect(&self, other: &EventSet) -> Result<EventSet, CarrierMismatch> {
        self.check(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a & b)
            .collect();
        Ok(EventSet { n: self.n, bits })
    }

    pub fn try_difference(&self, other: &EventSet) -> Result<EventSet, CarrierMismatch> {
        self.check(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a & !b)
            .collect();
        Ok(EventSet { n: self.n, bits })
    }

    pub fn union(&self, other: &EventSet) -> EventSet {
        self.try_union(other).expect("event set union")
    }

    pub fn intersect(&self, other: &EventSet) -> EventSet {
        self.try_intersect(other).expect("event set intersection")
    }

    pub fn difference(&self, other: &EventSet) -> EventSet {
        self.try_difference(other).expect("event set difference")
    }
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite binary relation over the carrier `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        let words = words_for(n);
        Relation {
            n,
            words,
            bits: vec![0; words * n],
        }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (EventId, EventId)>) -> Self {
        let mut r = Self::empty(n);
        for (a, b) in pairs {
            r.insert(a, b);
        }
        r
    }

    /// `[S]`: the identity restricted to `set`.
    pub fn identity_on(set: &EventSet) -> Self {
        Self::from_pairs(set.n, set.iter().map(|e| (e, e)))
    }

    /// `S x T`.
    pub fn cartesian(dom: &EventSet, rng: &EventSet) -> Result<Self, CarrierMismatch> {
        dom.check(rng)?;
        let mut r = Self::empty(dom.n);
        for a in dom.iter() {
            r.row_mut(a).copy_from_slice(&rng.bits);
        }
        Ok(r)
    }

    pub fn carrier_size(&self) -> usize {
        self.n
    }

    fn row(&self, a: EventId) -> &[u64] {
        &self.bits[a * self.words..(a + 1) * self.words]
    }

    fn row_mut(&mut self, a: EventId) -> &mut [u64] {
        &mut self.bits[a * self.words..(a + 1) * self.words]
    }

    pub fn insert(&mut self, a: EventId, b: EventId) {
        assert!(
            a < self.n && b < self.n,
            "pair ({a},{b}) outside carrier of size {}",
            self.n
        );
        let w = self.words;
        self.bits[a * w + b / 64] |= 1 << (b % 64);
    }

    pub fn contains(&self, a: EventId, b: EventId) -> bool {
        a < self.n && b < self.n && self.bits[a * self.words + b / 64] & (1 << (b % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    /// Successors of `a`.
    pub fn successors(&self, a: EventId) -> impl Iterator<Item = EventId> + '_ {
        let row = self.row(a);
        (0..self.n).filter(move |b| row[b / 64] & (1 << (b % 64)) != 0)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (EventId, EventId)> + '_ {
        (0..self.n).flat_map(move |a| self.successors(a).map(move |b| (a, b)))
    }

    fn check(&self, other: &Relation) -> Result<(), CarrierMismatch> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(CarrierMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }

    fn zip_with(
        &self,
        other: &Relation,
        f: impl Fn(u64, u64) -> u64,
    ) -> Result<Relation, CarrierMismatch> {
        self.check(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(Relation {
            n: self.n,
            words: self.words,
            bits,
        })
    }

    pub fn try_union(&self, other: &Relation) -> Result<Relation, CarrierMismatch> {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn try_intersect(&self, other: &Relation) -> Result<Relation, CarrierMismatch> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn try_difference(&self, other: &Relation) -> Result<Relation, CarrierMismatch> {
        self.zip_with(other, |a, b| a & !b)
    }

    /// Relational composition `self ; other`.
    pub fn try_compose(&self, other: &Relation) -> Result<Relation, CarrierMismatch> {
        self.check(other)?;
        let mut out = Relation::empty(self.n);
        for a in 0..self.n {
            let mut acc = vec![0u64; self.words];
            for b in self.successors(a) {
                for (x, y) in acc.iter_mut().zip(other.row(b)) {
                    *x |= y;
                }
            }
            out.row_mut(a).copy_from_slice(&acc);
        }
        Ok(out)
    }

    /// `[dom] ; self ; [rng]`.
    pub fn try_restrict(
        &self,
        dom: &EventSet,
        rng: &EventSet,
    ) -> Result<Relation, CarrierMismatch> {
        if dom.n != self.n {
            return Err(CarrierMismatch {
                left: self.n,
                right: dom.n,
            });
        }
        if rng.n != self.n {
            return Err(CarrierMismatch {
                left: self.n,
                right: rng.n,
            });
        }
        let mut out = Relation::empty(self.n);
        for a in dom.iter() {
            let words = self.words;
            let src = &self.bits[a * words..(a + 1) * words];
            let masked: Vec<u64> = src.iter().zip(&rng.bits).map(|(x, m)| x & m).collect();
            out.row_mut(a).copy_from_slice(&masked);
        }
        Ok(out)
    }

    pub fn union(&self, other: &Relation) -> Relation {
        self.try_union(other).expect("relation union")
    }

    pub fn intersect(&self, other: &Relation) -> Relation {
        self.try_intersect(other).expect("relation intersection")
    }

    pub fn difference(&self, other: &Relation) -> Relation {
        self.try_difference(other).expect("relation difference")
    }

    pub fn compose(&self, other: &Relation) -> Relation {
        self.try_compose(other).expect("relation composition")
    }

    pub fn restrict(&self, dom: &EventSet, rng: &EventSet) -> Relation {
        self.try_restrict(dom, rng).expect("relation restriction")
    }

    /// `self ; [rng]`.
    pub fn range_restrict(&self, rng: &EventSet) -> Relation {
        self.restrict(&EventSet::full(self.n), rng)
    }

    /// `[dom] ; self`.
    pub fn domain_restrict(&self, dom: &EventSet) -> Relation {
        self.restrict(dom, &EventSet::full(self.n))
    }

    pub fn inverse(&self) -> Relation {
        Relation::from_pairs(self.n, self.pairs().map(|(a, b)| (b, a)))
    }

    pub fn domain(&self) -> EventSet {
        EventSet::from_iter(
            self.n,
            (0..self.n).filter(|a| self.row(*a).iter().any(|w| *w != 0)),
        )
    }

    pub fn range(&self) -> EventSet {
        let mut s = EventSet::empty(self.n);
        for a in 0..self.n {
            for (x, y) in s.bits.iter_mut().zip(self.row(a)) {
                *x |= y;
            }
        }
        s
    }

    /// Least transitive superset, by Warshall's algorithm over bit rows.
    pub fn transitive_closure(&self) -> Relation {
        let mut out = self.clone();
        let w = self.words;
        for k in 0..self.n {
            let krow: Vec<u64> = out.row(k).to_vec();
            for i in 0..self.n {
                if out.bits[i * w + k / 64] & (1 << (k % 64)) != 0 {
                    for (x, y) in out.row_mut(i).iter_mut().zip(&krow) {
                        *x |= y;
                    }
                }
            }
        }
        out
    }

    pub fn irreflexive(&self) -> bool {
        (0..self.n).all(|a| !self.contains(a, a))
    }

    pub fn acyclic(&self) -> bool {
        self.transitive_closure().irreflexive()
    }

    /// A shortest cycle, as the list of events visited, if one exists.
    pub fn find_cycle(&self) -> Option<Vec<EventId>> {
        let mut best: Option<Vec<EventId>> = None;
        for start in 0..self.n {
            // BFS from start back to start.
            let mut parent = vec![usize::MAX; self.n];
            let mut queue = VecDeque::new();
            for b in self.successors(start) {
                if b == start {
                    return Some(vec![start]);
                }
                if parent[b] == usize::MAX {
                    parent[b] = start;
                    queue.push_back(b);
                }
            }
            let mut found = None;
            while let Some(a) = queue.pop_front() {
                if self.contains(a, start) {
                    found = Some(a);
                    break;
                }
                for b in self.successors(a) {
                    if parent[b] == usize::MAX && b != start {
                        parent[b] = a;
                        queue.push_back(b);
                    }
                }
            }
            if let Some(last) = found {
                let mut path = vec![last];
                let mut cur = last;
                while parent[cur] != start {
                    cur = parent[cur];
                    path.push(cur);
                }
                path.push(start);
                path.reverse();
                if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                    best = Some(path);
                }
            }
        }
        best
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}
