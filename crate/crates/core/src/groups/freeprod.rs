use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, RngCore};
use serde::Serialize;

use super::{unsupported, CosetSpace, GroupError, HomWitness, Instance, SubgroupDescriptor, ZOrder};

/// `Z/order`, or `Z` when `order == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct CyclicFactor {
    pub order: u64,
}

impl CyclicFactor {
    pub fn normalize(self, e: i64) -> i64 {
        if self.order == 0 {
            e
        } else {
            e.rem_euclid(self.order as i64)
        }
    }

    pub fn is_finite(self) -> bool {
        self.order != 0
    }

    fn enumerate(self, i: usize) -> i64 {
        if self.is_finite() {
            i as i64
        } else {
            ZOrder::PositiveFirst.decode(i)
        }
    }

    fn index(self, e: i64) -> usize {
        if self.is_finite() {
            self.normalize(e) as usize
        } else {
            ZOrder::PositiveFirst.index(e)
        }
    }

    fn parse(s: &str) -> Result<Self, GroupError> {
        if s == "Z" {
            return Ok(CyclicFactor { order: 0 });
        }
        let n = s
            .strip_prefix('Z')
            .and_then(|n| n.parse::<u64>().ok())
            .filter(|&n| n >= 2)
            .ok_or_else(|| GroupError::BadInstance(format!("unknown factor {s:?}")))?;
        Ok(CyclicFactor { order: n })
    }
}

impl fmt::Display for CyclicFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.order == 0 {
            write!(f, "Z")
        } else {
            write!(f, "Z{}", self.order)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    G,
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub side: Side,
    pub exp: i64,
}

/// Alternating normal form in `G ∗ H`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreeElem(pub Vec<Syllable>);

fn power(name: &str, e: i64) -> String {
    if e == 1 {
        name.to_string()
    } else {
        format!("{name}^{e}")
    }
}

impl fmt::Display for FreeElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|s| power(if s.side == Side::G { "g" } else { "h" }, s.exp))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// The basis letter `[g, h] = g h g⁻¹ h⁻¹` with `g ≠ e`, `h ≠ e`, exponents
/// in normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Commutator {
    pub g: i64,
    pub h: i64,
}

impl fmt::Display for Commutator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", power("g", self.g), power("h", self.h))
    }
}

/// A letter of a word in the commutator basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BasisLetter {
    pub letter: Commutator,
    pub inverse: bool,
}

impl fmt::Display for BasisLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}^-1", self.letter)
        } else {
            write!(f, "{}", self.letter)
        }
    }
}

pub fn basis_word_string(w: &[BasisLetter]) -> String {
    if w.is_empty() {
        return "1".into();
    }
    w.iter().map(BasisLetter::to_string).collect::<Vec<_>>().join(" ")
}

/// `Δ = G ∗ H` over `Γ = ker(G ∗ H → G × H)`, transversal `T = {gh}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeProduct {
    g: CyclicFactor,
    h: CyclicFactor,
}

impl FreeProduct {
    pub fn new(g: CyclicFactor, h: CyclicFactor) -> Self {
        FreeProduct { g, h }
    }

    /// Parses `Z2,Z`-style factor lists.
    pub fn parse_factors(s: &str) -> Result<Self, GroupError> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| GroupError::BadInstance(format!("expected two factors in {s:?}")))?;
        Ok(FreeProduct::new(CyclicFactor::parse(a.trim())?, CyclicFactor::parse(b.trim())?))
    }

    pub fn g_factor(&self) -> CyclicFactor {
        self.g
    }

    pub fn h_factor(&self) -> CyclicFactor {
        self.h
    }

    fn factor(&self, side: Side) -> CyclicFactor {
        match side {
            Side::G => self.g,
            Side::H => self.h,
        }
    }

    pub fn syllable(&self, side: Side, exp: i64) -> FreeElem {
        let e = self.factor(side).normalize(exp);
        FreeElem(if e == 0 { Vec::new() } else { vec![Syllable { side, exp: e }] })
    }

    fn push(&self, out: &mut Vec<Syllable>, s: Syllable) {
        let e = self.factor(s.side).normalize(s.exp);
        if e == 0 {
            return;
        }
        match out.last_mut() {
            Some(last) if last.side == s.side => {
                let merged = self.factor(s.side).normalize(last.exp + e);
                if merged == 0 {
                    out.pop();
                } else {
                    last.exp = merged;
                }
            }
            _ => out.push(Syllable { side: s.side, exp: e }),
        }
    }

    /// `φ(x) ∈ G × H`.
    pub fn projection(&self, x: &FreeElem) -> (i64, i64) {
        let mut p = (0, 0);
        for s in &x.0 {
            match s.side {
                Side::G => p.0 += s.exp,
                Side::H => p.1 += s.exp,
            }
        }
        (self.g.normalize(p.0), self.h.normalize(p.1))
    }

    /// `g·h` as an element.
    pub fn pair(&self, g: i64, h: i64) -> FreeElem {
        self.mul(&self.syllable(Side::G, g), &self.syllable(Side::H, h))
    }

    pub fn pair_of_index(&self, i: usize) -> (i64, i64) {
        let (gi, hi) = match (self.g.is_finite(), self.h.is_finite()) {
            (true, _) => (i % self.g.order as usize, i / self.g.order as usize),
            (false, true) => (i / self.h.order as usize, i % self.h.order as usize),
            (false, false) => unpair(i),
        };
        (self.g.enumerate(gi), self.h.enumerate(hi))
    }

    pub fn index_of_pair(&self, g: i64, h: i64) -> usize {
        let (gi, hi) = (self.g.index(g), self.h.index(h));
        match (self.g.is_finite(), self.h.is_finite()) {
            (true, _) => hi * self.g.order as usize + gi,
            (false, true) => gi * self.h.order as usize + hi,
            (false, false) => pair(gi, hi),
        }
    }

    /// Number of transversal elements, if finite.
    pub fn transversal_len(&self) -> Option<usize> {
        (self.g.is_finite() && self.h.is_finite()).then(|| (self.g.order * self.h.order) as usize)
    }

    pub fn commutator(&self, g: i64, h: i64) -> Option<Commutator> {
        let (g, h) = (self.g.normalize(g), self.h.normalize(h));
        (g != 0 && h != 0).then_some(Commutator { g, h })
    }

    /// `[g, h]` as an element of `G ∗ H`.
    pub fn expand_letter(&self, c: Commutator) -> FreeElem {
        let (g, h) = (self.syllable(Side::G, c.g), self.syllable(Side::H, c.h));
        let gh = self.mul(&g, &h);
        self.mul(&gh, &self.inv(&self.mul(&h, &g)))
    }

    pub fn expand(&self, w: &[BasisLetter]) -> FreeElem {
        w.iter().fold(self.identity(), |acc, l| {
            let e = self.expand_letter(l.letter);
            self.mul(&acc, &if l.inverse { self.inv(&e) } else { e })
        })
    }

    /// Rewrites `x ∈ Γ` in the free basis of commutators: with
    /// `t_i = g_c h_c` the representative of the i-th prefix,
    /// `x = ∏ t_{i−1} y_i t_i⁻¹`, where an `H`-syllable contributes nothing and
    /// a `G`-syllable `y` contributes `[g_c, h_c]·[g_c y, h_c]⁻¹`.
    pub fn schreier_rewrite(&self, x: &FreeElem) -> Result<Vec<BasisLetter>, GroupError> {
        if !self.in_subgroup(x) {
            return Err(GroupError::NotInSubgroup(x.to_string()));
        }
        let mut out: Vec<BasisLetter> = Vec::new();
        let push = |out: &mut Vec<BasisLetter>, l: Option<Commutator>, inverse: bool| {
            let Some(letter) = l else { return };
            match out.last() {
                Some(last) if last.letter == letter && last.inverse != inverse => {
                    out.pop();
                }
                _ => out.push(BasisLetter { letter, inverse }),
            }
        };
        let (mut gc, mut hc) = (0i64, 0i64);
        for s in &x.0 {
            match s.side {
                Side::H => hc = self.h.normalize(hc + s.exp),
                Side::G => {
                    let next = self.g.normalize(gc + s.exp);
                    push(&mut out, self.commutator(gc, hc), false);
                    push(&mut out, self.commutator(next, hc), true);
                    gc = next;
                }
            }
        }
        Ok(out)
    }

    pub fn occurrence_count(&self, x: &FreeElem, target: Commutator) -> Result<usize, GroupError> {
        Ok(self.schreier_rewrite(x)?.iter().filter(|l| l.letter == target).count())
    }

    pub fn exponent_sum(&self, x: &FreeElem, target: Commutator) -> Result<i64, GroupError> {
        Ok(self
            .schreier_rewrite(x)?
            .iter()
            .filter(|l| l.letter == target)
            .map(|l| if l.inverse { -1 } else { 1 })
            .sum())
    }

    /// Transversal pairs `(g, h)` for which `h⁻¹g⁻¹·x·gh` can contain a letter
    /// of `targets`. Conjugating `[a, b]` by `gh` gives letters with parts
    /// `(g⁻¹a, h⁻¹)`, `(g⁻¹a, h⁻¹b)`, `(g⁻¹, h⁻¹b)`, `(g⁻¹, h⁻¹)`, so outside this
    /// finite set no target letter appears.
    pub fn candidate_pairs(
        &self,
        x: &FreeElem,
        targets: &[Commutator],
    ) -> Result<BTreeSet<(i64, i64)>, GroupError> {
        let letters = self.schreier_rewrite(x)?;
        let mut out = BTreeSet::new();
        for l in &letters {
            let (a, b) = (l.letter.g, l.letter.h);
            for c in targets {
                for g in [a - c.g, -c.g] {
                    for h in [-c.h, b - c.h] {
                        out.insert((self.g.normalize(g), self.h.normalize(h)));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn parse_commutator(&self, s: &str) -> Result<Commutator, GroupError> {
        let x = self.parse_elem(s)?;
        match self.schreier_rewrite(&x)?.as_slice() {
            [l] if !l.inverse => Ok(l.letter),
            _ => Err(GroupError::Parse(format!("{s} is not a basis letter"))),
        }
    }

    fn parse_atom(&self, tok: &str) -> Result<FreeElem, GroupError> {
        let bad = || GroupError::Parse(tok.to_string());
        if let Some(inner) = tok.strip_prefix('[') {
            let (body, exp) = match inner.rsplit_once(']') {
                Some((b, "")) => (b, 1),
                Some((b, e)) => (b, e.strip_prefix('^').and_then(|e| e.parse().ok()).ok_or_else(bad)?),
                None => return Err(bad()),
            };
            let (a, b) = body.split_once(',').ok_or_else(bad)?;
            let (a, b) = (self.parse_elem(a)?, self.parse_elem(b)?);
            let c = self.mul(&self.mul(&a, &b), &self.inv(&self.mul(&b, &a)));
            return Ok(self.pow(&c, exp));
        }
        let (base, exp) = match tok.split_once('^') {
            Some((b, e)) => (b, e.parse::<i64>().map_err(|_| bad())?),
            None => (tok, 1),
        };
        match base {
            "1" => Ok(self.identity()),
            "g" | "g0" => Ok(self.syllable(Side::G, exp)),
            "h" | "h0" => Ok(self.syllable(Side::H, exp)),
            _ => Err(bad()),
        }
    }

    fn pow(&self, x: &FreeElem, e: i64) -> FreeElem {
        let base = if e < 0 { self.inv(x) } else { x.clone() };
        (0..e.unsigned_abs()).fold(self.identity(), |acc, _| self.mul(&acc, &base))
    }
}

fn pair(a: usize, b: usize) -> usize {
    (a + b) * (a + b + 1) / 2 + b
}

fn unpair(i: usize) -> (usize, usize) {
    let mut s = 0;
    while (s + 1) * (s + 2) / 2 <= i {
        s += 1;
    }
    let b = i - s * (s + 1) / 2;
    (s - b, b)
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0usize;
    for c in s.chars() {
        match c {
            '[' => {
                depth += 1;
                cur.push(c);
            }
            ']' => {
                depth = depth.saturating_sub(1);
                cur.push(c);
            }
            c if c.is_whitespace() && depth > 0 => cur.push(' '),
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

impl CosetSpace for FreeProduct {
    type Elem = FreeElem;

    fn identity(&self) -> FreeElem {
        FreeElem(Vec::new())
    }

    fn mul(&self, a: &FreeElem, b: &FreeElem) -> FreeElem {
        let mut out = a.0.clone();
        for &s in &b.0 {
            self.push(&mut out, s);
        }
        FreeElem(out)
    }

    fn inv(&self, a: &FreeElem) -> FreeElem {
        let mut out = Vec::with_capacity(a.0.len());
        for s in a.0.iter().rev() {
            self.push(&mut out, Syllable { side: s.side, exp: -s.exp });
        }
        FreeElem(out)
    }

    fn in_ambient(&self, _x: &FreeElem) -> bool {
        true
    }

    fn in_subgroup(&self, x: &FreeElem) -> bool {
        self.projection(x) == (0, 0)
    }

    fn rep(&self, i: usize) -> Option<FreeElem> {
        if self.transversal_len().is_some_and(|n| i >= n) {
            return None;
        }
        let (g, h) = self.pair_of_index(i);
        Some(self.pair(g, h))
    }

    fn search_bound(&self, x: &FreeElem) -> usize {
        let (g, h) = self.projection(x);
        self.index_of_pair(g, h) + 1
    }

    fn locate(&self, x: &FreeElem) -> Result<usize, GroupError> {
        let (g, h) = self.projection(x);
        Ok(self.index_of_pair(g, h))
    }

    fn sample_ambient(&self, rng: &mut dyn RngCore) -> FreeElem {
        let mut x = self.identity();
        for k in 0..rng.gen_range(0..=8) {
            let side = if k % 2 == 0 { Side::G } else { Side::H };
            x = self.mul(&x, &self.syllable(side, rng.gen_range(-3..=3)));
        }
        x
    }

    fn sample_index(&self, rng: &mut dyn RngCore) -> usize {
        match self.transversal_len() {
            Some(n) => rng.gen_range(0..n),
            None => rng.gen_range(0..40),
        }
    }
}

impl Instance for FreeProduct {
    fn name(&self) -> String {
        format!("freeprod:{},{}", self.g, self.h)
    }

    fn in_core(&self, x: &FreeElem) -> bool {
        self.in_subgroup(x)
    }

    fn index_is_infinite(&self) -> bool {
        !(self.g.is_finite() && self.h.is_finite())
    }

    fn contains(&self, d: &SubgroupDescriptor, x: &FreeElem) -> Result<bool, GroupError> {
        if !self.in_subgroup(x) {
            return Ok(false);
        }
        match d {
            SubgroupDescriptor::Trivial => Ok(x.0.is_empty()),
            SubgroupDescriptor::Whole => Ok(true),
            SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(ls)) => {
                for &c in ls {
                    if self.exponent_sum(x, c)? != 0 {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            SubgroupDescriptor::HomKernel(HomWitness::ConjugateLetterExponents(ls)) => {
                for (g, h) in self.candidate_pairs(x, ls)? {
                    let t = self.pair(g, h);
                    let y = super::conjugate(self, &t, x);
                    for &c in ls {
                        if self.exponent_sum(&y, c)? != 0 {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
            _ => Err(unsupported(self, d)),
        }
    }

    fn is_normal_in_delta(&self, d: &SubgroupDescriptor) -> Result<bool, GroupError> {
        match d {
            SubgroupDescriptor::Trivial
            | SubgroupDescriptor::Whole
            | SubgroupDescriptor::HomKernel(HomWitness::ConjugateLetterExponents(_)) => Ok(true),
            SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(ls)) => Ok(ls.is_empty()),
            _ => Err(unsupported(self, d)),
        }
    }

    fn sample_gamma(&self, rng: &mut dyn RngCore) -> FreeElem {
        let w = self.sample_ambient(rng);
        let (g, h) = self.projection(&w);
        self.mul(&self.inv(&self.pair(g, h)), &w)
    }

    fn parse_elem(&self, s: &str) -> Result<FreeElem, GroupError> {
        let toks = tokenize(s);
        if toks.is_empty() {
            return Err(GroupError::Parse(s.to_string()));
        }
        let mut x = self.identity();
        for t in toks {
            x = self.mul(&x, &self.parse_atom(t.trim())?);
        }
        Ok(x)
    }

    fn default_gamma0(&self) -> FreeElem {
        self.expand_letter(Commutator { g: self.g.normalize(1), h: self.h.normalize(1) })
    }
}
