//! The word family `w₀…w₇, v₀…v₇` built from `w = a b a² b² ⋯ aⁿ bⁿ`, the
//! two length lemmas, the sign tables, and the pairwise claim checks.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::autf2::{
    classify, enumerate_frplus, suffix_family_index, transversal_r, AutClass, Endo, Sym,
    TransversalElement, TEMPLATES,
};
use crate::words::{
    letter_generator, CyclicMatcher, CyclicWord, Generator, Run, SignProfile, Word,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error("family needs n >= 2, got {0}")]
    SmallN(usize),
    #[error("family index {0} out of range")]
    BadIndex(usize),
    #[error("words {0} and {1} coincide")]
    SameWord(String, String),
    #[error("closed form of {0} disagrees with its automorphism image")]
    FormulaMismatch(String),
    #[error("{word} has {profile:?} powers of {generator}")]
    NotSigned { word: String, generator: &'static str, profile: SignProfile },
    #[error("map `{0}` is not a positive word in phi and psi")]
    NotPositive(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Polarity {
    W,
    V,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyWord {
    pub index: usize,
    pub polarity: Polarity,
    pub n: usize,
    pub word: Word,
}

impl FamilyWord {
    pub fn name(&self) -> String {
        let p = match self.polarity {
            Polarity::W => 'w',
            Polarity::V => 'v',
        };
        format!("{p}{}", self.index)
    }
}

/// `η(w)` for every `η` of the transversal truncated at `max_len`.
pub fn transversal_relators(
    n: usize,
    max_len: usize,
) -> Result<Vec<(TransversalElement, Word)>, FamilyError> {
    let w = base_word(n)?;
    transversal_r(max_len)
        .into_iter()
        .map(|t| {
            let r = t.endo.apply(&w).map_err(|_| FamilyError::NotPositive(t.endo.provenance_string()))?;
            Ok((t, r))
        })
        .collect()
}

/// Per-index shape of `w_i`: the signed generator pair repeated with
/// exponent `m` for `m = 1..n`.
fn pattern(i: usize) -> [(Generator, i64); 2] {
    let (a, b) = (Generator::A, Generator::B);
    match i {
        0 => [(a, 1), (b, 1)],
        1 => [(a, -1), (b, -1)],
        2 => [(a, -1), (b, 1)],
        3 => [(a, 1), (b, -1)],
        4 => [(b, 1), (a, 1)],
        5 => [(b, -1), (a, -1)],
        6 => [(b, -1), (a, 1)],
        _ => [(b, 1), (a, -1)],
    }
}

/// `w_i` from its closed form.
pub fn closed_form(i: usize, n: usize) -> Result<Word, FamilyError> {
    if i > 7 {
        return Err(FamilyError::BadIndex(i));
    }
    if n < 2 {
        return Err(FamilyError::SmallN(n));
    }
    let [(g, s), (h, t)] = pattern(i);
    let runs = (1..=n as i64).flat_map(|m| [Run::new(g, s * m), Run::new(h, t * m)]);
    Ok(Word::from_runs(2, runs).expect("rank 2"))
}

/// `w = a b a² b² ⋯ aⁿ bⁿ`
pub fn base_word(n: usize) -> Result<Word, FamilyError> {
    closed_form(0, n)
}

/// The automorphism sending `w₀` to `w_i`.
pub fn family_map(i: usize) -> Result<Endo, FamilyError> {
    TEMPLATES
        .iter()
        .map(|&(_, suffix)| suffix)
        .find(|s| suffix_family_index(s) == i)
        .map(Endo::from_symbols)
        .ok_or(FamilyError::BadIndex(i))
}

/// All sixteen words, `w₀…w₇` then `v₀…v₇`, each checked against the image
/// of `w` under its defining automorphism.
pub fn build_family(n: usize) -> Result<Vec<FamilyWord>, FamilyError> {
    let w = base_word(n)?;
    let mut ws = Vec::with_capacity(8);
    for i in 0..8 {
        let word = closed_form(i, n)?;
        if family_map(i)?.apply(&w).ok() != Some(word.clone()) {
            return Err(FamilyError::FormulaMismatch(format!("w{i}")));
        }
        ws.push(FamilyWord { index: i, polarity: Polarity::W, n, word });
    }
    let vs: Vec<FamilyWord> = ws
        .iter()
        .map(|f| FamilyWord { polarity: Polarity::V, word: f.word.inverse(), ..f.clone() })
        .collect();
    ws.extend(vs);
    Ok(ws)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub i: usize,
    pub m: usize,
    pub word: Word,
}

/// The decomposition `w_i = w_i¹ w_i² ⋯ w_iⁿ` (up to rotation).
pub fn blocks(i: usize, n: usize) -> Result<Vec<Block>, FamilyError> {
    if i > 7 {
        return Err(FamilyError::BadIndex(i));
    }
    if n < 2 {
        return Err(FamilyError::SmallN(n));
    }
    let (a, b) = (Generator::A, Generator::B);
    let out = (1..=n)
        .map(|m| {
            let k = m as i64;
            let runs = match i {
                2 if m < n => [Run::new(b, k), Run::new(a, -k - 1)],
                2 => [Run::new(b, k), Run::new(a, -1)],
                6 if m < n => [Run::new(a, k), Run::new(b, -k - 1)],
                6 => [Run::new(a, k), Run::new(b, -1)],
                _ => {
                    let [(g, s), (h, t)] = pattern(i);
                    [Run::new(g, s * k), Run::new(h, t * k)]
                }
            };
            Block { i, m, word: Word::from_runs(2, runs).expect("rank 2") }
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LengthCheck {
    pub word: String,
    pub rho: Endo,
    pub lhs: usize,
    pub rhs: i64,
    pub pass: bool,
}

/// `n(n−1)/2 − 2n`, the factor in the word-length lemma.
pub fn length_factor(n: usize) -> i64 {
    let n = n as i64;
    n * (n - 1) / 2 - 2 * n
}

/// `‖ρ(z)‖ ≥ (n(n−1)/2 − 2n)·(|ρ(a)|+|ρ(b)|)`
pub fn verify_length_lower_bound(rho: &Endo, z: &FamilyWord) -> Result<LengthCheck, FamilyError> {
    if !rho.is_positive_provenance() {
        return Err(FamilyError::NotPositive(rho.provenance_string()));
    }
    let lhs = rho.map(&z.word).cyclic_length();
    let rhs = length_factor(z.n) * rho.growth() as i64;
    Ok(LengthCheck { word: z.name(), rho: rho.clone(), lhs, rhs, pass: lhs as i64 >= rhs })
}

/// Exact cyclic length of `ρ(z)` for the positive and negative family words.
pub fn exact_signed_length(n: usize, rho: &Endo) -> usize {
    n * (n + 1) / 2 * rho.growth()
}

/// Whether `z` is one of the words made only of positive or only of
/// negative powers (`w₀, w₁, w₄, w₅` and their inverses).
pub fn is_signed_word(z: &FamilyWord) -> bool {
    matches!(z.index, 0 | 1 | 4 | 5)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CancellationCheck {
    pub x: String,
    pub y: String,
    pub rho: Endo,
    /// Longest common cyclic substring of `ρ(x)` and `ρ(y)`.
    pub actual: usize,
    /// Largest letter count of one generator in any common substring of
    /// `x` and `y`.
    pub n_true: usize,
    /// Whether `N = 2n − 2` satisfies the lemma's strict hypothesis.
    pub hypothesis_holds: bool,
    /// `(N + 2)·growth(ρ)` at `N = 2n − 2`.
    pub bound: usize,
    /// `(N + 2)·growth(ρ)` at the least admissible `N = n_true + 1`.
    pub bound_true: usize,
    pub pass: bool,
}

/// Largest count of one generator over all common substrings of two cycles.
fn max_generator_count(x: &CyclicWord, y: &CyclicWord) -> usize {
    let matcher = CyclicMatcher::new(x);
    let mut ends: Vec<(usize, usize)> = Vec::new();
    let text = matcher.scan(y, |i, l| {
        if l > 0 {
            ends.push((i, l));
        }
    });
    let mut pa = vec![0usize; text.len() + 1];
    let mut pb = vec![0usize; text.len() + 1];
    for (k, &c) in text.iter().enumerate() {
        let is_a = letter_generator(c) == Generator::A;
        pa[k + 1] = pa[k] + usize::from(is_a);
        pb[k + 1] = pb[k] + usize::from(!is_a);
    }
    ends.iter()
        .map(|&(i, l)| {
            let (s, e) = (i + 1 - l, i + 1);
            (pa[e] - pa[s]).max(pb[e] - pb[s])
        })
        .max()
        .unwrap_or(0)
}

/// Checks `|q| ≤ (N+2)(|ρ(a)|+|ρ(b)|)` for the longest common substring `q`
/// of `ρ(x)` and `ρ(y)`, at the stated `N = 2n − 2` and at the least `N`
/// allowed by the actual cancellations of `x` and `y`.
pub fn verify_cancellation_upper_bound(
    x: &FamilyWord,
    y: &FamilyWord,
    rho: &Endo,
) -> Result<CancellationCheck, FamilyError> {
    if x.word == y.word {
        return Err(FamilyError::SameWord(x.name(), y.name()));
    }
    if !rho.is_positive_provenance() {
        return Err(FamilyError::NotPositive(rho.provenance_string()));
    }
    let (cx, cy) = (CyclicWord::new(&x.word), CyclicWord::new(&y.word));
    let n_true = max_generator_count(&cx, &cy);
    let rx = CyclicWord::new(&rho.map(&x.word));
    let ry = CyclicWord::new(&rho.map(&y.word));
    let actual = CyclicMatcher::new(&rx).common_len(&ry);
    let g = rho.growth();
    let n_stated = 2 * x.n - 2;
    let hypothesis_holds = n_true < n_stated;
    let bound = (n_stated + 2) * g;
    let bound_true = (n_true + 3) * g;
    Ok(CancellationCheck {
        x: x.name(),
        y: y.name(),
        rho: rho.clone(),
        actual,
        n_true,
        hypothesis_holds,
        bound,
        bound_true,
        pass: actual <= bound_true && actual <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Serialize for Sign {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Row forms of the two sign tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TableRow {
    PhiK,
    XiPhiL,
    PsiK,
    XiPsiL,
}

impl TableRow {
    pub fn endo(self, k: usize) -> Endo {
        let mut syms = Vec::new();
        if matches!(self, TableRow::XiPhiL | TableRow::XiPsiL) {
            syms.push(Sym::Xi);
        }
        let s = if matches!(self, TableRow::PhiK | TableRow::XiPhiL) { Sym::Phi } else { Sym::Psi };
        syms.extend(std::iter::repeat(s).take(k));
        Endo::from_symbols(&syms)
    }

    /// The generator whose signs the table records.
    pub fn generator(self) -> Generator {
        match self {
            TableRow::PhiK | TableRow::XiPhiL => Generator::A,
            TableRow::PsiK | TableRow::XiPsiL => Generator::B,
        }
    }
}

use Sign::{Minus as M, Plus as P};

/// Published signs, indexed `[polarity][row][i]`; rows are (φᵏ, ξφˡ) for the
/// first table and (ψᵏ, ξψˡ) for the second.
pub const PHI_TABLE: [[[Sign; 8]; 2]; 2] = [
    [[P, M, M, P, P, M, P, M], [M, P, P, M, M, P, M, P]],
    [[M, P, P, M, M, P, M, P], [P, M, M, P, P, M, P, M]],
];
pub const PSI_TABLE: [[[Sign; 8]; 2]; 2] = [
    [[P, M, P, M, P, M, M, P], [P, M, P, M, P, M, M, P]],
    [[M, P, M, P, M, P, P, M], [M, P, M, P, M, P, P, M]],
];

pub fn published_sign(row: TableRow, z: &FamilyWord) -> Sign {
    let pol = usize::from(z.polarity == Polarity::V);
    match row {
        TableRow::PhiK => PHI_TABLE[pol][0][z.index],
        TableRow::XiPhiL => PHI_TABLE[pol][1][z.index],
        TableRow::PsiK => PSI_TABLE[pol][0][z.index],
        TableRow::XiPsiL => PSI_TABLE[pol][1][z.index],
    }
}

/// Sign of the powers of the row's generator in `op(z)`.
pub fn sign_table(op: &Endo, z: &FamilyWord, g: Generator) -> Result<Sign, FamilyError> {
    let img = op.map(&z.word);
    match img.sign_profile(g) {
        SignProfile::AllPositive => Ok(Sign::Plus),
        SignProfile::AllNegative => Ok(Sign::Minus),
        profile => Err(FamilyError::NotSigned {
            word: format!("{}({})", op, z.name()),
            generator: if g == Generator::A { "a" } else { "b" },
            profile,
        }),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignCell {
    pub row: TableRow,
    pub k: usize,
    pub word: String,
    pub expected: Sign,
    pub actual: Option<Sign>,
    pub matches: bool,
}

/// Every cell of one table for exponents `1..=k_max`.
pub fn check_sign_table(
    family: &[FamilyWord],
    rows: [TableRow; 2],
    k_max: usize,
) -> Vec<SignCell> {
    let mut out = Vec::new();
    for row in rows {
        for k in 1..=k_max {
            let op = row.endo(k);
            for z in family {
                let expected = published_sign(row, z);
                let actual = sign_table(&op, z, row.generator()).ok();
                out.push(SignCell {
                    row,
                    k,
                    word: z.name(),
                    expected,
                    actual,
                    matches: actual == Some(expected),
                });
            }
        }
    }
    out
}

/// Runs `X^s Y^t X^s'` in a reduced word, classified by signs: the middle
/// run agrees with both neighbours, or disagrees with both.
fn three_run_patterns(w: &Word) -> (usize, usize) {
    let r = w.runs();
    let (mut agree, mut isolated) = (0, 0);
    for k in 1..r.len().saturating_sub(1) {
        let (l, m, n) = (r[k - 1], r[k], r[k + 1]);
        if l.gen != n.gen || (l.exp > 0) != (n.exp > 0) {
            continue;
        }
        if (m.exp > 0) == (l.exp > 0) {
            agree += 1;
        } else {
            isolated += 1;
        }
    }
    (agree, isolated)
}

/// Same count on a cycle, wrapping around and merging a run split by the
/// chosen rotation.
fn cyclic_three_run_patterns(c: &CyclicWord) -> (usize, usize) {
    let mut runs = c.word().runs().to_vec();
    if runs.len() >= 2 {
        let (f, l) = (runs[0], runs[runs.len() - 1]);
        if f.gen == l.gen && (f.exp > 0) == (l.exp > 0) {
            runs[0].exp += l.exp;
            runs.pop();
        }
    }
    let k = runs.len();
    if k < 3 {
        return (0, 0);
    }
    let mut wrapped = runs.clone();
    wrapped.push(runs[0]);
    wrapped.insert(0, runs[k - 1]);
    three_run_patterns(&Word::from_reduced_runs(2, wrapped))
}

fn has_long_run(w: &Word, g: Generator) -> bool {
    w.runs().iter().any(|r| r.gen == g && r.exp.abs() >= 2)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub x: String,
    pub y: String,
    pub rho: Endo,
    pub sigma: Endo,
    pub piece: usize,
    pub ratio: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructuralFailure {
    pub assertion: String,
    pub map: Endo,
    pub word: String,
    pub block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimReport {
    pub claim_id: usize,
    pub pairs_checked: usize,
    pub identical_pairs_skipped: usize,
    pub structural_checks: usize,
    pub violations: Vec<Violation>,
    pub structural_failures: Vec<StructuralFailure>,
    pub table: Vec<SignCell>,
}

impl ClaimReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
            && self.structural_failures.is_empty()
            && self.table.iter().all(|c| c.matches)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimsReport {
    pub n: usize,
    pub max_len: usize,
    pub k_max: usize,
    pub claims: Vec<ClaimReport>,
}

impl ClaimsReport {
    pub fn pass(&self) -> bool {
        self.claims.iter().all(ClaimReport::pass)
    }
}

/// `ρ(z)` for ρ ∈ Fr₊ (`xi = false`) or `ξσ(z)` (`xi = true`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Key {
    xi: bool,
    map: usize,
    word: usize,
}

struct Pool {
    maps: Vec<Endo>,
    family: Vec<FamilyWord>,
    ids: HashMap<Key, usize>,
    keys: Vec<Key>,
}

impl Pool {
    fn id(&mut self, k: Key) -> usize {
        if let Some(&i) = self.ids.get(&k) {
            return i;
        }
        self.ids.insert(k, self.keys.len());
        self.keys.push(k);
        self.keys.len() - 1
    }

    fn label(&self, k: Key) -> String {
        let m = &self.maps[k.map];
        let z = self.family[k.word].name();
        match (k.xi, m.provenance().is_empty()) {
            (true, _) => format!("xi {m}({z})"),
            (false, true) => z,
            (false, false) => format!("{m}({z})"),
        }
    }
}

struct PairSpec {
    claim: usize,
    left: usize,
    right: usize,
}

/// Executes the pairwise and structural content of Claims 1–9 over maps of
/// length at most `max_len` (and exponents up to `k_max` for Claims 6, 7).
/// `claims` selects which claims to run; empty means all.
pub fn run_claims(
    n: usize,
    max_len: usize,
    k_max: usize,
    claims: &[usize],
) -> Result<ClaimsReport, FamilyError> {
    let family = build_family(n)?;
    let wanted = |c: usize| claims.is_empty() || claims.contains(&c);
    let mut maps = enumerate_frplus(max_len.max(k_max));
    maps.retain(|m| m.provenance().len() <= max_len || is_power(m));
    let map_index: HashMap<Vec<Sym>, usize> =
        maps.iter().enumerate().map(|(i, m)| (m.provenance().to_vec(), i)).collect();
    let class: Vec<crate::autf2::Classification> =
        maps.iter().map(|m| classify(m).expect("positive")).collect();
    let within = |i: usize| maps[i].provenance().len() <= max_len;
    let pow = |s: Sym, k: usize| map_index[&vec![s; k]];

    let mut pool = Pool { maps: maps.clone(), family: family.clone(), ids: HashMap::new(), keys: Vec::new() };
    let mut specs: Vec<PairSpec> = Vec::new();
    let nf = family.len();
    let mut add = |pool: &mut Pool, claim: usize, a: Key, b: Key| {
        let left = pool.id(a);
        let right = pool.id(b);
        specs.push(PairSpec { claim, left, right });
    };
    let m_count = maps.len();
    let b0 = |map: usize, word: usize| Key { xi: false, map, word };
    let b1 = |map: usize, word: usize| Key { xi: true, map, word };

    if wanted(1) {
        for r in (0..m_count).filter(|&r| within(r)) {
            for x in 0..nf {
                for y in x + 1..nf {
                    add(&mut pool, 1, b0(r, x), b0(r, y));
                }
            }
        }
    }
    for r1 in (0..m_count).filter(|&r| within(r)) {
        for r2 in (0..m_count).filter(|&r| within(r)) {
            let (p1, p2) = (maps[r1].provenance(), maps[r2].provenance());
            if wanted(2) && p2.len() < p1.len() && p1.starts_with(p2) {
                for x in 0..nf {
                    for y in 0..nf {
                        add(&mut pool, 2, b0(r1, x), b0(r2, y));
                    }
                }
            }
            if wanted(3) && r1 < r2 && !p1.starts_with(p2) && !p2.starts_with(p1) {
                for x in 0..nf {
                    for y in 0..nf {
                        add(&mut pool, 3, b0(r1, x), b0(r2, y));
                    }
                }
            }
        }
    }
    let nonid: Vec<usize> = (0..m_count).filter(|&s| within(s) && s != 0).collect();
    let mut cross = |pool: &mut Pool, claim: usize, r: usize, s: usize| {
        for x in 0..nf {
            for y in 0..nf {
                add(pool, claim, b0(r, x), b1(s, y));
            }
        }
    };
    if wanted(4) {
        for &s in &nonid {
            cross(&mut pool, 4, 0, s);
        }
    }
    for &r in &nonid {
        for &s in &nonid {
            let (cr, cs) = (class[r], class[s]);
            if wanted(5) && cr.leftmost != cs.leftmost {
                cross(&mut pool, 5, r, s);
            }
            if wanted(8) && cr.fine == AutClass::A1 && cs.fine == AutClass::A1 {
                cross(&mut pool, 8, r, s);
            }
            let zero = |c: AutClass| matches!(c, AutClass::APhi0 | AutClass::APsi0);
            if wanted(9)
                && ((cr.fine == AutClass::A1 && zero(cs.fine))
                    || (zero(cr.fine) && cs.fine == AutClass::A1))
            {
                cross(&mut pool, 9, r, s);
            }
        }
    }
    for (claim, s) in [(6, Sym::Phi), (7, Sym::Psi)] {
        if wanted(claim) {
            for k in 1..=k_max {
                for l in 1..=k_max {
                    cross(&mut pool, claim, pow(s, k), pow(s, l));
                }
            }
        }
    }
    drop(cross);

    // Materialize every word once and compute each distinct pair once.
    let xi = Endo::named(Sym::Xi);
    let cycles: Vec<CyclicWord> = pool
        .keys
        .par_iter()
        .map(|k| {
            let img = maps[k.map].map(&family[k.word].word);
            CyclicWord::new(&if k.xi { xi.map(&img) } else { img })
        })
        .collect();
    let mut by_left: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for s in &specs {
        let (a, b) = (s.left.min(s.right), s.left.max(s.right));
        by_left.entry(a).or_default().push(b);
    }
    let rows: Vec<(usize, Vec<usize>)> = by_left
        .into_iter()
        .map(|(a, mut v)| {
            v.sort_unstable();
            v.dedup();
            (a, v)
        })
        .collect();
    let pieces: HashMap<(usize, usize), usize> = rows
        .par_iter()
        .flat_map_iter(|(a, rights)| {
            let matcher = CyclicMatcher::new(&cycles[*a]);
            rights
                .iter()
                .map(|&b| {
                    let piece = if cycles[*a] == cycles[b] { usize::MAX } else { matcher.common_len(&cycles[b]) };
                    ((*a, b), piece)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    let mut reports: BTreeMap<usize, ClaimReport> = BTreeMap::new();
    for c in (1..=9).filter(|&c| wanted(c)) {
        reports.insert(
            c,
            ClaimReport {
                claim_id: c,
                pairs_checked: 0,
                identical_pairs_skipped: 0,
                structural_checks: 0,
                violations: Vec::new(),
                structural_failures: Vec::new(),
                table: Vec::new(),
            },
        );
    }
    for s in &specs {
        let rep = reports.get_mut(&s.claim).expect("claim selected");
        let (a, b) = (s.left.min(s.right), s.left.max(s.right));
        let piece = pieces[&(a, b)];
        if piece == usize::MAX {
            rep.identical_pairs_skipped += 1;
            continue;
        }
        rep.pairs_checked += 1;
        let (lx, ly) = (cycles[s.left].len(), cycles[s.right].len());
        if 6 * piece >= lx.min(ly) {
            let (kl, kr) = (pool.keys[s.left], pool.keys[s.right]);
            rep.violations.push(Violation {
                x: pool.label(kl),
                y: pool.label(kr),
                rho: maps[kl.map].clone(),
                sigma: maps[kr.map].clone(),
                piece,
                ratio: num_rational::Rational64::new(piece as i64, lx.min(ly) as i64).to_string(),
            });
        }
    }

    structural_checks(&mut reports, &maps, &class, &family, n, max_len, k_max);
    Ok(ClaimsReport { n, max_len, k_max, claims: reports.into_values().collect() })
}

fn is_power(m: &Endo) -> bool {
    let p = m.provenance();
    p.windows(2).all(|w| w[0] == w[1])
}

fn structural_checks(
    reports: &mut BTreeMap<usize, ClaimReport>,
    maps: &[Endo],
    class: &[crate::autf2::Classification],
    family: &[FamilyWord],
    n: usize,
    max_len: usize,
    k_max: usize,
) {
    let within: Vec<usize> =
        (0..maps.len()).filter(|&i| maps[i].provenance().len() <= max_len).collect();
    let block_sets: Vec<Vec<Block>> = (0..8).map(|i| blocks(i, n).expect("valid")).collect();

    if let Some(rep) = reports.get_mut(&3) {
        // σ ∈ A_φ puts b^{±l}, l ≥ 2, into every middle block; σ ∈ A_ψ
        // does the same with a.
        for &s in within.iter().filter(|&&s| s != 0) {
            let g = if class[s].leftmost == AutClass::APhi { Generator::B } else { Generator::A };
            for (i, bs) in block_sets.iter().enumerate() {
                for blk in bs.iter().filter(|b| b.m >= 3 && b.m < n) {
                    rep.structural_checks += 1;
                    if !has_long_run(&maps[s].map(&blk.word), g) {
                        rep.structural_failures.push(StructuralFailure {
                            assertion: format!(
                                "contains {}^l or {}^-l with l >= 2",
                                gen_name(g),
                                gen_name(g)
                            ),
                            map: maps[s].clone(),
                            word: format!("w{i}"),
                            block: Some(blk.m),
                        });
                    }
                }
            }
        }
    }

    for (claim, rows) in [(6, [TableRow::PhiK, TableRow::XiPhiL]), (7, [TableRow::PsiK, TableRow::XiPsiL])] {
        if let Some(rep) = reports.get_mut(&claim) {
            rep.table = check_sign_table(family, rows, k_max);
            rep.structural_checks += rep.table.len();
        }
    }

    if let Some(rep) = reports.get_mut(&8) {
        for &r in within.iter().filter(|&&r| class[r].fine == AutClass::A1) {
            for z in family {
                rep.structural_checks += 1;
                let img = CyclicWord::new(&maps[r].map(&z.word));
                let (_, isolated) = cyclic_three_run_patterns(&img);
                if isolated > 1 {
                    rep.structural_failures.push(StructuralFailure {
                        assertion: format!("at most one mixed-sign pattern, found {isolated}"),
                        map: maps[r].clone(),
                        word: z.name(),
                        block: None,
                    });
                }
            }
            for (i, bs) in block_sets.iter().enumerate() {
                for blk in bs.iter().filter(|b| b.m >= 2 && b.m < n) {
                    rep.structural_checks += 1;
                    let (agree, _) = three_run_patterns(&maps[r].map(&blk.word));
                    if agree == 0 {
                        rep.structural_failures.push(StructuralFailure {
                            assertion: "contains a same-sign pattern".to_string(),
                            map: maps[r].clone(),
                            word: format!("w{i}"),
                            block: Some(blk.m),
                        });
                    }
                }
            }
        }
    }
}

fn gen_name(g: Generator) -> &'static str {
    if g == Generator::A {
        "a"
    } else {
        "b"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(n: usize) -> Vec<FamilyWord> {
        build_family(n).unwrap()
    }

    fn named<'a>(f: &'a [FamilyWord], name: &str) -> &'a FamilyWord {
        f.iter().find(|z| z.name() == name).unwrap()
    }

    #[test]
    fn family_examples() {
        let f = fam(3);
        assert_eq!(named(&f, "w0").word.to_string(), "a b a^2 b^2 a^3 b^3");
        assert_eq!(named(&f, "w6").word.to_string(), "b^-1 a b^-2 a^2 b^-3 a^3");
        assert_eq!(named(&f, "v0").word, named(&f, "w0").word.inverse());
        assert_eq!(build_family(1), Err(FamilyError::SmallN(1)));
    }

    #[test]
    fn block_examples() {
        let s: Vec<String> = blocks(2, 3).unwrap().iter().map(|b| b.word.to_string()).collect();
        assert_eq!(s, ["b a^-2", "b^2 a^-3", "b^3 a^-1"]);
        let s: Vec<String> = blocks(0, 3).unwrap().iter().map(|b| b.word.to_string()).collect();
        assert_eq!(s, ["a b", "a^2 b^2", "a^3 b^3"]);
        for i in 0..8 {
            let cat = blocks(i, 5)
                .unwrap()
                .iter()
                .fold(Word::identity(2), |acc, b| acc.mul(&b.word));
            assert_eq!(CyclicWord::new(&cat), CyclicWord::new(&closed_form(i, 5).unwrap()));
        }
    }

    #[test]
    fn length_bound_identity_w0() {
        let f = fam(102);
        let c = verify_length_lower_bound(&Endo::identity(), named(&f, "w0")).unwrap();
        assert_eq!((c.lhs, c.rhs, c.pass), (10506, 9894, true));
    }

    #[test]
    fn cancellation_bound_examples() {
        let f = fam(5);
        let c = verify_cancellation_upper_bound(named(&f, "w0"), named(&f, "w4"), &Endo::identity())
            .unwrap();
        assert_eq!(c.bound, 20);
        assert!(c.pass && c.hypothesis_holds);
        // b^3 a^4 b^4 is common to w0 and w4.
        assert_eq!(c.n_true, 7);
        let phi: Endo = "phi".parse().unwrap();
        let c = verify_cancellation_upper_bound(named(&f, "w0"), named(&f, "v0"), &phi).unwrap();
        assert!(c.pass && c.hypothesis_holds);
        let psi: Endo = "psi".parse().unwrap();
        assert!(verify_cancellation_upper_bound(named(&f, "w2"), named(&f, "w6"), &psi).unwrap().pass);
        assert!(verify_cancellation_upper_bound(named(&f, "w2"), named(&f, "w2"), &psi).is_err());
    }

    #[test]
    fn sign_examples() {
        let f = fam(6);
        let phi2 = TableRow::PhiK.endo(2);
        assert_eq!(sign_table(&phi2, named(&f, "w1"), Generator::A).unwrap(), Sign::Minus);
        let xpsi = TableRow::XiPsiL.endo(1);
        assert_eq!(sign_table(&xpsi, named(&f, "v3"), Generator::B).unwrap(), Sign::Plus);
        let psi3 = TableRow::PsiK.endo(3);
        assert_eq!(sign_table(&psi3, named(&f, "w0"), Generator::B).unwrap(), Sign::Plus);
        assert!(sign_table(&Endo::identity(), &closed_form_fw(2, 6), Generator::B).is_ok());
        assert!(sign_table(&Endo::identity(), &closed_form_fw(0, 6), Generator::A).is_ok());
    }

    fn closed_form_fw(i: usize, n: usize) -> FamilyWord {
        FamilyWord { index: i, polarity: Polarity::W, n, word: closed_form(i, n).unwrap() }
    }

    #[test]
    fn small_claims_run_reports() {
        let r = run_claims(6, 1, 1, &[]).unwrap();
        assert_eq!(r.claims.len(), 9);
        assert!(r.claims.iter().all(|c| c.pairs_checked > 0 || c.claim_id >= 8));
        assert!(r.claims.iter().find(|c| c.claim_id == 6).unwrap().table.iter().all(|c| c.matches));
    }
}
