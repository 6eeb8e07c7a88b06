//! Reduced words in free groups of finite rank.
//!
//! Words are stored run-length encoded: `a^3 b^-2` is two runs. All lengths
//! reported by this module count letters, never runs.

mod cyclic;
mod sam;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use cyclic::{
    least_rotation, max_common_cyclic_substring, CommonSubstring, CyclicMatcher, CyclicWord,
};
pub use sam::SuffixAutomaton;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: u32, right: u32 },
    #[error("generator index {index} out of range for rank {rank}")]
    GeneratorOutOfRange { index: u32, rank: u32 },
    #[error("cannot parse word: {0}")]
    Parse(String),
    #[error("common substring requested for two equal cyclic words")]
    EqualCycles,
}

/// A basis element of the ambient free group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Generator(pub u32);

impl Generator {
    pub const A: Generator = Generator(0);
    pub const B: Generator = Generator(1);

    pub fn index(self) -> u32 {
        self.0
    }
}

/// A single letter `g` or `g^-1`, encoded as `2 * index + (negative as u32)`.
///
/// The numeric order of the code is the fixed total order used for canonical
/// rotations and witness tie-breaks: generator index ascending, positive
/// before negative.
pub type Letter = u32;

#[inline]
pub fn letter(gen: Generator, positive: bool) -> Letter {
    2 * gen.0 + u32::from(!positive)
}

#[inline]
pub fn letter_inverse(l: Letter) -> Letter {
    l ^ 1
}

#[inline]
pub fn letter_generator(l: Letter) -> Generator {
    Generator(l >> 1)
}

#[inline]
pub fn letter_is_positive(l: Letter) -> bool {
    l & 1 == 0
}

/// A maximal block `g^k`, `k != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Run {
    pub gen: Generator,
    pub exp: i64,
}

impl Run {
    pub fn new(gen: Generator, exp: i64) -> Self {
        Run { gen, exp }
    }
}

/// How the exponents of one generator are signed inside a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignProfile {
    AllPositive,
    AllNegative,
    Mixed,
    Absent,
}

/// A freely reduced word. Adjacent runs always have distinct generators and
/// no exponent is zero; the empty run list is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    rank: u32,
    runs: Vec<Run>,
}

pub(crate) fn push_run(runs: &mut Vec<Run>, run: Run) {
    if run.exp == 0 {
        return;
    }
    if let Some(last) = runs.last_mut() {
        if last.gen == run.gen {
            last.exp += run.exp;
            if last.exp == 0 {
                runs.pop();
            }
            return;
        }
    }
    runs.push(run);
}

impl Word {
    pub fn identity(rank: u32) -> Self {
        Word { rank, runs: Vec::new() }
    }

    /// A single generator as a word.
    pub fn generator(rank: u32, gen: Generator) -> Result<Self, WordError> {
        Word::from_runs(rank, [Run::new(gen, 1)])
    }

    /// Builds the reduced form of an arbitrary run sequence.
    pub fn from_runs<I: IntoIterator<Item = Run>>(rank: u32, runs: I) -> Result<Self, WordError> {
        let mut out = Vec::new();
        for run in runs {
            if run.gen.0 >= rank {
                return Err(WordError::GeneratorOutOfRange { index: run.gen.0, rank });
            }
            push_run(&mut out, run);
        }
        Ok(Word { rank, runs: out })
    }

    pub(crate) fn from_reduced_runs(rank: u32, runs: Vec<Run>) -> Self {
        Word { rank, runs }
    }

    /// Builds the reduced form of a letter sequence.
    pub fn from_letters(rank: u32, letters: &[Letter]) -> Result<Self, WordError> {
        Word::from_runs(
            rank,
            letters.iter().map(|&l| {
                Run::new(letter_generator(l), if letter_is_positive(l) { 1 } else { -1 })
            }),
        )
    }

    /// Same as [`Word::from_letters`] for letters already known to be in range.
    pub(crate) fn from_letters_unchecked(rank: u32, letters: &[Letter]) -> Self {
        let mut runs = Vec::new();
        for &l in letters {
            let e = if letter_is_positive(l) { 1 } else { -1 };
            push_run(&mut runs, Run::new(letter_generator(l), e));
        }
        Word { rank, runs }
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_identity(&self) -> bool {
        self.runs.is_empty()
    }

    /// Letter length `|x|`.
    pub fn len(&self) -> usize {
        self.runs.iter().map(|r| r.exp.unsigned_abs() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(self.len());
        self.extend_letters(&mut out);
        out
    }

    pub(crate) fn extend_letters(&self, out: &mut Vec<Letter>) {
        for r in &self.runs {
            let l = letter(r.gen, r.exp > 0);
            out.extend(std::iter::repeat(l).take(r.exp.unsigned_abs() as usize));
        }
    }

    fn check_rank(&self, other: &Word) -> Result<(), WordError> {
        if self.rank != other.rank {
            return Err(WordError::RankMismatch { left: self.rank, right: other.rank });
        }
        Ok(())
    }

    /// Free-group product `self · other`, reduced.
    pub fn concat_reduce(&self, other: &Word) -> Result<Word, WordError> {
        self.check_rank(other)?;
        Ok(self.mul(other))
    }

    /// Product for words already known to share a rank.
    pub(crate) fn mul(&self, other: &Word) -> Word {
        debug_assert_eq!(self.rank, other.rank);
        let mut runs = self.runs.clone();
        for &r in &other.runs {
            push_run(&mut runs, r);
        }
        Word { rank: self.rank, runs }
    }

    pub fn inverse(&self) -> Word {
        Word {
            rank: self.rank,
            runs: self.runs.iter().rev().map(|r| Run::new(r.gen, -r.exp)).collect(),
        }
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::identity(self.rank);
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    /// `g^-1 · self · g`
    pub fn conjugate_by(&self, g: &Word) -> Result<Word, WordError> {
        self.check_rank(g)?;
        Ok(g.inverse().mul(self).mul(g))
    }

    /// Splits `self = c · core · c^-1` with `core` cyclically reduced.
    pub fn cyclic_reduction(&self) -> (Word, Word) {
        let mut runs = self.runs.clone();
        let mut prefix: Vec<Run> = Vec::new();
        loop {
            if runs.len() < 2 {
                break;
            }
            let first = runs[0];
            let last = runs[runs.len() - 1];
            if first.gen != last.gen || (first.exp > 0) == (last.exp > 0) {
                break;
            }
            let m = first.exp.abs().min(last.exp.abs());
            let s = first.exp.signum();
            prefix.push(Run::new(first.gen, s * m));
            runs[0].exp -= s * m;
            let li = runs.len() - 1;
            runs[li].exp += s * m;
            if runs[li].exp == 0 {
                runs.pop();
            }
            if runs[0].exp == 0 {
                runs.remove(0);
            }
        }
        // A single run is always cyclically reduced; nothing else to strip.
        let core = Word { rank: self.rank, runs };
        let conj = Word::from_runs(self.rank, prefix).expect("prefix uses existing generators");
        (core, conj)
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.runs.first(), self.runs.last()) {
            (Some(f), Some(l)) if self.runs.len() >= 2 => {
                !(f.gen == l.gen && (f.exp > 0) != (l.exp > 0))
            }
            _ => true,
        }
    }

    /// Cyclic length `‖x‖`: letter length of the cyclic reduction.
    pub fn cyclic_length(&self) -> usize {
        self.cyclic_reduction().0.len()
    }

    /// Replaces every exponent by its absolute value and re-reduces.
    pub fn flatten_signs(&self) -> Word {
        let mut runs = Vec::with_capacity(self.runs.len());
        for r in &self.runs {
            push_run(&mut runs, Run::new(r.gen, r.exp.abs()));
        }
        Word { rank: self.rank, runs }
    }

    pub fn sign_profile(&self, g: Generator) -> SignProfile {
        let mut pos = false;
        let mut neg = false;
        for r in self.runs.iter().filter(|r| r.gen == g) {
            if r.exp > 0 {
                pos = true;
            } else {
                neg = true;
            }
        }
        match (pos, neg) {
            (true, true) => SignProfile::Mixed,
            (true, false) => SignProfile::AllPositive,
            (false, true) => SignProfile::AllNegative,
            (false, false) => SignProfile::Absent,
        }
    }

    /// Total number of letters on generator `g` (either sign).
    pub fn letter_count(&self, g: Generator) -> usize {
        self.runs
            .iter()
            .filter(|r| r.gen == g)
            .map(|r| r.exp.unsigned_abs() as usize)
            .sum()
    }

    /// Parses the text format. Unreduced input is accepted and canonicalized.
    pub fn parse(s: &str, rank: u32) -> Result<Word, WordError> {
        let mut runs = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, exp) = match tok.split_once('^') {
                Some((n, e)) => {
                    let e: i64 = e
                        .parse()
                        .map_err(|_| WordError::Parse(format!("bad exponent in `{tok}`")))?;
                    (n, e)
                }
                None => (tok, 1),
            };
            let gen = parse_generator(name, rank)?;
            runs.push(Run::new(gen, exp));
        }
        Word::from_runs(rank, runs)
    }
}

fn parse_generator(name: &str, rank: u32) -> Result<Generator, WordError> {
    let gen = if rank == 2 && name == "a" {
        Generator(0)
    } else if rank == 2 && name == "b" {
        Generator(1)
    } else if let Some(idx) = name.strip_prefix('x') {
        let i: u32 = idx
            .parse()
            .map_err(|_| WordError::Parse(format!("unknown generator `{name}`")))?;
        if i == 0 {
            return Err(WordError::Parse("generators are numbered from x1".into()));
        }
        Generator(i - 1)
    } else {
        return Err(WordError::Parse(format!("unknown generator `{name}`")));
    };
    if gen.0 >= rank {
        return Err(WordError::GeneratorOutOfRange { index: gen.0, rank });
    }
    Ok(gen)
}

pub(crate) fn generator_name(gen: Generator, rank: u32) -> String {
    match (rank, gen.0) {
        (2, 0) => "a".to_string(),
        (2, 1) => "b".to_string(),
        (_, i) => format!("x{}", i + 1),
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.runs.is_empty() {
            return f.write_str("1");
        }
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&generator_name(r.gen, self.rank))?;
            if r.exp != 1 {
                write!(f, "^{}", r.exp)?;
            }
        }
        Ok(())
    }
}

/// Parses a rank-2 word.
impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Word::parse(s, 2)
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Word::parse(&s, 2).map_err(serde::de::Error::custom)
    }
}
