//! Symmetrized relator sets, pieces, Dehn reduction and length certificates.

use std::collections::HashMap;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::words::{
    CyclicMatcher, CyclicWord, Letter, SuffixAutomaton, Word, WordError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScError {
    #[error("relator {0} is trivial after cyclic reduction")]
    IdentityRelator(usize),
    #[error("word is not cyclically reduced")]
    NotCyclicallyReduced,
    #[error("word is the identity")]
    IdentityWord,
    #[error("word is a member of the symmetrized set (class {0})")]
    MemberOfSet(usize),
    #[error("line {line}: {source}")]
    RelatorFile { line: usize, source: WordError },
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Where a cycle class first came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Origin {
    /// Index into the input relator list.
    pub source: usize,
    /// Whether the class is the inverse of the source.
    pub inverted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Member {
    pub cycle: CyclicWord,
    pub origin: Origin,
}

/// The cycle classes of `S ∪ S⁻¹`. Each class stands for all of its
/// rotations; rotations are expanded during matching.
#[derive(Debug, Clone)]
pub struct SymmetrizedSet {
    rank: u32,
    members: Vec<Member>,
    index: HashMap<CyclicWord, usize>,
    certified: bool,
}

impl SymmetrizedSet {
    pub fn new(relators: &[Word]) -> Result<Self, ScError> {
        let rank = relators.first().map_or(2, Word::rank);
        let mut set = SymmetrizedSet {
            rank,
            members: Vec::new(),
            index: HashMap::new(),
            certified: false,
        };
        for (source, r) in relators.iter().enumerate() {
            if r.rank() != rank {
                return Err(WordError::RankMismatch { left: rank, right: r.rank() }.into());
            }
            let c = CyclicWord::new(r);
            if c.is_empty() {
                return Err(ScError::IdentityRelator(source));
            }
            let ci = c.inverse();
            set.insert(c, Origin { source, inverted: false });
            set.insert(ci, Origin { source, inverted: true });
        }
        Ok(set)
    }

    fn insert(&mut self, cycle: CyclicWord, origin: Origin) {
        if self.index.contains_key(&cycle) {
            return;
        }
        self.index.insert(cycle.clone(), self.members.len());
        self.members.push(Member { cycle, origin });
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Class index of `x` if some rotation of its cyclic reduction is a member.
    pub fn find(&self, x: &Word) -> Option<usize> {
        self.index.get(&CyclicWord::new(x)).copied()
    }

    pub fn min_member_len(&self) -> Option<usize> {
        self.members.iter().map(|m| m.cycle.len()).min()
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Runs the C′(1/6) check and records the outcome.
    pub fn certify(&mut self) -> ScReport {
        let report = self.check(Rational64::new(1, 6));
        self.certified = report.pass;
        report
    }

    /// Marks the set as satisfying C′(1/6) on the caller's authority, e.g.
    /// after an earlier `certify` of the same relators.
    pub fn assume_certified(&mut self) {
        self.certified = true;
    }

    /// Pieces over all unordered pairs of distinct classes.
    pub fn check(&self, lambda: Rational64) -> ScReport {
        self.check_with_progress(lambda, &|_, _| {})
    }

    /// As [`SymmetrizedSet::check`], reporting `(rows done, rows total)` as
    /// the pair loop advances.
    pub fn check_with_progress(
        &self,
        lambda: Rational64,
        progress: &(dyn Fn(usize, usize) + Sync),
    ) -> ScReport {
        let n = self.members.len();
        let done = std::sync::atomic::AtomicUsize::new(0);
        let best = (0..n)
            .into_par_iter()
            .map(|i| {
                let matcher = CyclicMatcher::new(&self.members[i].cycle);
                let mut row_best: Option<Candidate> = None;
                for j in i + 1..n {
                    let y = &self.members[j].cycle;
                    let piece = matcher.common_len(y);
                    let c = Candidate {
                        ratio: piece_ratio(piece, matcher.cycle_len(), y.len()),
                        i,
                        j,
                    };
                    row_best = Some(match row_best {
                        Some(b) if !c.beats(&b) => b,
                        _ => c,
                    });
                }
                let d = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
                progress(d, n);
                row_best
            })
            .reduce(
                || None,
                |a, b| match (a, b) {
                    (Some(a), Some(b)) => Some(if b.beats(&a) { b } else { a }),
                    (a, b) => a.or(b),
                },
            );
        let pairs_checked = n * n.saturating_sub(1) / 2;
        let worst = best.map(|c| self.piece_report(c.i, c.j, lambda));
        let pass = worst.as_ref().map_or(true, |w| w.ratio < lambda);
        ScReport { lambda, pairs_checked, pass, worst, self_overlaps: "excluded" }
    }

    /// Full report (with witness) for one pair of classes.
    pub fn piece_report(&self, i: usize, j: usize, lambda: Rational64) -> PieceReport {
        let (x, y) = (&self.members[i].cycle, &self.members[j].cycle);
        let common = CyclicMatcher::new(x).common(y);
        let ratio = piece_ratio(common.length, x.len(), y.len());
        PieceReport {
            pair: (i, j),
            x: x.clone(),
            y: y.clone(),
            piece_length: common.length,
            witness: common.witness,
            ratio,
            pass: ratio < lambda,
        }
    }
}

fn piece_ratio(piece: usize, lx: usize, ly: usize) -> Rational64 {
    Rational64::new(piece as i64, lx.min(ly) as i64)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    ratio: Rational64,
    i: usize,
    j: usize,
}

impl Candidate {
    /// Larger ratio wins; ties go to the earlier pair.
    fn beats(&self, other: &Candidate) -> bool {
        self.ratio > other.ratio || (self.ratio == other.ratio && (self.i, self.j) < (other.i, other.j))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PieceReport {
    pub pair: (usize, usize),
    pub x: CyclicWord,
    pub y: CyclicWord,
    pub piece_length: usize,
    pub witness: Word,
    #[serde(serialize_with = "crate::report::ser_ratio")]
    pub ratio: Rational64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScReport {
    #[serde(serialize_with = "crate::report::ser_ratio")]
    pub lambda: Rational64,
    pub pairs_checked: usize,
    pub pass: bool,
    pub worst: Option<PieceReport>,
    pub self_overlaps: &'static str,
}

impl ScReport {
    pub fn max_ratio(&self) -> Rational64 {
        self.worst.as_ref().map_or(Rational64::from_integer(0), |w| w.ratio)
    }
}

/// Symmetrizes `relators` and checks every piece ratio against `lambda`.
pub fn check_small_cancellation(relators: &[Word], lambda: Rational64) -> Result<ScReport, ScError> {
    Ok(SymmetrizedSet::new(relators)?.check(lambda))
}

/// Parses one word per line; blank lines and `#` comments are skipped.
pub fn parse_relator_file(text: &str, rank: u32) -> Result<Vec<Word>, ScError> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        out.push(Word::parse(body, rank).map_err(|source| ScError::RelatorFile { line: k + 1, source })?);
    }
    Ok(out)
}

/// One Dehn rewrite: the cyclic word `before` is rotated to start at
/// `position`, its prefix `matched` (more than half of a rotation
/// `matched · replacement⁻¹` of relator class `relator`) is replaced by
/// `replacement`, and the result is cyclically reduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DehnStep {
    pub relator: usize,
    pub position: usize,
    pub before: Word,
    pub matched: Word,
    pub replacement: Word,
    pub len_before: usize,
    pub len_after: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DehnResult {
    pub result: Word,
    pub steps: Vec<DehnStep>,
    /// The relator set was not certified C′(1/6), so an irreducible
    /// non-trivial result does not prove non-membership.
    pub heuristic: bool,
}

impl DehnResult {
    pub fn reduced_to_identity(&self) -> bool {
        self.result.is_identity()
    }
}

fn rotate(letters: &[Letter], start: usize) -> Vec<Letter> {
    let mut out = Vec::with_capacity(letters.len());
    out.extend_from_slice(&letters[start..]);
    out.extend_from_slice(&letters[..start]);
    out
}

struct Match {
    len: usize,
    relator: usize,
    /// Start of the match in the unrolled relator cycle.
    r_start: usize,
    /// Start of the match in the unrolled z cycle.
    z_start: usize,
}

/// Greedy cyclic Dehn reduction: each round replaces the longest subword of
/// the cyclic word matching more than half of a relator cycle (ties: lowest
/// class index, then earliest position in the relator).
pub fn dehn_reduce(z: &Word, set: &SymmetrizedSet) -> Result<DehnResult, ScError> {
    if z.rank() != set.rank() {
        return Err(WordError::RankMismatch { left: set.rank(), right: z.rank() }.into());
    }
    let rank = z.rank();
    let alphabet = 2 * rank.max(1) as usize;
    let (core, _) = z.cyclic_reduction();
    let mut cur = core.letters();
    let mut steps = Vec::new();
    loop {
        let zl = cur.len();
        if zl == 0 {
            break;
        }
        let mut unrolled = cur.clone();
        unrolled.extend_from_slice(&cur[..zl - 1]);
        let sam = SuffixAutomaton::build(&unrolled, alphabet);
        let mut best: Option<Match> = None;
        for (ri, m) in set.members().iter().enumerate() {
            let rl = m.cycle.len();
            // A useful match needs more than rl/2 letters of z.
            if 2 * zl <= rl {
                continue;
            }
            if best.as_ref().is_some_and(|b| b.len >= rl) {
                continue;
            }
            let cap = zl.min(rl);
            let text = m.cycle.unrolled(cap - 1);
            sam.matches_located(&text, cap, |i, l, end| {
                if 2 * l > rl && best.as_ref().map_or(true, |b| l > b.len) {
                    best = Some(Match {
                        len: l,
                        relator: ri,
                        r_start: i + 1 - l,
                        z_start: end + 1 - l,
                    });
                }
            });
        }
        let Some(m) = best else { break };
        let r = &set.members()[m.relator].cycle;
        let rl = r.len();
        let rot_r = rotate(r.letters(), m.r_start % rl);
        let z_pos = m.z_start % zl;
        let rot_z = rotate(&cur, z_pos);
        debug_assert_eq!(&rot_z[..m.len], &rot_r[..m.len]);
        let complement = Word::from_letters_unchecked(rank, &rot_r[m.len..]);
        let replacement = complement.inverse();
        let rest = Word::from_letters_unchecked(rank, &rot_z[m.len..]);
        let (next, _) = replacement.mul(&rest).cyclic_reduction();
        let next_letters = next.letters();
        steps.push(DehnStep {
            relator: m.relator,
            position: z_pos,
            before: Word::from_letters_unchecked(rank, &cur),
            matched: Word::from_letters_unchecked(rank, &rot_r[..m.len]),
            replacement,
            len_before: zl,
            len_after: next_letters.len(),
        });
        cur = next_letters;
    }
    Ok(DehnResult {
        result: Word::from_letters_unchecked(rank, &cur),
        steps,
        heuristic: !set.is_certified(),
    })
}

/// Independent re-check of one trace step.
pub fn verify_dehn_step(step: &DehnStep, set: &SymmetrizedSet) -> bool {
    let Some(m) = set.members().get(step.relator) else { return false };
    let r = &m.cycle;
    let before = step.before.letters();
    if step.len_before != before.len() || step.position >= before.len().max(1) {
        return false;
    }
    let rot = rotate(&before, step.position);
    let matched = step.matched.letters();
    if matched.len() > rot.len() || rot[..matched.len()] != matched[..] {
        return false;
    }
    if 2 * matched.len() <= r.len() {
        return false;
    }
    // matched · replacement⁻¹ must be a rotation of the relator cycle.
    let mut whole = matched.clone();
    whole.extend(step.replacement.inverse().letters());
    if whole.len() != r.len() || CyclicWord::new(&Word::from_letters_unchecked(set.rank(), &whole)) != *r {
        return false;
    }
    let rest = Word::from_letters_unchecked(set.rank(), &rot[matched.len()..]);
    let (next, _) = step.replacement.mul(&rest).cyclic_reduction();
    next.len() == step.len_after && step.len_after < step.len_before
}

/// Replays a full trace from the cyclic reduction of `z`.
pub fn verify_dehn_trace(z: &Word, res: &DehnResult, set: &SymmetrizedSet) -> bool {
    let mut cur = z.cyclic_reduction().0;
    for step in &res.steps {
        if step.before != cur || !verify_dehn_step(step, set) {
            return false;
        }
        let rot = rotate(&cur.letters(), step.position);
        let rest = Word::from_letters_unchecked(set.rank(), &rot[step.matched.len()..]);
        cur = step.replacement.mul(&rest).cyclic_reduction().0;
    }
    cur == res.result
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CertificateOutcome {
    /// Every class is at least as long as `z`, so `z` lies outside the
    /// normal closure (valid when the set satisfies C′(1/6)).
    Certificate { word_len: usize, min_relator_len: usize, set_certified: bool },
    /// Some class is shorter than `z`; fall back to Dehn reduction.
    Refusal { word_len: usize, min_relator_len: usize },
}

impl CertificateOutcome {
    pub fn is_certificate(&self) -> bool {
        matches!(self, CertificateOutcome::Certificate { .. })
    }
}

pub fn non_membership_certificate(
    z: &Word,
    set: &SymmetrizedSet,
) -> Result<CertificateOutcome, ScError> {
    if z.rank() != set.rank() {
        return Err(WordError::RankMismatch { left: set.rank(), right: z.rank() }.into());
    }
    if z.is_identity() {
        return Err(ScError::IdentityWord);
    }
    if !z.is_cyclically_reduced() {
        return Err(ScError::NotCyclicallyReduced);
    }
    if let Some(k) = set.find(z) {
        return Err(ScError::MemberOfSet(k));
    }
    let word_len = z.len();
    let min_relator_len = set.min_member_len().unwrap_or(usize::MAX);
    Ok(if min_relator_len >= word_len {
        CertificateOutcome::Certificate { word_len, min_relator_len, set_certified: set.is_certified() }
    } else {
        CertificateOutcome::Refusal { word_len, min_relator_len }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn set(words: &[&str]) -> SymmetrizedSet {
        SymmetrizedSet::new(&words.iter().map(|s| w(s)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn symmetrize_examples() {
        let s = set(&["a b"]);
        let names: Vec<String> = s.members().iter().map(|m| m.cycle.to_string()).collect();
        assert_eq!(names, ["a b", "a^-1 b^-1"]);
        let s = set(&["a b a^-1"]);
        let names: Vec<String> = s.members().iter().map(|m| m.cycle.to_string()).collect();
        assert_eq!(names, ["b", "b^-1"]);
        assert_eq!(set(&["a b a^2 b^2"]).len(), 2);
        assert!(matches!(
            SymmetrizedSet::new(&[w("a b b^-1 a^-1")]),
            Err(ScError::IdentityRelator(0))
        ));
    }

    #[test]
    fn small_cancellation_examples() {
        let r = check_small_cancellation(&[w("a^10 b"), w("a^10 b^-1")], Rational64::new(1, 6)).unwrap();
        assert!(!r.pass);
        let worst = r.worst.unwrap();
        assert_eq!(worst.witness.to_string(), "a^10");
        assert_eq!(worst.ratio, Rational64::new(10, 11));

        // The two classes of `a b` share no letter.
        let r = check_small_cancellation(&[w("a b")], Rational64::new(1, 6)).unwrap();
        assert_eq!(r.max_ratio(), Rational64::from_integer(0));
        assert!(r.pass);
        assert_eq!(r.pairs_checked, 1);
    }

    #[test]
    fn dehn_examples() {
        let mut s = set(&["a^7 b^7 a^-1 b^2 a b^-3 a^2 b a^-4 b^-2"]);
        assert!(s.certify().pass);
        let r0 = s.members()[0].cycle.word();
        let res = dehn_reduce(&r0, &s).unwrap();
        assert!(res.reduced_to_identity());
        assert_eq!(res.steps.len(), 1);
        assert!(!res.heuristic);

        let z = w("a b^-2").mul(&r0).mul(&w("b^2 a^-1"));
        let res = dehn_reduce(&z, &s).unwrap();
        assert!(res.reduced_to_identity());
        assert!(verify_dehn_trace(&z, &res, &s));

        let res = dehn_reduce(&w("a b"), &s).unwrap();
        assert_eq!(res.result.to_string(), "a b");
        assert!(res.steps.is_empty());
    }

    #[test]
    fn certificate_examples() {
        let s = set(&["a^7 b^7 a^-1 b^2 a b^-3 a^2 b a^-4 b^-2"]);
        assert!(non_membership_certificate(&w("a"), &s).unwrap().is_certificate());
        let r0 = s.members()[0].cycle.word();
        assert_eq!(non_membership_certificate(&r0, &s), Err(ScError::MemberOfSet(0)));
        assert_eq!(non_membership_certificate(&w("1"), &s), Err(ScError::IdentityWord));
        assert_eq!(
            non_membership_certificate(&w("a b a^-1"), &s),
            Err(ScError::NotCyclicallyReduced)
        );
    }

    #[test]
    fn relator_file_format() {
        let text = "# relators\na b a^-1 b^-1\n\n  a^3 # cube\n";
        let r = parse_relator_file(text, 2).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[1].to_string(), "a^3");
        assert!(matches!(parse_relator_file("a\nq\n", 2), Err(ScError::RelatorFile { line: 2, .. })));
    }
}
