use std::fmt;

use serde::{Serialize, Serializer};

use super::{Letter, SuffixAutomaton, Word, WordError};

/// Start index of the lexicographically least rotation of `s`.
pub fn least_rotation(s: &[Letter]) -> usize {
    let n = s.len();
    if n == 0 {
        return 0;
    }
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        let a = s[(i + k) % n];
        let b = s[(j + k) % n];
        if a == b {
            k += 1;
            continue;
        }
        if a > b {
            i += k + 1;
        } else {
            j += k + 1;
        }
        if i == j {
            j += 1;
        }
        k = 0;
    }
    i.min(j)
}

/// A conjugacy class representative: the least rotation of a cyclically
/// reduced word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord {
    rank: u32,
    letters: Vec<Letter>,
}

impl CyclicWord {
    pub fn new(x: &Word) -> Self {
        let (core, _) = x.cyclic_reduction();
        let letters = core.letters();
        let r = least_rotation(&letters);
        let mut rotated = Vec::with_capacity(letters.len());
        rotated.extend_from_slice(&letters[r..]);
        rotated.extend_from_slice(&letters[..r]);
        CyclicWord { rank: x.rank(), letters: rotated }
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The canonical rotation as an ordinary word.
    pub fn word(&self) -> Word {
        Word::from_letters_unchecked(self.rank, &self.letters)
    }

    pub fn inverse(&self) -> CyclicWord {
        CyclicWord::new(&self.word().inverse())
    }

    /// Letters of `self` followed by its first `extra` letters, wrapping.
    pub(crate) fn unrolled(&self, extra: usize) -> Vec<Letter> {
        let n = self.letters.len();
        let mut out = Vec::with_capacity(n + extra);
        out.extend_from_slice(&self.letters);
        let mut left = extra;
        while left > 0 && n > 0 {
            let take = left.min(n);
            out.extend_from_slice(&self.letters[..take]);
            left -= take;
        }
        out
    }
}

impl From<&Word> for CyclicWord {
    fn from(x: &Word) -> Self {
        CyclicWord::new(x)
    }
}

impl fmt::Display for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.word().fmt(f)
    }
}

impl Serialize for CyclicWord {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonSubstring {
    pub length: usize,
    pub witness: Word,
}

/// Suffix automaton over every window of a fixed cycle, reusable against
/// many partners.
#[derive(Debug, Clone)]
pub struct CyclicMatcher {
    len: usize,
    sam: SuffixAutomaton,
}

impl CyclicMatcher {
    pub fn new(x: &CyclicWord) -> Self {
        let n = x.len();
        let text = x.unrolled(n.saturating_sub(1));
        CyclicMatcher { len: n, sam: SuffixAutomaton::build(&text, 2 * x.rank().max(1) as usize) }
    }

    pub fn cycle_len(&self) -> usize {
        self.len
    }

    /// Longest common cyclic substring length with `y`.
    pub fn common_len(&self, y: &CyclicWord) -> usize {
        let cap = self.len.min(y.len());
        if cap == 0 {
            return 0;
        }
        self.sam.longest_common(&y.unrolled(cap - 1), cap)
    }

    /// Streams the unrolled `y` and reports, for each position, the longest
    /// common substring ending there. Returns the unrolled text.
    pub fn scan<F: FnMut(usize, usize)>(&self, y: &CyclicWord, f: F) -> Vec<Letter> {
        let cap = self.len.min(y.len());
        if cap == 0 {
            return Vec::new();
        }
        let text = y.unrolled(cap - 1);
        self.sam.matches(&text, cap, f);
        text
    }

    /// Length and lexicographically least witness.
    pub fn common(&self, y: &CyclicWord) -> CommonSubstring {
        let mut ends: Vec<(usize, usize)> = Vec::new();
        let mut best = 0usize;
        let text = self.scan(y, |i, l| {
            if l > best {
                best = l;
                ends.clear();
            }
            if l == best && l > 0 {
                ends.push((i, l));
            }
        });
        if best == 0 {
            return CommonSubstring { length: 0, witness: Word::identity(y.rank()) };
        }
        let slice = |i: usize| &text[i + 1 - best..=i];
        let least = ends.iter().map(|&(i, _)| slice(i)).min().expect("non-empty");
        CommonSubstring { length: best, witness: Word::from_letters_unchecked(y.rank(), least) }
    }
}

/// Longest string occurring in both cycles, with the lexicographically least
/// witness among those of maximal length.
pub fn max_common_cyclic_substring(
    x: &CyclicWord,
    y: &CyclicWord,
) -> Result<CommonSubstring, WordError> {
    if x.rank() != y.rank() {
        return Err(WordError::RankMismatch { left: x.rank(), right: y.rank() });
    }
    if x == y {
        return Err(WordError::EqualCycles);
    }
    Ok(CyclicMatcher::new(x).common(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc(s: &str) -> CyclicWord {
        CyclicWord::new(&s.parse::<Word>().unwrap())
    }

    /// All windows of length `1..=len` read around the cycle.
    fn windows(c: &CyclicWord) -> Vec<Vec<Letter>> {
        let n = c.len();
        let mut out = Vec::new();
        for start in 0..n {
            for l in 1..=n {
                out.push((0..l).map(|k| c.letters()[(start + k) % n]).collect());
            }
        }
        out
    }

    fn brute(x: &CyclicWord, y: &CyclicWord) -> (usize, Vec<Letter>) {
        let wy = windows(y);
        let mut common: Vec<Vec<Letter>> =
            windows(x).into_iter().filter(|s| wy.contains(s)).collect();
        let best = common.iter().map(Vec::len).max().unwrap_or(0);
        common.retain(|s| s.len() == best);
        common.sort();
        (best, common.into_iter().next().unwrap_or_default())
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(cyc("a b a^-1"), cyc("b"));
        assert_eq!(cyc("b a"), cyc("a b"));
        assert_eq!(cyc("b a").to_string(), "a b");
        assert_eq!(cyc("b^-1 a b a^2 b^2 b"), cyc("a b a^2 b^2"));
        assert_eq!(cyc("a b a^-1 b^-1").len(), 4);
        assert!(cyc("a a^-1").is_empty());
    }

    #[test]
    fn least_rotation_brute() {
        let s = [3, 1, 2, 1, 2, 1, 0, 1, 0, 1];
        let n = s.len();
        let rots: Vec<Vec<u32>> =
            (0..n).map(|r| s[r..].iter().chain(&s[..r]).copied().collect()).collect();
        let min = rots.iter().min().unwrap();
        assert_eq!(&rots[least_rotation(&s)], min);
        assert_eq!(least_rotation(&[1, 1, 1]), 0);
    }

    #[test]
    fn common_substring_examples() {
        let r = max_common_cyclic_substring(&cyc("a^10 b"), &cyc("a^10 b^-1")).unwrap();
        assert_eq!((r.length, r.witness.to_string()), (10, "a^10".to_string()));

        let r = max_common_cyclic_substring(&cyc("a"), &cyc("b")).unwrap();
        assert_eq!((r.length, r.witness.to_string()), (0, "1".to_string()));

        // No letter of `a b` occurs in `a^-1 b^-1`, so the longest common
        // substring is empty.
        let (x, y) = (cyc("a b"), cyc("a^-1 b^-1"));
        assert_eq!(brute(&x, &y).0, 0);
        assert_eq!(max_common_cyclic_substring(&x, &y).unwrap().length, 0);
        // Against its inverse's rotation partner the single letters match.
        let r = max_common_cyclic_substring(&cyc("a b"), &cyc("a b^-1")).unwrap();
        assert_eq!((r.length, r.witness.to_string()), (1, "a".to_string()));
    }

    #[test]
    fn equal_cycles_rejected() {
        assert_eq!(
            max_common_cyclic_substring(&cyc("a b"), &cyc("b a")),
            Err(WordError::EqualCycles)
        );
    }

    #[test]
    fn agrees_with_brute_force_on_fixed_cases() {
        let cases = [
            ("a b a^2 b^2", "a b^2 a^2 b"),
            ("a^3 b a^-1 b", "a^2 b a^-1 b^2"),
            ("a b a b a^-1", "b a b a b^-1"),
            ("a^2 b^-1 a b", "b a b^-1 a^3"),
        ];
        for (x, y) in cases {
            let (x, y) = (cyc(x), cyc(y));
            let got = max_common_cyclic_substring(&x, &y).unwrap();
            let (len, wit) = brute(&x, &y);
            assert_eq!(got.length, len);
            assert_eq!(got.witness.letters(), wit);
        }
    }
}
