use super::Letter;

const NONE: u32 = u32::MAX;

/// Suffix automaton over a small integer alphabet with dense transitions.
#[derive(Debug, Clone)]
pub struct SuffixAutomaton {
    alphabet: usize,
    next: Vec<u32>,
    link: Vec<u32>,
    len: Vec<u32>,
    first_end: Vec<u32>,
    last: u32,
}

impl SuffixAutomaton {
    pub fn new(alphabet: usize, expected_len: usize) -> Self {
        let cap = 2 * expected_len.max(1);
        let mut sam = SuffixAutomaton {
            alphabet,
            next: Vec::with_capacity(cap * alphabet),
            link: Vec::with_capacity(cap),
            len: Vec::with_capacity(cap),
            first_end: Vec::with_capacity(cap),
            last: 0,
        };
        sam.add_state(0, NONE, 0);
        sam
    }

    pub fn build(text: &[Letter], alphabet: usize) -> Self {
        let mut sam = SuffixAutomaton::new(alphabet, text.len());
        for &c in text {
            sam.extend(c);
        }
        sam
    }

    fn add_state(&mut self, len: u32, link: u32, first_end: u32) -> u32 {
        let id = self.len.len() as u32;
        self.len.push(len);
        self.link.push(link);
        self.first_end.push(first_end);
        self.next.extend(std::iter::repeat(NONE).take(self.alphabet));
        id
    }

    #[inline]
    fn tr(&self, s: u32, c: Letter) -> u32 {
        self.next[s as usize * self.alphabet + c as usize]
    }

    #[inline]
    fn set_tr(&mut self, s: u32, c: Letter, t: u32) {
        self.next[s as usize * self.alphabet + c as usize] = t;
    }

    pub fn extend(&mut self, c: Letter) {
        debug_assert!((c as usize) < self.alphabet);
        let l = self.len[self.last as usize] + 1;
        let cur = self.add_state(l, NONE, l - 1);
        let mut p = self.last;
        while p != NONE && self.tr(p, c) == NONE {
            self.set_tr(p, c, cur);
            p = self.link[p as usize];
        }
        if p == NONE {
            self.link[cur as usize] = 0;
        } else {
            let q = self.tr(p, c);
            if self.len[p as usize] + 1 == self.len[q as usize] {
                self.link[cur as usize] = q;
            } else {
                let clone = self.add_state(
                    self.len[p as usize] + 1,
                    self.link[q as usize],
                    self.first_end[q as usize],
                );
                let a = self.alphabet;
                let (src, dst) = (q as usize * a, clone as usize * a);
                self.next.copy_within(src..src + a, dst);
                while p != NONE && self.tr(p, c) == q {
                    self.set_tr(p, c, clone);
                    p = self.link[p as usize];
                }
                self.link[q as usize] = clone;
                self.link[cur as usize] = clone;
            }
        }
        self.last = cur;
    }

    pub fn states(&self) -> usize {
        self.len.len()
    }

    /// Streams `text` through the automaton, calling `f(i, l)` with the length
    /// `l` of the longest suffix of `text[..=i]` that is a factor of the
    /// indexed text, clamped to `cap`.
    pub fn matches<F: FnMut(usize, usize)>(&self, text: &[Letter], cap: usize, mut f: F) {
        self.matches_located(text, cap, |i, l, _| f(i, l));
    }

    /// Like [`SuffixAutomaton::matches`], also passing the end index of the
    /// first occurrence of the match inside the indexed text.
    pub fn matches_located<F: FnMut(usize, usize, usize)>(
        &self,
        text: &[Letter],
        cap: usize,
        mut f: F,
    ) {
        let mut state = 0u32;
        let mut l = 0usize;
        for (i, &c) in text.iter().enumerate() {
            loop {
                let t = self.tr(state, c);
                if t != NONE {
                    state = t;
                    l += 1;
                    break;
                }
                if state == 0 {
                    l = 0;
                    break;
                }
                state = self.link[state as usize];
                l = self.len[state as usize] as usize;
            }
            if l > cap {
                l = cap;
                // Walk up so the state still represents the clamped suffix.
                while state != 0 && self.len[self.link[state as usize] as usize] as usize >= l {
                    state = self.link[state as usize];
                }
            }
            f(i, l, self.first_end[state as usize] as usize);
        }
    }

    /// Longest factor shared with `text`, capped at `cap`.
    pub fn longest_common(&self, text: &[Letter], cap: usize) -> usize {
        let mut best = 0;
        self.matches(text, cap, |_, l| best = best.max(l));
        best
    }
}
