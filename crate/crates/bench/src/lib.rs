//! Shared inputs for the benchmarks.

use coind_core::family::transversal_relators;
use coind_core::words::{CyclicWord, Word};

/// The truncated family relators at `n`, as words and as cycles.
pub fn relators(n: usize, max_len: usize) -> (Vec<Word>, Vec<CyclicWord>) {
    let words: Vec<Word> = transversal_relators(n, max_len).expect("positive family").into_iter().map(|(_, r)| r).collect();
    let cycles = words.iter().map(CyclicWord::new).collect();
    (words, cycles)
}
