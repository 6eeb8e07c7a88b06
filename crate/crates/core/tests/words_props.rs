use proptest::prelude::*;

use coind_core::autf2::{Endo, Sym};
use coind_core::family::transversal_relators;
use coind_core::smallcanc::{
    check_small_cancellation, dehn_reduce, non_membership_certificate, verify_dehn_trace, SymmetrizedSet,
};
use coind_core::words::{max_common_cyclic_substring, CyclicWord, Letter, Word};
use num_rational::Rational64;

fn naive_reduce(v: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::new();
    for &l in v {
        if out.last() == Some(&(l ^ 1)) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

fn naive_canonical(v: &[Letter]) -> Vec<Letter> {
    let mut r = naive_reduce(v);
    while r.len() >= 2 && r[0] == r[r.len() - 1] ^ 1 {
        r.remove(0);
        r.pop();
    }
    (0..r.len().max(1))
        .map(|k| {
            let k = k.min(r.len());
            [&r[k..], &r[..k]].concat()
        })
        .min()
        .unwrap_or_default()
}

fn letters(rank: u32, max: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(0..2 * rank, 0..max)
}

fn word(rank: u32, max: usize) -> impl Strategy<Value = Word> {
    letters(rank, max).prop_map(move |v| Word::from_letters(rank, &v).unwrap())
}

fn endo() -> impl Strategy<Value = Endo> {
    prop::collection::vec(prop::sample::select(vec![Sym::Phi, Sym::Psi, Sym::Chi, Sym::Xi, Sym::Tau]), 0..5)
        .prop_map(|s| Endo::from_symbols(&s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn reduction_matches_stack(v in letters(3, 40)) {
        prop_assert_eq!(Word::from_letters(3, &v).unwrap().letters(), naive_reduce(&v));
    }

    #[test]
    fn canonical_matches_rotation_minimum(v in letters(2, 30)) {
        let w = Word::from_letters(2, &v).unwrap();
        let c = CyclicWord::new(&w);
        let expect = naive_canonical(&v);
        prop_assert_eq!(c.letters(), expect.as_slice());
        prop_assert_eq!(c.len(), w.cyclic_length());
    }

    #[test]
    fn canonical_is_conjugation_invariant(x in word(2, 20), g in word(2, 10)) {
        let y = x.conjugate_by(&g).unwrap();
        prop_assert_eq!(CyclicWord::new(&x), CyclicWord::new(&y));
        prop_assert_eq!(x.cyclic_length(), y.cyclic_length());
    }

    #[test]
    fn group_laws(x in word(2, 15), y in word(2, 15), z in word(2, 15)) {
        let xy_z = x.concat_reduce(&y).unwrap().concat_reduce(&z).unwrap();
        let x_yz = x.concat_reduce(&y.concat_reduce(&z).unwrap()).unwrap();
        prop_assert_eq!(xy_z, x_yz);
        prop_assert!(x.concat_reduce(&x.inverse()).unwrap().is_identity());
        prop_assert_eq!(x.pow(3), x.concat_reduce(&x).unwrap().concat_reduce(&x).unwrap());
    }

    #[test]
    fn text_round_trip(x in word(3, 25)) {
        prop_assert_eq!(Word::parse(&x.to_string(), 3).unwrap(), x);
    }

    #[test]
    fn common_substring_symmetric_and_bounded(x in word(2, 16), y in word(2, 16)) {
        let (cx, cy) = (CyclicWord::new(&x), CyclicWord::new(&y));
        prop_assume!(!cx.is_empty() && !cy.is_empty() && cx != cy);
        let a = max_common_cyclic_substring(&cx, &cy).unwrap();
        let b = max_common_cyclic_substring(&cy, &cx).unwrap();
        prop_assert_eq!(a.length, b.length);
        prop_assert!(a.length <= cx.len().min(cy.len()));
    }

    #[test]
    fn endomorphisms_are_homomorphisms(f in endo(), x in word(2, 12), y in word(2, 12)) {
        let lhs = f.apply(&x.concat_reduce(&y).unwrap()).unwrap();
        let rhs = f.apply(&x).unwrap().concat_reduce(&f.apply(&y).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn composition_applies_right_first(f in endo(), g in endo(), x in word(2, 10)) {
        prop_assert_eq!(f.compose(&g).apply(&x).unwrap(), f.apply(&g.apply(&x).unwrap()).unwrap());
    }

    #[test]
    fn automorphisms_preserve_primitivity(f in endo()) {
        prop_assert!(f.reduces_to_basis());
    }
}

#[test]
fn symmetrized_set_examples() {
    let s = SymmetrizedSet::new(&["a b a^-1".parse().unwrap()]).unwrap();
    let mut got: Vec<String> = s.members().iter().map(|m| m.cycle.to_string()).collect();
    got.sort();
    assert_eq!(got, vec!["b", "b^-1"]);
    let r = check_small_cancellation(&["a b".parse().unwrap()], Rational64::new(1, 6)).unwrap();
    assert!(r.pass);
    assert_eq!(r.max_ratio(), Rational64::from_integer(0));
}

#[test]
fn dehn_on_family_relators() {
    let rels: Vec<Word> = transversal_relators(102, 1).unwrap().into_iter().map(|(_, r)| r).collect();
    let mut set = SymmetrizedSet::new(&rels).unwrap();
    assert!(set.certify().pass);
    let g: Word = "b^-2 a".parse().unwrap();
    let z = rels[0].conjugate_by(&g).unwrap().concat_reduce(&rels[1].inverse()).unwrap();
    let res = dehn_reduce(&z, &set).unwrap();
    assert!(res.reduced_to_identity());
    assert!(verify_dehn_trace(&z, &res, &set));
    assert!(!res.heuristic);

    let short: Word = "a b^2".parse().unwrap();
    assert!(non_membership_certificate(&short, &set).unwrap().is_certificate());
    assert!(non_membership_certificate(&Word::identity(2), &set).is_err());
}
