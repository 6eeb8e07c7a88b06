//! Endomorphisms of the rank-two free group given by generator images.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::words::{push_run, Generator, Run, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AutError {
    #[error("unknown automorphism symbol `{0}`")]
    UnknownSymbol(String),
    #[error("provenance `{0}` is not a positive word in phi and psi")]
    NotPositive(String),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// The five named automorphisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Phi,
    Psi,
    Chi,
    Xi,
    Tau,
}

impl Sym {
    pub fn name(self) -> &'static str {
        match self {
            Sym::Phi => "phi",
            Sym::Psi => "psi",
            Sym::Chi => "chi",
            Sym::Xi => "xi",
            Sym::Tau => "tau",
        }
    }

    fn parse(tok: &str) -> Option<Sym> {
        Some(match tok {
            "phi" | "φ" => Sym::Phi,
            "psi" | "ψ" => Sym::Psi,
            "chi" | "χ" => Sym::Chi,
            "xi" | "ξ" => Sym::Xi,
            "tau" | "τ" => Sym::Tau,
            _ => return None,
        })
    }

    /// Images of `a` and `b` as run lists.
    fn images(self) -> ([Run; 2], [Run; 2]) {
        let (a, b) = (Generator::A, Generator::B);
        let r = Run::new;
        match self {
            Sym::Phi => ([r(a, 1), r(b, 1)], [r(b, 1), r(a, 0)]),
            Sym::Psi => ([r(a, 1), r(b, 0)], [r(b, 1), r(a, 1)]),
            Sym::Chi => ([r(a, 1), r(b, 0)], [r(b, -1), r(a, 0)]),
            Sym::Xi => ([r(a, -1), r(b, 0)], [r(b, 1), r(a, 0)]),
            Sym::Tau => ([r(b, 1), r(a, 0)], [r(a, 1), r(b, 0)]),
        }
    }
}

/// An endomorphism of F₂. The provenance is a formal composition read left
/// to right with the leftmost symbol applied last; it does not affect `apply`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Endo {
    image_a: Word,
    image_b: Word,
    provenance: Vec<Sym>,
}

impl Endo {
    pub fn identity() -> Self {
        Endo {
            image_a: Word::generator(2, Generator::A).expect("rank 2"),
            image_b: Word::generator(2, Generator::B).expect("rank 2"),
            provenance: Vec::new(),
        }
    }

    pub fn named(s: Sym) -> Self {
        let (ia, ib) = s.images();
        Endo {
            image_a: Word::from_runs(2, ia).expect("rank 2"),
            image_b: Word::from_runs(2, ib).expect("rank 2"),
            provenance: vec![s],
        }
    }

    /// An endomorphism with explicit images and no provenance.
    pub fn from_images(image_a: Word, image_b: Word) -> Result<Self, AutError> {
        for w in [&image_a, &image_b] {
            if w.rank() != 2 {
                return Err(WordError::RankMismatch { left: 2, right: w.rank() }.into());
            }
        }
        Ok(Endo { image_a, image_b, provenance: Vec::new() })
    }

    /// Composition of the given symbols, leftmost applied last.
    pub fn from_symbols(syms: &[Sym]) -> Self {
        syms.iter().rev().fold(Endo::identity(), |acc, &s| Endo::named(s).compose(&acc))
    }

    pub fn image_a(&self) -> &Word {
        &self.image_a
    }

    pub fn image_b(&self) -> &Word {
        &self.image_b
    }

    pub fn provenance(&self) -> &[Sym] {
        &self.provenance
    }

    pub fn is_identity_map(&self) -> bool {
        *self == Endo { provenance: self.provenance.clone(), ..Endo::identity() }
    }

    /// Homomorphic image of `x`.
    pub fn apply(&self, x: &Word) -> Result<Word, AutError> {
        if x.rank() != 2 {
            return Err(WordError::RankMismatch { left: 2, right: x.rank() }.into());
        }
        Ok(self.map(x))
    }

    pub(crate) fn map(&self, x: &Word) -> Word {
        let inv_a = self.image_a.inverse();
        let inv_b = self.image_b.inverse();
        let mut runs = Vec::new();
        for r in x.runs() {
            let piece = match (r.gen == Generator::A, r.exp > 0) {
                (true, true) => &self.image_a,
                (true, false) => &inv_a,
                (false, true) => &self.image_b,
                (false, false) => &inv_b,
            };
            for _ in 0..r.exp.unsigned_abs() {
                for &pr in piece.runs() {
                    push_run(&mut runs, pr);
                }
            }
        }
        Word::from_reduced_runs(2, runs)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Endo) -> Endo {
        let mut provenance = self.provenance.clone();
        provenance.extend_from_slice(&other.provenance);
        Endo {
            image_a: self.map(&other.image_a),
            image_b: self.map(&other.image_b),
            provenance,
        }
    }

    /// `|f(a)| + |f(b)|`
    pub fn growth(&self) -> usize {
        self.image_a.len() + self.image_b.len()
    }

    pub fn is_positive_provenance(&self) -> bool {
        self.provenance.iter().all(|s| matches!(s, Sym::Phi | Sym::Psi))
    }

    pub fn provenance_string(&self) -> String {
        if self.provenance.is_empty() {
            return "1".to_string();
        }
        let names: Vec<&str> = self.provenance.iter().map(|s| s.name()).collect();
        names.join(" ")
    }

    /// Parses space-separated symbol names (`phi`, `psi`, `chi`, `xi`, `tau`,
    /// or the Greek letters), with optional non-negative powers `phi^3`.
    /// `1` and `id` denote the identity.
    pub fn parse(s: &str) -> Result<Endo, AutError> {
        let mut syms = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "1" || tok == "id" {
                continue;
            }
            let (name, pow) = match tok.split_once('^') {
                Some((n, p)) => {
                    let p: usize =
                        p.parse().map_err(|_| AutError::UnknownSymbol(tok.to_string()))?;
                    (n, p)
                }
                None => (tok, 1),
            };
            let sym = Sym::parse(name).ok_or_else(|| AutError::UnknownSymbol(tok.to_string()))?;
            syms.extend(std::iter::repeat(sym).take(pow));
        }
        Ok(Endo::from_symbols(&syms))
    }

    /// Nielsen-style check that the image pair is a basis: applies
    /// length-reducing elementary moves until both images are single
    /// letters on distinct generators. `false` means no reducing move was
    /// found, which for the maps built here means the pair is not a basis.
    pub fn reduces_to_basis(&self) -> bool {
        let mut u = self.image_a.clone();
        let mut v = self.image_b.clone();
        loop {
            if u.len() == 1 && v.len() == 1 {
                return u.runs()[0].gen != v.runs()[0].gen;
            }
            let total = u.len() + v.len();
            let (vi, ui) = (v.inverse(), u.inverse());
            let candidates = [
                (u.mul(&v), v.clone()),
                (u.mul(&vi), v.clone()),
                (v.mul(&u), v.clone()),
                (vi.mul(&u), v.clone()),
                (u.clone(), v.mul(&u)),
                (u.clone(), v.mul(&ui)),
                (u.clone(), u.mul(&v)),
                (u.clone(), ui.mul(&v)),
            ];
            match candidates
                .into_iter()
                .filter(|(x, y)| !x.is_identity() && !y.is_identity())
                .min_by_key(|(x, y)| x.len() + y.len())
            {
                Some((x, y)) if x.len() + y.len() < total => {
                    u = x;
                    v = y;
                }
                _ => return false,
            }
        }
    }
}

impl FromStr for Endo {
    type Err = AutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Endo::parse(s)
    }
}

impl fmt::Display for Endo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.provenance_string())
    }
}

impl Serialize for Endo {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.provenance_string())
    }
}

/// All formal {φ, ψ}-words of length at most `max_len`, shortest first and
/// lexicographic within a length (φ < ψ).
pub fn enumerate_frplus(max_len: usize) -> Vec<Endo> {
    let mut out = vec![Endo::identity()];
    let mut layer = vec![Endo::identity()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(layer.len() * 2);
        // Prefixing keeps lexicographic order when the previous layer is
        // sorted, so iterate the new leading symbol in the outer loop.
        for s in [Sym::Phi, Sym::Psi] {
            let head = Endo::named(s);
            for e in &layer {
                next.push(head.compose(e));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum AutClass {
    Identity,
    APhi,
    APsi,
    APhi0,
    APsi0,
    A1,
}

/// Fine class (Identity, Aφ⁰, Aψ⁰ or A¹) together with the class of the
/// leftmost symbol (Identity, Aφ or Aψ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Classification {
    pub fine: AutClass,
    pub leftmost: AutClass,
}

pub fn classify(f: &Endo) -> Result<Classification, AutError> {
    if !f.is_positive_provenance() {
        return Err(AutError::NotPositive(f.provenance_string()));
    }
    let p = f.provenance();
    let Some(&first) = p.first() else {
        return Ok(Classification { fine: AutClass::Identity, leftmost: AutClass::Identity });
    };
    let leftmost = if first == Sym::Phi { AutClass::APhi } else { AutClass::APsi };
    let fine = if p.iter().all(|&s| s == Sym::Phi) {
        AutClass::APhi0
    } else if p.iter().all(|&s| s == Sym::Psi) {
        AutClass::APsi0
    } else {
        AutClass::A1
    };
    Ok(Classification { fine, leftmost })
}

/// Whether `right` is a right factor of `whole`, i.e. `whole = η·right`.
pub fn is_right_factor(right: &Endo, whole: &Endo) -> bool {
    whole.provenance().ends_with(right.provenance())
}

/// Which free parameter a transversal template carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Head {
    /// `ρ·suffix` with ρ ∈ Fr₊ (identity allowed)
    Rho,
    /// `ξσ·suffix` with σ ∈ Fr₊ ∖ {1}
    XiSigma,
}

/// Suffixes of the sixteen templates, in the order they are listed.
pub const TEMPLATES: [(Head, &[Sym]); 16] = [
    (Head::Rho, &[]),
    (Head::Rho, &[Sym::Tau]),
    (Head::XiSigma, &[]),
    (Head::XiSigma, &[Sym::Tau]),
    (Head::Rho, &[Sym::Xi]),
    (Head::Rho, &[Sym::Tau, Sym::Xi]),
    (Head::XiSigma, &[Sym::Xi]),
    (Head::XiSigma, &[Sym::Tau, Sym::Xi]),
    (Head::Rho, &[Sym::Chi]),
    (Head::Rho, &[Sym::Tau, Sym::Chi]),
    (Head::XiSigma, &[Sym::Chi]),
    (Head::XiSigma, &[Sym::Tau, Sym::Chi]),
    (Head::Rho, &[Sym::Xi, Sym::Chi]),
    (Head::Rho, &[Sym::Tau, Sym::Xi, Sym::Chi]),
    (Head::XiSigma, &[Sym::Xi, Sym::Chi]),
    (Head::XiSigma, &[Sym::Tau, Sym::Xi, Sym::Chi]),
];

/// Index `i` of the family word `w_i` that a template suffix sends `w` to.
pub fn suffix_family_index(suffix: &[Sym]) -> usize {
    use Sym::*;
    match suffix {
        [] => 0,
        [Xi, Chi] => 1,
        [Xi] => 2,
        [Chi] => 3,
        [Tau] => 4,
        [Tau, Xi, Chi] => 5,
        [Tau, Xi] => 6,
        [Tau, Chi] => 7,
        _ => unreachable!("not a template suffix"),
    }
}

/// One element of the truncated transversal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransversalElement {
    pub template: usize,
    pub head: Head,
    /// ρ or σ, depending on `head`.
    pub core: Endo,
    pub family_index: usize,
    pub endo: Endo,
}

impl TransversalElement {
    /// The identity-coset representative (ρ = 1 in the plain template).
    pub fn is_identity_rep(&self) -> bool {
        self.template == 0 && self.core.provenance().is_empty()
    }
}

/// The sixteen templates instantiated over `Fr₊` truncated at `max_len`.
pub fn transversal_r(max_len: usize) -> Vec<TransversalElement> {
    let fr = enumerate_frplus(max_len);
    let xi = Endo::named(Sym::Xi);
    let mut out = Vec::new();
    for (t, &(head, suffix)) in TEMPLATES.iter().enumerate() {
        let tail = Endo::from_symbols(suffix);
        let family_index = suffix_family_index(suffix);
        for core in &fr {
            let endo = match head {
                Head::Rho => core.compose(&tail),
                Head::XiSigma => {
                    if core.provenance().is_empty() {
                        continue;
                    }
                    xi.compose(core).compose(&tail)
                }
            };
            out.push(TransversalElement {
                template: t,
                head,
                core: core.clone(),
                family_index,
                endo,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn e(s: &str) -> Endo {
        s.parse().unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(e("phi").apply(&w("a")).unwrap().to_string(), "a b");
        assert_eq!(
            e("xi chi").apply(&w("a b a^2 b^2")).unwrap().to_string(),
            "a^-1 b^-1 a^-2 b^-2"
        );
        assert_eq!(e("tau").apply(&w("a b")).unwrap().to_string(), "b a");
    }

    #[test]
    fn compose_examples() {
        let f = e("phi").compose(&e("psi"));
        assert_eq!(f.apply(&w("b")).unwrap().to_string(), "b a b");
        assert_eq!(e("phi").compose(&e("phi")).apply(&w("a")).unwrap().to_string(), "a b^2");
        let g = e("xi tau");
        let h = g.compose(&Endo::identity());
        assert_eq!((h.image_a(), h.image_b()), (g.image_a(), g.image_b()));
        assert_eq!(f.provenance_string(), "phi psi");
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(enumerate_frplus(0).len(), 1);
        let l1: Vec<String> = enumerate_frplus(1).iter().map(|f| f.to_string()).collect();
        assert_eq!(l1, ["1", "phi", "psi"]);
        let l2: Vec<String> = enumerate_frplus(2).iter().map(|f| f.to_string()).collect();
        assert_eq!(l2, ["1", "phi", "psi", "phi phi", "phi psi", "psi phi", "psi psi"]);
        let fr = enumerate_frplus(2);
        for (i, f) in fr.iter().enumerate() {
            for g in &fr[i + 1..] {
                assert!((f.image_a(), f.image_b()) != (g.image_a(), g.image_b()));
            }
        }
    }

    #[test]
    fn transversal_counts() {
        assert_eq!(transversal_r(0).len(), 8);
        assert_eq!(transversal_r(1).len(), 40);
        assert_eq!(transversal_r(3).len(), 232);
        assert!(transversal_r(2).iter().all(|t| t.endo.reduces_to_basis()));
        assert!(transversal_r(1)[0].is_identity_rep());
    }

    #[test]
    fn non_basis_pair_detected() {
        let f = Endo::from_images(w("a^2"), w("b")).unwrap();
        assert!(!f.reduces_to_basis());
        let g = Endo::from_images(w("a b"), w("b a")).unwrap();
        assert!(!g.reduces_to_basis());
    }

    #[test]
    fn classification() {
        let c = classify(&e("phi^3")).unwrap();
        assert_eq!(c.fine, AutClass::APhi0);
        let c = classify(&e("phi psi^3")).unwrap();
        assert_eq!((c.fine, c.leftmost), (AutClass::A1, AutClass::APhi));
        let c = classify(&e("psi phi^2")).unwrap();
        assert_eq!((c.fine, c.leftmost), (AutClass::A1, AutClass::APsi));
        assert_eq!(classify(&Endo::identity()).unwrap().fine, AutClass::Identity);
        assert!(classify(&e("xi phi")).is_err());
    }

    #[test]
    fn growth_examples() {
        assert_eq!(e("phi").growth(), 3);
        assert_eq!(e("phi^2").growth(), 4);
        assert_eq!(Endo::identity().growth(), 2);
    }

    #[test]
    fn suffix_indices_match_images() {
        let w0 = w("a b a^2 b^2 a^3 b^3");
        let direct = [
            "a b a^2 b^2 a^3 b^3",
            "a^-1 b^-1 a^-2 b^-2 a^-3 b^-3",
            "a^-1 b a^-2 b^2 a^-3 b^3",
            "a b^-1 a^2 b^-2 a^3 b^-3",
            "b a b^2 a^2 b^3 a^3",
            "b^-1 a^-1 b^-2 a^-2 b^-3 a^-3",
            "b^-1 a b^-2 a^2 b^-3 a^3",
            "b a^-1 b^2 a^-2 b^3 a^-3",
        ];
        for &(_, suffix) in &TEMPLATES {
            let img = Endo::from_symbols(suffix).apply(&w0).unwrap();
            assert_eq!(img.to_string(), direct[suffix_family_index(suffix)]);
        }
    }
}
