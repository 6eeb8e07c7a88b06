//! Ambient group instances: elements, transversals, coset actions, cocycles
//! and subgroup descriptors with decidable membership.

mod amalgam;
mod autf2;
mod bs;
mod freeprod;
mod intchain;
mod wreath;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::Serialize;
use thiserror::Error;

use crate::smallcanc::SymmetrizedSet;

pub use amalgam::{AmalgamDesk, AmalgamLetter, AmalgamWord};
pub use autf2::{AutF2Closure, AutF2Witness};
pub use bs::{BaseWord, BsClosure, BsInstance, BsWitness};
pub use freeprod::{basis_word_string, BasisLetter, Commutator, CyclicFactor, FreeElem, FreeProduct, Side, Syllable};
pub use intchain::{IntElem, IntegerChain, IntegerCosets};
pub use wreath::{WreathCosets, WreathElem, WreathInstance};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("no transversal element among the first {searched} locates the coset of {element}")]
    TransversalExhausted { searched: usize, element: String },
    #[error("{0} is not in the subgroup")]
    NotInSubgroup(String),
    #[error("{instance} cannot decide membership in {descriptor}")]
    UnsupportedDescriptor { instance: String, descriptor: String },
    #[error("refused: {0}")]
    Refused(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("cannot parse {0:?}")]
    Parse(String),
    #[error("bad instance: {0}")]
    BadInstance(String),
    #[error("transversal index {0} out of range")]
    IndexOutOfRange(usize),
}

/// Order in which an enumeration of `Z` lists its elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum ZOrder {
    /// 0, 1, −1, 2, −2, …
    #[default]
    PositiveFirst,
    /// 0, −1, 1, −2, 2, …
    NegativeFirst,
}

impl ZOrder {
    pub fn decode(self, i: usize) -> i64 {
        let m = i.div_ceil(2) as i64;
        let pos = i % 2 == 1;
        match (self, pos) {
            (_, _) if i == 0 => 0,
            (ZOrder::PositiveFirst, true) | (ZOrder::NegativeFirst, false) => m,
            _ => -m,
        }
    }

    pub fn index(self, m: i64) -> usize {
        if m == 0 {
            return 0;
        }
        let a = m.unsigned_abs() as usize;
        let first = match self {
            ZOrder::PositiveFirst => m > 0,
            ZOrder::NegativeFirst => m < 0,
        };
        if first {
            2 * a - 1
        } else {
            2 * a
        }
    }
}

/// A group with a subgroup and an indexed left transversal. Used both for
/// top-level instances (Δ over Γ) and for inner levels of a nested chain.
pub trait CosetSpace {
    type Elem: Clone + PartialEq + fmt::Debug + fmt::Display;

    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
    /// Membership in the ambient group of this level.
    fn in_ambient(&self, x: &Self::Elem) -> bool;
    fn in_subgroup(&self, x: &Self::Elem) -> bool;
    /// `None` past the end of a finite transversal.
    fn rep(&self, i: usize) -> Option<Self::Elem>;
    /// How many representatives a search for the coset of `x` should try.
    fn search_bound(&self, x: &Self::Elem) -> usize;

    /// Index of the representative of `xΓ`.
    fn locate(&self, x: &Self::Elem) -> Result<usize, GroupError> {
        search_locate(self, x)
    }

    fn sample_ambient(&self, rng: &mut dyn RngCore) -> Self::Elem;
    fn sample_index(&self, rng: &mut dyn RngCore) -> usize;
}

/// Locates a coset by trying representatives in order.
pub fn search_locate<C: CosetSpace + ?Sized>(c: &C, x: &C::Elem) -> Result<usize, GroupError> {
    let bound = c.search_bound(x);
    for i in 0..bound {
        let Some(t) = c.rep(i) else { break };
        if c.in_subgroup(&c.mul(&c.inv(&t), x)) {
            return Ok(i);
        }
    }
    Err(GroupError::TransversalExhausted { searched: bound, element: x.to_string() })
}

pub fn conjugate<C: CosetSpace + ?Sized>(c: &C, t: &C::Elem, x: &C::Elem) -> C::Elem {
    c.mul(&c.mul(&c.inv(t), x), t)
}

/// `σ_T(δ, t_i)` as an index together with `ρ_T(δ, t_i) = σ⁻¹ δ t_i`.
pub fn coset_action<C: CosetSpace + ?Sized>(
    c: &C,
    delta: &C::Elem,
    i: usize,
) -> Result<(usize, C::Elem), GroupError> {
    let t = c.rep(i).ok_or(GroupError::IndexOutOfRange(i))?;
    let dt = c.mul(delta, &t);
    let j = c.locate(&dt)?;
    let s = c.rep(j).ok_or(GroupError::IndexOutOfRange(j))?;
    let gamma = c.mul(&c.inv(&s), &dt);
    if !c.in_subgroup(&gamma) {
        return Err(GroupError::NotInSubgroup(gamma.to_string()));
    }
    Ok((j, gamma))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CocycleFailure {
    pub sample: usize,
    pub identity: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CocycleReport {
    pub samples: usize,
    pub failures: Vec<CocycleFailure>,
}

impl CocycleReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `ρ(δ₁δ₂, t) = ρ(δ₁, σ(δ₂, t))·ρ(δ₂, t)` together with
/// `σ(δ,t)Γ = δtΓ` on random samples.
pub fn cocycle_law_check<C: CosetSpace + ?Sized>(
    c: &C,
    samples: usize,
    rng: &mut dyn RngCore,
) -> CocycleReport {
    let mut failures = Vec::new();
    for k in 0..samples {
        let d1 = c.sample_ambient(rng);
        let d2 = c.sample_ambient(rng);
        let i = c.sample_index(rng);
        let res = (|| -> Result<Option<String>, GroupError> {
            let (j2, r2) = coset_action(c, &d2, i)?;
            let (_, r1) = coset_action(c, &d1, j2)?;
            let (j12, r12) = coset_action(c, &c.mul(&d1, &d2), i)?;
            let t = c.rep(i).ok_or(GroupError::IndexOutOfRange(i))?;
            let s = c.rep(j12).ok_or(GroupError::IndexOutOfRange(j12))?;
            let moved = c.mul(&c.inv(&s), &c.mul(&c.mul(&d1, &d2), &t));
            if !c.in_subgroup(&moved) {
                return Ok(Some(format!("σ({d1}·{d2}, t{i}) is not in the coset")));
            }
            let rhs = c.mul(&r1, &r2);
            Ok((r12 != rhs).then(|| format!("δ1={d1} δ2={d2} t{i}: {r12} ≠ {rhs}")))
        })();
        match res {
            Ok(None) => {}
            Ok(Some(detail)) => failures.push(CocycleFailure { sample: k, identity: "cocycle", detail }),
            Err(e) => failures.push(CocycleFailure { sample: k, identity: "cocycle", detail: e.to_string() }),
        }
    }
    CocycleReport { samples, failures }
}

/// Checks the chain rule for `Λ ≤ Γ ≤ Δ` with transversals `T` of `Δ/Γ`
/// (`outer`) and `S` of `Γ/Λ` (`inner`). The left-hand sides are found by
/// searching the product transversal `TS` for the coset of `δts` using only
/// membership in `Λ`.
pub fn cocycle_chain_check<C, D>(
    outer: &C,
    inner: &D,
    samples: usize,
    rng: &mut dyn RngCore,
) -> CocycleReport
where
    C: CosetSpace + ?Sized,
    D: CosetSpace<Elem = C::Elem> + ?Sized,
{
    let mut failures = Vec::new();
    for k in 0..samples {
        let delta = outer.sample_ambient(rng);
        let i = outer.sample_index(rng);
        let j = inner.sample_index(rng);
        let res = (|| -> Result<Option<String>, GroupError> {
            let t = outer.rep(i).ok_or(GroupError::IndexOutOfRange(i))?;
            let s = inner.rep(j).ok_or(GroupError::IndexOutOfRange(j))?;
            let x = outer.mul(&outer.mul(&delta, &t), &s);
            let (ts, rho_ts) = search_product(outer, inner, &x)?;

            let (ti, rho_t) = coset_action(outer, &delta, i)?;
            let (si, rho_s) = coset_action(inner, &rho_t, j)?;
            let sigma_t = outer.rep(ti).ok_or(GroupError::IndexOutOfRange(ti))?;
            let sigma_s = inner.rep(si).ok_or(GroupError::IndexOutOfRange(si))?;
            let composed = outer.mul(&sigma_t, &sigma_s);
            if ts != composed {
                return Ok(Some(format!("σ_TS(δ={delta}, t{i}s{j}) = {ts} ≠ {composed}")));
            }
            Ok((rho_ts != rho_s).then(|| format!("ρ_TS(δ={delta}, t{i}s{j}) = {rho_ts} ≠ {rho_s}")))
        })();
        match res {
            Ok(None) => {}
            Ok(Some(detail)) => failures.push(CocycleFailure { sample: k, identity: "chain", detail }),
            Err(e) => failures.push(CocycleFailure { sample: k, identity: "chain", detail: e.to_string() }),
        }
    }
    CocycleReport { samples, failures }
}

fn search_product<C, D>(outer: &C, inner: &D, x: &C::Elem) -> Result<(C::Elem, C::Elem), GroupError>
where
    C: CosetSpace + ?Sized,
    D: CosetSpace<Elem = C::Elem> + ?Sized,
{
    let bound_t = outer.search_bound(x);
    for a in 0..bound_t {
        let Some(t) = outer.rep(a) else { break };
        let y = outer.mul(&outer.inv(&t), x);
        for b in 0..inner.search_bound(&y) {
            let Some(s) = inner.rep(b) else { break };
            let ts = outer.mul(&t, &s);
            let rho = outer.mul(&outer.inv(&ts), x);
            if inner.in_subgroup(&rho) {
                return Ok((ts, rho));
            }
        }
    }
    Err(GroupError::TransversalExhausted { searched: bound_t, element: x.to_string() })
}

/// Closure of a coordinate subgroup: in `Z/h`, the subgroup generated by
/// `step` (a divisor of `h`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SupportClosure {
    /// Positions outside the support set `P`; `P` is cofinite.
    pub excluded: BTreeSet<i64>,
    /// Values must be multiples of this divisor of `h`.
    pub coord_step: u64,
}

/// Homomorphism witnesses whose kernels are subgroups of `Γ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum HomWitness {
    /// `F → Z/modulus`, sending `x_center` to 1 and every other `x_p` to 0.
    ModGcd { modulus: u64, center: i64 },
    /// Exponent sums of the listed letters of the commutator basis.
    LetterExponents(Vec<Commutator>),
    /// Exponent sums of the listed letters in every `Δ`-conjugate; the
    /// kernel is the normal core of [`HomWitness::LetterExponents`].
    ConjugateLetterExponents(Vec<Commutator>),
}

/// Normal closure of a finite truncation of a word family in `F₂`.
#[derive(Debug, Clone)]
pub struct WordSetClosure {
    pub label: String,
    pub set: Arc<SymmetrizedSet>,
}

impl PartialEq for WordSetClosure {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && Arc::ptr_eq(&self.set, &other.set)
    }
}

impl Eq for WordSetClosure {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubgroupDescriptor {
    Trivial,
    Whole,
    /// `dZ` inside an integer group; `d = 0` is the trivial subgroup.
    IndexInZ(u64),
    SupportClosure(SupportClosure),
    HomKernel(HomWitness),
    NormalClosureOfWordSet(WordSetClosure),
}

impl fmt::Display for SubgroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SubgroupDescriptor::Trivial => write!(f, "trivial"),
            SubgroupDescriptor::Whole => write!(f, "whole"),
            SubgroupDescriptor::IndexInZ(d) => write!(f, "{d}Z"),
            SubgroupDescriptor::SupportClosure(sc) => {
                let ex: Vec<String> = sc.excluded.iter().map(i64::to_string).collect();
                write!(f, "support(excluding {{{}}}; values in {}Z/h)", ex.join(","), sc.coord_step)
            }
            SubgroupDescriptor::HomKernel(HomWitness::ModGcd { modulus, center }) => {
                write!(f, "ker(F -> Z/{modulus}, x{center} -> 1)")
            }
            SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(ls)) => {
                let ls: Vec<String> = ls.iter().map(Commutator::to_string).collect();
                write!(f, "ker(exponents of {})", ls.join(" "))
            }
            SubgroupDescriptor::HomKernel(HomWitness::ConjugateLetterExponents(ls)) => {
                let ls: Vec<String> = ls.iter().map(Commutator::to_string).collect();
                write!(f, "core(ker(exponents of {}))", ls.join(" "))
            }
            SubgroupDescriptor::NormalClosureOfWordSet(c) => write!(f, "<<{}>>", c.label),
        }
    }
}

impl Serialize for SubgroupDescriptor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// How deep an element sits in a descending chain `Γ̄₀ ⊇ Γ̄₁ ⊇ …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ChainDepth {
    /// Not in `Γ̄₀`.
    Outside,
    /// In `Γ̄_k` exactly for `k ≤ m`.
    UpTo(usize),
    /// In every member.
    All,
}

/// A top-level instance `Γ ≤ Δ` with a transversal of `Δ/Γ`.
pub trait Instance: CosetSpace + Sync {
    fn name(&self) -> String;
    fn in_core(&self, x: &Self::Elem) -> bool;
    fn index_is_infinite(&self) -> bool;
    fn contains(&self, d: &SubgroupDescriptor, x: &Self::Elem) -> Result<bool, GroupError>;
    /// Whether `d` is normal in `Δ`.
    fn is_normal_in_delta(&self, d: &SubgroupDescriptor) -> Result<bool, GroupError>;
    fn sample_gamma(&self, rng: &mut dyn RngCore) -> Self::Elem;
    fn parse_elem(&self, s: &str) -> Result<Self::Elem, GroupError>;
    /// The element `γ₀` the chain constructions start from.
    fn default_gamma0(&self) -> Self::Elem;

    fn chain_subgroup(&self, _gamma0: &Self::Elem, _k: usize) -> Result<SubgroupDescriptor, GroupError> {
        Err(GroupError::Refused(format!("{} ships no closed-form chain descriptor", self.name())))
    }

    fn chain_depth(&self, _gamma0: &Self::Elem, _x: &Self::Elem) -> Result<ChainDepth, GroupError> {
        Err(GroupError::Refused(format!("{} ships no closed-form chain descriptor", self.name())))
    }

    /// Verifies `t_j⁻¹γ₀t_j ∉ Γ̄_k` for `j < k`.
    fn chain_witness_verify(
        &self,
        gamma0: &Self::Elem,
        k: usize,
        j: usize,
    ) -> Result<ChainVerdict, GroupError> {
        if j >= k {
            return Err(GroupError::Refused(format!("need j < k, got j={j}, k={k}")));
        }
        let d = self.chain_subgroup(gamma0, k)?;
        let t = self.rep(j).ok_or(GroupError::IndexOutOfRange(j))?;
        let x = conjugate(self, &t, gamma0);
        Ok(ChainVerdict { k, j, conjugate: x.to_string(), descriptor: d.to_string(), verified: !self.contains(&d, &x)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainVerdict {
    pub k: usize,
    pub j: usize,
    pub conjugate: String,
    pub descriptor: String,
    pub verified: bool,
}

pub(crate) fn unsupported<I: Instance + ?Sized>(inst: &I, d: &SubgroupDescriptor) -> GroupError {
    GroupError::UnsupportedDescriptor { instance: inst.name(), descriptor: d.to_string() }
}

pub(crate) fn gcd_u64(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_orders_are_bijections() {
        for order in [ZOrder::PositiveFirst, ZOrder::NegativeFirst] {
            for i in 0..200 {
                assert_eq!(order.index(order.decode(i)), i);
            }
        }
        let first: Vec<i64> = (0..5).map(|i| ZOrder::PositiveFirst.decode(i)).collect();
        assert_eq!(first, vec![0, 1, -1, 2, -2]);
        let first: Vec<i64> = (0..5).map(|i| ZOrder::NegativeFirst.decode(i)).collect();
        assert_eq!(first, vec![0, -1, 1, -2, 2]);
    }
}
