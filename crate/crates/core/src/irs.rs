//! Atomic invariant random subgroups with exact weights, the co-induction
//! product formula, and the atomicity criteria.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::groups::{
    conjugate, ChainDepth, Commutator, CosetSpace, FreeProduct, GroupError, HomWitness,
    Instance, IntegerChain, SubgroupDescriptor, SupportClosure, WreathElem, WreathInstance,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrsError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("weights sum to {0}, not 1")]
    WeightSum(String),
    #[error("atom weights must be positive")]
    NonPositiveWeight,
    #[error("{0} is not in Γ")]
    NotInGamma(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("the index [Δ:Γ] is finite")]
    FiniteIndex,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("cannot parse IRS {0:?}")]
    Parse(String),
}

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// `2^{-k}`
pub fn pow2_inv(k: usize) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

pub fn parse_rational(s: &str) -> Result<BigRational, IrsError> {
    let bad = || IrsError::Parse(s.to_string());
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q): (BigInt, BigInt) = (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?);
            if q.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(p, q))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Atom {
    #[serde(serialize_with = "crate::report::ser_big")]
    pub weight: BigRational,
    pub subgroup: SubgroupDescriptor,
}

/// The geometric tail `Σ_{k ≥ start} 2^{-k-1} δ_{Γ̄_k}` of the chain
/// `Γ̄_k = ⟨⟨t_i⁻¹γ₀t_i | i ≥ k⟩⟩_Γ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTail<E> {
    pub start: usize,
    pub gamma0: E,
}

/// `Σ w_i δ_{Λ_i}` with normal `Λ_i ⊴ Γ`, optionally followed by a chain tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicIrs<E> {
    atoms: Vec<Atom>,
    tail: Option<ChainTail<E>>,
}

impl<E: Clone + fmt::Display> AtomicIrs<E> {
    pub fn new(atoms: Vec<Atom>, tail: Option<ChainTail<E>>) -> Result<Self, IrsError> {
        if atoms.iter().any(|a| !a.weight.is_positive()) {
            return Err(IrsError::NonPositiveWeight);
        }
        let mut total: BigRational = atoms.iter().map(|a| a.weight.clone()).sum();
        if let Some(t) = &tail {
            total += pow2_inv(t.start);
        }
        if !total.is_one() {
            return Err(IrsError::WeightSum(total.to_string()));
        }
        Ok(AtomicIrs { atoms, tail })
    }

    pub fn dirac(d: SubgroupDescriptor) -> Self {
        AtomicIrs { atoms: vec![Atom { weight: BigRational::one(), subgroup: d }], tail: None }
    }

    /// `2^{-n}δ_{e} + (1 − 2^{-n})δ_Γ`
    pub fn theta_n(n: usize) -> Self {
        let w = pow2_inv(n);
        let rest = BigRational::one() - &w;
        let mut atoms = vec![Atom { weight: w, subgroup: SubgroupDescriptor::Trivial }];
        if rest.is_positive() {
            atoms.push(Atom { weight: rest, subgroup: SubgroupDescriptor::Whole });
        }
        AtomicIrs { atoms, tail: None }
    }

    /// `Σ_{k ≥ 0} 2^{-k-1} δ_{Γ̄_k}`
    pub fn chain(gamma0: E) -> Self {
        AtomicIrs { atoms: Vec::new(), tail: Some(ChainTail { start: 0, gamma0 }) }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn tail(&self) -> Option<&ChainTail<E>> {
        self.tail.as_ref()
    }

    /// The single normal subgroup of a Dirac measure.
    pub fn as_dirac(&self) -> Option<&SubgroupDescriptor> {
        match (self.atoms.as_slice(), &self.tail) {
            ([a], None) => Some(&a.subgroup),
            _ => None,
        }
    }
}

impl<E: fmt::Display> fmt::Display for AtomicIrs<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.atoms.iter().map(|a| format!("{}*delta[{}]", a.weight, a.subgroup)).collect();
        if let Some(t) = &self.tail {
            parts.push(format!("sum_{{k>={}}} 2^(-k-1)*delta[chain_k({})]", t.start, t.gamma0));
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl<E: fmt::Display> Serialize for AtomicIrs<E> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Mass of the chain tail on `N_F` given the depth of `F` in the chain.
fn tail_mass(start: usize, depth: ChainDepth) -> BigRational {
    match depth {
        ChainDepth::Outside => BigRational::zero(),
        ChainDepth::All => pow2_inv(start),
        ChainDepth::UpTo(m) if m >= start => pow2_inv(start) - pow2_inv(m + 1),
        ChainDepth::UpTo(_) => BigRational::zero(),
    }
}

fn min_depth<I: Instance + ?Sized>(inst: &I, gamma0: &I::Elem, f: &[I::Elem]) -> Result<ChainDepth, IrsError> {
    let mut depth = ChainDepth::All;
    for x in f {
        depth = depth.min(inst.chain_depth(gamma0, x)?);
    }
    Ok(depth)
}

/// `θ(N_F) = Σ` of the weights of atoms containing every element of `F`.
pub fn eval_basic<I: Instance + ?Sized>(
    inst: &I,
    theta: &AtomicIrs<I::Elem>,
    f: &[I::Elem],
) -> Result<BigRational, IrsError> {
    if let Some(x) = f.iter().find(|x| !inst.in_subgroup(x)) {
        return Err(IrsError::NotInGamma(x.to_string()));
    }
    eval_unchecked(inst, theta, f)
}

fn eval_unchecked<I: Instance + ?Sized>(
    inst: &I,
    theta: &AtomicIrs<I::Elem>,
    f: &[I::Elem],
) -> Result<BigRational, IrsError> {
    let mut total = BigRational::zero();
    for a in &theta.atoms {
        let mut all = true;
        for x in f {
            if !inst.contains(&a.subgroup, x)? {
                all = false;
                break;
            }
        }
        if all {
            total += &a.weight;
        }
    }
    if let Some(t) = &theta.tail {
        total += tail_mass(t.start, min_depth(inst, &t.gamma0, f)?);
    }
    Ok(total)
}

/// `γ ∈ ker θ`, i.e. `θ(N_γ) = 1`.
pub fn kernel_contains<I: Instance + ?Sized>(
    inst: &I,
    theta: &AtomicIrs<I::Elem>,
    gamma: &I::Elem,
) -> Result<bool, IrsError> {
    Ok(eval_basic(inst, theta, std::slice::from_ref(gamma))?.is_one())
}

/// Behaviour of the factors past the exceptional indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Tail {
    AllOne,
    /// Every remaining factor is at most `c < 1`, infinitely many of them.
    ConstantBelowOne(#[serde(serialize_with = "crate::report::ser_big")] BigRational),
    /// Every remaining factor is positive and their deficits sum to at most
    /// the bound.
    SummableDeficit(#[serde(serialize_with = "crate::report::ser_big")] BigRational),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FactorTail {
    #[serde(serialize_with = "ser_factor_map")]
    pub exceptional: BTreeMap<usize, BigRational>,
    pub tail: Tail,
}

fn ser_factor_map<S: Serializer>(m: &BTreeMap<usize, BigRational>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        map.serialize_entry(&k.to_string(), &v.to_string())?;
    }
    map.end()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CertifiedValue {
    Exact(BigRational),
    Interval { lo: BigRational, hi: BigRational },
    ExactZero,
}

impl CertifiedValue {
    pub fn lo(&self) -> BigRational {
        match self {
            CertifiedValue::Exact(v) => v.clone(),
            CertifiedValue::Interval { lo, .. } => lo.clone(),
            CertifiedValue::ExactZero => BigRational::zero(),
        }
    }

    pub fn hi(&self) -> BigRational {
        match self {
            CertifiedValue::Exact(v) => v.clone(),
            CertifiedValue::Interval { hi, .. } => hi.clone(),
            CertifiedValue::ExactZero => BigRational::zero(),
        }
    }

    pub fn exact(&self) -> Option<BigRational> {
        match self {
            CertifiedValue::Exact(v) => Some(v.clone()),
            CertifiedValue::ExactZero => Some(BigRational::zero()),
            CertifiedValue::Interval { .. } => None,
        }
    }

    /// The two values certainly differ.
    pub fn certainly_differs(&self, other: &CertifiedValue) -> bool {
        self.hi() < other.lo() || other.hi() < self.lo()
    }
}

impl fmt::Display for CertifiedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertifiedValue::Exact(v) => write!(f, "{v}"),
            CertifiedValue::Interval { lo, hi } => write!(f, "[{lo}, {hi}]"),
            CertifiedValue::ExactZero => write!(f, "0"),
        }
    }
}

impl Serialize for CertifiedValue {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

pub fn product_over_tail(ft: &FactorTail) -> CertifiedValue {
    if ft.exceptional.values().any(Zero::is_zero) {
        return CertifiedValue::ExactZero;
    }
    let p: BigRational = ft.exceptional.values().cloned().product();
    match &ft.tail {
        Tail::ConstantBelowOne(_) => CertifiedValue::ExactZero,
        Tail::AllOne => CertifiedValue::Exact(p),
        Tail::SummableDeficit(b) => {
            let one = BigRational::one();
            let factor = if *b >= one { BigRational::zero() } else { one - b };
            CertifiedValue::Interval { lo: round_to_dyadic(&(&p * factor), false), hi: round_to_dyadic(&p, true) }
        }
    }
}

/// Bits kept when an interval endpoint is rounded outward.
const INTERVAL_BITS: usize = 64;

/// Nearest multiple of `2^-64` below (or above, with `up`) `x`.
fn round_to_dyadic(x: &BigRational, up: bool) -> BigRational {
    let den = BigInt::one() << INTERVAL_BITS;
    let scaled = x * BigRational::from_integer(den.clone());
    let k = if up { scaled.ceil() } else { scaled.floor() };
    k / BigRational::from_integer(den)
}

/// Instances that classify the factor sequence `t ↦ θ(N_{t⁻¹Ft})`.
pub trait Coinduce: Instance {
    fn factor_tail(&self, theta: &AtomicIrs<Self::Elem>, f: &[Self::Elem]) -> Result<FactorTail, IrsError>;

    /// `core_Δ(ker θ)` in closed form, if the instance knows it.
    fn kernel_core(&self, theta: &AtomicIrs<Self::Elem>) -> Option<SubgroupDescriptor>;

    /// `Γ ≅ Z` with infinite index, where every co-induced IRS is Dirac.
    fn gamma_is_infinite_cyclic(&self) -> bool {
        false
    }
}

pub fn coinduce_value<I: Coinduce + ?Sized>(
    inst: &I,
    theta: &AtomicIrs<I::Elem>,
    f: &[I::Elem],
) -> Result<CertifiedValue, IrsError> {
    if f.iter().any(|x| !inst.in_core(x)) {
        return Ok(CertifiedValue::ExactZero);
    }
    Ok(product_over_tail(&inst.factor_tail(theta, f)?))
}

fn conjugate_all<I: Instance + ?Sized>(inst: &I, t: &I::Elem, f: &[I::Elem]) -> Vec<I::Elem> {
    f.iter().map(|x| conjugate(inst, t, x)).collect()
}

impl Coinduce for WreathInstance {
    fn factor_tail(&self, theta: &AtomicIrs<WreathElem>, f: &[WreathElem]) -> Result<FactorTail, IrsError> {
        if let Some(x) = f.iter().find(|x| !self.in_subgroup(x)) {
            return Err(IrsError::NotInGamma(x.to_string()));
        }
        if f.iter().all(|x| x.f.is_empty()) {
            return Ok(FactorTail { exceptional: BTreeMap::new(), tail: Tail::AllOne });
        }
        let reach = f.iter().flat_map(|x| x.support()).map(i64::unsigned_abs).max().unwrap_or(0) as usize;
        let mut excluded_reach = 0usize;
        let mut c_inf = BigRational::zero();
        for a in &theta.atoms {
            let eventually = match &a.subgroup {
                SubgroupDescriptor::Trivial => false,
                SubgroupDescriptor::Whole => true,
                SubgroupDescriptor::SupportClosure(sc) => {
                    excluded_reach = excluded_reach
                        .max(sc.excluded.iter().map(|p| p.unsigned_abs()).max().unwrap_or(0) as usize);
                    f.iter().all(|x| x.f.values().all(|v| v % sc.coord_step == 0))
                }
                d => return Err(GroupError::UnsupportedDescriptor { instance: self.name(), descriptor: d.to_string() }.into()),
            };
            if eventually {
                c_inf += &a.weight;
            }
        }
        let mut start = 0;
        if let Some(t) = &theta.tail {
            start = t.start;
            if min_depth(self, &t.gamma0, f)? != ChainDepth::Outside {
                c_inf += pow2_inv(t.start);
            }
        }
        // Past index m every shifted support clears the excluded positions
        // and sits at chain depth at least `start`: |g_i| ≥ m/2.
        let m = 2 * (reach + excluded_reach + start + 34);
        let mut exceptional = BTreeMap::new();
        for i in 0..m {
            let t = self.rep(i).expect("infinite transversal");
            exceptional.insert(i, eval_unchecked(self, theta, &conjugate_all(self, &t, f))?);
        }
        let tail = if !c_inf.is_one() {
            Tail::ConstantBelowOne(c_inf)
        } else if theta.tail.is_none() {
            Tail::AllOne
        } else {
            // Deficits are 2^{-d_i-1} with d_i = min_q index(g_i − q); for
            // each q these indices are distinct and at least m − 2|q| − 1.
            let mut b = BigRational::zero();
            for q in f.iter().flat_map(|x| x.support()) {
                b += pow2_inv(m - 2 * q.unsigned_abs() as usize - 1);
            }
            Tail::SummableDeficit(b)
        };
        Ok(FactorTail { exceptional, tail })
    }

    fn kernel_core(&self, theta: &AtomicIrs<WreathElem>) -> Option<SubgroupDescriptor> {
        if theta.tail.is_some() {
            return Some(SubgroupDescriptor::Trivial);
        }
        let mut step = 1u64;
        for a in &theta.atoms {
            match &a.subgroup {
                SubgroupDescriptor::Whole => {}
                SubgroupDescriptor::Trivial => return Some(SubgroupDescriptor::Trivial),
                // Translates of a non-empty excluded set cover Z.
                SubgroupDescriptor::SupportClosure(sc) if !sc.excluded.is_empty() => {
                    return Some(SubgroupDescriptor::Trivial)
                }
                SubgroupDescriptor::SupportClosure(sc) => step = step.lcm(&sc.coord_step),
                _ => return None,
            }
        }
        Some(if step == 1 {
            SubgroupDescriptor::Whole
        } else if step == self.h() {
            SubgroupDescriptor::Trivial
        } else {
            SubgroupDescriptor::SupportClosure(SupportClosure { excluded: BTreeSet::new(), coord_step: step })
        })
    }
}

/// Letters of every exponent-sum kernel among the atoms.
fn hom_letters(theta: &AtomicIrs<crate::groups::FreeElem>) -> Vec<Commutator> {
    let mut out = BTreeSet::new();
    for a in &theta.atoms {
        if let SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(ls)) = &a.subgroup {
            out.extend(ls.iter().copied());
        }
    }
    out.into_iter().collect()
}

impl Coinduce for FreeProduct {
    fn factor_tail(
        &self,
        theta: &AtomicIrs<crate::groups::FreeElem>,
        f: &[crate::groups::FreeElem],
    ) -> Result<FactorTail, IrsError> {
        if theta.tail.is_some() {
            return Err(IrsError::Refused("chain tails are only classified on the wreath instance".into()));
        }
        if let Some(x) = f.iter().find(|x| !self.in_subgroup(x)) {
            return Err(IrsError::NotInGamma(x.to_string()));
        }
        let mut exceptional = BTreeMap::new();
        if let Some(n) = self.transversal_len() {
            for i in 0..n {
                let t = self.rep(i).expect("finite transversal");
                exceptional.insert(i, eval_unchecked(self, theta, &conjugate_all(self, &t, f))?);
            }
            return Ok(FactorTail { exceptional, tail: Tail::AllOne });
        }
        let letters = hom_letters(theta);
        let mut pairs = BTreeSet::new();
        for x in f {
            pairs.extend(self.candidate_pairs(x, &letters)?);
        }
        for (g, h) in pairs {
            let t = self.pair(g, h);
            exceptional.insert(self.index_of_pair(g, h), eval_unchecked(self, theta, &conjugate_all(self, &t, f))?);
        }
        // Outside the candidates no tracked letter occurs, so exponent-sum
        // kernels contain every conjugate; the other atoms are conjugation
        // invariant.
        let trivial_f = f.iter().all(|x| x.0.is_empty());
        let mut c_inf = BigRational::zero();
        for a in &theta.atoms {
            let contains = match &a.subgroup {
                SubgroupDescriptor::Trivial => trivial_f,
                SubgroupDescriptor::Whole | SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(_)) => true,
                d @ SubgroupDescriptor::HomKernel(HomWitness::ConjugateLetterExponents(_)) => {
                    let mut all = true;
                    for x in f {
                        all &= self.contains(d, x)?;
                    }
                    all
                }
                d => return Err(GroupError::UnsupportedDescriptor { instance: self.name(), descriptor: d.to_string() }.into()),
            };
            if contains {
                c_inf += &a.weight;
            }
        }
        let tail = if c_inf.is_one() { Tail::AllOne } else { Tail::ConstantBelowOne(c_inf) };
        Ok(FactorTail { exceptional, tail })
    }

    fn kernel_core(&self, theta: &AtomicIrs<crate::groups::FreeElem>) -> Option<SubgroupDescriptor> {
        if theta.tail.is_some() {
            return None;
        }
        let mut letters = BTreeSet::new();
        for a in &theta.atoms {
            match &a.subgroup {
                SubgroupDescriptor::Whole => {}
                SubgroupDescriptor::Trivial => return Some(SubgroupDescriptor::Trivial),
                SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(ls))
                | SubgroupDescriptor::HomKernel(HomWitness::ConjugateLetterExponents(ls)) => {
                    letters.extend(ls.iter().copied())
                }
                _ => return None,
            }
        }
        Some(if letters.is_empty() {
            SubgroupDescriptor::Whole
        } else {
            SubgroupDescriptor::HomKernel(HomWitness::ConjugateLetterExponents(letters.into_iter().collect()))
        })
    }
}

impl Coinduce for IntegerChain {
    fn factor_tail(
        &self,
        theta: &AtomicIrs<crate::groups::IntElem>,
        f: &[crate::groups::IntElem],
    ) -> Result<FactorTail, IrsError> {
        if theta.tail.is_some() {
            return Err(IrsError::Refused("chain tails are only classified on the wreath instance".into()));
        }
        if let Some(x) = f.iter().find(|x| !self.in_subgroup(x)) {
            return Err(IrsError::NotInGamma(x.to_string()));
        }
        let mut exceptional = BTreeMap::new();
        if !self.is_plane() {
            for i in 0..self.d() as usize {
                let t = self.rep(i).expect("finite transversal");
                exceptional.insert(i, eval_unchecked(self, theta, &conjugate_all(self, &t, f))?);
            }
            return Ok(FactorTail { exceptional, tail: Tail::AllOne });
        }
        // Δ is abelian: every factor equals θ(N_F).
        let v = eval_unchecked(self, theta, f)?;
        let tail = if v.is_one() { Tail::AllOne } else { Tail::ConstantBelowOne(v) };
        Ok(FactorTail { exceptional, tail })
    }

    fn kernel_core(&self, theta: &AtomicIrs<crate::groups::IntElem>) -> Option<SubgroupDescriptor> {
        if theta.tail.is_some() {
            return None;
        }
        let mut m = self.d();
        for a in &theta.atoms {
            match a.subgroup {
                SubgroupDescriptor::Whole => {}
                SubgroupDescriptor::Trivial | SubgroupDescriptor::IndexInZ(0) => {
                    return Some(SubgroupDescriptor::Trivial)
                }
                SubgroupDescriptor::IndexInZ(k) => m = m.lcm(&k),
                _ => return None,
            }
        }
        Some(if m == self.d() { SubgroupDescriptor::Whole } else { SubgroupDescriptor::IndexInZ(m) })
    }

    fn gamma_is_infinite_cyclic(&self) -> bool {
        self.is_plane()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum NonAtomicity {
    NonAtomic { witness: String, value: CertifiedValue },
    DiracAtom(SubgroupDescriptor),
    Inconclusive(String),
}

pub fn nonatomicity_verdict<I: Coinduce + ?Sized>(
    inst: &I,
    theta: &AtomicIrs<I::Elem>,
    gamma: &I::Elem,
) -> Result<NonAtomicity, IrsError> {
    if !inst.index_is_infinite() {
        return Err(IrsError::FiniteIndex);
    }
    if let Some(d) = theta.as_dirac() {
        if inst.is_normal_in_delta(d)? {
            return Ok(NonAtomicity::DiracAtom(d.clone()));
        }
    }
    let Some(core_ker) = inst.kernel_core(theta) else {
        return Ok(NonAtomicity::Inconclusive("no closed-form kernel core for this IRS".into()));
    };
    if inst.gamma_is_infinite_cyclic() {
        return Ok(NonAtomicity::DiracAtom(core_ker));
    }
    if !inst.in_core(gamma) {
        return Ok(NonAtomicity::Inconclusive(format!("{gamma} is outside core(Γ)")));
    }
    if inst.contains(&core_ker, gamma)? {
        return Ok(NonAtomicity::Inconclusive(format!("{gamma} lies in core(ker θ) = {core_ker}")));
    }
    let ft = inst.factor_tail(theta, std::slice::from_ref(gamma))?;
    if ft.exceptional.values().any(Zero::is_zero) {
        return Ok(NonAtomicity::Inconclusive("some factor vanishes".into()));
    }
    if let Tail::ConstantBelowOne(c) = &ft.tail {
        return Ok(NonAtomicity::Inconclusive(format!("tail factors stay at {c}; deficits diverge")));
    }
    Ok(NonAtomicity::NonAtomic { witness: gamma.to_string(), value: product_over_tail(&ft) })
}

/// The `θ_a` construction for a chain that is not constant.
#[derive(Debug, Clone)]
pub struct ThetaA<E> {
    pub irs: AtomicIrs<E>,
    /// Least `N` with `Γ̄_{N+1} ⊊ Γ̄_N`.
    pub n: usize,
    pub lambda: BigRational,
    pub s: Vec<usize>,
}

/// Bound on the search for the first strict step of the chain.
const CHAIN_SEARCH: usize = 64;

/// `θ_a = aδ_{Γ̄₀} + (λ − a)δ_{Γ̄_{N+1}} + Σ_{k > N+1} 2^{-k-1}δ_{Γ̄_k}`.
pub fn theta_a<I: Instance + ?Sized>(inst: &I, gamma0: &I::Elem, a: &BigRational) -> Result<ThetaA<I::Elem>, IrsError> {
    let mut n = None;
    for k in 0..CHAIN_SEARCH {
        if inst.chain_witness_verify(gamma0, k + 1, k)?.verified {
            n = Some(k);
            break;
        }
    }
    let n = n.ok_or_else(|| IrsError::Refused(format!("no strict step of the chain below {CHAIN_SEARCH}")))?;
    let lambda = BigRational::one() - pow2_inv(n + 2);
    if !a.is_positive() || *a >= lambda {
        return Err(IrsError::BadParameter(format!("a must lie in (0, {lambda})")));
    }
    let top = inst.chain_subgroup(gamma0, n + 1)?;
    let mut s = Vec::new();
    for k in 0..=n {
        let t = inst.rep(k).ok_or(GroupError::IndexOutOfRange(k))?;
        if !inst.contains(&top, &conjugate(inst, &t, gamma0))? {
            s.push(k);
        }
    }
    let atoms = vec![
        Atom { weight: a.clone(), subgroup: inst.chain_subgroup(gamma0, 0)? },
        Atom { weight: &lambda - a, subgroup: top },
    ];
    let irs = AtomicIrs::new(atoms, Some(ChainTail { start: n + 2, gamma0: gamma0.clone() }))?;
    Ok(ThetaA { irs, n, lambda, s })
}

/// `λδ_Γ + (1 − λ)δ_K` with `K` the kernel of the exponent sum of `target`:
/// `θ(N_γ) = λ` when `target` survives in `γ`, else 1.
pub fn theta_lambda(
    target: Commutator,
    lambda: &BigRational,
) -> Result<AtomicIrs<crate::groups::FreeElem>, IrsError> {
    let one = BigRational::one();
    if !lambda.is_positive() || *lambda >= one {
        return Err(IrsError::BadParameter("λ must lie in (0, 1)".into()));
    }
    AtomicIrs::new(
        vec![
            Atom { weight: lambda.clone(), subgroup: SubgroupDescriptor::Whole },
            Atom {
                weight: one - lambda,
                subgroup: SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(vec![target])),
            },
        ],
        None,
    )
}

/// Independent product over the letters: letter `i` survives in the
/// subgroup with probability `1 − p_i`, so `θ(N_γ) = ∏ p_i` over the
/// letters present in `γ`.
pub fn theta_product(letters: &[(Commutator, BigRational)]) -> Result<AtomicIrs<crate::groups::FreeElem>, IrsError> {
    let one = BigRational::one();
    if letters.iter().any(|(_, p)| !p.is_positive() || *p >= one) {
        return Err(IrsError::BadParameter("probabilities must lie in (0, 1)".into()));
    }
    let mut atoms = Vec::new();
    for mask in 0u32..(1 << letters.len()) {
        let mut w = one.clone();
        let mut killed = Vec::new();
        for (i, (c, p)) in letters.iter().enumerate() {
            if mask >> i & 1 == 1 {
                w *= p;
            } else {
                w *= &one - p;
                killed.push(*c);
            }
        }
        let subgroup = if killed.is_empty() {
            SubgroupDescriptor::Whole
        } else {
            SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(killed))
        };
        atoms.push(Atom { weight: w, subgroup });
    }
    AtomicIrs::new(atoms, None)
}

/// Letters `[g₀, h_i]` for `h = 1, 3, 5, 7`: distinct, and no `h_j ± 1`
/// equals any `h_i`.
pub fn mixing_letters(fp: &FreeProduct) -> Result<Vec<Commutator>, IrsError> {
    let hs = [1i64, 3, 5, 7];
    let letters: Vec<Commutator> = hs
        .iter()
        .filter_map(|&h| fp.commutator(1, h))
        .collect();
    let distinct: BTreeSet<_> = letters.iter().collect();
    if letters.len() != 4 || distinct.len() != 4 {
        return Err(IrsError::Refused(format!("{} has no four admissible h_i", fp.name())));
    }
    for &hj in &hs {
        for &hi in &hs {
            let h = fp.h_factor();
            if h.normalize(hj + 1) == h.normalize(hi) || h.normalize(hj - 1) == h.normalize(hi) {
                return Err(IrsError::Refused(format!("{} violates h_j h0^±1 ≠ h_i", fp.name())));
            }
        }
    }
    Ok(letters)
}

/// `θ_λ` with `[g₀,h₁], [g₀,h₂], [g₀,h₃]` each fixed with probability 1/3.
pub fn theta_lambda_mixing(fp: &FreeProduct, lambda: &BigRational) -> Result<AtomicIrs<crate::groups::FreeElem>, IrsError> {
    let letters = mixing_letters(fp)?;
    let third = ratio(1, 3);
    let mut ps = vec![(letters[0], lambda.clone())];
    ps.extend(letters[1..].iter().map(|&c| (c, third.clone())));
    theta_product(&ps)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyRow {
    pub parameter: String,
    pub value: CertifiedValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FamilyTable {
    pub instance: String,
    pub construction: String,
    pub rows: Vec<FamilyRow>,
    pub pairwise_distinct: bool,
}

fn finish_table(instance: String, construction: &str, rows: Vec<FamilyRow>) -> FamilyTable {
    let mut distinct = true;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            distinct &= rows[i].value.certainly_differs(&rows[j].value);
        }
    }
    FamilyTable { instance, construction: construction.into(), rows, pairwise_distinct: distinct }
}

/// `CIND(θ_a)(N_{γ₀})` over a grid of `a`.
pub fn distinguish_wreath(inst: &WreathInstance, grid: &[BigRational]) -> Result<FamilyTable, IrsError> {
    let g0 = inst.default_gamma0();
    let rows: Result<Vec<FamilyRow>, IrsError> = grid
        .par_iter()
        .map(|a| {
            let th = theta_a(inst, &g0, a)?;
            Ok(FamilyRow { parameter: a.to_string(), value: coinduce_value(inst, &th.irs, std::slice::from_ref(&g0))? })
        })
        .collect();
    Ok(finish_table(inst.name(), "theta_a", rows?))
}

/// `CIND(θ_λ)(N_{[g₀,h₀]})` over a grid of `λ`, plain or weak-mixing.
pub fn distinguish_free_product(
    inst: &FreeProduct,
    grid: &[BigRational],
    mixing: bool,
) -> Result<FamilyTable, IrsError> {
    let target = inst
        .commutator(1, 1)
        .ok_or_else(|| IrsError::Refused("factors must be non-trivial".into()))?;
    let x = inst.expand_letter(target);
    let rows: Result<Vec<FamilyRow>, IrsError> = grid
        .par_iter()
        .map(|l| {
            let th = if mixing { theta_lambda_mixing(inst, l)? } else { theta_lambda(target, l)? };
            Ok(FamilyRow { parameter: l.to_string(), value: coinduce_value(inst, &th, std::slice::from_ref(&x))? })
        })
        .collect();
    Ok(finish_table(inst.name(), if mixing { "theta_lambda_mixing" } else { "theta_lambda" }, rows?))
}

/// `Ψ(θ)(N_F) = θ(N_{φ(F)})` for a surjection `φ` onto the group carrying
/// `θ`. Elements of `φ(F)` outside every atom simply contribute nothing.
pub fn pushforward_value<I, X, F>(inst: &I, theta: &AtomicIrs<I::Elem>, phi: F, set: &[X]) -> Result<BigRational, IrsError>
where
    I: Instance + ?Sized,
    F: Fn(&X) -> I::Elem,
{
    let image: Vec<I::Elem> = set.iter().map(phi).collect();
    eval_unchecked(inst, theta, &image)
}

/// Parses an IRS description against an instance: `dirac:whole`,
/// `dirac:trivial`, `dirac:<m>Z`, `mix:<w>@<sub>+…;n=<n>`, `chain:2^-k-1`,
/// `chain-a:<a>`, `lambda:<λ>`, `lambda-wm:<λ>`.
pub trait ParseIrs: Coinduce {
    fn parse_irs(&self, s: &str) -> Result<AtomicIrs<Self::Elem>, IrsError>;
}

fn parse_weight(s: &str, vars: &BTreeMap<String, usize>) -> Result<Option<BigRational>, IrsError> {
    let s = s.trim();
    if s == "rest" {
        return Ok(None);
    }
    if let Some(e) = s.strip_prefix("2^-") {
        let k = match vars.get(e) {
            Some(&v) => v,
            None => e.parse::<usize>().map_err(|_| IrsError::Parse(s.to_string()))?,
        };
        return Ok(Some(pow2_inv(k)));
    }
    parse_rational(s).map(Some)
}

fn parse_mix<E: Clone + fmt::Display>(
    body: &str,
    sub: impl Fn(&str) -> Result<SubgroupDescriptor, IrsError>,
) -> Result<AtomicIrs<E>, IrsError> {
    let (terms, binds) = body.split_once(';').unwrap_or((body, ""));
    let mut vars = BTreeMap::new();
    for b in binds.split(';').filter(|b| !b.trim().is_empty()) {
        let (k, v) = b.split_once('=').ok_or_else(|| IrsError::Parse(b.to_string()))?;
        vars.insert(k.trim().to_string(), v.trim().parse::<usize>().map_err(|_| IrsError::Parse(b.to_string()))?);
    }
    let mut atoms = Vec::new();
    let mut rest = None;
    for term in terms.split('+') {
        let (w, s) = term.split_once('@').ok_or_else(|| IrsError::Parse(term.to_string()))?;
        let d = sub(s.trim())?;
        match parse_weight(w, &vars)? {
            Some(w) => atoms.push(Atom { weight: w, subgroup: d }),
            None if rest.is_none() => rest = Some(d),
            None => return Err(IrsError::Parse("two `rest` terms".into())),
        }
    }
    if let Some(d) = rest {
        let used: BigRational = atoms.iter().map(|a| a.weight.clone()).sum();
        atoms.push(Atom { weight: BigRational::one() - used, subgroup: d });
    }
    AtomicIrs::new(atoms, None)
}

fn common_subgroup(s: &str) -> Option<SubgroupDescriptor> {
    match s {
        "whole" => Some(SubgroupDescriptor::Whole),
        "trivial" | "e" => Some(SubgroupDescriptor::Trivial),
        _ => None,
    }
}

impl ParseIrs for WreathInstance {
    fn parse_irs(&self, s: &str) -> Result<AtomicIrs<WreathElem>, IrsError> {
        let g0 = self.default_gamma0();
        let sub = |t: &str| -> Result<SubgroupDescriptor, IrsError> {
            if let Some(d) = common_subgroup(t) {
                return Ok(d);
            }
            let k = t
                .strip_prefix("chain")
                .and_then(|k| k.parse::<usize>().ok())
                .ok_or_else(|| IrsError::Parse(t.to_string()))?;
            Ok(self.chain_subgroup(&g0, k)?)
        };
        let (kind, body) = s.split_once(':').ok_or_else(|| IrsError::Parse(s.to_string()))?;
        match kind {
            "dirac" => Ok(AtomicIrs::dirac(sub(body)?)),
            "mix" => parse_mix(body, sub),
            "chain" if body == "2^-k-1" => Ok(AtomicIrs::chain(g0)),
            "chain-a" => Ok(theta_a(self, &g0, &parse_rational(body)?)?.irs),
            _ => Err(IrsError::Parse(s.to_string())),
        }
    }
}

impl ParseIrs for FreeProduct {
    fn parse_irs(&self, s: &str) -> Result<AtomicIrs<crate::groups::FreeElem>, IrsError> {
        let sub = |t: &str| -> Result<SubgroupDescriptor, IrsError> {
            if let Some(d) = common_subgroup(t) {
                return Ok(d);
            }
            let inner = t
                .strip_prefix("ker")
                .ok_or_else(|| IrsError::Parse(t.to_string()))?;
            Ok(SubgroupDescriptor::HomKernel(HomWitness::LetterExponents(vec![self.parse_commutator(inner)?])))
        };
        let (kind, body) = s.split_once(':').ok_or_else(|| IrsError::Parse(s.to_string()))?;
        let target = || {
            self.commutator(1, 1).ok_or_else(|| IrsError::Refused("factors must be non-trivial".into()))
        };
        match kind {
            "dirac" => Ok(AtomicIrs::dirac(sub(body)?)),
            "mix" => parse_mix(body, sub),
            "lambda" => theta_lambda(target()?, &parse_rational(body)?),
            "lambda-wm" => theta_lambda_mixing(self, &parse_rational(body)?),
            _ => Err(IrsError::Parse(s.to_string())),
        }
    }
}

impl ParseIrs for IntegerChain {
    fn parse_irs(&self, s: &str) -> Result<AtomicIrs<crate::groups::IntElem>, IrsError> {
        let sub = |t: &str| -> Result<SubgroupDescriptor, IrsError> {
            if let Some(d) = common_subgroup(t) {
                return Ok(d);
            }
            let m = t
                .strip_suffix('Z')
                .and_then(|m| m.parse::<u64>().ok())
                .filter(|m| *m % self.d() == 0)
                .ok_or_else(|| IrsError::Parse(t.to_string()))?;
            Ok(SubgroupDescriptor::IndexInZ(m))
        };
        let (kind, body) = s.split_once(':').ok_or_else(|| IrsError::Parse(s.to_string()))?;
        match kind {
            "dirac" => Ok(AtomicIrs::dirac(sub(body)?)),
            "mix" => parse_mix(body, sub),
            _ => Err(IrsError::Parse(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{CyclicFactor, ZOrder};

    fn wreath() -> WreathInstance {
        WreathInstance::new(2, ZOrder::PositiveFirst).unwrap()
    }

    fn fp() -> FreeProduct {
        FreeProduct::new(CyclicFactor { order: 2 }, CyclicFactor { order: 0 })
    }

    #[test]
    fn eval_examples() {
        let w = wreath();
        let g0 = w.default_gamma0();
        let half = AtomicIrs::<WreathElem>::new(
            vec![
                Atom { weight: ratio(1, 2), subgroup: SubgroupDescriptor::Trivial },
                Atom { weight: ratio(1, 2), subgroup: SubgroupDescriptor::Whole },
            ],
            None,
        )
        .unwrap();
        assert_eq!(eval_basic(&w, &half, &[g0.clone()]).unwrap(), ratio(1, 2));
        assert_eq!(eval_basic(&w, &AtomicIrs::dirac(SubgroupDescriptor::Whole), &[g0.clone()]).unwrap(), ratio(1, 1));
        assert!(kernel_contains(&w, &AtomicIrs::theta_n(3), &w.identity()).unwrap());
        assert!(!kernel_contains(&w, &AtomicIrs::theta_n(3), &g0).unwrap());
        assert!(eval_basic(&w, &half, &[WreathElem::shift(1)]).is_err());
    }

    #[test]
    fn chain_eval_is_partial_geometric_sum() {
        let w = wreath();
        let g0 = w.default_gamma0();
        let th = AtomicIrs::chain(g0.clone());
        for j in 0..12 {
            let t = w.rep(j).unwrap();
            let x = conjugate(&w, &t, &g0);
            // x ∈ Γ̄_k exactly for k ≤ j.
            let want: BigRational = (0..=j).map(|k| pow2_inv(k + 1)).sum();
            assert_eq!(eval_basic(&w, &th, &[x]).unwrap(), want);
        }
    }

    #[test]
    fn product_over_tail_examples() {
        let ft = FactorTail { exceptional: BTreeMap::from([(0, ratio(1, 2)), (1, ratio(1, 3))]), tail: Tail::AllOne };
        assert_eq!(product_over_tail(&ft), CertifiedValue::Exact(ratio(1, 6)));
        let ft = FactorTail { exceptional: BTreeMap::new(), tail: Tail::ConstantBelowOne(ratio(3, 4)) };
        assert_eq!(product_over_tail(&ft), CertifiedValue::ExactZero);
        let ft = FactorTail { exceptional: BTreeMap::new(), tail: Tail::SummableDeficit(ratio(1, 2)) };
        assert_eq!(product_over_tail(&ft), CertifiedValue::Interval { lo: ratio(1, 2), hi: ratio(1, 1) });
    }

    #[test]
    fn continuity_counterexample() {
        let w = wreath();
        let g0 = w.default_gamma0();
        for n in 1..=10 {
            let v = coinduce_value(&w, &AtomicIrs::theta_n(n), &[g0.clone()]).unwrap();
            assert_eq!(v, CertifiedValue::ExactZero);
        }
        let v = coinduce_value(&w, &AtomicIrs::dirac(SubgroupDescriptor::Whole), &[g0]).unwrap();
        assert_eq!(v, CertifiedValue::Exact(ratio(1, 1)));
    }

    #[test]
    fn free_product_lambda_fourth() {
        let f = fp();
        let target = f.commutator(1, 1).unwrap();
        let x = f.expand_letter(target);
        for (l, want) in [(ratio(1, 2), ratio(1, 16)), (ratio(1, 3), ratio(1, 81))] {
            let th = theta_lambda(target, &l).unwrap();
            assert_eq!(coinduce_value(&f, &th, &[x.clone()]).unwrap(), CertifiedValue::Exact(want));
        }
        let th = theta_lambda_mixing(&f, &ratio(1, 2)).unwrap();
        assert_eq!(th.atoms().len(), 16);
        let want = ratio(1, 16) * BigRational::new(BigInt::one(), BigInt::from(3u32).pow(12));
        assert_eq!(coinduce_value(&f, &th, &[x]).unwrap(), CertifiedValue::Exact(want));
    }

    #[test]
    fn wreath_theta_a_family_is_distinguished() {
        let w = wreath();
        let th = theta_a(&w, &w.default_gamma0(), &ratio(1, 3)).unwrap();
        assert_eq!((th.n, th.lambda.clone(), th.s.clone()), (0, ratio(3, 4), vec![0]));
        let table = distinguish_wreath(&w, &[ratio(1, 4), ratio(1, 3)]).unwrap();
        assert!(table.pairwise_distinct, "{table:?}");
    }

    #[test]
    fn verdicts() {
        let w = wreath();
        let g0 = w.default_gamma0();
        let v = nonatomicity_verdict(&w, &AtomicIrs::chain(g0.clone()), &g0).unwrap();
        assert!(matches!(v, NonAtomicity::NonAtomic { .. }), "{v:?}");
        let v = nonatomicity_verdict(&w, &AtomicIrs::dirac(SubgroupDescriptor::Trivial), &g0).unwrap();
        assert_eq!(v, NonAtomicity::DiracAtom(SubgroupDescriptor::Trivial));
        let z = IntegerChain::plane(2).unwrap();
        let th = z.parse_irs("mix:1/2@4Z+rest@6Z").unwrap();
        let v = nonatomicity_verdict(&z, &th, &z.default_gamma0()).unwrap();
        assert_eq!(v, NonAtomicity::DiracAtom(SubgroupDescriptor::IndexInZ(12)));
        assert_eq!(
            nonatomicity_verdict(&IntegerChain::line(2).unwrap(), &th, &z.default_gamma0()),
            Err(IrsError::FiniteIndex)
        );
    }

    #[test]
    fn parse_strings() {
        let w = wreath();
        let th = w.parse_irs("mix:2^-n@trivial+rest@whole;n=5").unwrap();
        assert_eq!(th, AtomicIrs::theta_n(5));
        assert!(w.parse_irs("mix:1/2@trivial+1/3@whole").is_err());
        assert!(w.parse_irs("chain:2^-k-1").unwrap().tail().is_some());
        let f = fp();
        assert_eq!(f.parse_irs("lambda:1/3").unwrap().atoms().len(), 2);
    }
}
