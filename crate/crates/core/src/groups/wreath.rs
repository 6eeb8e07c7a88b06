use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, RngCore};

use super::{
    gcd_u64, unsupported, ChainDepth, CosetSpace, GroupError, Instance, SubgroupDescriptor,
    SupportClosure, ZOrder,
};

/// An element `(f, g)` of `Z/h ≀ Z`; `f` lists its non-zero values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WreathElem {
    pub f: BTreeMap<i64, u64>,
    pub g: i64,
}

impl WreathElem {
    pub fn shift(g: i64) -> Self {
        WreathElem { f: BTreeMap::new(), g }
    }

    pub fn delta(h: u64, position: i64, value: u64) -> Self {
        let mut f = BTreeMap::new();
        if value % h != 0 {
            f.insert(position, value % h);
        }
        WreathElem { f, g: 0 }
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.f.keys().copied()
    }
}

impl fmt::Display for WreathElem {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .f
            .iter()
            .map(|(p, v)| if *v == 1 { format!("x@{p}") } else { format!("x@{p}^{v}") })
            .collect();
        match self.g {
            0 => {}
            1 => parts.push("t".into()),
            g => parts.push(format!("t^{g}")),
        }
        if parts.is_empty() {
            write!(out, "1")
        } else {
            write!(out, "{}", parts.join(" "))
        }
    }
}

fn wreath_mul(h: u64, a: &WreathElem, b: &WreathElem) -> WreathElem {
    // (f1, g1)(f2, g2) = (f1 + g1·f2, g1 + g2), with (g·f)(x) = f(x − g).
    let mut f = a.f.clone();
    for (&p, &v) in &b.f {
        let slot = f.entry(p + a.g).or_insert(0);
        *slot = (*slot + v) % h;
        if *slot == 0 {
            f.remove(&(p + a.g));
        }
    }
    WreathElem { f, g: a.g + b.g }
}

fn wreath_inv(h: u64, a: &WreathElem) -> WreathElem {
    let f = a.f.iter().map(|(&p, &v)| (p - a.g, (h - v) % h)).collect();
    WreathElem { f, g: -a.g }
}

fn sample_elem(h: u64, rng: &mut dyn RngCore, g_range: i64) -> WreathElem {
    let mut x = WreathElem::shift(0);
    for _ in 0..rng.gen_range(0..=4) {
        let p = rng.gen_range(-8..=8);
        let d = WreathElem::delta(h, p, rng.gen_range(1..h.max(2)));
        x = wreath_mul(h, &x, &d);
    }
    x.g = if g_range == 0 { 0 } else { rng.gen_range(-g_range..=g_range) };
    x
}

/// A level `(⊕H ⋊ sub·Z) ≤ (⊕H ⋊ step·Z)` of `Z/h ≀ Z`; `sub = 0` stands
/// for the base group `⊕H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WreathCosets {
    h: u64,
    step: i64,
    sub: i64,
    order: ZOrder,
}

impl WreathCosets {
    pub fn new(h: u64, step: i64, sub: i64, order: ZOrder) -> Result<Self, GroupError> {
        if h < 2 || step <= 0 || sub < 0 || (sub != 0 && sub % step != 0) {
            return Err(GroupError::BadInstance(format!("invalid wreath level h={h} step={step} sub={sub}")));
        }
        Ok(WreathCosets { h, step, sub, order })
    }

    fn finite_index(&self) -> Option<usize> {
        (self.sub != 0).then(|| (self.sub / self.step) as usize)
    }
}

impl CosetSpace for WreathCosets {
    type Elem = WreathElem;

    fn identity(&self) -> WreathElem {
        WreathElem::shift(0)
    }

    fn mul(&self, a: &WreathElem, b: &WreathElem) -> WreathElem {
        wreath_mul(self.h, a, b)
    }

    fn inv(&self, a: &WreathElem) -> WreathElem {
        wreath_inv(self.h, a)
    }

    fn in_ambient(&self, x: &WreathElem) -> bool {
        x.g % self.step == 0
    }

    fn in_subgroup(&self, x: &WreathElem) -> bool {
        if self.sub == 0 {
            x.g == 0
        } else {
            x.g % self.sub == 0
        }
    }

    fn rep(&self, i: usize) -> Option<WreathElem> {
        match self.finite_index() {
            Some(n) => (i < n).then(|| WreathElem::shift(self.step * i as i64)),
            None => Some(WreathElem::shift(self.step * self.order.decode(i))),
        }
    }

    fn search_bound(&self, x: &WreathElem) -> usize {
        match self.finite_index() {
            Some(n) => n,
            None => self.order.index(x.g / self.step) + 1,
        }
    }

    fn locate(&self, x: &WreathElem) -> Result<usize, GroupError> {
        if !self.in_ambient(x) {
            return Err(GroupError::NotInSubgroup(x.to_string()));
        }
        Ok(match self.finite_index() {
            Some(_) => (x.g.rem_euclid(self.sub) / self.step) as usize,
            None => self.order.index(x.g / self.step),
        })
    }

    fn sample_ambient(&self, rng: &mut dyn RngCore) -> WreathElem {
        let mut x = sample_elem(self.h, rng, 6);
        x.g *= self.step;
        x
    }

    fn sample_index(&self, rng: &mut dyn RngCore) -> usize {
        match self.finite_index() {
            Some(n) => rng.gen_range(0..n),
            None => rng.gen_range(0..25),
        }
    }
}

/// `Δ = Z/h ≀ Z` over `Γ = ⊕_Z Z/h`, transversal `{t^m}` listed in `order`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WreathInstance {
    cosets: WreathCosets,
}

impl WreathInstance {
    pub fn new(h: u64, order: ZOrder) -> Result<Self, GroupError> {
        Ok(WreathInstance { cosets: WreathCosets::new(h, 1, 0, order)? })
    }

    pub fn h(&self) -> u64 {
        self.cosets.h
    }

    pub fn order(&self) -> ZOrder {
        self.cosets.order
    }

    pub fn cosets(&self) -> WreathCosets {
        self.cosets
    }

    /// The delta function at `p` carrying value `v`, or `None` when `γ₀`
    /// is not singly supported in `Γ`.
    fn single_support(&self, gamma0: &WreathElem) -> Option<(i64, u64)> {
        (gamma0.g == 0 && gamma0.f.len() == 1).then(|| {
            let (&p, &v) = gamma0.f.iter().next().expect("one entry");
            (p, v)
        })
    }

    fn chain_data(&self, gamma0: &WreathElem) -> Result<(i64, u64), GroupError> {
        let (p, v) = self.single_support(gamma0).ok_or_else(|| {
            GroupError::Refused(format!("closed form needs a singly supported γ₀ in Γ, got {gamma0}"))
        })?;
        Ok((p, gcd_u64(v, self.h())))
    }
}

impl CosetSpace for WreathInstance {
    type Elem = WreathElem;

    fn identity(&self) -> WreathElem {
        self.cosets.identity()
    }

    fn mul(&self, a: &WreathElem, b: &WreathElem) -> WreathElem {
        self.cosets.mul(a, b)
    }

    fn inv(&self, a: &WreathElem) -> WreathElem {
        self.cosets.inv(a)
    }

    fn in_ambient(&self, _x: &WreathElem) -> bool {
        true
    }

    fn in_subgroup(&self, x: &WreathElem) -> bool {
        self.cosets.in_subgroup(x)
    }

    fn rep(&self, i: usize) -> Option<WreathElem> {
        self.cosets.rep(i)
    }

    fn search_bound(&self, x: &WreathElem) -> usize {
        self.cosets.search_bound(x)
    }

    fn locate(&self, x: &WreathElem) -> Result<usize, GroupError> {
        self.cosets.locate(x)
    }

    fn sample_ambient(&self, rng: &mut dyn RngCore) -> WreathElem {
        self.cosets.sample_ambient(rng)
    }

    fn sample_index(&self, rng: &mut dyn RngCore) -> usize {
        self.cosets.sample_index(rng)
    }
}

impl Instance for WreathInstance {
    fn name(&self) -> String {
        format!("wreath:Z{},Z", self.h())
    }

    fn in_core(&self, x: &WreathElem) -> bool {
        x.g == 0
    }

    fn index_is_infinite(&self) -> bool {
        true
    }

    fn contains(&self, d: &SubgroupDescriptor, x: &WreathElem) -> Result<bool, GroupError> {
        match d {
            SubgroupDescriptor::Trivial => Ok(x.g == 0 && x.f.is_empty()),
            SubgroupDescriptor::Whole => Ok(x.g == 0),
            SubgroupDescriptor::SupportClosure(sc) => Ok(x.g == 0
                && x.f.iter().all(|(p, v)| !sc.excluded.contains(p) && v % sc.coord_step == 0)),
            _ => Err(unsupported(self, d)),
        }
    }

    fn is_normal_in_delta(&self, d: &SubgroupDescriptor) -> Result<bool, GroupError> {
        match d {
            SubgroupDescriptor::Trivial | SubgroupDescriptor::Whole => Ok(true),
            SubgroupDescriptor::SupportClosure(sc) => Ok(sc.excluded.is_empty()),
            _ => Err(unsupported(self, d)),
        }
    }

    fn sample_gamma(&self, rng: &mut dyn RngCore) -> WreathElem {
        sample_elem(self.h(), rng, 0)
    }

    fn parse_elem(&self, s: &str) -> Result<WreathElem, GroupError> {
        let bad = || GroupError::Parse(s.to_string());
        let mut x = self.identity();
        for tok in s.split_whitespace() {
            let (base, exp) = match tok.split_once('^') {
                Some((b, e)) => (b, e.parse::<i64>().map_err(|_| bad())?),
                None => (tok, 1),
            };
            let y = if base == "1" {
                self.identity()
            } else if base == "t" {
                WreathElem::shift(exp)
            } else if base == "g0" || base == "gamma0" {
                let g = self.default_gamma0();
                if exp >= 0 {
                    (0..exp).fold(self.identity(), |acc, _| self.mul(&acc, &g))
                } else {
                    (0..-exp).fold(self.identity(), |acc, _| self.mul(&acc, &self.inv(&g)))
                }
            } else if let Some(p) = base.strip_prefix("x@") {
                let p = p.parse::<i64>().map_err(|_| bad())?;
                let v = exp.rem_euclid(self.h() as i64) as u64;
                WreathElem::delta(self.h(), p, v)
            } else {
                return Err(bad());
            };
            x = self.mul(&x, &y);
        }
        Ok(x)
    }

    fn default_gamma0(&self) -> WreathElem {
        WreathElem::delta(self.h(), 0, 1)
    }

    /// `⟨⟨t_i⁻¹γ₀t_i | i ≥ k⟩⟩_Γ` for a delta function `γ₀` at `p` with
    /// value `v`: the functions supported on `{p − g_i : i ≥ k}` with values
    /// in `⟨v⟩`. `Γ` is abelian, so the normal closure is the span.
    fn chain_subgroup(&self, gamma0: &WreathElem, k: usize) -> Result<SubgroupDescriptor, GroupError> {
        let (p, step) = self.chain_data(gamma0)?;
        let excluded: BTreeSet<i64> = (0..k).map(|i| p - self.order().decode(i)).collect();
        Ok(SubgroupDescriptor::SupportClosure(SupportClosure { excluded, coord_step: step }))
    }

    fn chain_depth(&self, gamma0: &WreathElem, x: &WreathElem) -> Result<ChainDepth, GroupError> {
        let (p, step) = self.chain_data(gamma0)?;
        if x.g != 0 || x.f.values().any(|v| v % step != 0) {
            return Ok(ChainDepth::Outside);
        }
        Ok(match x.support().map(|q| self.order().index(p - q)).min() {
            None => ChainDepth::All,
            Some(m) => ChainDepth::UpTo(m),
        })
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::{conjugate, coset_action, search_locate};
    use super::*;

    fn z2() -> WreathInstance {
        WreathInstance::new(2, ZOrder::PositiveFirst).unwrap()
    }

    #[test]
    fn shift_moves_position() {
        let w = z2();
        for m in -5..=5 {
            let i = w.order().index(m);
            let (j, gamma) = coset_action(&w, &WreathElem::shift(1), i).unwrap();
            assert_eq!(w.rep(j).unwrap(), WreathElem::shift(m + 1));
            assert_eq!(gamma, w.identity());
        }
    }

    #[test]
    fn conjugation_moves_support_to_inverse_position() {
        let w = z2();
        let g0 = w.default_gamma0();
        for i in 0..10 {
            let t = w.rep(i).unwrap();
            let c = conjugate(&w, &t, &g0);
            assert_eq!(c, WreathElem::delta(2, -w.order().decode(i), 1));
        }
    }

    #[test]
    fn locate_agrees_with_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WreathInstance::new(3, ZOrder::NegativeFirst).unwrap();
        for _ in 0..200 {
            let x = w.sample_ambient(&mut rng);
            assert_eq!(w.locate(&x).unwrap(), search_locate(&w, &x).unwrap());
        }
    }

    #[test]
    fn chain_example_at_three() {
        let w = z2();
        let d = w.chain_subgroup(&w.default_gamma0(), 3).unwrap();
        let SubgroupDescriptor::SupportClosure(sc) = &d else { panic!() };
        assert_eq!(sc.excluded, BTreeSet::from([0, -1, 1]));
        assert_eq!(sc.coord_step, 1);
        let d0 = w.chain_subgroup(&w.default_gamma0(), 0).unwrap();
        assert_eq!(d0, SubgroupDescriptor::SupportClosure(SupportClosure { excluded: BTreeSet::new(), coord_step: 1 }));
        let v = w.chain_witness_verify(&w.default_gamma0(), 1, 0).unwrap();
        assert!(v.verified);
    }

    #[test]
    fn parse_round_trip() {
        let w = WreathInstance::new(3, ZOrder::PositiveFirst).unwrap();
        for s in ["1", "x@0", "x@-2^2 x@4 t^-3", "t"] {
            assert_eq!(w.parse_elem(s).unwrap().to_string(), s);
        }
        assert_eq!(w.parse_elem("t x@0 t^-1").unwrap().to_string(), "x@1");
    }
}
