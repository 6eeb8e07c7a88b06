use std::fmt;

use rand::{Rng, RngCore};

use super::{unsupported, CosetSpace, GroupError, Instance, SubgroupDescriptor, ZOrder};

/// A point of `Z` or `Z²`; the line instances keep `y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntElem {
    pub x: i64,
    pub y: i64,
}

impl IntElem {
    pub fn line(x: i64) -> Self {
        IntElem { x, y: 0 }
    }
}

impl fmt::Display for IntElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.y == 0 {
            write!(f, "{}", self.x)
        } else {
            write!(f, "({},{})", self.x, self.y)
        }
    }
}

fn parse_int_elem(s: &str) -> Result<IntElem, GroupError> {
    let t = s.trim().trim_start_matches('(').trim_end_matches(')');
    let bad = || GroupError::Parse(s.to_string());
    match t.split_once(',') {
        Some((a, b)) => Ok(IntElem {
            x: a.trim().parse().map_err(|_| bad())?,
            y: b.trim().parse().map_err(|_| bad())?,
        }),
        None => Ok(IntElem::line(t.parse().map_err(|_| bad())?)),
    }
}

/// `sub·Z ≤ step·Z` with transversal `{0, step, …, sub − step}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegerCosets {
    step: i64,
    sub: i64,
}

impl IntegerCosets {
    pub fn new(step: i64, sub: i64) -> Result<Self, GroupError> {
        if step <= 0 || sub <= 0 || sub % step != 0 {
            return Err(GroupError::BadInstance(format!("{sub}Z is not a subgroup of {step}Z")));
        }
        Ok(IntegerCosets { step, sub })
    }

    fn index(&self) -> usize {
        (self.sub / self.step) as usize
    }
}

impl CosetSpace for IntegerCosets {
    type Elem = IntElem;

    fn identity(&self) -> IntElem {
        IntElem::line(0)
    }

    fn mul(&self, a: &IntElem, b: &IntElem) -> IntElem {
        IntElem { x: a.x + b.x, y: a.y + b.y }
    }

    fn inv(&self, a: &IntElem) -> IntElem {
        IntElem { x: -a.x, y: -a.y }
    }

    fn in_ambient(&self, x: &IntElem) -> bool {
        x.y == 0 && x.x % self.step == 0
    }

    fn in_subgroup(&self, x: &IntElem) -> bool {
        x.y == 0 && x.x % self.sub == 0
    }

    fn rep(&self, i: usize) -> Option<IntElem> {
        (i < self.index()).then(|| IntElem::line(i as i64 * self.step))
    }

    fn search_bound(&self, _x: &IntElem) -> usize {
        self.index()
    }

    fn locate(&self, x: &IntElem) -> Result<usize, GroupError> {
        if !self.in_ambient(x) {
            return Err(GroupError::NotInSubgroup(x.to_string()));
        }
        Ok((x.x.rem_euclid(self.sub) / self.step) as usize)
    }

    fn sample_ambient(&self, rng: &mut dyn RngCore) -> IntElem {
        IntElem::line(self.step * rng.gen_range(-50..=50))
    }

    fn sample_index(&self, rng: &mut dyn RngCore) -> usize {
        rng.gen_range(0..self.index())
    }
}

/// `Γ = dZ` inside `Δ = Z` (finite index), or `Γ = dZ × 0` inside
/// `Δ = Z × Z` (infinite index, `Γ ≅ Z`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegerChain {
    d: u64,
    plane: bool,
}

impl IntegerChain {
    pub fn line(d: u64) -> Result<Self, GroupError> {
        if d == 0 {
            return Err(GroupError::BadInstance("d must be positive".into()));
        }
        Ok(IntegerChain { d, plane: false })
    }

    pub fn plane(d: u64) -> Result<Self, GroupError> {
        Ok(IntegerChain { plane: true, ..IntegerChain::line(d)? })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn is_plane(&self) -> bool {
        self.plane
    }

    /// `T` as a level of a nested chain.
    pub fn cosets(&self) -> Result<IntegerCosets, GroupError> {
        if self.plane {
            return Err(GroupError::Refused("nested levels are only built for the line".into()));
        }
        IntegerCosets::new(1, self.d as i64)
    }
}

impl CosetSpace for IntegerChain {
    type Elem = IntElem;

    fn identity(&self) -> IntElem {
        IntElem::line(0)
    }

    fn mul(&self, a: &IntElem, b: &IntElem) -> IntElem {
        IntElem { x: a.x + b.x, y: a.y + b.y }
    }

    fn inv(&self, a: &IntElem) -> IntElem {
        IntElem { x: -a.x, y: -a.y }
    }

    fn in_ambient(&self, x: &IntElem) -> bool {
        self.plane || x.y == 0
    }

    fn in_subgroup(&self, x: &IntElem) -> bool {
        x.y == 0 && x.x % self.d as i64 == 0
    }

    fn rep(&self, i: usize) -> Option<IntElem> {
        let d = self.d as usize;
        if self.plane {
            Some(IntElem { x: (i % d) as i64, y: ZOrder::PositiveFirst.decode(i / d) })
        } else {
            (i < d).then(|| IntElem::line(i as i64))
        }
    }

    fn search_bound(&self, x: &IntElem) -> usize {
        let d = self.d as usize;
        if self.plane {
            d * (ZOrder::PositiveFirst.index(x.y) + 1)
        } else {
            d
        }
    }

    fn locate(&self, x: &IntElem) -> Result<usize, GroupError> {
        if !self.in_ambient(x) {
            return Err(GroupError::NotInSubgroup(x.to_string()));
        }
        let r = x.x.rem_euclid(self.d as i64) as usize;
        Ok(if self.plane { ZOrder::PositiveFirst.index(x.y) * self.d as usize + r } else { r })
    }

    fn sample_ambient(&self, rng: &mut dyn RngCore) -> IntElem {
        let y = if self.plane { rng.gen_range(-20..=20) } else { 0 };
        IntElem { x: rng.gen_range(-100..=100), y }
    }

    fn sample_index(&self, rng: &mut dyn RngCore) -> usize {
        let d = self.d as usize;
        if self.plane {
            rng.gen_range(0..d * 41)
        } else {
            rng.gen_range(0..d)
        }
    }
}

impl Instance for IntegerChain {
    fn name(&self) -> String {
        if self.plane {
            format!("intchain:{}xZ", self.d)
        } else {
            format!("intchain:{}", self.d)
        }
    }

    fn in_core(&self, x: &IntElem) -> bool {
        self.in_subgroup(x)
    }

    fn index_is_infinite(&self) -> bool {
        self.plane
    }

    fn contains(&self, d: &SubgroupDescriptor, x: &IntElem) -> Result<bool, GroupError> {
        let in_gamma = self.in_subgroup(x);
        match d {
            SubgroupDescriptor::Trivial => Ok(*x == IntElem::line(0)),
            SubgroupDescriptor::Whole => Ok(in_gamma),
            SubgroupDescriptor::IndexInZ(0) => Ok(*x == IntElem::line(0)),
            SubgroupDescriptor::IndexInZ(m) => Ok(in_gamma && x.x % *m as i64 == 0),
            _ => Err(unsupported(self, d)),
        }
    }

    fn is_normal_in_delta(&self, d: &SubgroupDescriptor) -> Result<bool, GroupError> {
        match d {
            SubgroupDescriptor::Trivial | SubgroupDescriptor::Whole | SubgroupDescriptor::IndexInZ(_) => Ok(true),
            _ => Err(unsupported(self, d)),
        }
    }

    fn sample_gamma(&self, rng: &mut dyn RngCore) -> IntElem {
        IntElem::line(self.d as i64 * rng.gen_range(-30..=30))
    }

    fn parse_elem(&self, s: &str) -> Result<IntElem, GroupError> {
        let x = parse_int_elem(s)?;
        if !self.in_ambient(&x) {
            return Err(GroupError::Parse(s.to_string()));
        }
        Ok(x)
    }

    fn default_gamma0(&self) -> IntElem {
        IntElem::line(self.d as i64)
    }
}
