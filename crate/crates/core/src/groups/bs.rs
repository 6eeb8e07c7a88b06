use std::fmt;

use num_integer::Integer;
use serde::Serialize;

use super::{ChainVerdict, GroupError, HomWitness, SubgroupDescriptor, ZOrder};

/// `BS(n, m) = ⟨x, t | t xⁿ t⁻¹ = xᵐ⟩` as the HNN extension of `H = Z` along
/// `nZ → mZ`. The base `F` is generated by copies `x_p` of `x`, `p ∈ Z`, with
/// `x_{p+1}ⁿ = x_pᵐ`, and `t_i⁻¹ x₀ t_i = x_{−g_i}` for `t_i = t^{g_i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsInstance {
    n: i64,
    m: i64,
}

/// A word in the generators `x_p` of `F`, as `(p, exponent)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseWord(pub Vec<(i64, i64)>);

impl fmt::Display for BaseWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(p, e)| if *e == 1 { format!("x{p}") } else { format!("x{p}^{e}") })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BsClosure {
    pub n: i64,
    pub m: i64,
    pub gcd: u64,
    /// `gcd = u·n + v·m`.
    pub bezout: (i64, i64),
    pub descriptor: SubgroupDescriptor,
}

/// `f: F → H/Λ = Z/gcd`, sending `x_center` to 1 and every other `x_p` to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BsWitness {
    pub modulus: u64,
    pub center: i64,
}

impl BsWitness {
    pub fn apply(&self, w: &BaseWord) -> u64 {
        let g = self.modulus as i64;
        w.0.iter().filter(|(p, _)| *p == self.center).map(|(_, e)| e).sum::<i64>().rem_euclid(g) as u64
    }

    pub fn descriptor(&self) -> SubgroupDescriptor {
        SubgroupDescriptor::HomKernel(HomWitness::ModGcd { modulus: self.modulus, center: self.center })
    }
}

impl BsInstance {
    pub fn new(n: i64, m: i64) -> Result<Self, GroupError> {
        if n == 0 || m == 0 {
            return Err(GroupError::BadInstance("BS(n, m) needs n, m ≠ 0".into()));
        }
        Ok(BsInstance { n, m })
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    /// `⟨⟨nZ ∪ mZ⟩⟩ = gcd(n, m)Z` inside the abelian `H = Z`, with the Bezout
    /// certificate checked.
    pub fn closure(&self) -> Result<BsClosure, GroupError> {
        let e = self.n.extended_gcd(&self.m);
        let g = e.gcd.unsigned_abs();
        let (u, v) = if e.gcd < 0 { (-e.x, -e.y) } else { (e.x, e.y) };
        let ok = u * self.n + v * self.m == g as i64 && self.n % g as i64 == 0 && self.m % g as i64 == 0;
        if !ok {
            return Err(GroupError::InvalidWitness(format!("Bezout check failed for ({}, {})", self.n, self.m)));
        }
        let descriptor = if g == 1 { SubgroupDescriptor::Whole } else { SubgroupDescriptor::IndexInZ(g) };
        Ok(BsClosure { n: self.n, m: self.m, gcd: g, bezout: (u, v), descriptor })
    }

    /// The quotient witness centred at `center`, after checking that it
    /// respects every defining relation of `F` and is non-trivial.
    pub fn witness(&self, center: i64) -> Result<BsWitness, GroupError> {
        let c = self.closure()?;
        if c.gcd == 1 {
            return Err(GroupError::Refused(format!(
                "gcd({}, {}) = 1: the closure is all of Z and H/Λ is trivial",
                self.n, self.m
            )));
        }
        let w = BsWitness { modulus: c.gcd, center };
        // Only the relations touching x_center can have non-zero images.
        for j in [center - 1, center] {
            let lhs = w.apply(&BaseWord(vec![(j + 1, self.n)]));
            let rhs = w.apply(&BaseWord(vec![(j, self.m)]));
            if lhs != rhs {
                return Err(GroupError::InvalidWitness(format!("relation x{}^{} = x{j}^{} not respected", j + 1, self.n, self.m)));
            }
        }
        if w.apply(&BaseWord(vec![(center, 1)])) == 0 {
            return Err(GroupError::InvalidWitness("f(x_center) is trivial".into()));
        }
        Ok(w)
    }

    pub fn conjugate_position(&self, i: usize) -> i64 {
        -ZOrder::PositiveFirst.decode(i)
    }

    /// `Γ̄₀ = F`; for `k ≥ 1` a kernel containing `Γ̄_k`.
    pub fn chain_subgroup(&self, k: usize) -> Result<SubgroupDescriptor, GroupError> {
        if k == 0 {
            return Ok(SubgroupDescriptor::Whole);
        }
        Ok(self.witness(self.conjugate_position(0))?.descriptor())
    }

    /// `t_j⁻¹x₀t_j ∉ Γ̄_k` via the witness centred at the position of that
    /// conjugate: it kills every generator `x_{−g_i}`, `i ≥ k`, hence their
    /// normal closure, and sends the conjugate to 1.
    pub fn chain_witness_verify(&self, k: usize, j: usize) -> Result<ChainVerdict, GroupError> {
        if j >= k {
            return Err(GroupError::Refused(format!("need j < k, got j={j}, k={k}")));
        }
        let center = self.conjugate_position(j);
        let w = self.witness(center)?;
        // The generators x_{-g_i} with i ≥ k avoid the centre exactly when the
        // centre's own index is below k.
        let center_index = ZOrder::PositiveFirst.index(-center);
        if center_index >= k {
            return Err(GroupError::InvalidWitness("witness does not kill the chain generators".into()));
        }
        for i in k..k + 64 {
            if w.apply(&BaseWord(vec![(self.conjugate_position(i), 1)])) != 0 {
                return Err(GroupError::InvalidWitness(format!("f(x{}) ≠ 0", self.conjugate_position(i))));
            }
        }
        let target = BaseWord(vec![(center, 1)]);
        Ok(ChainVerdict {
            k,
            j,
            conjugate: target.to_string(),
            descriptor: w.descriptor().to_string(),
            verified: w.apply(&target) != 0,
        })
    }
}
