use std::fmt;

use super::{CosetSpace, CyclicFactor, FreeElem, FreeProduct, GroupError, Side};

/// The desk amalgam `G ∗_A H` with `G = Z/4 = ⟨g⟩`, `H = Z × Z/2 = ⟨h, s⟩`
/// and `A = Z/2` identified as `g² = s`, together with the quotient map onto
/// `G/A ∗ H/A = Z/2 ∗ Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AmalgamDesk;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmalgamLetter {
    G(i64),
    H(i64),
    S(i64),
}

/// A word in `G ∗_A H`; no normal form is kept, the quotient map is
/// evaluated letter by letter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmalgamWord(pub Vec<AmalgamLetter>);

impl fmt::Display for AmalgamWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|l| match l {
                AmalgamLetter::G(e) => format!("g^{e}"),
                AmalgamLetter::H(e) => format!("h^{e}"),
                AmalgamLetter::S(e) => format!("s^{e}"),
            })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl AmalgamDesk {
    pub fn target(&self) -> FreeProduct {
        FreeProduct::new(CyclicFactor { order: 2 }, CyclicFactor { order: 0 })
    }

    pub fn parse(&self, s: &str) -> Result<AmalgamWord, GroupError> {
        let bad = || GroupError::Parse(s.to_string());
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            let (base, e) = match tok.split_once('^') {
                Some((b, e)) => (b, e.parse::<i64>().map_err(|_| bad())?),
                None => (tok, 1),
            };
            out.push(match base {
                "1" => continue,
                "g" | "g0" => AmalgamLetter::G(e),
                "h" | "h0" => AmalgamLetter::H(e),
                "s" => AmalgamLetter::S(e),
                _ => return Err(bad()),
            });
        }
        Ok(AmalgamWord(out))
    }

    /// `φ: G ∗_A H → Z/2 ∗ Z`, `g ↦ g`, `h ↦ h`, `s ↦ e`. It kills `A` on
    /// both sides, so it is well defined on the amalgam.
    pub fn phi(&self, w: &AmalgamWord) -> FreeElem {
        let t = self.target();
        w.0.iter().fold(t.identity(), |acc, l| {
            let y = match *l {
                AmalgamLetter::G(e) => t.syllable(Side::G, e),
                AmalgamLetter::H(e) => t.syllable(Side::H, e),
                AmalgamLetter::S(_) => t.identity(),
            };
            t.mul(&acc, &y)
        })
    }

    /// Checks that `φ` respects the defining relations `g⁴ = e`, `s² = e`,
    /// `hs = sh` and `g² = s`.
    pub fn relations_respected(&self) -> bool {
        let t = self.target();
        let e = t.identity();
        let w = |s: &str| self.phi(&self.parse(s).expect("static word"));
        w("g^4") == e && w("s^2") == e && w("h s h^-1 s^-1") == e && w("g^2 s^-1") == e
    }
}
