use std::sync::Arc;

use num_rational::Rational64;
use serde::Serialize;

use super::{GroupError, SubgroupDescriptor, WordSetClosure};
use crate::family::transversal_relators;
use crate::smallcanc::{dehn_reduce, non_membership_certificate, CertificateOutcome, ScReport, SymmetrizedSet};
use crate::words::Word;

/// `F₂ ⊴ Aut(F₂)` with the truncated transversal `R`: the normal closure of
/// `{η(w) | η ∈ R, η ≠ 1}` for `w = a b a² b² ⋯ aⁿ bⁿ`.
#[derive(Debug, Clone)]
pub struct AutF2Closure {
    n: usize,
    max_len: usize,
    word: Word,
    others: Arc<SymmetrizedSet>,
    report: Option<ScReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AutF2Witness {
    pub n: usize,
    pub max_len: usize,
    pub word_len: usize,
    pub relators: usize,
    pub full_set_certified: bool,
    pub outcome: CertificateOutcome,
}

impl AutF2Witness {
    /// `w` lies outside the closure: the full set is C′(1/6) and every other
    /// relator is at least as long as `w`.
    pub fn verified(&self) -> bool {
        self.full_set_certified && self.outcome.is_certificate()
    }
}

impl AutF2Closure {
    /// Builds the relators. With `certify`, runs the C′(1/6) check on the
    /// full set `{η(w) | η ∈ R}`; the closure then inherits the certificate.
    pub fn new(n: usize, max_len: usize, certify: bool) -> Result<Self, GroupError> {
        let rels = transversal_relators(n, max_len).map_err(|e| GroupError::BadInstance(e.to_string()))?;
        let word = rels
            .iter()
            .find(|(t, _)| t.is_identity_rep())
            .map(|(_, r)| r.clone())
            .ok_or_else(|| GroupError::BadInstance("transversal has no identity representative".into()))?;
        let others: Vec<Word> = rels.iter().filter(|(t, _)| !t.is_identity_rep()).map(|(_, r)| r.clone()).collect();
        let mut set = SymmetrizedSet::new(&others).map_err(|e| GroupError::BadInstance(e.to_string()))?;
        let report = if certify {
            let all: Vec<Word> = rels.into_iter().map(|(_, r)| r).collect();
            let full = SymmetrizedSet::new(&all).map_err(|e| GroupError::BadInstance(e.to_string()))?;
            let rep = full.check(Rational64::new(1, 6));
            if rep.pass {
                set.assume_certified();
            }
            Some(rep)
        } else {
            None
        };
        Ok(AutF2Closure { n, max_len, word, others: Arc::new(set), report })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn set(&self) -> &SymmetrizedSet {
        &self.others
    }

    pub fn certification(&self) -> Option<&ScReport> {
        self.report.as_ref()
    }

    pub fn descriptor(&self) -> SubgroupDescriptor {
        SubgroupDescriptor::NormalClosureOfWordSet(WordSetClosure {
            label: format!("eta(w) : eta in R_{}, eta != 1; n={}", self.max_len, self.n),
            set: Arc::clone(&self.others),
        })
    }

    /// Membership by Dehn's algorithm, which decides the word problem once
    /// the set is certified C′(1/6).
    pub fn contains(&self, z: &Word) -> Result<bool, GroupError> {
        if !self.others.is_certified() {
            return Err(GroupError::Refused("relator set is not certified C'(1/6)".into()));
        }
        let res = dehn_reduce(z, &self.others).map_err(|e| GroupError::Refused(e.to_string()))?;
        Ok(res.reduced_to_identity())
    }

    /// Non-membership of `w` itself.
    pub fn witness(&self) -> Result<AutF2Witness, GroupError> {
        let outcome = non_membership_certificate(&self.word, &self.others)
            .map_err(|e| GroupError::InvalidWitness(e.to_string()))?;
        Ok(AutF2Witness {
            n: self.n,
            max_len: self.max_len,
            word_len: self.word.len(),
            relators: self.others.len(),
            full_set_certified: self.report.as_ref().is_some_and(|r| r.pass),
            outcome,
        })
    }
}
