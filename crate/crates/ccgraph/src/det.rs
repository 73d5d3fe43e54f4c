//! Slater determinants as subsets of a finite orbital set, and the
//! reference-relative lattice algebra on them.
//!
//! A determinant is an N-element subset of the orbital set {1,...,K}, stored
//! as a single 64-bit mask (bit i-1 = orbital i).  All order-theoretic
//! operations (join, meet, complement, rank) are relative to a reference
//! determinant 0_m: the occupied part of a determinant is its intersection
//! with the reference, the virtual part is the rest.  With
//!
//!   alpha v beta = (occ(alpha) n occ(beta)) u (virt(alpha) u virt(beta))
//!   alpha ^ beta = (occ(alpha) u occ(beta)) u (virt(alpha) n virt(beta))
//!
//! and set complement, the N-subsets embed into a Boolean algebra whose
//! bottom is the reference itself.

use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported orbital count (single machine word).
pub const MAX_ORBITALS: u32 = 64;

/// A determinant: a subset of the orbital set, as a bitmask.
///
/// Serializes as a sorted list of 1-based orbital indices, e.g. `[1,3,5]`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Det(pub u64);

impl Det {
    pub const EMPTY: Det = Det(0);

    /// Builds a determinant from 1-based orbital indices.  Duplicates and
    /// indices outside 1..=k are rejected.
    pub fn from_orbitals(orbitals: &[u32], k: u32) -> Result<Det> {
        if k > MAX_ORBITALS {
            return Err(Error::InvalidOrbital(format!(
                "K = {k} exceeds the supported maximum {MAX_ORBITALS}"
            )));
        }
        let mut bits = 0u64;
        for &p in orbitals {
            if p == 0 || p > k {
                return Err(Error::InvalidOrbital(format!(
                    "orbital {p} outside 1..={k}"
                )));
            }
            let b = 1u64 << (p - 1);
            if bits & b != 0 {
                return Err(Error::InvalidOrbital(format!("orbital {p} listed twice")));
            }
            bits |= b;
        }
        Ok(Det(bits))
    }

    /// Sorted 1-based orbital indices.
    pub fn orbitals(self) -> Vec<u32> {
        let mut v = Vec::with_capacity(self.len() as usize);
        let mut bits = self.0;
        while bits != 0 {
            let p = bits.trailing_zeros();
            v.push(p + 1);
            bits &= bits - 1;
        }
        v
    }

    pub fn contains(self, orbital: u32) -> bool {
        orbital >= 1 && orbital <= 64 && self.0 & (1u64 << (orbital - 1)) != 0
    }

    /// Number of orbitals in the set.
    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Det) -> Det {
        Det(self.0 | other.0)
    }

    pub fn intersection(self, other: Det) -> Det {
        Det(self.0 & other.0)
    }

    pub fn difference(self, other: Det) -> Det {
        Det(self.0 & !other.0)
    }

    pub fn is_subset(self, other: Det) -> bool {
        self.0 & !other.0 == 0
    }

    /// Hamming distance |self symdiff other|.
    pub fn hamming(self, other: Det) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

impl fmt::Debug for Det {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Det{:?}", self.orbitals())
    }
}

impl fmt::Display for Det {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let orbs = self.orbitals();
        write!(f, "[")?;
        for (i, p) in orbs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

impl Serialize for Det {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let orbs = self.orbitals();
        let mut seq = serializer.serialize_seq(Some(orbs.len()))?;
        for p in orbs {
            seq.serialize_element(&p)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Det {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Det, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Det;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a list of 1-based orbital indices")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Det, A::Error> {
                let mut orbs = Vec::new();
                while let Some(p) = seq.next_element::<u32>()? {
                    orbs.push(p);
                }
                Det::from_orbitals(&orbs, MAX_ORBITALS).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_seq(V)
    }
}

/// All orbitals 1..=k as a mask.
pub fn full_mask(k: u32) -> u64 {
    if k == 64 {
        !0u64
    } else {
        (1u64 << k) - 1
    }
}

/// A reference determinant together with its position in the reference list.
///
/// Every lattice operation below is taken relative to such a frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Frame {
    k: u32,
    n: u32,
    reference: Det,
    /// 0-based position of this reference in the multi-reference list.
    index: usize,
}

impl Frame {
    pub fn new(k: u32, reference: Det, index: usize) -> Result<Frame> {
        if k > MAX_ORBITALS {
            return Err(Error::InvalidOrbital(format!(
                "K = {k} exceeds the supported maximum {MAX_ORBITALS}"
            )));
        }
        if reference.0 & !full_mask(k) != 0 {
            return Err(Error::InvalidOrbital(format!(
                "reference {reference} uses orbitals above K = {k}"
            )));
        }
        Ok(Frame {
            k,
            n: reference.len(),
            reference,
            index,
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Electron count N = |0_m|.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn reference(&self) -> Det {
        self.reference
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Occupied part: alpha n 0_m.
    pub fn occ(&self, alpha: Det) -> Det {
        alpha.intersection(self.reference)
    }

    /// Virtual part: alpha \ 0_m.
    pub fn virt(&self, alpha: Det) -> Det {
        alpha.difference(self.reference)
    }

    /// Excitation rank rk(alpha) = |virt(alpha)| = Hamming(0_m, alpha)/2 for states.
    pub fn rank(&self, alpha: Det) -> u32 {
        self.virt(alpha).len()
    }

    /// Reference-relative partial order: alpha <= beta iff
    /// occ(beta) ⊆ occ(alpha) and virt(alpha) ⊆ virt(beta).
    pub fn precedes(&self, alpha: Det, beta: Det) -> bool {
        self.occ(beta).is_subset(self.occ(alpha)) && self.virt(alpha).is_subset(self.virt(beta))
    }

    /// Join: (occ n occ) u (virt u virt).
    pub fn join(&self, alpha: Det, beta: Det) -> Det {
        self.occ(alpha)
            .intersection(self.occ(beta))
            .union(self.virt(alpha).union(self.virt(beta)))
    }

    /// Meet: (occ u occ) u (virt n virt).
    pub fn meet(&self, alpha: Det, beta: Det) -> Det {
        self.occ(alpha)
            .union(self.occ(beta))
            .union(self.virt(alpha).intersection(self.virt(beta)))
    }

    /// Orthocomplement: the set complement within {1..K}.
    pub fn complement(&self, alpha: Det) -> Det {
        Det(!alpha.0 & full_mask(self.k))
    }

    /// Compatibility condition for composing two excitations / attaching a
    /// label to a source state: occupied parts jointly exhaust the reference
    /// and virtual parts are disjoint.
    pub fn compatible(&self, alpha: Det, beta: Det) -> bool {
        self.occ(alpha).union(self.occ(beta)) == self.reference
            && self.virt(alpha).intersection(self.virt(beta)).is_empty()
    }

    /// Solves alpha v beta = gamma for the unique label alpha, given
    /// beta <= gamma.  Returns `NotComparable` otherwise.
    pub fn solve_excitation(&self, beta: Det, gamma: Det) -> Result<Det> {
        if !self.precedes(beta, gamma) {
            return Err(Error::NotComparable(format!(
                "{beta} does not precede {gamma} relative to {}",
                self.reference
            )));
        }
        Ok(self.meet(self.complement(beta), gamma))
    }

    /// Orbital replacement pairs of a label: the k-th lowest annihilated
    /// occupied orbital is matched with the k-th lowest created virtual.
    fn replacement_pairs(&self, label: Det) -> Vec<(u32, u32)> {
        let removed = self.reference.difference(label).orbitals();
        let added = self.virt(label).orbitals();
        debug_assert_eq!(removed.len(), added.len());
        removed.into_iter().zip(added).collect()
    }

    /// Sign sigma(alpha, beta) relating X_alpha Phi_beta to Phi_{alpha v beta}
    /// in the reference-adapted gauge: the parity of crossings between the
    /// orbital replacement matchings of alpha and beta.  Equivalently, list
    /// every created orbital ordered by its annihilated partner and take the
    /// sign of the permutation that sorts that list.
    ///
    /// Requires both arguments to be N-element states with disjoint virtual
    /// parts; overlapping virtual parts are a Pauli violation.
    pub fn sign_sigma(&self, alpha: Det, beta: Det) -> Result<i32> {
        if !self.virt(alpha).intersection(self.virt(beta)).is_empty() {
            return Err(Error::PauliViolation(format!(
                "virt{} and virt{} intersect",
                alpha, beta
            )));
        }
        if alpha.len() != self.n || beta.len() != self.n {
            return Err(Error::InvalidOrbital(format!(
                "sign is defined for {}-electron determinants, got {} and {}",
                self.n,
                alpha.len(),
                beta.len()
            )));
        }
        let pa = self.replacement_pairs(alpha);
        let pb = self.replacement_pairs(beta);
        let mut crossings = 0u32;
        for &(qa, ca) in &pa {
            for &(qb, cb) in &pb {
                if (qa < qb) != (ca < cb) && qa != qb {
                    crossings += 1;
                }
            }
        }
        Ok(if crossings % 2 == 0 { 1 } else { -1 })
    }

    /// Phase of a determinant in the reference-adapted gauge relative to the
    /// plain ascending-product convention: build the reference tuple with
    /// each annihilated orbital replaced in place by its created partner,
    /// and take the parity of the inversions of the result.
    pub fn gauge_phase(&self, det: Det) -> i32 {
        debug_assert_eq!(det.len(), self.n);
        let pairs = self.replacement_pairs(det);
        let mut tuple = Vec::with_capacity(self.n as usize);
        let mut next = 0usize;
        for o in self.reference.orbitals() {
            if det.contains(o) {
                tuple.push(o);
            } else {
                tuple.push(pairs[next].1);
                next += 1;
            }
        }
        let mut inversions = 0u32;
        for i in 0..tuple.len() {
            for j in i + 1..tuple.len() {
                if tuple[i] > tuple[j] {
                    inversions += 1;
                }
            }
        }
        if inversions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Full matrix-element sign of X_alpha between global-basis determinants:
    /// gauge_phase(beta) * gauge_phase(alpha v beta) * sigma(alpha, beta).
    pub fn excitation_sign(&self, alpha: Det, beta: Det) -> Result<i32> {
        let sigma = self.sign_sigma(alpha, beta)?;
        if !self.compatible(alpha, beta) {
            return Err(Error::PauliViolation(format!(
                "{alpha} and {beta} are not compatible in frame {}",
                self.reference()
            )));
        }
        let gamma = self.join(alpha, beta);
        Ok(self.gauge_phase(beta) * self.gauge_phase(gamma) * sigma)
    }
}

/// Iterates over all n-element subsets of {1..k} in ascending mask order
/// (Gosper's hack).
pub fn subsets(k: u32, n: u32) -> impl Iterator<Item = Det> {
    let mask = full_mask(k);
    let mut cur = if n == 0 {
        Some(0u64)
    } else if n <= k {
        Some(full_mask(n))
    } else {
        None
    };
    std::iter::from_fn(move || {
        let bits = cur?;
        let det = Det(bits);
        cur = if bits == 0 {
            None
        } else {
            let c = bits & bits.wrapping_neg();
            let r = bits + c;
            let next = (((r ^ bits) >> 2) / c) | r;
            if next & !mask != 0 {
                None
            } else {
                Some(next)
            }
        };
        Some(det)
    })
}

/// Binomial coefficient in u128, erroring on overflow.
pub fn choose(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc
            .checked_mul((n - i) as u128)
            .expect("binomial overflow") / (i as u128 + 1);
    }
    acc
}
