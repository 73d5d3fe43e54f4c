//! Sparse wavefunctions and amplitude vectors.
//!
//! Coefficients are always stored against one fixed global phase convention:
//! basis state gamma is the product of creation operators for the orbitals of
//! gamma in ascending order, applied to the vacuum.  Reference-relative
//! ("frame view") coefficients differ from these by the gauge phase of the
//! frame; conversions happen at the operator layer, never here.

use std::collections::BTreeMap;

use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::det::Det;

/// Sparse vector over determinants.  Exact zeros are never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Wavefn {
    coeffs: BTreeMap<Det, f64>,
}

impl Wavefn {
    pub fn new() -> Wavefn {
        Wavefn::default()
    }

    /// The basis state `det` with coefficient one.
    pub fn unit(det: Det) -> Wavefn {
        let mut w = Wavefn::new();
        w.set(det, 1.0);
        w
    }

    pub fn from_pairs<I: IntoIterator<Item = (Det, f64)>>(pairs: I) -> Wavefn {
        let mut w = Wavefn::new();
        for (d, c) in pairs {
            w.add(d, c);
        }
        w
    }

    pub fn coeff(&self, det: Det) -> f64 {
        self.coeffs.get(&det).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, det: Det, c: f64) {
        if c == 0.0 {
            self.coeffs.remove(&det);
        } else {
            self.coeffs.insert(det, c);
        }
    }

    pub fn add(&mut self, det: Det, c: f64) {
        let v = self.coeff(det) + c;
        self.set(det, v);
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Entries in ascending determinant order.
    pub fn iter(&self) -> impl Iterator<Item = (Det, f64)> + '_ {
        self.coeffs.iter().map(|(&d, &c)| (d, c))
    }

    pub fn dets(&self) -> impl Iterator<Item = Det> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn scale(&mut self, s: f64) {
        if s == 0.0 {
            self.coeffs.clear();
            return;
        }
        for c in self.coeffs.values_mut() {
            *c *= s;
        }
    }

    /// self += a * other.
    pub fn axpy(&mut self, a: f64, other: &Wavefn) {
        for (d, c) in other.iter() {
            self.add(d, a * c);
        }
    }

    pub fn dot(&self, other: &Wavefn) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .iter()
            .map(|(d, c)| c * large.coeff(d))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Drops entries with |c| <= eps.
    pub fn prune(&mut self, eps: f64) {
        self.coeffs.retain(|_, c| c.abs() > eps);
    }
}

impl FromIterator<(Det, f64)> for Wavefn {
    fn from_iter<I: IntoIterator<Item = (Det, f64)>>(iter: I) -> Wavefn {
        Wavefn::from_pairs(iter)
    }
}

/// Amplitude vector keyed by excitation label, in the frame view of one
/// reference.  Serialized as an ordered list of `{alpha, value}` entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Amplitudes {
    values: BTreeMap<Det, f64>,
}

#[derive(Serialize, Deserialize)]
struct AmplitudeEntry {
    alpha: Det,
    value: f64,
}

/// Amplitudes tagged with their 1-based reference index, the on-disk schema:
/// `{"ref":1,"t":[{"alpha":[1,4],"value":-0.03}, ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSet {
    #[serde(rename = "ref")]
    pub reference: usize,
    pub t: Amplitudes,
}

impl Amplitudes {
    pub fn new() -> Amplitudes {
        Amplitudes::default()
    }

    pub fn get(&self, label: Det) -> f64 {
        self.values.get(&label).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, label: Det, v: f64) {
        if v == 0.0 {
            self.values.remove(&label);
        } else {
            self.values.insert(label, v);
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Det, f64)> + '_ {
        self.values.iter().map(|(&d, &v)| (d, v))
    }

    /// Coefficients in the order of `labels`; absent labels read as zero.
    pub fn to_dense(&self, labels: &[Det]) -> Vec<f64> {
        labels.iter().map(|&l| self.get(l)).collect()
    }

    pub fn from_dense(labels: &[Det], values: &[f64]) -> Amplitudes {
        assert_eq!(labels.len(), values.len());
        let mut a = Amplitudes::new();
        for (&l, &v) in labels.iter().zip(values) {
            a.set(l, v);
        }
        a
    }

    pub fn norm(&self) -> f64 {
        self.values.values().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl FromIterator<(Det, f64)> for Amplitudes {
    fn from_iter<I: IntoIterator<Item = (Det, f64)>>(iter: I) -> Amplitudes {
        let mut a = Amplitudes::new();
        for (d, v) in iter {
            a.set(d, v);
        }
        a
    }
}

impl Serialize for Amplitudes {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.values.len()))?;
        for (&alpha, &value) in &self.values {
            seq.serialize_element(&AmplitudeEntry { alpha, value })?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Amplitudes {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Amplitudes, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Amplitudes;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a sequence of {label, value} entries")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Amplitudes, A::Error> {
                let mut a = Amplitudes::new();
                while let Some(e) = seq.next_element::<AmplitudeEntry>()? {
                    a.set(e.alpha, e.value);
                }
                Ok(a)
            }
        }
        deserializer.deserialize_seq(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(orbs: &[u32]) -> Det {
        Det::from_orbitals(orbs, 64).unwrap()
    }

    #[test]
    fn zero_entries_are_dropped() {
        let mut w = Wavefn::unit(det(&[1, 2]));
        w.add(det(&[1, 2]), -1.0);
        assert!(w.is_empty());
        assert_eq!(w.coeff(det(&[1, 2])), 0.0);
        w.set(det(&[3]), 0.0);
        assert!(w.is_empty());
    }

    #[test]
    fn linear_algebra() {
        let a = Wavefn::from_pairs([(det(&[1, 2]), 1.0), (det(&[1, 3]), 2.0)]);
        let b = Wavefn::from_pairs([(det(&[1, 3]), 0.5), (det(&[2, 3]), -1.0)]);
        assert_eq!(a.dot(&b), 1.0);
        assert_eq!(b.dot(&a), 1.0);
        let mut c = a.clone();
        c.axpy(2.0, &b);
        assert_eq!(c.coeff(det(&[1, 2])), 1.0);
        assert_eq!(c.coeff(det(&[1, 3])), 3.0);
        assert_eq!(c.coeff(det(&[2, 3])), -2.0);
        c.scale(-1.0);
        assert_eq!(c.coeff(det(&[1, 3])), -3.0);
        assert!((a.norm() - 5.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn prune_threshold() {
        let mut w = Wavefn::from_pairs([(det(&[1]), 1e-13), (det(&[2]), 0.2)]);
        w.prune(1e-12);
        assert_eq!(w.len(), 1);
        assert_eq!(w.coeff(det(&[2])), 0.2);
    }

    #[test]
    fn iteration_is_ordered() {
        let w = Wavefn::from_pairs([(det(&[2, 3]), 1.0), (det(&[1, 2]), 2.0), (det(&[1, 4]), 3.0)]);
        let dets: Vec<Det> = w.dets().collect();
        let mut sorted = dets.clone();
        sorted.sort();
        assert_eq!(dets, sorted);
    }

    #[test]
    fn amplitudes_dense_round_trip() {
        let labels = vec![det(&[1, 3]), det(&[1, 4]), det(&[3, 4])];
        let v = vec![0.1, 0.0, -0.3];
        let a = Amplitudes::from_dense(&labels, &v);
        assert_eq!(a.len(), 2); // exact zero dropped
        assert_eq!(a.to_dense(&labels), v);
    }

    #[test]
    fn amplitudes_json_round_trip() {
        let a: Amplitudes = [(det(&[1, 3]), 0.25), (det(&[3, 4]), -0.5)]
            .into_iter()
            .collect();
        let set = AmplitudeSet {
            reference: 1,
            t: a.clone(),
        };
        let json = serde_json::to_string(&set).unwrap();
        assert_eq!(
            json,
            r#"{"ref":1,"t":[{"alpha":[1,3],"value":0.25},{"alpha":[3,4],"value":-0.5}]}"#
        );
        let back: AmplitudeSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
    }
}
