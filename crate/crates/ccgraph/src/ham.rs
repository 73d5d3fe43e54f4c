//! Second-quantized Hamiltonians over the N-electron determinant basis.
//!
//! The Hamiltonian is frame-free: matrix elements follow the Slater-Condon
//! rules in the global (ascending-creation) phase convention, so it acts on
//! any wavefunction regardless of which excitation graph produced it.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::det::{choose, subsets, Det};
use crate::error::{Error, Result};
use crate::graph::ExcitationGraph;
use crate::integrals::IntegralSet;
use crate::op;
use crate::wavefn::{Amplitudes, Wavefn};

/// Default cap on dense matrix dimension, overridable via CCGRAPH_MAX_DIM.
pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Reads the dense-dimension cap from the environment, falling back to
/// [`DEFAULT_DENSE_CAP`] when unset or unparsable.
pub fn dense_cap() -> usize {
    std::env::var("CCGRAPH_MAX_DIM")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

/// H = e_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    ints: IntegralSet,
}

impl Hamiltonian {
    pub fn new(ints: IntegralSet) -> Hamiltonian {
        Hamiltonian { ints }
    }

    pub fn ints(&self) -> &IntegralSet {
        &self.ints
    }

    pub fn k(&self) -> u32 {
        self.ints.k()
    }

    /// <a|H|b> by the Slater-Condon rules.
    pub fn matrix_element(&self, a: Det, b: Det) -> f64 {
        if a.len() != b.len() {
            return 0.0;
        }
        match a.hamming(b) {
            0 => self.diagonal(a),
            2 => self.single(a, b),
            4 => self.double(a, b),
            _ => 0.0,
        }
    }

    fn diagonal(&self, a: Det) -> f64 {
        let orbs = a.orbitals();
        let mut v = self.ints.e_core();
        for (i, &p) in orbs.iter().enumerate() {
            v += self.ints.h(p, p);
            for &q in &orbs[i + 1..] {
                v += self.ints.g(p, p, q, q) - self.ints.g(p, q, q, p);
            }
        }
        v
    }

    fn single(&self, a: Det, b: Det) -> f64 {
        let m = b.difference(a).orbitals()[0];
        let p = a.difference(b).orbitals()[0];
        let mut v = self.ints.h(p, m);
        for q in a.intersection(b).orbitals() {
            v += self.ints.g(p, m, q, q) - self.ints.g(p, q, q, m);
        }
        occupied_between(b, m, p) * v
    }

    fn double(&self, a: Det, b: Det) -> f64 {
        let ms = b.difference(a).orbitals();
        let ps = a.difference(b).orbitals();
        let (m1, m2) = (ms[0], ms[1]);
        let (p1, p2) = (ps[0], ps[1]);
        let sign1 = occupied_between(b, m1, p1);
        let b1 = Det(b.0 & !(1u64 << (m1 - 1)) | 1u64 << (p1 - 1));
        let sign2 = occupied_between(b1, m2, p2);
        sign1
            * sign2
            * (self.ints.g(p1, m1, p2, m2) - self.ints.g(p2, m1, p1, m2))
    }

    /// Dense matrix over all N-electron determinants in ascending mask
    /// order.  Fails with [`Error::SizeLimit`] when the dimension exceeds
    /// `cap` (see [`dense_cap`]).
    pub fn assemble_dense(&self, n: u32, cap: usize) -> Result<(Vec<Det>, DMatrix<f64>)> {
        let dim_exact = choose(self.k() as u64, n as u64);
        if dim_exact > cap as u128 {
            return Err(Error::SizeLimit {
                dim: dim_exact.min(usize::MAX as u128) as usize,
                cap,
            });
        }
        let basis: Vec<Det> = subsets(self.k(), n).collect();
        let dim = basis.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (j, &b) in basis.iter().enumerate() {
            for (i, &a) in basis.iter().enumerate() {
                m[(i, j)] = self.matrix_element(a, b);
            }
        }
        Ok((basis, m))
    }

    /// All determinants connected to `det` by H (distance <= 2), plus `det`
    /// itself, in a fixed deterministic order.
    fn connected(&self, det: Det) -> Vec<Det> {
        let k = self.k();
        let occ = det.orbitals();
        let virt = Det(full_mask(k) & !det.0).orbitals();
        let mut out = Vec::with_capacity(1 + occ.len() * virt.len());
        out.push(det);
        for &m in &occ {
            for &p in &virt {
                out.push(Det(det.0 & !(1u64 << (m - 1)) | 1u64 << (p - 1)));
            }
        }
        for i in 0..occ.len() {
            for j in i + 1..occ.len() {
                for x in 0..virt.len() {
                    for y in x + 1..virt.len() {
                        let removed = det.0 & !(1u64 << (occ[i] - 1)) & !(1u64 << (occ[j] - 1));
                        out.push(Det(
                            removed | 1u64 << (virt[x] - 1) | 1u64 << (virt[y] - 1),
                        ));
                    }
                }
            }
        }
        out
    }

    /// One matrix row dotted with psi: sum over sources connected to
    /// `target`, in the fixed order of [`Hamiltonian::connected`], so the
    /// floating-point result is independent of threading.
    fn row_dot(&self, target: Det, psi: &Wavefn) -> f64 {
        let mut v = 0.0;
        for src in self.connected(target) {
            let c = psi.coeff(src);
            if c != 0.0 {
                v += self.matrix_element(target, src) * c;
            }
        }
        v
    }

    fn target_set(&self, psi: &Wavefn) -> Vec<Det> {
        let mut targets = BTreeSet::new();
        for (src, _) in psi.iter() {
            targets.extend(self.connected(src));
        }
        targets.into_iter().collect()
    }

    /// H psi, sequential.
    pub fn apply_seq(&self, psi: &Wavefn) -> Wavefn {
        self.target_set(psi)
            .into_iter()
            .map(|t| (t, self.row_dot(t, psi)))
            .collect()
    }

    /// H psi, row-parallel over targets.  Identical to [`apply_seq`]
    /// bitwise: each row sum has a fixed sequential order.
    ///
    /// [`apply_seq`]: Hamiltonian::apply_seq
    #[cfg(feature = "parallel")]
    pub fn apply(&self, psi: &Wavefn) -> Wavefn {
        self.target_set(psi)
            .into_par_iter()
            .map(|t| (t, self.row_dot(t, psi)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn apply(&self, psi: &Wavefn) -> Wavefn {
        self.apply_seq(psi)
    }
}

fn full_mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Parity (-1)^(occupied orbitals of det strictly between m and p).
fn occupied_between(det: Det, m: u32, p: u32) -> f64 {
    let (lo, hi) = if m < p { (m, p) } else { (p, m) };
    let window = if hi - lo <= 1 {
        0
    } else {
        let mask = ((1u64 << (hi - 1)) - 1) & !((1u64 << lo) - 1);
        (det.0 & mask).count_ones()
    };
    if window % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Highest commutator order appearing in the nested expansion of
/// e^{-T} H e^{T} for a two-body H: the series is exact at order 4.
pub const BCH_ORDER: u32 = 4;

/// The j-th scaled commutator term (1/j!) [H, T]_(j) psi, expanded as
/// sum_i (-1)^(j-i) C(j,i) T^(j-i) H T^i psi.
pub fn commutator_term(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    h: &Hamiltonian,
    psi: &Wavefn,
    j: u32,
) -> Result<Wavefn> {
    let mut out = Wavefn::new();
    let mut t_i_psi = psi.clone();
    for i in 0..=j {
        if i > 0 {
            t_i_psi = op::apply_cluster(g, m, t, &t_i_psi)?;
        }
        let mut term = h.apply(&t_i_psi);
        for _ in 0..(j - i) {
            term = op::apply_cluster(g, m, t, &term)?;
        }
        let sign = if (j - i) % 2 == 0 { 1.0 } else { -1.0 };
        out.axpy(sign * binomial(j, i), &term);
    }
    out.scale(1.0 / factorial(j));
    out.prune(0.0);
    Ok(out)
}

/// e^{-T} H e^{T} psi via the terminating commutator expansion
/// sum_{j=0}^{4} (1/j!) [H, T]_(j) psi.
pub fn similarity_apply(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    h: &Hamiltonian,
    psi: &Wavefn,
) -> Result<Wavefn> {
    let mut out = Wavefn::new();
    for j in 0..=BCH_ORDER {
        out.axpy(1.0, &commutator_term(g, m, t, h, psi, j)?);
    }
    out.prune(0.0);
    Ok(out)
}

/// Same transform as [`similarity_apply`] but by direct composition
/// e^{-T}(H(e^{T} psi)); used as an independent cross-check.
pub fn similarity_apply_naive(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    h: &Hamiltonian,
    psi: &Wavefn,
) -> Result<Wavefn> {
    let expanded = op::exp_apply(g, m, t, psi)?;
    let ht = h.apply(&expanded);
    let neg: Amplitudes = t.iter().map(|(a, v)| (a, -v)).collect();
    op::exp_apply(g, m, &neg, &ht)
}

fn binomial(n: u32, k: u32) -> f64 {
    choose(n as u64, k as u64) as f64
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|x| x as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphSpec;
    use crate::integrals::{hubbard_chain, pairing_model};
    use crate::oracle;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_ints(k: u32, rng: &mut ChaCha8Rng) -> IntegralSet {
        let mut ints = IntegralSet::new(k);
        ints.set_e_core(rng.gen_range(-1.0..1.0));
        for p in 1..=k {
            for q in 1..=p {
                ints.set_h(p, q, rng.gen_range(-1.0..1.0)).unwrap();
            }
        }
        for p in 1..=k {
            for q in 1..=p {
                for r in 1..=p {
                    let s_max = if r == p { q } else { r };
                    for s in 1..=s_max {
                        ints.set_g(p, q, r, s, rng.gen_range(-1.0..1.0)).unwrap();
                    }
                }
            }
        }
        ints
    }

    fn dense_vs_oracle(ints: &IntegralSet, n: u32) {
        let h = Hamiltonian::new(ints.clone());
        let (basis, m) = h.assemble_dense(n, 5000).unwrap();
        let masks: Vec<u64> = basis.iter().map(|d| d.0).collect();
        let want = oracle::h_matrix(ints, &masks);
        let diff = (&m - &want).abs().max();
        assert!(diff < 1e-12, "n={n}: max deviation {diff:e}");
    }

    #[test]
    fn slater_condon_matches_string_oracle() {
        dense_vs_oracle(&pairing_model(3, 1.0, 0.4), 2);
        dense_vs_oracle(&hubbard_chain(3, 1.0, 2.0), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ints = random_ints(5, &mut rng);
        for n in 1..=4 {
            dense_vs_oracle(&ints, n);
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let h = Hamiltonian::new(pairing_model(3, 1.0, 0.4));
        match h.assemble_dense(3, 10) {
            Err(Error::SizeLimit { dim, cap }) => {
                assert_eq!(dim, 20);
                assert_eq!(cap, 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn apply_matches_dense_and_seq() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ints = random_ints(6, &mut rng);
        let h = Hamiltonian::new(ints);
        let (basis, m) = h.assemble_dense(3, 5000).unwrap();
        for _ in 0..5 {
            let psi: Wavefn = basis
                .iter()
                .map(|&d| (d, rng.gen_range(-1.0..1.0)))
                .collect();
            let applied = h.apply(&psi);
            let seq = h.apply_seq(&psi);
            // parallel and sequential paths are the same row sums
            for &d in &basis {
                assert_eq!(applied.coeff(d), seq.coeff(d));
            }
            let x = nalgebra::DVector::from_iterator(
                basis.len(),
                basis.iter().map(|&d| psi.coeff(d)),
            );
            let y = &m * x;
            for (i, &d) in basis.iter().enumerate() {
                assert!((applied.coeff(d) - y[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_on_sparse_vector_stays_sparse() {
        let h = Hamiltonian::new(pairing_model(4, 1.0, 0.2));
        let psi = Wavefn::unit(Det::from_orbitals(&[1, 2], 8).unwrap());
        let out = h.apply(&psi);
        // pairing H connects seniority-zero states only
        for (d, c) in out.iter() {
            if c != 0.0 {
                let orbs = d.orbitals();
                assert_eq!(orbs[1], orbs[0] + 1);
                assert_eq!(orbs[0] % 2, 1);
            }
        }
    }

    #[test]
    fn similarity_transform_matches_naive_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let k = 5;
        let ref0 = Det::from_orbitals(&[1, 2], k).unwrap();
        let g = ExcitationGraph::build(k, &[ref0], GraphSpec::Full).unwrap();
        let h = Hamiltonian::new(random_ints(k, &mut rng));
        for _ in 0..5 {
            let t: Amplitudes = g
                .xi(0)
                .iter()
                .map(|&a| (a, rng.gen_range(-0.2..0.2)))
                .collect();
            let psi: Wavefn = g
                .l_states(0)
                .into_iter()
                .map(|d| (d, rng.gen_range(-1.0..1.0)))
                .collect();
            let bch = similarity_apply(&g, 0, &t, &h, &psi).unwrap();
            let naive = similarity_apply_naive(&g, 0, &t, &h, &psi).unwrap();
            let mut diff = bch.clone();
            diff.axpy(-1.0, &naive);
            assert!(
                diff.norm() <= 1e-10 * naive.norm().max(1.0),
                "deviation {:e}",
                diff.norm()
            );
        }
    }

    #[test]
    fn commutator_series_terminates_at_fourth_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let k = 6;
        let ref0 = Det::from_orbitals(&[1, 2], k).unwrap();
        let g = ExcitationGraph::build(k, &[ref0], GraphSpec::Full).unwrap();
        let h = Hamiltonian::new(random_ints(k, &mut rng));
        let t: Amplitudes = g
            .xi(0)
            .iter()
            .map(|&a| (a, rng.gen_range(-0.5..0.5)))
            .collect();
        let psi = Wavefn::unit(ref0);
        let j5 = commutator_term(&g, 0, &t, &h, &psi, 5).unwrap();
        assert!(j5.norm() <= 1e-13, "order-5 term {:e}", j5.norm());
    }

    #[test]
    fn zero_amplitudes_reduce_to_plain_h() {
        let k = 5;
        let ref0 = Det::from_orbitals(&[1, 2], k).unwrap();
        let g = ExcitationGraph::build(k, &[ref0], GraphSpec::Full).unwrap();
        let h = Hamiltonian::new(pairing_model(2, 1.0, 0.3).direct_sum(&IntegralSet::new(1)));
        let t = Amplitudes::new();
        let psi = Wavefn::unit(ref0);
        let a = similarity_apply(&g, 0, &t, &h, &psi).unwrap();
        let b = h.apply(&psi);
        let mut diff = a.clone();
        diff.axpy(-1.0, &b);
        assert!(diff.norm() < 1e-14);
    }
}
