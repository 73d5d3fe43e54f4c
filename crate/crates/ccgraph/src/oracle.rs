//! Brute-force second-quantized reference implementations.
//!
//! Everything here works on raw occupation bitmasks with explicit
//! creation/annihilation strings and exhaustive enumeration, sharing no
//! logic with the lattice/graph/operator modules.  The main code paths are
//! tested against these; the `selfcheck` battery is also exposed to the CLI.
//! Costs are exponential, so callers keep K small.
//!
//! Phase convention: a unit mask is the determinant built by applying
//! creation operators in ascending orbital order to the vacuum, and
//! a+_p / a_p pick up (-1)^(number of occupied orbitals below p).

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::det::Det;
use crate::graph::GraphSpec;
use crate::integrals::IntegralSet;

/// A vector in Fock space over raw bitmasks (any particle number).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FockVector {
    coeffs: BTreeMap<u64, f64>,
}

impl FockVector {
    pub fn zero() -> FockVector {
        FockVector::default()
    }

    pub fn unit(mask: u64) -> FockVector {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(mask, 1.0);
        FockVector { coeffs }
    }

    pub fn get(&self, mask: u64) -> f64 {
        self.coeffs.get(&mask).copied().unwrap_or(0.0)
    }

    pub fn add_scaled(&mut self, other: &FockVector, w: f64) {
        for (&mask, &c) in &other.coeffs {
            let e = self.coeffs.entry(mask).or_insert(0.0);
            *e += w * c;
            if *e == 0.0 {
                self.coeffs.remove(&mask);
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_abs_difference(&self, other: &FockVector) -> f64 {
        let mut m = 0.0f64;
        for (&mask, &c) in &self.coeffs {
            m = m.max((c - other.get(mask)).abs());
        }
        for (&mask, &c) in &other.coeffs {
            m = m.max((c - self.get(mask)).abs());
        }
        m
    }
}

fn parity_below(mask: u64, p: u32) -> f64 {
    if (mask & ((1u64 << (p - 1)) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// a+_p applied to `v` (1-based orbital).
pub fn create(p: u32, v: &FockVector) -> FockVector {
    let bit = 1u64 << (p - 1);
    let mut out = FockVector::zero();
    for (mask, c) in v.iter() {
        if mask & bit == 0 {
            out.coeffs.insert(mask | bit, parity_below(mask, p) * c);
        }
    }
    out
}

/// a_p applied to `v` (1-based orbital).
pub fn annihilate(p: u32, v: &FockVector) -> FockVector {
    let bit = 1u64 << (p - 1);
    let mut out = FockVector::zero();
    for (mask, c) in v.iter() {
        if mask & bit != 0 {
            out.coeffs.insert(mask & !bit, parity_below(mask, p) * c);
        }
    }
    out
}

/// All N-orbital masks over K orbitals in ascending integer order.
pub fn basis_masks(k: u32, n: u32) -> Vec<u64> {
    (0..(1u64 << k)).filter(|m| m.count_ones() == n).collect()
}

fn ascending_bits(mut mask: u64) -> Vec<u32> {
    let mut v = Vec::new();
    while mask != 0 {
        v.push(mask.trailing_zeros() + 1);
        mask &= mask - 1;
    }
    v
}

/// The excitation string X_alpha relative to `reference`: the product of
/// a+_{p_i} a_{q_i} over matched pairs, with the annihilated orbitals
/// q_1 < q_2 < ... taken from reference \ alpha and the created orbitals
/// p_1 < p_2 < ... from alpha \ reference.
pub fn apply_excitation_string(reference: u64, alpha: u64, v: &FockVector) -> FockVector {
    let qs = ascending_bits(reference & !alpha);
    let ps = ascending_bits(alpha & !reference);
    assert_eq!(qs.len(), ps.len(), "alpha must have the reference's size");
    let mut out = v.clone();
    for (&q, &p) in qs.iter().zip(&ps) {
        out = create(p, &annihilate(q, &out));
    }
    out
}

/// The adjoint string X+_alpha: the product of a+_{q_i} a_{p_i} over the
/// same matched pairs.
pub fn apply_deexcitation_string(reference: u64, alpha: u64, v: &FockVector) -> FockVector {
    let qs = ascending_bits(reference & !alpha);
    let ps = ascending_bits(alpha & !reference);
    assert_eq!(qs.len(), ps.len(), "alpha must have the reference's size");
    let mut out = v.clone();
    for (&q, &p) in qs.iter().zip(&ps) {
        out = create(q, &annihilate(p, &out));
    }
    out
}

/// Matrix of X_alpha over `basis` (columns = inputs).
pub fn excitation_matrix(reference: u64, alpha: u64, basis: &[u64]) -> DMatrix<f64> {
    string_matrix(basis, |v| apply_excitation_string(reference, alpha, v))
}

/// Matrix of X+_alpha over `basis`.
pub fn deexcitation_matrix(reference: u64, alpha: u64, basis: &[u64]) -> DMatrix<f64> {
    string_matrix(basis, |v| apply_deexcitation_string(reference, alpha, v))
}

fn string_matrix(basis: &[u64], f: impl Fn(&FockVector) -> FockVector) -> DMatrix<f64> {
    let dim = basis.len();
    let mut m = DMatrix::zeros(dim, dim);
    for (j, &b) in basis.iter().enumerate() {
        let out = f(&FockVector::unit(b));
        for (i, &a) in basis.iter().enumerate() {
            m[(i, j)] = out.get(a);
        }
    }
    m
}

/// Hamiltonian matrix over `basis` from the literal operator sum
/// e_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q.
pub fn h_matrix(ints: &IntegralSet, basis: &[u64]) -> DMatrix<f64> {
    let k = ints.k();
    let dim = basis.len();
    let mut m = DMatrix::zeros(dim, dim);
    for (j, &b) in basis.iter().enumerate() {
        let unit = FockVector::unit(b);
        let mut out = FockVector::zero();
        out.add_scaled(&unit, ints.e_core());
        for p in 1..=k {
            for q in 1..=k {
                let hpq = ints.h(p, q);
                if hpq != 0.0 {
                    out.add_scaled(&create(p, &annihilate(q, &unit)), hpq);
                }
            }
        }
        for p in 1..=k {
            for q in 1..=k {
                for r in 1..=k {
                    for s in 1..=k {
                        let g = ints.g(p, q, r, s);
                        if g != 0.0 {
                            let w = annihilate(s, &annihilate(q, &unit));
                            out.add_scaled(&create(p, &create(r, &w)), 0.5 * g);
                        }
                    }
                }
            }
        }
        for (i, &a) in basis.iter().enumerate() {
            m[(i, j)] = out.get(a);
        }
    }
    m
}

fn xi_contains(refs: &[u64], m: usize, spec: &GraphSpec, label: u64) -> bool {
    let r0 = refs[m];
    if refs.contains(&label) {
        return false;
    }
    match spec {
        GraphSpec::Full => true,
        GraphSpec::Ranks { ranks } => ranks.contains(&(label & !r0).count_ones()),
        GraphSpec::Cas { k } => {
            let cas = if *k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
            label & !cas == 0
        }
        GraphSpec::Internal { r, s } => {
            let rm = r.iter().fold(0u64, |acc, &p| acc | 1u64 << (p - 1));
            let sm = s.iter().fold(0u64, |acc, &p| acc | 1u64 << (p - 1));
            (r0 & !label) & !rm == 0 && (label & !r0) & !sm == 0
        }
    }
}

/// Exhaustively enumerates the edges of every subgraph by testing all
/// ordered pairs of vertices, deriving the label from the pair and checking
/// label membership from the spec.  Returns (frame, source, label, target).
pub fn enumerate_edges(
    k: u32,
    refs: &[Det],
    spec: &GraphSpec,
) -> BTreeSet<(usize, Det, Det, Det)> {
    let n = refs[0].len();
    let masks = basis_masks(k, n);
    let refmasks: Vec<u64> = refs.iter().map(|d| d.0).collect();
    let mut out = BTreeSet::new();
    for (m, &r0) in refmasks.iter().enumerate() {
        let in_l = |x: u64| x == r0 || !refmasks.contains(&x);
        for &src in &masks {
            if !in_l(src) {
                continue;
            }
            for &tgt in &masks {
                if src == tgt || !in_l(tgt) {
                    continue;
                }
                let ann = src & !tgt;
                let cre = tgt & !src;
                if ann & !r0 != 0 || cre & r0 != 0 {
                    continue;
                }
                let label = (r0 & !ann) | cre;
                if xi_contains(&refmasks, m, spec, label) {
                    out.insert((m, Det(src), Det(label), Det(tgt)));
                }
            }
        }
    }
    out
}

/// Counts directed walks of exactly `len` steps from `from` to `to` over an
/// explicit edge set, by depth-first search.
pub fn count_walks_dfs(
    edges: &BTreeSet<(Det, Det)>,
    from: Det,
    to: Det,
    len: u32,
) -> u128 {
    let mut adj: BTreeMap<Det, Vec<Det>> = BTreeMap::new();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
    }
    fn go(adj: &BTreeMap<Det, Vec<Det>>, cur: Det, to: Det, left: u32) -> u128 {
        if left == 0 {
            return (cur == to) as u128;
        }
        adj.get(&cur)
            .map(|next| next.iter().map(|&nx| go(adj, nx, to, left - 1)).sum())
            .unwrap_or(0)
    }
    go(&adj, from, to, len)
}

/// One line of the agreement battery.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn float_check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("max |difference| = {worst:.3e} (tolerance {tol:.0e})"),
    }
}

/// Dense matrix of a graph-restricted operator over the frame's states.
fn module_matrix(
    g: &crate::graph::ExcitationGraph,
    m: usize,
    alpha: Det,
    states: &[Det],
    adjoint: bool,
) -> DMatrix<f64> {
    let dim = states.len();
    let mut out = DMatrix::zeros(dim, dim);
    for (j, &b) in states.iter().enumerate() {
        let v = crate::wavefn::Wavefn::unit(b);
        let w = if adjoint {
            crate::op::apply_deexcitation(g, m, alpha, &v)
        } else {
            crate::op::apply_excitation(g, m, alpha, &v)
        }
        .expect("label comes from the graph");
        for (i, &a) in states.iter().enumerate() {
            out[(i, j)] = w.coeff(a);
        }
    }
    out
}

/// Runs the full oracle agreement battery at size (k, n): anticommutation
/// and phase conventions of the raw strings, operator matrices against the
/// graph-restricted algebra, Hamiltonian matrix elements against the
/// literal operator sum on a seeded random integral set, and graph/walk
/// enumeration against the builder.  Intended for desk-scale sizes.
pub fn selfcheck(k: u32, n: u32, seed: u64) -> crate::error::Result<Vec<Check>> {
    use crate::error::Error;
    use crate::graph::ExcitationGraph;
    if k == 0 || k > 8 || n == 0 || n > k {
        return Err(Error::Config(format!(
            "selfcheck wants 1 <= N <= K <= 8, got K = {k}, N = {n}"
        )));
    }
    let mut checks = Vec::new();

    // {a_p, a+_q} = delta_pq on every bitmask
    let mut worst = 0.0f64;
    for mask in 0..(1u64 << k) {
        let v = FockVector::unit(mask);
        for p in 1..=k {
            for q in 1..=k {
                let mut lhs = annihilate(p, &create(q, &v));
                lhs.add_scaled(&create(q, &annihilate(p, &v)), 1.0);
                let mut want = FockVector::zero();
                if p == q {
                    want = v.clone();
                }
                worst = worst.max(lhs.max_abs_difference(&want));
            }
        }
    }
    checks.push(float_check("anticommutation", worst, 0.0));

    // the ascending string a+_{b1} ... a+_{bN} |vac> (rightmost acts
    // first) reproduces the unit coordinate with + sign
    let mut worst = 0.0f64;
    for &beta in &basis_masks(k, n) {
        let mut v = FockVector::unit(0);
        for p in ascending_bits(beta).into_iter().rev() {
            v = create(p, &v);
        }
        worst = worst.max(v.max_abs_difference(&FockVector::unit(beta)));
    }
    checks.push(float_check("ascending-creation-phase", worst, 0.0));

    let reference = Det(basis_masks(k, n)[0]);
    let g = ExcitationGraph::build(k, &[reference], GraphSpec::Full)?;
    let states: Vec<Det> = g.l_states(0);
    let basis: Vec<u64> = states.iter().map(|d| d.0).collect();

    // restricted operator algebra against raw strings, and adjoint =
    // transpose, label by label
    let mut worst_x = 0.0f64;
    let mut worst_adj = 0.0f64;
    for &alpha in g.xi(0) {
        let string = excitation_matrix(reference.0, alpha.0, &basis);
        let module = module_matrix(&g, 0, alpha, &states, false);
        worst_x = worst_x.max((&string - &module).abs().max());
        let dag_string = deexcitation_matrix(reference.0, alpha.0, &basis);
        let dag_module = module_matrix(&g, 0, alpha, &states, true);
        worst_adj = worst_adj
            .max((&dag_string - string.transpose()).abs().max())
            .max((&dag_string - dag_module).abs().max());
    }
    checks.push(float_check("excitation-operator-matrices", worst_x, 0.0));
    checks.push(float_check("adjoint-is-transpose", worst_adj, 0.0));

    // Hamiltonian matrix elements against the literal operator sum
    let ints = random_integrals(k, seed);
    let hm = h_matrix(&ints, &basis);
    let ham = crate::ham::Hamiltonian::new(ints);
    let mut worst = 0.0f64;
    let mut sym = 0.0f64;
    for (i, &a) in states.iter().enumerate() {
        for (j, &b) in states.iter().enumerate() {
            worst = worst.max((hm[(i, j)] - ham.matrix_element(a, b)).abs());
            sym = sym.max((hm[(i, j)] - hm[(j, i)]).abs());
        }
    }
    checks.push(float_check("hamiltonian-matrix-elements", worst, 1e-12));
    checks.push(float_check("hamiltonian-symmetric", sym, 1e-12));

    // one-particle reduction: N = 1 gives H = h + e_core I
    let ints = random_integrals(k, seed ^ 0x9e37_79b9);
    let hm = h_matrix(&ints, &basis_masks(k, 1));
    let mut worst = 0.0f64;
    for p in 1..=k {
        for q in 1..=k {
            let want = ints.h(p, q) + if p == q { ints.e_core() } else { 0.0 };
            worst = worst.max((hm[((p - 1) as usize, (q - 1) as usize)] - want).abs());
        }
    }
    checks.push(float_check("one-particle-reduction", worst, 0.0));

    // graph enumeration against the exhaustive double loop, single- and
    // two-reference where possible
    let mut ref_sets: Vec<Vec<Det>> = vec![vec![reference]];
    let masks = basis_masks(k, n);
    if masks.len() > 1 {
        ref_sets.push(vec![reference, Det(*masks.last().unwrap())]);
    }
    let specs = [
        GraphSpec::Full,
        GraphSpec::Ranks {
            ranks: vec![1, n.min(2)],
        },
    ];
    let mut edges_ok = true;
    let mut detail = String::from("edge sets equal");
    'outer: for refs in &ref_sets {
        for spec in &specs {
            let g = ExcitationGraph::build(k, refs, spec.clone())?;
            let mut built = BTreeSet::new();
            for m in 0..refs.len() {
                for (src, label, tgt) in g.edges(m) {
                    built.insert((m, src, label, tgt));
                }
            }
            let brute = enumerate_edges(k, refs, spec);
            if built != brute {
                edges_ok = false;
                detail = format!(
                    "mismatch at M = {}, spec {:?}: {} built vs {} enumerated",
                    refs.len(),
                    spec,
                    built.len(),
                    brute.len()
                );
                break 'outer;
            }
        }
    }
    checks.push(Check {
        name: "graph-edge-enumeration",
        passed: edges_ok,
        detail,
    });

    // walk counts: DFS over explicit edges against the closed recursion
    let g = ExcitationGraph::build(
        k,
        &[reference],
        GraphSpec::Ranks {
            ranks: vec![1, n.min(2)],
        },
    )?;
    let pairs: BTreeSet<(Det, Det)> = g.edges(0).into_iter().map(|(s, _, t)| (s, t)).collect();
    let mut walks_ok = true;
    let mut detail = String::from("walk counts equal up to length 3");
    'walks: for len in 0..=3 {
        let table = g.path_counts(0, len);
        for &d in &states {
            let dfs = count_walks_dfs(&pairs, reference, d, len);
            if table.get(&d).copied().unwrap_or(0) != dfs {
                walks_ok = false;
                detail = format!("length {len} to {d}: table vs DFS disagree");
                break 'walks;
            }
        }
    }
    checks.push(Check {
        name: "walk-counts",
        passed: walks_ok,
        detail,
    });

    Ok(checks)
}

fn random_integrals(k: u32, seed: u64) -> IntegralSet {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
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
