//! Single-reference solvers: full diagonalization, projected CI, and the
//! graph-truncated coupled-cluster Newton iteration.
//!
//! All eigenvectors follow one sign convention: the first component above
//! 1e-8 in basis order is made positive, so repeated runs and different
//! backends produce identical reports.

use nalgebra::{DMatrix, DVector};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::det::Det;
use crate::error::{Error, Result};
use crate::graph::ExcitationGraph;
use crate::ham::{similarity_apply, Hamiltonian};
use crate::op;
use crate::wavefn::{Amplitudes, Wavefn};

/// Full spectrum over the N-electron sector.
#[derive(Clone, Debug)]
pub struct FciResult {
    /// All eigenvalues, ascending.
    pub energies: Vec<f64>,
    /// The first `nroots` eigenvectors as wavefunctions over determinants.
    pub roots: Vec<Wavefn>,
    pub dim: usize,
}

/// Lowest eigenpair of H restricted to span{reference} + span{labels}.
#[derive(Clone, Debug)]
pub struct CiResult {
    pub energy: f64,
    pub wavefn: Wavefn,
    /// Coefficient of the reference in the normalized ground state.
    pub c0: f64,
    pub dim: usize,
}

pub(crate) fn sign_fix(v: &mut DVector<f64>) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

fn sorted_eigen(mat: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = mat.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let dim = eig.eigenvectors.nrows();
    let mut vecs = DMatrix::zeros(dim, order.len());
    for (j, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).clone_owned();
        sign_fix(&mut col);
        vecs.set_column(j, &col);
    }
    (energies, vecs)
}

/// Dense diagonalization of H over all N-electron determinants.
pub fn solve_fci(h: &Hamiltonian, n: u32, cap: usize, nroots: usize) -> Result<FciResult> {
    let (basis, mat) = h.assemble_dense(n, cap)?;
    let (energies, vecs) = sorted_eigen(mat);
    let roots = (0..nroots.min(energies.len()))
        .map(|j| {
            basis
                .iter()
                .enumerate()
                .map(|(i, &d)| (d, vecs[(i, j)]))
                .collect()
        })
        .collect();
    Ok(FciResult {
        energies,
        roots,
        dim: basis.len(),
    })
}

/// Lowest eigenpair of H on the CI space of the m-th subgraph: the
/// reference plus one determinant per excitation label.
pub fn solve_ci_projected(
    h: &Hamiltonian,
    g: &ExcitationGraph,
    m: usize,
    cap: usize,
) -> Result<CiResult> {
    let mut basis: Vec<Det> = vec![g.frame(m).reference()];
    basis.extend(g.xi(m).iter().copied());
    let dim = basis.len();
    if dim > cap {
        return Err(Error::SizeLimit { dim, cap });
    }
    let mut mat = DMatrix::zeros(dim, dim);
    for (j, &b) in basis.iter().enumerate() {
        for (i, &a) in basis.iter().enumerate() {
            mat[(i, j)] = h.matrix_element(a, b);
        }
    }
    let (energies, vecs) = sorted_eigen(mat);
    let ground = vecs.column(0);
    Ok(CiResult {
        energy: energies[0],
        wavefn: basis
            .iter()
            .enumerate()
            .map(|(i, &d)| (d, ground[i]))
            .collect(),
        c0: ground[0],
        dim,
    })
}

/// How the coupled-cluster Jacobian is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JacobianMode {
    /// Commutator form: J u = P[ Hbar (U phi) - U (Hbar phi) ].
    #[default]
    Analytic,
    /// Central finite difference of the residual, step 1e-6.
    FiniteDifference,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol_residual: f64,
    pub max_iter: usize,
    /// Step-halving factor used when a full Newton step grows the residual.
    pub damping: f64,
    pub jacobian_mode: JacobianMode,
}

impl Default for SolverOptions {
    fn default() -> SolverOptions {
        SolverOptions {
            tol_residual: 1e-10,
            max_iter: 50,
            damping: 0.5,
            jacobian_mode: JacobianMode::Analytic,
        }
    }
}

/// A validated single-reference coupled-cluster problem.
pub struct CCProblem {
    graph: ExcitationGraph,
    ham: Hamiltonian,
}

impl CCProblem {
    /// Requires a single-reference graph that is consistent and excitation
    /// complete, and a Hamiltonian over the same orbital count.
    pub fn new(graph: ExcitationGraph, ham: Hamiltonian) -> Result<CCProblem> {
        if graph.num_references() != 1 {
            return Err(Error::Config(format!(
                "coupled-cluster solver needs a single reference, got {}",
                graph.num_references()
            )));
        }
        if ham.k() != graph.k() {
            return Err(Error::Config(format!(
                "integral set has K = {} but the graph has K = {}",
                ham.k(),
                graph.k()
            )));
        }
        let class = graph.classify(0);
        if !class.consistent {
            return Err(Error::Config("graph is not consistent".into()));
        }
        if !class.excitation_complete {
            return Err(Error::NotExcitationComplete(
                "projection equations need every vertex reachable by a single label".into(),
            ));
        }
        Ok(CCProblem { graph, ham })
    }

    pub fn graph(&self) -> &ExcitationGraph {
        &self.graph
    }

    pub fn ham(&self) -> &Hamiltonian {
        &self.ham
    }

    fn labels(&self) -> Vec<Det> {
        self.graph.xi(0).iter().copied().collect()
    }

    fn reference_state(&self) -> Wavefn {
        Wavefn::unit(self.graph.frame(0).reference())
    }
}

/// Energy of the m-th reference through the low-rank shortcut
/// E = <phi | H (1 + T_1 + T_2 + 1/2 T_1^2) phi>: only excitation ranks
/// up to two survive the projection against a two-body H.
pub fn reference_energy(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    h: &Hamiltonian,
) -> Result<f64> {
    let f = g.frame(m);
    let phi = Wavefn::unit(f.reference());
    let t1 = op::rank_component(f, t, 1);
    let t2 = op::rank_component(f, t, 2);
    let mut psi = phi.clone();
    let t1_phi = op::apply_cluster(g, m, &t1, &phi)?;
    psi.axpy(1.0, &t1_phi);
    psi.axpy(1.0, &op::apply_cluster(g, m, &t2, &phi)?);
    psi.axpy(0.5, &op::apply_cluster(g, m, &t1, &t1_phi)?);
    Ok(h.apply(&psi).coeff(f.reference()))
}

/// CC energy of a single-reference problem; see [`reference_energy`].
pub fn cc_energy(p: &CCProblem, t: &Amplitudes) -> Result<f64> {
    reference_energy(&p.graph, 0, t, &p.ham)
}

/// CC energy as the reference coefficient of Hbar phi; agrees with
/// [`cc_energy`] to machine precision and exists as a cross-check.
pub fn cc_energy_bch(p: &CCProblem, t: &Amplitudes) -> Result<f64> {
    let hbar = similarity_apply(&p.graph, 0, t, &p.ham, &p.reference_state())?;
    Ok(hbar.coeff(p.graph.frame(0).reference()))
}

/// Projected residual r_alpha = <phi^(alpha) | e^{-T} H e^{T} | phi> for
/// every label alpha of the graph.
pub fn cc_residual(p: &CCProblem, t: &Amplitudes) -> Result<Amplitudes> {
    let hbar = similarity_apply(&p.graph, 0, t, &p.ham, &p.reference_state())?;
    let f = p.graph.frame(0);
    let mut r = Amplitudes::new();
    for &alpha in p.graph.xi(0) {
        r.set(alpha, op::frame_coeff(f, &hbar, alpha));
    }
    Ok(r)
}

/// Directional derivative of the residual at `t` along `u`.
pub fn cc_jacobian_apply(
    p: &CCProblem,
    t: &Amplitudes,
    u: &Amplitudes,
    mode: JacobianMode,
) -> Result<Amplitudes> {
    match mode {
        JacobianMode::Analytic => {
            let phi = p.reference_state();
            let u_phi = op::apply_cluster(&p.graph, 0, u, &phi)?;
            let mut diff = similarity_apply(&p.graph, 0, t, &p.ham, &u_phi)?;
            let hbar_phi = similarity_apply(&p.graph, 0, t, &p.ham, &phi)?;
            diff.axpy(-1.0, &op::apply_cluster(&p.graph, 0, u, &hbar_phi)?);
            let f = p.graph.frame(0);
            let mut out = Amplitudes::new();
            for &alpha in p.graph.xi(0) {
                out.set(alpha, op::frame_coeff(f, &diff, alpha));
            }
            Ok(out)
        }
        JacobianMode::FiniteDifference => {
            let eps = 1e-6;
            let plus: Amplitudes = shift(t, u, eps);
            let minus: Amplitudes = shift(t, u, -eps);
            let rp = cc_residual(p, &plus)?;
            let rm = cc_residual(p, &minus)?;
            let labels = p.labels();
            let vals: Vec<f64> = labels
                .iter()
                .map(|&l| (rp.get(l) - rm.get(l)) / (2.0 * eps))
                .collect();
            Ok(Amplitudes::from_dense(&labels, &vals))
        }
    }
}

fn shift(t: &Amplitudes, u: &Amplitudes, s: f64) -> Amplitudes {
    let mut out = t.clone();
    for (l, v) in u.iter() {
        out.set(l, out.get(l) + s * v);
    }
    out
}

/// Converged amplitudes and energy of a Newton iteration.
#[derive(Clone, Debug)]
pub struct CcSolution {
    pub t: Amplitudes,
    pub energy: f64,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn dense_jacobian(p: &CCProblem, t: &Amplitudes, mode: JacobianMode) -> Result<DMatrix<f64>> {
    let labels = p.labels();
    let dim = labels.len();
    let columns = jacobian_columns(p, t, mode, &labels)?;
    let mut j = DMatrix::zeros(dim, dim);
    for (c, col) in columns.into_iter().enumerate() {
        for (r, v) in col.into_iter().enumerate() {
            j[(r, c)] = v;
        }
    }
    Ok(j)
}

#[cfg(feature = "parallel")]
fn jacobian_columns(
    p: &CCProblem,
    t: &Amplitudes,
    mode: JacobianMode,
    labels: &[Det],
) -> Result<Vec<Vec<f64>>> {
    labels
        .par_iter()
        .map(|&beta| jacobian_column(p, t, mode, labels, beta))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn jacobian_columns(
    p: &CCProblem,
    t: &Amplitudes,
    mode: JacobianMode,
    labels: &[Det],
) -> Result<Vec<Vec<f64>>> {
    labels
        .iter()
        .map(|&beta| jacobian_column(p, t, mode, labels, beta))
        .collect()
}

fn jacobian_column(
    p: &CCProblem,
    t: &Amplitudes,
    mode: JacobianMode,
    labels: &[Det],
    beta: Det,
) -> Result<Vec<f64>> {
    let mut unit = Amplitudes::new();
    unit.set(beta, 1.0);
    Ok(cc_jacobian_apply(p, t, &unit, mode)?.to_dense(labels))
}

/// Damped Newton iteration for the coupled-cluster equations, starting from
/// t = 0.  A full step is taken first; while it grows the residual norm the
/// step is re-taken scaled by `damping` (at most 10 reductions, keeping the
/// last).  Hitting `max_iter` returns `converged = false`.
///
/// A rank-deficient Jacobian is not necessarily fatal: an exact symmetry of
/// H (spin on a Hubbard chain, seniority on the pairing model) decouples
/// part of the label set, zeroing the matching Jacobian rows *and* residual
/// entries.  Those steps are taken as the minimum-norm least-squares
/// solution on the regular subspace; only when a singular direction carries
/// residual is the iteration abandoned with an error.
pub fn solve_cc(p: &CCProblem, options: &SolverOptions) -> Result<CcSolution> {
    let labels = p.labels();
    let mut t = Amplitudes::new();
    let mut r = cc_residual(p, &t)?;
    let mut rnorm = r.norm();
    let mut iterations = 0;
    let mut converged = rnorm <= options.tol_residual;
    while !converged && iterations < options.max_iter {
        let j = dense_jacobian(p, &t, options.jacobian_mode)?;
        let lu = j.clone().lu();
        let pivot = (0..labels.len())
            .map(|i| lu.u()[(i, i)].abs())
            .fold(f64::INFINITY, f64::min);
        let rhs = DVector::from_vec(r.to_dense(&labels));
        let delta = if pivot < 1e-12 {
            let svd = j.clone().svd(true, true);
            let cutoff = 1e-12 * svd.singular_values.max();
            let delta = svd
                .solve(&-&rhs, cutoff)
                .map_err(|_| Error::SingularJacobian {
                    iteration: iterations,
                    pivot,
                })?;
            let unreachable_part = (&j * &delta + &rhs).norm();
            if unreachable_part > options.tol_residual.max(1e-10 * rnorm) {
                return Err(Error::SingularJacobian {
                    iteration: iterations,
                    pivot,
                });
            }
            delta
        } else {
            lu.solve(&(-rhs))
                .expect("nonsingular LU solve cannot fail")
        };
        let mut step = 1.0;
        let mut best = shift(&t, &Amplitudes::from_dense(&labels, delta.as_slice()), step);
        let mut best_r = cc_residual(p, &best)?;
        for _ in 0..10 {
            if best_r.norm() <= rnorm {
                break;
            }
            step *= options.damping;
            best = shift(&t, &Amplitudes::from_dense(&labels, delta.as_slice()), step);
            best_r = cc_residual(p, &best)?;
        }
        t = best;
        r = best_r;
        rnorm = r.norm();
        iterations += 1;
        converged = rnorm <= options.tol_residual;
    }
    let energy = cc_energy(p, &t)?;
    Ok(CcSolution {
        t,
        energy,
        converged,
        iterations,
        residual_norm: rnorm,
    })
}
