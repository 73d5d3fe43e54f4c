//! Multireference solvers on the shared multigraph: coupled
//! Jeziorski-Monkhorst amplitude equations, the (generally nonsymmetric)
//! effective Hamiltonian over the model space, and the multireference CI
//! variant.
//!
//! The model space is the span of the reference determinants; each
//! reference m carries its own cluster operator T^(m) supported on
//! Xi(G_m), and energies come from the transposed-index eigenproblem
//! sum_n Heff_nm a_n = E a_m.

use nalgebra::{DMatrix, DVector};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::det::Det;
use crate::error::{Error, Result};
use crate::graph::ExcitationGraph;
use crate::ham::{similarity_apply, Hamiltonian};
use crate::op;
use crate::solver::{reference_energy, sign_fix, SolverOptions};
use crate::wavefn::{Amplitudes, Wavefn};

/// Finite-difference step for the coupled Newton Jacobian.
pub const FD_STEP: f64 = 1e-6;

/// A validated multireference problem over one multigraph.
pub struct MRProblem {
    graph: ExcitationGraph,
    ham: Hamiltonian,
}

impl MRProblem {
    /// Requires matching orbital counts and, for every reference, a
    /// consistent and excitation-complete subgraph.
    pub fn new(graph: ExcitationGraph, ham: Hamiltonian) -> Result<MRProblem> {
        if ham.k() != graph.k() {
            return Err(Error::Config(format!(
                "integral set has K = {} but the graph has K = {}",
                ham.k(),
                graph.k()
            )));
        }
        for m in 0..graph.num_references() {
            let class = graph.classify(m);
            if !class.consistent {
                return Err(Error::Config(format!("subgraph {m} is not consistent")));
            }
            if !class.excitation_complete {
                return Err(Error::NotExcitationComplete(format!(
                    "subgraph {m} cannot support the projection equations"
                )));
            }
        }
        Ok(MRProblem { graph, ham })
    }

    pub fn graph(&self) -> &ExcitationGraph {
        &self.graph
    }

    pub fn ham(&self) -> &Hamiltonian {
        &self.ham
    }

    /// Number of references M.
    pub fn m(&self) -> usize {
        self.graph.num_references()
    }

    fn reference(&self, m: usize) -> Det {
        self.graph.frame(m).reference()
    }
}

/// The M x M matrix Heff_mn = <e^{-T(m)} H e^{T(m)} phi_0m, phi_0n>.
#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    pub matrix: DMatrix<f64>,
}

/// Eigenpairs of the transposed effective Hamiltonian, ordered by real
/// part.  Columns of `coefficients` are unit-normalized model-space
/// vectors a_j; columns belonging to complex-pair eigenvalues are zero and
/// `complex_roots` is raised instead.
#[derive(Clone, Debug)]
pub struct ModelSpaceSolution {
    pub energies: Vec<f64>,
    pub coefficients: DMatrix<f64>,
    pub complex_roots: bool,
}

/// Output of the coupled multireference iterations.  For JM-MRCC the
/// per-reference `amplitudes` are cluster amplitudes; for MRCI they are CI
/// coefficients.
#[derive(Clone, Debug)]
pub struct MrSolution {
    pub amplitudes: Vec<Amplitudes>,
    pub heff: EffectiveHamiltonian,
    pub model: ModelSpaceSolution,
    pub converged: bool,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn neg(t: &Amplitudes) -> Amplitudes {
    t.iter().map(|(a, v)| (a, -v)).collect()
}

/// Similarity transforms of every block plus the effective Hamiltonian.
/// Diagonal entries go through the same low-rank shortcut as the
/// single-reference energy, so at M = 1 they agree with it bitwise.
fn hbar_blocks(ts: &[Amplitudes], p: &MRProblem) -> Result<(Vec<Wavefn>, DMatrix<f64>)> {
    let mm = p.m();
    assert_eq!(ts.len(), mm, "one amplitude set per reference");
    let mut hbars = Vec::with_capacity(mm);
    let mut heff = DMatrix::zeros(mm, mm);
    for m in 0..mm {
        let hbar = similarity_apply(&p.graph, m, &ts[m], &p.ham, &Wavefn::unit(p.reference(m)))?;
        for n in 0..mm {
            heff[(m, n)] = if n == m {
                reference_energy(&p.graph, m, &ts[m], &p.ham)?
            } else {
                hbar.coeff(p.reference(n))
            };
        }
        hbars.push(hbar);
    }
    Ok((hbars, heff))
}

/// Heff at the given amplitudes; for t = 0 this is the raw model-space
/// block of H.
pub fn effective_hamiltonian(ts: &[Amplitudes], p: &MRProblem) -> Result<EffectiveHamiltonian> {
    let (_, matrix) = hbar_blocks(ts, p)?;
    Ok(EffectiveHamiltonian { matrix })
}

/// Coupled JM residual: for each reference m and label alpha,
///   r_{m,alpha} = <Hbar_m phi_0m, X_alpha phi_0m>
///               - sum_{n != m} Heff_mn <e^{-T(m)} e^{T(n)} phi_0n, X_alpha phi_0m>.
/// The n = m coupling term vanishes identically (e^{-T} e^{T} = I and the
/// reference has no overlap with any excited X_alpha phi_0m), so it is
/// skipped; at M = 1 this is bitwise the single-reference residual.
pub fn jm_residual(ts: &[Amplitudes], p: &MRProblem) -> Result<Vec<Amplitudes>> {
    let (hbars, heff) = hbar_blocks(ts, p)?;
    let block = |m: usize| -> Result<Amplitudes> {
        let f = p.graph.frame(m);
        let mut couplings: Vec<(f64, Wavefn)> = Vec::new();
        for n in 0..p.m() {
            if n == m {
                continue;
            }
            let grown = op::exp_apply(&p.graph, n, &ts[n], &Wavefn::unit(p.reference(n)))?;
            let shrunk = op::exp_apply(&p.graph, m, &neg(&ts[m]), &grown)?;
            couplings.push((heff[(m, n)], shrunk));
        }
        let mut r = Amplitudes::new();
        for &alpha in p.graph.xi(m) {
            let mut v = op::frame_coeff(f, &hbars[m], alpha);
            for (w, vec) in &couplings {
                v -= w * op::frame_coeff(f, vec, alpha);
            }
            r.set(alpha, v);
        }
        Ok(r)
    };
    run_blocks(p.m(), block)
}

/// MRCI residual: with psi_n = (I + C(n)) phi_0n and
/// Heff_mn = <H psi_m, phi_0n>,
///   r_{m,alpha} = <H psi_m, X_alpha phi_0m>
///               - sum_n Heff_mn <psi_n, X_alpha phi_0m>.
/// Unlike the exponential ansatz the n = m term survives (it carries the
/// eigenvalue times c_alpha).
pub fn mrci_residual(cs: &[Amplitudes], p: &MRProblem) -> Result<Vec<Amplitudes>> {
    let (psis, hpsis, heff) = mrci_blocks(cs, p)?;
    let block = |m: usize| -> Result<Amplitudes> {
        let f = p.graph.frame(m);
        let mut r = Amplitudes::new();
        for &alpha in p.graph.xi(m) {
            let mut v = op::frame_coeff(f, &hpsis[m], alpha);
            for n in 0..p.m() {
                v -= heff[(m, n)] * op::frame_coeff(f, &psis[n], alpha);
            }
            r.set(alpha, v);
        }
        Ok(r)
    };
    run_blocks(p.m(), block)
}

fn mrci_blocks(
    cs: &[Amplitudes],
    p: &MRProblem,
) -> Result<(Vec<Wavefn>, Vec<Wavefn>, DMatrix<f64>)> {
    let mm = p.m();
    assert_eq!(cs.len(), mm, "one coefficient set per reference");
    let mut psis = Vec::with_capacity(mm);
    let mut hpsis = Vec::with_capacity(mm);
    let mut heff = DMatrix::zeros(mm, mm);
    for m in 0..mm {
        let phi = Wavefn::unit(p.reference(m));
        let mut psi = phi.clone();
        psi.axpy(1.0, &op::apply_cluster(&p.graph, m, &cs[m], &phi)?);
        let hpsi = p.ham.apply(&psi);
        for n in 0..mm {
            heff[(m, n)] = hpsi.coeff(p.reference(n));
        }
        psis.push(psi);
        hpsis.push(hpsi);
    }
    Ok((psis, hpsis, heff))
}

#[cfg(feature = "parallel")]
fn run_blocks(
    m: usize,
    block: impl Fn(usize) -> Result<Amplitudes> + Sync + Send,
) -> Result<Vec<Amplitudes>> {
    (0..m).into_par_iter().map(block).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_blocks(
    m: usize,
    block: impl Fn(usize) -> Result<Amplitudes> + Sync + Send,
) -> Result<Vec<Amplitudes>> {
    (0..m).map(block).collect()
}

/// Label layout used to flatten per-reference amplitude maps into one
/// Newton unknown vector.
struct Packing {
    labels: Vec<Vec<Det>>,
    dim: usize,
}

impl Packing {
    fn of(p: &MRProblem) -> Packing {
        let labels: Vec<Vec<Det>> = (0..p.m())
            .map(|m| p.graph.xi(m).iter().copied().collect())
            .collect();
        let dim = labels.iter().map(Vec::len).sum();
        Packing { labels, dim }
    }

    fn pack(&self, blocks: &[Amplitudes]) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        let mut at = 0;
        for (m, labels) in self.labels.iter().enumerate() {
            for &l in labels {
                v[at] = blocks[m].get(l);
                at += 1;
            }
        }
        v
    }

    fn unpack(&self, v: &DVector<f64>) -> Vec<Amplitudes> {
        let mut out = Vec::with_capacity(self.labels.len());
        let mut at = 0;
        for labels in &self.labels {
            let vals: Vec<f64> = (0..labels.len()).map(|i| v[at + i]).collect();
            at += labels.len();
            out.push(Amplitudes::from_dense(labels, &vals));
        }
        out
    }
}

#[cfg(feature = "parallel")]
fn fd_columns<F>(residual: &F, pk: &Packing, x: &DVector<f64>) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[Amplitudes]) -> Result<Vec<Amplitudes>> + Sync + Send,
{
    (0..pk.dim)
        .into_par_iter()
        .map(|i| fd_column(residual, pk, x, i))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn fd_columns<F>(residual: &F, pk: &Packing, x: &DVector<f64>) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[Amplitudes]) -> Result<Vec<Amplitudes>> + Sync + Send,
{
    (0..pk.dim).map(|i| fd_column(residual, pk, x, i)).collect()
}

fn fd_column<F>(residual: &F, pk: &Packing, x: &DVector<f64>, i: usize) -> Result<Vec<f64>>
where
    F: Fn(&[Amplitudes]) -> Result<Vec<Amplitudes>> + Sync,
{
    let mut plus = x.clone();
    plus[i] += FD_STEP;
    let mut minus = x.clone();
    minus[i] -= FD_STEP;
    let rp = pk.pack(&residual(&pk.unpack(&plus))?);
    let rm = pk.pack(&residual(&pk.unpack(&minus))?);
    Ok(((rp - rm) / (2.0 * FD_STEP)).data.into())
}

/// Damped Newton with a finite-difference Jacobian over the concatenated
/// unknowns; the effective Hamiltonian's own amplitude dependence is
/// therefore part of the Jacobian.
fn newton_fd<F>(
    residual: F,
    pk: &Packing,
    start: DVector<f64>,
    options: &SolverOptions,
) -> Result<(DVector<f64>, bool, usize, f64)>
where
    F: Fn(&[Amplitudes]) -> Result<Vec<Amplitudes>> + Sync + Send,
{
    let mut x = start;
    let mut r = pk.pack(&residual(&pk.unpack(&x))?);
    let mut rnorm = r.norm();
    let mut iterations = 0;
    let mut converged = rnorm <= options.tol_residual;
    while !converged && iterations < options.max_iter {
        let cols = fd_columns(&residual, pk, &x)?;
        let mut j = DMatrix::zeros(pk.dim, pk.dim);
        for (c, col) in cols.into_iter().enumerate() {
            for (rr, v) in col.into_iter().enumerate() {
                j[(rr, c)] = v;
            }
        }
        let lu = j.lu();
        let pivot = (0..pk.dim)
            .map(|i| lu.u()[(i, i)].abs())
            .fold(f64::INFINITY, f64::min);
        if pivot < 1e-12 {
            return Err(Error::SingularJacobian {
                iteration: iterations,
                pivot,
            });
        }
        let delta = lu.solve(&(-&r)).expect("nonsingular LU solve cannot fail");
        let mut step = 1.0;
        let mut best = &x + &delta * step;
        let mut best_r = pk.pack(&residual(&pk.unpack(&best))?);
        for _ in 0..10 {
            if best_r.norm() <= rnorm {
                break;
            }
            step *= options.damping;
            best = &x + &delta * step;
            best_r = pk.pack(&residual(&pk.unpack(&best))?);
        }
        x = best;
        r = best_r;
        rnorm = r.norm();
        iterations += 1;
        converged = rnorm <= options.tol_residual;
    }
    Ok((x, converged, iterations, rnorm))
}

/// Eigen post-processing of the model space: solves the transposed
/// problem sum_n Heff_nm a_n = E a_m with a general real eigensolver.
/// Real eigenvectors come from the SVD null space of (Heff^T - E I);
/// complex-conjugate eigenvalue pairs only raise `complex_roots`.
pub fn model_space_eigen(matrix: &DMatrix<f64>) -> ModelSpaceSolution {
    let mm = matrix.nrows();
    let a = matrix.transpose();
    let eig = a.clone().complex_eigenvalues();
    let scale = matrix.amax().max(1.0);
    let tol = 1e-10 * scale;
    let mut order: Vec<usize> = (0..mm).collect();
    order.sort_by(|&i, &j| {
        (eig[i].re, eig[i].im)
            .partial_cmp(&(eig[j].re, eig[j].im))
            .unwrap()
    });
    let mut energies = Vec::with_capacity(mm);
    let mut coefficients = DMatrix::zeros(mm, mm);
    let mut complex_roots = false;
    for (j, &i) in order.iter().enumerate() {
        energies.push(eig[i].re);
        if eig[i].im.abs() > tol {
            complex_roots = true;
            continue;
        }
        let shifted = &a - DMatrix::identity(mm, mm) * eig[i].re;
        let svd = shifted.svd(false, true);
        let idx = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(k, _)| k)
            .unwrap();
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut col: DVector<f64> = v_t.row(idx).transpose();
        sign_fix(&mut col);
        coefficients.set_column(j, &col);
    }
    ModelSpaceSolution {
        energies,
        coefficients,
        complex_roots,
    }
}

/// Coupled JM-MRCC: damped Newton (finite-difference Jacobian) on the
/// concatenated residual from `t_init` (zero when absent), then the
/// model-space eigenproblem at the final amplitudes.  Exceeding the
/// iteration budget flags `converged = false`; a singular Jacobian is an
/// error.
pub fn solve_jm_mrcc(
    p: &MRProblem,
    t_init: Option<&[Amplitudes]>,
    options: &SolverOptions,
) -> Result<MrSolution> {
    let pk = Packing::of(p);
    let start = match t_init {
        Some(ts) => pk.pack(ts),
        None => DVector::zeros(pk.dim),
    };
    let (x, converged, iterations, residual_norm) =
        newton_fd(|ts| jm_residual(ts, p), &pk, start, options)?;
    let amplitudes = pk.unpack(&x);
    let heff = effective_hamiltonian(&amplitudes, p)?;
    let model = model_space_eigen(&heff.matrix);
    Ok(MrSolution {
        amplitudes,
        heff,
        model,
        converged,
        iterations,
        residual_norm,
    })
}

/// Multireference CI with the same coupled-Newton machinery; the unknowns
/// are CI coefficients and the system is bilinear rather than polynomial.
pub fn solve_mrci(p: &MRProblem, options: &SolverOptions) -> Result<MrSolution> {
    let pk = Packing::of(p);
    let (x, converged, iterations, residual_norm) = newton_fd(
        |cs| mrci_residual(cs, p),
        &pk,
        DVector::zeros(pk.dim),
        options,
    )?;
    let amplitudes = pk.unpack(&x);
    let (_, _, matrix) = mrci_blocks(&amplitudes, p)?;
    let heff = EffectiveHamiltonian { matrix };
    let model = model_space_eigen(&heff.matrix);
    Ok(MrSolution {
        amplitudes,
        heff,
        model,
        converged,
        iterations,
        residual_norm,
    })
}
