//! Excitation, de-excitation and cluster operators.
//!
//! Operators are tied to one subgraph G_m of an excitation graph: X_alpha
//! moves coefficient along the alpha-labeled edges and kills everything else,
//! so vertices excluded from L_m (the other references) absorb nothing.
//!
//! Wavefunction coefficients use the global phase convention of [`Wavefn`];
//! amplitudes and extracted coefficients live in the frame view, where
//! X_alpha Phi_0 = +Phi_alpha.  The gauge phase of [`Frame`] mediates between
//! the two; no other module needs to know about it.

use crate::det::{Det, Frame};
use crate::error::{Error, Result};
use crate::graph::ExcitationGraph;
use crate::wavefn::{Amplitudes, Wavefn};

fn check_label(g: &ExcitationGraph, m: usize, alpha: Det) -> Result<()> {
    if g.xi(m).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::UnknownExcitation(format!(
            "label {alpha} is not in the excitation set of subgraph {}",
            m + 1
        )))
    }
}

fn check_amplitudes(g: &ExcitationGraph, m: usize, t: &Amplitudes) -> Result<()> {
    for (alpha, _) in t.iter() {
        check_label(g, m, alpha)?;
    }
    Ok(())
}

fn excite_unchecked(g: &ExcitationGraph, m: usize, alpha: Det, psi: &Wavefn, out: &mut Wavefn, w: f64) {
    let f = g.frame(m);
    for (beta, c) in psi.iter() {
        if !g.in_l(m, beta) || !f.compatible(alpha, beta) {
            continue;
        }
        let target = f.join(alpha, beta);
        if g.in_l(m, target) {
            let sign = f
                .excitation_sign(alpha, beta)
                .expect("compatible pair has a sign");
            out.add(target, w * sign as f64 * c);
        }
    }
}

fn deexcite_unchecked(g: &ExcitationGraph, m: usize, alpha: Det, psi: &Wavefn, out: &mut Wavefn, w: f64) {
    let f = g.frame(m);
    for (gamma, c) in psi.iter() {
        if !g.in_l(m, gamma) || !f.precedes(alpha, gamma) {
            continue;
        }
        let src = f.meet(f.complement(alpha), gamma);
        if g.in_l(m, src) {
            // the edge src -> gamma is labeled alpha; the matrix element is
            // the transpose of the excitation one
            let sign = f
                .excitation_sign(alpha, src)
                .expect("de-excitable pair has a sign");
            out.add(src, w * sign as f64 * c);
        }
    }
}

/// X_alpha applied to psi.
pub fn apply_excitation(
    g: &ExcitationGraph,
    m: usize,
    alpha: Det,
    psi: &Wavefn,
) -> Result<Wavefn> {
    check_label(g, m, alpha)?;
    let mut out = Wavefn::new();
    excite_unchecked(g, m, alpha, psi, &mut out, 1.0);
    Ok(out)
}

/// X_alpha^dagger applied to psi.
pub fn apply_deexcitation(
    g: &ExcitationGraph,
    m: usize,
    alpha: Det,
    psi: &Wavefn,
) -> Result<Wavefn> {
    check_label(g, m, alpha)?;
    let mut out = Wavefn::new();
    deexcite_unchecked(g, m, alpha, psi, &mut out, 1.0);
    Ok(out)
}

/// Cluster operator T = sum_alpha t_alpha X_alpha applied to psi.
pub fn apply_cluster(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    psi: &Wavefn,
) -> Result<Wavefn> {
    check_amplitudes(g, m, t)?;
    Ok(cluster_once(g, m, t, psi))
}

/// T^dagger applied to psi.
pub fn apply_cluster_adjoint(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    psi: &Wavefn,
) -> Result<Wavefn> {
    check_amplitudes(g, m, t)?;
    Ok(cluster_adjoint_once(g, m, t, psi))
}

fn cluster_once(g: &ExcitationGraph, m: usize, t: &Amplitudes, psi: &Wavefn) -> Wavefn {
    let mut out = Wavefn::new();
    for (alpha, v) in t.iter() {
        excite_unchecked(g, m, alpha, psi, &mut out, v);
    }
    out
}

fn cluster_adjoint_once(g: &ExcitationGraph, m: usize, t: &Amplitudes, psi: &Wavefn) -> Wavefn {
    let mut out = Wavefn::new();
    for (alpha, v) in t.iter() {
        deexcite_unchecked(g, m, alpha, psi, &mut out, v);
    }
    out
}

/// T^p applied to psi.
pub fn cluster_power(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    psi: &Wavefn,
    p: u32,
) -> Result<Wavefn> {
    check_amplitudes(g, m, t)?;
    let mut cur = psi.clone();
    for _ in 0..p {
        cur = cluster_once(g, m, t, &cur);
    }
    Ok(cur)
}

/// e^T psi; the series stops at the N-th power (T is nilpotent of degree
/// N+1 because every application raises the rank).
pub fn exp_apply(g: &ExcitationGraph, m: usize, t: &Amplitudes, psi: &Wavefn) -> Result<Wavefn> {
    check_amplitudes(g, m, t)?;
    let mut acc = psi.clone();
    let mut term = psi.clone();
    for k in 1..=g.n() {
        term = cluster_once(g, m, t, &term);
        term.scale(1.0 / k as f64);
        if term.is_empty() {
            break;
        }
        acc.axpy(1.0, &term);
    }
    Ok(acc)
}

/// e^{T^dagger} psi.
pub fn exp_adjoint_apply(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    psi: &Wavefn,
) -> Result<Wavefn> {
    check_amplitudes(g, m, t)?;
    let mut acc = psi.clone();
    let mut term = psi.clone();
    for k in 1..=g.n() {
        term = cluster_adjoint_once(g, m, t, &term);
        term.scale(1.0 / k as f64);
        if term.is_empty() {
            break;
        }
        acc.axpy(1.0, &term);
    }
    Ok(acc)
}

/// Splits psi into the reference coefficient and the frame-view coefficients
/// of everything else: psi = c0 Phi_0 + sum_alpha c_alpha Phi_alpha.
///
/// Every non-reference determinant in the support is treated as a label,
/// whether or not it lies in the graph's excitation set; on full graphs the
/// two notions coincide.
pub fn wavefunction_to_amplitudes(g: &ExcitationGraph, m: usize, psi: &Wavefn) -> (f64, Amplitudes) {
    let f = g.frame(m);
    let c0 = psi.coeff(f.reference());
    let mut c = Amplitudes::new();
    for (d, v) in psi.iter() {
        if d != f.reference() && g.in_l(m, d) {
            c.set(d, f.gauge_phase(d) as f64 * v);
        }
    }
    (c0, c)
}

/// Inverse of [`wavefunction_to_amplitudes`].
pub fn amplitudes_to_wavefunction(
    g: &ExcitationGraph,
    m: usize,
    c0: f64,
    c: &Amplitudes,
) -> Wavefn {
    let f = g.frame(m);
    let mut psi = Wavefn::new();
    psi.set(f.reference(), c0);
    for (alpha, v) in c.iter() {
        psi.add(alpha, f.gauge_phase(alpha) as f64 * v);
    }
    psi
}

/// The frame-view coefficient of psi at the single label alpha.
pub fn frame_coeff(f: &Frame, psi: &Wavefn, alpha: Det) -> f64 {
    f.gauge_phase(alpha) as f64 * psi.coeff(alpha)
}

/// Cluster amplitudes of the operator T = log(I + C), where C is the CI
/// operator with coefficients `c`:
/// T Phi_0 = sum_{k>=1} (-1)^{k+1}/k C^k Phi_0, terminating at k = N.
pub fn log_cluster(g: &ExcitationGraph, m: usize, c: &Amplitudes) -> Result<Amplitudes> {
    check_amplitudes(g, m, c)?;
    let f = g.frame(m);
    let phi0 = Wavefn::unit(f.reference());
    let mut acc = Wavefn::new();
    let mut power = phi0;
    for k in 1..=g.n() {
        power = cluster_once(g, m, c, &power);
        if power.is_empty() {
            break;
        }
        let coeff = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        acc.axpy(coeff, &power);
    }
    let (_, t) = wavefunction_to_amplitudes(g, m, &acc);
    Ok(t)
}

/// Amplitudes restricted to labels of rank r.
pub fn rank_component(f: &Frame, t: &Amplitudes, r: u32) -> Amplitudes {
    t.iter().filter(|&(alpha, _)| f.rank(alpha) == r).collect()
}

/// Solves e^{T^dagger} x = rhs within V0 = span{Phi_0} + V(G) by applying
/// e^{-T^dagger}; V0 is invariant under T^dagger exactly when the graph is
/// excitation complete, which is checked up front.
pub fn projected_exp_adjoint_solve(
    g: &ExcitationGraph,
    m: usize,
    t: &Amplitudes,
    rhs: &Wavefn,
) -> Result<Wavefn> {
    if !g.classify(m).excitation_complete {
        return Err(Error::NotExcitationComplete(format!(
            "subgraph {} is not excitation complete; e^{{T^dagger}} does not restrict to V0",
            m + 1
        )));
    }
    let neg = t.iter().map(|(a, v)| (a, -v)).collect::<Amplitudes>();
    exp_adjoint_apply(g, m, &neg, rhs)
}
