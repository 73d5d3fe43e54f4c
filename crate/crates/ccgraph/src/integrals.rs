//! One- and two-electron integral sets.
//!
//! Two-electron integrals use chemists' notation (pq|rs) with the 8-fold
//! symmetry of real orbitals; storage is packed triangular over orbital
//! pairs.  The second-quantized Hamiltonian built from a set is
//! H = e_core + sum h_pq a+_p a_q + 1/2 sum (pq|rs) a+_p a+_r a_s a_q.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Core energy plus h and g tensors over K orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralSet {
    k: u32,
    e_core: f64,
    h: Vec<f64>,
    g: Vec<f64>,
}

fn pair_index(p: usize, q: usize) -> usize {
    // 0-based, unordered
    let (hi, lo) = if p >= q { (p, q) } else { (q, p) };
    hi * (hi + 1) / 2 + lo
}

impl IntegralSet {
    pub fn new(k: u32) -> IntegralSet {
        let k_us = k as usize;
        let npair = k_us * (k_us + 1) / 2;
        IntegralSet {
            k,
            e_core: 0.0,
            h: vec![0.0; k_us * k_us],
            g: vec![0.0; npair * (npair + 1) / 2],
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn e_core(&self) -> f64 {
        self.e_core
    }

    pub fn set_e_core(&mut self, v: f64) {
        self.e_core = v;
    }

    fn check(&self, p: u32) -> Result<usize> {
        if p == 0 || p > self.k {
            return Err(Error::InvalidOrbital(format!(
                "orbital {p} outside 1..={}",
                self.k
            )));
        }
        Ok((p - 1) as usize)
    }

    /// h_pq (1-based orbitals).
    pub fn h(&self, p: u32, q: u32) -> f64 {
        self.h[(p as usize - 1) * self.k as usize + (q as usize - 1)]
    }

    /// Sets h_pq = h_qp = v.
    pub fn set_h(&mut self, p: u32, q: u32, v: f64) -> Result<()> {
        let (pi, qi) = (self.check(p)?, self.check(q)?);
        let k = self.k as usize;
        self.h[pi * k + qi] = v;
        self.h[qi * k + pi] = v;
        Ok(())
    }

    /// (pq|rs) in chemists' notation (1-based orbitals).
    pub fn g(&self, p: u32, q: u32, r: u32, s: u32) -> f64 {
        let pq = pair_index(p as usize - 1, q as usize - 1);
        let rs = pair_index(r as usize - 1, s as usize - 1);
        self.g[pair_index(pq, rs)]
    }

    /// Sets (pq|rs) = v along with its seven symmetric images.
    pub fn set_g(&mut self, p: u32, q: u32, r: u32, s: u32, v: f64) -> Result<()> {
        let (pi, qi) = (self.check(p)?, self.check(q)?);
        let (ri, si) = (self.check(r)?, self.check(s)?);
        let pq = pair_index(pi, qi);
        let rs = pair_index(ri, si);
        self.g[pair_index(pq, rs)] = v;
        Ok(())
    }

    /// Orbitals with any nonzero h or g entry touching them would be hard to
    /// track; instead tests use this to assert full tensors match.
    pub fn max_abs_difference(&self, other: &IntegralSet) -> f64 {
        assert_eq!(self.k, other.k);
        let mut m = (self.e_core - other.e_core).abs();
        for (a, b) in self.h.iter().zip(&other.h) {
            m = m.max((a - b).abs());
        }
        for (a, b) in self.g.iter().zip(&other.g) {
            m = m.max((a - b).abs());
        }
        m
    }

    /// Block-diagonal combination: `self` keeps orbitals 1..K_a, `other` is
    /// shifted to K_a+1..K_a+K_b, no cross terms.  Core energies add.
    pub fn direct_sum(&self, other: &IntegralSet) -> IntegralSet {
        let ka = self.k;
        let mut out = IntegralSet::new(ka + other.k);
        out.e_core = self.e_core + other.e_core;
        for p in 1..=ka {
            for q in 1..=ka {
                if self.h(p, q) != 0.0 {
                    out.set_h(p, q, self.h(p, q)).unwrap();
                }
            }
        }
        for p in 1..=other.k {
            for q in 1..=other.k {
                if other.h(p, q) != 0.0 {
                    out.set_h(p + ka, q + ka, other.h(p, q)).unwrap();
                }
            }
        }
        for (ints, shift) in [(self, 0), (other, ka)] {
            for p in 1..=ints.k {
                for q in 1..=p {
                    for r in 1..=p {
                        let s_max = if r == p { q } else { r };
                        for s in 1..=s_max {
                            let v = ints.g(p, q, r, s);
                            if v != 0.0 {
                                out.set_g(p + shift, q + shift, r + shift, s + shift, v)
                                    .unwrap();
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Integrals in a rotated orbital basis: column `a` of `c` holds the
    /// expansion of new orbital a+1 over the old ones, so h' = C^T h C and
    /// (ab|cd)' is the four-index transform.  `c` must be orthogonal; a
    /// non-unitary "rotation" would silently change the spectrum.
    pub fn rotated(&self, c: &DMatrix<f64>) -> Result<IntegralSet> {
        let k = self.k as usize;
        if c.nrows() != k || c.ncols() != k {
            return Err(Error::Config(format!(
                "rotation must be {k} x {k}, got {} x {}",
                c.nrows(),
                c.ncols()
            )));
        }
        let defect = (c.transpose() * c - DMatrix::<f64>::identity(k, k))
            .abs()
            .max();
        if defect > 1e-10 {
            return Err(Error::Config(format!(
                "rotation is not orthogonal (max |C^T C - I| = {defect:.3e})"
            )));
        }
        let mut out = IntegralSet::new(self.k);
        out.e_core = self.e_core;
        for a in 1..=self.k {
            for b in 1..=a {
                let mut v = 0.0;
                for p in 0..k {
                    for q in 0..k {
                        v += c[(p, a as usize - 1)] * c[(q, b as usize - 1)] * self.h[p * k + q];
                    }
                }
                out.set_h(a, b, v)?;
            }
        }
        // quarter transforms, one index at a time
        let idx = |p: usize, q: usize, r: usize, s: usize| ((p * k + q) * k + r) * k + s;
        let mut full = vec![0.0; k * k * k * k];
        for p in 0..k {
            for q in 0..k {
                for r in 0..k {
                    for s in 0..k {
                        full[idx(p, q, r, s)] =
                            self.g(p as u32 + 1, q as u32 + 1, r as u32 + 1, s as u32 + 1);
                    }
                }
            }
        }
        for pos in 0..4 {
            let mut next = vec![0.0; k * k * k * k];
            for p in 0..k {
                for q in 0..k {
                    for r in 0..k {
                        for s in 0..k {
                            let v = full[idx(p, q, r, s)];
                            if v == 0.0 {
                                continue;
                            }
                            let moving = [p, q, r, s][pos];
                            for a in 0..k {
                                let mut t = [p, q, r, s];
                                t[pos] = a;
                                next[idx(t[0], t[1], t[2], t[3])] += c[(moving, a)] * v;
                            }
                        }
                    }
                }
            }
            full = next;
        }
        for a in 1..=self.k {
            for b in 1..=a {
                for cc in 1..=a {
                    let d_max = if cc == a { b } else { cc };
                    for d in 1..=d_max {
                        let v = full[idx(
                            a as usize - 1,
                            b as usize - 1,
                            cc as usize - 1,
                            d as usize - 1,
                        )];
                        out.set_g(a, b, cc, d, v)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Renders the set in the same text format `parse_integrals` reads.
    pub fn to_fcidump(&self, nelec: u32) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "&FCI NORB={} NELEC={} &END", self.k, nelec);
        for p in 1..=self.k {
            for q in 1..=p {
                for r in 1..=p {
                    let s_max = if r == p { q } else { r };
                    for sx in 1..=s_max {
                        let v = self.g(p, q, r, sx);
                        if v != 0.0 {
                            let _ = writeln!(s, "{v:.16e} {p} {q} {r} {sx}");
                        }
                    }
                }
            }
        }
        for p in 1..=self.k {
            for q in 1..=p {
                let v = self.h(p, q);
                if v != 0.0 {
                    let _ = writeln!(s, "{v:.16e} {p} {q} 0 0");
                }
            }
        }
        if self.e_core != 0.0 {
            let _ = writeln!(s, "{:.16e} 0 0 0 0", self.e_core);
        }
        s
    }
}

/// Parses FCIDUMP-style text.
///
/// The `&FCI NORB=<K> NELEC=<N> ... &END` header is optional when `norb`
/// supplies the orbital count; a header, if present, wins and must agree
/// with nothing (overrides are only consulted in its absence).  Returns the
/// integral set and the electron count when one is known.
pub fn parse_integrals(
    text: &str,
    norb: Option<u32>,
    nelec: Option<u32>,
) -> Result<(IntegralSet, Option<u32>)> {
    let mut header_norb = None;
    let mut header_nelec = None;
    let mut body_start = 0usize; // line index of the first record

    let lines: Vec<&str> = text.lines().collect();
    let mut in_header = false;
    let mut header_seen = false;
    for (idx, raw) in lines.iter().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            body_start = idx + 1;
            continue;
        }
        if !header_seen && !in_header {
            if let Some(rest) = line.strip_prefix("&FCI") {
                in_header = true;
                header_seen = true;
                if parse_header_tokens(rest, idx + 1, &mut header_norb, &mut header_nelec)? {
                    in_header = false;
                }
                body_start = idx + 1;
                continue;
            }
            // no header: records start here
            body_start = idx;
            break;
        }
        if in_header {
            if parse_header_tokens(line, idx + 1, &mut header_norb, &mut header_nelec)? {
                in_header = false;
            }
            body_start = idx + 1;
            continue;
        }
        body_start = idx;
        break;
    }
    if in_header {
        return Err(Error::Parse {
            line: lines.len(),
            msg: "header never terminated with &END or /".into(),
        });
    }

    let k = match (header_norb, norb) {
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => {
            return Err(Error::Parse {
                line: 1,
                msg: "no &FCI header found and no orbital count supplied".into(),
            })
        }
    };
    let mut ints = IntegralSet::new(k);

    for (idx, raw) in lines.iter().enumerate().skip(body_start) {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `value i j k l`, found {} fields", toks.len()),
            });
        }
        let value: f64 = toks[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad value {:?}", toks[0]),
            })?;
        let mut ix = [0u32; 4];
        for (slot, tok) in ix.iter_mut().zip(&toks[1..]) {
            *slot = tok.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad index {tok:?}"),
            })?;
        }
        let bounds = |p: u32| -> Result<()> {
            if p > k {
                Err(Error::Parse {
                    line: lineno,
                    msg: format!("orbital {p} exceeds NORB={k}"),
                })
            } else {
                Ok(())
            }
        };
        match ix {
            [0, 0, 0, 0] => ints.set_e_core(value),
            [i, j, 0, 0] if i > 0 && j > 0 => {
                bounds(i)?;
                bounds(j)?;
                ints.set_h(i, j, value)?;
            }
            [i, j, kk, l] if i > 0 && j > 0 && kk > 0 && l > 0 => {
                for p in [i, j, kk, l] {
                    bounds(p)?;
                }
                ints.set_g(i, j, kk, l, value)?;
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unsupported index pattern {ix:?}"),
                })
            }
        }
    }

    Ok((ints, header_nelec.or(nelec)))
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Parses `KEY=VALUE` tokens of the header; returns true once the header is
/// closed by `&END` or `/`.
fn parse_header_tokens(
    text: &str,
    lineno: usize,
    norb: &mut Option<u32>,
    nelec: &mut Option<u32>,
) -> Result<bool> {
    for tok in text.replace(',', " ").split_whitespace() {
        if tok == "&END" || tok == "/" {
            return Ok(true);
        }
        if let Some((key, val)) = tok.split_once('=') {
            let parse = |v: &str| -> Result<u32> {
                v.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad header value {tok:?}"),
                })
            };
            match key.to_ascii_uppercase().as_str() {
                "NORB" => *norb = Some(parse(val)?),
                "NELEC" => *nelec = Some(parse(val)?),
                _ => {} // MS2, ORBSYM, ISYM... are accepted and ignored
            }
        }
    }
    Ok(false)
}

/// Pairing (picket-fence) model: `levels` doubly degenerate levels with
/// spacing `delta`, orbitals (2l+1, 2l+2) for level l = 0,1,...; constant
/// pair-hopping strength `g` between time-reversed pairs:
/// H = sum_l delta*l (n_{l,1} + n_{l,2}) - g sum_{l,l'} P+_l P_{l'}.
pub fn pairing_model(levels: u32, delta: f64, g: f64) -> IntegralSet {
    let mut ints = IntegralSet::new(2 * levels);
    for l in 0..levels {
        let e = delta * l as f64;
        ints.set_h(2 * l + 1, 2 * l + 1, e).unwrap();
        ints.set_h(2 * l + 2, 2 * l + 2, e).unwrap();
    }
    for l in 0..levels {
        for lp in 0..levels {
            // (u_l u_l' | d_l d_l') = -g realises -g P+_l P_l' after the
            // 1/2-sum over the 8-fold images
            ints.set_g(2 * l + 1, 2 * lp + 1, 2 * l + 2, 2 * lp + 2, -g)
                .unwrap();
        }
    }
    ints
}

/// Open Hubbard chain: `sites` sites, spin orbitals (2s-1, 2s) for site s,
/// hopping -t between same-spin neighbors, on-site repulsion U.
pub fn hubbard_chain(sites: u32, t: f64, u: f64) -> IntegralSet {
    let mut ints = IntegralSet::new(2 * sites);
    for s in 1..sites {
        ints.set_h(2 * s - 1, 2 * s + 1, -t).unwrap();
        ints.set_h(2 * s, 2 * s + 2, -t).unwrap();
    }
    for s in 1..=sites {
        ints.set_g(2 * s - 1, 2 * s - 1, 2 * s, 2 * s, u).unwrap();
    }
    ints
}

/// Dispatch by model name; `params` are (levels|sites, one-body scale,
/// interaction strength).
pub fn builtin_model(name: &str, size: u32, one_body: f64, interaction: f64) -> Result<IntegralSet> {
    match name {
        "pairing" => Ok(pairing_model(size, one_body, interaction)),
        "hubbard-chain" => Ok(hubbard_chain(size, one_body, interaction)),
        _ => Err(Error::Config(format!(
            "unknown model {name:?}; available: pairing, hubbard-chain"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eightfold_symmetry() {
        let mut ints = IntegralSet::new(4);
        ints.set_g(1, 2, 3, 4, 0.5).unwrap();
        for (p, q, r, s) in [
            (1, 2, 3, 4),
            (2, 1, 3, 4),
            (1, 2, 4, 3),
            (2, 1, 4, 3),
            (3, 4, 1, 2),
            (4, 3, 1, 2),
            (3, 4, 2, 1),
            (4, 3, 2, 1),
        ] {
            assert_eq!(ints.g(p, q, r, s), 0.5);
        }
        assert_eq!(ints.g(1, 3, 2, 4), 0.0);
        ints.set_h(1, 2, -0.25).unwrap();
        assert_eq!(ints.h(2, 1), -0.25);
    }

    #[test]
    fn parse_with_header() {
        let text = "\
&FCI NORB=4 NELEC=2\n MS2=0,\n ORBSYM=1,1,1,1,\n&END\n\
# one-electron part\n\
1.0 1 1 0 0\n\
0.5 1 2 1 2\n\
-2.25 0 0 0 0\n";
        let (ints, nelec) = parse_integrals(text, None, None).unwrap();
        assert_eq!(ints.k(), 4);
        assert_eq!(nelec, Some(2));
        assert_eq!(ints.h(1, 1), 1.0);
        assert_eq!(ints.g(1, 2, 1, 2), 0.5);
        assert_eq!(ints.g(2, 1, 2, 1), 0.5);
        assert_eq!(ints.e_core(), -2.25);
    }

    #[test]
    fn parse_fortran_exponent_and_slash_header() {
        let text = "&FCI NORB=2 NELEC=2 /\n1.0D-01 1 1 0 0\n";
        let (ints, _) = parse_integrals(text, None, None).unwrap();
        assert_eq!(ints.h(1, 1), 0.1);
    }

    #[test]
    fn parse_headerless_needs_norb() {
        let text = "1.0 1 1 0 0\n";
        assert!(matches!(
            parse_integrals(text, None, None),
            Err(Error::Parse { line: 1, .. })
        ));
        let (ints, nelec) = parse_integrals(text, Some(3), Some(1)).unwrap();
        assert_eq!(ints.k(), 3);
        assert_eq!(nelec, Some(1));
        assert_eq!(ints.h(1, 1), 1.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad_fields = "&FCI NORB=2 NELEC=2 &END\n1.0 1 1 0\n";
        match parse_integrals(bad_fields, None, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let bad_index = "&FCI NORB=2 NELEC=2 &END\n1.0 3 1 0 0\n";
        match parse_integrals(bad_index, None, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let bad_pattern = "&FCI NORB=2 NELEC=2 &END\n1.0 1 0 2 2\n";
        assert!(parse_integrals(bad_pattern, None, None).is_err());
        let bad_value = "&FCI NORB=2 NELEC=2 &END\nxyz 1 1 0 0\n";
        assert!(parse_integrals(bad_value, None, None).is_err());
    }

    #[test]
    fn fcidump_round_trip() {
        let ints = pairing_model(3, 1.0, 0.37);
        let text = ints.to_fcidump(4);
        let (back, nelec) = parse_integrals(&text, None, None).unwrap();
        assert_eq!(nelec, Some(4));
        assert!(ints.max_abs_difference(&back) < 1e-14);
    }

    #[test]
    fn pairing_structure() {
        let ints = pairing_model(2, 1.0, 0.5);
        assert_eq!(ints.k(), 4);
        assert_eq!(ints.h(1, 1), 0.0);
        assert_eq!(ints.h(3, 3), 1.0);
        assert_eq!(ints.h(4, 4), 1.0);
        assert_eq!(ints.g(1, 3, 2, 4), -0.5); // (u0 u1 | d0 d1)
        assert_eq!(ints.g(1, 1, 2, 2), -0.5); // diagonal pair term
        assert_eq!(ints.g(1, 2, 3, 4), 0.0);
    }

    #[test]
    fn hubbard_structure() {
        let ints = hubbard_chain(3, 2.0, 4.0);
        assert_eq!(ints.k(), 6);
        assert_eq!(ints.h(1, 3), -2.0);
        assert_eq!(ints.h(3, 5), -2.0);
        assert_eq!(ints.h(2, 4), -2.0);
        assert_eq!(ints.h(1, 5), 0.0); // not nearest neighbors
        assert_eq!(ints.h(1, 2), 0.0); // no spin flip
        assert_eq!(ints.g(1, 1, 2, 2), 4.0);
        assert_eq!(ints.g(3, 3, 4, 4), 4.0);
        assert_eq!(ints.g(1, 1, 4, 4), 0.0);
    }

    #[test]
    fn direct_sum_blocks() {
        let a = pairing_model(2, 1.0, 0.3);
        let b = hubbard_chain(2, 1.0, 2.0);
        let ab = a.direct_sum(&b);
        assert_eq!(ab.k(), 8);
        assert_eq!(ab.h(3, 3), 1.0);
        assert_eq!(ab.h(5, 7), -1.0); // shifted hubbard hopping
        assert_eq!(ab.g(1, 1, 2, 2), -0.3);
        assert_eq!(ab.g(5, 5, 6, 6), 2.0);
        assert_eq!(ab.g(1, 5, 1, 5), 0.0); // no cross-block terms
        assert_eq!(ab.h(1, 5), 0.0);
    }

    #[test]
    fn builtin_dispatch() {
        assert!(builtin_model("pairing", 2, 1.0, 0.5).is_ok());
        assert!(builtin_model("hubbard-chain", 2, 1.0, 0.5).is_ok());
        assert!(matches!(
            builtin_model("ising", 2, 1.0, 0.5),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rotation_by_identity_is_a_fixpoint() {
        let ints = hubbard_chain(2, 1.0, 1.5);
        let c = DMatrix::<f64>::identity(4, 4);
        let rot = ints.rotated(&c).unwrap();
        assert_eq!(ints.max_abs_difference(&rot), 0.0);
    }

    #[test]
    fn rotation_rejects_non_orthogonal_matrices() {
        let ints = pairing_model(2, 1.0, 0.5);
        let mut c = DMatrix::<f64>::identity(4, 4);
        c[(0, 0)] = 2.0;
        assert!(matches!(ints.rotated(&c), Err(Error::Config(_))));
        let small = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(ints.rotated(&small), Err(Error::Config(_))));
    }

    #[test]
    fn rotation_preserves_the_spectrum() {
        use crate::ham::Hamiltonian;
        use crate::solver::solve_fci;
        let mut ints = hubbard_chain(2, 1.0, 1.7);
        ints.set_e_core(0.3);
        ints.set_g(1, 3, 2, 4, 0.21).unwrap();
        ints.set_h(1, 4, -0.13).unwrap();
        // Givens rotations on two orbital pairs
        let mut c = DMatrix::<f64>::identity(4, 4);
        let (cos, sin) = (0.8f64, 0.6f64);
        c[(0, 0)] = cos;
        c[(0, 2)] = sin;
        c[(2, 0)] = -sin;
        c[(2, 2)] = cos;
        let mut c2 = DMatrix::<f64>::identity(4, 4);
        c2[(1, 1)] = 0.28;
        c2[(1, 3)] = -0.96;
        c2[(3, 1)] = 0.96;
        c2[(3, 3)] = 0.28;
        let rot = ints.rotated(&(c * c2)).unwrap();
        for n in 1..=3 {
            let a = solve_fci(&Hamiltonian::new(ints.clone()), n, 1 << 12, 0).unwrap();
            let b = solve_fci(&Hamiltonian::new(rot.clone()), n, 1 << 12, 0).unwrap();
            for (ea, eb) in a.energies.iter().zip(&b.energies) {
                assert!((ea - eb).abs() <= 1e-10, "N = {n}: {ea} vs {eb}");
            }
        }
    }
}
