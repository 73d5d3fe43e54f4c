//! Reference selection as a minimum-cost Hamming covering problem: every
//! target determinant must lie within rank rho (Hamming distance 2*rho) of
//! some chosen reference, references are drawn from the candidate slice
//! around the targets, and costs are exact rationals.
//!
//! The covering BILP is solved by an exact branch-and-bound rather than an
//! external ILP library; candidate sets stay small at the scales this crate
//! targets.

use std::collections::{BTreeMap, BTreeSet};

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

use crate::det::{subsets, Det};
use crate::error::{Error, Result};

/// Default branch-and-bound node budget.
pub const DEFAULT_NODE_CAP: u64 = 1_000_000;

/// A covering instance: choose references so that every target is within
/// Hamming distance 2*rho, at minimum total cost.
#[derive(Clone, Debug)]
pub struct CoverInstance {
    k: u32,
    n: u32,
    targets: Vec<Det>,
    rho: u32,
    /// Candidate costs; `None` means uniform cost 1 over the whole
    /// candidate set.  When a map is supplied, candidates absent from it
    /// are unavailable (the infinite-cost convention).
    costs: Option<BTreeMap<Det, BigRational>>,
    node_cap: u64,
}

/// Search log attached to a solution.
#[derive(Clone, Debug)]
pub struct CoverCertificate {
    /// Size of the candidate set the search ran over.
    pub candidates: usize,
    /// Zero-cost candidates included up front.
    pub forced: usize,
    /// Cost of the greedy warm start.
    pub greedy_cost: BigRational,
    /// Combinatorial lower bound at the root.
    pub root_lower_bound: BigRational,
    pub nodes_explored: u64,
    pub node_cap: u64,
}

/// Selected references with exact total cost.  `optimal` is true only when
/// the search terminated naturally under the node budget.
#[derive(Clone, Debug)]
pub struct CoverSolution {
    pub references: Vec<Det>,
    pub total_cost: BigRational,
    pub optimal: bool,
    pub certificate: CoverCertificate,
}

/// Per-target line of a coverage check.
#[derive(Clone, Debug)]
pub struct TargetReport {
    pub target: Det,
    /// Closest selected reference (smallest mask on ties); `None` when the
    /// selection is empty.
    pub nearest: Option<Det>,
    pub hamming: u32,
    /// Excitation rank from the nearest reference, half the Hamming
    /// distance.
    pub rank: u32,
    pub covered: bool,
}

#[derive(Clone, Debug)]
pub struct CoverReport {
    pub targets: Vec<TargetReport>,
    pub pass: bool,
}

impl CoverInstance {
    /// Validates 1 <= rho <= n and that every target is an n-subset of the
    /// first k orbitals.
    pub fn new(k: u32, n: u32, targets: Vec<Det>, rho: u32) -> Result<CoverInstance> {
        if n == 0 || n > k {
            return Err(Error::Config(format!("need 0 < N <= K, got N = {n}, K = {k}")));
        }
        if rho == 0 || rho > n {
            return Err(Error::Config(format!(
                "truncation rank must satisfy 1 <= rho <= N, got rho = {rho}"
            )));
        }
        if targets.len() > 128 {
            return Err(Error::Config(format!(
                "at most 128 targets are supported, got {}",
                targets.len()
            )));
        }
        let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        for &t in &targets {
            if t.len() != n || t.0 & !mask != 0 {
                return Err(Error::Config(format!(
                    "target {t} is not an {n}-electron state on {k} orbitals"
                )));
            }
        }
        Ok(CoverInstance {
            k,
            n,
            targets,
            rho,
            costs: None,
            node_cap: DEFAULT_NODE_CAP,
        })
    }

    /// Installs a cost map; all costs must be nonnegative.  Candidates not
    /// in the map become unavailable.
    pub fn with_costs(mut self, costs: BTreeMap<Det, BigRational>) -> Result<CoverInstance> {
        for (d, c) in &costs {
            if c.is_negative() {
                return Err(Error::Config(format!("negative cost for candidate {d}")));
            }
        }
        self.costs = Some(costs);
        Ok(self)
    }

    pub fn with_node_cap(mut self, cap: u64) -> CoverInstance {
        self.node_cap = cap;
        self
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn rho(&self) -> u32 {
        self.rho
    }

    pub fn targets(&self) -> &[Det] {
        &self.targets
    }

    /// Cost of one candidate: the map entry, 1 under uniform costs, `None`
    /// when a map is present and omits the candidate.
    fn cost_of(&self, d: Det) -> Option<BigRational> {
        match &self.costs {
            None => Some(BigRational::one()),
            Some(m) => m.get(&d).cloned(),
        }
    }
}

/// All n-subsets within Hamming distance 2*rho of a center, enumerated as
/// "drop d occupied, add d unoccupied" for d <= rho.
fn ball(k: u32, rho: u32, center: Det) -> BTreeSet<Det> {
    let occ = center.orbitals();
    let virt: Vec<u32> = (1..=k).filter(|&p| !center.contains(p)).collect();
    let mut out = BTreeSet::new();
    for d in 0..=rho.min(occ.len() as u32).min(virt.len() as u32) {
        for drop in subsets(occ.len() as u32, d) {
            let removed = drop
                .orbitals()
                .iter()
                .fold(0u64, |m, &i| m | 1u64 << (occ[(i - 1) as usize] - 1));
            for add in subsets(virt.len() as u32, d) {
                let added = add
                    .orbitals()
                    .iter()
                    .fold(0u64, |m, &i| m | 1u64 << (virt[(i - 1) as usize] - 1));
                out.insert(Det((center.0 & !removed) | added));
            }
        }
    }
    out
}

/// The candidate slice: the union of the radius-2*rho balls around the
/// targets, intersected with the n-electron states.  Deduplicated; ordered
/// by distance to the nearest target, then by mask, so that a target
/// always precedes the states that merely surround it.
pub fn candidate_set(instance: &CoverInstance) -> Vec<Det> {
    let mut set = BTreeSet::new();
    for &t in &instance.targets {
        set.extend(ball(instance.k, instance.rho, t));
    }
    let mut out: Vec<Det> = set.into_iter().collect();
    out.sort_by_key(|&d| {
        (
            instance.targets.iter().map(|&t| d.hamming(t)).min(),
            d.0,
        )
    });
    out
}

/// Coverage bitmask over targets for one candidate.
fn coverage(instance: &CoverInstance, cand: Det) -> u128 {
    let mut m = 0u128;
    for (j, &t) in instance.targets.iter().enumerate() {
        if cand.hamming(t) <= 2 * instance.rho {
            m |= 1u128 << j;
        }
    }
    m
}

struct Search<'a> {
    cover: &'a [u128],
    cost: &'a [BigRational],
    all: u128,
    node_cap: u64,
    nodes: u64,
    capped: bool,
    /// Best solution so far: positive-cost picks and their total.
    best: Vec<usize>,
    best_cost: BigRational,
    /// Whether `best` came from the tree (then it is already the
    /// lexicographically smallest optimum found so far) or only from the
    /// greedy warm start.
    best_from_tree: bool,
}

impl Search<'_> {
    /// Max-disjoint-targets bound: targets whose remaining coverer sets are
    /// pairwise disjoint each need their own candidate, so the cheapest
    /// coverer of each adds up to a valid lower bound.  `None` flags an
    /// uncoverable target, i.e. an infeasible branch.
    fn lower_bound(&self, covered: u128, from: usize) -> Option<BigRational> {
        let mut bound = BigRational::zero();
        let mut used: Vec<usize> = Vec::new();
        let mut uncovered = self.all & !covered;
        let mut j = 0;
        while uncovered != 0 {
            if uncovered & 1 != 0 {
                let bit = 1u128 << j;
                let coverers: Vec<usize> = (from..self.cover.len())
                    .filter(|&v| self.cover[v] & bit != 0)
                    .collect();
                if coverers.is_empty() {
                    return None;
                }
                if coverers.iter().all(|v| !used.contains(v)) {
                    bound += coverers
                        .iter()
                        .map(|&v| &self.cost[v])
                        .min()
                        .expect("nonempty coverer list")
                        .clone();
                    used.extend(coverers);
                }
            }
            uncovered >>= 1;
            j += 1;
        }
        Some(bound)
    }

    fn offer(&mut self, picks: &[usize], cost: &BigRational) {
        if *cost < self.best_cost || (*cost == self.best_cost && !self.best_from_tree) {
            self.best = picks.to_vec();
            self.best_cost = cost.clone();
            self.best_from_tree = true;
        }
    }

    /// Include-first depth-first search in candidate-index order; the first
    /// optimum reached is the lexicographically smallest index set, after
    /// which equal-cost branches are pruned.
    fn dfs(&mut self, i: usize, covered: u128, cost: &BigRational, picks: &mut Vec<usize>) {
        if self.capped {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.node_cap {
            self.capped = true;
            return;
        }
        if covered == self.all {
            self.offer(picks, cost);
            return;
        }
        let Some(lb) = self.lower_bound(covered, i) else {
            return;
        };
        let reach = cost + lb;
        if reach > self.best_cost || (reach == self.best_cost && self.best_from_tree) {
            return;
        }
        if i == self.cover.len() {
            return;
        }
        if self.cover[i] & !covered != 0 {
            picks.push(i);
            let with = cost + &self.cost[i];
            self.dfs(i + 1, covered | self.cover[i], &with, picks);
            picks.pop();
        }
        self.dfs(i + 1, covered, cost, picks);
    }
}

/// Exact minimum-cost cover over the candidate slice.  Zero-cost
/// candidates are always part of the selection; among equal-cost optima
/// the lexicographically smallest candidate index set wins.  Exhausting
/// the node budget returns the best cover found with `optimal = false`.
pub fn solve_cover(instance: &CoverInstance) -> Result<CoverSolution> {
    let all: u128 = if instance.targets.is_empty() {
        0
    } else {
        (0..instance.targets.len()).fold(0u128, |m, j| m | (1u128 << j))
    };

    // available candidates with their costs, in ascending mask order
    let mut forced: Vec<Det> = Vec::new();
    let mut forced_covered = 0u128;
    let mut cands: Vec<Det> = Vec::new();
    let mut costs: Vec<BigRational> = Vec::new();
    let mut covers: Vec<u128> = Vec::new();
    let mut n_candidates = 0usize;
    for d in candidate_set(instance) {
        let Some(c) = instance.cost_of(d) else {
            continue;
        };
        n_candidates += 1;
        if c.is_zero() {
            forced_covered |= coverage(instance, d);
            forced.push(d);
        } else {
            covers.push(coverage(instance, d));
            costs.push(c);
            cands.push(d);
        }
    }

    for (j, &t) in instance.targets.iter().enumerate() {
        let bit = 1u128 << j;
        if forced_covered & bit == 0 && covers.iter().all(|c| c & bit == 0) {
            return Err(Error::Config(format!(
                "target {t} has no affordable candidate within rank {}",
                instance.rho
            )));
        }
    }

    // greedy warm start: cheapest cost per newly covered target
    let mut greedy: Vec<usize> = Vec::new();
    let mut greedy_cost = BigRational::zero();
    let mut covered = forced_covered;
    while covered != all {
        let pick = (0..cands.len())
            .filter(|&v| !greedy.contains(&v))
            .filter_map(|v| {
                let new = (covers[v] & !covered).count_ones();
                if new == 0 {
                    None
                } else {
                    Some((v, &costs[v] / BigInt::from(new)))
                }
            })
            .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(v, _)| v)
            .expect("coverable instance has a greedy pick");
        covered |= covers[pick];
        greedy_cost += &costs[pick];
        greedy.push(pick);
    }
    greedy.sort_unstable();

    let mut search = Search {
        cover: &covers,
        cost: &costs,
        all,
        node_cap: instance.node_cap,
        nodes: 0,
        capped: false,
        best: greedy,
        best_cost: greedy_cost.clone(),
        best_from_tree: false,
    };
    let root_lower_bound = search
        .lower_bound(forced_covered, 0)
        .expect("coverability was just checked");
    if forced_covered != all {
        let mut picks = Vec::new();
        search.dfs(0, forced_covered, &BigRational::zero(), &mut picks);
    }

    let n_forced = forced.len();
    let mut references = forced;
    references.extend(search.best.iter().map(|&v| cands[v]));
    references.sort();
    Ok(CoverSolution {
        references,
        total_cost: search.best_cost,
        optimal: !search.capped,
        certificate: CoverCertificate {
            candidates: n_candidates,
            forced: n_forced,
            greedy_cost,
            root_lower_bound,
            nodes_explored: search.nodes,
            node_cap: instance.node_cap,
        },
    })
}

/// Distance report of a selection against the instance's targets: nearest
/// selected reference per target and whether every target is within
/// Hamming distance 2*rho.
pub fn verify_cover(instance: &CoverInstance, omega: &[Det]) -> CoverReport {
    let mut targets = Vec::with_capacity(instance.targets.len());
    let mut pass = true;
    for &t in &instance.targets {
        let nearest = omega
            .iter()
            .copied()
            .min_by_key(|r| (r.hamming(t), r.0));
        let hamming = nearest.map_or(u32::MAX, |r| r.hamming(t));
        let covered = hamming <= 2 * instance.rho;
        pass &= covered;
        targets.push(TargetReport {
            target: t,
            nearest,
            hamming,
            rank: if nearest.is_some() { hamming.div_ceil(2) } else { u32::MAX },
            covered,
        });
    }
    CoverReport { targets, pass }
}

fn binary_entropy(x: f64) -> f64 {
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Informational estimate of the candidate-to-sphere size ratio n/|S|:
/// J * sqrt(8 K lam'(1 - lam')) * 2^(-K (H(lam') - H(lam))) with
/// lam = 2 rho / K and lam' = N / K, valid for 0 < lam, lam' < 1/2;
/// `None` outside that window.
pub fn covering_fraction_estimate(k: u32, n: u32, rho: u32, j: usize) -> Option<f64> {
    let lam = 2.0 * rho as f64 / k as f64;
    let lamp = n as f64 / k as f64;
    if lam <= 0.0 || lam >= 0.5 || lamp <= 0.0 || lamp >= 0.5 {
        return None;
    }
    let kf = k as f64;
    Some(
        j as f64
            * (8.0 * kf * lamp * (1.0 - lamp)).sqrt()
            * (-kf * (binary_entropy(lamp) - binary_entropy(lam))).exp2(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::det::choose;
    use rand::seq::SliceRandom;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn det(orbs: &[u32], k: u32) -> Det {
        Det::from_orbitals(orbs, k).unwrap()
    }

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn full_radius_ball_is_the_whole_sphere() {
        let inst = CoverInstance::new(5, 2, vec![det(&[1, 2], 5)], 2).unwrap();
        let mut cands = candidate_set(&inst);
        assert_eq!(cands.len(), choose(5, 2) as usize);
        cands.sort();
        let all: Vec<Det> = subsets(5, 2).collect();
        assert_eq!(cands, all);
    }

    #[test]
    fn rank_one_ball_on_four_orbitals() {
        let inst = CoverInstance::new(4, 3, vec![det(&[1, 2, 3], 4)], 1).unwrap();
        let cands = candidate_set(&inst);
        assert_eq!(
            cands,
            vec![
                det(&[1, 2, 3], 4),
                det(&[1, 2, 4], 4),
                det(&[1, 3, 4], 4),
                det(&[2, 3, 4], 4),
            ]
        );
    }

    #[test]
    fn candidate_count_respects_ball_size_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let k = rng.gen_range(4..9);
            let n = rng.gen_range(1..k);
            let rho = rng.gen_range(1..=n);
            let all: Vec<Det> = subsets(k, n).collect();
            let j = rng.gen_range(1..4usize);
            let targets: Vec<Det> = all.choose_multiple(&mut rng, j).copied().collect();
            let inst = CoverInstance::new(k, n, targets.clone(), rho).unwrap();
            let bound: u128 = (0..=rho as u64)
                .map(|d| choose(n as u64, d) * choose((k - n) as u64, d))
                .sum::<u128>()
                * targets.len() as u128;
            assert!(candidate_set(&inst).len() as u128 <= bound);
        }
    }

    #[test]
    fn self_cover_is_free_of_search() {
        let inst = CoverInstance::new(6, 3, vec![det(&[2, 4, 6], 6)], 1).unwrap();
        let sol = solve_cover(&inst).unwrap();
        assert_eq!(sol.references, vec![det(&[2, 4, 6], 6)]);
        assert_eq!(sol.total_cost, rational(1, 1));
        assert!(sol.optimal);
        assert!(verify_cover(&inst, &sol.references).pass);
    }

    #[test]
    fn antipodal_targets_need_two_references() {
        let targets = vec![det(&[1, 2, 3], 6), det(&[4, 5, 6], 6)];
        let inst = CoverInstance::new(6, 3, targets, 1).unwrap();
        let sol = solve_cover(&inst).unwrap();
        assert_eq!(sol.references.len(), 2);
        assert_eq!(sol.total_cost, rational(2, 1));
        assert!(sol.optimal);
        assert!(verify_cover(&inst, &sol.references).pass);
    }

    #[test]
    fn bridging_candidate_wins_and_ties_break_low() {
        // both targets sit within distance 2 of any mixed pair, so one
        // reference suffices; {1,3} is the smallest such mask
        let targets = vec![det(&[1, 2], 4), det(&[3, 4], 4)];
        let inst = CoverInstance::new(4, 2, targets, 1).unwrap();
        let sol = solve_cover(&inst).unwrap();
        assert_eq!(sol.references, vec![det(&[1, 3], 4)]);
        assert_eq!(sol.total_cost, rational(1, 1));
        assert!(sol.optimal);
    }

    #[test]
    fn zero_cost_candidates_are_always_selected() {
        let targets = vec![det(&[1, 2], 4), det(&[3, 4], 4)];
        let inst = CoverInstance::new(4, 2, targets.clone(), 1).unwrap();
        let mut costs = BTreeMap::new();
        for d in candidate_set(&inst) {
            costs.insert(d, rational(1, 1));
        }
        // one free candidate: the remaining target gets covered by itself
        // (it precedes the bridges in candidate order)
        costs.insert(det(&[3, 4], 4), rational(0, 1));
        let inst = inst.with_costs(costs.clone()).unwrap();
        let sol = solve_cover(&inst).unwrap();
        assert_eq!(sol.references, vec![det(&[1, 2], 4), det(&[3, 4], 4)]);
        assert_eq!(sol.total_cost, rational(1, 1));
        assert_eq!(sol.certificate.forced, 1);
        assert!(sol.optimal);

        // a second free candidate covers everything, yet the redundant
        // free rider stays in the selection
        costs.insert(det(&[2, 4], 4), rational(0, 1));
        let inst = CoverInstance::new(4, 2, targets, 1)
            .unwrap()
            .with_costs(costs)
            .unwrap();
        let sol = solve_cover(&inst).unwrap();
        assert_eq!(sol.references, vec![det(&[2, 4], 4), det(&[3, 4], 4)]);
        assert!(sol.total_cost.is_zero());
        assert_eq!(sol.certificate.forced, 2);
        assert!(sol.optimal);
    }

    #[test]
    fn omitted_candidates_are_unavailable() {
        let targets = vec![det(&[1, 2], 4), det(&[3, 4], 4)];
        let inst = CoverInstance::new(4, 2, targets, 1).unwrap();
        let mut costs = BTreeMap::new();
        // drop every bridging pair; only the targets themselves remain
        costs.insert(det(&[1, 2], 4), rational(1, 2));
        costs.insert(det(&[3, 4], 4), rational(1, 3));
        let inst = inst.with_costs(costs).unwrap();
        let sol = solve_cover(&inst).unwrap();
        assert_eq!(sol.references, vec![det(&[1, 2], 4), det(&[3, 4], 4)]);
        assert_eq!(sol.total_cost, rational(5, 6));
        assert!(sol.optimal);
    }

    #[test]
    fn uncoverable_target_is_a_config_error() {
        let targets = vec![det(&[1, 2], 4), det(&[3, 4], 4)];
        let inst = CoverInstance::new(4, 2, targets, 1).unwrap();
        let mut costs = BTreeMap::new();
        costs.insert(det(&[1, 2], 4), rational(1, 1));
        let inst = inst.with_costs(costs).unwrap();
        assert!(matches!(solve_cover(&inst), Err(Error::Config(_))));
    }

    #[test]
    fn node_cap_degrades_to_feasible_not_optimal() {
        let targets = vec![det(&[1, 2, 3], 7), det(&[3, 4, 5], 7), det(&[5, 6, 7], 7)];
        let inst = CoverInstance::new(7, 3, targets, 1)
            .unwrap()
            .with_node_cap(1);
        let sol = solve_cover(&inst).unwrap();
        assert!(!sol.optimal);
        assert!(verify_cover(&inst, &sol.references).pass);
        assert_eq!(sol.total_cost, sol.certificate.greedy_cost);
    }

    #[test]
    fn verify_cover_reports_distances() {
        let targets = vec![det(&[1, 2], 5), det(&[4, 5], 5)];
        let inst = CoverInstance::new(5, 2, targets.clone(), 1).unwrap();
        let report = verify_cover(&inst, &targets);
        assert!(report.pass);
        assert!(report.targets.iter().all(|t| t.hamming == 0 && t.rank == 0));

        let report = verify_cover(&inst, &[]);
        assert!(!report.pass);
        assert!(report.targets.iter().all(|t| t.nearest.is_none()));

        let report = verify_cover(&inst, &[det(&[1, 3], 5)]);
        assert_eq!(report.targets[0].hamming, 2);
        assert_eq!(report.targets[0].rank, 1);
        assert_eq!(report.targets[1].hamming, 4);
        assert_eq!(report.targets[1].rank, 2);
        assert!(!report.pass);
    }

    #[test]
    fn rank_is_half_the_hamming_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let all: Vec<Det> = subsets(8, 4).collect();
        for _ in 0..200 {
            let a = *all.choose(&mut rng).unwrap();
            let b = *all.choose(&mut rng).unwrap();
            assert_eq!(a.hamming(b), 2 * b.difference(a).len());
        }
    }

    fn brute_force_optimum(inst: &CoverInstance) -> Option<BigRational> {
        let cands = candidate_set(inst);
        let priced: Vec<(Det, BigRational)> = cands
            .iter()
            .filter_map(|&d| inst.cost_of(d).map(|c| (d, c)))
            .collect();
        let mut best: Option<BigRational> = None;
        for pick in 0u64..(1 << priced.len()) {
            let chosen: Vec<Det> = (0..priced.len())
                .filter(|&i| pick >> i & 1 != 0)
                .map(|i| priced[i].0)
                .collect();
            if !verify_cover(inst, &chosen).pass {
                continue;
            }
            let cost: BigRational = (0..priced.len())
                .filter(|&i| pick >> i & 1 != 0)
                .map(|i| priced[i].1.clone())
                .sum();
            if best.as_ref().is_none_or(|b| cost < *b) {
                best = Some(cost);
            }
        }
        best
    }

    #[test]
    fn search_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut checked = 0;
        while checked < 25 {
            let k = rng.gen_range(4..8);
            let n = rng.gen_range(2..k.min(5));
            let rho = rng.gen_range(1..=n.min(2));
            let all: Vec<Det> = subsets(k, n).collect();
            let j = rng.gen_range(1..4usize);
            let targets: Vec<Det> = all.choose_multiple(&mut rng, j).copied().collect();
            let mut inst = CoverInstance::new(k, n, targets, rho).unwrap();
            if candidate_set(&inst).len() > 16 {
                continue;
            }
            if rng.gen_bool(0.5) {
                let costs: BTreeMap<Det, BigRational> = candidate_set(&inst)
                    .into_iter()
                    .map(|d| (d, rational(rng.gen_range(1..6), rng.gen_range(1..4))))
                    .collect();
                inst = inst.with_costs(costs).unwrap();
            }
            let sol = solve_cover(&inst).unwrap();
            assert!(sol.optimal);
            assert!(verify_cover(&inst, &sol.references).pass);
            assert_eq!(sol.total_cost, brute_force_optimum(&inst).unwrap());
            checked += 1;
        }
    }

    #[test]
    fn cost_is_monotone_in_the_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10 {
            let k = 8;
            let n = 4;
            let all: Vec<Det> = subsets(k, n).collect();
            let targets: Vec<Det> = all.choose_multiple(&mut rng, 3).copied().collect();
            let mut last: Option<BigRational> = None;
            for rho in 1..=n {
                let inst = CoverInstance::new(k, n, targets.clone(), rho).unwrap();
                let sol = solve_cover(&inst).unwrap();
                assert!(sol.optimal);
                if let Some(prev) = last {
                    assert!(sol.total_cost <= prev);
                }
                last = Some(sol.total_cost);
            }
        }
    }

    #[test]
    fn instance_validation() {
        assert!(CoverInstance::new(4, 2, vec![det(&[1, 2], 4)], 0).is_err());
        assert!(CoverInstance::new(4, 2, vec![det(&[1, 2], 4)], 3).is_err());
        assert!(CoverInstance::new(4, 2, vec![det(&[1, 2, 3], 4)], 1).is_err());
        assert!(CoverInstance::new(4, 0, vec![], 1).is_err());
        let neg = BTreeMap::from([(det(&[1, 2], 4), rational(-1, 2))]);
        assert!(CoverInstance::new(4, 2, vec![det(&[1, 2], 4)], 1)
            .unwrap()
            .with_costs(neg)
            .is_err());
    }

    #[test]
    fn fraction_estimate_window() {
        assert!(covering_fraction_estimate(16, 5, 2, 2).is_some());
        // lam = 2*4/16 = 1/2 is outside the open window
        assert!(covering_fraction_estimate(16, 5, 4, 2).is_none());
        assert!(covering_fraction_estimate(16, 8, 1, 1).is_none());
        let f = covering_fraction_estimate(16, 5, 1, 1).unwrap();
        let lam: f64 = 2.0 / 16.0;
        let lamp: f64 = 5.0 / 16.0;
        let h = |x: f64| -x * x.log2() - (1.0 - x) * (1.0 - x).log2();
        let want = (8.0 * 16.0 * lamp * (1.0 - lamp)).sqrt()
            * 2f64.powf(-16.0 * (h(lamp) - h(lam)));
        assert!((f - want).abs() < 1e-12);
    }
}
