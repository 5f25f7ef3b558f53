//! Maximum-weight packings of pairwise-disjoint balls.
//!
//! A candidate is a member set with a nonnegative term; a packing is a set of
//! candidates with pairwise-disjoint member sets, and its value is the sum of
//! its terms. Totals are always summed in ascending candidate order so equal
//! packings produce bit-identical values.

use std::collections::HashMap;

use crate::pointset::PointSet;

#[derive(Clone, Debug)]
pub struct Candidate {
    pub members: PointSet,
    pub term: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PackingSolution {
    /// Chosen candidate indices, ascending.
    pub chosen: Vec<usize>,
    pub total: f64,
}

impl PackingSolution {
    pub fn empty() -> Self {
        Self {
            chosen: Vec::new(),
            total: 0.0,
        }
    }

    fn from_ids(cands: &[Candidate], mut chosen: Vec<usize>) -> Self {
        chosen.sort_unstable();
        let total = chosen.iter().map(|&k| cands[k].term).sum();
        Self { chosen, total }
    }

    /// Larger total wins; exact ties go to the lexicographically smaller id list.
    fn beats(&self, other: &PackingSolution) -> bool {
        self.total > other.total || (self.total == other.total && self.chosen < other.chosen)
    }
}

fn by_term_desc(cands: &[Candidate]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cands.len()).filter(|&k| cands[k].term > 0.0).collect();
    order.sort_by(|&a, &b| cands[b].term.total_cmp(&cands[a].term).then(a.cmp(&b)));
    order
}

/// Repeatedly take the heaviest candidate disjoint from those already taken.
/// A lower bound on the optimum.
pub fn greedy(cands: &[Candidate]) -> PackingSolution {
    let Some(first) = cands.first() else {
        return PackingSolution::empty();
    };
    let mut used = PointSet::empty(first.members.universe());
    let mut chosen = Vec::new();
    for k in by_term_desc(cands) {
        if !cands[k].members.intersects(&used) {
            used.union_with(&cands[k].members);
            chosen.push(k);
        }
    }
    PackingSolution::from_ids(cands, chosen)
}

/// Exact optimum by depth-first branch and bound.
///
/// Candidates are explored heaviest first. A node is cut when its value plus
/// an upper bound on what remains cannot reach the incumbent; the bound is
/// the smaller of the summed terms of the still-compatible candidates and the
/// pointwise bound `sum_x w(x) * max density of a remaining ball covering x`
/// over uncovered points (a packing spreads each term evenly over its members).
pub fn branch_and_bound(cands: &[Candidate], weights: &[f64]) -> PackingSolution {
    let order = by_term_desc(cands);
    if order.is_empty() {
        return PackingSolution::empty();
    }
    let n = weights.len();
    let m = order.len();
    // max_density[pos * n + x]: best term/measure among order[pos..] covering x
    let mut max_density = vec![0.0f64; (m + 1) * n];
    for pos in (0..m).rev() {
        let cand = &cands[order[pos]];
        let measure: f64 = cand.members.iter().map(|x| weights[x]).sum();
        let density = cand.term / measure;
        for x in 0..n {
            let next = max_density[(pos + 1) * n + x];
            max_density[pos * n + x] = if cand.members.contains(x) { next.max(density) } else { next };
        }
    }

    struct Search<'a> {
        cands: &'a [Candidate],
        order: &'a [usize],
        weights: &'a [f64],
        max_density: &'a [f64],
        best: PackingSolution,
        stack: Vec<usize>,
    }

    impl Search<'_> {
        fn bound(&self, pos: usize, used: &PointSet) -> f64 {
            let n = self.weights.len();
            let compatible: f64 = self.order[pos..]
                .iter()
                .filter(|&&k| !self.cands[k].members.intersects(used))
                .map(|&k| self.cands[k].term)
                .sum();
            let pointwise: f64 = (0..n)
                .filter(|&x| !used.contains(x))
                .map(|x| self.weights[x] * self.max_density[pos * n + x])
                .sum();
            compatible.min(pointwise)
        }

        fn visit(&mut self, pos: usize, used: &PointSet, value: f64) {
            if pos == self.order.len() {
                let candidate = PackingSolution::from_ids(self.cands, self.stack.clone());
                if candidate.beats(&self.best) {
                    self.best = candidate;
                }
                return;
            }
            let slack = 1e-12 * self.best.total.abs();
            if value + self.bound(pos, used) < self.best.total - slack {
                return;
            }
            let k = self.order[pos];
            if !self.cands[k].members.intersects(used) {
                let next = used.union(&self.cands[k].members);
                self.stack.push(k);
                self.visit(pos + 1, &next, value + self.cands[k].term);
                self.stack.pop();
            }
            self.visit(pos + 1, used, value);
        }
    }

    let mut search = Search {
        cands,
        order: &order,
        weights,
        max_density: &max_density,
        best: greedy(cands),
        stack: Vec::new(),
    };
    let universe = cands[order[0]].members.universe();
    search.visit(0, &PointSet::empty(universe), 0.0);
    search.best
}

/// Exact optimum by memoized recursion on the set of still-available points.
///
/// The lowest available point is either left uncovered or covered by a
/// candidate whose smallest member it is; every packing is reached exactly
/// this way. On line-like spaces, where balls are runs of consecutive points,
/// the reachable states are just the suffixes, so this scales to the full
/// canonical family of a 64-point grid.
pub fn memoized(cands: &[Candidate]) -> PackingSolution {
    let live: Vec<usize> = (0..cands.len()).filter(|&k| cands[k].term > 0.0).collect();
    if live.is_empty() {
        return PackingSolution::empty();
    }
    let universe = cands[live[0]].members.universe();
    let mut by_min: Vec<Vec<usize>> = vec![Vec::new(); universe];
    for &k in &live {
        if let Some(x) = cands[k].members.first() {
            by_min[x].push(k);
        }
    }
    let mut avail = PointSet::empty(universe);
    for &k in &live {
        avail.union_with(&cands[k].members);
    }

    type Memo = HashMap<PointSet, (f64, Option<usize>)>;
    fn solve(avail: &PointSet, cands: &[Candidate], by_min: &[Vec<usize>], memo: &mut Memo) -> f64 {
        let Some(x) = avail.first() else {
            return 0.0;
        };
        if let Some(&(v, _)) = memo.get(avail) {
            return v;
        }
        let mut rest = avail.clone();
        rest.remove(x);
        let mut best = solve(&rest, cands, by_min, memo);
        let mut choice = None;
        for &k in &by_min[x] {
            if cands[k].members.is_subset(avail) {
                let v = cands[k].term + solve(&avail.difference(&cands[k].members), cands, by_min, memo);
                if v > best {
                    best = v;
                    choice = Some(k);
                }
            }
        }
        memo.insert(avail.clone(), (best, choice));
        best
    }

    let mut memo = Memo::new();
    solve(&avail, cands, &by_min, &mut memo);
    let mut chosen = Vec::new();
    let mut state = avail;
    while let Some(x) = state.first() {
        match memo.get(&state).and_then(|&(_, c)| c) {
            Some(k) => {
                chosen.push(k);
                state = state.difference(&cands[k].members);
            }
            None => state.remove(x),
        }
    }
    PackingSolution::from_ids(cands, chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(universe: usize, members: &[usize], term: f64) -> Candidate {
        Candidate {
            members: PointSet::from_indices(universe, members.iter().copied()),
            term,
        }
    }

    fn brute(cands: &[Candidate]) -> f64 {
        let m = cands.len();
        let mut best: f64 = 0.0;
        for mask in 0u32..(1 << m) {
            let mut used = PointSet::empty(cands[0].members.universe());
            let mut total = 0.0;
            let mut ok = true;
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    if cands[k].members.intersects(&used) {
                        ok = false;
                        break;
                    }
                    used.union_with(&cands[k].members);
                    total += cands[k].term;
                }
            }
            if ok {
                best = best.max(total);
            }
        }
        best
    }

    #[test]
    fn greedy_is_suboptimal_on_a_path() {
        // a heavy middle interval blocks two lighter ones that beat it together
        let cands = vec![cand(4, &[0, 1], 2.0), cand(4, &[1, 2], 3.0), cand(4, &[2, 3], 2.0)];
        let w = [1.0; 4];
        assert_eq!(greedy(&cands).total, 3.0);
        let exact = branch_and_bound(&cands, &w);
        assert_eq!(exact.total, 4.0);
        assert_eq!(exact.chosen, vec![0, 2]);
        assert_eq!(memoized(&cands).total, 4.0);
        assert_eq!(brute(&cands), 4.0);
    }

    #[test]
    fn ties_prefer_smaller_ids() {
        let cands = vec![cand(2, &[0], 1.0), cand(2, &[1], 1.0), cand(2, &[0, 1], 2.0)];
        let w = [1.0, 1.0];
        assert_eq!(branch_and_bound(&cands, &w).chosen, vec![0, 1]);
    }

    #[test]
    fn zero_terms_give_empty_packing() {
        let cands = vec![cand(2, &[0], 0.0), cand(2, &[0, 1], 0.0)];
        assert_eq!(branch_and_bound(&cands, &[1.0, 1.0]), PackingSolution::empty());
        assert_eq!(memoized(&cands), PackingSolution::empty());
        assert_eq!(greedy(&cands), PackingSolution::empty());
    }

    #[test]
    fn exact_solvers_agree_with_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let n = rng.gen_range(2..8);
            let m = rng.gen_range(1..12);
            let cands: Vec<Candidate> = (0..m)
                .map(|_| {
                    let mut set = PointSet::empty(n);
                    set.insert(rng.gen_range(0..n));
                    for x in 0..n {
                        if rng.gen_bool(0.3) {
                            set.insert(x);
                        }
                    }
                    Candidate {
                        members: set,
                        term: if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..5.0) },
                    }
                })
                .collect();
            let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
            let oracle = brute(&cands);
            let bb = branch_and_bound(&cands, &w).total;
            let memo = memoized(&cands).total;
            assert!((bb - oracle).abs() <= 1e-12 * oracle.max(1.0));
            assert!((memo - oracle).abs() <= 1e-12 * oracle.max(1.0));
            assert!(greedy(&cands).total <= oracle + 1e-12);
        }
    }
}
