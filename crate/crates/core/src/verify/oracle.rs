//! Brute-force reference computations, written independently of the
//! library's fast paths.

use crate::median::SampleFunction;
use crate::pointset::PointSet;
use crate::space::Space;

fn mass_above(space: &Space, set: &PointSet, values: &[f64], a: f64) -> f64 {
    set.iter().filter(|&x| values[x] > a).map(|x| space.weight(x)).sum()
}

/// `inf { a : mu{v > a} < s mu(A) }`, scanning every sample value.
pub fn max_median(space: &Space, set: &PointSet, s: f64, values: &[f64]) -> f64 {
    let total: f64 = set.iter().map(|x| space.weight(x)).sum();
    let mut candidates: Vec<f64> = set.iter().map(|x| values[x]).collect();
    candidates.sort_by(f64::total_cmp);
    candidates
        .into_iter()
        .find(|&a| mass_above(space, set, values, a) < s * total)
        .expect("the largest value always qualifies")
}

pub fn deviation_values(f: &SampleFunction, c: f64) -> Vec<f64> {
    f.values().iter().map(|v| (v - c).abs()).collect()
}

/// Minimum of `m^s_{|f-c|}` over sample values and pairwise midpoints.
pub fn candidate_oscillation(space: &Space, f: &SampleFunction, set: &PointSet, s: f64) -> f64 {
    let pts: Vec<usize> = set.to_vec();
    let mut best = f64::INFINITY;
    for (i, &x) in pts.iter().enumerate() {
        for &y in &pts[i..] {
            let c = 0.5 * (f.value(x) + f.value(y));
            best = best.min(max_median(space, set, s, &deviation_values(f, c)));
        }
    }
    best
}

fn range(f: &SampleFunction, set: &PointSet) -> (f64, f64) {
    set.iter()
        .map(|x| f.value(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// `m^s_{|f-c|}` scanned at 10^4 levels of `c` across the value range, then
/// rescanned finely around every level within one step of the coarse minimum
/// (the objective has slope +-1, so this catches every competing basin).
pub fn grid_scan_oscillation(space: &Space, f: &SampleFunction, set: &PointSet, s: f64) -> f64 {
    let (lo, hi) = range(f, set);
    if lo == hi {
        return 0.0;
    }
    let eval = |c: f64| max_median(space, set, s, &deviation_values(f, c));
    let n = 10_000;
    let h = (hi - lo) / (n - 1) as f64;
    let coarse: Vec<f64> = (0..n).map(|j| eval(lo + h * j as f64)).collect();
    let floor = coarse.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut best = floor;
    for (j, &v) in coarse.iter().enumerate() {
        if v <= floor + h {
            let c = lo + h * j as f64;
            for k in 0..=400 {
                best = best.min(eval(c - h + 2.0 * h * k as f64 / 400.0));
            }
        }
    }
    best
}

/// `avg_B |f - c|^q` minimized by a 10^4-level scan followed by three
/// zooms of 1000 levels around the best level (the objective is convex for
/// `q >= 1`).
pub fn grid_scan_integral(space: &Space, f: &SampleFunction, set: &PointSet, q: f64) -> f64 {
    let (lo, hi) = range(f, set);
    if lo == hi {
        return 0.0;
    }
    let total: f64 = set.iter().map(|x| space.weight(x)).sum();
    let eval = |c: f64| set.iter().map(|x| space.weight(x) * (f.value(x) - c).abs().powf(q)).sum::<f64>() / total;
    let scan = |a: f64, b: f64, n: usize| {
        let h = (b - a) / (n - 1) as f64;
        (0..n)
            .map(|j| (a + h * j as f64, eval(a + h * j as f64)))
            .fold((a, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
    };
    let mut h = (hi - lo) / 9_999.0;
    let (mut c, mut v) = scan(lo, hi, 10_000);
    for _ in 0..3 {
        let (c2, v2) = scan(c - h, c + h, 1000);
        if v2 < v {
            c = c2;
            v = v2;
        }
        h = 2.0 * h / 999.0;
    }
    v
}

/// Best packing value by enumerating every subset of candidates.
pub fn packing_enumeration(sets: &[PointSet], terms: &[f64]) -> f64 {
    let m = sets.len();
    assert!(m <= 20, "enumeration is exponential");
    let mut best: f64 = 0.0;
    'mask: for mask in 0u32..(1 << m) {
        let mut total = 0.0;
        for a in 0..m {
            if mask >> a & 1 == 0 {
                continue;
            }
            for b in a + 1..m {
                if mask >> b & 1 == 1 && sets[a].intersects(&sets[b]) {
                    continue 'mask;
                }
            }
            total += terms[a];
        }
        best = best.max(total);
    }
    best
}

/// Distinct member sets `{y : d(c, y) <= d(c, z)}` inside `region`.
pub fn ball_sets(space: &Space, region: &PointSet) -> Vec<PointSet> {
    let n = space.len();
    let mut out: Vec<PointSet> = Vec::new();
    for c in 0..n {
        for z in 0..n {
            let r = space.distance(c, z);
            let set = PointSet::from_indices(n, (0..n).filter(|&y| space.distance(c, y) <= r));
            if set.is_subset(region) && !out.contains(&set) {
                out.push(set);
            }
        }
    }
    out
}

/// `{y : d(c, y) < r}`.
pub fn open_ball(space: &Space, c: usize, r: f64) -> PointSet {
    let n = space.len();
    PointSet::from_indices(n, (0..n).filter(|&y| space.distance(c, y) < r))
}

/// One stopping-time family ball: center, radius and members.
#[derive(Clone, Debug)]
pub struct FamilySet {
    pub center: usize,
    pub radius: f64,
    pub members: PointSet,
}

/// Reference data for a CZ configuration, built from the raw definitions.
pub struct CzOracle {
    pub family: Vec<FamilySet>,
    /// `m^t_{|f|}` of every family ball.
    pub medians: Vec<f64>,
    /// `m^(t/alpha)_{|f|}(B0_hat)`.
    pub threshold: f64,
    pub hat: PointSet,
    pub abs: Vec<f64>,
    pub t: f64,
    /// `eta r0`.
    pub cap: f64,
}

impl CzOracle {
    /// Balls centered in `B(c0, r0)` with radius `min(d_next, eta r0)` for
    /// every distance `d < eta r0` from the center, and `alpha` recomputed
    /// from `c_mu` and `D`.
    pub fn new(space: &Space, f: &SampleFunction, c0: usize, r0: f64, eta: f64, t: f64, c_mu: f64, dim: f64) -> Self {
        let n = space.len();
        let cap = eta * r0;
        let base = open_ball(space, c0, r0);
        let mut family = Vec::new();
        for c in base.iter() {
            let mut ds: Vec<f64> = (0..n).map(|y| space.distance(c, y)).collect();
            ds.sort_by(f64::total_cmp);
            ds.dedup();
            for (k, &d) in ds.iter().enumerate() {
                if d >= cap {
                    break;
                }
                let radius = ds.get(k + 1).copied().unwrap_or(f64::INFINITY).min(cap);
                family.push(FamilySet {
                    center: c,
                    radius,
                    members: open_ball(space, c, radius),
                });
            }
        }
        let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
        let medians = family.iter().map(|b| max_median(space, &b.members, t, &abs)).collect();
        let alpha = 5f64.powf(dim) * c_mu * c_mu * (1.0 + 1.0 / eta).powf(dim);
        let hat = open_ball(space, c0, (1.0 + eta) * r0);
        let threshold = max_median(space, &hat, t / alpha, &abs);
        Self {
            family,
            medians,
            threshold,
            hat,
            abs,
            t,
            cap,
        }
    }

    pub fn max_family_median(&self) -> f64 {
        self.medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `E_lambda`: points of `B0_hat` in a family ball whose median exceeds `lambda`.
    pub fn level_set(&self, n: usize, lambda: f64) -> PointSet {
        let mut set = PointSet::empty(n);
        for (b, &m) in self.family.iter().zip(&self.medians) {
            if m > lambda {
                set.union_with(&b.members);
            }
        }
        set.intersection(&self.hat)
    }

    /// Family balls above the threshold whose radius exceeds `eta r0 / 5`.
    pub fn radius_lemma(&self) -> (usize, Vec<String>) {
        let mut fired = 0;
        let mut bad = Vec::new();
        for (b, &m) in self.family.iter().zip(&self.medians) {
            if m > self.threshold {
                fired += 1;
                if b.radius > self.cap / 5.0 * (1.0 + 1e-12) {
                    bad.push(format!("ball at {} radius {} above cap {}", b.center, b.radius, self.cap / 5.0));
                }
            }
        }
        (fired, bad)
    }

    /// Every certificate of a decomposition at `lambda`, given as
    /// `(center, radius, members)` triples.
    pub fn check_decomposition(
        &self,
        space: &Space,
        balls: &[(usize, f64, PointSet)],
        level_set: &PointSet,
        lambda: f64,
    ) -> Vec<String> {
        let n = space.len();
        let mut bad = Vec::new();
        let expected = self.level_set(n, lambda);
        if *level_set != expected {
            bad.push(format!("level set at {lambda} differs from the definition"));
        }
        for (i, (_, _, a)) in balls.iter().enumerate() {
            for (j, (_, _, b)) in balls.iter().enumerate().skip(i + 1) {
                if a.intersects(b) {
                    bad.push(format!("balls {i} and {j} overlap"));
                }
            }
        }
        let mut union = PointSet::empty(n);
        let mut union5 = PointSet::empty(n);
        for (c, r, members) in balls {
            if *members != open_ball(space, *c, *r) {
                bad.push(format!("ball ({c}, {r}) has wrong members"));
            }
            union.union_with(members);
            union5.union_with(&open_ball(space, *c, 5.0 * r));
            if *r > self.cap / 5.0 * (1.0 + 1e-12) {
                bad.push(format!("ball ({c}, {r}) exceeds eta r0 / 5"));
            }
            if max_median(space, members, self.t, &self.abs) <= lambda {
                bad.push(format!("ball ({c}, {r}) has median at most {lambda}"));
            }
            if 2.0 * r <= self.cap {
                let mut sets = vec![open_ball(space, *c, 2.0 * r)];
                for y in 0..n {
                    let d = space.distance(*c, y);
                    if d >= 2.0 * r && d < self.cap {
                        sets.push(PointSet::from_indices(n, (0..n).filter(|&z| space.distance(*c, z) <= d)));
                    }
                }
                if sets.iter().any(|s| max_median(space, s, self.t, &self.abs) > lambda) {
                    bad.push(format!("ball ({c}, {r}) has a dilate with median above {lambda}"));
                }
            }
        }
        if !union.is_subset(&expected) {
            bad.push("balls leave the level set".into());
        }
        if !expected.is_subset(&union5) {
            bad.push("level set not covered by 5-dilates".into());
        }
        bad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricInput;

    fn line(n: usize) -> Space {
        Space::new(
            (0..n).map(|i| format!("p{i}")).collect(),
            vec![1.0; n],
            MetricInput::Euclidean((0..n).map(|i| vec![i as f64]).collect()),
        )
        .unwrap()
    }

    #[test]
    fn brute_medians() {
        let s = line(2);
        let all = s.all();
        assert_eq!(max_median(&s, &all, 0.5, &[0.0, 1.0]), 1.0);
        assert_eq!(max_median(&s, &all, 1.0, &[0.0, 1.0]), 0.0);
        let f = SampleFunction::new(&s, vec![0.0, 1.0]).unwrap();
        assert_eq!(candidate_oscillation(&s, &f, &all, 0.5), 0.5);
        assert!((grid_scan_oscillation(&s, &f, &all, 0.5) - 0.5).abs() < 1e-9);
        assert!((grid_scan_integral(&s, &f, &all, 2.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn enumeration_and_balls() {
        let s = line(3);
        let sets = ball_sets(&s, &s.all());
        // {0}, {1}, {2}, {0,1}, {1,2}, {0,1,2}
        assert_eq!(sets.len(), 6);
        let a = PointSet::from_indices(3, [0, 1]);
        let b = PointSet::from_indices(3, [1, 2]);
        let c = PointSet::from_indices(3, [2]);
        assert_eq!(packing_enumeration(&[a, b, c], &[2.0, 3.0, 1.5]), 3.5);
        assert_eq!(open_ball(&s, 1, 1.0).to_vec(), vec![1]);
    }
}
