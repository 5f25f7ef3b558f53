//! L^p, weak L^p, BMO_{0,s}, JN_{p,q} and JN_{p,0,s} on finite spaces.
//!
//! The John-Nirenberg functionals are suprema over packings of pairwise
//! disjoint balls inside a region. Oscillation and measure depend only on a
//! ball's member set, so the search runs over the canonical (deduplicated)
//! balls of the region.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::median::{check_query, maximal_median_with, MedianError, Oscillation, SampleFunction, ValueLevels};
use crate::packing::{self, Candidate, PackingSolution};
use crate::pointset::PointSet;
use crate::space::{Ball, Space, SpaceError};

/// Exact mode refuses more nonzero-term candidates than this unless forced.
pub const EXACT_CANDIDATE_LIMIT: usize = 32;

#[derive(Debug, Error)]
pub enum NormError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Median(#[from] MedianError),
    #[error("region is empty")]
    EmptyRegion,
    #[error("oscillation exponent q must be positive, got {0}")]
    NonPositiveQ(f64),
    #[error("invalid norm parameters: {0}")]
    InvalidParams(String),
    #[error("exact packing refused: {candidates} candidate balls exceed the limit of {limit} (force to override)")]
    ExactModeTooLarge { candidates: usize, limit: usize },
}

/// Validated `(p, q, s, r)` with `1 < p`, `0 < q < p`, `0 < s <= 1/2`,
/// `s <= r <= 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormParams {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub r_center: f64,
}

impl NormParams {
    pub fn new(p: f64, q: f64, s: f64, r_center: f64) -> Result<Self, NormError> {
        let bad = |m: String| Err(NormError::InvalidParams(m));
        if !(p > 1.0 && p.is_finite()) {
            return bad(format!("p must satisfy 1 < p < inf, got {p}"));
        }
        if !(q > 0.0 && q < p) {
            return bad(format!("q must satisfy 0 < q < p, got {q}"));
        }
        if !(s > 0.0 && s <= 0.5) {
            return bad(format!("s must satisfy 0 < s <= 1/2, got {s}"));
        }
        if !(r_center >= s && r_center <= 0.5) {
            return bad(format!("r must satisfy s <= r <= 1/2, got {r_center}"));
        }
        Ok(Self { p, q, s, r_center })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PackingMode {
    Exact,
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PackingOptions {
    pub mode: PackingMode,
    /// Run exact mode beyond [`EXACT_CANDIDATE_LIMIT`].
    pub force_exact: bool,
}

impl PackingOptions {
    pub fn exact() -> Self {
        Self {
            mode: PackingMode::Exact,
            force_exact: false,
        }
    }

    pub fn forced_exact() -> Self {
        Self {
            mode: PackingMode::Exact,
            force_exact: true,
        }
    }

    pub fn greedy() -> Self {
        Self {
            mode: PackingMode::Greedy,
            force_exact: false,
        }
    }
}

impl Default for PackingOptions {
    fn default() -> Self {
        Self::exact()
    }
}

#[derive(Clone, Debug)]
pub struct PackedBall {
    pub ball: Ball,
    pub measure: f64,
    pub oscillation: f64,
    pub term: f64,
}

#[derive(Clone, Debug)]
pub struct BallPacking {
    pub balls: Vec<PackedBall>,
    /// Sum of the terms, i.e. the packed value raised to the power p.
    pub total: f64,
    pub mode: PackingMode,
    /// False for greedy packings: the value is then only a lower bound.
    pub optimal: bool,
}

impl BallPacking {
    pub fn is_disjoint(&self) -> bool {
        self.balls.iter().enumerate().all(|(i, a)| {
            self.balls[i + 1..]
                .iter()
                .all(|b| !a.ball.members().intersects(b.ball.members()))
        })
    }
}

/// A packed supremum and the packing attaining it.
#[derive(Clone, Debug)]
pub struct JnNorm {
    pub norm: f64,
    pub packing: BallPacking,
}

impl JnNorm {
    pub fn to_json(&self, space: &Space) -> serde_json::Value {
        let packing: Vec<serde_json::Value> = self
            .packing
            .balls
            .iter()
            .map(|b| {
                serde_json::json!({
                    "center": space.id(b.ball.center()),
                    "radius": b.ball.radius(),
                    "oscillation": b.oscillation,
                    "term": b.term,
                })
            })
            .collect();
        serde_json::json!({ "norm": self.norm, "packing": packing, "mode": self.packing.mode })
    }
}

fn region_balls(space: &Space, region: &PointSet) -> Result<Vec<Ball>, NormError> {
    if region.is_empty() {
        return Err(NormError::EmptyRegion);
    }
    Ok(space.canonical_balls(region)?)
}

/// Per-ball quantities for a packed supremum: the reported oscillation and
/// the size `a` entering the term `mu(B) * a^p`.
struct BallSize {
    reported: f64,
    size: f64,
}

fn packed_supremum(
    space: &Space,
    region: &PointSet,
    p: f64,
    opts: PackingOptions,
    size_of: impl Fn(&Ball) -> BallSize + Sync,
) -> Result<JnNorm, NormError> {
    let balls = region_balls(space, region)?;
    let sizes: Vec<BallSize> = balls.par_iter().map(&size_of).collect();
    let scale = sizes.iter().map(|s| s.size).fold(0.0, f64::max);
    let measures: Vec<f64> = balls.iter().map(|b| b.measure(space)).collect();

    let solution = if scale > 0.0 {
        // terms are solved in units of scale^p so large p neither overflows nor underflows the leaders
        let cands: Vec<Candidate> = balls
            .iter()
            .zip(&sizes)
            .zip(&measures)
            .map(|((b, sz), &mu)| Candidate {
                members: b.members().clone(),
                term: mu * (sz.size / scale).powf(p),
            })
            .collect();
        let live = cands.iter().filter(|c| c.term > 0.0).count();
        match opts.mode {
            PackingMode::Greedy => packing::greedy(&cands),
            PackingMode::Exact if live <= EXACT_CANDIDATE_LIMIT => packing::branch_and_bound(&cands, space.weights()),
            PackingMode::Exact if opts.force_exact => packing::memoized(&cands),
            PackingMode::Exact => {
                return Err(NormError::ExactModeTooLarge {
                    candidates: live,
                    limit: EXACT_CANDIDATE_LIMIT,
                })
            }
        }
    } else {
        PackingSolution::empty()
    };

    let norm = if solution.total > 0.0 {
        scale * solution.total.powf(1.0 / p)
    } else {
        0.0
    };
    let packed: Vec<PackedBall> = solution
        .chosen
        .iter()
        .map(|&k| PackedBall {
            ball: balls[k].clone(),
            measure: measures[k],
            oscillation: sizes[k].reported,
            term: measures[k] * sizes[k].size.powf(p),
        })
        .collect();
    let total = packed.iter().map(|b| b.term).sum();
    Ok(JnNorm {
        norm,
        packing: BallPacking {
            balls: packed,
            total,
            mode: opts.mode,
            optimal: opts.mode == PackingMode::Exact,
        },
    })
}

fn check_p(p: f64) -> Result<(), NormError> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(NormError::InvalidParams(format!("p must satisfy 1 < p < inf, got {p}")))
    }
}

/// `(sum_{x in region} w(x) |f(x)|^p)^(1/p)`.
pub fn lp_norm(space: &Space, f: &SampleFunction, region: &PointSet, p: f64) -> Result<f64, NormError> {
    if region.is_empty() {
        return Err(NormError::EmptyRegion);
    }
    if !(p > 0.0) {
        return Err(NormError::InvalidParams(format!("p must be positive, got {p}")));
    }
    let sum: f64 = region.iter().map(|x| space.weight(x) * f.value(x).abs().powf(p)).sum();
    Ok(sum.powf(1.0 / p))
}

/// Weak-L^p quasinorm `sup_gamma gamma mu{|g| > gamma}^(1/p)`.
///
/// The supremum is a left limit at a sample level `v`, where it equals
/// `v mu{|g| >= v}^(1/p)`.
pub fn weak_lp_norm(space: &Space, g: &SampleFunction, region: &PointSet, p: f64) -> Result<f64, NormError> {
    if region.is_empty() {
        return Err(NormError::EmptyRegion);
    }
    if !(p > 0.0) {
        return Err(NormError::InvalidParams(format!("p must be positive, got {p}")));
    }
    let levels = ValueLevels::collect(space, region, |x| g.value(x).abs());
    let mut at_least = 0.0;
    let mut best: f64 = 0.0;
    for (v, w) in levels.values.iter().zip(&levels.weights).rev() {
        at_least += w;
        if *v > 0.0 {
            best = best.max(v.powf(p) * at_least);
        }
    }
    Ok(best.powf(1.0 / p))
}

fn mean_power_deviation(space: &Space, f: &SampleFunction, set: &PointSet, total: f64, q: f64, c: f64) -> f64 {
    set.iter()
        .map(|x| space.weight(x) * (f.value(x) - c).abs().powf(q))
        .sum::<f64>()
        / total
}

/// `inf_c avg_B |f - c|^q` and a minimizing `c`.
///
/// For `q <= 1` the objective is concave between consecutive sample values,
/// so the minimum sits at a sample value and is found exactly. For `q > 1`
/// it is convex: golden-section search on `[min f, max f]` to a relative
/// width of 1e-10, then compared against the sample values, the weighted
/// mean and the weighted median.
pub fn integral_oscillation(space: &Space, f: &SampleFunction, set: &PointSet, q: f64) -> Result<Oscillation, NormError> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(NormError::NonPositiveQ(q));
    }
    check_query(space, set, 0.5).map_err(|_| MedianError::EmptySet)?;
    let total = space.measure(set);
    let levels = ValueLevels::collect(space, set, |x| f.value(x));
    let (lo, hi) = (levels.values[0], *levels.values.last().unwrap());
    if lo == hi {
        return Ok(Oscillation { value: 0.0, c: lo });
    }
    let objective = |c: f64| mean_power_deviation(space, f, set, total, q, c);

    let mut candidates: Vec<f64> = levels.values.clone();
    if q > 1.0 {
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - ratio * (b - a);
        let mut x2 = a + ratio * (b - a);
        let (mut f1, mut f2) = (objective(x1), objective(x2));
        while b - a > 1e-10 * (hi - lo) {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = objective(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = objective(x2);
            }
        }
        candidates.push(0.5 * (a + b));
        let mean = set.iter().map(|x| space.weight(x) * f.value(x)).sum::<f64>() / total;
        candidates.push(mean);
        candidates.push(maximal_median_with(space, set, 0.5, |x| f.value(x)));
    }
    let mut best = Oscillation {
        value: f64::INFINITY,
        c: f64::INFINITY,
    };
    for c in candidates {
        let v = objective(c);
        if v < best.value || (v == best.value && c < best.c) {
            best = Oscillation { value: v, c };
        }
    }
    Ok(best)
}

/// `sup over canonical balls B in region of inf_c m^s_{|f-c|}(B)`.
pub fn bmo_median_norm(space: &Space, f: &SampleFunction, region: &PointSet, s: f64) -> Result<f64, NormError> {
    let balls = region_balls(space, region)?;
    check_query(space, region, s)?;
    Ok(balls
        .par_iter()
        .map(|b| ValueLevels::collect(space, b.members(), |x| f.value(x)).narrowest_window(s).0)
        .reduce(|| 0.0, f64::max))
}

/// `||f||_{JN_{p,0,s}(region)}`: packed supremum of `mu(B) (inf_c m^s_{|f-c|}(B))^p`.
pub fn jn_median_norm(
    space: &Space,
    f: &SampleFunction,
    region: &PointSet,
    p: f64,
    s: f64,
    opts: PackingOptions,
) -> Result<JnNorm, NormError> {
    check_p(p)?;
    check_query(space, region, s)?;
    packed_supremum(space, region, p, opts, |b| {
        let osc = ValueLevels::collect(space, b.members(), |x| f.value(x)).narrowest_window(s).0;
        BallSize {
            reported: osc,
            size: osc,
        }
    })
}

/// Packed supremum of `mu(B) (m^s_{|f - m^t_f(B)|}(B))^p`: the
/// John-Nirenberg functional with each constant replaced by the ball's
/// maximal t-median.
pub fn jn_median_centered(
    space: &Space,
    f: &SampleFunction,
    region: &PointSet,
    p: f64,
    s: f64,
    t: f64,
    opts: PackingOptions,
) -> Result<JnNorm, NormError> {
    check_p(p)?;
    check_query(space, region, s)?;
    check_query(space, region, t)?;
    packed_supremum(space, region, p, opts, |b| {
        let center = maximal_median_with(space, b.members(), t, |x| f.value(x));
        let osc = maximal_median_with(space, b.members(), s, |x| (f.value(x) - center).abs());
        BallSize {
            reported: osc,
            size: osc,
        }
    })
}

/// `||f||_{JN_{p,q}(region)}`: packed supremum of
/// `mu(B) (inf_c avg_B |f-c|^q)^(p/q)`.
pub fn jn_integral_norm(
    space: &Space,
    f: &SampleFunction,
    region: &PointSet,
    p: f64,
    q: f64,
    opts: PackingOptions,
) -> Result<JnNorm, NormError> {
    check_p(p)?;
    if !(q > 0.0) {
        return Err(NormError::NonPositiveQ(q));
    }
    if q >= p {
        return Err(NormError::InvalidParams(format!("q must be below p, got q = {q}, p = {p}")));
    }
    if region.is_empty() {
        return Err(NormError::EmptyRegion);
    }
    // integral_oscillation only fails on empty sets or bad q, both excluded above
    packed_supremum(space, region, p, opts, |b| {
        let osc = integral_oscillation(space, f, b.members(), q)
            .map(|o| o.value)
            .unwrap_or(0.0);
        BallSize {
            reported: osc,
            size: osc.powf(1.0 / q),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricInput;

    fn line(values: &[f64], weights: &[f64]) -> (Space, SampleFunction) {
        let n = values.len();
        let s = Space::new(
            (0..n).map(|i| format!("p{i}")).collect(),
            weights.to_vec(),
            MetricInput::Euclidean((0..n).map(|i| vec![i as f64]).collect()),
        )
        .unwrap();
        let f = SampleFunction::new(&s, values.to_vec()).unwrap();
        (s, f)
    }

    #[test]
    fn lp_examples() {
        let (s, f) = line(&[3.0, 4.0], &[1.0, 1.0]);
        assert_eq!(lp_norm(&s, &f, &s.all(), 2.0).unwrap(), 5.0);
        let (s, f) = line(&[3.0], &[2.0]);
        assert_eq!(lp_norm(&s, &f, &s.all(), 1.0).unwrap(), 6.0);
        let z = SampleFunction::constant(&s, 0.0);
        assert_eq!(lp_norm(&s, &z, &s.all(), 3.0).unwrap(), 0.0);
        assert!(matches!(lp_norm(&s, &f, &PointSet::empty(1), 2.0), Err(NormError::EmptyRegion)));
    }

    #[test]
    fn weak_lp_examples() {
        let (s, g) = line(&[2.0, 1.0], &[1.0, 1.0]);
        assert_eq!(weak_lp_norm(&s, &g, &s.all(), 2.0).unwrap(), 2.0);
        let z = SampleFunction::constant(&s, 0.0);
        assert_eq!(weak_lp_norm(&s, &z, &s.all(), 2.0).unwrap(), 0.0);
        let (s, c) = line(&[-1.5, -1.5, -1.5], &[1.0, 2.0, 0.5]);
        let expect = 1.5 * 3.5f64.powf(1.0 / 3.0);
        assert!((weak_lp_norm(&s, &c, &s.all(), 3.0).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn integral_oscillation_examples() {
        let (s, f) = line(&[0.0, 1.0], &[1.0, 1.0]);
        let o1 = integral_oscillation(&s, &f, &s.all(), 1.0).unwrap();
        assert_eq!(o1.value, 0.5);
        let o2 = integral_oscillation(&s, &f, &s.all(), 2.0).unwrap();
        assert_eq!(o2, Oscillation { value: 0.25, c: 0.5 });
        let k = SampleFunction::constant(&s, 2.0);
        assert_eq!(integral_oscillation(&s, &k, &s.all(), 1.5).unwrap().value, 0.0);
        assert!(matches!(
            integral_oscillation(&s, &f, &s.all(), 0.0),
            Err(NormError::NonPositiveQ(_))
        ));
    }

    #[test]
    fn bmo_examples() {
        let (s, f) = line(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(bmo_median_norm(&s, &f, &s.all(), 0.5).unwrap(), 0.5);
        let k = SampleFunction::constant(&s, 7.0);
        assert_eq!(bmo_median_norm(&s, &k, &s.all(), 0.5).unwrap(), 0.0);
    }

    #[test]
    fn bmo_of_point_indicator_matches_enumeration() {
        let (s, f) = line(&[0.0, 1.0, 0.0], &[1.0, 1.0, 1.0]);
        // balls of {0,1,2}: singletons, {0,1}, {1,2}, {0,1,2}
        let mut oracle: f64 = 0.0;
        for b in s.canonical_balls(&s.all()).unwrap() {
            let mut best = f64::INFINITY;
            for k in 0..=1000 {
                let c = k as f64 / 1000.0;
                let v = crate::median::deviation_median(&s, &f, b.members(), 0.5, c).unwrap();
                best = best.min(v);
            }
            oracle = oracle.max(best);
        }
        assert_eq!(bmo_median_norm(&s, &f, &s.all(), 0.5).unwrap(), oracle);
        assert_eq!(oracle, 0.5);
    }

    #[test]
    fn jn_two_point_examples() {
        let (s, f) = line(&[0.0, 1.0], &[1.0, 1.0]);
        let med = jn_median_norm(&s, &f, &s.all(), 2.0, 0.5, PackingOptions::exact()).unwrap();
        assert!((med.norm - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(med.packing.balls.len(), 1);
        assert_eq!(med.packing.balls[0].ball.members().to_vec(), vec![0, 1]);
        assert!(med.packing.optimal);

        let int = jn_integral_norm(&s, &f, &s.all(), 2.0, 1.0, PackingOptions::exact()).unwrap();
        assert!((int.norm - 0.5f64.sqrt()).abs() < 1e-15);

        let k = SampleFunction::constant(&s, 1.0);
        let z = jn_median_norm(&s, &k, &s.all(), 2.0, 0.5, PackingOptions::exact()).unwrap();
        assert_eq!(z.norm, 0.0);
        assert!(z.packing.balls.is_empty());
        let z = jn_integral_norm(&s, &k, &s.all(), 2.0, 1.0, PackingOptions::exact()).unwrap();
        assert_eq!(z.norm, 0.0);

        // above s = 1/2 two-valued functions have vanishing norm
        let d = jn_median_norm(&s, &f, &s.all(), 2.0, 0.6, PackingOptions::exact()).unwrap();
        assert_eq!(d.norm, 0.0);
    }

    #[test]
    fn exact_mode_limit() {
        let n = 12;
        let vals: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64).collect();
        let (s, f) = line(&vals, &vec![1.0; n]);
        let err = jn_median_norm(&s, &f, &s.all(), 2.0, 0.25, PackingOptions::exact());
        assert!(matches!(err, Err(NormError::ExactModeTooLarge { .. })));
        let forced = jn_median_norm(&s, &f, &s.all(), 2.0, 0.25, PackingOptions::forced_exact()).unwrap();
        let greedy = jn_median_norm(&s, &f, &s.all(), 2.0, 0.25, PackingOptions::greedy()).unwrap();
        assert!(greedy.norm <= forced.norm + 1e-12);
        assert!(!greedy.packing.optimal);
        assert!(forced.packing.is_disjoint());
        let sum: f64 = forced.packing.balls.iter().map(|b| b.term).sum();
        assert!((sum.powf(0.5) - forced.norm).abs() < 1e-12 * forced.norm);
    }

    #[test]
    fn params_validation() {
        assert!(NormParams::new(2.0, 1.0, 0.25, 0.5).is_ok());
        assert!(NormParams::new(1.0, 0.5, 0.25, 0.5).is_err());
        assert!(NormParams::new(2.0, 2.0, 0.25, 0.5).is_err());
        assert!(NormParams::new(2.0, 1.0, 0.6, 0.6).is_err());
        assert!(NormParams::new(2.0, 1.0, 0.25, 0.2).is_err());
    }

    #[test]
    fn large_p_does_not_overflow() {
        let (s, f) = line(&[0.0, 100.0, 3.0, 250.0], &[0.25; 4]);
        let jn = jn_median_norm(&s, &f, &s.all(), 200.0, 0.5, PackingOptions::forced_exact()).unwrap();
        let bmo = bmo_median_norm(&s, &f, &s.all(), 0.5).unwrap();
        assert!(jn.norm.is_finite() && jn.norm > 0.0);
        assert!(jn.norm <= bmo * (1.0 + 1e-12));
    }
}
