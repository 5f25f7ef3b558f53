//! Finite metric measure spaces, balls, dilation and the doubling constant.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointset::PointSet;

/// Relative slack used when checking the triangle inequality.
const TRIANGLE_TOL: f64 = 1e-9;
/// Relative slack under which an asymmetric matrix is symmetrized.
const SYMMETRY_TOL: f64 = 1e-12;
/// `c_mu` never drops below this, and the full-space ball radius is
/// `d_max * (1 + FULL_SPACE_PAD)`.
pub const MIN_DOUBLING: f64 = 1.0 + 1.0 / 1_048_576.0;
const FULL_SPACE_PAD: f64 = 1.0 / 1_048_576.0;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("space has no points")]
    EmptySpace,
    #[error("duplicate point id `{0}`")]
    DuplicateId(String),
    #[error("point `{id}` has non-positive or non-finite weight {weight}")]
    NonPositiveWeight { id: String, weight: f64 },
    #[error("expected {expected} entries, got {got} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("distance between `{a}` and `{b}` is invalid ({value})")]
    InvalidDistance { a: String, b: String, value: f64 },
    #[error("metric is asymmetric: d({a},{b}) = {ab} but d({b},{a}) = {ba}")]
    AsymmetricMetric {
        a: String,
        b: String,
        ab: f64,
        ba: f64,
    },
    #[error("triangle inequality fails: d({x},{z}) = {xz} > d({x},{y}) + d({y},{z}) = {via}")]
    TriangleViolation {
        x: String,
        y: String,
        z: String,
        xz: f64,
        via: f64,
    },
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("unknown center index {0}")]
    UnknownCenter(usize),
    #[error("radius must be positive, got {0}")]
    NonPositiveRadius(f64),
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),
    #[error("region is empty")]
    EmptyRegion,
    #[error("region refers to a different space (universe {got}, expected {expected})")]
    ForeignRegion { expected: usize, got: usize },
    #[error("invalid space json: {0}")]
    Json(#[from] serde_json::Error),
}

/// How distances are supplied when building a [`Space`].
#[derive(Clone, Debug)]
pub enum MetricInput {
    /// One coordinate vector per point; Euclidean distances are computed.
    Euclidean(Vec<Vec<f64>>),
    /// Full distance matrix, rows in point order.
    Matrix(Vec<Vec<f64>>),
}

/// A finite metric measure space `(X, d, mu)`.
///
/// Points are addressed by index `0..len()`; the external string ids are kept
/// for I/O. All balls, medians and norms downstream are computed against this
/// fixed universe.
#[derive(Clone, Debug)]
pub struct Space {
    ids: Vec<String>,
    weights: Vec<f64>,
    dist: Vec<f64>,
    coords: Option<Vec<Vec<f64>>>,
    index: HashMap<String, usize>,
    d_max: f64,
    /// Distinct distances from each center, ascending, starting at 0.
    shells: Vec<Vec<f64>>,
}

impl Space {
    pub fn new(ids: Vec<String>, weights: Vec<f64>, metric: MetricInput) -> Result<Self, SpaceError> {
        let n = ids.len();
        if n == 0 {
            return Err(SpaceError::EmptySpace);
        }
        if weights.len() != n {
            return Err(SpaceError::DimensionMismatch {
                what: "weights",
                expected: n,
                got: weights.len(),
            });
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(SpaceError::DuplicateId(id.clone()));
            }
        }
        for (id, &w) in ids.iter().zip(&weights) {
            if !(w > 0.0 && w.is_finite()) {
                return Err(SpaceError::NonPositiveWeight {
                    id: id.clone(),
                    weight: w,
                });
            }
        }

        let (dist, coords) = match metric {
            MetricInput::Euclidean(coords) => {
                if coords.len() != n {
                    return Err(SpaceError::DimensionMismatch {
                        what: "coordinate rows",
                        expected: n,
                        got: coords.len(),
                    });
                }
                let dim = coords[0].len();
                for row in &coords {
                    if row.len() != dim {
                        return Err(SpaceError::DimensionMismatch {
                            what: "coordinates per point",
                            expected: dim,
                            got: row.len(),
                        });
                    }
                }
                let mut dist = vec![0.0; n * n];
                for i in 0..n {
                    for j in (i + 1)..n {
                        let d = coords[i]
                            .iter()
                            .zip(&coords[j])
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt();
                        dist[i * n + j] = d;
                        dist[j * n + i] = d;
                    }
                }
                (dist, Some(coords))
            }
            MetricInput::Matrix(rows) => {
                if rows.len() != n {
                    return Err(SpaceError::DimensionMismatch {
                        what: "distance matrix rows",
                        expected: n,
                        got: rows.len(),
                    });
                }
                let mut dist = vec![0.0; n * n];
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(SpaceError::DimensionMismatch {
                            what: "distance matrix columns",
                            expected: n,
                            got: row.len(),
                        });
                    }
                    dist[i * n..(i + 1) * n].copy_from_slice(row);
                }
                symmetrize(&ids, &mut dist)?;
                (dist, None)
            }
        };

        for i in 0..n {
            for j in 0..n {
                let d = dist[i * n + j];
                let bad = if i == j { d != 0.0 } else { !(d > 0.0 && d.is_finite()) };
                if bad {
                    return Err(SpaceError::InvalidDistance {
                        a: ids[i].clone(),
                        b: ids[j].clone(),
                        value: d,
                    });
                }
            }
        }
        let d_max = dist.iter().cloned().fold(0.0, f64::max);
        let slack = TRIANGLE_TOL * d_max;
        for x in 0..n {
            for y in 0..n {
                let dxy = dist[x * n + y];
                for z in 0..n {
                    let via = dxy + dist[y * n + z];
                    let xz = dist[x * n + z];
                    if xz > via + slack {
                        return Err(SpaceError::TriangleViolation {
                            x: ids[x].clone(),
                            y: ids[y].clone(),
                            z: ids[z].clone(),
                            xz,
                            via,
                        });
                    }
                }
            }
        }

        let shells = (0..n)
            .map(|c| {
                let mut ds: Vec<f64> = dist[c * n..(c + 1) * n].to_vec();
                ds.sort_by(f64::total_cmp);
                ds.dedup();
                ds
            })
            .collect();

        Ok(Self {
            ids,
            weights,
            dist,
            coords,
            index,
            d_max,
            shells,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let file: SpaceFile = serde_json::from_str(text)?;
        file.into_space()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let points: Vec<PointSpec> = (0..self.len())
            .map(|i| PointSpec {
                id: self.ids[i].clone(),
                weight: self.weights[i],
                coords: self.coords.as_ref().map(|c| c[i].clone()),
            })
            .collect();
        let metric = match &self.coords {
            Some(_) => MetricSpec::Euclidean,
            None => MetricSpec::Matrix {
                distances: (0..self.len())
                    .map(|i| self.dist[i * self.len()..(i + 1) * self.len()].to_vec())
                    .collect(),
            },
        };
        serde_json::to_value(SpaceFile { points, metric }).expect("space serializes")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Result<usize, SpaceError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| SpaceError::UnknownPoint(id.to_string()))
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    #[inline]
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.len() + b]
    }

    pub fn max_distance(&self) -> f64 {
        self.d_max
    }

    pub fn total_measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn measure(&self, set: &PointSet) -> f64 {
        set.iter().map(|i| self.weights[i]).sum()
    }

    pub fn all(&self) -> PointSet {
        PointSet::full(self.len())
    }

    /// The same space with every weight multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Space, SpaceError> {
        let mut out = self.clone();
        for w in &mut out.weights {
            *w *= factor;
            if !(*w > 0.0 && w.is_finite()) {
                return Err(SpaceError::NonPositiveWeight {
                    id: String::new(),
                    weight: *w,
                });
            }
        }
        Ok(out)
    }

    /// Radius used for balls that contain the whole space.
    pub fn full_radius(&self) -> f64 {
        if self.d_max > 0.0 {
            self.d_max * (1.0 + FULL_SPACE_PAD)
        } else {
            1.0
        }
    }

    pub fn check_region(&self, region: &PointSet) -> Result<(), SpaceError> {
        if region.universe() != self.len() {
            return Err(SpaceError::ForeignRegion {
                expected: self.len(),
                got: region.universe(),
            });
        }
        if region.is_empty() {
            return Err(SpaceError::EmptyRegion);
        }
        Ok(())
    }

    /// `B(center, radius) = { y : d(center, y) < radius }`.
    pub fn ball(&self, center: usize, radius: f64) -> Result<Ball, SpaceError> {
        if center >= self.len() {
            return Err(SpaceError::UnknownCenter(center));
        }
        if !(radius > 0.0) || radius.is_nan() {
            return Err(SpaceError::NonPositiveRadius(radius));
        }
        Ok(self.ball_unchecked(center, radius))
    }

    pub(crate) fn ball_unchecked(&self, center: usize, radius: f64) -> Ball {
        let n = self.len();
        let row = &self.dist[center * n..(center + 1) * n];
        let members = PointSet::from_indices(n, (0..n).filter(|&y| row[y] < radius));
        Ball {
            center,
            radius,
            members,
        }
    }

    /// `lambda * B`: same center, radius scaled, members recomputed.
    pub fn dilate(&self, ball: &Ball, lambda: f64) -> Result<Ball, SpaceError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(SpaceError::NonPositiveDilation(lambda));
        }
        self.ball(ball.center, ball.radius * lambda)
    }

    /// Distinct distances from `center`, ascending; the first entry is 0.
    pub fn shell_distances(&self, center: usize) -> &[f64] {
        &self.shells[center]
    }

    /// Every distinct ball around `center`, one per member set, each carrying
    /// the upper endpoint of its radius constancy interval.
    pub fn center_shells(&self, center: usize) -> Vec<Ball> {
        let ds = &self.shells[center];
        (0..ds.len())
            .map(|k| {
                let radius = ds.get(k + 1).copied().unwrap_or_else(|| self.full_radius());
                self.ball_unchecked(center, radius)
            })
            .collect()
    }

    /// All distinct balls whose member set lies inside `region`, deduplicated
    /// by member set (smallest center wins).
    pub fn canonical_balls(&self, region: &PointSet) -> Result<Vec<Ball>, SpaceError> {
        self.check_region(region)?;
        let mut seen: HashMap<PointSet, ()> = HashMap::new();
        let mut out = Vec::new();
        for center in 0..self.len() {
            for ball in self.center_shells(center) {
                if seen.contains_key(&ball.members) {
                    continue;
                }
                seen.insert(ball.members.clone(), ());
                if ball.members.is_subset(region) {
                    out.push(ball);
                }
            }
        }
        Ok(out)
    }

    /// Doubling constant, doubling dimension and the measure-ratio certificate.
    pub fn doubling_profile(&self) -> DoublingProfile {
        let n = self.len();
        // shell measures per center, aligned with `shells`
        let shell_balls: Vec<Vec<Ball>> = (0..n).map(|c| self.center_shells(c)).collect();
        let shell_measures: Vec<Vec<f64>> = shell_balls
            .iter()
            .map(|bs| bs.iter().map(|b| self.measure(&b.members)).collect())
            .collect();

        let mut c_mu: f64 = 1.0;
        for (c, balls) in shell_balls.iter().enumerate() {
            for (k, b) in balls.iter().enumerate() {
                let doubled = self.ball_unchecked(c, 2.0 * b.radius);
                let ratio = self.measure(&doubled.members) / shell_measures[c][k];
                c_mu = c_mu.max(ratio);
            }
        }
        let c_mu = c_mu.max(MIN_DOUBLING);
        let dimension = c_mu.log2();

        let mut cert = RatioCertificate {
            x: 0,
            big_r: shell_balls[0][0].radius,
            y: 0,
            r: shell_balls[0][0].radius,
            ratio: 1.0,
            bound: c_mu * c_mu,
            checked: 0,
            holds: true,
        };
        let mut worst = f64::NEG_INFINITY;
        for x in 0..n {
            for (kx, bx) in shell_balls[x].iter().enumerate() {
                let big_r = bx.radius;
                let mu_big = shell_measures[x][kx];
                for y in bx.members.iter() {
                    for (ky, by) in shell_balls[y].iter().enumerate() {
                        let r = by.radius;
                        if r > big_r {
                            break;
                        }
                        let ratio = mu_big / shell_measures[y][ky];
                        let bound = c_mu * c_mu * (big_r / r).powf(dimension);
                        cert.checked += 1;
                        let score = ratio / bound;
                        if score > worst {
                            worst = score;
                            cert.x = x;
                            cert.big_r = big_r;
                            cert.y = y;
                            cert.r = r;
                            cert.ratio = ratio;
                            cert.bound = bound;
                        }
                    }
                }
            }
        }
        cert.holds = cert.ratio <= cert.bound * (1.0 + 1e-12);
        DoublingProfile {
            c_mu,
            dimension,
            certificate: Some(cert),
        }
    }
}

fn symmetrize(ids: &[String], dist: &mut [f64]) -> Result<(), SpaceError> {
    let n = ids.len();
    let scale = dist.iter().cloned().filter(|d| d.is_finite()).fold(1.0, f64::max);
    for i in 0..n {
        for j in (i + 1)..n {
            let (ab, ba) = (dist[i * n + j], dist[j * n + i]);
            if ab == ba {
                continue;
            }
            if (ab - ba).abs() > SYMMETRY_TOL * scale || !(ab.is_finite() && ba.is_finite()) {
                return Err(SpaceError::AsymmetricMetric {
                    a: ids[i].clone(),
                    b: ids[j].clone(),
                    ab,
                    ba,
                });
            }
            let avg = 0.5 * (ab + ba);
            dist[i * n + j] = avg;
            dist[j * n + i] = avg;
        }
    }
    Ok(())
}

/// `build_space` in functional form.
pub fn build_space(ids: Vec<String>, weights: Vec<f64>, metric: MetricInput) -> Result<Space, SpaceError> {
    Space::new(ids, weights, metric)
}

/// An open ball with its materialized member set.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: usize,
    radius: f64,
    members: PointSet,
}

impl Ball {
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn members(&self) -> &PointSet {
        &self.members
    }

    pub fn measure(&self, space: &Space) -> f64 {
        space.measure(&self.members)
    }

    pub fn to_json(&self, space: &Space) -> serde_json::Value {
        serde_json::json!({ "center": space.id(self.center), "radius": self.radius })
    }
}

/// Worst-case quadruple for `mu(B(x,R)) / mu(B(y,r)) <= c_mu^2 (R/r)^D`.
#[derive(Clone, Debug, Serialize)]
pub struct RatioCertificate {
    pub x: usize,
    pub big_r: f64,
    pub y: usize,
    pub r: f64,
    pub ratio: f64,
    pub bound: f64,
    pub checked: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DoublingProfile {
    pub c_mu: f64,
    pub dimension: f64,
    pub certificate: Option<RatioCertificate>,
}

impl DoublingProfile {
    /// Profile for a given constant, without a certificate.
    pub fn from_constant(c_mu: f64) -> Self {
        let c_mu = c_mu.max(MIN_DOUBLING);
        Self {
            c_mu,
            dimension: c_mu.log2(),
            certificate: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PointSpec {
    id: String,
    weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum MetricSpec {
    Euclidean,
    Matrix { distances: Vec<Vec<f64>> },
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    points: Vec<PointSpec>,
    metric: MetricSpec,
}

impl SpaceFile {
    fn into_space(self) -> Result<Space, SpaceError> {
        let ids = self.points.iter().map(|p| p.id.clone()).collect();
        let weights = self.points.iter().map(|p| p.weight).collect();
        let metric = match self.metric {
            MetricSpec::Euclidean => {
                let mut coords = Vec::with_capacity(self.points.len());
                for p in self.points {
                    match p.coords {
                        Some(c) => coords.push(c),
                        None => {
                            return Err(SpaceError::DimensionMismatch {
                                what: "coordinates (missing for euclidean metric)",
                                expected: 1,
                                got: 0,
                            })
                        }
                    }
                }
                MetricInput::Euclidean(coords)
            }
            MetricSpec::Matrix { distances } => MetricInput::Matrix(distances),
        };
        Space::new(ids, weights, metric)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(coords: &[f64], weights: &[f64]) -> Space {
        let ids = (0..coords.len()).map(|i| format!("p{i}")).collect();
        let c = coords.iter().map(|&x| vec![x]).collect();
        Space::new(ids, weights.to_vec(), MetricInput::Euclidean(c)).unwrap()
    }

    fn grid5() -> Space {
        line(&[0.0, 1.0, 2.0, 3.0, 4.0], &[1.0; 5])
    }

    #[test]
    fn two_point_from_coordinates() {
        let s = line(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(s.distance(0, 1), 1.0);
        assert_eq!(s.total_measure(), 2.0);
    }

    #[test]
    fn matrix_input() {
        let s = Space::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 2.0],
            MetricInput::Matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
        )
        .unwrap();
        assert_eq!(s.total_measure(), 3.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let err = Space::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 0.0],
            MetricInput::Euclidean(vec![vec![0.0], vec![1.0]]),
        );
        assert!(matches!(err, Err(SpaceError::NonPositiveWeight { .. })));

        let err = Space::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 1.0],
            MetricInput::Matrix(vec![vec![0.0, 1.0], vec![1.5, 0.0]]),
        );
        assert!(matches!(err, Err(SpaceError::AsymmetricMetric { .. })));

        let err = Space::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![1.0; 3],
            MetricInput::Matrix(vec![
                vec![0.0, 1.0, 5.0],
                vec![1.0, 0.0, 1.0],
                vec![5.0, 1.0, 0.0],
            ]),
        );
        assert!(matches!(err, Err(SpaceError::TriangleViolation { .. })));
    }

    #[test]
    fn tiny_asymmetry_is_averaged() {
        let s = Space::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 1.0],
            MetricInput::Matrix(vec![vec![0.0, 1.0], vec![1.0 + 1e-14, 0.0]]),
        )
        .unwrap();
        assert_eq!(s.distance(0, 1), s.distance(1, 0));
    }

    #[test]
    fn balls_use_strict_inequality() {
        let s = grid5();
        assert_eq!(s.ball(2, 1.0).unwrap().members().to_vec(), vec![2]);
        assert_eq!(s.ball(2, 1.5).unwrap().members().to_vec(), vec![1, 2, 3]);
        assert!(matches!(s.ball(2, 0.0), Err(SpaceError::NonPositiveRadius(_))));
        assert!(matches!(s.ball(9, 1.0), Err(SpaceError::UnknownCenter(9))));
    }

    #[test]
    fn dilation() {
        let s = grid5();
        let b = s.ball(2, 1.0).unwrap();
        assert_eq!(s.dilate(&b, 1.0).unwrap(), b);
        assert_eq!(s.dilate(&b, 2.0).unwrap().members().to_vec(), vec![1, 2, 3]);
        assert_eq!(s.dilate(&b, 5.0).unwrap().members().to_vec(), vec![0, 1, 2, 3, 4]);
        assert!(matches!(s.dilate(&b, -1.0), Err(SpaceError::NonPositiveDilation(_))));
    }

    #[test]
    fn canonical_ball_enumeration() {
        let two = line(&[0.0, 1.0], &[1.0, 1.0]);
        let balls = two.canonical_balls(&two.all()).unwrap();
        let sets: Vec<Vec<usize>> = balls.iter().map(|b| b.members().to_vec()).collect();
        assert_eq!(sets, vec![vec![0], vec![0, 1], vec![1]]);

        let one = line(&[0.0], &[1.0]);
        assert_eq!(one.canonical_balls(&one.all()).unwrap().len(), 1);

        // brute force: every (center, radius) on a fine radius grid
        let s = grid5();
        let balls = s.canonical_balls(&s.all()).unwrap();
        let mut brute = std::collections::BTreeSet::new();
        for c in 0..5 {
            for k in 1..=60 {
                brute.insert(s.ball(c, k as f64 * 0.1).unwrap().members().to_vec());
            }
        }
        let ours: std::collections::BTreeSet<Vec<usize>> =
            balls.iter().map(|b| b.members().to_vec()).collect();
        assert_eq!(ours.len(), balls.len());
        assert_eq!(ours, brute);
        assert!(balls.len() <= 25);

        let region = PointSet::from_indices(5, [0, 1, 2]);
        for b in s.canonical_balls(&region).unwrap() {
            assert!(b.members().is_subset(&region));
        }
        assert!(matches!(
            s.canonical_balls(&PointSet::empty(5)),
            Err(SpaceError::EmptyRegion)
        ));
    }

    #[test]
    fn doubling_constants() {
        let one = line(&[0.0], &[1.0]);
        assert_eq!(one.doubling_profile().c_mu, MIN_DOUBLING);
        let two = line(&[0.0, 1.0], &[1.0, 1.0]);
        assert_eq!(two.doubling_profile().c_mu, 2.0);
        let p = grid5().doubling_profile();
        assert_eq!(p.c_mu, 3.0);
        assert!((p.dimension - 3f64.log2()).abs() < 1e-15);
        assert!(p.certificate.unwrap().holds);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"points":[{"id":"a","weight":1.0,"coords":[0.0]},{"id":"b","weight":2.0,"coords":[1.0]}],
                      "metric":{"kind":"euclidean"}}"#;
        let s = Space::from_json(text).unwrap();
        assert_eq!(s.total_measure(), 3.0);
        let back = Space::from_json(&s.to_json().to_string()).unwrap();
        assert_eq!(back.distance(0, 1), 1.0);
        let m = r#"{"points":[{"id":"a","weight":1.0},{"id":"b","weight":2.0}],
                   "metric":{"kind":"matrix","distances":[[0,1],[1,0]]}}"#;
        assert_eq!(Space::from_json(m).unwrap().total_measure(), 3.0);
    }

    fn arb_line() -> impl Strategy<Value = Space> {
        prop::collection::btree_set(0u32..40, 1..9).prop_flat_map(|xs| {
            let n = xs.len();
            (Just(xs), prop::collection::vec(1u32..5, n)).prop_map(|(xs, ws)| {
                let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
                let ws: Vec<f64> = ws.into_iter().map(f64::from).collect();
                line(&xs, &ws)
            })
        })
    }

    proptest! {
        #[test]
        fn radius_monotonicity(s in arb_line(), c in 0usize..8, r in 0.1f64..20.0, dr in 0.0f64..10.0) {
            let c = c % s.len();
            let a = s.ball(c, r).unwrap();
            let b = s.ball(c, r + dr).unwrap();
            prop_assert!(a.members().is_subset(b.members()));
        }

        #[test]
        fn dilation_composes(s in arb_line(), c in 0usize..8, r in 0.1f64..10.0, a in 0.25f64..4.0, b in 0.25f64..4.0) {
            let c = c % s.len();
            let ball = s.ball(c, r).unwrap();
            let twice = s.dilate(&s.dilate(&ball, a).unwrap(), b).unwrap();
            let once = s.dilate(&ball, a * b).unwrap();
            // a*b*r and (a*r)*b may differ by an ulp exactly at a shell boundary
            let boundary = s.shell_distances(c).iter().any(|&d| (d - a * b * r).abs() < 1e-9);
            prop_assume!(!boundary);
            prop_assert_eq!(twice.members(), once.members());
        }

        #[test]
        fn every_ball_matches_one_shell(s in arb_line(), c in 0usize..8, r in 0.05f64..50.0) {
            let c = c % s.len();
            let ball = s.ball(c, r).unwrap();
            let hits = s.center_shells(c).iter().filter(|b| b.members() == ball.members()).count();
            prop_assert_eq!(hits, 1);
            prop_assert!(s.canonical_balls(&s.all()).unwrap().iter().any(|b| b.members() == ball.members()));
        }

        #[test]
        fn ratio_bound_holds(s in arb_line()) {
            prop_assert!(s.doubling_profile().certificate.unwrap().holds);
        }
    }
}
