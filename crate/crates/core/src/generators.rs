//! Desk-scale spaces and sample functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::median::{MedianError, SampleFunction};
use crate::space::{MetricInput, Space, SpaceError};

#[derive(Debug, Error)]
pub enum GenError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    InvalidDim(usize),
    #[error("unknown function kind `{0}`")]
    UnknownKind(String),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Median(#[from] MedianError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "profile")]
pub enum WeightProfile {
    Uniform,
    /// Uniform weights summing to 1.
    Normalized,
    /// Independent weights in `[0.5, 2)`.
    Random { seed: u64 },
}

impl WeightProfile {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            WeightProfile::Uniform => vec![1.0; n],
            WeightProfile::Normalized => vec![1.0 / n as f64; n],
            WeightProfile::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| rng.gen_range(0.5..2.0)).collect()
            }
        }
    }
}

fn build(coords: Vec<Vec<f64>>, profile: WeightProfile) -> Result<Space, GenError> {
    let n = coords.len();
    let ids = (0..n).map(|k| format!("p{k}")).collect();
    Ok(Space::new(ids, profile.weights(n), MetricInput::Euclidean(coords))?)
}

/// Uniform grid with points at `(i + 1) * spacing` along each axis; 2-D
/// grids are numbered row by row.
pub fn grid_space(dim: usize, n: usize, spacing: f64, profile: WeightProfile) -> Result<Space, GenError> {
    if n == 0 {
        return Err(GenError::InvalidParameter("grid needs at least one point per axis".into()));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(GenError::InvalidParameter(format!("spacing must be positive, got {spacing}")));
    }
    let at = |i: usize| (i + 1) as f64 * spacing;
    let coords = match dim {
        1 => (0..n).map(|i| vec![at(i)]).collect(),
        2 => (0..n).flat_map(|i| (0..n).map(move |j| vec![at(i), at(j)])).collect(),
        d => return Err(GenError::InvalidDim(d)),
    };
    build(coords, profile)
}

/// Points `1 + sum_j b_j ratio^j` for all bit strings `b` of length
/// `levels`, in increasing order. With `ratio >= 4` and uniform weights the
/// doubling constant is exactly 2.
pub fn cantor_space(levels: u32, ratio: f64, profile: WeightProfile) -> Result<Space, GenError> {
    if levels > 12 {
        return Err(GenError::InvalidParameter(format!("at most 12 levels, got {levels}")));
    }
    if !(ratio >= 2.0 && ratio.is_finite()) {
        return Err(GenError::InvalidParameter(format!("ratio must be at least 2, got {ratio}")));
    }
    let coords = (0..1u64 << levels)
        .map(|m| {
            let x: f64 = (0..levels).filter(|j| m >> j & 1 == 1).map(|j| ratio.powi(j as i32)).sum();
            vec![1.0 + x]
        })
        .collect();
    build(coords, profile)
}

/// Sample function families. Positional kinds use `x = |coords| / max |coords|`,
/// which lies in `(0, 1]` on the generated grids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FunctionKind {
    /// `log(1/x)`.
    LogBlowup,
    /// `x^(-beta)`.
    Power { beta: f64 },
    /// `values[k]` on the k-th of `values.len()` equal blocks of points ordered by `x`.
    Step { values: Vec<f64> },
    /// `low` on the first `fraction` of points by `x`, `high` on the rest.
    TwoValued { low: f64, high: f64, fraction: f64 },
    /// Random breakpoints and levels in `[-10, 10)`, drawn from the seed.
    RandomPiecewise { pieces: usize },
    /// `background` everywhere except `height` at point index `at`.
    Spike { at: usize, height: f64, background: f64 },
}

impl FunctionKind {
    /// Kind with default parameters from its name.
    pub fn from_name(name: &str) -> Result<Self, GenError> {
        Ok(match name {
            "log_blowup" => FunctionKind::LogBlowup,
            "power" => FunctionKind::Power { beta: 0.5 },
            "step" => FunctionKind::Step {
                values: vec![0.0, 1.0],
            },
            "two_valued" => FunctionKind::TwoValued {
                low: 0.0,
                high: 1.0,
                fraction: 0.5,
            },
            "random_piecewise" => FunctionKind::RandomPiecewise { pieces: 4 },
            "spike" => FunctionKind::Spike {
                at: 0,
                height: 100.0,
                background: 1.0,
            },
            other => return Err(GenError::UnknownKind(other.to_string())),
        })
    }
}

fn positions(space: &Space) -> Result<Vec<f64>, GenError> {
    let coords = space
        .coords()
        .ok_or_else(|| GenError::InvalidParameter("positional functions need point coordinates".into()))?;
    let norms: Vec<f64> = coords.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let max = norms.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return Err(GenError::InvalidParameter("all points sit at the origin".into()));
    }
    if norms.contains(&0.0) {
        return Err(GenError::InvalidParameter("a point sits at the origin".into()));
    }
    Ok(norms.into_iter().map(|r| if r == max { 1.0 } else { r / max }).collect())
}

/// Point indices ordered by position, ties by index.
fn rank_order(xs: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
    order
}

pub fn canonical_function(kind: &FunctionKind, space: &Space, seed: u64) -> Result<SampleFunction, GenError> {
    let n = space.len();
    let values = match kind {
        FunctionKind::LogBlowup => positions(space)?.iter().map(|x| (1.0 / x).ln()).collect(),
        FunctionKind::Power { beta } => {
            if !beta.is_finite() {
                return Err(GenError::InvalidParameter(format!("beta must be finite, got {beta}")));
            }
            positions(space)?.iter().map(|x| x.powf(-beta)).collect()
        }
        FunctionKind::Step { values } => {
            if values.is_empty() {
                return Err(GenError::InvalidParameter("step needs at least one level".into()));
            }
            let k = values.len();
            let mut out = vec![0.0; n];
            for (rank, i) in rank_order(&positions(space)?).into_iter().enumerate() {
                out[i] = values[rank * k / n];
            }
            out
        }
        FunctionKind::TwoValued { low, high, fraction } => {
            if !(*fraction > 0.0 && *fraction < 1.0) || low == high {
                return Err(GenError::InvalidParameter(
                    "two_valued needs distinct levels and 0 < fraction < 1".into(),
                ));
            }
            let cut = ((fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
            let mut out = vec![*high; n];
            for i in rank_order(&positions(space)?).into_iter().take(cut) {
                out[i] = *low;
            }
            out
        }
        FunctionKind::RandomPiecewise { pieces } => {
            if *pieces == 0 {
                return Err(GenError::InvalidParameter("random_piecewise needs at least one piece".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.gen::<f64>()).collect();
            cuts.sort_by(f64::total_cmp);
            let levels: Vec<f64> = (0..*pieces).map(|_| rng.gen_range(-10.0..10.0)).collect();
            positions(space)?
                .iter()
                .map(|x| levels[cuts.iter().filter(|&&c| c < *x).count()])
                .collect()
        }
        FunctionKind::Spike { at, height, background } => {
            if *at >= n {
                return Err(GenError::InvalidParameter(format!("spike index {at} outside {n} points")));
            }
            let mut out = vec![*background; n];
            out[*at] = *height;
            out
        }
    };
    Ok(SampleFunction::new(space, values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_examples() {
        let two = grid_space(1, 2, 1.0, WeightProfile::Uniform).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two.distance(0, 1), 1.0);
        let sq = grid_space(2, 3, 0.5, WeightProfile::Uniform).unwrap();
        assert_eq!(sq.len(), 9);
        assert!((sq.distance(0, 8) - 2.0 * 2f64.sqrt() * 0.5).abs() < 1e-15);
        let norm = grid_space(1, 7, 1.0, WeightProfile::Normalized).unwrap();
        assert!((norm.total_measure() - 1.0).abs() < 1e-15);
        assert!(matches!(grid_space(3, 2, 1.0, WeightProfile::Uniform), Err(GenError::InvalidDim(3))));
    }

    #[test]
    fn random_weights_are_deterministic() {
        let a = grid_space(1, 10, 1.0, WeightProfile::Random { seed: 3 }).unwrap();
        let b = grid_space(1, 10, 1.0, WeightProfile::Random { seed: 3 }).unwrap();
        assert_eq!(a.weights(), b.weights());
        assert!(a.weights().iter().all(|&w| (0.5..2.0).contains(&w)));
    }

    #[test]
    fn cantor_doubling_constant_is_two() {
        for ratio in [4.0, 8.0, 10.0] {
            for levels in 1..=5 {
                let s = cantor_space(levels, ratio, WeightProfile::Uniform).unwrap();
                assert_eq!(s.len(), 1 << levels);
                assert_eq!(s.doubling_profile().c_mu, 2.0);
            }
        }
    }

    #[test]
    fn function_examples() {
        let s = grid_space(1, 64, 1.0 / 64.0, WeightProfile::Uniform).unwrap();
        let f = canonical_function(&FunctionKind::LogBlowup, &s, 0).unwrap();
        for i in 0..64 {
            let x = (i + 1) as f64 / 64.0;
            assert!((f.value(i) - (1.0 / x).ln()).abs() < 1e-14);
        }
        let one = canonical_function(&FunctionKind::Step { values: vec![2.5] }, &s, 0).unwrap();
        assert!(one.values().iter().all(|&v| v == 2.5));
        let tv = canonical_function(
            &FunctionKind::TwoValued {
                low: -1.0,
                high: 3.0,
                fraction: 0.3,
            },
            &s,
            0,
        )
        .unwrap();
        let mut distinct = tv.values().to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        assert_eq!(distinct, vec![-1.0, 3.0]);
        let p = canonical_function(&FunctionKind::Power { beta: 0.5 }, &s, 0).unwrap();
        assert_eq!(p.value(63), 1.0);
        assert!(matches!(FunctionKind::from_name("nope"), Err(GenError::UnknownKind(_))));
    }

    #[test]
    fn seeded_functions_are_deterministic() {
        let s = grid_space(2, 4, 1.0, WeightProfile::Uniform).unwrap();
        let kind = FunctionKind::RandomPiecewise { pieces: 5 };
        let a = canonical_function(&kind, &s, 9).unwrap();
        let b = canonical_function(&kind, &s, 9).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.values().iter().all(|v| v.is_finite()));
    }
}
