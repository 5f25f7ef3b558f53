//! Maximal s-medians, s-median certification and median oscillation.
//!
//! On a finite space the defining infimum
//! `m_f^s(A) = inf { a : mu{x in A : f(x) > a} < s mu(A) }` is attained at a
//! sample value, so everything here works on the distinct values of `f` over
//! `A` together with the measure carried by each value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pointset::PointSet;
use crate::space::Space;

#[derive(Debug, Error)]
pub enum MedianError {
    #[error("median taken over an empty set")]
    EmptySet,
    #[error("median level s must lie in (0, 1], got {0}")]
    InvalidS(f64),
    #[error("value at point `{0}` is not finite")]
    NonFiniteValue(String),
    #[error("function has {got} values but the space has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("function values do not cover point `{0}`")]
    MissingPoint(String),
    #[error("function mentions unknown point `{0}`")]
    UnknownPoint(String),
    #[error("invalid function json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A finite real value at every point of a space.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleFunction {
    values: Vec<f64>,
}

impl SampleFunction {
    pub fn new(space: &Space, values: Vec<f64>) -> Result<Self, MedianError> {
        if values.len() != space.len() {
            return Err(MedianError::LengthMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MedianError::NonFiniteValue(space.id(i).to_string()));
        }
        Ok(Self { values })
    }

    pub fn constant(space: &Space, value: f64) -> Self {
        Self {
            values: vec![value; space.len()],
        }
    }

    pub fn from_json(space: &Space, text: &str) -> Result<Self, MedianError> {
        let file: FunctionFile = serde_json::from_str(text)?;
        let mut values = vec![f64::NAN; space.len()];
        for (id, v) in &file.values {
            let i = space
                .index_of(id)
                .map_err(|_| MedianError::UnknownPoint(id.clone()))?;
            values[i] = *v;
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            if !file.values.contains_key(space.id(i)) {
                return Err(MedianError::MissingPoint(space.id(i).to_string()));
            }
        }
        Self::new(space, values)
    }

    pub fn to_json(&self, space: &Space) -> serde_json::Value {
        let values: BTreeMap<String, f64> = space
            .ids()
            .iter()
            .cloned()
            .zip(self.values.iter().copied())
            .collect();
        serde_json::to_value(FunctionFile { values }).expect("function serializes")
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pointwise image under `phi`. The result must stay finite.
    pub fn map(&self, phi: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = self.values.iter().map(|&v| phi(v)).collect();
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn zip_with(&self, other: &SampleFunction, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.len(), other.len());
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| op(a, b))
                .collect(),
        }
    }

    pub fn abs(&self) -> Self {
        self.map(f64::abs)
    }

    /// `|f - c|`.
    pub fn deviation(&self, c: f64) -> Self {
        self.map(|v| (v - c).abs())
    }
}

#[derive(Serialize, Deserialize)]
struct FunctionFile {
    values: BTreeMap<String, f64>,
}

/// Distinct values ascending with the measure each one carries.
pub(crate) struct ValueLevels {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    pub total: f64,
}

impl ValueLevels {
    pub fn collect(space: &Space, set: &PointSet, value: impl Fn(usize) -> f64) -> Self {
        let mut pairs: Vec<(f64, f64)> = set.iter().map(|i| (value(i), space.weight(i))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, w) in pairs {
            match values.last() {
                Some(&last) if last == v => *weights.last_mut().unwrap() += w,
                _ => {
                    values.push(v);
                    weights.push(w);
                }
            }
        }
        let total = weights.iter().sum();
        Self {
            values,
            weights,
            total,
        }
    }

    /// Smallest level `a` with `mu{f > a} < s mu(A)`.
    pub fn maximal_median(&self, s: f64) -> f64 {
        let threshold = s * self.total;
        let mut above = 0.0;
        let mut answer = *self.values.last().expect("nonempty levels");
        for (v, w) in self.values.iter().zip(&self.weights).rev() {
            if above < threshold {
                answer = *v;
            } else {
                break;
            }
            above += w;
        }
        answer
    }

    /// Minimal half-width window: returns `(half_width, midpoint)`.
    ///
    /// `m^s_{|f-c|}(A) <= rho` iff the closed window `[c - rho, c + rho]`
    /// leaves measure `< s mu(A)` outside, so the infimum over `c` is half
    /// the narrowest run of consecutive levels whose complement is that
    /// light, attained at the run's midpoint.
    pub fn narrowest_window(&self, s: f64) -> (f64, f64) {
        let m = self.values.len();
        let threshold = s * self.total;
        let mut below = vec![0.0; m + 1];
        for k in 0..m {
            below[k + 1] = below[k] + self.weights[k];
        }
        let mut above = vec![0.0; m + 1];
        for k in (0..m).rev() {
            above[k] = above[k + 1] + self.weights[k];
        }
        // outside(i, j) = below[i] + above[j + 1]
        let mut best: Option<(f64, f64)> = None;
        let mut j = 0;
        for i in 0..m {
            j = j.max(i);
            while j < m && below[i] + above[j + 1] >= threshold {
                j += 1;
            }
            if j == m {
                break;
            }
            let width = self.values[j] - self.values[i];
            if best.is_none_or(|(w, _)| width < w) {
                best = Some((width, 0.5 * (self.values[i] + self.values[j])));
            }
        }
        let (width, c) = best.expect("the full window always qualifies");
        (0.5 * width, c)
    }
}

pub(crate) fn check_query(space: &Space, set: &PointSet, s: f64) -> Result<(), MedianError> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(MedianError::InvalidS(s));
    }
    if set.is_empty() || set.universe() != space.len() {
        return Err(MedianError::EmptySet);
    }
    Ok(())
}

/// `m^s` of an arbitrary pointwise expression; the caller validates inputs.
pub(crate) fn maximal_median_with(
    space: &Space,
    set: &PointSet,
    s: f64,
    value: impl Fn(usize) -> f64,
) -> f64 {
    ValueLevels::collect(space, set, value).maximal_median(s)
}

/// The maximal s-median `m_f^s(A)`.
pub fn maximal_median(space: &Space, f: &SampleFunction, set: &PointSet, s: f64) -> Result<f64, MedianError> {
    check_query(space, set, s)?;
    Ok(maximal_median_with(space, set, s, |i| f.value(i)))
}

/// Whether `value` is an s-median of `f` over `A`.
///
/// Both defining inequalities are checked with a relative slack of
/// `1e-12 * mu(A)` to absorb summation order.
pub fn is_s_median(space: &Space, value: f64, f: &SampleFunction, set: &PointSet, s: f64) -> Result<bool, MedianError> {
    check_query(space, set, s)?;
    let total = space.measure(set);
    let (mut gt, mut lt) = (0.0, 0.0);
    for i in set.iter() {
        let v = f.value(i);
        if v > value {
            gt += space.weight(i);
        } else if v < value {
            lt += space.weight(i);
        }
    }
    let slack = 1e-12 * total;
    Ok(gt <= s * total + slack && lt <= (1.0 - s) * total + slack)
}

/// `m^s_{|f - c|}(A)` for a fixed constant `c`.
pub fn deviation_median(space: &Space, f: &SampleFunction, set: &PointSet, s: f64, c: f64) -> Result<f64, MedianError> {
    check_query(space, set, s)?;
    Ok(maximal_median_with(space, set, s, |i| (f.value(i) - c).abs()))
}

/// Value and minimizing constant of an oscillation functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Oscillation {
    pub value: f64,
    pub c: f64,
}

/// `inf_c m^s_{|f - c|}(B)` together with the smallest minimizing `c`.
pub fn median_oscillation(space: &Space, f: &SampleFunction, set: &PointSet, s: f64) -> Result<Oscillation, MedianError> {
    check_query(space, set, s)?;
    let (value, c) = ValueLevels::collect(space, set, |i| f.value(i)).narrowest_window(s);
    Ok(Oscillation { value, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricInput;

    fn line(weights: &[f64]) -> Space {
        let n = weights.len();
        Space::new(
            (0..n).map(|i| format!("p{i}")).collect(),
            weights.to_vec(),
            MetricInput::Euclidean((0..n).map(|i| vec![i as f64]).collect()),
        )
        .unwrap()
    }

    #[test]
    fn indicator_half_median_is_upper_end() {
        // chi_[1/2,1] on [0,1]: half the mass at 0, half at 1
        let s = line(&[1.0, 1.0]);
        let f = SampleFunction::new(&s, vec![0.0, 1.0]).unwrap();
        assert_eq!(maximal_median(&s, &f, &s.all(), 0.5).unwrap(), 1.0);
        assert!(is_s_median(&s, 0.5, &f, &s.all(), 0.5).unwrap());
        assert!(is_s_median(&s, 0.0, &f, &s.all(), 0.5).unwrap());
        assert!(!is_s_median(&s, 2.0, &f, &s.all(), 0.5).unwrap());
    }

    #[test]
    fn constant_and_weighted_cases() {
        let s = line(&[1.0, 1.0, 2.0]);
        let c = SampleFunction::constant(&s, 5.0);
        for lvl in [0.1, 0.5, 1.0] {
            assert_eq!(maximal_median(&s, &c, &s.all(), lvl).unwrap(), 5.0);
        }
        let f = SampleFunction::new(&s, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(maximal_median(&s, &f, &s.all(), 0.5).unwrap(), 3.0);
        // s = 1 picks the minimum
        assert_eq!(maximal_median(&s, &f, &s.all(), 1.0).unwrap(), 1.0);
    }

    #[test]
    fn query_validation() {
        let s = line(&[1.0]);
        let f = SampleFunction::constant(&s, 0.0);
        assert!(matches!(
            maximal_median(&s, &f, &PointSet::empty(1), 0.5),
            Err(MedianError::EmptySet)
        ));
        assert!(matches!(maximal_median(&s, &f, &s.all(), 0.0), Err(MedianError::InvalidS(_))));
        assert!(matches!(maximal_median(&s, &f, &s.all(), 1.5), Err(MedianError::InvalidS(_))));
        assert!(SampleFunction::new(&s, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn oscillation_examples() {
        let s = line(&[1.0, 1.0]);
        let f = SampleFunction::new(&s, vec![0.0, 1.0]).unwrap();
        let o = median_oscillation(&s, &f, &s.all(), 0.5).unwrap();
        assert_eq!(o, Oscillation { value: 0.5, c: 0.5 });
        assert_eq!(deviation_median(&s, &f, &s.all(), 0.5, o.c).unwrap(), 0.5);

        let k = SampleFunction::constant(&s, 3.0);
        assert_eq!(
            median_oscillation(&s, &k, &s.all(), 0.5).unwrap(),
            Oscillation { value: 0.0, c: 3.0 }
        );
        // above s = 1/2 a two-valued function has zero oscillation
        let heavy = line(&[1.0, 2.0]);
        let g = SampleFunction::new(&heavy, vec![0.0, 1.0]).unwrap();
        let o = median_oscillation(&heavy, &g, &heavy.all(), 0.6).unwrap();
        assert_eq!(o, Oscillation { value: 0.0, c: 1.0 });
        let o = median_oscillation(&s, &f, &s.all(), 0.6).unwrap();
        assert_eq!(o.value, 0.0);
    }

    #[test]
    fn oscillation_matches_dense_scan() {
        let s = line(&[1.0, 2.0, 1.0, 3.0, 1.0]);
        let f = SampleFunction::new(&s, vec![0.3, -1.0, 2.5, 0.0, 4.0]).unwrap();
        for lvl in [0.1, 0.25, 0.5, 0.75] {
            let o = median_oscillation(&s, &f, &s.all(), lvl).unwrap();
            let mut scan = f64::INFINITY;
            for k in 0..=10_000 {
                let c = -1.0 + 5.0 * k as f64 / 10_000.0;
                scan = scan.min(deviation_median(&s, &f, &s.all(), lvl, c).unwrap());
            }
            assert!(o.value <= scan + 1e-12);
            assert!(scan - o.value <= 1e-6 * 5.0, "s={lvl}: {} vs {scan}", o.value);
        }
    }

    #[test]
    fn function_json() {
        let s = line(&[1.0, 1.0]);
        let f = SampleFunction::from_json(&s, r#"{"values":{"p0":0.0,"p1":1.0}}"#).unwrap();
        assert_eq!(f.values(), &[0.0, 1.0]);
        assert!(matches!(
            SampleFunction::from_json(&s, r#"{"values":{"p0":0.0}}"#),
            Err(MedianError::MissingPoint(_))
        ));
        assert!(matches!(
            SampleFunction::from_json(&s, r#"{"values":{"p0":0.0,"p1":1.0,"q":2.0}}"#),
            Err(MedianError::UnknownPoint(_))
        ));
        let back = SampleFunction::from_json(&s, &f.to_json(&s).to_string()).unwrap();
        assert_eq!(back, f);
    }
}
