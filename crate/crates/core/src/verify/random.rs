//! Seeded random instances for the property suites.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::median::SampleFunction;
use crate::pointset::PointSet;
use crate::space::{MetricInput, Space};

/// `n` distinct lattice points on a line or in a 7x7 square, with weights
/// that are small integers most of the time.
pub fn space(rng: &mut ChaCha8Rng, min: usize, max: usize) -> Space {
    let n = rng.gen_range(min..=max);
    let coords: Vec<Vec<f64>> = if n <= 49 && rng.gen_bool(0.4) {
        let mut cells: Vec<(usize, usize)> = (0..7).flat_map(|i| (0..7).map(move |j| (i, j))).collect();
        cells.shuffle(rng);
        cells[..n].iter().map(|&(i, j)| vec![i as f64, j as f64]).collect()
    } else {
        let mut xs: Vec<usize> = (0..4 * n).collect();
        xs.shuffle(rng);
        xs[..n].iter().map(|&x| vec![x as f64]).collect()
    };
    let weights = weights(rng, n);
    Space::new((0..n).map(|i| format!("x{i}")).collect(), weights, MetricInput::Euclidean(coords))
        .expect("distinct lattice points form a valid space")
}

pub fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.7) {
        (0..n).map(|_| rng.gen_range(1..=5) as f64).collect()
    } else {
        (0..n).map(|_| rng.gen_range(0.5..2.0)).collect()
    }
}

/// Integer values in `[-5, 5]`, uniform values in `[-10, 10)`, or a constant.
pub fn values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match rng.gen_range(0..10) {
        0 => vec![rng.gen_range(-3..=3) as f64; n],
        1..=6 => (0..n).map(|_| rng.gen_range(-5..=5) as f64).collect(),
        _ => (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect(),
    }
}

pub fn function(rng: &mut ChaCha8Rng, space: &Space) -> SampleFunction {
    SampleFunction::new(space, values(rng, space.len())).expect("one value per point")
}

/// Values that are not all equal.
pub fn nonconstant_function(rng: &mut ChaCha8Rng, space: &Space) -> SampleFunction {
    loop {
        let v = values(rng, space.len());
        if v.iter().any(|&x| x != v[0]) {
            return SampleFunction::new(space, v).expect("one value per point");
        }
    }
}

/// Nonempty subset, each point kept with a random probability.
pub fn subset(rng: &mut ChaCha8Rng, n: usize) -> PointSet {
    let keep = rng.gen_range(0.2..1.0);
    let mut set = PointSet::from_indices(n, (0..n).filter(|_| rng.gen_bool(keep)));
    if set.is_empty() {
        set.insert(rng.gen_range(0..n));
    }
    set
}

/// `s` in `(0, 1]`, often a multiple of 1/20 so ties with `s mu(A)` occur.
pub fn level(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(1..=20) as f64 / 20.0,
        1 => 0.5,
        _ => rng.gen_range(1e-3..=1.0),
    }
}
