//! Greedy 5-covering of a finite ball family.

use thiserror::Error;

use crate::pointset::PointSet;
use crate::space::{Ball, Space, SpaceError};

#[derive(Debug, Error)]
pub enum CoverError {
    #[error("ball family is empty")]
    EmptyFamily,
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("ball {ball} is not inside the 5-dilate of any selected ball")]
    CoverageFailed { ball: usize },
}

#[derive(Clone, Debug)]
pub struct Cover {
    /// Indices into the input family, in selection order.
    pub selected: Vec<usize>,
    /// For every input ball, the selected ball (input index) whose 5-dilate
    /// contains it.
    pub covered_by: Vec<usize>,
    /// For every input ball, the selected ball that discarded it (itself if
    /// selected). That ball meets it and has radius at least its own.
    pub discarded_by: Vec<usize>,
}

impl Cover {
    pub fn is_selected(&self, k: usize) -> bool {
        self.discarded_by[k] == k
    }
}

/// Repeatedly select the remaining ball of largest radius (ties: smaller
/// center, then input order) and discard every ball meeting it.
pub fn five_cover(space: &Space, balls: &[Ball]) -> Result<Cover, CoverError> {
    if balls.is_empty() {
        return Err(CoverError::EmptyFamily);
    }
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| {
        balls[b]
            .radius()
            .total_cmp(&balls[a].radius())
            .then(balls[a].center().cmp(&balls[b].center()))
            .then(a.cmp(&b))
    });

    let mut discarded_by = vec![usize::MAX; balls.len()];
    let mut selected = Vec::new();
    for &k in &order {
        if discarded_by[k] != usize::MAX {
            continue;
        }
        selected.push(k);
        for (j, other) in balls.iter().enumerate() {
            if discarded_by[j] == usize::MAX && other.members().intersects(balls[k].members()) {
                discarded_by[j] = k;
            }
        }
    }

    let dilates: Vec<PointSet> = selected
        .iter()
        .map(|&k| space.dilate(&balls[k], 5.0).map(|b| b.members().clone()))
        .collect::<Result<_, _>>()?;
    let mut covered_by = Vec::with_capacity(balls.len());
    for (j, ball) in balls.iter().enumerate() {
        // the discarding ball covers by the triangle inequality; fall back to a scan anyway
        let own = selected.iter().position(|&k| k == discarded_by[j]).unwrap();
        let pos = if ball.members().is_subset(&dilates[own]) {
            own
        } else {
            dilates
                .iter()
                .position(|d| ball.members().is_subset(d))
                .ok_or(CoverError::CoverageFailed { ball: j })?
        };
        covered_by.push(selected[pos]);
    }
    Ok(Cover {
        selected,
        covered_by,
        discarded_by,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricInput;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};

    fn line(xs: &[f64]) -> Space {
        Space::new(
            (0..xs.len()).map(|i| format!("p{i}")).collect(),
            vec![1.0; xs.len()],
            MetricInput::Euclidean(xs.iter().map(|&x| vec![x]).collect()),
        )
        .unwrap()
    }

    #[test]
    fn empty_family_is_an_error() {
        let s = line(&[0.0]);
        assert!(matches!(five_cover(&s, &[]), Err(CoverError::EmptyFamily)));
    }

    #[test]
    fn single_and_disjoint_families() {
        let s = line(&[0.0, 1.0, 10.0]);
        let b = s.ball(0, 0.5).unwrap();
        let c = five_cover(&s, std::slice::from_ref(&b)).unwrap();
        assert_eq!(c.selected, vec![0]);
        assert_eq!(c.covered_by, vec![0]);

        let fam = vec![s.ball(0, 0.5).unwrap(), s.ball(2, 0.5).unwrap(), s.ball(1, 0.5).unwrap()];
        let mut sel = five_cover(&s, &fam).unwrap().selected;
        sel.sort();
        assert_eq!(sel, vec![0, 1, 2]);
    }

    #[test]
    fn hand_traced_line_example() {
        let s = line(&[0.0, 1.0, 10.0]);
        let fam = vec![s.ball(0, 3.0).unwrap(), s.ball(1, 1.0).unwrap(), s.ball(2, 1.0).unwrap()];
        let c = five_cover(&s, &fam).unwrap();
        assert_eq!(c.selected, vec![0, 2]);
        assert_eq!(c.covered_by, vec![0, 0, 2]);
        let five = s.dilate(&fam[0], 5.0).unwrap();
        assert!(fam[1].members().is_subset(five.members()));
    }

    #[test]
    fn tie_break_prefers_smaller_center() {
        let s = line(&[0.0, 1.0, 2.0]);
        let fam = vec![s.ball(1, 1.5).unwrap(), s.ball(0, 1.5).unwrap()];
        assert_eq!(five_cover(&s, &fam).unwrap().selected, vec![1]);
    }

    #[test]
    fn random_families_are_disjoint_and_covered() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.gen_range(1..15);
            let mut xs: Vec<f64> = (0..40).map(|x| x as f64).collect();
            xs.shuffle(&mut rng);
            xs.truncate(n);
            let s = line(&xs);
            let m = rng.gen_range(1..10);
            let fam: Vec<Ball> = (0..m)
                .map(|_| s.ball(rng.gen_range(0..n), rng.gen_range(0.5..12.0)).unwrap())
                .collect();
            let c = five_cover(&s, &fam).unwrap();
            for (i, &a) in c.selected.iter().enumerate() {
                for &b in &c.selected[i + 1..] {
                    assert!(!fam[a].members().intersects(fam[b].members()));
                }
            }
            for (j, b) in fam.iter().enumerate() {
                let d = c.discarded_by[j];
                assert!(fam[d].radius() >= b.radius());
                assert!(fam[d].members().intersects(b.members()));
                let five = s.dilate(&fam[c.covered_by[j]], 5.0).unwrap();
                assert!(b.members().is_subset(five.members()));
            }
        }
    }
}
