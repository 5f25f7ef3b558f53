//! Calderón–Zygmund machinery around a base ball `B0`: the ball family,
//! median maximal functions, CZ decompositions at one or two nested levels,
//! the good-lambda inequality and the local John–Nirenberg verifier.
//!
//! Family balls carry the largest admissible radius for their member set, so
//! the supremum `r_x(lambda)` over the continuum family is attained by a
//! family member.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::covering::{five_cover, CoverError};
use crate::median::{check_query, maximal_median_with, MedianError, SampleFunction};
use crate::norms::{jn_median_norm, NormError, PackingOptions};
use crate::pointset::PointSet;
use crate::space::{Ball, DoublingProfile, Space, SpaceError};

const RADIUS_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CzError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Median(#[from] MedianError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Cover(#[from] CoverError),
    #[error("base ball is empty")]
    EmptyBase,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("level set E_lambda is empty at lambda = {lambda}")]
    EmptyLevelSet { lambda: f64 },
    #[error("threshold m^(t/alpha)(B0_hat) = {threshold} exceeds lambda = {lambda}")]
    ThresholdViolated { threshold: f64, lambda: f64 },
    #[error("certificate {which} violated: {detail}")]
    CertificateViolated { which: &'static str, detail: String },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("s = {s} exceeds s0 = {s0}")]
    InvalidS { s: f64, s0: f64 },
    #[error("center level r = {r} must satisfy s <= r <= 1/2 (s = {s})")]
    InvalidCenterLevel { r: f64, s: f64 },
    #[error("median level {0} outside (0, 1]")]
    InvalidLevel(f64),
}

/// `5^D c_mu^2 (1 + 1/eta)^D`.
pub fn alpha_of(profile: &DoublingProfile, eta: f64) -> f64 {
    let d = profile.dimension;
    5f64.powf(d) * profile.c_mu * profile.c_mu * (1.0 + 1.0 / eta).powf(d)
}

/// `min(1/(2 alpha), 1/(8 c_mu^3))`.
pub fn s0_of(c_mu: f64, alpha: f64) -> f64 {
    (1.0 / (2.0 * alpha)).min(1.0 / (8.0 * c_mu.powi(3)))
}

/// `2^(p+3) c_mu^6 / (2^(1/p) - 1)^p`.
pub fn local_constant(p: f64, c_mu: f64) -> f64 {
    2f64.powf(p + 3.0) * c_mu.powi(6) / (2f64.powf(1.0 / p) - 1.0).powf(p)
}

/// Balls centered in `base` with radius at most `eta * r0`, one per
/// (center, member set), each with the largest admissible radius.
pub fn cz_family(space: &Space, base: &Ball, eta: f64) -> Result<Vec<Ball>, CzError> {
    if base.members().is_empty() {
        return Err(CzError::EmptyBase);
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(CzError::InvalidParameter(format!("eta must be positive, got {eta}")));
    }
    let cap = eta * base.radius();
    let mut out = Vec::new();
    for center in base.members().iter() {
        let ds = space.shell_distances(center);
        for k in 0..ds.len() {
            if ds[k] >= cap {
                break;
            }
            let upper = ds.get(k + 1).copied().unwrap_or_else(|| space.full_radius());
            out.push(space.ball(center, upper.min(cap))?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct CzParams {
    pub base: Ball,
    /// `(1 + eta) B0`.
    pub hat: Ball,
    pub eta: f64,
    pub t: f64,
    pub c_mu: f64,
    pub dimension: f64,
    pub alpha: f64,
    pub s0: f64,
    /// Good-lambda factor; `2^(1/p)` when unset.
    pub k: Option<f64>,
    pub family: Vec<Ball>,
}

impl CzParams {
    pub fn new(space: &Space, base: Ball, eta: f64, t: f64, profile: &DoublingProfile) -> Result<Self, CzError> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CzError::InvalidLevel(t));
        }
        let family = cz_family(space, &base, eta)?;
        let hat = space.dilate(&base, 1.0 + eta)?;
        let alpha = alpha_of(profile, eta);
        Ok(Self {
            base,
            hat,
            eta,
            t,
            c_mu: profile.c_mu,
            dimension: profile.dimension,
            alpha,
            s0: s0_of(profile.c_mu, alpha),
            k: None,
            family,
        })
    }

    pub fn with_k(mut self, k: f64) -> Result<Self, CzError> {
        if !(k > 1.0 && k.is_finite()) {
            return Err(CzError::InvalidParameter(format!("K must exceed 1, got {k}")));
        }
        self.k = Some(k);
        Ok(self)
    }

    pub fn k_for(&self, p: f64) -> f64 {
        self.k.unwrap_or_else(|| 2f64.powf(1.0 / p))
    }

    /// `2 K^p c_mu^3`.
    pub fn beta_for(&self, p: f64) -> f64 {
        2.0 * self.k_for(p).powf(p) * self.c_mu.powi(3)
    }

    /// `eta / 5 * r0`.
    pub fn radius_cap(&self) -> f64 {
        self.eta / 5.0 * self.base.radius()
    }
}

/// `M_B f(x)`: the largest `m^t_{|f|}(B)` over family balls containing `x`, 0 if none.
pub fn median_maximal(space: &Space, f: &SampleFunction, x: usize, family: &[Ball], t: f64) -> Result<f64, CzError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(CzError::InvalidLevel(t));
    }
    Ok(family
        .iter()
        .filter(|b| b.members().contains(x))
        .map(|b| maximal_median_with(space, b.members(), t, |y| f.value(y).abs()))
        .fold(0.0, f64::max))
}

/// `M^#_B f(x)`: the largest `m^(t/beta)_{|f - m^t_f(B)|}(B)` over family
/// balls containing `x`, 0 if none.
pub fn sharp_maximal(
    space: &Space,
    f: &SampleFunction,
    x: usize,
    family: &[Ball],
    t: f64,
    beta: f64,
) -> Result<f64, CzError> {
    let level = t / beta;
    if !(t > 0.0 && t <= 1.0) {
        return Err(CzError::InvalidLevel(t));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(CzError::InvalidLevel(level));
    }
    Ok(family
        .iter()
        .filter(|b| b.members().contains(x))
        .map(|b| {
            let m = maximal_median_with(space, b.members(), t, |y| f.value(y));
            maximal_median_with(space, b.members(), level, |y| (f.value(y) - m).abs())
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusLemma {
    /// Family balls examined.
    pub checked: usize,
    /// Family balls whose median exceeds the threshold.
    pub fired: usize,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CzCertificates {
    pub sandwich_inner: bool,
    pub sandwich_outer: bool,
    pub radius_bound: bool,
    pub above_level: bool,
    pub stopping: bool,
    /// Number of dilates `sigma B_i` examined for the stopping condition.
    pub stopping_checks: usize,
    pub radius_lemma: RadiusLemma,
}

impl CzCertificates {
    pub fn all_hold(&self) -> bool {
        self.sandwich_inner
            && self.sandwich_outer
            && self.radius_bound
            && self.above_level
            && self.stopping
            && self.radius_lemma.violations == 0
    }
}

#[derive(Clone, Debug)]
pub struct CzDecomposition {
    pub lambda: f64,
    /// The disjoint CZ balls.
    pub balls: Vec<Ball>,
    /// For each CZ ball, the point of `E_lambda` it was selected for.
    pub generators: Vec<usize>,
    pub level_set: PointSet,
    /// `(x, B_x)` for every `x` in `E_lambda`, ascending in `x`.
    pub witnesses: Vec<(usize, Ball)>,
    pub certificates: CzCertificates,
    pub lambda0: Option<f64>,
}

impl CzDecomposition {
    pub fn total_measure(&self, space: &Space) -> f64 {
        self.balls.iter().map(|b| b.measure(space)).sum()
    }

    pub fn to_json(&self, space: &Space) -> serde_json::Value {
        serde_json::json!({
            "lambda": self.lambda,
            "balls": self.balls.iter().map(|b| b.to_json(space)).collect::<Vec<_>>(),
            "generators": self.generators.iter().map(|&x| space.id(x)).collect::<Vec<_>>(),
            "level_set": self.level_set.iter().map(|x| space.id(x)).collect::<Vec<_>>(),
            "certificates": self.certificates,
            "lambda0": self.lambda0,
        })
    }
}

/// `|f|`, its family medians and the threshold, shared by every level.
struct Prepared<'a> {
    space: &'a Space,
    params: &'a CzParams,
    g: SampleFunction,
    medians: Vec<f64>,
    threshold: f64,
}

impl<'a> Prepared<'a> {
    fn new(space: &'a Space, f: &SampleFunction, params: &'a CzParams) -> Result<Self, CzError> {
        if f.len() != space.len() {
            return Err(MedianError::LengthMismatch {
                expected: space.len(),
                got: f.len(),
            }
            .into());
        }
        check_query(space, params.hat.members(), params.t / params.alpha)?;
        let g = f.abs();
        let medians = params
            .family
            .par_iter()
            .map(|b| maximal_median_with(space, b.members(), params.t, |y| g.value(y)))
            .collect();
        let threshold = maximal_median_with(space, params.hat.members(), params.t / params.alpha, |y| g.value(y));
        Ok(Self {
            space,
            params,
            g,
            medians,
            threshold,
        })
    }

    fn radius_lemma(&self) -> RadiusLemma {
        let cap = self.params.radius_cap() * (1.0 + RADIUS_TOL);
        let mut out = RadiusLemma {
            checked: self.medians.len(),
            fired: 0,
            violations: 0,
        };
        for (b, &m) in self.params.family.iter().zip(&self.medians) {
            if m > self.threshold {
                out.fired += 1;
                if b.radius() > cap {
                    out.violations += 1;
                }
            }
        }
        out
    }

    fn level_set(&self, lambda: f64) -> PointSet {
        let mut set = PointSet::empty(self.space.len());
        for (b, &m) in self.params.family.iter().zip(&self.medians) {
            if m > lambda {
                set.union_with(b.members());
            }
        }
        set.intersection(self.params.hat.members())
    }

    fn check_level(&self, lambda: f64) -> Result<PointSet, CzError> {
        let set = self.level_set(lambda);
        if set.is_empty() {
            return Err(CzError::EmptyLevelSet { lambda });
        }
        if self.threshold > lambda {
            return Err(CzError::ThresholdViolated {
                threshold: self.threshold,
                lambda,
            });
        }
        Ok(set)
    }

    /// Family balls containing `x` with median above `lambda`.
    fn candidates(&self, x: usize, lambda: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.medians.len())
            .filter(move |&k| self.medians[k] > lambda && self.params.family[k].members().contains(x))
    }

    /// Largest radius first, then smaller center, then family order.
    fn better(&self, a: usize, b: Option<usize>) -> bool {
        let fam = &self.params.family;
        match b {
            None => true,
            Some(b) => {
                fam[a].radius() > fam[b].radius()
                    || (fam[a].radius() == fam[b].radius() && fam[a].center() < fam[b].center())
            }
        }
    }

    fn max_witness(&self, x: usize, lambda: f64) -> usize {
        let mut best = None;
        for k in self.candidates(x, lambda) {
            if self.better(k, best) {
                best = Some(k);
            }
        }
        best.expect("x lies in the level set")
    }

    /// Largest witness containing `inner` among those longer than half of
    /// `r_x(lambda)`; the max-radius witness when there is none.
    fn nested_witness(&self, x: usize, lambda: f64, inner: &PointSet) -> usize {
        let top = self.max_witness(x, lambda);
        let half = 0.5 * self.params.family[top].radius();
        let mut best = None;
        for k in self.candidates(x, lambda) {
            let b = &self.params.family[k];
            if b.radius() > half && inner.is_subset(b.members()) && self.better(k, best) {
                best = Some(k);
            }
        }
        best.unwrap_or(top)
    }

    fn decompose(&self, lambda: f64, choose: impl Fn(usize) -> usize) -> Result<CzDecomposition, CzError> {
        let level_set = self.check_level(lambda)?;
        let fam = &self.params.family;
        let mut witnesses = Vec::with_capacity(level_set.len());
        let mut distinct: Vec<usize> = Vec::new();
        let mut first_point: Vec<usize> = Vec::new();
        for x in level_set.iter() {
            let k = choose(x);
            witnesses.push((x, fam[k].clone()));
            if !distinct.contains(&k) {
                distinct.push(k);
                first_point.push(x);
            }
        }
        let cover_family: Vec<Ball> = distinct.iter().map(|&k| fam[k].clone()).collect();
        let cover = five_cover(self.space, &cover_family)?;
        let balls: Vec<Ball> = cover.selected.iter().map(|&j| cover_family[j].clone()).collect();
        let generators = cover.selected.iter().map(|&j| first_point[j]).collect();
        let chosen_medians: Vec<f64> = cover.selected.iter().map(|&j| self.medians[distinct[j]]).collect();
        let certificates = self.certify(lambda, &level_set, &balls, &chosen_medians)?;
        Ok(CzDecomposition {
            lambda,
            balls,
            generators,
            level_set,
            witnesses,
            certificates,
            lambda0: None,
        })
    }

    fn certify(
        &self,
        lambda: f64,
        level_set: &PointSet,
        balls: &[Ball],
        medians: &[f64],
    ) -> Result<CzCertificates, CzError> {
        let space = self.space;
        let n = space.len();
        let mut union = PointSet::empty(n);
        let mut union5 = PointSet::empty(n);
        for b in balls {
            union.union_with(b.members());
            union5.union_with(space.dilate(b, 5.0)?.members());
        }
        let cap = self.params.radius_cap() * (1.0 + RADIUS_TOL);
        let eta_r0 = self.params.eta * self.params.base.radius();

        let mut stopping = true;
        let mut stopping_checks = 0;
        for b in balls {
            let c = b.center();
            let r = b.radius();
            if 2.0 * r > eta_r0 {
                continue;
            }
            // distinct member sets of sigma B for sigma >= 2 with sigma r <= eta r0
            let mut dilates = vec![space.ball(c, 2.0 * r)?.members().clone()];
            for &d in space.shell_distances(c) {
                if d >= 2.0 * r && d < eta_r0 {
                    dilates.push(PointSet::from_indices(n, (0..n).filter(|&y| space.distance(c, y) <= d)));
                }
            }
            for set in dilates {
                stopping_checks += 1;
                if maximal_median_with(space, &set, self.params.t, |y| self.g.value(y)) > lambda {
                    stopping = false;
                }
            }
        }

        let certs = CzCertificates {
            sandwich_inner: union.is_subset(level_set),
            sandwich_outer: level_set.is_subset(&union5),
            radius_bound: balls.iter().all(|b| b.radius() <= cap),
            above_level: medians.iter().all(|&m| m > lambda),
            stopping,
            stopping_checks,
            radius_lemma: self.radius_lemma(),
        };
        let failed = [
            ("sandwich: union of balls inside E_lambda", certs.sandwich_inner),
            ("sandwich: E_lambda inside union of 5-dilates", certs.sandwich_outer),
            ("radius bound r <= eta r0 / 5", certs.radius_bound),
            ("median above lambda", certs.above_level),
            ("stopping condition on dilates", certs.stopping),
            ("radius lemma on the family", certs.radius_lemma.violations == 0),
        ]
        .into_iter()
        .find(|(_, ok)| !ok);
        match failed {
            Some((which, _)) => Err(CzError::CertificateViolated {
                which,
                detail: format!("lambda = {lambda}"),
            }),
            None => Ok(certs),
        }
    }
}

/// Radius-lemma check alone: every family ball whose `m^t_{|f|}` exceeds
/// `m^(t/alpha)_{|f|}(B0_hat)` has radius at most `eta r0 / 5`.
pub fn radius_lemma_check(space: &Space, f: &SampleFunction, params: &CzParams) -> Result<RadiusLemma, CzError> {
    Ok(Prepared::new(space, f, params)?.radius_lemma())
}

/// CZ decomposition of `|f|` at level `lambda`.
pub fn cz_decompose(space: &Space, f: &SampleFunction, params: &CzParams, lambda: f64) -> Result<CzDecomposition, CzError> {
    let prep = Prepared::new(space, f, params)?;
    prep.decompose(lambda, |x| prep.max_witness(x, lambda))
}

#[derive(Clone, Debug)]
pub struct NestedDecomposition {
    pub low: CzDecomposition,
    pub high: CzDecomposition,
    /// `containment[i] = j` with `high.balls[i]` inside `5 low.balls[j]`.
    pub containment: Vec<usize>,
}

/// Decompositions at `lambda_low <= lambda_high` where every high-level ball
/// lies in the 5-dilate of a low-level ball.
pub fn cz_nested(
    space: &Space,
    f: &SampleFunction,
    params: &CzParams,
    lambda_low: f64,
    lambda_high: f64,
) -> Result<NestedDecomposition, CzError> {
    if !(lambda_low <= lambda_high) {
        return Err(CzError::InvalidParameter(format!(
            "levels must satisfy lambda_low <= lambda_high, got {lambda_low} > {lambda_high}"
        )));
    }
    let prep = Prepared::new(space, f, params)?;
    let high = prep.decompose(lambda_high, |x| prep.max_witness(x, lambda_high))?;
    let high_witness = |x: usize| {
        high.witnesses
            .binary_search_by_key(&x, |(y, _)| *y)
            .ok()
            .map(|i| high.witnesses[i].1.members())
    };
    let low = prep.decompose(lambda_low, |x| match high_witness(x) {
        Some(inner) => prep.nested_witness(x, lambda_low, inner),
        None => prep.max_witness(x, lambda_low),
    })?;

    let dilates: Vec<Ball> = low
        .balls
        .iter()
        .map(|b| space.dilate(b, 5.0))
        .collect::<Result<_, _>>()?;
    let mut containment = Vec::with_capacity(high.balls.len());
    for (i, b) in high.balls.iter().enumerate() {
        match dilates.iter().position(|d| b.members().is_subset(d.members())) {
            Some(j) => containment.push(j),
            None => {
                return Err(CzError::CertificateViolated {
                    which: "nested containment",
                    detail: format!("high-level ball {i} lies in no 5-dilate of a low-level ball"),
                })
            }
        }
    }
    Ok(NestedDecomposition { low, high, containment })
}

#[derive(Clone, Debug, Serialize)]
pub struct GoodLambda {
    pub lambda: f64,
    pub k: f64,
    pub beta: f64,
    /// `sum_j mu(B_{j, K lambda})`.
    pub lhs: f64,
    pub rhs: f64,
    /// `||f||_{JN_{p,0,s}(B0_hat)}`.
    pub norm: f64,
    /// `sum_i mu(B_{i, lambda})`.
    pub low_sum: f64,
    pub pass: bool,
}

/// Both sides of the good-lambda inequality for an already centered `f`.
pub fn good_lambda_sides(
    space: &Space,
    f: &SampleFunction,
    params: &CzParams,
    p: f64,
    s: f64,
    lambda: f64,
) -> Result<GoodLambda, CzError> {
    let k = params.k_for(p);
    let beta = params.beta_for(p);
    let s_max = params.t / beta;
    if !(s > 0.0 && s <= s_max) {
        return Err(CzError::PreconditionViolated(format!(
            "s = {s} must satisfy 0 < s <= t/(2 K^p c_mu^3) = {s_max}"
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CzError::PreconditionViolated(format!("lambda must be positive, got {lambda}")));
    }
    let nested = match cz_nested(space, f, params, lambda, k * lambda) {
        Ok(n) => n,
        Err(CzError::EmptyLevelSet { lambda }) => {
            return Err(CzError::PreconditionViolated(format!("E_(K lambda) is empty at K lambda = {lambda}")))
        }
        Err(CzError::ThresholdViolated { threshold, lambda }) => {
            return Err(CzError::PreconditionViolated(format!(
                "m^(t/alpha)_(|f|)(B0_hat) = {threshold} exceeds lambda = {lambda}"
            )))
        }
        Err(e) => return Err(e),
    };
    let norm = jn_median_norm(space, f, params.hat.members(), p, s, PackingOptions::forced_exact())?.norm;
    let lhs = nested.high.total_measure(space);
    let low_sum = nested.low.total_measure(space);
    let c3 = params.c_mu.powi(3);
    let rhs = 2f64.powf(p) * c3 / (k - 1.0).powf(p) * (norm / lambda).powf(p) + low_sum / (2.0 * k.powf(p));
    Ok(GoodLambda {
        lambda,
        k,
        beta,
        lhs,
        rhs,
        norm,
        low_sum,
        pass: lhs <= rhs + 1e-9 * rhs,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalEntry {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrivialBound {
    /// `mu(B0_hat) lambda0^p`.
    pub lhs: f64,
    /// `2^p ||f||^p`.
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalJnReport {
    pub lambda0: f64,
    pub center: f64,
    pub norm: f64,
    pub entries: Vec<LocalEntry>,
    pub constant_c: f64,
    pub s0: f64,
    pub alpha: f64,
    pub trivial_bound: TrivialBound,
    pub pass: bool,
}

impl LocalJnReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// 50 log-spaced levels from `1.01 lambda0` to `2 max g`.
pub fn default_lambda_grid(lambda0: f64, g_max: f64) -> Vec<f64> {
    if !(g_max > 0.0) {
        return vec![1.0];
    }
    let lo = if lambda0 > 0.0 { 1.01 * lambda0 } else { 1e-3 * g_max };
    let hi = 2.0 * g_max;
    log_grid(lo, hi.max(lo), 50)
}

pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Checks `mu{x in B0 : |f - m^r_f(B0)| > lambda} <= c ||f||^p / lambda^p`
/// over a grid of levels, with `t = 1/2` fixed by the caller's params.
pub fn local_jn_verify(
    space: &Space,
    f: &SampleFunction,
    params: &CzParams,
    p: f64,
    s: f64,
    r_center: f64,
    lambda_grid: Option<&[f64]>,
) -> Result<LocalJnReport, CzError> {
    if !(s > 0.0 && s <= params.s0) {
        return Err(CzError::InvalidS { s, s0: params.s0 });
    }
    if !(r_center >= s && r_center <= 0.5) {
        return Err(CzError::InvalidCenterLevel { r: r_center, s });
    }
    let base = params.base.members();
    let hat = params.hat.members();
    let center = maximal_median_with(space, base, r_center, |y| f.value(y));
    let g = f.deviation(center);
    let lambda0 = maximal_median_with(space, hat, params.t / params.alpha, |y| g.value(y));
    let norm = jn_median_norm(space, f, hat, p, s, PackingOptions::forced_exact())?.norm;
    let constant_c = local_constant(p, params.c_mu);

    let g_max = hat.iter().map(|y| g.value(y)).fold(0.0, f64::max);
    let grid = match lambda_grid {
        Some(levels) => levels.to_vec(),
        None => default_lambda_grid(lambda0, g_max),
    };
    if let Some(bad) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(CzError::InvalidParameter(format!("lambda grid entries must be positive, got {bad}")));
    }
    let entries: Vec<LocalEntry> = grid
        .par_iter()
        .map(|&lambda| {
            let lhs: f64 = base.iter().filter(|&y| g.value(y) > lambda).map(|y| space.weight(y)).sum();
            let rhs = constant_c * (norm / lambda).powf(p);
            LocalEntry {
                lambda,
                lhs,
                rhs,
                margin: rhs - lhs,
                pass: lhs <= rhs,
            }
        })
        .collect();
    let trivial_lhs = space.measure(hat) * lambda0.powf(p);
    let trivial_rhs = 2f64.powf(p) * norm.powf(p);
    let trivial_bound = TrivialBound {
        lhs: trivial_lhs,
        rhs: trivial_rhs,
        pass: trivial_lhs <= trivial_rhs * (1.0 + 1e-12),
    };
    let pass = trivial_bound.pass && entries.iter().all(|e| e.pass);
    Ok(LocalJnReport {
        lambda0,
        center,
        norm,
        entries,
        constant_c,
        s0: params.s0,
        alpha: params.alpha,
        trivial_bound,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::MetricInput;

    fn line(xs: &[f64]) -> Space {
        Space::new(
            (0..xs.len()).map(|i| format!("p{i}")).collect(),
            vec![1.0; xs.len()],
            MetricInput::Euclidean(xs.iter().map(|&x| vec![x]).collect()),
        )
        .unwrap()
    }

    /// Points `sum b_j 8^j`, `b_j in {0, 1}`, unit weights.
    fn cantor(levels: u32) -> Space {
        let xs: Vec<f64> = (0..1u64 << levels)
            .map(|m| (0..levels).filter(|j| m >> j & 1 == 1).map(|j| 8f64.powi(j as i32)).sum())
            .collect();
        line(&xs)
    }

    fn spike(space: &Space, at: usize, height: f64) -> SampleFunction {
        let mut v = vec![1.0; space.len()];
        v[at] = height;
        SampleFunction::new(space, v).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let two = DoublingProfile::from_constant(2.0);
        assert_eq!(alpha_of(&two, 1.0), 40.0);
        assert!((alpha_of(&two, 1e12) - 20.0).abs() < 1e-9);
        assert!(alpha_of(&two, 3.0) < alpha_of(&two, 2.0));
        let four = DoublingProfile::from_constant(4.0);
        assert!((alpha_of(&four, 1.0) - 1600.0).abs() < 1e-9);
    }

    #[test]
    fn local_constant_example() {
        let c = local_constant(2.0, 2.0);
        let expect = 2048.0 / (2f64.sqrt() - 1.0).powi(2);
        assert!((c - expect).abs() < 1e-9 * expect);
        assert!((c - 11936.6).abs() < 0.05);
    }

    #[test]
    fn two_point_family() {
        let s = line(&[0.0, 1.0]);
        let base = s.ball(0, 1.0 + 1e-9).unwrap();
        let fam = cz_family(&s, &base, 1.0).unwrap();
        let mut sets: Vec<Vec<usize>> = fam.iter().map(|b| b.members().to_vec()).collect();
        sets.sort();
        sets.dedup();
        assert_eq!(sets, vec![vec![0], vec![0, 1], vec![1]]);
        assert!(fam.iter().all(|b| b.radius() <= 1.0 + 1e-9));
    }

    #[test]
    fn tiny_eta_gives_singletons() {
        let s = line(&[0.0, 1.0, 2.0]);
        let base = s.ball(1, 1.5).unwrap();
        let fam = cz_family(&s, &base, 0.5).unwrap();
        assert!(fam.iter().all(|b| b.members().len() == 1));
        assert_eq!(fam.len(), 3);
    }

    #[test]
    fn grid5_family_matches_enumeration() {
        let s = line(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let base = s.ball(2, 1.5).unwrap();
        let eta = 5.0;
        let fam = cz_family(&s, &base, eta).unwrap();
        // enumerate balls B(c, r) with c in B0 over a fine radius grid
        let mut expect: Vec<(usize, Vec<usize>)> = Vec::new();
        for c in base.members().iter() {
            for k in 1..=750 {
                let r = k as f64 * 0.01;
                let m = s.ball(c, r).unwrap().members().to_vec();
                if !expect.contains(&(c, m.clone())) {
                    expect.push((c, m));
                }
            }
        }
        let mut got: Vec<(usize, Vec<usize>)> = fam.iter().map(|b| (b.center(), b.members().to_vec())).collect();
        got.sort();
        expect.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn maximal_functions() {
        let s = line(&[0.0, 1.0, 2.0]);
        let f = SampleFunction::new(&s, vec![-3.0, 1.0, 2.0]).unwrap();
        let singles: Vec<Ball> = (0..3).map(|c| s.ball(c, 0.5).unwrap()).collect();
        for x in 0..3 {
            assert_eq!(median_maximal(&s, &f, x, &singles, 0.5).unwrap(), f.value(x).abs());
        }
        assert_eq!(median_maximal(&s, &f, 2, &singles[..1], 0.5).unwrap(), 0.0);
        let k = SampleFunction::constant(&s, 4.0);
        assert_eq!(median_maximal(&s, &k, 1, &singles, 0.5).unwrap(), 4.0);
        assert_eq!(sharp_maximal(&s, &k, 1, &singles, 0.5, 4.0).unwrap(), 0.0);
        assert_eq!(sharp_maximal(&s, &f, 2, &singles[..1], 0.5, 4.0).unwrap(), 0.0);
        assert!(matches!(sharp_maximal(&s, &f, 0, &singles, 0.5, 0.25), Err(CzError::InvalidLevel(_))));
    }

    #[test]
    fn sharp_maximal_two_point() {
        // pair ball, f = {0, 1}: m^(1/2) = 1, |f - 1| = {1, 0}, m^(1/8) = 1
        let s = line(&[0.0, 1.0]);
        let f = SampleFunction::new(&s, vec![0.0, 1.0]).unwrap();
        let pair = vec![s.ball(0, 1.5).unwrap()];
        assert_eq!(sharp_maximal(&s, &f, 0, &pair, 0.5, 4.0).unwrap(), 1.0);
    }

    fn cantor_params(space: &Space, eta: f64) -> CzParams {
        let profile = space.doubling_profile();
        assert_eq!(profile.c_mu, 2.0);
        // B0 holds the lower half, B0_hat all 64 points
        let base = space.ball(0, 7500.0).unwrap();
        CzParams::new(space, base, eta, 0.5, &profile).unwrap()
    }

    #[test]
    fn spike_decomposition_is_certified() {
        let s = cantor(6);
        let params = cantor_params(&s, 4.0);
        assert_eq!(params.hat.members().len(), 64);
        assert_eq!(params.base.members().len(), 32);
        let f = spike(&s, 5, 100.0);
        let d = cz_decompose(&s, &f, &params, 10.0).unwrap();
        assert!(d.certificates.all_hold());
        // the pair {4, 5} has upper median 100
        assert_eq!(d.level_set.to_vec(), vec![4, 5]);
        assert_eq!(d.balls.len(), 1);
        assert!(d.balls[0].members().contains(5));
        assert!(d.certificates.radius_lemma.fired > 0);

        assert!(matches!(cz_decompose(&s, &f, &params, 100.0), Err(CzError::EmptyLevelSet { .. })));
        let step = SampleFunction::new(&s, (0..64).map(|i| if i < 40 { 0.0 } else { 5.0 }).collect()).unwrap();
        assert!(matches!(
            cz_decompose(&s, &step, &params, 1.0),
            Err(CzError::ThresholdViolated { .. }) | Err(CzError::EmptyLevelSet { .. })
        ));
    }

    #[test]
    fn nested_levels_contain() {
        let s = cantor(6);
        let params = cantor_params(&s, 4.0);
        let mut v = vec![1.0; 64];
        // only one point may stand above the t/alpha threshold
        v[5] = 100.0;
        v[6] = 40.0;
        let f = SampleFunction::new(&s, v).unwrap();
        for (lo, hi) in [(50.0, 50.0), (40.0, 80.0), (41.0, 99.0)] {
            let n = cz_nested(&s, &f, &params, lo, hi).unwrap();
            assert_eq!(n.containment.len(), n.high.balls.len());
            for (i, &j) in n.containment.iter().enumerate() {
                let five = s.dilate(&n.low.balls[j], 5.0).unwrap();
                assert!(n.high.balls[i].members().is_subset(five.members()));
            }
            assert!(n.high.level_set.is_subset(&n.low.level_set));
        }
    }

    #[test]
    fn good_lambda_on_spike() {
        let s = cantor(6);
        let params = cantor_params(&s, 4.0);
        let f = spike(&s, 5, 100.0).deviation(1.0);
        let p = 2.0;
        let s_max = params.t / params.beta_for(p);
        let gl = good_lambda_sides(&s, &f, &params, p, s_max, 10.0).unwrap();
        assert!(gl.pass, "{gl:?}");
        assert!(gl.lhs > 0.0);
        assert!(matches!(
            good_lambda_sides(&s, &f, &params, p, s_max, 99.0),
            Err(CzError::PreconditionViolated(_))
        ));
        let k = SampleFunction::constant(&s, 0.0);
        assert!(matches!(
            good_lambda_sides(&s, &k, &params, p, s_max, 1.0),
            Err(CzError::PreconditionViolated(_))
        ));
        assert!(matches!(
            good_lambda_sides(&s, &f, &params, p, 2.0 * s_max, 10.0),
            Err(CzError::PreconditionViolated(_))
        ));
    }

    #[test]
    fn local_verifier_constant_and_log() {
        let xs: Vec<f64> = (0..64).map(|i| (i + 1) as f64 / 64.0).collect();
        let s = line(&xs);
        let profile = s.doubling_profile();
        let base = s.ball(15, 16.0 / 64.0 + 1e-9).unwrap();
        assert_eq!(base.members().len(), 32);
        let params = CzParams::new(&s, base, 1.0, 0.5, &profile).unwrap();
        let sv = params.s0;

        let k = SampleFunction::constant(&s, 2.0);
        let rep = local_jn_verify(&s, &k, &params, 2.0, sv, 0.5, None).unwrap();
        assert!(rep.pass);
        assert!(rep.entries.iter().all(|e| e.lhs == 0.0));

        let f = SampleFunction::new(&s, xs.iter().map(|x| (1.0 / x).ln()).collect()).unwrap();
        let rep = local_jn_verify(&s, &f, &params, 2.0, sv, 0.5, None).unwrap();
        assert_eq!(rep.entries.len(), 50);
        assert!(rep.pass);

        assert!(matches!(
            local_jn_verify(&s, &f, &params, 2.0, 2.0 * sv, 0.5, None),
            Err(CzError::InvalidS { .. })
        ));
        assert!(matches!(
            local_jn_verify(&s, &f, &params, 2.0, sv, 0.75, None),
            Err(CzError::InvalidCenterLevel { .. })
        ));
    }

    #[test]
    fn default_grid_shape() {
        let g = default_lambda_grid(1.0, 10.0);
        assert_eq!(g.len(), 50);
        assert!((g[0] - 1.01).abs() < 1e-12);
        assert!((g[49] - 20.0).abs() < 1e-9);
        assert_eq!(default_lambda_grid(0.0, 0.0), vec![1.0]);
        assert!((default_lambda_grid(0.0, 4.0)[0] - 4e-3).abs() < 1e-15);
    }
}
