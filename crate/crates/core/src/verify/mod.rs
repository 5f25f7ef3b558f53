//! Randomized property suites checked against brute-force oracles.
//!
//! Every suite draws its instances from a fixed seed, one ChaCha8 stream per
//! instance, and evaluates them in parallel with ordered collection, so the
//! outcome does not depend on the thread count.

pub mod oracle;
pub mod random;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boman::{global_jn_verify, grid_boman_decomposition, jn_equivalence_check, verify_boman, BomanDecomposition};
use crate::covering::five_cover;
use crate::czd::{
    cz_decompose, cz_nested, good_lambda_sides, local_jn_verify, radius_lemma_check, CzError, CzParams,
};
use crate::generators::{canonical_function, cantor_space, grid_space, FunctionKind, WeightProfile};
use crate::median::{maximal_median, median_oscillation, SampleFunction};
use crate::norms::{
    bmo_median_norm, integral_oscillation, jn_integral_norm, jn_median_centered, jn_median_norm, lp_norm,
    PackingOptions,
};
use crate::packing::{self, Candidate};
use crate::pointset::PointSet;
use crate::space::{Ball, DoublingProfile, MetricInput, Space};

use oracle::CzOracle;

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub instances: usize,
    pub violations: usize,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: {} instances, {} violations; {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.instances,
            self.violations,
            self.detail
        )
    }
}

pub const DEFAULT_SEED: u64 = 0x6d65_646a_6e00;

fn rng_for(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Runs `case` on `count` instances; each returns its violations.
fn run_cases<T: Send>(seed: u64, count: usize, case: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    (0..count).into_par_iter().map(|i| case(&mut rng_for(seed, i))).collect()
}

fn outcome(id: u32, name: &'static str, instances: usize, min: usize, violations: Vec<String>, summary: String) -> Outcome {
    let pass = violations.is_empty() && instances >= min;
    let detail = match violations.first() {
        Some(first) => format!("{summary}; first violation: {first}"),
        None if instances < min => format!("{summary}; only {instances} of the required {min} instances"),
        None => summary,
    };
    Outcome {
        id,
        name,
        instances,
        violations: violations.len(),
        pass,
        detail,
    }
}

/// `a <= b` up to `tol` relative to the larger magnitude (at least 1).
fn le(a: f64, b: f64, tol: f64) -> bool {
    a <= b + tol * 1f64.max(a.abs()).max(b.abs())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    le(a, b, tol) && le(b, a, tol)
}

const EXACT: f64 = 1e-12;

fn with_values(space: &Space, values: Vec<f64>) -> SampleFunction {
    SampleFunction::new(space, values).expect("one value per point")
}

// ---------------------------------------------------------------- 1

fn median_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let space = random::space(rng, 1, 20);
    let n = space.len();
    let f = random::function(rng, &space);
    let a = random::subset(rng, n);
    let s = random::level(rng);
    let m = |g: &SampleFunction, set: &PointSet, s: f64| maximal_median(&space, g, set, s).expect("valid query");
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: &str, detail: String| {
        if !ok {
            bad.push(format!("{what}: {detail}"));
        }
    };
    let mf = m(&f, &a, s);

    let brute = oracle::max_median(&space, &a, s, f.values());
    check(mf == brute, "definition", format!("library {mf} vs brute force {brute}"));

    let s2 = rng.gen_range(s..=1.0);
    let m2 = m(&f, &a, s2);
    check(le(m2, mf, EXACT), "monotone in s", format!("m^{s2} = {m2} > m^{s} = {mf}"));

    let g = with_values(
        &space,
        f.values()
            .iter()
            .map(|v| if rng.gen_bool(0.3) { *v } else { v + rng.gen_range(0.0..3.0) })
            .collect(),
    );
    let mg = m(&g, &a, s);
    check(le(mf, mg, EXACT), "monotone in f", format!("m_f = {mf} > m_g = {mg}"));

    let wider = a.union(&random::subset(rng, n));
    let ratio = space.measure(&wider) / space.measure(&a);
    let c = ratio * (1.0 + 1e-9) * if rng.gen_bool(0.5) { 1.0 } else { rng.gen_range(1.0..2.0) };
    let mw = m(&f, &wider, s / c);
    check(le(mf, mw, EXACT), "set enlargement", format!("m^s(A) = {mf} > m^(s/c)(A') = {mw}, c = {c}"));

    let phis: [(&str, fn(f64) -> f64); 4] = [
        ("2x+1", |x| 2.0 * x + 1.0),
        ("x^3", |x| x * x * x),
        ("x^3+x", |x| x * x * x + x),
        ("exp(x/4)", |x| (x / 4.0).exp()),
    ];
    let (label, phi) = phis[rng.gen_range(0..phis.len())];
    let mphi = m(&f.map(phi), &a, s);
    check(
        close(mphi, phi(mf), EXACT),
        "commutes with increasing maps",
        format!("phi = {label}: {mphi} vs {}", phi(mf)),
    );

    let shift = rng.gen_range(-20.0..20.0);
    let ms = m(&f.map(|v| v + shift), &a, s);
    check(close(ms, mf + shift, EXACT), "translation", format!("{ms} vs {}", mf + shift));

    let scale = rng.gen_range(0.01..20.0);
    let mc = m(&f.map(|v| scale * v), &a, s);
    check(close(mc, scale * mf, EXACT), "positive scaling", format!("{mc} vs {}", scale * mf));

    let abs = f.abs();
    if s < 1.0 {
        let lower = s.min(1.0 - s);
        let mabs = m(&abs, &a, lower);
        check(le(mf.abs(), mabs, EXACT), "absolute value", format!("|{mf}| > {mabs}"));
    }
    let half = if s <= 0.5 { s } else { 1.0 - s };
    if half > 0.0 {
        let lhs = m(&f, &a, half).abs();
        let rhs = m(&abs, &a, half);
        check(le(lhs, rhs, EXACT), "absolute value at s <= 1/2", format!("s = {half}: {lhs} > {rhs}"));
    }

    let h = random::function(rng, &space);
    let t1 = s * rng.gen_range(0.01..0.99);
    let t2 = (s - t1) * rng.gen_range(0.01..=1.0);
    let lhs = m(&f.zip_with(&h, |x, y| x + y), &a, s);
    let rhs = m(&f, &a, t1) + m(&h, &a, t2);
    check(le(lhs, rhs, EXACT), "subadditivity", format!("t1 = {t1}, t2 = {t2}: {lhs} > {rhs}"));

    let p = [1.0, 2.0, 4.0][rng.gen_range(0..3)];
    let avg = a.iter().map(|x| space.weight(x) * abs.value(x).powf(p)).sum::<f64>() / space.measure(&a);
    let bound = (avg / s).powf(1.0 / p);
    let mabs = m(&abs, &a, s);
    check(le(mabs, bound, EXACT), "Chebyshev bound", format!("p = {p}: {mabs} > {bound}"));

    let parts = rng.gen_range(1..=4);
    let mut pieces = vec![PointSet::empty(n); parts];
    for x in wider.iter() {
        pieces[rng.gen_range(0..parts)].insert(x);
    }
    pieces.retain(|p| !p.is_empty());
    let meds: Vec<f64> = pieces.iter().map(|p| m(&f, p, s)).collect();
    let lo = meds.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = meds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mu = m(&f, &wider, s);
    check(le(lo, mu, EXACT) && le(mu, hi, EXACT), "between piece medians", format!("{mu} outside [{lo}, {hi}]"));

    let x = rng.gen_range(0..n);
    let point = m(&f, &PointSet::singleton(n, x), s);
    check(point == f.value(x), "singleton", format!("{point} vs {}", f.value(x)));
    let min = a.iter().map(|y| f.value(y)).fold(f64::INFINITY, f64::min);
    let top = m(&f, &a, 1.0);
    check(top == min, "s = 1", format!("{top} vs min {min}"));
    bad
}

pub fn median_properties(seed: u64, count: usize) -> Outcome {
    let bad: Vec<String> = run_cases(seed, count, median_case).into_iter().flatten().collect();
    outcome(
        1,
        "median properties",
        count,
        1000,
        bad,
        "monotonicity, increasing maps, translation, scaling, absolute value, subadditivity, Chebyshev and partition bounds, singletons and s = 1 at 1e-12".into(),
    )
}

// ---------------------------------------------------------------- 2

fn oscillation_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let space = random::space(rng, 1, 10);
    let n = space.len();
    let f = random::function(rng, &space);
    let set = if rng.gen_bool(0.5) {
        random::subset(rng, n)
    } else {
        let balls = space.canonical_balls(&space.all()).expect("nonempty space");
        balls.choose(rng).expect("at least one ball").members().clone()
    };
    let s = random::level(rng);
    let mut bad = Vec::new();
    let (lo, hi) = set
        .iter()
        .map(|x| f.value(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let range = hi - lo;

    let osc = median_oscillation(&space, &f, &set, s).expect("valid query");
    let cand = oracle::candidate_oscillation(&space, &f, &set, s);
    let scan = oracle::grid_scan_oscillation(&space, &f, &set, s);
    if !close(osc.value, cand, EXACT) {
        bad.push(format!("median oscillation {} vs candidate minimum {cand}", osc.value));
    }
    if (osc.value - scan).abs() > 1e-6 * range {
        bad.push(format!("median oscillation {} vs grid scan {scan} (range {range})", osc.value));
    }
    let at_c = oracle::max_median(&space, &set, s, &oracle::deviation_values(&f, osc.c));
    if !close(at_c, osc.value, EXACT) {
        bad.push(format!("reported constant {} gives {at_c}, not {}", osc.c, osc.value));
    }

    let q = match rng.gen_range(0..5) {
        0 => 1.0,
        1 => 2.0,
        2 => 1.5,
        _ => rng.gen_range(1.0..4.0),
    };
    let io = integral_oscillation(&space, &f, &set, q).expect("valid query").value;
    let iscan = oracle::grid_scan_integral(&space, &f, &set, q);
    let ok = if iscan == 0.0 { io.abs() <= 1e-12 } else { (io - iscan).abs() <= 1e-8 * iscan };
    if !ok {
        bad.push(format!("integral oscillation q = {q}: {io} vs grid scan {iscan}"));
    }
    bad
}

pub fn oscillation_oracle(seed: u64, count: usize) -> Outcome {
    let bad: Vec<String> = run_cases(seed, count, oscillation_case).into_iter().flatten().collect();
    outcome(
        2,
        "oscillation oracle",
        count,
        500,
        bad,
        "median oscillation against candidates (1e-12) and a refined 10^4 grid scan (1e-6 range); integral q >= 1 against a zooming scan (1e-8 relative)".into(),
    )
}

// ---------------------------------------------------------------- 3

fn packing_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let space = random::space(rng, 2, 9);
    let mut balls = space.canonical_balls(&space.all()).expect("nonempty space");
    balls.shuffle(rng);
    balls.truncate(rng.gen_range(1..=12));
    let terms: Vec<f64> = match rng.gen_range(0..3) {
        0 => {
            let f = random::function(rng, &space);
            let p = rng.gen_range(1.1..4.0);
            let s = rng.gen_range(0.05..=0.5);
            balls
                .iter()
                .map(|b| b.measure(&space) * median_oscillation(&space, &f, b.members(), s).unwrap().value.powf(p))
                .collect()
        }
        1 => balls
            .iter()
            .map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..10.0) })
            .collect(),
        _ => balls.iter().map(|_| rng.gen_range(0..4) as f64).collect(),
    };
    let cands: Vec<Candidate> = balls
        .iter()
        .zip(&terms)
        .map(|(b, &term)| Candidate {
            members: b.members().clone(),
            term,
        })
        .collect();
    let sets: Vec<PointSet> = cands.iter().map(|c| c.members.clone()).collect();
    let best = oracle::packing_enumeration(&sets, &terms);
    let mut bad = Vec::new();
    let solutions = [
        ("branch and bound", packing::branch_and_bound(&cands, space.weights())),
        ("memoized", packing::memoized(&cands)),
    ];
    for (name, sol) in &solutions {
        if !close(sol.total, best, EXACT) {
            bad.push(format!("{name} total {} vs enumeration {best}", sol.total));
        }
        for (i, &a) in sol.chosen.iter().enumerate() {
            if sol.chosen[i + 1..].iter().any(|&b| sets[a].intersects(&sets[b])) {
                bad.push(format!("{name} picks overlapping balls"));
            }
        }
        let sum: f64 = sol.chosen.iter().map(|&k| terms[k]).sum();
        if !close(sum, sol.total, EXACT) {
            bad.push(format!("{name} reports {} but its balls sum to {sum}", sol.total));
        }
    }
    let g = packing::greedy(&cands).total;
    if !le(g, best, EXACT) {
        bad.push(format!("greedy {g} above exact {best}"));
    }
    bad
}

pub fn packing_oracle(seed: u64, count: usize) -> Outcome {
    let bad: Vec<String> = run_cases(seed, count, packing_case).into_iter().flatten().collect();
    outcome(
        3,
        "packing oracle",
        count,
        200,
        bad,
        "branch and bound and memoized search equal exhaustive enumeration over <= 12 balls; greedy never exceeds it".into(),
    )
}

// ---------------------------------------------------------------- 4

/// A random space whose whole-space canonical family has at most 12 balls.
fn small_family_space(rng: &mut ChaCha8Rng) -> (Space, PointSet) {
    loop {
        let space = random::space(rng, 1, 6);
        let all = space.all();
        if space.canonical_balls(&all).expect("nonempty").len() <= 12 {
            return (space, all);
        }
    }
}

/// Exact `||f||_{JN_{p,0,s}}^p` by enumeration over the oracle's ball sets.
fn enumerated_norm_p(space: &Space, f: &SampleFunction, region: &PointSet, p: f64, s: f64) -> Option<f64> {
    let sets = oracle::ball_sets(space, region);
    if sets.len() > 20 {
        return None;
    }
    let terms: Vec<f64> = sets
        .iter()
        .map(|b| space.measure(b) * oracle::candidate_oscillation(space, f, b, s).powf(p))
        .collect();
    Some(oracle::packing_enumeration(&sets, &terms))
}

fn sandwich_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let (space, region) = small_family_space(rng);
    let f = random::function(rng, &space);
    let t = rng.gen_range(0.01..=0.5);
    let s = rng.gen_range(0.005..=t);
    let p = rng.gen_range(1.05..5.0);
    let opts = PackingOptions::exact();
    let norm = jn_median_norm(&space, &f, &region, p, s, opts).unwrap().norm.powf(p);
    let centered = jn_median_centered(&space, &f, &region, p, s, t, opts).unwrap().norm.powf(p);
    let mut bad = Vec::new();
    if !le(norm, centered, EXACT) {
        bad.push(format!("norm^p {norm} above centered {centered} (p {p}, s {s}, t {t})"));
    }
    if !le(centered, 2f64.powf(p) * norm, EXACT) {
        bad.push(format!("centered {centered} above 2^p norm^p {} (p {p}, s {s}, t {t})", 2f64.powf(p) * norm));
    }
    if let Some(reference) = enumerated_norm_p(&space, &f, &region, p, s) {
        if !close(norm, reference, 1e-9) {
            bad.push(format!("norm^p {norm} vs enumeration {reference}"));
        }
    }
    bad
}

pub fn sandwich(seed: u64, count: usize) -> Outcome {
    let bad: Vec<String> = run_cases(seed, count, sandwich_case).into_iter().flatten().collect();
    outcome(
        4,
        "constant-replacement sandwich",
        count,
        200,
        bad,
        "norm^p <= centered sup <= 2^p norm^p with exact packing over <= 12 balls, norm cross-checked by enumeration".into(),
    )
}

// ---------------------------------------------------------------- 5

fn chain_case(rng: &mut ChaCha8Rng, i: usize) -> Vec<String> {
    let (p, q, s) = match i % 4 {
        0 => (2.0, 1.0, 0.25),
        1 => (3.0, 2.0, 0.125),
        2 => (1.5, 1.0, 0.125),
        _ => {
            let p = rng.gen_range(1.1..5.0);
            (p, rng.gen_range(0.3..p), random::level(rng))
        }
    };
    let space = random::space(rng, 1, 7);
    let region = if rng.gen_bool(0.6) {
        space.all()
    } else {
        random::subset(rng, space.len())
    };
    let f = random::function(rng, &space);
    let opts = PackingOptions::forced_exact();
    let med = jn_median_norm(&space, &f, &region, p, s, opts).unwrap().norm;
    let int = jn_integral_norm(&space, &f, &region, p, q, opts).unwrap().norm;
    let lp = lp_norm(&space, &f, &region, p).unwrap();
    let bmo = bmo_median_norm(&space, &f, &region, s).unwrap();
    let mut bad = Vec::new();
    let lower = s.powf(1.0 / q) * med;
    if !le(lower, int, 1e-9) {
        bad.push(format!("(p,q,s) = ({p},{q},{s}): s^(1/q) median norm {lower} > integral norm {int}"));
    }
    if !le(int, lp, 1e-9) {
        bad.push(format!("(p,q,s) = ({p},{q},{s}): integral norm {int} > L^p norm {lp}"));
    }
    let via_bmo = space.measure(&region).powf(1.0 / p) * bmo;
    if !le(med, via_bmo, 1e-9) {
        bad.push(format!("(p,s) = ({p},{s}): median norm {med} > mu^(1/p) BMO {via_bmo}"));
    }
    bad
}

pub fn embedding_chain(seed: u64, count: usize) -> Outcome {
    let bad: Vec<String> = (0..count)
        .into_par_iter()
        .map(|i| chain_case(&mut rng_for(seed, i), i))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    outcome(
        5,
        "embedding chain",
        count,
        200,
        bad,
        "s^(1/q) JN_(p,0,s) <= JN_(p,q) <= L^p and JN_(p,0,s) <= mu^(1/p) BMO_(0,s), exact packing, 1e-9 relative".into(),
    )
}

// ---------------------------------------------------------------- 6

fn normalized(space: &Space) -> Space {
    let n = space.len() as f64;
    let total = space.total_measure();
    let weights = space.weights().iter().map(|w| w / total).collect::<Vec<_>>();
    let coords = space.coords().expect("generated spaces carry coordinates").to_vec();
    let space = Space::new(space.ids().to_vec(), weights, MetricInput::Euclidean(coords)).expect("rescaled weights");
    debug_assert!((space.total_measure() - 1.0).abs() < n * 1e-15 + 1e-12);
    space
}

fn limit_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let space = normalized(&random::space(rng, 1, 10));
    let region = space.all();
    let f = random::function(rng, &space);
    let s = rng.gen_range(0.01..=0.5);
    let opts = PackingOptions::forced_exact();
    let norms: Vec<f64> = [4.0, 16.0, 64.0, 200.0]
        .iter()
        .map(|&p| jn_median_norm(&space, &f, &region, p, s, opts).unwrap().norm)
        .collect();
    let bmo = bmo_median_norm(&space, &f, &region, s).unwrap();
    let mut bad = Vec::new();
    for w in norms.windows(2) {
        if !le(w[0], w[1], EXACT) {
            bad.push(format!("norms over p = 4, 16, 64, 200 not nondecreasing: {norms:?}"));
            break;
        }
    }
    if (norms[3] - bmo).abs() > 0.02 * bmo {
        bad.push(format!("JN_200 = {} vs BMO = {bmo}", norms[3]));
    }
    bad
}

pub fn p_limit(seed: u64, count: usize) -> Outcome {
    let bad: Vec<String> = run_cases(seed, count, limit_case).into_iter().flatten().collect();
    outcome(
        6,
        "p limit",
        count,
        50,
        bad,
        "JN_(p,0,s) nondecreasing in p on unit-mass spaces and within 2% of BMO_(0,s) at p = 200".into(),
    )
}

// ---------------------------------------------------------------- shared CZ fixtures

struct Fixture {
    space: Space,
    profile: DoublingProfile,
}

fn fixtures() -> &'static [Fixture] {
    static CELL: OnceLock<Vec<Fixture>> = OnceLock::new();
    CELL.get_or_init(|| {
        let spaces = vec![
            cantor_space(6, 8.0, WeightProfile::Uniform).unwrap(),
            cantor_space(6, 4.0, WeightProfile::Uniform).unwrap(),
            cantor_space(5, 8.0, WeightProfile::Uniform).unwrap(),
            grid_space(1, 16, 1.0, WeightProfile::Uniform).unwrap(),
            grid_space(1, 64, 1.0 / 64.0, WeightProfile::Uniform).unwrap(),
            grid_space(2, 5, 1.0, WeightProfile::Uniform).unwrap(),
        ];
        spaces
            .into_par_iter()
            .map(|space| {
                let profile = space.doubling_profile();
                Fixture { space, profile }
            })
            .collect()
    })
}

/// Spike, step, log and piecewise functions; with `peaked` every function
/// has a unique maximum of `|f|`, topping step backgrounds with a spike.
fn cz_function(rng: &mut ChaCha8Rng, space: &Space, peaked: bool) -> SampleFunction {
    let n = space.len();
    if peaked && rng.gen_bool(0.5) {
        let step = FunctionKind::Step {
            values: (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(0.0..5.0)).collect(),
        };
        let mut values = canonical_function(&step, space, 0).expect("step needs no positions").values().to_vec();
        values[rng.gen_range(0..n)] = rng.gen_range(6.0..60.0);
        return with_values(space, values);
    }
    let kinds = if peaked { 0..4 } else { 0..6 };
    let kind = match rng.gen_range(kinds) {
        0 | 1 => FunctionKind::Spike {
            at: rng.gen_range(0..n),
            height: rng.gen_range(5.0..100.0),
            background: rng.gen_range(0.0..3.0),
        },
        2 => FunctionKind::LogBlowup,
        3 => FunctionKind::Step {
            values: (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(-5.0..5.0)).collect(),
        },
        4 => FunctionKind::TwoValued {
            low: rng.gen_range(0.0..2.0),
            high: rng.gen_range(3.0..9.0),
            fraction: rng.gen_range(0.2..0.95),
        },
        _ => FunctionKind::RandomPiecewise {
            pieces: rng.gen_range(2..=6),
        },
    };
    canonical_function(&kind, space, rng.gen()).expect("generated spaces avoid the origin")
}

struct CzConfig {
    fixture: &'static Fixture,
    center: usize,
    r0: f64,
    eta: f64,
    t: f64,
    f: SampleFunction,
    params: CzParams,
}

/// Random base ball, dilation, level and function on one of the fixtures.
/// `cantor_only` restricts to the 64-point Cantor grids, where the
/// preconditions can hold; `favorable` further picks `t = 1/2` and a base
/// ball whose dilate is the whole grid, where they usually do.
fn cz_config(rng: &mut ChaCha8Rng, cantor_only: bool, favorable: bool, t: Option<f64>) -> CzConfig {
    let all = fixtures();
    let fixture = if cantor_only || favorable {
        &all[rng.gen_range(0..2)]
    } else {
        &all[rng.gen_range(0..all.len())]
    };
    let space = &fixture.space;
    let center = rng.gen_range(0..space.len());
    let far = (0..space.len()).map(|y| space.distance(center, y)).fold(0.0, f64::max);
    let eta = [1.0, 2.0, 4.0, 8.0, 16.0][rng.gen_range(if favorable { 1 } else { 0 }..5)];
    let r0 = match rng.gen_range(0..4) {
        _ if favorable => far / (1.0 + eta) * rng.gen_range(1.001..1.5),
        0 => space.full_radius(),
        1 => {
            let shells = space.shell_distances(center);
            shells[rng.gen_range(0..shells.len())].max(1e-9) * rng.gen_range(1.0001..1.5)
        }
        _ => far * rng.gen_range(0.1..1.2),
    };
    let t = t.unwrap_or_else(|| match rng.gen_range(0..5) {
        _ if favorable => 0.5,
        0 => 0.25,
        1 => rng.gen_range(0.1..=0.5),
        _ => 0.5,
    });
    let f = cz_function(rng, space, favorable);
    let base = space.ball(center, r0).expect("positive radius");
    let params = CzParams::new(space, base, eta, t, &fixture.profile).expect("valid parameters");
    CzConfig {
        fixture,
        center,
        r0,
        eta,
        t,
        f,
        params,
    }
}

impl CzConfig {
    fn oracle(&self, f: &SampleFunction) -> CzOracle {
        CzOracle::new(
            &self.fixture.space,
            f,
            self.center,
            self.r0,
            self.eta,
            self.t,
            self.fixture.profile.c_mu,
            self.fixture.profile.dimension,
        )
    }
}

fn triples(balls: &[Ball]) -> Vec<(usize, f64, PointSet)> {
    balls.iter().map(|b| (b.center(), b.radius(), b.members().clone())).collect()
}

// ---------------------------------------------------------------- 7

fn cover_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let space = random::space(rng, 1, 15);
    let n = space.len();
    let count = rng.gen_range(1..=10);
    let family: Vec<Ball> = (0..count)
        .map(|_| {
            let c = rng.gen_range(0..n);
            let r = if rng.gen_bool(0.5) {
                space.distance(c, rng.gen_range(0..n)) + rng.gen_range(1e-3..1.0)
            } else {
                rng.gen_range(0.1..8.0)
            };
            space.ball(c, r).unwrap()
        })
        .collect();
    let cover = five_cover(&space, &family).unwrap();
    let mut bad = Vec::new();
    for (i, &a) in cover.selected.iter().enumerate() {
        for &b in &cover.selected[i + 1..] {
            if family[a].members().intersects(family[b].members()) {
                bad.push(format!("selected balls {a} and {b} overlap"));
            }
        }
    }
    let dilates: Vec<PointSet> = cover
        .selected
        .iter()
        .map(|&k| oracle::open_ball(&space, family[k].center(), 5.0 * family[k].radius()))
        .collect();
    for (j, b) in family.iter().enumerate() {
        if !dilates.iter().any(|d| b.members().is_subset(d)) {
            bad.push(format!("ball {j} lies in no 5-dilate of a selected ball"));
        }
    }
    bad
}

fn radius_case(rng: &mut ChaCha8Rng) -> (usize, Vec<String>) {
    let favorable = rng.gen_bool(0.5);
    let cfg = cz_config(rng, false, favorable, None);
    let (fired, mut bad) = cfg.oracle(&cfg.f).radius_lemma();
    match radius_lemma_check(&cfg.fixture.space, &cfg.f, &cfg.params) {
        Ok(lemma) => {
            if lemma.fired != fired || lemma.violations != bad.len() {
                bad.push(format!(
                    "library radius lemma reports {} fired, {} violations; oracle {fired}, {}",
                    lemma.fired,
                    lemma.violations,
                    bad.len()
                ));
            }
        }
        Err(e) => bad.push(format!("radius lemma check failed: {e}")),
    }
    (fired, bad)
}

pub fn covering(seed: u64, families: usize, configs: usize) -> Outcome {
    let mut bad: Vec<String> = run_cases(seed, families, cover_case).into_iter().flatten().collect();
    let lemma = run_cases(seed ^ 0x7, configs, radius_case);
    let fired: usize = lemma.iter().map(|(k, _)| k).sum();
    let configs_fired = lemma.iter().filter(|(k, _)| *k > 0).count();
    bad.extend(lemma.into_iter().flat_map(|(_, b)| b));
    outcome(
        7,
        "5-covering and radius bound",
        families + configs,
        500,
        bad,
        format!(
            "{families} random families covered exactly; radius bound held on {fired} firing balls across {configs_fired} of {configs} stopping-time families"
        ),
    )
}

// ---------------------------------------------------------------- 8

enum CzResult {
    Decomposed(Vec<String>),
    Rejected(Vec<String>),
}

/// Expected error for a level per the oracle, if any.
fn expected_rejection(oracle: &CzOracle, n: usize, lambda: f64) -> Option<&'static str> {
    if oracle.level_set(n, lambda).is_empty() {
        Some("empty level set")
    } else if oracle.threshold > lambda {
        Some("threshold above level")
    } else {
        None
    }
}

fn matches_rejection(err: &CzError, expected: &str) -> bool {
    matches!(
        (err, expected),
        (CzError::EmptyLevelSet { .. }, "empty level set") | (CzError::ThresholdViolated { .. }, "threshold above level")
    )
}

fn cz_case(rng: &mut ChaCha8Rng) -> CzResult {
    let favorable = rng.gen_bool(0.7);
    let cantor_only = rng.gen_bool(0.8);
    let cfg = cz_config(rng, cantor_only, favorable, None);
    let space = &cfg.fixture.space;
    let n = space.len();
    let oracle = cfg.oracle(&cfg.f);
    let top = oracle.max_family_median();
    let valid = oracle.threshold < top;
    let high = if valid && rng.gen_bool(0.85) {
        if rng.gen_bool(0.1) {
            oracle.threshold
        } else {
            rng.gen_range(oracle.threshold..top)
        }
    } else {
        match rng.gen_range(0..3) {
            0 => top + rng.gen_range(0.0..2.0),
            1 => oracle.threshold * rng.gen_range(0.0..1.0) - rng.gen_range(0.0..0.5),
            _ => rng.gen_range(-1.0..(top.max(1.0) * 1.5)),
        }
    };
    let mut bad = Vec::new();
    match expected_rejection(&oracle, n, high) {
        Some(expected) => {
            match cz_decompose(space, &cfg.f, &cfg.params, high) {
                Ok(_) => bad.push(format!("decomposition returned at lambda {high} although {expected}")),
                Err(e) if matches_rejection(&e, expected) => {}
                Err(e) => bad.push(format!("lambda {high}: expected {expected}, got {e}")),
            }
            CzResult::Rejected(bad)
        }
        None => {
            let low = if rng.gen_bool(0.3) {
                high
            } else {
                rng.gen_range(oracle.threshold..=high)
            };
            match cz_decompose(space, &cfg.f, &cfg.params, high) {
                Ok(dec) => bad.extend(oracle.check_decomposition(space, &triples(&dec.balls), &dec.level_set, high)),
                Err(e) => bad.push(format!("lambda {high}: preconditions hold but got {e}")),
            }
            match cz_nested(space, &cfg.f, &cfg.params, low, high) {
                Ok(nested) => {
                    bad.extend(oracle.check_decomposition(space, &triples(&nested.low.balls), &nested.low.level_set, low));
                    bad.extend(oracle.check_decomposition(
                        space,
                        &triples(&nested.high.balls),
                        &nested.high.level_set,
                        high,
                    ));
                    let fives: Vec<PointSet> = nested
                        .low
                        .balls
                        .iter()
                        .map(|b| oracle::open_ball(space, b.center(), 5.0 * b.radius()))
                        .collect();
                    for (i, b) in nested.high.balls.iter().enumerate() {
                        if !fives.iter().any(|d| b.members().is_subset(d)) {
                            bad.push(format!("nested levels ({low}, {high}): high ball {i} in no low 5-dilate"));
                        }
                    }
                }
                Err(e) => bad.push(format!("nested levels ({low}, {high}): {e}")),
            }
            CzResult::Decomposed(bad)
        }
    }
}

pub fn cz_suite(seed: u64, attempts: usize) -> Outcome {
    let results = run_cases(seed, attempts, cz_case);
    let mut decomposed = 0;
    let mut rejected = 0;
    let mut bad = Vec::new();
    for r in results {
        match r {
            CzResult::Decomposed(b) => {
                decomposed += 1;
                bad.extend(b);
            }
            CzResult::Rejected(b) => {
                rejected += 1;
                bad.extend(b);
            }
        }
    }
    let mut out = outcome(
        8,
        "CZ decomposition",
        decomposed,
        200,
        bad,
        format!("{decomposed} certified decompositions with nested levels; {rejected} precondition failures rejected with the named error"),
    );
    out.instances = decomposed + rejected;
    out
}

// ---------------------------------------------------------------- 9

fn good_lambda_case(rng: &mut ChaCha8Rng) -> Option<Vec<String>> {
    for _ in 0..20 {
        let favorable = rng.gen_bool(0.7);
        let cfg = cz_config(rng, true, favorable, None);
        let space = &cfg.fixture.space;
        let base_median = maximal_median(space, &cfg.f, cfg.params.base.members(), 0.5).unwrap();
        let f = cfg.f.map(|v| v - base_median);
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        let params = if rng.gen_bool(0.5) {
            cfg.params.clone()
        } else {
            cfg.params.clone().with_k(rng.gen_range(1.1..3.0)).unwrap()
        };
        let k = params.k_for(p);
        let s_max = params.t / params.beta_for(p);
        let oracle = cfg.oracle(&f);
        let top = oracle.max_family_median() / k;
        if !(oracle.threshold < top) {
            continue;
        }
        let lambda = rng.gen_range(oracle.threshold..top).max(oracle.threshold).max(1e-12);
        if expected_rejection(&oracle, space.len(), k * lambda).is_some() {
            continue;
        }
        let s = s_max * rng.gen_range(0.01..=1.0);
        return Some(match good_lambda_sides(space, &f, &params, p, s, lambda) {
            Ok(g) if g.pass => Vec::new(),
            Ok(g) => vec![format!(
                "p {p}, K {k}, s {s}, lambda {lambda}: lhs {} > rhs {}",
                g.lhs, g.rhs
            )],
            Err(e) => vec![format!("p {p}, K {k}, lambda {lambda}: {e}")],
        });
    }
    None
}

pub fn good_lambda(seed: u64, attempts: usize) -> Outcome {
    let results = run_cases(seed, attempts, good_lambda_case);
    let evaluated = results.iter().filter(|r| r.is_some()).count();
    let bad: Vec<String> = results.into_iter().flatten().flatten().collect();
    outcome(
        9,
        "good lambda",
        evaluated,
        100,
        bad,
        format!("{evaluated} configurations with s <= t/(2 K^p c_mu^3), 1e-9 relative slack"),
    )
}

// ---------------------------------------------------------------- 10

/// The 64-point log fixture: left half as `B0`, `eta = 1`, `p = 2`, `s = s0`, `r = 1/2`.
pub fn log_fixture_report() -> crate::czd::LocalJnReport {
    let fx = &fixtures()[4];
    let space = &fx.space;
    let f = canonical_function(&FunctionKind::LogBlowup, space, 0).unwrap();
    let base = space.ball(15, 16.0 / 64.0 + 1e-9).unwrap();
    let params = CzParams::new(space, base, 1.0, 0.5, &fx.profile).unwrap();
    let s0 = params.s0;
    local_jn_verify(space, &f, &params, 2.0, s0, 0.5, None).unwrap()
}

fn local_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let cfg = loop {
        let cfg = cz_config(rng, false, false, Some(0.5));
        let hat = cfg.params.hat.members();
        let first = cfg.f.value(hat.first().expect("nonempty"));
        if hat.iter().any(|y| cfg.f.value(y) != first) {
            break cfg;
        }
    };
    let space = &cfg.fixture.space;
    let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
    let s = cfg.params.s0 * rng.gen_range(0.05..=1.0);
    let r = rng.gen_range(s..=0.5);
    match local_jn_verify(space, &cfg.f, &cfg.params, p, s, r, None) {
        Ok(rep) => {
            let mut bad = Vec::new();
            if let Some(e) = rep.entries.iter().find(|e| !e.pass) {
                bad.push(format!("p {p}, s {s}: lhs {} > rhs {} at lambda {}", e.lhs, e.rhs, e.lambda));
            }
            if rep.entries.len() != 50 {
                bad.push(format!("{} grid levels instead of 50", rep.entries.len()));
            }
            if !rep.trivial_bound.pass {
                bad.push(format!(
                    "trivial bound: mu(B0_hat) lambda0^p = {} > 2^p norm^p = {}",
                    rep.trivial_bound.lhs, rep.trivial_bound.rhs
                ));
            }
            bad
        }
        Err(e) => vec![format!("local verification failed: {e}")],
    }
}

pub fn local_jn(seed: u64, count: usize) -> Outcome {
    let fixture = log_fixture_report();
    let mut bad = Vec::new();
    if let Some(e) = fixture.entries.iter().find(|e| !e.pass) {
        bad.push(format!("log fixture: lhs {} > rhs {} at lambda {}", e.lhs, e.rhs, e.lambda));
    }
    if !fixture.trivial_bound.pass {
        bad.push("log fixture: trivial bound fails".into());
    }
    bad.extend(run_cases(seed, count, local_case).into_iter().flatten());
    outcome(
        10,
        "local John-Nirenberg",
        count + 1,
        101,
        bad,
        format!(
            "log fixture holds on {} levels with c = {:.1}, plus {count} random fixtures; trivial bound checked separately",
            fixture.entries.len(),
            fixture.constant_c
        ),
    )
}

// ---------------------------------------------------------------- 11

fn grid32_decomposition() -> (Space, BomanDecomposition) {
    let space = grid_space(1, 32, 1.0, WeightProfile::Uniform).unwrap();
    let whole = space.ball(0, space.full_radius()).unwrap();
    let dec = grid_boman_decomposition(&space, &whole, 1.5).expect("grid32 decomposes");
    (space, dec)
}

/// Five decompositions, each breaking exactly one condition.
pub fn boman_mutations(space: &Space, dec: &BomanDecomposition) -> Vec<(&'static str, BomanDecomposition)> {
    let mut out = Vec::new();

    let mut m = dec.clone();
    let last = m.region.iter().last().expect("nonempty region");
    m.region.remove(last);
    out.push(("dilates cover region", m));

    let mut m = dec.clone();
    m.m -= 1;
    out.push(("bounded overlap", m));

    let mut m = dec.clone();
    let b = (0..m.chains.len()).find(|&b| m.chains[b].len() >= 2).expect("a chain of length two");
    m.chains[b].remove(0);
    out.push(("chains from central ball", m));

    let mut m = dec.clone();
    let key = *m.links.keys().next().expect("a link");
    m.links.insert(key, PointSet::empty(space.len()));
    out.push(("chain link overlap", m));

    let mut m = dec.clone();
    m.rho = 1.0001;
    out.push(("chain balls contain target", m));
    out
}

fn single_ball(space: &Space) -> BomanDecomposition {
    // C1 B and C2 B have the same members, so the region is both dilates
    let b = space.ball(7, 2.6).unwrap();
    BomanDecomposition {
        region: space.dilate(&b, 2.0).unwrap().members().clone(),
        balls: vec![b],
        c1: 2.0,
        c2: 2.1,
        c3: 2.0,
        rho: 2.0,
        m: 1,
        central: 0,
        chains: vec![vec![0]],
        links: BTreeMap::new(),
    }
}

fn equivalence_case(rng: &mut ChaCha8Rng) -> Vec<String> {
    let space = random::space(rng, 10, 10);
    let f = random::nonconstant_function(rng, &space);
    let p: f64 = rng.gen_range(1.2..5.0);
    let q = rng.gen_range(0.3..p.min(3.0));
    let s = rng.gen_range(0.01..=0.5);
    match jn_equivalence_check(&space, &f, &space.all(), p, q, s, 1.0) {
        Ok(r) if r.lower_pass => Vec::new(),
        Ok(r) => vec![format!("(p,q,s) = ({p},{q},{s}): {} > {}", r.lower_lhs, r.integral_norm)],
        Err(e) => vec![format!("equivalence check failed: {e}")],
    }
}

pub fn boman_suite(seed: u64, count: usize) -> Outcome {
    let mut bad = Vec::new();
    let (grid32, dec) = grid32_decomposition();
    let cert = verify_boman(&grid32, &dec);
    if !cert.pass {
        bad.push(format!("grid32 decomposition fails {:?}", cert.failed()));
    }
    for (target, m) in boman_mutations(&grid32, &dec) {
        let failed = verify_boman(&grid32, &m).failed();
        if failed != [target] {
            bad.push(format!("mutation for {target} fails {failed:?}"));
        }
    }

    let grid16 = grid_space(1, 16, 1.0, WeightProfile::Uniform).unwrap();
    let one = single_ball(&grid16);
    let profile = grid16.doubling_profile();
    let star = grid16.dilate(&one.balls[0], one.c1).unwrap();
    let mut single_checks = 0;
    for kind in [
        FunctionKind::LogBlowup,
        FunctionKind::Power { beta: 0.5 },
        FunctionKind::Spike {
            at: 8,
            height: 50.0,
            background: 1.0,
        },
        FunctionKind::RandomPiecewise { pieces: 5 },
    ] {
        let f = canonical_function(&kind, &grid16, 3).unwrap();
        let params = CzParams::new(&grid16, star.clone(), one.eta(), 0.5, &profile).unwrap();
        let s = params.s0;
        let levels: Vec<f64> = (0..50).map(|i| 0.05 * 1.2f64.powi(i)).collect();
        let global = global_jn_verify(&grid16, &f, &one, 2.0, s, 0.5, Some(&levels), None);
        let local = local_jn_verify(&grid16, &f, &params, 2.0, s, 0.5, Some(&levels));
        match (global, local) {
            (Ok(g), Ok(l)) => {
                single_checks += 1;
                if (g.a - l.center).abs() > EXACT * g.a.abs().max(1.0) {
                    bad.push(format!("{kind:?}: centers {} vs {}", g.a, l.center));
                }
                for (ge, le) in g.entries.iter().zip(&l.entries) {
                    if (ge.lhs - le.lhs).abs() > EXACT * ge.lhs.max(1.0) {
                        bad.push(format!("{kind:?} at lambda {}: global {} vs local {}", ge.lambda, ge.lhs, le.lhs));
                    }
                }
            }
            (g, l) => bad.push(format!("{kind:?}: single-ball runs failed ({:?}, {:?})", g.err(), l.err())),
        }
    }

    let lower: Vec<String> = run_cases(seed, count, equivalence_case).into_iter().flatten().collect();
    bad.extend(lower);

    let mut constants = Vec::new();
    let s0 = {
        let profile = grid32.doubling_profile();
        crate::czd::s0_of(profile.c_mu, crate::czd::alpha_of(&profile, dec.eta()))
    };
    for kind in [
        FunctionKind::LogBlowup,
        FunctionKind::Step {
            values: vec![0.0, 1.0, 3.0],
        },
        FunctionKind::Spike {
            at: 5,
            height: 20.0,
            background: 0.0,
        },
    ] {
        let f = canonical_function(&kind, &grid32, 0).unwrap();
        match global_jn_verify(&grid32, &f, &dec, 2.0, s0, 0.5, None, None) {
            Ok(r) if r.c0.is_finite() && r.c_meas.is_finite() => constants.push(format!("C0 {:.3} C_meas {:.3}", r.c0, r.c_meas)),
            Ok(r) => bad.push(format!("{kind:?}: C0 = {}, C_meas = {}", r.c0, r.c_meas)),
            Err(e) => bad.push(format!("{kind:?}: global verification failed: {e}")),
        }
    }

    outcome(
        11,
        "Boman and global suite",
        count,
        100,
        bad,
        format!(
            "5 single-condition mutations detected; {single_checks} single-ball global/local matches; {count} lower-bound instances; grid32 constants {}",
            constants.join(", ")
        ),
    )
}

/// Every library-level criterion at its default size.
pub fn run_all(seed: u64) -> Vec<Outcome> {
    vec![
        median_properties(seed, 1200),
        oscillation_oracle(seed, 600),
        packing_oracle(seed, 300),
        sandwich(seed, 300),
        embedding_chain(seed, 300),
        p_limit(seed, 80),
        covering(seed, 600, 200),
        cz_suite(seed, 1000),
        good_lambda(seed, 160),
        local_jn(seed, 120),
        boman_suite(seed, 120),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_have_no_violations() {
        let seed = 17;
        for o in [
            median_properties(seed, 100),
            oscillation_oracle(seed, 20),
            packing_oracle(seed, 30),
            sandwich(seed, 30),
            embedding_chain(seed, 30),
            p_limit(seed, 10),
            covering(seed, 50, 20),
            cz_suite(seed, 40),
            good_lambda(seed, 10),
            local_jn(seed, 10),
            boman_suite(seed, 10),
        ] {
            assert_eq!(o.violations, 0, "{}", o.line());
        }
    }

    #[test]
    fn outcomes_need_enough_instances() {
        let o = outcome(1, "x", 3, 5, Vec::new(), "s".into());
        assert!(!o.pass);
        assert!(o.detail.contains("only 3"));
        let o = outcome(1, "x", 5, 5, vec!["bad".into()], "s".into());
        assert!(!o.pass && o.violations == 1);
        assert!(o.line().starts_with("criterion  1 FAIL"));
    }

    #[test]
    fn runs_are_reproducible() {
        let a = cz_suite(5, 30);
        let b = cz_suite(5, 30);
        assert_eq!(a.line(), b.line());
    }

    #[test]
    fn mutations_each_break_one_condition() {
        let (space, dec) = grid32_decomposition();
        for (target, m) in boman_mutations(&space, &dec) {
            assert_eq!(verify_boman(&space, &m).failed(), vec![target]);
        }
    }
}
