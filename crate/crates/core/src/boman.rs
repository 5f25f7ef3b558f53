//! Boman chain decompositions, the chaining inequality, the global
//! John–Nirenberg verifier and the JN_{p,q} / JN_{p,0,s} equivalence check.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::czd::{alpha_of, default_lambda_grid, local_constant, s0_of, CzError};
use crate::median::{maximal_median_with, MedianError, SampleFunction};
use crate::norms::{jn_integral_norm, jn_median_norm, weak_lp_norm, NormError, PackingOptions};
use crate::pointset::PointSet;
use crate::space::{Ball, Space, SpaceError};

#[derive(Debug, Error)]
pub enum BomanError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Median(#[from] MedianError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Cz(#[from] CzError),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("decomposition fails verification: {0}")]
    UnverifiedDecomposition(String),
    #[error("s = {s} exceeds s0 = {s0}")]
    InvalidS { s: f64, s0: f64 },
    #[error("no lattice parameters verify; best near miss: {near_miss}")]
    ConstructionFailed { near_miss: String },
    #[error("both norms vanish; the ratio is undefined (trivially equivalent)")]
    DegenerateNorm,
}

/// A region with disjoint balls, dilation constants, chains through a
/// central ball and a witness set for every chain link.
#[derive(Clone, Debug)]
pub struct BomanDecomposition {
    pub region: PointSet,
    pub balls: Vec<Ball>,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rho: f64,
    pub m: usize,
    /// Index of the central ball in `balls`.
    pub central: usize,
    /// `chains[b]` runs from `central` to `b`.
    pub chains: Vec<Vec<usize>>,
    /// Witness set for each chain link, keyed by the unordered ball pair.
    pub links: BTreeMap<(usize, usize), PointSet>,
}

fn edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

#[derive(Serialize, Deserialize)]
struct BallSpec {
    center: String,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct DecompositionFile {
    region: Vec<String>,
    #[serde(rename = "C1")]
    c1: f64,
    #[serde(rename = "C2")]
    c2: f64,
    #[serde(rename = "C3")]
    c3: f64,
    rho: f64,
    #[serde(rename = "M")]
    m: usize,
    central: BallSpec,
    balls: Vec<BallSpec>,
    chains: BTreeMap<String, Vec<usize>>,
    links: BTreeMap<String, Vec<String>>,
}

impl BomanDecomposition {
    /// `eta` with `1 + eta = C2 / C1`.
    pub fn eta(&self) -> f64 {
        self.c2 / self.c1 - 1.0
    }

    pub fn to_json(&self, space: &Space) -> serde_json::Value {
        let ball = |b: &Ball| BallSpec {
            center: space.id(b.center()).to_string(),
            radius: b.radius(),
        };
        let ids = |set: &PointSet| set.iter().map(|x| space.id(x).to_string()).collect::<Vec<_>>();
        let file = DecompositionFile {
            region: ids(&self.region),
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            rho: self.rho,
            m: self.m,
            central: ball(&self.balls[self.central]),
            balls: self.balls.iter().map(ball).collect(),
            chains: self.chains.iter().enumerate().map(|(b, c)| (b.to_string(), c.clone())).collect(),
            links: self.links.iter().map(|(&(a, b), d)| (format!("{a}-{b}"), ids(d))).collect(),
        };
        serde_json::to_value(file).expect("decomposition serializes")
    }

    pub fn from_json(space: &Space, text: &str) -> Result<Self, BomanError> {
        let bad = |m: String| BomanError::InvalidDecomposition(m);
        let file: DecompositionFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let to_set = |ids: &[String]| -> Result<PointSet, BomanError> {
            let mut set = PointSet::empty(space.len());
            for id in ids {
                set.insert(space.index_of(id)?);
            }
            Ok(set)
        };
        let to_ball = |b: &BallSpec| -> Result<Ball, BomanError> { Ok(space.ball(space.index_of(&b.center)?, b.radius)?) };
        let balls: Vec<Ball> = file.balls.iter().map(to_ball).collect::<Result<_, _>>()?;
        let central_ball = to_ball(&file.central)?;
        let central = balls
            .iter()
            .position(|b| b.center() == central_ball.center() && b.radius() == central_ball.radius())
            .ok_or_else(|| bad("central ball is not one of the balls".into()))?;
        let mut chains = vec![Vec::new(); balls.len()];
        for (key, chain) in &file.chains {
            let b: usize = key.parse().map_err(|_| bad(format!("chain key `{key}` is not a ball index")))?;
            if b >= balls.len() {
                return Err(bad(format!("chain key {b} out of range")));
            }
            chains[b] = chain.clone();
        }
        let mut links = BTreeMap::new();
        for (key, ids) in &file.links {
            let (a, b) = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .ok_or_else(|| bad(format!("link key `{key}` is not of the form a-b")))?;
            links.insert(edge(a, b), to_set(ids)?);
        }
        Ok(Self {
            region: to_set(&file.region)?,
            balls,
            c1: file.c1,
            c2: file.c2,
            c3: file.c3,
            rho: file.rho,
            m: file.m,
            central,
            chains,
            links,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub pass: bool,
    /// Counterexample description when the condition fails.
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BomanCertificate {
    pub parameters: Condition,
    pub disjoint: Condition,
    /// Covering, overlap, chain, link and containment conditions in order.
    pub conditions: Vec<Condition>,
    pub pass: bool,
}

impl BomanCertificate {
    pub fn failed(&self) -> Vec<&'static str> {
        std::iter::once(&self.parameters)
            .chain(std::iter::once(&self.disjoint))
            .chain(&self.conditions)
            .filter(|c| !c.pass)
            .map(|c| c.name)
            .collect()
    }
}

fn condition(name: &'static str, witness: Option<String>) -> Condition {
    Condition {
        name,
        pass: witness.is_none(),
        witness,
    }
}

fn dilates(space: &Space, balls: &[Ball], c: f64) -> Result<Vec<PointSet>, SpaceError> {
    balls.iter().map(|b| space.dilate(b, c).map(|d| d.members().clone())).collect()
}

/// Checks every defining condition exactly; failures are reported, not thrown.
pub fn verify_boman(space: &Space, dec: &BomanDecomposition) -> BomanCertificate {
    let id = |x: usize| space.id(x).to_string();
    let nb = dec.balls.len();

    let mut param_issue = None;
    if nb == 0 {
        param_issue = Some("no balls".to_string());
    } else if !(dec.c1 > 1.0 && dec.c2 > dec.c1 && dec.c2.is_finite()) {
        param_issue = Some(format!("need C2 > C1 > 1, got C1 = {}, C2 = {}", dec.c1, dec.c2));
    } else if !(dec.c3 > 1.0) {
        param_issue = Some(format!("need C3 > 1, got {}", dec.c3));
    } else if !(dec.rho > 1.0 && dec.rho.is_finite()) {
        param_issue = Some(format!("need rho > 1, got {}", dec.rho));
    } else if dec.m == 0 {
        param_issue = Some("need M >= 1".to_string());
    } else if dec.central >= nb {
        param_issue = Some(format!("central index {} out of range", dec.central));
    } else if dec.chains.len() != nb {
        param_issue = Some(format!("{} chains for {} balls", dec.chains.len(), nb));
    } else if dec.region.universe() != space.len() {
        param_issue = Some("region belongs to another space".to_string());
    }
    let parameters = condition("parameters", param_issue);
    if !parameters.pass {
        let skipped = |name| Condition {
            name,
            pass: false,
            witness: Some("not checked: invalid parameters".into()),
        };
        return BomanCertificate {
            parameters,
            disjoint: skipped("disjoint balls"),
            conditions: ["dilates cover region", "bounded overlap", "chains from central ball", "chain link overlap", "chain balls contain target"].into_iter().map(skipped).collect(),
            pass: false,
        };
    }

    let mut overlap = None;
    'outer: for a in 0..nb {
        for b in a + 1..nb {
            if let Some(x) = dec.balls[a].members().intersection(dec.balls[b].members()).first() {
                overlap = Some(format!("balls {a} and {b} share point {}", id(x)));
                break 'outer;
            }
        }
    }
    let disjoint = condition("disjoint balls", overlap);

    let (c1b, c2b) = match (dilates(space, &dec.balls, dec.c1), dilates(space, &dec.balls, dec.c2)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            let cert = condition("parameters", Some(e.to_string()));
            return BomanCertificate {
                parameters: cert.clone(),
                disjoint,
                conditions: vec![cert; 5],
                pass: false,
            };
        }
    };

    // both dilate unions equal the region
    let union = |sets: &[PointSet]| {
        let mut u = PointSet::empty(space.len());
        for s in sets {
            u.union_with(s);
        }
        u
    };
    let (u1, u2) = (union(&c1b), union(&c2b));
    let cond_i = if let Some(x) = dec.region.difference(&u1).first() {
        Some(format!("region point {} not covered by any C1 B", id(x)))
    } else if let Some(x) = u1.difference(&dec.region).first() {
        Some(format!("C1 dilates reach {} outside the region", id(x)))
    } else {
        u2.difference(&dec.region)
            .first()
            .map(|x| format!("C2 dilates reach {} outside the region", id(x)))
    };

    // bounded overlap of C2 dilates
    let mut cond_ii = None;
    for b in 0..nb {
        let count = (0..nb).filter(|&v| c2b[v].intersects(&c2b[b])).count();
        if count > dec.m {
            cond_ii = Some(format!("C2 B_{b} meets {count} dilates C2 V, more than M = {}", dec.m));
            break;
        }
    }

    // chains from the central ball to each ball
    let mut cond_iii = None;
    for (b, chain) in dec.chains.iter().enumerate() {
        if chain.first() != Some(&dec.central) || chain.last() != Some(&b) {
            cond_iii = Some(format!("chain for ball {b} does not run from ball {} to ball {b}", dec.central));
            break;
        }
        if let Some(&bad) = chain.iter().find(|&&v| v >= nb) {
            cond_iii = Some(format!("chain for ball {b} names unknown ball {bad}"));
            break;
        }
    }

    // link witnesses
    let mut cond_iv = None;
    'chains: for (b, chain) in dec.chains.iter().enumerate() {
        for w in chain.windows(2) {
            let (prev, cur) = (w[0], w[1]);
            if prev >= nb || cur >= nb {
                continue;
            }
            let Some(d) = dec.links.get(&edge(prev, cur)) else {
                cond_iv = Some(format!("chain for ball {b}: no witness set for link {prev}-{cur}"));
                break 'chains;
            };
            let shared = c1b[prev].intersection(&c1b[cur]);
            if !d.is_subset(&shared) {
                cond_iv = Some(format!("chain for ball {b}: witness for link {prev}-{cur} leaves C1 B_i cap C1 B_(i-1)"));
                break 'chains;
            }
            let need = dec.c3 * (dec.balls[prev].measure(space) + dec.balls[cur].measure(space));
            let have = space.measure(d);
            if have < need {
                cond_iv = Some(format!(
                    "chain for ball {b}: link {prev}-{cur} has mu(D) = {have} < C3 (mu(B_i) + mu(B_(i-1))) = {need}"
                ));
                break 'chains;
            }
        }
    }

    // every chain member's rho dilate contains the target ball
    let mut cond_v = None;
    'v: for (b, chain) in dec.chains.iter().enumerate() {
        for &v in chain.iter().filter(|&&v| v < nb) {
            let rho_v = space.ball_unchecked(dec.balls[v].center(), dec.balls[v].radius() * dec.rho);
            if let Some(x) = dec.balls[b].members().difference(rho_v.members()).first() {
                cond_v = Some(format!("ball {b} point {} lies outside rho B_{v}", id(x)));
                break 'v;
            }
        }
    }

    let conditions = vec![
        condition("dilates cover region", cond_i),
        condition("bounded overlap", cond_ii),
        condition("chains from central ball", cond_iii),
        condition("chain link overlap", cond_iv),
        condition("chain balls contain target", cond_v),
    ];
    let pass = disjoint.pass && conditions.iter().all(|c| c.pass);
    BomanCertificate {
        parameters,
        disjoint,
        conditions,
        pass,
    }
}

const C1_LATTICE: [f64; 10] = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0];
const ETA_LATTICE: [f64; 3] = [0.25, 0.5, 1.0];
const C3_LATTICE: [f64; 4] = [2.0, 1.5, 1.1, 1.01];
const RHO_LATTICE: [f64; 11] = [1.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0];

/// Builds a decomposition of `target` from balls of radius `granularity`
/// and searches a fixed parameter lattice for one that verifies.
///
/// Balls are picked greedily by point index among those inside the target
/// and disjoint from earlier picks; the central ball is the one whose center
/// is nearest the target's. Chains are breadth-first paths along links whose
/// shared C1 dilates satisfy the measure condition.
pub fn grid_boman_decomposition(space: &Space, target: &Ball, granularity: f64) -> Result<BomanDecomposition, BomanError> {
    let region = target.members().clone();
    if region.is_empty() {
        return Err(BomanError::InvalidDecomposition("target ball is empty".into()));
    }
    if !(granularity > 0.0 && granularity.is_finite()) {
        return Err(BomanError::InvalidDecomposition(format!(
            "granularity must be positive, got {granularity}"
        )));
    }
    if region.len() == 1 {
        return Ok(single_point(space, region));
    }

    let mut balls: Vec<Ball> = Vec::new();
    let mut used = PointSet::empty(space.len());
    for x in region.iter() {
        let b = space.ball(x, granularity)?;
        if b.members().is_subset(&region) && !b.members().intersects(&used) {
            used.union_with(b.members());
            balls.push(b);
        }
    }
    if balls.is_empty() {
        return Err(BomanError::ConstructionFailed {
            near_miss: "no ball of that granularity fits in the target".into(),
        });
    }
    let central = (0..balls.len())
        .min_by(|&a, &b| {
            let da = space.distance(balls[a].center(), target.center());
            let db = space.distance(balls[b].center(), target.center());
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .unwrap();

    let mut best: Option<(usize, String)> = None;
    for c1 in C1_LATTICE {
        let c1b = dilates(space, &balls, c1)?;
        for eta in ETA_LATTICE {
            let c2 = c1 * (1.0 + eta);
            let c2b = dilates(space, &balls, c2)?;
            let m = (0..balls.len())
                .map(|b| (0..balls.len()).filter(|&v| c2b[v].intersects(&c2b[b])).count())
                .max()
                .unwrap();
            for c3 in C3_LATTICE {
                let (chains, links) = chain_search(space, &balls, &c1b, central, c3);
                let rho = RHO_LATTICE
                    .into_iter()
                    .find(|&rho| chains_fit(space, &balls, &chains, rho))
                    .unwrap_or(*RHO_LATTICE.last().unwrap());
                let dec = BomanDecomposition {
                    region: region.clone(),
                    balls: balls.clone(),
                    c1,
                    c2,
                    c3,
                    rho,
                    m,
                    central,
                    chains,
                    links,
                };
                let cert = verify_boman(space, &dec);
                if cert.pass {
                    return Ok(dec);
                }
                let failed = cert.failed();
                if best.as_ref().is_none_or(|(k, _)| failed.len() < *k) {
                    best = Some((
                        failed.len(),
                        format!("C1 = {c1}, C2 = {c2}, C3 = {c3}, rho = {rho}, M = {m} fails {}", failed.join(", ")),
                    ));
                }
            }
        }
    }
    Err(BomanError::ConstructionFailed {
        near_miss: best.map(|(_, s)| s).unwrap_or_default(),
    })
}

fn single_point(space: &Space, region: PointSet) -> BomanDecomposition {
    let x = region.first().unwrap();
    let (c1, c2) = (2.0, 3.0);
    let nearest = space.shell_distances(x).get(1).copied().unwrap_or(1.0);
    let ball = space.ball_unchecked(x, nearest / (2.0 * c2));
    BomanDecomposition {
        region,
        balls: vec![ball],
        c1,
        c2,
        c3: 2.0,
        rho: 2.0,
        m: 1,
        central: 0,
        chains: vec![vec![0]],
        links: BTreeMap::new(),
    }
}

type Links = BTreeMap<(usize, usize), PointSet>;

/// Breadth-first chains from `central`; a link needs
/// `mu(C1 B_a cap C1 B_b) >= C3 (mu(B_a) + mu(B_b))`.
fn chain_search(space: &Space, balls: &[Ball], c1b: &[PointSet], central: usize, c3: f64) -> (Vec<Vec<usize>>, Links) {
    let nb = balls.len();
    let measures: Vec<f64> = balls.iter().map(|b| b.measure(space)).collect();
    let mut links = Links::new();
    let mut adjacent = vec![Vec::new(); nb];
    for a in 0..nb {
        for b in a + 1..nb {
            let shared = c1b[a].intersection(&c1b[b]);
            if space.measure(&shared) >= c3 * (measures[a] + measures[b]) {
                adjacent[a].push(b);
                adjacent[b].push(a);
                links.insert((a, b), shared);
            }
        }
    }
    let mut parent = vec![usize::MAX; nb];
    parent[central] = central;
    let mut queue = VecDeque::from([central]);
    while let Some(a) = queue.pop_front() {
        for &b in &adjacent[a] {
            if parent[b] == usize::MAX {
                parent[b] = a;
                queue.push_back(b);
            }
        }
    }
    let chains = (0..nb)
        .map(|b| {
            if parent[b] == usize::MAX {
                // unreachable: an invalid chain the verifier will name
                return vec![b];
            }
            let mut chain = vec![b];
            let mut cur = b;
            while cur != central {
                cur = parent[cur];
                chain.push(cur);
            }
            chain.reverse();
            chain
        })
        .collect();
    let used: Links = links
        .into_iter()
        .filter(|&((a, b), _)| parent[b] == a || parent[a] == b)
        .collect();
    (chains, used)
}

fn chains_fit(space: &Space, balls: &[Ball], chains: &[Vec<usize>], rho: f64) -> bool {
    chains.iter().enumerate().all(|(b, chain)| {
        chain.iter().all(|&v| {
            let dil = space.ball_unchecked(balls[v].center(), balls[v].radius() * rho);
            balls[b].members().is_subset(dil.members())
        })
    })
}

fn require_verified(space: &Space, dec: &BomanDecomposition) -> Result<(), BomanError> {
    let cert = verify_boman(space, dec);
    if cert.pass {
        Ok(())
    } else {
        Err(BomanError::UnverifiedDecomposition(cert.failed().join(", ")))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainRatio {
    pub lhs: f64,
    pub rhs_sum: f64,
    /// `lhs / rhs_sum`, infinite when only the right side vanishes.
    pub c0: f64,
}

/// Both sides of the chaining inequality and their ratio.
pub fn chain_ratio(
    space: &Space,
    f: &SampleFunction,
    dec: &BomanDecomposition,
    p: f64,
    s: f64,
) -> Result<ChainRatio, BomanError> {
    require_verified(space, dec)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(MedianError::InvalidS(s).into());
    }
    let c1b = dilates(space, &dec.balls, dec.c1)?;
    let medians: Vec<f64> = c1b
        .iter()
        .map(|set| maximal_median_with(space, set, s, |y| f.value(y)))
        .collect();
    let star = medians[dec.central];
    let lhs: f64 = c1b
        .iter()
        .zip(&medians)
        .map(|(set, m)| (m - star).abs().powf(p) * space.measure(set))
        .sum();
    let rhs_sum = c1b
        .iter()
        .zip(&medians)
        .map(|(set, &m)| weak_lp_norm(space, &f.deviation(m), set, p).map(|w| w.powf(p)))
        .sum::<Result<f64, _>>()?;
    let c0 = if rhs_sum > 0.0 {
        lhs / rhs_sum
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(ChainRatio { lhs, rhs_sum, c0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalEntry {
    pub lambda: f64,
    pub lhs: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalJnReport {
    pub a: f64,
    pub norm: f64,
    pub eta: f64,
    pub s0: f64,
    pub c0: f64,
    pub m: usize,
    pub budget: f64,
    pub c_meas: f64,
    pub entries: Vec<GlobalEntry>,
    pub pass: bool,
}

/// Level sets of `|f - a|` on the region against `budget ||f||^p / lambda^p`,
/// with `a = m^r_f(C1 B_*)`.
#[allow(clippy::too_many_arguments)]
pub fn global_jn_verify(
    space: &Space,
    f: &SampleFunction,
    dec: &BomanDecomposition,
    p: f64,
    s: f64,
    r_center: f64,
    lambda_grid: Option<&[f64]>,
    budget: Option<f64>,
) -> Result<GlobalJnReport, BomanError> {
    require_verified(space, dec)?;
    let profile = space.doubling_profile();
    let eta = dec.eta();
    let s0 = s0_of(profile.c_mu, alpha_of(&profile, eta));
    if !(s > 0.0 && s <= s0) {
        return Err(BomanError::InvalidS { s, s0 });
    }
    if !(r_center >= s && r_center <= 0.5) {
        return Err(CzError::InvalidCenterLevel { r: r_center, s }.into());
    }
    let star = space.dilate(&dec.balls[dec.central], dec.c1)?;
    let a = maximal_median_with(space, star.members(), r_center, |y| f.value(y));
    let g = f.deviation(a);
    let norm = jn_median_norm(space, f, &dec.region, p, s, PackingOptions::forced_exact())?.norm;
    let c0 = chain_ratio(space, f, dec, p, s)?.c0;
    let budget = budget.unwrap_or_else(|| 2f64.powf(p) * local_constant(p, profile.c_mu) * (c0 + 1.0) * dec.m as f64);

    let g_max = dec.region.iter().map(|y| g.value(y)).fold(0.0, f64::max);
    let grid = match lambda_grid {
        Some(levels) => levels.to_vec(),
        None => default_lambda_grid(0.0, g_max),
    };
    let entries: Vec<GlobalEntry> = grid
        .par_iter()
        .map(|&lambda| GlobalEntry {
            lambda,
            lhs: dec.region.iter().filter(|&y| g.value(y) > lambda).map(|y| space.weight(y)).sum(),
            bound: budget * (norm / lambda).powf(p),
        })
        .collect();
    let c_meas = entries
        .iter()
        .map(|e| {
            if e.lhs == 0.0 {
                0.0
            } else if norm > 0.0 {
                e.lhs * (e.lambda / norm).powf(p)
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    Ok(GlobalJnReport {
        a,
        norm,
        eta,
        s0,
        c0,
        m: dec.m,
        budget,
        c_meas,
        entries,
        pass: c_meas <= budget,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub median_norm: f64,
    pub integral_norm: f64,
    /// `s^(1/q) ||f||_{JN_{p,0,s}}`.
    pub lower_lhs: f64,
    pub lower_pass: bool,
    /// `||f||_{JN_{p,q}} / ||f||_{JN_{p,0,s}}`.
    pub ratio: f64,
    /// `(budget p / (p - q))^(1/q)`.
    pub upper_bound: f64,
    pub upper_pass: bool,
}

/// The hard lower bound `s^(1/q) ||f||_{JN_{p,0,s}} <= ||f||_{JN_{p,q}}` and
/// the upper ratio against a budget. Both norms use exact packing.
pub fn jn_equivalence_check(
    space: &Space,
    f: &SampleFunction,
    region: &PointSet,
    p: f64,
    q: f64,
    s: f64,
    budget: f64,
) -> Result<EquivalenceReport, BomanError> {
    let opts = PackingOptions::forced_exact();
    let median_norm = jn_median_norm(space, f, region, p, s, opts)?.norm;
    let integral_norm = jn_integral_norm(space, f, region, p, q, opts)?.norm;
    if median_norm == 0.0 && integral_norm == 0.0 {
        return Err(BomanError::DegenerateNorm);
    }
    let lower_lhs = s.powf(1.0 / q) * median_norm;
    let ratio = if median_norm > 0.0 {
        integral_norm / median_norm
    } else {
        f64::INFINITY
    };
    let upper_bound = (budget * p / (p - q)).powf(1.0 / q);
    Ok(EquivalenceReport {
        median_norm,
        integral_norm,
        lower_lhs,
        lower_pass: lower_lhs <= integral_norm * (1.0 + 1e-9),
        ratio,
        upper_bound,
        upper_pass: ratio <= upper_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{grid_space, WeightProfile};

    fn grid(n: usize) -> Space {
        grid_space(1, n, 1.0, WeightProfile::Uniform).unwrap()
    }

    fn whole(space: &Space) -> Ball {
        space.ball(0, space.full_radius()).unwrap()
    }

    #[test]
    fn one_ball_decomposition_verifies() {
        let s = grid(5);
        let b = s.ball(2, 1.5).unwrap();
        let region = s.dilate(&b, 2.0).unwrap().members().clone();
        // C1 = 2 and C2 = 2.2 give the same member set {0..4}
        let dec = BomanDecomposition {
            region,
            balls: vec![b],
            c1: 2.0,
            c2: 2.2,
            c3: 2.0,
            rho: 2.0,
            m: 1,
            central: 0,
            chains: vec![vec![0]],
            links: BTreeMap::new(),
        };
        let cert = verify_boman(&s, &dec);
        assert!(cert.pass, "{:?}", cert.failed());
    }

    #[test]
    fn grid32_whole_space() {
        let s = grid(32);
        let dec = grid_boman_decomposition(&s, &whole(&s), 1.5).unwrap();
        assert!(verify_boman(&s, &dec).pass);
        assert!(dec.balls.len() > 1);
        let round = BomanDecomposition::from_json(&s, &dec.to_json(&s).to_string()).unwrap();
        assert!(verify_boman(&s, &round).pass);
        assert_eq!(round.chains, dec.chains);
    }

    #[test]
    fn single_point_target() {
        let s = grid(4);
        let target = s.ball(1, 0.5).unwrap();
        let dec = grid_boman_decomposition(&s, &target, 1.0).unwrap();
        assert_eq!(dec.balls.len(), 1);
        assert!(verify_boman(&s, &dec).pass);
    }

    #[test]
    fn huge_gap_fails() {
        let s = Space::new(
            vec!["a".into(), "b".into()],
            vec![1.0, 1.0],
            crate::space::MetricInput::Euclidean(vec![vec![0.0], vec![1000.0]]),
        )
        .unwrap();
        for g in [1.0, 600.0] {
            let err = grid_boman_decomposition(&s, &whole(&s), g).unwrap_err();
            assert!(matches!(err, BomanError::ConstructionFailed { .. }), "{err}");
        }
    }

    #[test]
    fn weak_norm_of_constant_matches_chain_term() {
        let s = grid(6);
        let set = PointSet::from_indices(6, [1, 2, 4]);
        let c = SampleFunction::constant(&s, -2.5);
        let p = 3.0;
        let w = weak_lp_norm(&s, &c, &set, p).unwrap();
        assert!((w - 2.5 * 3f64.powf(1.0 / p)).abs() < 1e-14);
    }

    #[test]
    fn chain_ratio_trivial_cases() {
        let s = grid(32);
        let dec = grid_boman_decomposition(&s, &whole(&s), 1.5).unwrap();
        let k = SampleFunction::constant(&s, 1.0);
        let r = chain_ratio(&s, &k, &dec, 2.0, 0.25).unwrap();
        assert_eq!((r.lhs, r.rhs_sum, r.c0), (0.0, 0.0, 0.0));

        let one = grid(4);
        let single = grid_boman_decomposition(&one, &one.ball(0, 0.5).unwrap(), 1.0).unwrap();
        let f = SampleFunction::new(&one, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(chain_ratio(&one, &f, &single, 2.0, 0.25).unwrap().c0, 0.0);
    }

    #[test]
    fn equivalence_two_point() {
        let s = grid(2);
        let f = SampleFunction::new(&s, vec![0.0, 1.0]).unwrap();
        let rep = jn_equivalence_check(&s, &f, &s.all(), 2.0, 1.0, 0.5, 1.0).unwrap();
        assert!((rep.median_norm - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((rep.lower_lhs - 0.5 * 0.5f64.sqrt()).abs() < 1e-15);
        assert!(rep.lower_pass);
        assert!((rep.ratio - 1.0).abs() < 1e-15);
        let k = SampleFunction::constant(&s, 3.0);
        assert!(matches!(
            jn_equivalence_check(&s, &k, &s.all(), 2.0, 1.0, 0.5, 1.0),
            Err(BomanError::DegenerateNorm)
        ));
    }
}
