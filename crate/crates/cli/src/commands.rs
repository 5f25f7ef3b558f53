//! One function per subcommand, each producing a JSON report.

use std::fmt::Display;

use medjn::czd::{local_constant, s0_of, CzError};
use medjn::generators::GenError;
use medjn::{
    alpha_of, bmo_median_norm, canonical_function, cantor_space, cz_decompose, cz_nested, five_cover,
    global_jn_verify, good_lambda_sides, grid_boman_decomposition, grid_space, integral_oscillation,
    jn_equivalence_check, jn_integral_norm, jn_median_norm, local_jn_verify, maximal_median, median_oscillation,
    verify_boman, Ball, CzParams, FunctionKind, PackingOptions, SampleFunction, Space, WeightProfile,
};
use serde_json::{json, Value};

use crate::inputs::{self, InputError};
use crate::{fixtures, render, Command, Data, Generate, Mode, Packing, Weights};

pub struct Report {
    pub json: Value,
    /// Replaces the generic text rendering for single-number results.
    pub text: Option<String>,
    /// Set when a checked inequality fails.
    pub violation: Option<String>,
}

impl Report {
    fn new(json: Value) -> Self {
        Self {
            json,
            text: None,
            violation: None,
        }
    }

    fn number(key: &str, value: f64) -> Self {
        Self {
            json: json!({ key: value }),
            text: Some(format!("{}\n", render::format_f64(value))),
            violation: None,
        }
    }

    fn failing_if(mut self, failed: bool, message: impl FnOnce() -> String) -> Self {
        if failed {
            self.violation = Some(message());
        }
        self
    }
}

pub enum Failure {
    Input(String),
    Violation(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.0)
    }
}

fn input(e: impl Display) -> Failure {
    Failure::Input(e.to_string())
}

/// Certificate failures are violations; every other CZ error is an input problem.
fn cz_failure(e: CzError) -> Failure {
    match e {
        CzError::CertificateViolated { which, detail } => {
            Failure::Violation(format!("decomposition certificate fails: {which} ({detail})"))
        }
        other => input(other),
    }
}

fn load(data: &Data) -> Result<(Space, SampleFunction), Failure> {
    let space = inputs::load_space(&data.space)?;
    let f = inputs::load_function(&space, &data.function)?;
    Ok((space, f))
}

fn packing_options(p: &Packing) -> PackingOptions {
    match (p.mode, p.force_exact) {
        (Mode::Greedy, _) => PackingOptions::greedy(),
        (Mode::Exact, true) => PackingOptions::forced_exact(),
        (Mode::Exact, false) => PackingOptions::exact(),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Value {
    serde_json::to_value(value).expect("report serializes")
}

fn cz_params(space: &Space, base: &crate::Base, t: f64) -> Result<CzParams, Failure> {
    let ball = inputs::ball(space, base.center.as_deref(), base.radius)?;
    CzParams::new(space, ball, base.eta, t, &space.doubling_profile()).map_err(cz_failure)
}

fn grid_arg(spec: &Option<String>) -> Result<Option<Vec<f64>>, Failure> {
    Ok(match spec {
        Some(s) => Some(inputs::lambda_grid(s)?),
        None => None,
    })
}

fn weights(w: Weights, seed: u64) -> WeightProfile {
    match w {
        Weights::Uniform => WeightProfile::Uniform,
        Weights::Normalized => WeightProfile::Normalized,
        Weights::Random => WeightProfile::Random { seed },
    }
}

fn ball_list(space: &Space, text: &str) -> Result<Vec<Ball>, Failure> {
    let value: Value = serde_json::from_str(text).map_err(input)?;
    let items = value
        .as_array()
        .ok_or_else(|| Failure::Input("ball list must be a JSON array".into()))?;
    items
        .iter()
        .map(|b| {
            let center = b["center"]
                .as_str()
                .ok_or_else(|| Failure::Input("ball needs a string \"center\"".into()))?;
            let radius = b["radius"]
                .as_f64()
                .ok_or_else(|| Failure::Input("ball needs a numeric \"radius\"".into()))?;
            space.ball(space.index_of(center).map_err(input)?, radius).map_err(input)
        })
        .collect()
}

pub fn run(cmd: &Command) -> Result<Report, Failure> {
    match cmd {
        Command::Doubling { space } => {
            let space = inputs::load_space(space)?;
            let profile = space.doubling_profile();
            let certificate = profile.certificate.as_ref().map(|c| {
                json!({
                    "x": space.id(c.x), "R": c.big_r, "y": space.id(c.y), "r": c.r,
                    "ratio": c.ratio, "bound": c.bound, "checked": c.checked, "holds": c.holds,
                })
            });
            let failed = certificate.as_ref().is_some_and(|c| c["holds"] == false);
            Ok(Report::new(json!({
                "c_mu": profile.c_mu,
                "dimension": profile.dimension,
                "certificate": certificate,
            }))
            .failing_if(failed, || "measure ratio bound fails on its worst quadruple".into()))
        }
        Command::Median { data, region, s } => {
            let (space, f) = load(data)?;
            let set = inputs::region(&space, region.set.as_deref(), region.center.as_deref(), region.radius)?;
            Ok(Report::number("median", maximal_median(&space, &f, &set, *s).map_err(input)?))
        }
        Command::Oscillation { data, region, s, q } => {
            let (space, f) = load(data)?;
            let set = inputs::region(&space, region.set.as_deref(), region.center.as_deref(), region.radius)?;
            let json = match q {
                None => {
                    let o = median_oscillation(&space, &f, &set, *s).map_err(input)?;
                    json!({ "kind": "median", "s": s, "value": o.value, "c": o.c })
                }
                Some(q) => {
                    let o = integral_oscillation(&space, &f, &set, *q).map_err(input)?;
                    json!({ "kind": "integral", "q": q, "value": o.value, "c": o.c })
                }
            };
            Ok(Report::new(json))
        }
        Command::Bmo { data, region, s } => {
            let (space, f) = load(data)?;
            let set = inputs::region(&space, region.set.as_deref(), region.center.as_deref(), region.radius)?;
            Ok(Report::number("norm", bmo_median_norm(&space, &f, &set, *s).map_err(input)?))
        }
        Command::JnMedian {
            data,
            region,
            p,
            s,
            t,
            packing,
        } => {
            let (space, f) = load(data)?;
            let set = inputs::region(&space, region.set.as_deref(), region.center.as_deref(), region.radius)?;
            let opts = packing_options(packing);
            let norm = match t {
                None => jn_median_norm(&space, &f, &set, *p, *s, opts),
                Some(t) => medjn::norms::jn_median_centered(&space, &f, &set, *p, *s, *t, opts),
            }
            .map_err(input)?;
            Ok(Report::new(norm.to_json(&space)))
        }
        Command::JnIntegral {
            data,
            region,
            p,
            q,
            packing,
        } => {
            let (space, f) = load(data)?;
            let set = inputs::region(&space, region.set.as_deref(), region.center.as_deref(), region.radius)?;
            let norm = jn_integral_norm(&space, &f, &set, *p, *q, packing_options(packing)).map_err(input)?;
            Ok(Report::new(norm.to_json(&space)))
        }
        Command::FiveCover { space, region, balls } => {
            let space = inputs::load_space(space)?;
            let family = match balls {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
                    ball_list(&space, &text)?
                }
                None => {
                    let set = inputs::region(&space, region.set.as_deref(), region.center.as_deref(), region.radius)?;
                    space.canonical_balls(&set).map_err(input)?
                }
            };
            let cover = five_cover(&space, &family).map_err(|e| match e {
                medjn::CoverError::CoverageFailed { .. } => Failure::Violation(format!("5-covering fails: {e}")),
                other => input(other),
            })?;
            Ok(Report::new(json!({
                "balls": family.iter().map(|b| b.to_json(&space)).collect::<Vec<_>>(),
                "selected": cover.selected,
                "covered_by": cover.covered_by,
            })))
        }
        Command::Cz {
            data,
            base,
            t,
            lambda,
            lambda_high,
        } => {
            let (space, f) = load(data)?;
            let params = cz_params(&space, base, *t)?;
            let json = match lambda_high {
                None => cz_decompose(&space, &f, &params, *lambda).map_err(cz_failure)?.to_json(&space),
                Some(high) => {
                    let nested = cz_nested(&space, &f, &params, *lambda, *high).map_err(cz_failure)?;
                    json!({
                        "low": nested.low.to_json(&space),
                        "high": nested.high.to_json(&space),
                        "containment": nested.containment,
                    })
                }
            };
            Ok(Report::new(json))
        }
        Command::GoodLambda {
            data,
            base,
            t,
            p,
            s,
            k,
            lambda,
            r,
        } => {
            let (space, f) = load(data)?;
            let mut params = cz_params(&space, base, *t)?;
            if let Some(k) = k {
                params = params.with_k(*k).map_err(cz_failure)?;
            }
            let center = maximal_median(&space, &f, params.base.members(), *r).map_err(input)?;
            let centered = f.map(|v| v - center);
            let g = good_lambda_sides(&space, &centered, &params, *p, *s, *lambda).map_err(cz_failure)?;
            let mut json = to_json(&g);
            json["center"] = json!(center);
            Ok(Report::new(json).failing_if(!g.pass, || {
                format!("good-lambda inequality fails at lambda = {}: {} > {}", g.lambda, g.lhs, g.rhs)
            }))
        }
        Command::VerifyLocalJn {
            data,
            base,
            p,
            s,
            r,
            lambda_grid,
        } => {
            let (space, f) = load(data)?;
            let params = cz_params(&space, base, 0.5)?;
            let grid = grid_arg(lambda_grid)?;
            let s = s.unwrap_or(params.s0);
            let rep = local_jn_verify(&space, &f, &params, *p, s, *r, grid.as_deref()).map_err(cz_failure)?;
            let bad_entry = rep.entries.iter().find(|e| !e.pass).map(|e| e.lambda);
            let trivial = rep.trivial_bound.pass;
            Ok(Report::new(rep.to_json()).failing_if(!rep.pass, || match bad_entry {
                Some(l) => format!("local John-Nirenberg inequality fails at lambda = {l}"),
                None if !trivial => "trivial bound below lambda0 fails".into(),
                None => "local John-Nirenberg check fails".into(),
            }))
        }
        Command::VerifyGlobalJn {
            data,
            decomposition,
            p,
            s,
            r,
            lambda_grid,
            budget,
        } => {
            let (space, f) = load(data)?;
            let dec = inputs::load_decomposition(&space, decomposition)?;
            let grid = grid_arg(lambda_grid)?;
            let s = match s {
                Some(s) => *s,
                None => {
                    let profile = space.doubling_profile();
                    s0_of(profile.c_mu, alpha_of(&profile, dec.eta()))
                }
            };
            let rep =
                global_jn_verify(&space, &f, &dec, *p, s, *r, grid.as_deref(), *budget).map_err(|e| match e {
                    medjn::BomanError::UnverifiedDecomposition(which) => {
                        Failure::Violation(format!("Boman decomposition fails conditions {which}"))
                    }
                    other => input(other),
                })?;
            let (c_meas, b) = (rep.c_meas, rep.budget);
            Ok(Report::new(to_json(&rep)).failing_if(!rep.pass, || {
                format!("global John-Nirenberg inequality fails: empirical constant {c_meas} above budget {b}")
            }))
        }
        Command::VerifyBoman { space, decomposition } => {
            let space = inputs::load_space(space)?;
            let dec = inputs::load_decomposition(&space, decomposition)?;
            let cert = verify_boman(&space, &dec);
            let failed = cert.failed();
            Ok(Report::new(to_json(&cert)).failing_if(!cert.pass, || {
                format!("Boman decomposition fails conditions {}", failed.join(", "))
            }))
        }
        Command::Equivalence {
            data,
            region,
            p,
            q,
            s,
            budget,
        } => {
            let (space, f) = load(data)?;
            let set = inputs::region(&space, region.set.as_deref(), region.center.as_deref(), region.radius)?;
            let budget = budget.unwrap_or_else(|| local_constant(*p, space.doubling_profile().c_mu));
            let rep = jn_equivalence_check(&space, &f, &set, *p, *q, *s, budget).map_err(input)?;
            let (lhs, rhs) = (rep.lower_lhs, rep.integral_norm);
            Ok(Report::new(to_json(&rep)).failing_if(!rep.lower_pass, || {
                format!("norm equivalence lower bound fails: {lhs} > {rhs}")
            }))
        }
        Command::Generate { what } => generate(what),
        Command::VerifyAll { seed } => Ok(fixtures::verify_all(*seed)),
    }
}

fn generate(what: &Generate) -> Result<Report, Failure> {
    let gen = |e: GenError| input(e);
    match what {
        Generate::Grid {
            dim,
            n,
            spacing,
            weights: w,
            seed,
        } => Ok(Report::new(grid_space(*dim, *n, *spacing, weights(*w, *seed)).map_err(gen)?.to_json())),
        Generate::Cantor {
            levels,
            ratio,
            weights: w,
            seed,
        } => Ok(Report::new(cantor_space(*levels, *ratio, weights(*w, *seed)).map_err(gen)?.to_json())),
        Generate::Function { space, kind, seed } => {
            let space = inputs::load_space(space)?;
            let kind: FunctionKind = if kind.trim_start().starts_with('{') {
                serde_json::from_str(kind).map_err(input)?
            } else {
                FunctionKind::from_name(kind).map_err(gen)?
            };
            let f = canonical_function(&kind, &space, *seed).map_err(gen)?;
            Ok(Report::new(f.to_json(&space)))
        }
        Generate::Boman {
            space,
            region,
            granularity,
        } => {
            let space = inputs::load_space(space)?;
            let target = match (&region.center, region.radius) {
                (None, None) => space.ball(0, space.full_radius()).map_err(input)?,
                (c, r) => inputs::ball(&space, c.as_deref(), r)?,
            };
            let dec = grid_boman_decomposition(&space, &target, *granularity).map_err(input)?;
            Ok(Report::new(dec.to_json(&space)))
        }
    }
}
