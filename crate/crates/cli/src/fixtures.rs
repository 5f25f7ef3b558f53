//! `verify-all`: the property suites plus checks on the shipped fixtures.

use medjn::czd::local_constant;
use medjn::verify::{self, Outcome};
use medjn::{
    cz_decompose, global_jn_verify, good_lambda_sides, jn_equivalence_check, jn_integral_norm, jn_median_norm,
    local_jn_verify, maximal_median, verify_boman, BomanDecomposition, CzParams, PackingOptions, SampleFunction,
    Space,
};
use serde_json::{json, Value};

use crate::commands::Report;

const TWO_POINT: &str = include_str!("../fixtures/two_point.json");
const F01: &str = include_str!("../fixtures/f01.json");
const GRID64: &str = include_str!("../fixtures/grid64.json");
const LOG64: &str = include_str!("../fixtures/log64.json");
const GRID32: &str = include_str!("../fixtures/grid32.json");
const GRID32_LOG: &str = include_str!("../fixtures/grid32_log.json");
const GRID32_BOMAN: &str = include_str!("../fixtures/grid32_boman.json");
const CANTOR64: &str = include_str!("../fixtures/cantor64.json");
const CANTOR64_SPIKE: &str = include_str!("../fixtures/cantor64_spike.json");

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

type Checked = Result<(bool, String), String>;

fn load(space: &str, function: &str) -> Result<(Space, SampleFunction), String> {
    let space = Space::from_json(space).map_err(|e| e.to_string())?;
    let f = SampleFunction::from_json(&space, function).map_err(|e| e.to_string())?;
    Ok((space, f))
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

fn two_point_median() -> Checked {
    let (space, f) = load(TWO_POINT, F01)?;
    let m = maximal_median(&space, &f, &space.all(), 0.5).map_err(|e| e.to_string())?;
    Ok((m == 1.0, format!("maximal 1/2-median {m}")))
}

fn two_point_jn() -> Checked {
    let (space, f) = load(TWO_POINT, F01)?;
    let median = jn_median_norm(&space, &f, &space.all(), 2.0, 0.5, PackingOptions::exact()).map_err(|e| e.to_string())?;
    let integral =
        jn_integral_norm(&space, &f, &space.all(), 2.0, 1.0, PackingOptions::exact()).map_err(|e| e.to_string())?;
    let expected = std::f64::consts::FRAC_1_SQRT_2;
    Ok((
        close(median.norm, expected, 1e-12) && close(integral.norm, expected, 1e-12),
        format!("median norm {}, integral norm {}", median.norm, integral.norm),
    ))
}

fn two_point_equivalence() -> Checked {
    let (space, f) = load(TWO_POINT, F01)?;
    let budget = local_constant(2.0, space.doubling_profile().c_mu);
    let rep = jn_equivalence_check(&space, &f, &space.all(), 2.0, 1.0, 0.5, budget).map_err(|e| e.to_string())?;
    Ok((
        rep.lower_pass && rep.upper_pass,
        format!("lower side {} against integral norm {}", rep.lower_lhs, rep.integral_norm),
    ))
}

fn cantor_doubling() -> Checked {
    let space = Space::from_json(CANTOR64).map_err(|e| e.to_string())?;
    let profile = space.doubling_profile();
    Ok((profile.c_mu == 2.0, format!("c_mu {}", profile.c_mu)))
}

fn spike_params(space: &Space) -> Result<CzParams, String> {
    let base = space.ball(0, 7500.0).map_err(|e| e.to_string())?;
    CzParams::new(space, base, 4.0, 0.5, &space.doubling_profile()).map_err(|e| e.to_string())
}

fn cantor_cz() -> Checked {
    let (space, f) = load(CANTOR64, CANTOR64_SPIKE)?;
    let params = spike_params(&space)?;
    let dec = cz_decompose(&space, &f, &params, 50.0).map_err(|e| e.to_string())?;
    Ok((
        dec.certificates.all_hold(),
        format!("{} balls at lambda 50", dec.balls.len()),
    ))
}

fn cantor_good_lambda() -> Checked {
    let (space, f) = load(CANTOR64, CANTOR64_SPIKE)?;
    let params = spike_params(&space)?;
    let center = maximal_median(&space, &f, params.base.members(), 0.5).map_err(|e| e.to_string())?;
    let g = good_lambda_sides(&space, &f.map(|v| v - center), &params, 2.0, 0.001, 50.0).map_err(|e| e.to_string())?;
    Ok((g.pass, format!("lhs {} rhs {}", g.lhs, g.rhs)))
}

fn log_local_jn() -> Checked {
    let (space, f) = load(GRID64, LOG64)?;
    let base = space.ball(15, 0.250000001).map_err(|e| e.to_string())?;
    let params = CzParams::new(&space, base, 1.0, 0.5, &space.doubling_profile()).map_err(|e| e.to_string())?;
    let rep = local_jn_verify(&space, &f, &params, 2.0, params.s0, 0.5, None).map_err(|e| e.to_string())?;
    Ok((rep.pass, format!("{} levels, constant {}", rep.entries.len(), rep.constant_c)))
}

fn grid_boman() -> Checked {
    let space = Space::from_json(GRID32).map_err(|e| e.to_string())?;
    let dec = BomanDecomposition::from_json(&space, GRID32_BOMAN).map_err(|e| e.to_string())?;
    let cert = verify_boman(&space, &dec);
    Ok((cert.pass, format!("failed conditions {:?}", cert.failed())))
}

fn grid_global_jn() -> Checked {
    let (space, f) = load(GRID32, GRID32_LOG)?;
    let dec = BomanDecomposition::from_json(&space, GRID32_BOMAN).map_err(|e| e.to_string())?;
    let profile = space.doubling_profile();
    let s0 = medjn::czd::s0_of(profile.c_mu, medjn::alpha_of(&profile, dec.eta()));
    let rep = global_jn_verify(&space, &f, &dec, 2.0, s0, 0.5, None, None).map_err(|e| e.to_string())?;
    Ok((
        rep.pass && rep.c0.is_finite() && rep.c_meas.is_finite(),
        format!("C0 {} C_meas {}", rep.c0, rep.c_meas),
    ))
}

fn fixture_checks() -> Vec<Check> {
    let checks: [(&'static str, fn() -> Checked); 9] = [
        ("two-point median", two_point_median),
        ("two-point John-Nirenberg norms", two_point_jn),
        ("two-point norm equivalence", two_point_equivalence),
        ("Cantor doubling constant", cantor_doubling),
        ("Cantor spike decomposition", cantor_cz),
        ("Cantor spike good-lambda", cantor_good_lambda),
        ("log blow-up local John-Nirenberg", log_local_jn),
        ("grid Boman decomposition", grid_boman),
        ("grid global John-Nirenberg", grid_global_jn),
    ];
    checks
        .into_iter()
        .map(|(name, check)| match check() {
            Ok((pass, detail)) => Check { name, pass, detail },
            Err(e) => Check {
                name,
                pass: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

pub fn verify_all(seed: u64) -> Report {
    let criteria: Vec<Outcome> = verify::run_all(seed);
    let fixtures = fixture_checks();
    let pass = criteria.iter().all(|o| o.pass) && fixtures.iter().all(|c| c.pass);

    let mut text = String::new();
    for o in &criteria {
        text.push_str(&o.line());
        text.push('\n');
    }
    for c in &fixtures {
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        text.push_str(&format!("fixture {verdict} {}: {}\n", c.name, c.detail));
    }
    text.push_str(&format!("overall {}\n", if pass { "PASS" } else { "FAIL" }));

    let failing: Vec<String> = criteria
        .iter()
        .filter(|o| !o.pass)
        .map(|o| format!("criterion {}", o.id))
        .chain(fixtures.iter().filter(|c| !c.pass).map(|c| c.name.to_string()))
        .collect();
    let json = json!({
        "seed": seed,
        "criteria": criteria,
        "fixtures": fixtures
            .iter()
            .map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail }))
            .collect::<Vec<Value>>(),
        "pass": pass,
    });
    Report {
        json,
        text: Some(text),
        violation: (!pass).then(|| format!("failing checks: {}", failing.join(", "))),
    }
}
