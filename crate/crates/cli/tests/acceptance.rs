//! One pass/fail line per acceptance criterion; exits nonzero if any fails.

use std::process::Command;

use medjn::verify::{self, Outcome, DEFAULT_SEED};
use serde_json::Value;

fn verify_all(threads: usize) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_medjn"))
        .args(["--output", "json", "--threads", &threads.to_string(), "verify-all"])
        .output()
        .map_err(|e| format!("cannot run the binary: {e}"))?;
    if out.status.code() != Some(0) {
        return Err(format!(
            "exit {:?} with {} threads: {}",
            out.status.code(),
            threads,
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn field<'a>(v: &'a Value, key: &str, ok: fn(&Value) -> bool, at: &str) -> Result<&'a Value, String> {
    match v.get(key) {
        Some(x) if ok(x) => Ok(x),
        Some(_) => Err(format!("{at}.{key} has the wrong type")),
        None => Err(format!("{at}.{key} missing")),
    }
}

/// Structural schema of the verify-all report.
fn check_schema(v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("report is not an object")?;
    for key in obj.keys() {
        if !["seed", "criteria", "fixtures", "pass"].contains(&key.as_str()) {
            return Err(format!("unexpected key {key}"));
        }
    }
    field(v, "seed", Value::is_u64, "report")?;
    field(v, "pass", Value::is_boolean, "report")?;
    let criteria = field(v, "criteria", Value::is_array, "report")?.as_array().unwrap();
    let ids: Vec<u64> = criteria.iter().filter_map(|c| c.get("id").and_then(Value::as_u64)).collect();
    if ids != (1..=11).collect::<Vec<_>>() {
        return Err(format!("criteria ids {ids:?}"));
    }
    for (i, c) in criteria.iter().enumerate() {
        let at = format!("criteria[{i}]");
        field(c, "name", Value::is_string, &at)?;
        field(c, "instances", Value::is_u64, &at)?;
        field(c, "violations", Value::is_u64, &at)?;
        field(c, "pass", Value::is_boolean, &at)?;
        field(c, "detail", Value::is_string, &at)?;
    }
    let fixtures = field(v, "fixtures", Value::is_array, "report")?.as_array().unwrap();
    if fixtures.is_empty() {
        return Err("no fixture checks".into());
    }
    for (i, c) in fixtures.iter().enumerate() {
        let at = format!("fixtures[{i}]");
        field(c, "name", Value::is_string, &at)?;
        field(c, "pass", Value::is_boolean, &at)?;
        field(c, "detail", Value::is_string, &at)?;
    }
    Ok(())
}

fn cli_round_trip() -> Result<String, String> {
    let one = verify_all(1)?;
    let again = verify_all(1)?;
    let many = verify_all(4)?;
    let v: Value = serde_json::from_str(&one).map_err(|e| format!("invalid json: {e}"))?;
    check_schema(&v)?;
    if v["pass"] != true {
        return Err("report says it failed".into());
    }
    if one != again {
        return Err("two runs differ".into());
    }
    if one != many {
        return Err("1 and 4 worker threads differ".into());
    }
    Ok(format!("exit 0, schema valid, {} bytes identical across two runs and 1 vs 4 threads", one.len()))
}

fn main() {
    let mut outcomes: Vec<Outcome> = verify::run_all(DEFAULT_SEED);
    let (pass, detail) = match cli_round_trip() {
        Ok(d) => (true, d),
        Err(e) => (false, e),
    };
    outcomes.push(Outcome {
        id: 12,
        name: "CLI round trip",
        instances: 3,
        violations: usize::from(!pass),
        pass,
        detail,
    });
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("{} of {} criteria pass", outcomes.len() - failed, outcomes.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
