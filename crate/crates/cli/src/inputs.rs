//! Loading spaces, functions, regions and level grids from the command line.

use std::fs;
use std::path::Path;

use medjn::czd::log_grid;
use medjn::{Ball, BomanDecomposition, PointSet, SampleFunction, Space};

/// An input or usage problem; maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))
}

pub fn load_space(path: &Path) -> Result<Space, InputError> {
    Space::from_json(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

pub fn load_function(space: &Space, path: &Path) -> Result<SampleFunction, InputError> {
    SampleFunction::from_json(space, &read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

pub fn load_decomposition(space: &Space, path: &Path) -> Result<BomanDecomposition, InputError> {
    BomanDecomposition::from_json(space, &read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// `--set all`, `--set id,id,...`, or the ball `--center ID --radius R`.
pub fn region(space: &Space, set: Option<&str>, center: Option<&str>, radius: Option<f64>) -> Result<PointSet, InputError> {
    match (set, center, radius) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            Err(InputError("give either --set or --center/--radius, not both".into()))
        }
        (None, Some(c), Some(r)) => Ok(space.ball(space.index_of(c)?, r)?.members().clone()),
        (None, Some(_), None) | (None, None, Some(_)) => {
            Err(InputError("--center and --radius must be given together".into()))
        }
        (None, None, None) | (Some("all"), None, None) => Ok(space.all()),
        (Some(list), None, None) => {
            let mut out = PointSet::empty(space.len());
            for id in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                out.insert(space.index_of(id)?);
            }
            if out.is_empty() {
                return Err(InputError("--set names no points".into()));
            }
            Ok(out)
        }
    }
}

pub fn ball(space: &Space, center: Option<&str>, radius: Option<f64>) -> Result<Ball, InputError> {
    let (Some(c), Some(r)) = (center, radius) else {
        return Err(InputError("this command needs a base ball: --center ID --radius R".into()));
    };
    Ok(space.ball(space.index_of(c)?, r)?)
}

/// `log:lo:hi:count` or `list:v1,v2,...`.
pub fn lambda_grid(spec: &str) -> Result<Vec<f64>, InputError> {
    let bad = || InputError(format!("bad --lambda-grid `{spec}`; use log:lo:hi:count or list:v1,v2,..."));
    let grid = if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err(bad());
        };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let count: usize = count.parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && count >= 1) {
            return Err(bad());
        }
        log_grid(lo, hi, count)
    } else if let Some(rest) = spec.strip_prefix("list:") {
        rest.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>, _>>()?
    } else {
        return Err(bad());
    };
    if grid.is_empty() || grid.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(lambda_grid("list:1,2.5").unwrap(), vec![1.0, 2.5]);
        let g = lambda_grid("log:1:100:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 10.0).abs() < 1e-12);
        for bad in ["log:0:1:3", "list:", "list:1,-2", "lin:1:2:3", "log:1:2"] {
            assert!(lambda_grid(bad).is_err(), "{bad}");
        }
    }
}
