//! Named initial data.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use gsqg_core::inequality::EnsembleSpec;
use gsqg_core::spectral::{GridSpec, RealField};
use serde::{Deserialize, Serialize};

use crate::snapshot::read_snapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InitialData {
    /// `sin(x1)`
    SinX1,
    /// `sin(x1) sin(x2)`
    SinX1SinX2,
    /// One sample of the random ensemble on the band `[k_min, k_max]`.
    Random { seed: u64, gamma: f64, k_min: f64, k_max: f64 },
    Snapshot(PathBuf),
}

impl InitialData {
    pub fn field(&self, grid: GridSpec) -> Result<RealField, String> {
        match self {
            Self::SinX1 => RealField::from_fn(grid, |x, _| x.sin()).map_err(|e| e.to_string()),
            Self::SinX1SinX2 => {
                RealField::from_fn(grid, |x, y| x.sin() * y.sin()).map_err(|e| e.to_string())
            }
            Self::Random { seed, gamma, k_min, k_max } => {
                EnsembleSpec::new(grid, 1, *seed, *gamma, *k_min, *k_max)
                    .and_then(|e| e.sample(0))
                    .map_err(|e| e.to_string())
            }
            Self::Snapshot(path) => {
                let (header, field) = read_snapshot(path).map_err(|e| e.to_string())?;
                if header.n as usize != grid.n() {
                    return Err(format!(
                        "snapshot {} has n = {}, config has n = {}",
                        path.display(),
                        header.n,
                        grid.n()
                    ));
                }
                Ok(field)
            }
        }
    }
}

impl FromStr for InitialData {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s {
            "sinx1" => return Ok(Self::SinX1),
            "sinx1_sinx2" => return Ok(Self::SinX1SinX2),
            _ => {}
        }
        let (name, args) = s
            .strip_suffix(')')
            .and_then(|r| r.split_once('('))
            .ok_or_else(|| format!("unknown initial data {s:?}"))?;
        match name.trim() {
            "snapshot" => {
                let path = args.trim();
                if path.is_empty() {
                    return Err("snapshot(...) needs a path".into());
                }
                Ok(Self::Snapshot(PathBuf::from(path)))
            }
            "random" => {
                let parts: Vec<&str> = args.split(',').map(str::trim).collect();
                let num = |i: usize| -> Result<f64, String> {
                    parts[i]
                        .parse::<f64>()
                        .map_err(|_| format!("random(...): cannot parse {:?}", parts[i]))
                };
                let seed = parts[0]
                    .parse::<u64>()
                    .map_err(|_| format!("random(...): seed {:?} is not an unsigned integer", parts[0]))?;
                match parts.len() {
                    3 => Ok(Self::Random { seed, gamma: num(1)?, k_min: 1.0, k_max: num(2)? }),
                    4 => Ok(Self::Random { seed, gamma: num(1)?, k_min: num(2)?, k_max: num(3)? }),
                    _ => Err("random(...) takes (seed, gamma, k_max) or (seed, gamma, k_min, k_max)".into()),
                }
            }
            other => Err(format!("unknown initial data {other:?}")),
        }
    }
}

impl fmt::Display for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SinX1 => f.write_str("sinx1"),
            Self::SinX1SinX2 => f.write_str("sinx1_sinx2"),
            Self::Random { seed, gamma, k_min, k_max } => {
                write!(f, "random({seed}, {gamma}, {k_min}, {k_max})")
            }
            Self::Snapshot(p) => write!(f, "snapshot({})", p.display()),
        }
    }
}

impl TryFrom<String> for InitialData {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<InitialData> for String {
    fn from(d: InitialData) -> String {
        d.to_string()
    }
}
