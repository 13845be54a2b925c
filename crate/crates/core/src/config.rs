//! Flat key-value configs shared by the CLI and the experiment harness.
//!
//! Format: one `key = value` per line, `#` starts a comment. Unknown keys
//! are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::{Grid, SpectralGrid};
use crate::nonlinearity::Nonlinearity;
use crate::potential::Potential;
use crate::vortex::{StopRule, VortexProblem};

/// Raw parsed key-value map with consumption tracking.
pub struct KvConfig {
    map: BTreeMap<String, String>,
    consumed: std::collections::BTreeSet<String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if map.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        Ok(KvConfig {
            map,
            consumed: Default::default(),
        })
    }

    /// Overlay `other` on top of self (overrides win, new keys allowed).
    pub fn merged_with(mut self, other: &KvConfig) -> Self {
        for (k, v) in &other.map {
            self.map.insert(k.clone(), v.clone());
        }
        self
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.consumed.insert(key.to_string());
        self.map.get(key).cloned()
    }

    pub fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take_str(key)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("key `{key}`: `{s}` is not a number")))
            })
            .transpose()
    }

    pub fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        self.take_str(key)
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| Error::Config(format!("key `{key}`: `{s}` is not an integer")))
            })
            .transpose()
    }

    pub fn req_f64(&mut self, key: &str) -> Result<f64> {
        self.take_f64(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn req_usize(&mut self, key: &str) -> Result<usize> {
        self.take_usize(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    /// Error out on any unconsumed keys.
    pub fn finish(self) -> Result<()> {
        let unknown: Vec<&String> = self
            .map
            .keys()
            .filter(|k| !self.consumed.contains(*k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "unknown keys: {}",
                unknown
                    .iter()
                    .map(|s| s.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
    }

    /// Canonical text form (sorted keys), used for snapshots and hashing.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.map {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct VortexConfig {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
    pub potential: Potential,
    pub lambda: f64,
    pub p: f64,
    pub w: f64,
    pub m: u32,
    pub epsilon: f64,
    pub stop_rule: StopRule,
    pub max_outer_iters: usize,
    pub prior_path: Option<PathBuf>,
}

impl VortexConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KvConfig::parse(text)?;
        let cfg = Self::extract(&mut kv)?;
        kv.finish()?;
        Ok(cfg)
    }

    pub(crate) fn extract(kv: &mut KvConfig) -> Result<Self> {
        let domain = kv
            .take_str("domain")
            .ok_or_else(|| Error::Config("missing key `domain`".into()))?;
        let parts: Vec<f64> = domain
            .split_whitespace()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("domain: `{s}` is not a number")))
            })
            .collect::<Result<_>>()?;
        if parts.len() != 4 {
            return Err(Error::Config(
                "domain needs four numbers: xmin xmax ymin ymax".into(),
            ));
        }
        let potential = match kv
            .take_str("potential")
            .ok_or_else(|| Error::Config("missing key `potential`".into()))?
            .as_str()
        {
            "zero" => Potential::Zero,
            "harmonic" => Potential::Harmonic {
                coeff: kv.take_f64("potential_coeff")?.unwrap_or(0.5),
            },
            "gaussian_trap" => Potential::GaussianTrap {
                amplitude: kv.take_f64("potential_amplitude")?.unwrap_or(1.0),
                rate: kv
                    .take_f64("potential_rate")?
                    .unwrap_or(std::f64::consts::SQRT_2),
            },
            other => {
                if let Some(path) = other.strip_prefix("file:") {
                    let f = crate::io::load_field(std::path::Path::new(path))?;
                    Potential::from_samples(f.values().iter().map(|v| v.re).collect())?
                } else {
                    return Err(Error::Config(format!("unknown potential kind `{other}`")));
                }
            }
        };
        let stop_rule = match kv.take_str("stop_rule").as_deref() {
            None | Some("residue") => StopRule::Residue,
            Some("cauchy") => StopRule::Cauchy,
            Some(other) => {
                return Err(Error::Config(format!("unknown stop_rule `{other}`")));
            }
        };
        let m64 = kv.req_usize("m")?;
        if m64 < 1 {
            return Err(Error::Config("spin index m must be >= 1".into()));
        }
        Ok(VortexConfig {
            xmin: parts[0],
            xmax: parts[1],
            ymin: parts[2],
            ymax: parts[3],
            nx: kv.req_usize("nx")?,
            ny: kv.req_usize("ny")?,
            potential,
            lambda: kv.req_f64("lambda")?,
            p: kv.take_f64("p")?.unwrap_or(1.0),
            w: kv.req_f64("w")?,
            m: m64 as u32,
            epsilon: kv.req_f64("epsilon")?,
            stop_rule,
            max_outer_iters: kv.take_usize("max_outer_iters")?.unwrap_or(2000),
            prior_path: kv.take_str("prior_path").map(PathBuf::from),
        })
    }

    pub fn build_grid(&self) -> Result<Grid> {
        SpectralGrid::shared(self.xmin, self.xmax, self.ymin, self.ymax, self.nx, self.ny)
    }

    pub fn build_problem(&self) -> Result<VortexProblem> {
        let grid = self.build_grid()?;
        let mut problem = VortexProblem::new(
            grid,
            self.potential.clone(),
            Nonlinearity::new(self.lambda, self.p),
            self.w,
            self.m,
            self.epsilon,
            self.stop_rule,
        );
        problem.max_outer_iters = self.max_outer_iters;
        Ok(problem)
    }
}

#[derive(Debug, Clone)]
pub struct ModulationConfig {
    pub vortex: VortexConfig,
    pub gamma0: f64,
    pub tau: f64,
    pub t_end: f64,
    pub chi_amplitude: f64,
    pub chi_width: f64,
    pub dump_stride: usize,
    pub refresh_tol: f64,
    pub det_tol: f64,
    /// Reference-solver step; defaults to tau/32.
    pub tau_ref: f64,
}

impl ModulationConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KvConfig::parse(text)?;
        let vortex = VortexConfig::extract(&mut kv)?;
        let tau = kv.req_f64("tau")?;
        let cfg = ModulationConfig {
            vortex,
            gamma0: kv.take_f64("gamma0")?.unwrap_or(0.0),
            tau,
            t_end: kv.req_f64("t_end")?,
            chi_amplitude: kv.take_f64("chi_amplitude")?.unwrap_or(0.0),
            chi_width: kv.take_f64("chi_width")?.unwrap_or(1.0),
            dump_stride: kv.take_usize("dump_stride")?.unwrap_or(0),
            refresh_tol: kv.take_f64("refresh_tol")?.unwrap_or(1e-8),
            det_tol: kv.take_f64("det_tol")?.unwrap_or(1e-12),
            tau_ref: kv.take_f64("tau_ref")?.unwrap_or(tau / 32.0),
        };
        kv.finish()?;
        Ok(cfg)
    }

    /// chi(x) = amplitude * exp(-width |x|^2)
    pub fn chi_field(&self, grid: &Grid) -> crate::field::ComplexField {
        let amp = self.chi_amplitude;
        let width = self.chi_width;
        crate::field::ComplexField::from_fn(grid, |x, y| {
            num_complex::Complex64::new(amp * (-(width * (x * x + y * y))).exp(), 0.0)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EG1: &str = "
# example 1 vortex
domain = -8 8 -8 8
nx = 128
ny = 128
potential = harmonic
lambda = -0.5
p = 1
w = 1.1
m = 1
epsilon = 0.005
stop_rule = residue
";

    #[test]
    fn parses_vortex_config() {
        let cfg = VortexConfig::parse(EG1).unwrap();
        assert_eq!(cfg.nx, 128);
        assert_eq!(cfg.m, 1);
        assert_eq!(cfg.stop_rule, StopRule::Residue);
        assert_eq!(cfg.potential, Potential::Harmonic { coeff: 0.5 });
        let problem = cfg.build_problem().unwrap();
        assert_eq!(problem.grid.nx(), 128);
        assert_eq!(problem.w, 1.1);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = format!("{EG1}\nbogus_key = 1\n");
        let err = VortexConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn modulation_defaults() {
        let text = format!(
            "{EG1}\ntau = 0.025\nt_end = 0.8\ngamma0 = 1\nchi_amplitude = 0.25\nchi_width = 1\n"
        );
        let cfg = ModulationConfig::parse(&text).unwrap();
        assert_eq!(cfg.tau_ref, 0.025 / 32.0);
        assert_eq!(cfg.refresh_tol, 1e-8);
        assert_eq!(cfg.dump_stride, 0);
        let grid = cfg.vortex.build_grid().unwrap();
        let chi = cfg.chi_field(&grid);
        let o = grid.origin_index().unwrap();
        assert!((chi.values()[o].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn canonical_text_is_sorted_and_stable() {
        let kv = KvConfig::parse("b = 2\na = 1\n").unwrap();
        assert_eq!(kv.canonical_text(), "a = 1\nb = 2\n");
        let over = KvConfig::parse("a = 9\nc = 3\n").unwrap();
        let merged = kv.merged_with(&over);
        assert_eq!(merged.canonical_text(), "a = 9\nb = 2\nc = 3\n");
    }
}
