//! Flat `key = value` run configuration.
//!
//! Physical quantities carry their unit in the key name. Later sources
//! override earlier ones, so a file can be refined by command-line flags.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::SolverKind;
use crate::material::{PlasticityKind, YieldLaw};
use crate::optimizer::RunConfig;
use crate::presets::Preset;
use crate::scalar::{lit, to_f64, Scalar};

/// Every accepted key, in manifest order.
pub const KEYS: &[&str] = &[
    "bvp",
    "plasticity",
    "loops",
    "v0",
    "eta_s",
    "beta_mm2",
    "esize_mm",
    "u_star_mm",
    "max_iters",
    "chi_min",
    "e0_mpa",
    "nu",
    "sigma_y_exp_mpa",
    "h_mpa",
    "h0_mpa",
    "h1_mpa",
    "kappa",
    "newton_tol_mpa",
    "gate",
    "conv_first",
    "conv_next",
    "snapshot_every",
    "solver",
    "linear_tol",
    "out",
];

/// Ordered key/value pairs; a key may appear several times, the last wins.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigSource {
    pub entries: Vec<(String, String)>,
}

impl ConfigSource {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses `key = value` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut src = Self::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got '{line}'", n + 1)))?;
            src.set(k.trim(), v.trim())?;
        }
        Ok(src)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Adds an entry; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<&mut Self> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.entries.push((key, value.into()));
        Ok(self)
    }

    pub fn extend(&mut self, other: &ConfigSource) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Resolves the entries against the preset defaults.
    pub fn resolve<T: Scalar>(&self) -> Result<RunConfig<T>> {
        let bvp: Preset = self.get("bvp").unwrap_or("clamped_beam").parse()?;
        let kind: PlasticityKind = self.get("plasticity").unwrap_or("elastic").parse()?;
        let mut cfg = RunConfig::<T>::preset(bvp, kind);
        let num = |key: &str| -> Result<Option<T>> {
            self.get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .map(lit)
                        .ok_or_else(|| Error::Config(format!("{key}: expected a number, got '{v}'")))
                })
                .transpose()
        };
        let int = |key: &str| -> Result<Option<usize>> {
            self.get(key)
                .map(|v| {
                    v.parse::<usize>()
                        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got '{v}'")))
                })
                .transpose()
        };

        if let Some(v) = int("loops")? {
            cfg.loops = v;
        }
        if let Some(v) = num("v0")? {
            cfg.v0 = v;
        }
        if let Some(v) = num("eta_s")? {
            cfg.eta = v;
        }
        if let Some(v) = num("esize_mm")? {
            cfg.e_size = v;
        }
        cfg.beta = match num("beta_mm2")? {
            Some(v) => v,
            None => lit::<T>(2.0) * cfg.e_size * cfg.e_size,
        };
        if let Some(v) = num("u_star_mm")? {
            cfg.u_star = v;
        }
        if let Some(v) = int("max_iters")? {
            cfg.max_iterations = v;
        }
        if let Some(v) = num("chi_min")? {
            cfg.chi_min = v;
        }
        if let Some(v) = num("e0_mpa")? {
            cfg.material.e0 = v;
        }
        if let Some(v) = num("nu")? {
            cfg.material.nu = v;
        }
        if let Some(v) = num("sigma_y_exp_mpa")? {
            if kind == PlasticityKind::Elastic {
                return Err(Error::Config(
                    "sigma_y_exp_mpa: the elastic model fixes the yield stress".into(),
                ));
            }
            cfg.material.sigma_y_exp = v;
        }
        let (h, h0, h1, kappa) = (num("h_mpa")?, num("h0_mpa")?, num("h1_mpa")?, num("kappa")?);
        match &mut cfg.material.law {
            YieldLaw::LinearHardening { h: slope } => {
                if let Some(v) = h {
                    *slope = v;
                }
                reject_unused(&[("h0_mpa", h0), ("h1_mpa", h1), ("kappa", kappa)], kind)?;
            }
            YieldLaw::ExponentialHardening { h0: a, h1: b, kappa: k } => {
                if let Some(v) = h0 {
                    *a = v;
                }
                if let Some(v) = h1 {
                    *b = v;
                }
                if let Some(v) = kappa {
                    *k = v;
                }
                reject_unused(&[("h_mpa", h)], kind)?;
            }
            YieldLaw::Ideal => {
                reject_unused(&[("h_mpa", h), ("h0_mpa", h0), ("h1_mpa", h1), ("kappa", kappa)], kind)?;
            }
        }
        if let Some(v) = num("newton_tol_mpa")? {
            cfg.newton_tol = v;
        }
        if let Some(v) = num("gate")? {
            cfg.gate = v;
        }
        if let Some(v) = num("conv_first")? {
            cfg.conv_first = v;
        }
        if let Some(v) = num("conv_next")? {
            cfg.conv_next = v;
        }
        if let Some(v) = int("snapshot_every")? {
            cfg.snapshot_every = v;
        }
        if let Some(v) = self.get("solver") {
            cfg.solver = parse_solver(v)?;
        }
        if let Some(v) = num("linear_tol")? {
            cfg.linear_tol = v;
        }
        if let Some(v) = self.get("out") {
            cfg.out = Some(PathBuf::from(v));
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn reject_unused<T>(given: &[(&str, Option<T>)], kind: PlasticityKind) -> Result<()> {
    match given.iter().find(|(_, v)| v.is_some()) {
        Some((key, _)) => Err(Error::Config(format!("{key}: not a parameter of the {kind} law"))),
        None => Ok(()),
    }
}

fn parse_solver(s: &str) -> Result<SolverKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "auto" => Ok(SolverKind::Auto),
        "direct" => Ok(SolverKind::Direct),
        "pcg" => Ok(SolverKind::Pcg),
        other => Err(Error::Config(format!("solver: expected auto|direct|pcg, got '{other}'"))),
    }
}

fn solver_name(s: SolverKind) -> &'static str {
    match s {
        SolverKind::Auto => "auto",
        SolverKind::Direct => "direct",
        SolverKind::Pcg => "pcg",
    }
}

/// Fully resolved key/value form of `cfg`; resolving it gives `cfg` back.
pub fn to_entries<T: Scalar>(cfg: &RunConfig<T>) -> Vec<(String, String)> {
    let f = |v: T| format!("{}", to_f64(v));
    let mut out: Vec<(&str, String)> = vec![
        ("bvp", cfg.bvp.to_string()),
        ("plasticity", cfg.plasticity.to_string()),
        ("loops", cfg.loops.to_string()),
        ("v0", f(cfg.v0)),
        ("eta_s", f(cfg.eta)),
        ("beta_mm2", f(cfg.beta)),
        ("esize_mm", f(cfg.e_size)),
        ("u_star_mm", f(cfg.u_star)),
        ("max_iters", cfg.max_iterations.to_string()),
        ("chi_min", f(cfg.chi_min)),
        ("e0_mpa", f(cfg.material.e0)),
        ("nu", f(cfg.material.nu)),
    ];
    if cfg.plasticity != PlasticityKind::Elastic {
        out.push(("sigma_y_exp_mpa", f(cfg.material.sigma_y_exp)));
    }
    match cfg.material.law {
        YieldLaw::Ideal => {}
        YieldLaw::LinearHardening { h } => out.push(("h_mpa", f(h))),
        YieldLaw::ExponentialHardening { h0, h1, kappa } => {
            out.push(("h0_mpa", f(h0)));
            out.push(("h1_mpa", f(h1)));
            out.push(("kappa", f(kappa)));
        }
    }
    out.extend([
        ("newton_tol_mpa", f(cfg.newton_tol)),
        ("gate", f(cfg.gate)),
        ("conv_first", f(cfg.conv_first)),
        ("conv_next", f(cfg.conv_next)),
        ("snapshot_every", cfg.snapshot_every.to_string()),
        ("solver", solver_name(cfg.solver).to_string()),
        ("linear_tol", f(cfg.linear_tol)),
    ]);
    if let Some(p) = &cfg.out {
        out.push(("out", p.display().to_string()));
    }
    out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Text form of `cfg` accepted by [`ConfigSource::parse`].
pub fn to_text<T: Scalar>(cfg: &RunConfig<T>) -> String {
    to_entries(cfg)
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::ELASTIC_SENTINEL_YIELD;

    fn resolve(pairs: &[(&str, &str)]) -> Result<RunConfig<f64>> {
        let mut s = ConfigSource::new();
        for (k, v) in pairs {
            s.set(k, *v)?;
        }
        s.resolve()
    }

    #[test]
    fn clamped_beam_ideal_three_loops() {
        let c = resolve(&[("bvp", "clamped_beam"), ("plasticity", "ideal"), ("loops", "3")]).unwrap();
        assert_eq!(c.loops, 3);
        assert_eq!(c.e_size, 0.02);
        assert_eq!(c.eta, 15.0);
        assert_eq!(c.v0, 0.5);
        assert!((c.beta - 8e-4).abs() < 1e-18);
        assert_eq!(c.u_star, 0.05);
        assert_eq!(c.material.sigma_y_exp, 300.0);
    }

    #[test]
    fn mbb_defaults() {
        let c = resolve(&[("bvp", "mbb")]).unwrap();
        assert_eq!(c.u_star, 0.02);
        assert_eq!(c.v0, 0.5);
    }

    #[test]
    fn elastic_uses_sentinel_yield() {
        let c = resolve(&[("plasticity", "elastic")]).unwrap();
        assert_eq!(c.material.sigma_y_exp, ELASTIC_SENTINEL_YIELD);
        assert!(resolve(&[("plasticity", "elastic"), ("sigma_y_exp_mpa", "200")]).is_err());
    }

    #[test]
    fn beta_follows_element_size_unless_given() {
        let c = resolve(&[("esize_mm", "0.04")]).unwrap();
        assert!((c.beta - 2.0 * 0.04 * 0.04).abs() < 1e-18);
        let c = resolve(&[("esize_mm", "0.04"), ("beta_mm2", "0.01")]).unwrap();
        assert_eq!(c.beta, 0.01);
    }

    #[test]
    fn unknown_and_invalid_keys_name_the_key() {
        let e = ConfigSource::parse("eta = 3").unwrap_err().to_string();
        assert!(e.contains("'eta'"), "{e}");
        let e = resolve(&[("loops", "7")]).unwrap_err().to_string();
        assert!(e.contains("loops"), "{e}");
        let e = resolve(&[("v0", "abc")]).unwrap_err().to_string();
        assert!(e.contains("v0"), "{e}");
        let e = resolve(&[("plasticity", "ideal"), ("kappa", "3")]).unwrap_err().to_string();
        assert!(e.contains("kappa"), "{e}");
    }

    #[test]
    fn file_then_overrides() {
        let mut s = ConfigSource::parse("# run\nbvp = mbb\nloops = 2 # inline\n\n").unwrap();
        s.set("loops", "4").unwrap();
        let c: RunConfig<f64> = s.resolve().unwrap();
        assert_eq!(c.bvp, Preset::Mbb);
        assert_eq!(c.loops, 4);
    }

    #[test]
    fn text_round_trip() {
        for kind in PlasticityKind::ALL {
            let mut c = RunConfig::<f64>::preset(Preset::Mbb, kind);
            c.loops = 2;
            c.eta = 7.5;
            c.out = Some(PathBuf::from("runs/a"));
            let back: RunConfig<f64> = ConfigSource::parse(&to_text(&c)).unwrap().resolve().unwrap();
            assert_eq!(back, c);
        }
    }
}
