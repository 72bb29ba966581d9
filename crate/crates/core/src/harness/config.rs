//! Sweep configuration: grids, output target and flags.
//!
//! A JSON file may supply any subset of the fields of [`ConfigFile`];
//! command-line values are layered on top with [`ConfigFile::overlay`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansions::{BVariant, CaseTag, ExpansionOptions, QVariant};
use crate::norming::{Family, SampleSize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::Config(format!("unknown output format {s:?}"))),
        }
    }
}

/// Evenly spaced `x` values `min, min + step, ...` up to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XGrid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl XGrid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.max - self.min) / self.step + 1e-9).floor();
        if !(count >= 0.0) {
            return Vec::new();
        }
        (0..=count as usize).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// A validated sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub v: Vec<f64>,
    pub p: Vec<f64>,
    pub r: Vec<u32>,
    pub n: Vec<SampleSize>,
    pub x: XGrid,
    pub theorem: Option<CaseTag>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub mc_reps: u64,
    pub options: ExpansionOptions,
}

/// The JSON config file, every field optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub v: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
    pub r: Option<Vec<u32>>,
    /// Sample sizes as integers or strings (`"1e8"`, `"ln:500"`).
    pub n: Option<Vec<serde_json::Value>>,
    pub ln_n: Option<Vec<f64>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub x_step: Option<f64>,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub u: Option<f64>,
    pub theorem: Option<CaseTag>,
    pub family: Option<Family>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
    pub mc_reps: Option<u64>,
    pub q_variant: Option<QVariant>,
    pub b_variant: Option<BVariant>,
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` win over fields set in `self`.
    pub fn overlay(self, flags: ConfigFile) -> ConfigFile {
        // an explicit ladder of either kind replaces the file's ladder
        let ladder_flag = flags.n.is_some() || flags.ln_n.is_some();
        ConfigFile {
            v: pick(flags.v, self.v),
            p: pick(flags.p, self.p),
            r: pick(flags.r, self.r),
            n: if ladder_flag { flags.n } else { self.n },
            ln_n: if ladder_flag { flags.ln_n } else { self.ln_n },
            x_min: pick(flags.x_min, self.x_min),
            x_max: pick(flags.x_max, self.x_max),
            x_step: pick(flags.x_step, self.x_step),
            x: pick(flags.x, self.x),
            y: pick(flags.y, self.y),
            u: pick(flags.u, self.u),
            theorem: pick(flags.theorem, self.theorem),
            family: pick(flags.family, self.family),
            out: pick(flags.out, self.out),
            format: pick(flags.format, self.format),
            seed: pick(flags.seed, self.seed),
            mc_reps: pick(flags.mc_reps, self.mc_reps),
            q_variant: pick(flags.q_variant, self.q_variant),
            b_variant: pick(flags.b_variant, self.b_variant),
        }
    }

    /// The sample-size ladder, exact sizes first then ln-n entries, in the given order.
    pub fn ladder(&self) -> Result<Vec<SampleSize>> {
        let mut out = Vec::new();
        for value in self.n.iter().flatten() {
            let parsed = match value {
                serde_json::Value::Number(num) => match num.as_u64() {
                    Some(k) => SampleSize::Exact(k),
                    None => num.to_string().parse()?,
                },
                serde_json::Value::String(s) => s.parse()?,
                other => return Err(Error::Config(format!("bad sample size {other}"))),
            };
            out.push(parsed);
        }
        for &l in self.ln_n.iter().flatten() {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::Config(format!("ln n must be finite and positive, got {l}")));
            }
            out.push(SampleSize::Log(l));
        }
        Ok(out)
    }

    pub fn options(&self) -> ExpansionOptions {
        ExpansionOptions { q_variant: self.q_variant.unwrap_or_default(), b_variant: self.b_variant.unwrap_or_default() }
    }

    pub fn sweep(&self) -> Result<SweepConfig> {
        let need = |what: &str| Error::Config(format!("missing {what}"));
        let mut v = self.v.clone().ok_or_else(|| need("--v"))?;
        let mut p = self.p.clone().unwrap_or_else(|| vec![1.0]);
        let mut r = self.r.clone().unwrap_or_else(|| vec![1]);
        let n = self.ladder()?;
        let x = XGrid {
            min: self.x_min.ok_or_else(|| need("--x-min"))?,
            max: self.x_max.ok_or_else(|| need("--x-max"))?,
            step: self.x_step.ok_or_else(|| need("--x-step"))?,
        };
        let config_err = |m: String| Err(Error::Config(m));
        if v.is_empty() || v.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return config_err(format!("v list must be nonempty with entries > 0, got {v:?}"));
        }
        if p.is_empty() || p.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return config_err(format!("p list must be nonempty with entries > 0, got {p:?}"));
        }
        if r.is_empty() || r.contains(&0) {
            return config_err(format!("r list must be nonempty with entries >= 1, got {r:?}"));
        }
        if n.is_empty() {
            return config_err("n ladder is empty; give --n or --ln-n".into());
        }
        if n.windows(2).any(|w| !(w[0].ln() < w[1].ln())) {
            return config_err("n ladder must be strictly increasing".into());
        }
        if !(x.step > 0.0) || !x.step.is_finite() {
            return config_err(format!("x step must be > 0, got {}", x.step));
        }
        if !x.min.is_finite() || !x.max.is_finite() || x.points().is_empty() {
            return config_err(format!("x grid [{}, {}] is empty", x.min, x.max));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        p.sort_by(f64::total_cmp);
        p.dedup();
        r.sort_unstable();
        r.dedup();
        Ok(SweepConfig {
            v,
            p,
            r,
            n,
            x,
            theorem: self.theorem,
            out: self.out.clone(),
            format: self.format.unwrap_or_default(),
            seed: self.seed.unwrap_or(0),
            mc_reps: self.mc_reps.unwrap_or(0),
            options: self.options(),
        })
    }
}
