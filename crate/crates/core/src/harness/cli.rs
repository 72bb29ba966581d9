//! The `gedx` command line.
//!
//! Point queries print one JSON object to standard output. `verify` writes
//! the sweep table to `--out` (or standard output) and reports progress on
//! standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expansions::{BVariant, CaseSetup, CaseTag, QVariant};
use crate::ged::GedParams;
use crate::harness::config::{ConfigFile, Format};
use crate::harness::{emit, sweep};
use crate::norming::{self, Family, SampleSize};
use crate::orderstats::{self, OrderStatSpec};

#[derive(Debug, Parser)]
#[command(name = "gedx", version, about = "Powered order statistics of the general error distribution")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// pdf, cdf and survival at --x, quantile at --u, survival of |X|^v at --y
    Dist(Flags),
    /// Norming constants of one family (or all) for (v, p, n)
    Norming(Flags),
    /// Root b_n of the calibration equation
    SolveBn(Flags),
    /// Exact CDF of |M_{n,r}|^p at --y, or at the normed point of --x
    Exact(Flags),
    /// Expansion terms and the exact error at one point
    Expand(Flags),
    /// Full sweep written to --out
    Verify(Flags),
    /// Monte Carlo cross-check of the exact CDF
    Simulate(Flags),
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// JSON file supplying defaults for any flag
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub v: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<u32>,
    /// Sample sizes: integers, `1e12`, or `ln:<value>`
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<String>,
    #[arg(long = "ln-n", value_delimiter = ',', allow_negative_numbers = true)]
    pub ln_n: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_step: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub y: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// T1_i, T1_ii, T1_iii, T2_i or T2_ii
    #[arg(long)]
    pub theorem: Option<CaseTag>,
    /// gumbel, power, hall or optimal
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub mc_reps: Option<u64>,
    /// eq22, eq34 or derived
    #[arg(long)]
    pub q_variant: Option<QVariant>,
    /// printed or derived
    #[arg(long)]
    pub b_variant: Option<BVariant>,
}

fn nonempty<T>(v: Vec<T>) -> Option<Vec<T>> {
    Some(v).filter(|v| !v.is_empty())
}

impl Flags {
    /// Flags layered over the `--config` file, if any.
    pub fn resolve(&self) -> Result<ConfigFile> {
        let flags = ConfigFile {
            v: nonempty(self.v.clone()),
            p: nonempty(self.p.clone()),
            r: nonempty(self.r.clone()),
            n: nonempty(self.n.iter().map(|s| Value::String(s.clone())).collect()),
            ln_n: nonempty(self.ln_n.clone()),
            x_min: self.x_min,
            x_max: self.x_max,
            x_step: self.x_step,
            x: self.x,
            y: self.y,
            u: self.u,
            theorem: self.theorem,
            family: self.family,
            out: self.out.clone(),
            format: self.format,
            seed: self.seed,
            mc_reps: self.mc_reps,
            q_variant: self.q_variant,
            b_variant: self.b_variant,
        };
        match &self.config {
            Some(path) => Ok(ConfigFile::load(path)?.overlay(flags)),
            None => Ok(flags),
        }
    }
}

/// Point-query view of a resolved config: every list must hold one value.
struct Point<'a>(&'a ConfigFile);

fn single<T: Copy + std::fmt::Debug>(list: Option<&Vec<T>>, name: &str, default: Option<T>) -> Result<T> {
    match list.map(Vec::as_slice) {
        None | Some([]) => default.ok_or_else(|| Error::Config(format!("missing --{name}"))),
        Some([one]) => Ok(*one),
        Some(many) => Err(Error::Config(format!("--{name} takes one value here, got {many:?}"))),
    }
}

impl Point<'_> {
    fn v(&self) -> Result<f64> {
        single(self.0.v.as_ref(), "v", None)
    }
    fn p(&self) -> Result<f64> {
        single(self.0.p.as_ref(), "p", Some(1.0))
    }
    fn r(&self) -> Result<u32> {
        single(self.0.r.as_ref(), "r", Some(1))
    }
    fn n(&self) -> Result<SampleSize> {
        let ladder = self.0.ladder()?;
        single(Some(&ladder), "n", None)
    }
    fn params(&self) -> Result<GedParams> {
        GedParams::new(self.v()?)
    }
    fn setup(&self) -> Result<CaseSetup> {
        let (v, p) = (self.v()?, self.p()?);
        let case = sweep::route(v, p, self.0.theorem).ok_or_else(|| {
            Error::CaseMismatch(format!("(v = {v}, p = {p}) does not belong to case {}", self.0.theorem.unwrap()))
        })?;
        CaseSetup::new(&self.params()?, case, self.n()?, self.0.options())
    }
}

/// Maps an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::CaseMismatch(_) => 2,
        Error::NonConvergence { .. } => 3,
        Error::Resource(_) | Error::Io { .. } => 1,
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn print(out: &mut dyn Write, value: Value) -> Result<()> {
    writeln!(out, "{value}").map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })
}

fn norming_json(nm: &norming::LinearNorming) -> Value {
    json!({ "family": nm.family.to_string(), "scale": num(nm.scale), "shift": num(nm.shift) })
}

/// Runs one parsed command, writing query results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Dist(flags) => dist(&flags.resolve()?, out),
        Command::Norming(flags) => norming_cmd(&flags.resolve()?, out),
        Command::SolveBn(flags) => {
            let cfg = flags.resolve()?;
            let pt = Point(&cfg);
            let params = pt.params()?;
            let bn = norming::solve_bn(&params, pt.n()?)?;
            print(
                out,
                json!({
                    "v": num(params.v()), "n": bn.n.to_string(), "b_n": num(bn.b_n),
                    "b_pow_v": num(bn.b_pow_v(&params)), "residual": num(bn.residual), "iterations": bn.iterations,
                }),
            )
        }
        Command::Exact(flags) => exact(&flags.resolve()?, out),
        Command::Expand(flags) => expand(&flags.resolve()?, out),
        Command::Verify(flags) => verify(&flags.resolve()?, out),
        Command::Simulate(flags) => simulate(&flags.resolve()?, out),
    }
}

fn dist(cfg: &ConfigFile, out: &mut dyn Write) -> Result<()> {
    let params = Point(cfg).params()?;
    let mut obj = serde_json::Map::new();
    obj.insert("v".into(), num(params.v()));
    obj.insert("lambda".into(), num(params.lambda()));
    if let Some(x) = cfg.x {
        obj.insert("x".into(), num(x));
        obj.insert("pdf".into(), num(params.pdf(x)));
        obj.insert("cdf".into(), num(params.cdf(x)));
        obj.insert("survival".into(), num(params.survival(x)));
        obj.insert("ln_survival".into(), num(params.ln_survival(x)));
    }
    if let Some(u) = cfg.u {
        obj.insert("u".into(), num(u));
        obj.insert("quantile".into(), num(params.quantile(u)?));
    }
    if let Some(y) = cfg.y {
        obj.insert("y".into(), num(y));
        obj.insert("powered_abs_survival".into(), num(params.powered_abs_survival(y)));
    }
    if cfg.x.is_none() && cfg.u.is_none() && cfg.y.is_none() {
        return Err(Error::Config("dist needs --x, --u or --y".into()));
    }
    print(out, Value::Object(obj))
}

fn norming_cmd(cfg: &ConfigFile, out: &mut dyn Write) -> Result<()> {
    let pt = Point(cfg);
    let (params, p, n) = (pt.params()?, pt.p()?, pt.n()?);
    match cfg.family {
        Some(family) => print(out, norming_json(&norming::constants(&params, family, p, n)?)),
        None => {
            for family in [Family::Gumbel, Family::Power, Family::Hall, Family::Optimal] {
                let value = match norming::constants(&params, family, p, n) {
                    Ok(nm) => norming_json(&nm),
                    Err(e) => json!({ "family": family.to_string(), "error": e.to_string() }),
                };
                print(out, value)?;
            }
            Ok(())
        }
    }
}

/// Threshold on the `|M|^p` scale: `--y` directly, else the normed point of `--x`.
fn threshold(cfg: &ConfigFile) -> Result<(f64, Option<(f64, CaseSetup)>)> {
    match (cfg.y, cfg.x) {
        (Some(y), _) => Ok((y, None)),
        (None, Some(x)) => {
            let setup = Point(cfg).setup()?;
            Ok((setup.normed_point(x)?.0, Some((x, setup))))
        }
        (None, None) => Err(Error::Config("need --y or --x".into())),
    }
}

fn exact(cfg: &ConfigFile, out: &mut dyn Write) -> Result<()> {
    let pt = Point(cfg);
    let params = pt.params()?;
    let spec = OrderStatSpec::new(pt.n()?, pt.r()?, pt.p()?)?;
    let (y, normed) = threshold(cfg)?;
    let mut obj = json!({
        "v": num(params.v()), "p": num(spec.p), "r": spec.r, "n": spec.n.to_string(), "y": num(y),
        "cdf": num(orderstats::exact_powered_cdf(&params, &spec, y)),
    });
    if let Some((x, setup)) = normed {
        let ev = setup.evaluate(spec.r, x)?;
        obj["x"] = num(x);
        obj["case"] = json!(setup.case.tag.to_string());
        obj["limit"] = num(ev.expansion.leading);
        obj["err"] = num(ev.err);
    }
    print(out, obj)
}

fn expand(cfg: &ConfigFile, out: &mut dyn Write) -> Result<()> {
    let pt = Point(cfg);
    let setup = pt.setup()?;
    let r = pt.r()?;
    let x = cfg.x.ok_or_else(|| Error::Config("missing --x".into()))?;
    let ev = setup.evaluate(r, x)?;
    let e = ev.expansion;
    print(
        out,
        json!({
            "v": num(setup.case.v), "p": num(setup.case.p), "r": r, "n": setup.n.to_string(), "x": num(x),
            "case": e.case.to_string(), "family": setup.norming.family.to_string(),
            "scale": num(setup.norming.scale), "shift": num(setup.norming.shift),
            "limit": num(e.leading), "first_order": num(e.first_order), "second_order": num(e.second_order),
            "scale_first": num(e.scale_first), "scale_second": num(e.scale_second),
            "target1": num(e.target1), "target2": num(e.target2),
            "exact": num(ev.exact), "err": num(ev.err),
            "scaled_err1": num(ev.scaled_err1()), "scaled_err2": num(ev.scaled_err2()),
            "theta_deficit": num(ev.one_minus_theta),
            "theta_deficit_predicted": num(setup.theta_deficit_predicted(x, 2)?),
            "remainder_bound": num(ev.remainder_bound),
        }),
    )
}

fn verify(cfg: &ConfigFile, out: &mut dyn Write) -> Result<()> {
    let config = cfg.sweep()?;
    let rows = sweep::run_sweep(&config);
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    eprintln!("verify: {} rows, {failed} with errors", rows.len());
    let bytes = emit::render(&rows, config.format);
    match &config.out {
        Some(path) => {
            std::fs::write(path, bytes).map_err(|source| Error::Io { path: path.clone(), source })?;
            eprintln!("verify: wrote {}", path.display());
        }
        None => out.write_all(&bytes).map_err(|source| Error::Io { path: PathBuf::from("<stdout>"), source })?,
    }
    if config.mc_reps > 0 {
        let checks = sweep::mc_cross_check(&config, &rows);
        let worst = checks.iter().map(|c| c.z().abs()).fold(0.0, f64::max);
        eprintln!(
            "verify: monte carlo checked {} rows at {} reps, max |z| = {worst:.2}",
            checks.len(),
            config.mc_reps
        );
    }
    Ok(())
}

fn simulate(cfg: &ConfigFile, out: &mut dyn Write) -> Result<()> {
    let pt = Point(cfg);
    let params = pt.params()?;
    let spec = OrderStatSpec::new(pt.n()?, pt.r()?, pt.p()?)?;
    let (y, _) = threshold(cfg)?;
    let reps = cfg.mc_reps.unwrap_or(10_000);
    let seed = cfg.seed.unwrap_or(0);
    let mc = orderstats::mc_powered_cdf(&params, &spec, y, reps, seed)?;
    let exact = orderstats::exact_powered_cdf(&params, &spec, y);
    let check = sweep::McCheck { row: 0, exact, mc };
    print(
        out,
        json!({
            "v": num(params.v()), "p": num(spec.p), "r": spec.r, "n": spec.n.to_string(), "y": num(y),
            "exact": num(exact), "mc": num(mc.estimate), "stderr": num(mc.stderr), "reps": mc.reps,
            "seed": seed, "z": num(check.z()),
        }),
    )
}

/// Parses `args` and runs, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gedx: {e}");
            exit_code(&e)
        }
    }
}
