//! Grid sweeps comparing exact probabilities against the expansions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expansions::{CaseSetup, CaseTag, TheoremCase};
use crate::ged::GedParams;
use crate::harness::config::SweepConfig;
use crate::norming::SampleSize;
use crate::orderstats::{self, McEstimate};

/// One grid point of a sweep. Numeric fields are NaN when `error` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    pub v: f64,
    pub p: f64,
    pub r: u32,
    pub n: SampleSize,
    pub x: f64,
    pub exact: f64,
    pub limit: f64,
    pub err: f64,
    pub scaled_err1: f64,
    pub target1: f64,
    pub scaled_err2: f64,
    pub target2: f64,
    pub theta_deficit: f64,
    pub remainder_bound: f64,
    pub error: Option<String>,
}

impl VerificationRow {
    fn failed(v: f64, p: f64, r: u32, n: SampleSize, x: f64, e: &Error) -> Self {
        let nan = f64::NAN;
        VerificationRow {
            v,
            p,
            r,
            n,
            x,
            exact: nan,
            limit: nan,
            err: nan,
            scaled_err1: nan,
            target1: nan,
            scaled_err2: nan,
            target2: nan,
            theta_deficit: nan,
            remainder_bound: nan,
            error: Some(e.to_string()),
        }
    }

    /// Evaluates one point against a prepared case.
    pub fn evaluate(setup: &CaseSetup, r: u32, x: f64) -> Self {
        let (v, p, n) = (setup.case.v, setup.case.p, setup.n);
        match setup.evaluate(r, x) {
            Ok(pt) => VerificationRow {
                v,
                p,
                r,
                n,
                x,
                exact: pt.exact,
                limit: pt.expansion.leading,
                err: pt.err,
                scaled_err1: pt.scaled_err1(),
                target1: pt.expansion.target1,
                scaled_err2: pt.scaled_err2(),
                target2: pt.expansion.target2,
                theta_deficit: pt.one_minus_theta,
                remainder_bound: pt.remainder_bound,
                error: None,
            },
            Err(e) => Self::failed(v, p, r, n, x, &e),
        }
    }

    /// `scaled_err1 / target1`, or NaN for an error row.
    pub fn ratio1(&self) -> f64 {
        self.scaled_err1 / self.target1
    }

    pub fn ratio2(&self) -> f64 {
        self.scaled_err2 / self.target2
    }
}

/// The case a `(v, p)` pair is evaluated under, or `None` when the filter excludes it.
pub fn route(v: f64, p: f64, filter: Option<CaseTag>) -> Option<TheoremCase> {
    let case = match filter {
        Some(CaseTag::T1iii) => TheoremCase::classify_power(v, p),
        _ => TheoremCase::classify(v, p),
    };
    match filter {
        Some(tag) if tag != case.tag => None,
        _ => Some(case),
    }
}

/// Evaluates every grid point, in `(v, p, r, n, x)` order.
pub fn run_sweep(config: &SweepConfig) -> Vec<VerificationRow> {
    let xs = config.x.points();
    let pairs: Vec<(f64, f64, TheoremCase)> = config
        .v
        .iter()
        .flat_map(|&v| config.p.iter().map(move |&p| (v, p)))
        .filter_map(|(v, p)| route(v, p, config.theorem).map(|c| (v, p, c)))
        .collect();

    let setups: Vec<Vec<Result<CaseSetup>>> = pairs
        .par_iter()
        .map(|&(v, _, case)| {
            let params = GedParams::new(v);
            config
                .n
                .iter()
                .map(|&n| {
                    let params = params.as_ref().map_err(clone_error)?;
                    CaseSetup::new(params, case, n, config.options)
                })
                .collect()
        })
        .collect();

    let mut tasks = Vec::new();
    for (pi, _) in pairs.iter().enumerate() {
        for &r in &config.r {
            for ni in 0..config.n.len() {
                for &x in &xs {
                    tasks.push((pi, r, ni, x));
                }
            }
        }
    }

    tasks
        .par_iter()
        .map(|&(pi, r, ni, x)| {
            let (v, p, _) = pairs[pi];
            match &setups[pi][ni] {
                Ok(setup) => VerificationRow::evaluate(setup, r, x),
                Err(e) => VerificationRow::failed(v, p, r, config.n[ni], x, e),
            }
        })
        .collect()
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Domain(m) => Error::Domain(m.clone()),
        Error::CaseMismatch(m) => Error::CaseMismatch(m.clone()),
        Error::Config(m) => Error::Config(m.clone()),
        Error::Resource(m) => Error::Resource(m.clone()),
        Error::NonConvergence { what, iterations, trace } => {
            Error::NonConvergence { what, iterations: *iterations, trace: trace.clone() }
        }
        Error::Io { path, source } => {
            Error::Io { path: path.clone(), source: std::io::Error::new(source.kind(), source.to_string()) }
        }
    }
}

/// Monte Carlo check of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McCheck {
    pub row: usize,
    pub exact: f64,
    pub mc: McEstimate,
}

impl McCheck {
    /// Standardized discrepancy; the standard error is floored at `0.5 / reps`.
    pub fn z(&self) -> f64 {
        let se = self.mc.stderr.max(0.5 / self.mc.reps as f64);
        (self.exact - self.mc.estimate) / se
    }
}

/// Simulates the rows that have an exact sample size within the draw budget.
///
/// One table of top values is drawn per `(v, p, n)` with seed
/// `seed + index of its first row`; rows outside the budget are skipped.
pub fn mc_cross_check(config: &SweepConfig, rows: &[VerificationRow]) -> Vec<McCheck> {
    if config.mc_reps == 0 {
        return Vec::new();
    }
    let r_max = config.r.iter().copied().max().unwrap_or(1);
    let mut out = Vec::new();
    let mut tables: Vec<((u64, u64, u64), Option<Vec<f64>>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let SampleSize::Exact(n) = row.n else { continue };
        if row.error.is_some() || n < r_max as u64 {
            continue;
        }
        let key = (row.v.to_bits(), row.p.to_bits(), n);
        let slot = match tables.iter().position(|(k, _)| *k == key) {
            Some(j) => j,
            None => {
                let table = GedParams::new(row.v).ok().and_then(|params| {
                    let seed = config.seed.wrapping_add(i as u64);
                    orderstats::mc_top_values(&params, n, r_max, config.mc_reps, seed, orderstats::DEFAULT_MC_BUDGET).ok()
                });
                tables.push((key, table));
                tables.len() - 1
            }
        };
        let Some(table) = &tables[slot].1 else { continue };
        let Some(case) = route(row.v, row.p, config.theorem) else { continue };
        let Ok(params) = GedParams::new(row.v) else { continue };
        let Ok(setup) = CaseSetup::new(&params, case, row.n, config.options) else { continue };
        let Ok((y, _)) = setup.normed_point(row.x) else { continue };
        let mc = orderstats::mc_estimate_from_table(table, r_max, row.r, row.p, y);
        out.push(McCheck { row: i, exact: row.exact, mc });
    }
    out
}
