//! A T1_i sweep over an n ladder, written as CSV and summarized as ratios.

use ged_extremes::expansions::{CaseTag, ExpansionOptions};
use ged_extremes::harness::{emit, run_sweep, Format, SweepConfig, XGrid};
use ged_extremes::norming::SampleSize;

fn main() -> ged_extremes::Result<()> {
    let config = SweepConfig {
        v: vec![1.0],
        p: vec![1.0],
        r: vec![1, 2],
        n: (3..=9).map(|k| SampleSize::Exact(10u64.pow(k))).collect(),
        x: XGrid { min: -1.0, max: 3.0, step: 1.0 },
        theorem: Some(CaseTag::T1i),
        out: Some(std::env::temp_dir().join("gedx_t1i_sweep.csv")),
        format: Format::Csv,
        seed: 0,
        mc_reps: 0,
        options: ExpansionOptions::default(),
    };
    let rows = run_sweep(&config);
    emit(&rows, config.format, config.out.as_deref())?;
    println!("{} rows written to {}", rows.len(), config.out.as_ref().unwrap().display());

    println!("scaled_err1 / target1 at r = 1:");
    for x in config.x.points() {
        let ratios: Vec<String> =
            rows.iter().filter(|row| row.r == 1 && row.x == x).map(|row| format!("{:.6}", row.ratio1())).collect();
        println!("  x = {x:+}: {}", ratios.join(" "));
    }
    Ok(())
}
