//! First- and second-order expansion terms against the exact error, one point per case.

use ged_extremes::expansions::{CaseSetup, ExpansionOptions, TheoremCase};
use ged_extremes::ged::GedParams;
use ged_extremes::norming::SampleSize;

fn main() -> ged_extremes::Result<()> {
    let points = [
        (1.0, 1.0, SampleSize::Exact(100_000)),
        (1.0, 2.0, SampleSize::Log(200.0)),
        (2.0, 1.0, SampleSize::Log(1e6)),
        (0.5, 2.0, SampleSize::Log(1000.0)),
        (2.0, 2.0, SampleSize::Log(1000.0)),
    ];
    let (r, x) = (1, 0.5);
    for (v, p, n) in points {
        let params = GedParams::new(v)?;
        let case = if v != 1.0 && p == 1.0 { TheoremCase::classify_power(v, p) } else { TheoremCase::classify(v, p) };
        let setup = CaseSetup::new(&params, case, n, ExpansionOptions::default())?;
        let ev = setup.evaluate(r, x)?;
        let e = ev.expansion;
        println!(
            "{:<6} v={v} p={p} n={n}: err {:+.4e}, first {:+.4e}, first+second {:+.4e}; scaled_err1 {:+.5} -> target1 {:+.5}",
            e.case.to_string(),
            ev.err,
            e.first_order,
            e.first_order + e.second_order,
            ev.scaled_err1(),
            e.target1,
        );
    }
    Ok(())
}
