//! The four norming families and the calibration root b_n.

use ged_extremes::ged::GedParams;
use ged_extremes::norming::{constants, solve_bn, Family, SampleSize};

fn main() -> ged_extremes::Result<()> {
    let n = SampleSize::Exact(1_000_000);
    let p = 2.0;
    println!("n = {n}, p = {p}");
    for v in [0.5, 1.0, 2.0, 4.0] {
        let g = GedParams::new(v)?;
        print!("v = {v:<4}");
        for family in [Family::Gumbel, Family::Power, Family::Hall, Family::Optimal] {
            match constants(&g, family, p, n) {
                Ok(nm) => print!("  {family}: ({:.5}, {:.5})", nm.scale, nm.shift),
                Err(_) => print!("  {family}: n/a"),
            }
        }
        println!();
    }

    println!("\nb_n for v = 2");
    let g = GedParams::new(2.0)?;
    for n in ["10", "1000", "1e9", "ln:100", "ln:10000"] {
        let bn = solve_bn(&g, n.parse()?)?;
        println!("  n = {n:>9}: b_n = {:.10}, residual {:+.1e}, {} iterations", bn.b_n, bn.residual, bn.iterations);
    }
    Ok(())
}
