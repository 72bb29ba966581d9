//! Fits the second-order coefficient of the deficit 1 - θ numerically and
//! compares it with the candidate closed forms for q_v.

use ged_extremes::expansions::adjudicate_q;

fn main() -> ged_extremes::Result<()> {
    let adj = adjudicate_q(&[0.5, 1.5, 3.0], &[1.0, 2.5], &[-0.5, 0.0, 1.0, 2.0], 400.0)?;
    println!("{:>4} {:>4} {:>5} {:>12} {:>12} {:>12} {:>12}", "v", "p", "x", "fitted", "eq22", "eq34", "derived");
    for f in &adj.fits {
        println!(
            "{:>4} {:>4} {:>5} {:>12.5} {:>12.5} {:>12.5} {:>12.5}",
            f.v, f.p, f.x, f.fitted, f.eq22, f.eq34, f.derived
        );
    }
    for (variant, dev) in adj.max_dev {
        println!("max |fitted - {variant}| = {dev:.4e}");
    }
    println!("closest: {}", adj.winner);
    Ok(())
}
