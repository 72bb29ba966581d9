//! Density, distribution function, quantiles, tail expansions and sampling of GED(v).

use ged_extremes::ged::{tail_survival_expansion, GedParams};

fn main() -> ged_extremes::Result<()> {
    println!("{:>5} {:>10} {:>12} {:>12} {:>12}", "v", "lambda", "pdf(0)", "cdf(1)", "q(0.99)");
    for v in [0.5, 1.0, 1.5, 2.0, 4.0] {
        let g = GedParams::new(v)?;
        println!("{v:>5} {:>10.6} {:>12.6} {:>12.6} {:>12.6}", g.lambda(), g.pdf(0.0), g.cdf(1.0), g.quantile(0.99)?);
    }

    println!("\ntail survival at v = 4 against its expansion");
    let g = GedParams::new(4.0)?;
    for x in [2.0, 3.0, 4.0] {
        let exact = g.survival(x);
        let approx: Vec<String> = (0..=2)
            .map(|k| tail_survival_expansion(&g, x, k).map(|s| format!("{:+.2e}", s / exact - 1.0)))
            .collect::<Result<_, _>>()?;
        println!("  x = {x}: survival = {exact:.6e}, relative error by order {}", approx.join(" "));
    }

    let draws = GedParams::new(0.5)?.sample_stream(200_000, 42);
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    println!("\nGED(0.5) sample of 200000: mean {mean:+.4}, variance {var:.4}");
    Ok(())
}
