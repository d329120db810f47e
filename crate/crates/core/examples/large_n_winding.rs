//! Large-N size distribution and its winding phase at several λ₀.

use size_winding::dist::{fit_winding, large_n_distribution, s_support, winding_slope_early, GridSpec};
use size_winding::largeq::LargeQParams;

fn main() -> size_winding::Result<()> {
    let params = LargeQParams::new(0.25, 0.6, 2.0 * std::f64::consts::PI, 18.0)?;
    let (lo, hi) = s_support(&params);
    println!("support: [{lo:.6}, {hi}]");
    for l0 in [0.01, 0.1, 1.0, 10.0, 100.0] {
        let d = large_n_distribution(l0, &params, &GridSpec::default())?;
        let fit = fit_winding(&d, (lo + 1e-9, lo + 0.02))?;
        println!(
            "lambda0 = {l0:>6}: norm = {:.8}, slope near edge = {:>10.3}, early-time slope = {:>10.3}",
            d.normalization(),
            fit.slope,
            winding_slope_early(&params, l0)?
        );
    }
    Ok(())
}
