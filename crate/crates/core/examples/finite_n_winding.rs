//! Finite-N distributions at N = 18 and the long-time winding formula.

use size_winding::dist::{arg_q_asymptotic, finite_n_distribution_at_time, fit_winding, GridSpec};
use size_winding::largeq::LargeQParams;

fn main() -> size_winding::Result<()> {
    let n = 18;
    let params = LargeQParams::new(0.25, 0.6, 2.0 * std::f64::consts::PI, n as f64)?;
    for t in [3.0, 6.0, 9.0, 12.0] {
        let d = finite_n_distribution_at_time(t, &params, n, &GridSpec::uniform(801))?;
        let fit = fit_winding(&d, (0.2, 0.8))?;
        let predicted = arg_q_asymptotic(1.0, t, &params, n) - arg_q_asymptotic(0.0, t, &params, n);
        println!(
            "t = {t:>4}: norm = {:.6}, slope = {:.4} (rms {:.1e}), asymptotic slope = {:.4}",
            d.normalization(),
            fit.slope,
            fit.residual,
            predicted
        );
    }
    Ok(())
}
