//! Generating functions and size moments.

use num_complex::Complex64 as C64;
use size_winding::dist::Mode;
use size_winding::genfunc::{gen_func, moments_from_gen_func, size_moments};
use size_winding::largeq::{ContourKind, LargeQParams};

fn main() -> size_winding::Result<()> {
    let n = 18;
    let params = LargeQParams::new(0.25, 0.6, 2.0 * std::f64::consts::PI, n as f64)?;
    for t in [0.0, 3.0, 6.0, 9.0, 12.0] {
        let l0 = params.lambda0(t)?;
        let sp = gen_func(C64::new(1.0, 0.0), l0, ContourKind::StandardSize, &params, n)?;
        let sq = gen_func(C64::new(1.0, 0.0), l0, ContourKind::WindingSize, &params, n)?;
        let m = size_moments(l0, ContourKind::StandardSize, &params, Mode::FiniteN { n }, 2)?;
        let fd = moments_from_gen_func(l0, ContourKind::StandardSize, &params, n, 2, 1e-3)?;
        let var = m[2].re - m[1].re * m[1].re;
        println!(
            "t = {t:>4}: S_P(1) = {:.6}, S_Q(1) = {:.6}, <s> = {:.6} (fd {:.6}), var = {var:.3e}",
            sp.re, sq, m[1].re, fd[1].re
        );
    }
    Ok(())
}
