//! Velocity, Lyapunov exponent and scrambling time across couplings.

use std::f64::consts::PI;

use size_winding::largeq::{solve_velocity, velocity_residual, LargeQParams};

fn main() -> size_winding::Result<()> {
    let beta = 2.0 * PI;
    println!("{:>10} {:>12} {:>12} {:>10}", "betaJ", "v", "kappa", "t_sc");
    for beta_j in [0.1, 1.0, 3.206758, 10.0, 100.0, 1e4] {
        let v = solve_velocity(beta_j)?;
        let p = LargeQParams::from_coupling(0.25, beta_j, beta, 18.0)?;
        assert!(velocity_residual(v, beta_j).abs() < 1e-10 * beta_j.max(1.0));
        println!("{beta_j:>10} {v:>12.8} {:>12.8} {:>10.5}", p.kappa(), p.scrambling_time());
    }
    Ok(())
}
