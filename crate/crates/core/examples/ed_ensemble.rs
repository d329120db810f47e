//! Small exact-diagonalization ensemble: mean P(n) and arg Q(n).

use size_winding::ed::{run_ensemble, winding_slope_in_n, Probe, SykParams};

fn main() -> size_winding::Result<()> {
    let beta = 2.0 * std::f64::consts::PI;
    let params = SykParams {
        n_majorana: 12,
        q: 4,
        script_j: 3.206758 / beta,
        beta,
        base_seed: 7,
    };
    let times = [0.5, 3.0, 6.0, 9.0, 12.0];
    let ens = run_ensemble(&params, &times, 10, Probe::Flavor(0), None)?;
    println!("<V> = {:.4}", ens.mean_v_expectation);
    for (i, t) in times.iter().enumerate() {
        let odd: Vec<String> = ens.mean_p[i].iter().skip(1).step_by(2).map(|x| format!("{x:.3}")).collect();
        let slope = winding_slope_in_n(&ens.mean_distribution(i), 1, 11)?;
        println!("t = {t:>4}: P(odd n) = [{}], winding slope = {slope:.4}", odd.join(" "));
    }
    Ok(())
}
