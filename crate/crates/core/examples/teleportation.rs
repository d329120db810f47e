//! Teleportation signal: exact doubled-space correlator against the Q(n) formula.

use size_winding::ed::pauli::MajoranaTable;
use size_winding::ed::{
    build_hamiltonian, build_majorana_ops, realization_distributions, realization_seed, sample_couplings, Probe,
    SykParams,
};
use size_winding::teleport::{scan_g, TeleportSystem};

fn main() -> size_winding::Result<()> {
    let beta = 2.0 * std::f64::consts::PI;
    let params = SykParams {
        n_majorana: 8,
        q: 4,
        script_j: 3.206758 / beta,
        beta,
        base_seed: 3,
    };
    let h = build_hamiltonian(&sample_couplings(&params, 0)?)?;
    let sys = TeleportSystem::new(&h, params.n_majorana, beta)?;
    let table = MajoranaTable::new(params.n_majorana)?;
    let chis = build_majorana_ops(params.n_majorana)?;
    let times = [1.0, 4.0, 8.0];
    let (dists, v) =
        realization_distributions(&params, realization_seed(3, 0), &times, Probe::Flavor(0), &table, &chis)?;
    let g_grid: Vec<f64> = (0..=80).map(|i| -1.0 + 0.025 * i as f64).collect();
    for (i, &t) in times.iter().enumerate() {
        let scan = scan_g(&dists[i], &g_grid, v)?;
        let exact = sys.correlator(t, scan.g_peak, 0)?;
        println!(
            "t = {t}: peak |F| = {:.6} at g = {:+.3}; exact at that g = {:.6}",
            scan.peak_abs_f,
            scan.g_peak,
            exact.f.norm()
        );
    }
    Ok(())
}
