use dsda::diagnostics::residual_lowrank;
use dsda::reference::hamiltonian_care_oracle;
use dsda::{fold_weight, solve, SolverConfig};

fn main() {
    for seed in [7u64, 8, 9] {
        let p = dsda::testgen::stable_instance(seed, 200, 2, 2, 1e-2);
        let cfg = SolverConfig {
            gamma: 1e-2,
            max_iter: 20,
            ..SolverConfig::default()
        };
        let t0 = std::time::Instant::now();
        let r = solve(&p, &cfg).unwrap();
        let t1 = t0.elapsed().as_secs_f64();
        let last = r.record.iterations.last().unwrap();
        eprintln!(
            "seed {seed}: {:?} iters={} rho_x={:.3e} rank_x={} [{t1:.2}s]",
            r.record.termination,
            r.record.iterations.len(),
            last.rho_x,
            last.rank_x
        );
        let t0 = std::time::Instant::now();
        let folded = fold_weight(&p).unwrap();
        let ham = hamiltonian_care_oracle(&folded).unwrap();
        let t2 = t0.elapsed().as_secs_f64();
        let xd = r.x.to_dense();
        let rel = (&xd - &ham.x).norm() / ham.x.norm();
        eprintln!("  oracle rel diff = {rel:.3e} (sign iters {}) [{t2:.2}s]", ham.sign_iterations);
        let rep = residual_lowrank(&folded, &r.x);
        eprintln!("  recomputed rho = {:.3e}", rep.rho);
        // residual history for convergence order
        let hist: Vec<f64> = r.record.iterations.iter().map(|it| it.rho_x).collect();
        match dsda::diagnostics::convergence_order(&hist, 1e-14) {
            Ok(o) => eprintln!("  fitted order = {o:.2}"),
            Err(e) => eprintln!("  order: {e}"),
        }
    }
}
