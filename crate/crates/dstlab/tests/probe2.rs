use dstlab::opt::constrained::{kappa_min, minimize_z, minimize_z_pf, SolverConfig};

#[test]
fn probe_constrained() {
    let t0 = std::time::Instant::now();
    for (m, f, want) in [(2usize, 2usize, 2.0f64), (3, 2, 2.0 / 3.0), (4, 1, 1.0 / 16.0)] {
        let cfg = SolverConfig::new(m, f, 77);
        let t = std::time::Instant::now();
        let out = kappa_min(&cfg).unwrap();
        eprintln!(
            "kappa_min({m},{f}) = {:.7} want {:.7} diff={:.2e} feas={} pol={} evals={} sweeps={} esc={} {:?}",
            out.kappa, want, (out.kappa - want).abs(), out.feasible, out.polished,
            out.evals, out.sweeps, out.escalations, t.elapsed()
        );
    }
    for (kap, want) in [(2.0f64, 2.0f64), (5.0, 4.5)] {
        let cfg = SolverConfig::new(2, 2, 99);
        let t = std::time::Instant::now();
        let out = minimize_z(&cfg, kap).unwrap();
        eprintln!(
            "minZ(2,2,k={kap}) = {:.7} want {:.7} diff={:.2e} kres={:.2e} feas={} evals={} {:?}",
            out.z, want, (out.z - want).abs(),
            out.constraint_residual.unwrap(), out.feasible, out.evals, t.elapsed()
        );
    }
    {
        let cfg = SolverConfig::new(2, 2, 42);
        let base = minimize_z(&cfg, 5.0).unwrap();
        let t = std::time::Instant::now();
        let pf = minimize_z_pf(&cfg, 5.0, &[base.matrix.clone()]).unwrap();
        eprintln!(
            "pf(2,2,k=5): z={:.7} base={:.7} dominance={} kres={:.2e} proj_res={:.2e} seeded={} {:?}",
            pf.z, base.z, pf.z <= base.z + 1e-6, pf.constraint_residual,
            pf.projector_residual, pf.seeded_start, t.elapsed()
        );
    }
    eprintln!("total {:.2?}", t0.elapsed());
}
