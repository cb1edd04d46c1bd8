use dstlab::opt::critical::{default_restarts, multi_start, MultiStartConfig};

#[test]
fn probe_full_table() {
    let want = [
        (2usize, 1.0f64),
        (5, 0.10701459341302288),
        (6, 2.0 / 27.0),
        (7, 0.05442177),
        (8, 1.0 / 24.0),
        (9, 0.0329218),
        (10, 2.0 / 75.0),
    ];
    let t0 = std::time::Instant::now();
    for (m, target) in want {
        let cfg = MultiStartConfig::new(m, 2024);
        let t = std::time::Instant::now();
        let out = multi_start(&cfg).unwrap();
        eprintln!(
            "m={m}: action={:.9} want={:.9} diff={:.2e} feasible={} restarts={} elapsed={:.2?}",
            out.best.action,
            target,
            (out.best.action - target).abs(),
            out.best.feasible,
            default_restarts(m),
            t.elapsed()
        );
    }
    eprintln!("total {:.2?}", t0.elapsed());
}
