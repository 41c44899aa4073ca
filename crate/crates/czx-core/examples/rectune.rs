use czx_core::bounds::*;
use czx_core::corpus::CorpusSpec;
use czx_core::kernel::builtin_symbol;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let qs = [1.5, 2.0, 3.0, 4.0];
    let betas = [0.5, 0.1, 0.01];
    let eps = [2.0, 4.0, 16.0];
    // n=1: box 64 (8192 cells), support window still +-4
    let mut bins = [(0.5, 0.0f64), (0.1, 0.0), (0.01, 0.0)];
    {
        let spec = CorpusSpec {
            seed: 2026,
            n: 1,
            shape: vec![8192],
            h: 1.0 / 128.0,
            origin: vec![-32.0],
            count: 30,
            support_halfwidth: 4.0,
        };
        let omega = builtin_symbol("sign", 1).unwrap();
        let fields = spec.members();
        let names: Vec<String> = (0..spec.count).map(|i| format!("m{i}")).collect();
        let res = main_ratio_sweep(&omega, &names, &fields, &qs, &betas, &eps, 0.01, f64::INFINITY).unwrap();
        println!("n=1 box64: {:?} [{:.0}s]", res.per_beta_max, t0.elapsed().as_secs_f64());
        for (i, (_, m)) in res.per_beta_max.iter().enumerate() { bins[i].1 = bins[i].1.max(*m); }
    }
    {
        let spec = CorpusSpec {
            seed: 2026,
            n: 2,
            shape: vec![96, 96],
            h: 0.25,
            origin: vec![-12.0, -12.0],
            count: 20,
            support_halfwidth: 2.5,
        };
        let omega = builtin_symbol("riesz-1", 2).unwrap();
        let fields = spec.members();
        let names: Vec<String> = (0..spec.count).map(|i| format!("m{i}")).collect();
        let res = main_ratio_sweep(&omega, &names, &fields, &qs, &betas, &eps, 0.01, f64::INFINITY).unwrap();
        println!("n=2 box24: {:?} [{:.0}s]", res.per_beta_max, t0.elapsed().as_secs_f64());
        for (i, (_, m)) in res.per_beta_max.iter().enumerate() { bins[i].1 = bins[i].1.max(*m); }
    }
    println!("combined: {bins:?}");
    println!("trend factor: {:.4} (need >= 0.5)  [{:.0}s]", bins[0].1 / bins[2].1, t0.elapsed().as_secs_f64());
}
