use necklace::gapcheck::FrequencyConfig;
use necklace::graph::{Boundary, NecklaceGrid};
use necklace::solver::*;
use std::time::Instant;

fn main() {
    let config = FrequencyConfig::new(1, 5, 0.0, 0.0, 3.0, 15).unwrap();
    let grid = NecklaceGrid::new(4, 16, Boundary::DirichletTruncation, true).unwrap();
    let ctx = SolverContext::new(config, grid, Nonlinearity::Focusing, None).unwrap();
    println!("gap = {:?}", ctx.discrete_gap());
    let seed = ctx.seed_bump();
    let t0 = Instant::now();
    let opts = NehariOptions { polish: false, max_outer: 3000, ..Default::default() };
    match nehari_minimize(&ctx, &seed, &opts) {
        Ok(out) => {
            let d = &out.diagnostics;
            println!("nehari: converged={} iters={} J={:.6} resid={:.3e} |u|={:.3} amp={:.3} in {:?}",
                d.converged, d.iterations, d.j_value, d.pde_residual_abs, d.xt_norm, d.amplitude, t0.elapsed());
            println!("  nehari_self={:.3e} nehari_minus={:.3e} gs_defect={:.3e}",
                d.nehari_self, d.nehari_minus, d.ground_state_defect);
            // try newton from the nehari output
            let nopts = NewtonOptions { calibrate: false, max_iter: 50, ..Default::default() };
            match newton_solve(&ctx, &out.field, &nopts) {
                Ok(o2) => println!("newton-from-nehari: resid={:.3e} iters={} log_tail={:?}",
                    o2.diagnostics.pde_residual_abs, o2.diagnostics.iterations,
                    &o2.diagnostics.convergence_log[o2.diagnostics.convergence_log.len().saturating_sub(4)..]),
                Err(e) => println!("newton-from-nehari FAILED: {e}"),
            }
        }
        Err(e) => println!("nehari failed: {e}"),
    }
}
