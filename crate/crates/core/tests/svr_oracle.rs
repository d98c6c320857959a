mod common;

use common::{gaussian_kernel_matrix, svr_dual_brute_force, svr_dual_objective, svr_kkt_violation, svr_toy_problem};
use gridcast::eval::{svr_solve, SvrParams};

#[test]
fn smo_matches_brute_force_dual() {
    for seed in 0..10 {
        let (xs, z) = svr_toy_problem(seed);
        for (c, eps) in [(1.0, 0.1), (0.3, 0.05), (10.0, 0.01)] {
            let params = SvrParams {
                c,
                epsilon: eps,
                sigma: 1.6,
                ..SvrParams::default()
            };
            let fit = svr_solve(&xs, &z, &params).unwrap();
            let (best, _) = svr_dual_brute_force(&xs, &z, c, eps, 1.6);
            let k = gaussian_kernel_matrix(&xs, 1.6);
            let ours = svr_dual_objective(&k, &fit.dual, &z, eps);
            assert!((ours - best).abs() < 1e-3, "seed {seed} C {c}: smo {ours} vs oracle {best}");
            assert!((fit.objective - ours).abs() < 1e-9);
            let viol = svr_kkt_violation(&fit.model, &xs, &z, &fit.dual);
            assert!(viol <= params.tol, "seed {seed} C {c}: KKT violation {viol:e}");
        }
    }
}
