use gsqg_core::inequality::EnsembleSpec;
use gsqg_core::littlewood_paley::lp_norm;
use gsqg_core::picard::*;
use gsqg_core::spectral::*;
use gsqg_core::transport::*;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n).unwrap()
}

fn cfl_dt(theta: &RealField, law: VelocityLaw) -> f64 {
    let u = compute_velocity(theta, AlphaParam::sqg(), law).unwrap();
    stable_dt(&u, theta.grid(), 0.25)
}

fn ensemble() -> Vec<RealField> {
    let e = EnsembleSpec::new(grid(64), 3, 31, 3.0, 1.0, 6.0).unwrap();
    (0..3).map(|i| e.sample(i).unwrap()).collect()
}

#[test]
fn grad_law_initial_tendency() {
    // -u.grad(theta0) = -cos^2(x1); the mean-zero part is -cos(2 x1)/2.
    let g = grid(32);
    let theta0 = RealField::from_fn(g, |x, _| x.sin()).unwrap();
    let source = Trajectory::constant(&theta0, 1.0, 32).unwrap();
    let provider = FrozenVelocity::new(&source, AlphaParam::sqg(), VelocityLaw::Grad, Interpolation::Cubic).unwrap();
    let dt = 1e-6;
    let w1 = rk4_step(&theta0, &provider, &ForcingTerm::Zero, 0.0, dt).unwrap();
    let tendency = w1.sub(&theta0).unwrap().scaled(1.0 / dt);
    let expected = RealField::from_fn(g, |x, _| -0.5 * (2.0 * x).cos()).unwrap();
    assert!(tendency.sub(&expected).unwrap().max_abs() < 1e-5);

    let omega = apply_t(&source, &theta0, AlphaParam::sqg(), VelocityLaw::Grad, 1.0 / 32.0).unwrap();
    assert!(omega.last().sub(&theta0).unwrap().max_abs() > 0.1);
    assert!(omega.last().mean().abs() < 1e-14);
}

#[test]
fn converged_runs_are_fixed_points_inside_the_ball() {
    let solver = PicardSolver::default();
    for law in [VelocityLaw::Perp, VelocityLaw::Grad] {
        for theta0 in ensemble() {
            let dt = cfl_dt(&theta0, law);
            let ball = solver.select_horizon(&theta0, AlphaParam::sqg(), law, 2.5, dt).unwrap();
            let tol = ball.default_tolerance();
            let (traj, report) = solver.iterate(&theta0, AlphaParam::sqg(), law, &ball, tol, 50, dt).unwrap();
            assert!(report.converged);
            assert!(*report.iterate_distances.last().unwrap() <= tol);
            assert!(report.iterate_sup_norms.iter().all(|&m| m <= ball.radius));
            assert!(ball_membership(&traj, &ball).unwrap().inside);

            let image = solver.apply_map(&traj, &theta0, AlphaParam::sqg(), law, dt).unwrap();
            assert!(image.sup_l2_distance(&traj, solver.output_nodes).unwrap() <= 2.0 * tol);

            let direct = solver.direct_solve(&theta0, AlphaParam::sqg(), law, ball.horizon, dt).unwrap();
            let gap = direct.sup_l2_distance(&traj, solver.output_nodes).unwrap();
            assert!(gap <= 10.0 * tol, "{law}: gap {gap:e} tol {tol:e}");
        }
    }
}

#[test]
fn contraction_factor_scales_with_horizon() {
    let solver = PicardSolver::default();
    for law in [VelocityLaw::Perp, VelocityLaw::Grad] {
        for theta0 in ensemble() {
            let dt = cfl_dt(&theta0, law);
            let ball = solver.select_horizon(&theta0, AlphaParam::sqg(), law, 2.5, dt).unwrap();
            let kappa = |b: &BallSpec| {
                let (_, r) = solver.iterate(&theta0, AlphaParam::sqg(), law, b, b.default_tolerance(), 50, dt).unwrap();
                contraction_factor(&r).unwrap()
            };
            let full = kappa(&ball);
            let half = kappa(&ball.with_horizon(ball.horizon / 2.0));
            let ratio = half / full;
            println!("{law}: kappa(T) {full:.4} kappa(T/2) {half:.4} ratio {ratio:.3}");
            assert!(full <= 0.5);
            assert!((0.25..=0.9).contains(&ratio));
        }
    }
}

#[test]
fn doubling_the_datum_shortens_the_horizon() {
    let solver = PicardSolver::default();
    let theta0 = ensemble().remove(0);
    let dt = cfl_dt(&theta0.scaled(2.0), VelocityLaw::Perp);
    let t1 = solver.select_horizon(&theta0, AlphaParam::sqg(), VelocityLaw::Perp, 2.5, dt).unwrap().horizon;
    let t2 = solver.select_horizon(&theta0.scaled(2.0), AlphaParam::sqg(), VelocityLaw::Perp, 2.5, dt).unwrap().horizon;
    assert!((0.25..=1.0).contains(&(t2 / t1)), "{t1} {t2}");
}

#[test]
fn steady_datum_is_accepted_at_the_initial_horizon() {
    let g = grid(32);
    let theta0 = RealField::from_fn(g, |x, _| x.sin()).unwrap();
    let dt = cfl_dt(&theta0, VelocityLaw::Perp);
    let ball = select_horizon(&theta0, AlphaParam::sqg(), VelocityLaw::Perp, 2.5, dt).unwrap();
    assert!((ball.horizon - 1.0 / ball.radius).abs() < 1e-15);
    let (traj, report) = picard_iterate(&theta0, AlphaParam::sqg(), VelocityLaw::Perp, &ball, ball.default_tolerance(), 50, dt).unwrap();
    assert_eq!(report.iterations, 1);
    assert!(report.iterate_distances[0] <= 1e-12);
    assert_eq!(contraction_factor(&report), None);
    assert!(lp_norm(&traj.last().sub(&theta0).unwrap(), 2.0).unwrap() <= 1e-12);
}

#[test]
fn oversized_horizon_is_reported() {
    let theta0 = EnsembleSpec::new(grid(32), 1, 31, 3.0, 1.0, 6.0).unwrap().sample(0).unwrap();
    let dt = cfl_dt(&theta0, VelocityLaw::Perp);
    let ball = BallSpec::around(&theta0, 2.5, 1.0, AlphaParam::sqg()).unwrap();
    let ball = ball.with_horizon(40.0 / ball.radius);
    let out = PicardSolver::default().iterate(&theta0, AlphaParam::sqg(), VelocityLaw::Perp, &ball, 1e-30, 3, dt);
    match out {
        Err(gsqg_core::Error::HorizonTooLarge { kappa, iterations }) => {
            assert!(kappa >= 1.0);
            assert_eq!(iterations, 3);
        }
        Ok((_, r)) => panic!("expected failure, got {:?}", r.iterate_distances),
        Err(e) => panic!("unexpected error {e}"),
    }
}
