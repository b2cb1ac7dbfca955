mod common;

use common::*;
use lcr_fista::lasso::{LassoSpec, METRIC_FLOOR};
use lcr_fista::oracle::{oracle_fstar, oracle_mu, oracle_mu_dense};
use lcr_fista::{
    BoxSet, CompositeProblem, Constraint, Metric, Quadratic, Regularizer, SmoothFunction,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn random_problem(seed: u64, n: usize, kind: usize) -> CompositeProblem<Quadratic> {
    let mut rng = rng(seed);
    let b: DMatrix<f64> = DMatrix::from_fn(n + 2, n, |_, _| rng.gen_range(-1.0..1.0));
    let h = b.transpose() * &b;
    let center = random_vec(&mut rng, n, 3.0);
    // Gershgorin diagonal dominates H
    let r: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| h[(i, j)].abs()).sum::<f64>() * rng.gen_range(1.0..1.5))
        .collect();
    let regularizer = match kind {
        0 => Regularizer::Zero,
        1 => Regularizer::weighted_l1((0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap(),
        _ => Regularizer::Indicator(BoxSet::new(vec![-1.0; n], vec![0.5; n]).unwrap()),
    };
    let constraint = if kind == 1 {
        Constraint::Box(BoxSet::new(vec![-2.0; n], vec![2.0; n]).unwrap())
    } else {
        Constraint::AllSpace
    };
    CompositeProblem::new(
        Quadratic::new(h, center).unwrap(),
        regularizer,
        constraint,
        Metric::new(r).unwrap(),
    )
    .unwrap()
}

fn feasible_point(p: &CompositeProblem<Quadratic>, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let x = random_vec(rng, p.dim(), 3.0);
    p.composite_gradient_map(&x).unwrap().y_plus
}

#[test]
fn composite_gradient_inequality_and_rewritings() {
    for seed in 0..60 {
        let p = random_problem(seed, 5, (seed % 3) as usize);
        let mut rng = rng(1000 + seed);
        for _ in 0..10 {
            let y = random_vec(&mut rng, 5, 4.0);
            let x = feasible_point(&p, &mut rng);
            let step = p.composite_gradient_map(&y).unwrap();
            let g = &step.g;
            let gsq = step.g_dual_norm * step.g_dual_norm;
            let form_a = dot(g, &sub(&step.y_plus, &x)) + 0.5 * gsq;
            let form_b = dot(g, &sub(&y, &x)) - 0.5 * gsq;
            let form_c = -0.5 * sq_norm(p.metric(), &sub(&step.y_plus, &x))
                + 0.5 * sq_norm(p.metric(), &sub(&y, &x));
            let scale = form_a.abs().max(form_b.abs()).max(form_c.abs()).max(1.0);
            assert!((form_a - form_b).abs() <= 1e-9 * scale);
            assert!((form_a - form_c).abs() <= 1e-9 * scale);
            let lhs = p.objective(&step.y_plus) - p.objective(&x);
            assert!(lhs <= form_a + 1e-9 * scale, "seed {seed}: {lhs} > {form_a}");
        }
    }
}

#[test]
fn sufficient_decrease_from_feasible_points() {
    for seed in 0..60 {
        let p = random_problem(seed, 6, (seed % 3) as usize);
        let mut rng = rng(2000 + seed);
        for _ in 0..10 {
            let y = feasible_point(&p, &mut rng);
            let step = p.composite_gradient_map(&y).unwrap();
            let decrease = p.objective(&y) - p.objective(&step.y_plus);
            let half_gsq = 0.5 * step.g_dual_norm * step.g_dual_norm;
            assert!(half_gsq <= decrease + 1e-12 * p.objective(&y).abs().max(1.0));
        }
    }
}

#[test]
fn optimality_characterization() {
    // strongly convex instances: the oracle minimizer has a vanishing composite gradient,
    // and a small ‖g(y)‖_* certifies f(y⁺) − f* ≤ ‖g‖_*·‖y⁺ − x*‖_* + ½‖g‖_*²
    for seed in 0..10 {
        let p = random_problem(seed, 4, 1);
        let sol = oracle_fstar(&p, 1e-13).unwrap();
        let at_opt = p.composite_gradient_map(&sol.x_star).unwrap();
        assert!(at_opt.g_dual_norm <= 1e-10, "{}", at_opt.g_dual_norm);

        let mut rng = rng(3000 + seed);
        for _ in 0..10 {
            let y: Vec<f64> = sol
                .x_star
                .iter()
                .map(|v| v + rng.gen_range(-1e-3..1e-3))
                .collect();
            let s = p.composite_gradient_map(&y).unwrap();
            let d = p.metric().norm(&sub(&s.y_plus, &sol.x_star));
            let bound = s.g_dual_norm * d + 0.5 * s.g_dual_norm * s.g_dual_norm;
            assert!(p.objective(&s.y_plus) - sol.f_star <= bound + 1e-12);
        }
    }
}

#[test]
fn scalar_prox_matches_grid_search_per_kind() {
    let mut rng = rng(77);
    for kind in 0..3 {
        for _ in 0..100 {
            let y = rng.gen_range(-5.0..5.0);
            let center = rng.gen_range(-5.0..5.0);
            let curvature = rng.gen_range(0.1..2.0);
            let r = curvature * rng.gen_range(1.0..3.0);
            let w = rng.gen_range(0.0..3.0);
            let (lo, hi) = (rng.gen_range(-4.0..0.0), rng.gen_range(0.0..4.0));
            let regularizer = match kind {
                0 => Regularizer::Zero,
                1 => Regularizer::weighted_l1(vec![w]).unwrap(),
                _ => Regularizer::Indicator(BoxSet::new(vec![lo], vec![hi]).unwrap()),
            };
            let p = CompositeProblem::new(
                Quadratic::new(DMatrix::from_element(1, 1, curvature), vec![center]).unwrap(),
                regularizer.clone(),
                Constraint::AllSpace,
                Metric::new(vec![r]).unwrap(),
            )
            .unwrap();
            let grad = p.smooth().gradient(&[y])[0];
            let model = |x: f64| {
                regularizer.value(&[x]) + grad * (x - y) + 0.5 * r * (x - y) * (x - y)
            };
            let best = grid_argmin_refined(model, -30.0, 30.0);
            let got = p.composite_gradient_map(&[y]).unwrap().y_plus[0];
            assert!((got - best).abs() <= 1e-4, "kind {kind}: {got} vs {best}");
        }
    }
}

#[test]
fn generated_lasso_satisfies_descent_and_convexity() {
    for seed in 0..20 {
        let inst = LassoSpec::new(30, 40, 0.01, seed).generate().unwrap();
        let p = inst.problem();
        let mut rng = rng(seed);
        for _ in 0..20 {
            let x = random_vec(&mut rng, 40, 2.0);
            let y = random_vec(&mut rng, 40, 2.0);
            let hx = p.smooth().value(&x);
            let gap = p.descent_gap(&x, &y);
            assert!(gap >= -1e-9 * hx.abs().max(1.0), "descent gap {gap}");
            let lin = p.smooth().value(&y) + dot(&p.smooth().gradient(&y), &sub(&x, &y));
            assert!(hx >= lin - 1e-9 * hx.abs().max(1.0));
        }
    }
}

#[test]
fn gershgorin_metric_dominates_hessian() {
    for seed in 0..5 {
        let inst = LassoSpec::new(25, 35, 0.01, seed).generate().unwrap();
        let h = inst.problem().smooth().hessian();
        let r = DMatrix::from_diagonal(&DVector::from_column_slice(inst.problem().metric().diag()));
        let diff = r - &h;
        let mut rng = rng(500 + seed);
        for _ in 0..100 {
            let v = DVector::from_vec(random_vec(&mut rng, 35, 1.0));
            let q = v.dot(&(&diff * &v)) / v.dot(&v);
            assert!(q >= -1e-10, "Rayleigh quotient {q}");
        }
        let floor = METRIC_FLOOR * inst.problem().metric().diag().iter().copied().fold(0.0, f64::max);
        assert!(inst.problem().metric().diag().iter().all(|&d| d >= floor));
    }
}

#[test]
fn mu_oracle_agrees_with_rayleigh_minimization() {
    for seed in 0..5 {
        let inst = LassoSpec::least_squares(20, 10, seed).generate_least_squares().unwrap();
        let mu = oracle_mu(&inst).unwrap();
        let scaled = scaled_hessian(&inst.problem().smooth().hessian(), inst.problem().metric());
        let rq = rayleigh_min(&scaled, 200_000);
        assert!((mu - rq).abs() <= 1e-8, "{mu} vs {rq}");
    }
    // random 10×10 SPD with a non-identity metric
    let mut rng = rng(9);
    let b: DMatrix<f64> = DMatrix::from_fn(10, 10, |_, _| rng.gen_range(-1.0..1.0));
    let h = b.transpose() * &b + DMatrix::identity(10, 10) * 0.5;
    let metric = Metric::new((0..10).map(|_| rng.gen_range(1.0..5.0)).collect()).unwrap();
    let mu = oracle_mu_dense(&h, &metric).unwrap();
    let rq = rayleigh_min(&scaled_hessian(&h, &metric), 200_000);
    assert!((mu - rq).abs() <= 1e-8, "{mu} vs {rq}");
}

#[test]
fn unweighted_instance_matches_pseudoinverse() {
    for seed in 0..5 {
        let inst = LassoSpec::new(2, 3, 0.0, seed).with_sparsity(0.0).generate().unwrap();
        let a = inst.matrix().to_dense();
        let x = pinv_solve(&a, inst.rhs());
        let f_ls = inst.problem().objective(x.as_slice());
        let sol = oracle_fstar(inst.problem(), 1e-12).unwrap();
        assert!((sol.f_star - f_ls).abs() <= 1e-8, "{} vs {f_ls}", sol.f_star);
    }
}

#[test]
fn lasso_oracle_satisfies_kkt_and_is_idempotent() {
    for seed in 0..5 {
        let inst = LassoSpec::new(8, 12, 0.05, seed).with_sparsity(0.5).generate().unwrap();
        let a = oracle_fstar(inst.problem(), 1e-12).unwrap();
        assert!(a.kkt_residual.unwrap() <= 1e-6);
        let b = oracle_fstar(inst.problem(), 1e-12).unwrap();
        assert!((a.f_star - b.f_star).abs() <= 1e-10 * a.f_star.abs());
    }
}
