use optdes::{
    a_step, certify, d_step, grid_box_with, pinsker_check, solve, BoxRule, Criterion,
    DesignProblem, GridLimits, ModelSpec, SolveOptions, SolveReport,
};

fn square(n: usize) -> DesignProblem {
    let grid = grid_box_with(&[[-1.0, 1.0]; 2], n, BoxRule::Closed, GridLimits::default()).unwrap();
    DesignProblem::new(ModelSpec::full_quadratic(2).unwrap(), grid).unwrap()
}

fn run(problem: &DesignProblem, kind: Criterion, cert_tol: f64) -> SolveReport {
    let opts = SolveOptions::new(kind).cert_tol(cert_tol).l1_tol(1e-300).max_iters(500_000);
    let r = solve(problem, &opts).unwrap();
    assert!(r.converged, "{:?}", r.termination_reason);
    r
}

#[test]
fn converged_designs_are_fixed_points() {
    let problem = square(21);
    for kind in [Criterion::D, Criterion::A] {
        let r = run(&problem, kind, 1e-9);
        let f = &r.final_density;
        let g = match kind {
            Criterion::D => d_step(&problem, f),
            Criterion::A => a_step(&problem, f),
        }
        .unwrap();
        let step = pinsker_check(&g, f, problem.grid()).unwrap();
        assert!(step.l1 <= 1e-9, "{kind:?}: {}", step.l1);
    }
}

#[test]
fn update_factor_is_near_one_where_mass_sits() {
    let problem = square(21);
    for kind in [Criterion::D, Criterion::A] {
        // cells next to a support point keep >= 1e-6 of mass with a factor
        // near 0.99 until the gap is well below 1e-4, so run it down further
        let r = run(&problem, kind, 1e-8);
        let f = &r.final_density;
        let info = problem.info_matrix(f).unwrap();
        let s = problem.sensitivities(kind, &info);
        let p = problem.p();
        let mu = problem.grid().measures();
        let mut checked = 0;
        for i in 0..f.len() {
            if f.values()[i] * mu[i] >= 1e-6 {
                let factor = kind.update_factor(s[i], p);
                assert!((factor - 1.0).abs() <= 1e-3, "{kind:?} cell {i}: {factor}");
                checked += 1;
            }
        }
        assert!(checked >= 9);
        assert!(certify(&problem, f, kind).unwrap().gap <= 1e-4);
    }
}

#[test]
fn late_steps_keep_shrinking() {
    let problem = square(21);
    for kind in [Criterion::D, Criterion::A] {
        let r = run(&problem, kind, 1e-6);
        let tail: Vec<f64> = r.history.iter().rev().take(10).map(|h| h.l1_step).collect();
        assert_eq!(tail.len(), 10);
        // newest first; each step at most twice its predecessor
        for w in tail.windows(2) {
            assert!(w[0] <= 2.0 * w[1], "{kind:?}: {tail:?}");
        }
        assert!(tail[0] < tail[9], "{kind:?}: {tail:?}");
    }
}

#[test]
fn iterates_never_lose_ground() {
    let problem = square(15);
    for kind in [Criterion::D, Criterion::A] {
        let r = run(&problem, kind, 1e-6);
        let d = &r.diagnostics;
        assert_eq!(d.logdet_decreases + d.trace_increases, 0);
        assert_eq!(d.pinsker_violations, 0);
        assert!(d.max_normalization_error < 1e-12);
        assert!(d.min_density >= 0.0);
        for w in r.history.windows(2) {
            let (a, b) = (w[0].criterion_value, w[1].criterion_value);
            // both criteria are recorded as values to minimize
            assert!(b <= a + 1e-12 * a.abs().max(1.0), "{kind:?}: {a} -> {b}");
        }
    }
}
