use gridplan_core::benders::{run_benders, BendersOptions};
use gridplan_core::lp::SolverOptions;
use gridplan_core::model::solve_extensive;
use gridplan_core::synthetic::t1;

mod support;
use support::{t1_grid_optimum, t1_recourse};

#[test]
fn grid_oracle_agrees_with_both_solvers() {
    let (plan, cost) = t1_grid_optimum();
    assert_eq!((plan, cost), (50.0, 4550.0));

    let inst = t1();
    let (ext, _) = solve_extensive(&inst, &SolverOptions::default()).unwrap();
    let bd = run_benders(&inst, &BendersOptions::default()).unwrap();
    for (obj, p) in [
        (ext.objective_value, ext.plan("A", "B").unwrap()),
        (bd.objective, bd.final_solution.plan("A", "B").unwrap()),
    ] {
        assert!((obj - cost).abs() <= 1e-5 * cost);
        assert!((p - plan).abs() <= 1e-4);
    }
}

#[test]
fn grid_recourse_matches_known_points() {
    // s1 at plan 50: 70 units of gas and 20 units of deviation
    assert_eq!(t1_recourse(50.0, 40.0, 30.0), 3600.0);
    assert_eq!(t1_recourse(50.0, 40.0, 50.0), 4500.0);
}
