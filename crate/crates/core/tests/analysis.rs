use gridplan_core::analysis::{
    capacity_sensitivity, evpi, transmission_relaxation, SensitivityOptions, SolveMethod,
};
use gridplan_core::benders::BendersOptions;
use gridplan_core::model::solve_extensive;
use gridplan_core::synthetic::{binding_link, random_instance, shortage_stricken, RandomShape};

#[test]
fn shortage_region_gains_most_from_expansion() {
    let inst = shortage_stricken();
    let opts = SensitivityOptions {
        delta: 30.0,
        ..Default::default()
    };
    let out = capacity_sensitivity(&inst, &opts, &BendersOptions::default()).unwrap();
    let savings: Vec<f64> = out.iter().map(|e| e.saving.unwrap()).collect();
    assert!(savings.iter().all(|&s| s >= -1e-6), "{savings:?}");
    assert!(
        savings[2] > savings[0] + 1.0 && savings[2] > savings[1] + 1.0,
        "{savings:?}"
    );

    // oracle: expand C directly and re-solve the extensive form
    let (base, _) = solve_extensive(&inst, &Default::default()).unwrap();
    let mut expanded = inst.clone();
    expanded.generators[2].rated_power += 30.0;
    expanded.generators[2].available_power += 30.0;
    let (exp, _) = solve_extensive(&expanded, &Default::default()).unwrap();
    assert!(
        (base.objective_value - exp.objective_value - savings[2]).abs()
            <= 1e-6 * base.objective_value
    );
}

#[test]
fn uncapped_transmission_is_strictly_cheaper_when_binding() {
    let r = transmission_relaxation(
        &binding_link(),
        SolveMethod::Benders,
        &BendersOptions::default(),
    )
    .unwrap();
    assert!(r.unlimited.total < r.baseline.total - 1.0);
    assert!(r.unlimited.shortage < r.baseline.shortage - 1.0);
    assert!(r.per_link[0].delta > 0.0);
    assert!(r.per_link[0].unlimited_plan > 25.0);
}

#[test]
fn stochastic_ordering_on_random_instances() {
    let opts = BendersOptions::default();
    for seed in 0..40 {
        let inst = random_instance(seed, &RandomShape::default());
        let r = evpi(&inst, SolveMethod::Benders, &opts).unwrap();
        let slack = |v: f64| 1e-6 * v.abs().max(1.0);
        assert!(r.ws <= r.rp + slack(r.rp), "seed {seed}: {r:?}");
        assert!(r.rp <= r.eev + slack(r.eev), "seed {seed}: {r:?}");
        assert!(r.evpi_standard >= -slack(r.rp));
        let (ext, _) = solve_extensive(&inst, &opts.lp).unwrap();
        assert!((ext.objective_value - r.rp).abs() <= 1e-6 * r.rp.abs().max(1.0));
    }
}

#[test]
fn random_relaxations_never_cost_more() {
    let opts = BendersOptions::default();
    for seed in 200..220 {
        let inst = random_instance(seed, &RandomShape::default());
        let r = transmission_relaxation(&inst, SolveMethod::Extensive, &opts).unwrap();
        assert!(
            r.unlimited.total <= r.baseline.total + 1e-6 * r.baseline.total.max(1.0),
            "seed {seed}"
        );
        let s = capacity_sensitivity(
            &inst,
            &SensitivityOptions {
                delta: 25.0,
                method: SolveMethod::Extensive,
                fuel: None,
            },
            &opts,
        )
        .unwrap();
        for e in s.iter().filter_map(|e| e.saving) {
            assert!(e >= -1e-6 * r.baseline.total.max(1.0), "seed {seed}");
        }
    }
}
