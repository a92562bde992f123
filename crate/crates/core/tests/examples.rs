//! Every example runs and reaches its headline result.

#[allow(dead_code)]
#[path = "../examples/torus_leaf_invariance.rs"]
mod torus_leaf_invariance;
#[allow(dead_code)]
#[path = "../examples/cylinder_semigroup.rs"]
mod cylinder_semigroup;
#[allow(dead_code)]
#[path = "../examples/kernel_properties.rs"]
mod kernel_properties;
#[allow(dead_code)]
#[path = "../examples/coalescing_chain.rs"]
mod coalescing_chain;
#[allow(dead_code)]
#[path = "../examples/coalescing_circle.rs"]
mod coalescing_circle;
#[allow(dead_code)]
#[path = "../examples/commuting_averaging.rs"]
mod commuting_averaging;
#[allow(dead_code)]
#[path = "../examples/error_decomposition.rs"]
mod error_decomposition;
#[allow(dead_code)]
#[path = "../examples/rate_scaling.rs"]
mod rate_scaling;
#[allow(dead_code)]
#[path = "../examples/driver_replay.rs"]
mod driver_replay;
#[allow(dead_code)]
#[path = "../examples/run_config.rs"]
mod run_config;

#[test]
fn torus_points_stay_on_their_leaf() {
    assert!(torus_leaf_invariance::run_example().unwrap() <= 1e-9);
}

#[test]
fn cylinder_mean_cosine_matches_closed_form() {
    for (t, est, se, exact) in cylinder_semigroup::run_example().unwrap() {
        assert!((est - exact).abs() <= 4.0 * se, "t = {t}: {est} vs {exact} (se {se})");
    }
}

#[test]
fn flow_kernel_is_exact_and_independent_product_is_not_diagonal() {
    let (worst, indep) = kernel_properties::run_example().unwrap();
    assert!(worst <= 1e-12);
    assert!(indep > 0.1);
}

#[test]
fn coalescing_chain_mass_is_monotone() {
    let masses = coalescing_chain::run_example().unwrap();
    assert!(masses.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!(masses[19] > 0.95);
}

#[test]
fn circle_points_never_merge_across_leaves() {
    let (same, cross) = coalescing_circle::run_example().unwrap();
    assert_eq!(cross, 0);
    assert!(same > 150);
}

#[test]
fn commuting_field_averages_exactly() {
    for (_, err) in commuting_averaging::run_example().unwrap() {
        assert!(err <= 1e-8);
    }
}

#[test]
fn decomposition_bounds_hold() {
    assert!(error_decomposition::run_example().unwrap());
}

#[test]
fn rate_slope_is_near_one_half() {
    let slope = rate_scaling::run_example().unwrap();
    assert!((0.25..=0.8).contains(&slope), "slope {slope}");
}

#[test]
fn driver_replays_bit_for_bit() {
    assert!(driver_replay::run_example().unwrap());
}

#[test]
fn toml_config_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let files = run_config::run_example(dir.path()).unwrap();
    assert!(!files.is_empty());
    assert!(files.iter().all(|f| f.exists()));
}
