use foliated_flows::harness::{run_with_threads, ExperimentConfig, ExperimentKind};

fn report(config: &ExperimentConfig, threads: usize) -> String {
    run_with_threads(config, Some(threads)).unwrap().to_json().unwrap()
}

#[test]
fn thread_count_does_not_change_reports() {
    for kind in [ExperimentKind::Simulate, ExperimentKind::Average, ExperimentKind::Coalesce] {
        let mut c = ExperimentConfig::default_for(kind);
        c.seed = 99;
        c.replicas = Some(24);
        c.simulate.horizon = 2.0;
        c.coalesce.horizon = 5.0;
        c.averaging.eps = vec![0.1, 0.05];
        assert_eq!(report(&c, 1), report(&c, 5), "{}", kind.name());
    }
}

#[test]
fn seed_changes_results() {
    let mut c = ExperimentConfig::default_for(ExperimentKind::Average);
    c.replicas = Some(20);
    c.averaging.eps = vec![0.1, 0.05];
    let a = report(&c, 2);
    c.seed = 1;
    assert_ne!(a, report(&c, 2));
}

#[test]
fn config_round_trips_through_toml() {
    for kind in [
        ExperimentKind::Simulate,
        ExperimentKind::KernelCheck,
        ExperimentKind::Average,
        ExperimentKind::Rates,
        ExperimentKind::Coalesce,
    ] {
        let c = ExperimentConfig::default_for(kind);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, back);
    }
}
