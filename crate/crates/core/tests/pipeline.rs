use duality_core::analytic::{self, turning_points};
use duality_core::dataset::{read_dataset, uniform_grid, write_dataset};
use duality_core::photon_mc::estimate_duality;
use duality_core::protocols::{duality_sweep, measure_point};
use duality_core::{
    DetectorPair, ExperimentConfig, LossPair, ModelKind, Noise, SplitRatio, WhichWay,
};

fn config(model: ModelKind) -> ExperimentConfig {
    ExperimentConfig::for_model(
        model,
        LossPair::new(0.6, 0.25).unwrap(),
        DetectorPair::new(0.9, 0.9).unwrap(),
        0.98,
    )
    .unwrap()
}

#[test]
fn three_estimators_agree_for_every_model() {
    for model in ModelKind::ALL {
        let cfg = config(model);
        for r in [0.2, 0.5, 0.8] {
            let r = SplitRatio::new(r).unwrap();
            let exact = analytic::evaluate(&cfg, r).unwrap();
            let measured = measure_point(&cfg, r, 64, None, 0).unwrap();
            assert!((exact.p - measured.p).abs() < 1e-9, "{model}");
            assert!((exact.v1 - measured.v1).abs() < 1e-9, "{model}");
            assert!((exact.v2 - measured.v2).abs() < 1e-9, "{model}");
            let mc = estimate_duality(&cfg, r, 200_000, 16, 42).unwrap();
            assert!((mc.point.p - exact.p).abs() < 5.0 * mc.p_se, "{model}");
            assert!(
                (mc.point.v1 - exact.v1).abs() < 5.0 * mc.v1_se.max(1e-4),
                "{model}"
            );
        }
    }
}

#[test]
fn sweep_file_round_trip_through_disk() {
    let cfg = config(ModelKind::Config2Inside);
    let noise = Some(Noise {
        sigma: 0.01,
        seed: 3,
    });
    let data = duality_sweep(&cfg, &uniform_grid(21), 64, noise).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_dataset(&data, &path).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), data);
    assert_eq!(
        duality_sweep(&cfg, &uniform_grid(21), 64, noise).unwrap(),
        data
    );
}

#[test]
fn which_way_protocol_depends_on_layout() {
    let r = SplitRatio::new(0.3).unwrap();
    let ww1 = duality_core::Interferometer::new(config(ModelKind::Config1Inside), r).which_way();
    let ww2 = duality_core::Interferometer::new(config(ModelKind::Config2Inside), r).which_way();
    assert!(matches!(ww1, WhichWay::Bypass(_)));
    assert!(matches!(ww2, WhichWay::Blocked { .. }));
}

#[test]
fn turning_points_are_symmetric_about_balance() {
    let cfg = config(ModelKind::Config2Outside);
    let [a, b] = turning_points(&cfg).unwrap();
    assert!(a < 0.5 && b > 0.5);
    assert!((a + b - 1.0).abs() < 1e-9);
    let at = |r: f64| {
        analytic::evaluate(&cfg, SplitRatio::new(r).unwrap())
            .unwrap()
            .duality()
    };
    assert!(at(0.5) > 1.0 && at(0.05) < 1.0);
}
