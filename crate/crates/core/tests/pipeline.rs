use aoa_core::calibration::{estimate_offsets, reference_frames};
use aoa_core::channel::{read_cir, trace_paths, write_cir, CirMetadata, ImpairmentModel, Scenario};
use aoa_core::evaluation::{
    aggregate, read_records, run_campaign, write_records, CampaignConfig, ImpairmentSpec, ScenarioSpec, SnrPolicy,
    Trajectory,
};
use aoa_core::srs::{srs_sequence, SrsConfig};
use aoa_core::Method;

fn approach() -> Trajectory {
    Trajectory::straight_line([5.0, -7.0, 1.5], [120.0, 8.0, 1.5], 60)
}

fn fixed_snr_config(snr_db: f64) -> CampaignConfig {
    let mut cfg = CampaignConfig::new(ScenarioSpec::Preset("freespace".into()), 17);
    cfg.reflection_orders = vec![0];
    cfg.num_repetitions = 4;
    cfg.snr_policy = SnrPolicy::Fixed { snr_db };
    cfg
}

#[test]
fn rmse_does_not_grow_with_snr() {
    let traj = approach();
    for method in ["music", "esprit"] {
        let mut previous = f64::INFINITY;
        for snr in [-10.0, 0.0, 10.0, 20.0, 30.0] {
            let report = aggregate(&run_campaign(&fixed_snr_config(snr), &traj, None).unwrap()).unwrap();
            let rmse = report.pooled(method, 0).unwrap().rmse;
            assert!(rmse <= previous, "{method} at {snr} dB: {rmse} > {previous}");
            previous = rmse;
        }
    }
}

#[test]
fn plane_correction_reduces_error_below_the_array() {
    let records = run_campaign(&fixed_snr_config(25.0), &approach(), None).unwrap();
    let report = aggregate(&records).unwrap();
    for method in ["music", "esprit"] {
        let pooled = report.pooled(method, 0).unwrap();
        assert!(pooled.rmse < pooled.pre_rmse, "{method}: {} vs {}", pooled.rmse, pooled.pre_rmse);
    }
}

#[test]
fn campaign_is_independent_of_thread_count() {
    let scenario = Scenario::preset("canyon_o3").unwrap();
    let srs = srs_sequence(&SrsConfig::default()).unwrap();
    let imp = ImpairmentModel::random(scenario.ula.num_elements, 23);
    let frames = reference_frames(&scenario.ula, &srs, 10, 30.0, &imp, 23, 20.0).unwrap();
    let table = estimate_offsets(&frames, &srs).unwrap();

    let mut cfg = CampaignConfig::new(ScenarioSpec::Preset("canyon_o3".into()), 91);
    cfg.reflection_orders = vec![0, 3];
    cfg.num_repetitions = 2;
    cfg.impairments = ImpairmentSpec::Random { seed: 23 };
    let traj = Trajectory::straight_line([4.0, 5.0, 1.5], [80.0, -5.0, 1.5], 40);

    let csv_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let records = pool.install(|| run_campaign(&cfg, &traj, Some(&table)).unwrap());
        let mut buf = Vec::new();
        write_records(&records, &mut buf).unwrap();
        buf
    };
    let one = csv_with(1);
    assert_eq!(one, csv_with(4));

    let parsed = read_records(one.as_slice()).unwrap();
    assert_eq!(parsed.len(), 40 * 2 * 2 * 2);
    assert!(parsed.iter().any(|r| r.order == 3 && r.method == Method::Music));
}

#[test]
fn cir_export_round_trips_along_a_trajectory() {
    let scenario = Scenario::preset("canyon_o5").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let traj = Trajectory::straight_line([10.0, -6.0, 1.5], [150.0, 6.0, 1.5], 12);
    for step in &traj.steps {
        let paths = trace_paths(&scenario, step.position).unwrap();
        let meta = CirMetadata {
            carrier_hz: scenario.ula.carrier_hz,
            step: step.k as usize,
            delta_z_m: scenario.ula.origin[2] - step.position[2],
        };
        let file = write_cir(dir.path(), &paths, &meta).unwrap();
        let (meta_back, paths_back) = read_cir(&file).unwrap();
        assert_eq!(meta_back, meta);
        assert_eq!(paths_back, paths);
    }
}
