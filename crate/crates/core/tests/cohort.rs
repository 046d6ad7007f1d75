mod common;

use std::sync::OnceLock;

use cardiotwin::analysis::features::extract_features;
use cardiotwin::cohort::manifest::{generate_cohort, Cohort, ManifestRow, STATUS_OK};
use cardiotwin::cohort::pipeline::Heart;
use cardiotwin::cohort::sample::{CohortSample, SampleMeta, X_COLUMNS};
use cardiotwin::cohort::sampling::{min_pairwise_distance, subsample_nodes};
use cardiotwin::config::RunConfig;
use cardiotwin::ecg::LEAD_NAMES;
use cardiotwin::geometry::generate::{generate_idealized_biventricle, WallParams};
use cardiotwin::infarct::catalog::{find_scenario, scenario_catalog};
use cardiotwin::io::Annotated;
use cardiotwin::Error;
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn heart() -> &'static Heart {
    static H: OnceLock<Heart> = OnceLock::new();
    H.get_or_init(|| {
        let f = common::coarse();
        Heart::prepare("coarse", Annotated::new(f.mesh.clone()), &RunConfig::default()).unwrap()
    })
}

#[test]
fn farthest_point_sampling_on_the_heart() {
    let h = heart();
    let nodes = h.sample_nodes().unwrap();
    assert_eq!(nodes.len(), 4096);
    assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(nodes, h.sample_nodes().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let random = sample(&mut rng, h.mesh.node_count(), 4096).into_vec();
    assert!(min_pairwise_distance(&h.mesh, &nodes) > min_pairwise_distance(&h.mesh, &random));
    assert!(matches!(subsample_nodes(&h.mesh, h.mesh.node_count() + 1, 1), Err(Error::Validation(_))));
}

#[test]
fn scenario_samples_carry_geometry_labels_and_leads() {
    let h = heart();
    let sampled = h.sample_nodes().unwrap();
    let catalog = scenario_catalog();
    for name in ["healthy", "transmural_ext_anterior"] {
        let s = find_scenario(&catalog, name).unwrap();
        let run = h.run_scenario(&s, 42).unwrap();
        let sample = h.assemble(&s, 42, &run, &sampled);
        sample.check_schema(4096, 512).unwrap();
        assert_eq!(sample.meta.leads, LEAD_NAMES);
        assert_eq!(sample.x.len(), 4096 * X_COLUMNS);
        for (j, &i) in sampled.iter().enumerate() {
            let row = &sample.x[j * X_COLUMNS..(j + 1) * X_COLUMNS];
            let p = h.mesh.nodes[i];
            let c = h.coords.row(i);
            let want = [p[0], p[1], p[2], c[0], c[1], c[2], c[3]].map(|v| v as f32);
            assert_eq!(row, &want[..]);
            assert_eq!(sample.y[j], run.tissue.labels[i] as u8);
        }
        let one_hot = sample.y_one_hot();
        if s.is_healthy() {
            assert!(one_hot.iter().all(|r| r[1] == 0 && r[2] == 0));
        } else {
            assert!(one_hot.iter().any(|r| r[1] == 1));
        }
        for k in 0..8 {
            let lead = sample.lead(k);
            for (t, v) in lead.iter().enumerate() {
                assert_eq!(*v, run.ecg.leads[k][t] as f32 as f64);
            }
        }

        let again = h.run_scenario(&s, 42).unwrap();
        let bytes = h.assemble(&s, 42, &again, &sampled).to_bytes().unwrap();
        assert_eq!(bytes, sample.to_bytes().unwrap(), "{name} is not reproducible");
        assert_eq!(CohortSample::from_bytes(&bytes).unwrap(), sample);

        if s.is_healthy() {
            let f = extract_features(&run.ecg).unwrap();
            assert!(f.qt_interval_ms >= f.qrs_duration_ms);
            // circular shift by 20 ms
            let k = (20.0 / run.ecg.sample_period).round() as usize;
            let mut shifted = run.ecg.clone();
            for l in &mut shifted.leads {
                l.rotate_right(k);
            }
            let g = extract_features(&shifted).unwrap();
            assert!((g.qrs_duration_ms - f.qrs_duration_ms).abs() < 4.0, "{} vs {}", g.qrs_duration_ms, f.qrs_duration_ms);
            // positive R peak inside the QRS, V1..V4; printed, not asserted
            let (on, off) = ((f.qrs_onset_ms / run.ecg.sample_period) as usize, (f.qrs_offset_ms / run.ecg.sample_period) as usize);
            let r: Vec<f64> = (2..6).map(|k| run.ecg.leads[k][on..=off].iter().copied().fold(0.0, f64::max)).collect();
            println!("healthy R peak V1..V4: {r:?} (increasing: {})", r.windows(2).all(|w| w[1] > w[0]));
        }
    }
}

/// Three small meshes, one unreadable file; 17 samples per good mesh and
/// failed rows for the bad one.
#[test]
fn cohort_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let meshes_dir = dir.path().join("meshes");
    std::fs::create_dir_all(&meshes_dir).unwrap();
    let mut paths = Vec::new();
    for (k, seed) in [3u64, 4, 5].iter().enumerate() {
        let mesh = generate_idealized_biventricle(&WallParams::default(), 0.45, *seed).unwrap();
        let p = meshes_dir.join(format!("m{k}.ctmesh"));
        Annotated::new(mesh).write(&p).unwrap();
        paths.push(p);
    }
    let mut cfg = RunConfig::default();
    cfg.cohort.nodes = 256;
    cfg.mesh.edge = 0.45;

    let out = dir.path().join("cohort");
    let summary = generate_cohort(&paths, &out, &cfg, Some(2)).unwrap();
    assert_eq!(summary.samples.len(), 51);
    assert_eq!(summary.replicates.len(), 24);
    let cohort = Cohort::open(&out).unwrap();
    assert_eq!(cohort.mesh_ids(), vec!["m0", "m1", "m2"]);
    for id in cohort.mesh_ids() {
        assert_eq!(cohort.samples.iter().filter(|r: &&ManifestRow| r.mesh_id == id).count(), 17);
    }
    assert!(cohort.samples.iter().all(|r| r.status == STATUS_OK));
    assert_eq!(cohort.validate().unwrap(), 51 * 2 + 24);
    for r in &cohort.samples {
        let s = CohortSample::read(&out.join(&r.file)).unwrap();
        s.check_schema(256, 512).unwrap();
        assert_eq!(s.meta.scenario, r.scenario);
        assert_eq!(s.meta.mesh_id, r.mesh_id);
    }

    // tampering is caught by the checksums
    let victim = out.join(&cohort.samples[3].file);
    let mut bytes = std::fs::read(&victim).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 1;
    std::fs::write(&victim, bytes).unwrap();
    assert!(Cohort::open(&out).unwrap().validate().is_err());

    // an unreadable mesh fails its rows but the manifest is still written
    let bad = meshes_dir.join("broken.ctmesh");
    std::fs::write(&bad, b"not a mesh").unwrap();
    let out2 = dir.path().join("partial");
    let err = generate_cohort(&[paths[0].clone(), bad], &out2, &cfg, Some(1)).unwrap_err();
    assert!(matches!(err, Error::Validation(_)));
    let partial = Cohort::open(&out2).unwrap();
    assert_eq!(partial.samples.len(), 34);
    assert_eq!(partial.samples.iter().filter(|r| r.status.starts_with("failed")).count(), 17);
}

fn meta(nodes: usize, samples: usize) -> SampleMeta {
    SampleMeta {
        mesh_id: "m".into(),
        scenario: "healthy".into(),
        transmurality: "none".into(),
        seed: 1,
        nodes,
        samples,
        sample_period_ms: 1.0,
        leads: LEAD_NAMES.iter().map(|s| s.to_string()).collect(),
        node_sampling: "farthest_point".into(),
        normalization: "global_max_abs".into(),
        degenerate: false,
        config: "{}".into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sample_files_round_trip(
        nodes in 1usize..64,
        samples in 1usize..32,
        seed in any::<u64>(),
        bad_label in proptest::option::of(3u8..255),
    ) {
        let r = common::uniform_field(nodes * X_COLUMNS + samples * 8 + nodes, seed);
        let x: Vec<f32> = r[..nodes * X_COLUMNS].iter().map(|&v| v as f32).collect();
        let s: Vec<f32> = r[nodes * X_COLUMNS..nodes * X_COLUMNS + samples * 8].iter().map(|&v| v as f32).collect();
        let mut y: Vec<u8> = r[nodes * X_COLUMNS + samples * 8..].iter().map(|&v| (v * 3.0) as u8).collect();
        let sample = CohortSample { meta: meta(nodes, samples), x, s, y: y.clone() };
        let bytes = sample.to_bytes().unwrap();
        let back = CohortSample::from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &sample);
        prop_assert!(back.check_schema(nodes, samples).is_ok());
        prop_assert!(back.y_one_hot().iter().all(|r| r.iter().sum::<u8>() == 1));
        prop_assert!(back.check_schema(nodes + 1, samples).is_err());
        prop_assert!(CohortSample::from_bytes(&bytes[..bytes.len() - 1]).is_err());

        if let Some(b) = bad_label {
            y[0] = b;
            let broken = CohortSample { y, ..sample };
            prop_assert!(broken.check_schema(nodes, samples).is_err());
        }
    }
}
