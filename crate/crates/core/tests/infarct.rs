mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use cardiotwin::geometry::aha::aha_segment;
use cardiotwin::geometry::mesh::Mesh;
use cardiotwin::infarct::catalog::{scenario_catalog, Location, Transmurality, HEALTHY};
use cardiotwin::infarct::noise::{correlated_noise_field, correlogram_at};
use cardiotwin::infarct::{grow_border_zone, scenario_tissue, synthesize_scar, ScarParams, Tissue, TissueMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn smooth_noise() -> &'static Vec<f64> {
    static N: OnceLock<Vec<f64>> = OnceLock::new();
    N.get_or_init(|| correlated_noise_field(&common::coarse().mesh, 0.5, 3).unwrap())
}

fn params(tau_base: f64, lambda: f64, region: &[u8]) -> ScarParams {
    ScarParams { tau_base, lambda, sigma: 0.5, bz_radius: 0.2, region: region.iter().copied().collect(), seed: 0 }
}

fn brute_force_bz(nodes: &[[f64; 3]], scar: &TissueMap, r: f64) -> TissueMap {
    let scar_nodes: Vec<usize> = scar.nodes(Tissue::Scar).collect();
    let labels = (0..nodes.len())
        .map(|i| {
            if scar.labels[i] == Tissue::Scar {
                Tissue::Scar
            } else if r > 0.0 && scar_nodes.iter().any(|&s| common::dist(&nodes[i], &nodes[s]) <= r) {
                Tissue::BorderZone
            } else {
                Tissue::Normal
            }
        })
        .collect();
    TissueMap { labels }
}

#[test]
fn correlation_decays_with_lag() {
    let f = common::coarse();
    let noise = smooth_noise();
    let near = correlogram_at(&f.mesh, noise, 0.5, 0.05).unwrap();
    let far = correlogram_at(&f.mesh, noise, 2.0, 0.05).unwrap();
    assert!(near > far, "correlation at sigma {near} vs 4 sigma {far}");
    assert_eq!(&correlated_noise_field(&f.mesh, 0.5, 3).unwrap(), noise);
}

#[test]
fn scar_shrinks_as_threshold_rises() {
    let f = common::coarse();
    let region = Location::ExtAnterior.segments();
    let counts: Vec<usize> = [0.3, 0.5, 0.7]
        .iter()
        .map(|&tau| synthesize_scar(smooth_noise(), &f.coords, &params(tau, 0.05, region)).unwrap().count(Tissue::Scar))
        .collect();
    assert!(counts[0] >= counts[1] && counts[1] >= counts[2], "{counts:?}");
    assert!(counts[0] > counts[2], "{counts:?}");
}

#[test]
fn healthy_scenario_has_no_scar() {
    let catalog = scenario_catalog();
    assert_eq!(catalog.len(), 17);
    let healthy = catalog.iter().find(|s| s.name == HEALTHY).unwrap();
    assert!(healthy.is_healthy());
    for s in catalog.iter().filter(|s| !s.is_healthy()) {
        let p = s.scar.as_ref().unwrap();
        let expected = match s.transmurality.unwrap() {
            Transmurality::Transmural => 0.05,
            Transmurality::Subendocardial => 0.6,
        };
        assert_eq!(p.lambda, expected, "{}", s.name);
        assert_eq!(p.bz_radius, 0.2);
    }
}

/// Every catalog scenario on one shared noise field: labels partition the
/// nodes, scar stays in its region, subendocardial scars sit near the
/// endocardium and the small lateral scar is smaller than the large one.
#[test]
fn catalog_scenarios_on_shared_noise() {
    let f = common::coarse();
    let noise = smooth_noise();
    let mut sizes = std::collections::BTreeMap::new();
    for s in scenario_catalog().iter().filter(|s| !s.is_healthy()) {
        let p = s.scar.as_ref().unwrap();
        let (tissue, degenerate) = scenario_tissue(&f.mesh, &f.coords, noise, p).unwrap();
        assert!(!degenerate, "{}", s.name);
        sizes.insert(s.name.clone(), tissue.count(Tissue::Scar));
        for i in tissue.nodes(Tissue::Scar) {
            let seg = aha_segment(&f.coords.at(i)).unwrap();
            assert!(p.region.contains(&seg), "{} scar node {i} in segment {seg}", s.name);
        }
        if s.transmurality == Some(Transmurality::Subendocardial) {
            let scar: Vec<usize> = tissue.nodes(Tissue::Scar).collect();
            let inner = scar.iter().filter(|&&i| f.coords.tm[i] > 0.5).count();
            assert!(inner > scar.len() - inner, "{}: {inner} of {}", s.name, scar.len());
        }
    }
    for tr in ["subendocardial", "transmural"] {
        assert!(sizes[&format!("{tr}_lateral_small")] < sizes[&format!("{tr}_lateral_large")]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn border_zone_matches_brute_force(
        seed in any::<u64>(),
        n in 20usize..500,
        scar_fraction in 0.0f64..0.3,
        radius in 0.0f64..0.6,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<[f64; 3]> = (0..n).map(|_| [rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0, rng.random::<f64>()]).collect();
        let labels = (0..n).map(|_| if rng.random::<f64>() < scar_fraction { Tissue::Scar } else { Tissue::Normal }).collect();
        let scar = TissueMap { labels };
        let mesh = Mesh::new(nodes.clone(), vec![], 0.1);
        let grown = grow_border_zone(&mesh, &scar, radius);
        prop_assert_eq!(&grown, &brute_force_bz(&nodes, &scar, radius));
        for i in 0..n {
            prop_assert_eq!(scar.labels[i] == Tissue::Scar, grown.labels[i] == Tissue::Scar);
        }
    }

    #[test]
    fn thresholding_semantics(
        seed in any::<u64>(),
        tau in 0.1f64..0.9,
        dtau in 0.0f64..0.3,
        lambda in 0.0f64..1.0,
        loc in 0usize..8,
        bz_radius in 0.0f64..0.4,
    ) {
        let f = common::coarse();
        let noise = common::uniform_field(f.coords.len(), seed);
        let region = Location::ALL[loc].segments();
        let p = params(tau, lambda, region);
        let scar = synthesize_scar(&noise, &f.coords, &p).unwrap();
        let stricter = synthesize_scar(&noise, &f.coords, &params(tau + dtau, lambda, region)).unwrap();
        let plain = synthesize_scar(&noise, &f.coords, &params(tau, 0.0, region)).unwrap();
        let allowed: BTreeSet<u8> = region.iter().copied().collect();
        for i in 0..noise.len() {
            let c = f.coords.at(i);
            let seg = aha_segment(&c).ok();
            let in_region = seg.is_some_and(|s| allowed.contains(&s));
            let expected = in_region && noise[i] > tau + lambda * (1.0 - c.tm);
            prop_assert_eq!(scar.labels[i] == Tissue::Scar, expected);
            prop_assert_eq!(plain.labels[i] == Tissue::Scar, in_region && noise[i] > tau);
            if stricter.labels[i] == Tissue::Scar {
                prop_assert_eq!(scar.labels[i], Tissue::Scar);
            }
            if c.tm == 1.0 {
                prop_assert_eq!(p.threshold(c.tm), tau);
            }
        }

        let mut p_bz = p.clone();
        p_bz.bz_radius = bz_radius;
        let (tissue, degenerate) = scenario_tissue(&f.mesh, &f.coords, &noise, &p_bz).unwrap();
        prop_assert_eq!(degenerate, scar.count(Tissue::Scar) == 0);
        prop_assert_eq!(
            tissue.count(Tissue::Normal) + tissue.count(Tissue::Scar) + tissue.count(Tissue::BorderZone),
            noise.len()
        );
        let scar_nodes: Vec<usize> = tissue.nodes(Tissue::Scar).collect();
        for b in tissue.nodes(Tissue::BorderZone) {
            prop_assert!(scar_nodes.iter().any(|&s| common::dist(&f.mesh.nodes[b], &f.mesh.nodes[s]) <= bz_radius));
        }
        let (again, _) = scenario_tissue(&f.mesh, &f.coords, &noise, &p_bz).unwrap();
        prop_assert_eq!(again, tissue);
    }

    #[test]
    fn subendocardial_scars_lean_endocardial(seed in any::<u64>(), loc in 0usize..8) {
        let f = common::coarse();
        let noise = common::uniform_field(f.coords.len(), seed);
        let scar = synthesize_scar(&noise, &f.coords, &params(0.5, 0.6, Location::ALL[loc].segments())).unwrap();
        let nodes: Vec<usize> = scar.nodes(Tissue::Scar).collect();
        prop_assume!(!nodes.is_empty());
        let inner = nodes.iter().filter(|&&i| f.coords.tm[i] > 0.5).count();
        prop_assert!(inner > nodes.len() - inner);
    }
}
