mod common;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use cardiotwin::activation::fim::{resweep_decrease, solve_eikonal_with_tol, DEFAULT_TOL_MS};
use cardiotwin::activation::{build_velocity_tensor, default_root_set, solve_eikonal, ConductionParams, Root, RootSet};
use cardiotwin::geometry::aha::aha_segment;
use cardiotwin::geometry::coords::Ventricle;
use cardiotwin::geometry::fibers::{FiberField, Triad};
use cardiotwin::geometry::mesh::{Mesh, SurfaceTag};
use cardiotwin::infarct::{Tissue, TissueMap};
use nalgebra::{Matrix3, Rotation3, SymmetricEigen, Vector3};
use proptest::prelude::*;

/// Shortest paths over mesh edges, each edge weighted by its travel time
/// under the slowest incident element metric.
fn dijkstra(mesh: &Mesh, tensors: &[Matrix3<f64>], source: usize) -> Vec<f64> {
    let n = mesh.node_count();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (t, tet) in mesh.tets.iter().enumerate() {
        let m = tensors[t].try_inverse().unwrap();
        for a in 0..4 {
            for b in a + 1..4 {
                let (i, j) = (tet[a] as usize, tet[b] as usize);
                let d = Vector3::from(mesh.nodes[i]) - Vector3::from(mesh.nodes[j]);
                let w = d.dot(&(m * d)).sqrt() * 1000.0;
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((bits, i))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[i] {
            continue;
        }
        for &(j, w) in &adj[i] {
            let nd = d + w;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Reverse((nd.to_bits(), j)));
            }
        }
    }
    dist
}

fn rotated_fibers(mesh: &Mesh, axis: Vector3<f64>, angle: f64) -> FiberField {
    let r = Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
    let m = r.matrix();
    let triad = Triad { f: m.column(0).into(), s: m.column(1).into(), n: m.column(2).into() };
    FiberField { triads: vec![triad; mesh.tet_count()], fallback: vec![] }
}

fn sorted_eigs(m: &Matrix3<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = SymmetricEigen::new(*m).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn anisotropic_block_against_dijkstra() {
    let mesh = Mesh::structured_box([0.0; 3], [20, 14, 7], 0.15);
    let fibers = common::aligned_fibers(&mesh);
    let v = build_velocity_tensor(&mesh, &fibers, &TissueMap::healthy(mesh.node_count()), &ConductionParams::default())
        .unwrap();
    let map = solve_eikonal(&mesh, &v, &common::single_root(0)).unwrap();
    let oracle = dijkstra(&mesh, &v, 0);
    // uniform medium: the continuous solution is the metric distance to the root
    let m = v[0].try_inverse().unwrap();
    for i in 0..mesh.node_count() {
        let d = Vector3::from(mesh.nodes[i]);
        let exact = d.dot(&(m * d)).sqrt() * 1000.0;
        assert!(map.t_a[i] <= oracle[i] + 0.5, "node {i}: {} > {}", map.t_a[i], oracle[i]);
        assert!(oracle[i] >= exact - 1e-9, "node {i}: graph path {} shorter than {exact}", oracle[i]);
        assert!((map.t_a[i] - exact).abs() < 2.0, "node {i}: {} vs exact {exact}", map.t_a[i]);
    }
}

#[test]
fn free_wall_breaks_through_before_the_lateral_base() {
    let f = common::coarse();
    let roots = default_root_set(&f.coords).unwrap();
    assert_eq!(roots.roots.len(), 5);
    for r in &roots.roots {
        assert!(f.coords.tm[r.node] > 0.9);
        assert_eq!(r.time, 0.0);
    }
    let v = build_velocity_tensor(&f.mesh, &f.fibers, &TissueMap::healthy(f.mesh.node_count()), &ConductionParams::default())
        .unwrap();
    let map = solve_eikonal(&f.mesh, &v, &roots).unwrap();
    assert!(map.unreached().is_empty());
    let lv_epi = |i: usize| f.coords.tv[i] == Ventricle::Lv && f.mesh.surface[i].contains(SurfaceTag::EPI);
    let free_wall = (0..f.mesh.node_count())
        .filter(|&i| lv_epi(i) && matches!(aha_segment(&f.coords.at(i)), Ok(10 | 11 | 12)))
        .map(|i| map.t_a[i])
        .fold(f64::INFINITY, f64::min);
    let basal_lateral = (0..f.mesh.node_count())
        .filter(|&i| lv_epi(i) && f.coords.ab[i] > 0.9 && matches!(aha_segment(&f.coords.at(i)), Ok(5 | 6)))
        .max_by(|&a, &b| f.coords.ab[a].total_cmp(&f.coords.ab[b]))
        .unwrap();
    assert!(free_wall < map.t_a[basal_lateral], "breakthrough {free_wall} vs base {}", map.t_a[basal_lateral]);
}

prop_compose! {
    fn conduction()(vf in 30.0f64..90.0, rs in 0.5f64..1.0, rn in 0.5f64..1.0, scar in 0.05f64..0.5, bz in 0.0f64..1.0)
        -> ConductionParams {
        let v_sheet = vf * rs;
        ConductionParams { v_fiber: vf, v_sheet, v_normal: v_sheet * rn, scar_scale: scar, bz_scale: scar + bz * (1.0 - scar) }
    }
}

fn blob_tissue(mesh: &Mesh, centre: [f64; 3], r_scar: f64, r_bz: f64) -> TissueMap {
    let labels = mesh
        .nodes
        .iter()
        .map(|p| {
            let d = common::dist(p, &centre);
            if d < r_scar {
                Tissue::Scar
            } else if d < r_bz {
                Tissue::BorderZone
            } else {
                Tissue::Normal
            }
        })
        .collect();
    TissueMap { labels }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tensor_eigenvalues_follow_tissue(
        p in conduction(),
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in 0.0f64..6.28,
        labels in proptest::collection::vec(0u8..3, 4),
    ) {
        let mesh = Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], vec![[0, 1, 2, 3]], 1.0);
        let fibers = rotated_fibers(&mesh, Vector3::new(ax, ay, az), angle);
        let tissue = TissueMap {
            labels: labels.iter().map(|&l| [Tissue::Normal, Tissue::Scar, Tissue::BorderZone][l as usize]).collect(),
        };
        let v = build_velocity_tensor(&mesh, &fibers, &tissue, &p).unwrap();
        let el = cardiotwin::activation::tensor::element_tissue(&mesh.tets[0], &tissue);
        let s = p.scale(el);
        let want = {
            let mut w = vec![(p.v_normal * s).powi(2), (p.v_sheet * s).powi(2), (p.v_fiber * s).powi(2)];
            w.sort_by(f64::total_cmp);
            w
        };
        for (a, b) in sorted_eigs(&v[0]).iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-9 * b);
        }
        let f = fibers.triads[0].f;
        prop_assert!(((f.transpose() * v[0] * f)[0] - (p.v_fiber * s).powi(2)).abs() <= 1e-9 * p.v_fiber.powi(2));
    }

    #[test]
    fn solver_invariants(
        p in conduction(),
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0, angle in 0.0f64..6.28,
        root_a in 0usize..500, root_b in 0usize..500, onset in 0.0f64..5.0,
        c in 0.25f64..4.0,
        cx in 0.0f64..1.5, cy in 0.0f64..1.2, r_scar in 0.1f64..0.4,
    ) {
        let mesh = Mesh::structured_box([0.0; 3], [10, 8, 4], 0.15);
        let n = mesh.node_count();
        let fibers = rotated_fibers(&mesh, Vector3::new(ax, ay, az), angle);
        let healthy = TissueMap::healthy(n);
        let tol = DEFAULT_TOL_MS;
        let roots = RootSet { roots: vec![Root { node: root_a % n, time: 0.0 }, Root { node: root_b % n, time: onset }] };
        let v = build_velocity_tensor(&mesh, &fibers, &healthy, &p).unwrap();
        let map = solve_eikonal_with_tol(&mesh, &v, &roots, tol).unwrap();
        prop_assert!(map.unreached().is_empty());
        for r in &roots.roots {
            if r.node != roots.roots[0].node || r.time == 0.0 {
                prop_assert!(map.t_a[r.node] <= r.time);
            }
        }
        prop_assert_eq!(map.t_a[root_a % n], 0.0);

        // another full sweep changes nothing beyond the tolerance
        prop_assert!(resweep_decrease(&mesh, &v, &roots, &map).unwrap() < tol);

        // scaling every velocity by c divides activation times by c
        let single = common::single_root(root_a % n);
        let base = solve_eikonal_with_tol(&mesh, &v, &single, tol).unwrap();
        let scaled_p = ConductionParams { v_fiber: p.v_fiber * c, v_sheet: p.v_sheet * c, v_normal: p.v_normal * c, ..p.clone() };
        let vs = build_velocity_tensor(&mesh, &fibers, &healthy, &scaled_p).unwrap();
        let scaled = solve_eikonal_with_tol(&mesh, &vs, &single, tol).unwrap();
        for i in 0..n {
            prop_assert!((scaled.t_a[i] * c - base.t_a[i]).abs() <= 2.0 * tol * c.max(1.0),
                "node {}: {} vs {}", i, scaled.t_a[i] * c, base.t_a[i]);
        }

        // slower tissue never speeds arrival
        let tissue = blob_tissue(&mesh, [cx, cy, 0.3], r_scar, r_scar + 0.2);
        let vt = build_velocity_tensor(&mesh, &fibers, &tissue, &p).unwrap();
        let slowed = solve_eikonal_with_tol(&mesh, &vt, &roots, tol).unwrap();
        for i in 0..n {
            prop_assert!(slowed.t_a[i] >= map.t_a[i] - tol, "node {}: {} < {}", i, slowed.t_a[i], map.t_a[i]);
        }
    }
}

