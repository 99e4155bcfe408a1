use std::f64::consts::TAU;

use divpath::coords::{compute_coordinates, BasisKind, BoundaryPartition};
use divpath::divergence::{ConvexGenerator, DistanceFn};
use divpath::geometry::{dist, generate_dense_mesh, load_domain, TriMesh};
use divpath::planner::{distance_field, path_tree, stuck_vertices};
use divpath::routing::{distance_to_mesh_boundary, sample_sites};

const SPOKES: usize = 48;
const RINGS: usize = 20;

fn ring_vertex(i: usize, j: usize) -> usize {
    1 + (i - 1) * SPOKES + j % SPOKES
}

/// Polar mesh of the unit disk that maps onto itself under rotation by
/// `TAU / SPOKES`.
fn polar_disk() -> TriMesh {
    let mut vertices = vec![[0.0, 0.0]];
    for i in 1..=RINGS {
        let r = i as f64 / RINGS as f64;
        for j in 0..SPOKES {
            let t = TAU * j as f64 / SPOKES as f64;
            vertices.push([r * t.cos(), r * t.sin()]);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..SPOKES {
        triangles.push([0, ring_vertex(1, j), ring_vertex(1, j + 1)]);
        for i in 1..RINGS {
            let (a, b) = (ring_vertex(i, j), ring_vertex(i, j + 1));
            let (d, c) = (ring_vertex(i + 1, j), ring_vertex(i + 1, j + 1));
            triangles.push([a, d, c]);
            triangles.push([a, c, b]);
        }
    }
    TriMesh::new(vertices, triangles).unwrap()
}

#[test]
fn centered_field_is_rotation_invariant() {
    let mesh = polar_disk();
    for n in [6, 8, 12] {
        let part = BoundaryPartition::uniform(&mesh, &[n], BasisKind::Box).unwrap();
        let coords = compute_coordinates(&mesh, &part).unwrap();
        let step = SPOKES / n;
        for g in [
            DistanceFn::from(ConvexGenerator::kl()),
            ConvexGenerator::hellinger().into(),
            DistanceFn::L2,
        ] {
            let field = distance_field(&mesh, &coords, 0, &g).unwrap();
            let mut worst = 0.0f64;
            for i in 1..RINGS {
                for j in 0..SPOKES {
                    let (a, b) = (
                        field.value(ring_vertex(i, j)),
                        field.value(ring_vertex(i, j + step)),
                    );
                    worst = worst.max((a - b).abs());
                }
            }
            assert!(
                worst < 1e-6,
                "n = {n}, {}: rotation changes the field by {worst:.2e}",
                g.name()
            );
            if g.name() == "kl" {
                let tree = path_tree(&mesh, &field);
                assert!(stuck_vertices(&mesh, &field, &tree).is_empty());
            }
        }
    }
}

#[test]
fn sites_keep_clear_of_a_non_convex_boundary() {
    let domain = load_domain(
        "outer 9\n0 0\n3 0\n3.2 1.4\n2.4 2.6\n2.2 1.0\n1.2 1.1\n1.5 2.4\n0.6 2.8\n-0.2 1.6\n",
    )
    .unwrap();
    let mesh = generate_dense_mesh(&domain, 0.04).unwrap();
    let clearance = mesh.edge_length_stats().1;
    let sites = sample_sites(&mesh, 200, 21, None).unwrap();
    assert_eq!(sites.len(), 200);
    let separation = 0.7 * (domain.area() / 200.0).sqrt();
    for (i, &p) in sites.positions().iter().enumerate() {
        assert!(domain.distance_to_boundary(p) >= clearance * (1.0 - 1e-9));
        assert!(distance_to_mesh_boundary(&mesh, p) >= clearance);
        for &q in &sites.positions()[..i] {
            assert!(dist(p, q) >= separation * (1.0 - 1e-9));
        }
    }
}
