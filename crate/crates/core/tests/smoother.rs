use std::f64::consts::FRAC_PI_4;

use crossfield::field::{
    apply_boundary_file, normal_frame, singularity_indicator, smooth, smooth_step, BoundaryMode, CrossField,
    NotConverged, Smoothed, SmootherConfig, StopRule, DEFAULT_ETA_BAND,
};
use crossfield::sampling::rng;
use crossfield::vtk::{export_vtk, read_point_array};
use crossfield::{
    approx_project, boundary_conditions, cross_distance, cube, energy, unit_ball, CrossTensor9, FieldError, Graph,
    Rotation, TetMesh, VertexGraph,
};
use nalgebra::Vector3;

fn spin(t: f64) -> Rotation {
    Rotation::about_axis(Vector3::z(), t)
}

fn cross(r: &Rotation) -> CrossTensor9 {
    CrossTensor9::from_rotation(r)
}

fn outcome(r: Result<Smoothed, NotConverged>) -> Smoothed {
    match r {
        Ok(s) => s,
        Err(NotConverged(s)) => *s,
    }
}

/// Field on a path graph with fixed ends.
fn path_field(ends: (CrossTensor9, CrossTensor9), n: usize) -> (Graph, CrossField) {
    let g = Graph::path(n);
    let mut f = CrossField::uniform(n, CrossTensor9::reference());
    f.tensors[0] = ends.0;
    f.tensors[n - 1] = ends.1;
    f.fixed[0] = true;
    f.fixed[n - 1] = true;
    (g, f)
}

#[test]
fn energy_examples() {
    let g = Graph::path(4);
    let uniform = CrossField::uniform(4, cross(&spin(0.3)));
    assert_eq!(energy(&g, &uniform), 0.0);

    let (a, b) = (cross(&spin(0.0)), cross(&Rotation::about_axis(Vector3::x(), 0.2)));
    let mut f = CrossField::uniform(2, a);
    f.tensors[1] = b;
    let d = a.frobenius_distance(&b);
    assert!((energy(&Graph::path(2), &f) - 0.5 * d * d).abs() < 1e-15);

    // Two disconnected copies.
    let two = Graph::new(4, [[0, 1], [2, 3]]).unwrap();
    let mut f2 = CrossField::uniform(4, a);
    f2.tensors[1] = b;
    f2.tensors[3] = b;
    assert!((energy(&two, &f2) - 2.0 * energy(&Graph::path(2), &f)).abs() < 1e-15);
}

#[test]
fn uniform_field_is_a_fixed_point() {
    let m = unit_ball(3);
    let mut f = CrossField::uniform(
        m.vertex_count(),
        cross(&Rotation::about_axis(Vector3::new(1.0, 2.0, 3.0), 0.7)),
    );
    f.fixed[0] = true;
    let next = smooth_step(&m, &f, &SmootherConfig::default());
    for (a, b) in next.tensors.iter().zip(&f.tensors) {
        assert!(a.frobenius_distance(b) < 1e-12);
    }
}

#[test]
fn free_vertex_with_equal_neighbors_takes_their_tensor() {
    let g = Graph::new(4, [[0, 3], [1, 3], [2, 3]]).unwrap();
    let target = cross(&Rotation::about_axis(Vector3::new(0.3, -1.0, 0.5), 1.1));
    let mut f = CrossField::uniform(4, target);
    f.tensors[3] = CrossTensor9::reference();
    f.fixed = vec![true, true, true, false];
    let next = smooth_step(&g, &f, &SmootherConfig::default());
    assert!(next.tensors[3].frobenius_distance(&target) < 1e-12);
}

#[test]
fn three_vertex_path_converges_to_the_energy_minimizer() {
    let (g, f) = path_field((cross(&spin(0.0)), cross(&spin(0.2))), 3);
    // One-parameter oracle: minimize E over spins of the middle vertex.
    let e = |t: f64| {
        let m = cross(&spin(t));
        m.frobenius_distance(&f.tensors[0]).powi(2) + m.frobenius_distance(&f.tensors[2]).powi(2)
    };
    let (mut lo, mut hi) = (0.0, 0.2);
    for _ in 0..200 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if e(a) < e(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let oracle = 0.5 * (lo + hi);
    assert!((oracle - 0.1).abs() < 1e-8);

    let config = SmootherConfig {
        max_iterations: 50,
        ..SmootherConfig::default()
    };
    let out = outcome(smooth(&g, &f, &config));
    assert!(out.iterations <= 50);
    let mid = approx_project(&out.field.tensors[1]).unwrap().rotation;
    assert!(cross_distance(&mid, &spin(oracle)) < 1e-6);
}

#[test]
fn fixed_vertices_are_bitwise_unchanged() {
    let m = unit_ball(3);
    let f = boundary_conditions(&m, &BoundaryMode::NormalAligned).unwrap();
    let config = SmootherConfig {
        max_iterations: 20,
        ..SmootherConfig::default()
    };
    let out = outcome(smooth(&m, &f, &config));
    for v in 0..m.vertex_count() {
        if f.fixed[v] {
            assert_eq!(
                out.field.tensors[v].0.map(f64::to_bits),
                f.tensors[v].0.map(f64::to_bits)
            );
        }
    }
}

#[test]
fn smoothing_is_deterministic() {
    let m = unit_ball(4);
    let f = boundary_conditions(&m, &BoundaryMode::NormalAligned).unwrap();
    let config = SmootherConfig {
        max_iterations: 30,
        ..SmootherConfig::default()
    };
    let a = outcome(smooth(&m, &f, &config));
    let b = outcome(smooth(&m, &f, &config));
    assert_eq!(a.field, b.field);
    let ea: Vec<f64> = a.log.entries.iter().map(|e| e.energy).collect();
    let eb: Vec<f64> = b.log.entries.iter().map(|e| e.energy).collect();
    assert_eq!(ea, eb);
}

#[test]
fn smoothing_commutes_with_global_rotation() {
    let m = unit_ball(4);
    let f = boundary_conditions(&m, &BoundaryMode::NormalAligned).unwrap();
    let s = Rotation::random(&mut rng(41));
    let config = SmootherConfig {
        max_iterations: 300,
        stop_rule: StopRule::Residual,
        energy_reduction_target: 1e-10,
        ..SmootherConfig::default()
    };
    let base = outcome(smooth(&m, &f, &config));
    let turned = outcome(smooth(&m, &f.rotated(&s), &config));
    let mut worst = 0.0f64;
    for (a, b) in base.field.tensors.iter().zip(&turned.field.tensors) {
        worst = worst.max(a.rotated(&s).frobenius_distance(b));
    }
    assert!(worst < 1e-6, "max deviation {worst:e}");
}

#[test]
fn energy_stays_finite_and_stopping_rule_holds() {
    let m = unit_ball(4);
    let f = boundary_conditions(&m, &BoundaryMode::NormalAligned).unwrap();
    let config = SmootherConfig {
        max_iterations: 400,
        stop_rule: StopRule::Residual,
        energy_reduction_target: 1e-5,
        ..SmootherConfig::default()
    };
    let out = smooth(&m, &f, &config).expect("residual rule converges on a small ball");
    assert!(out.log.entries.iter().all(|e| e.energy.is_finite()));
    assert!(out.ratio <= 1e-5);
    let first = out.log.entries[1].energy;
    assert!(out.log.final_energy().unwrap() <= first);
}

#[test]
fn iteration_cap_reports_not_converged_with_result() {
    let m = unit_ball(3);
    let f = boundary_conditions(&m, &BoundaryMode::NormalAligned).unwrap();
    let config = SmootherConfig {
        max_iterations: 1,
        ..SmootherConfig::default()
    };
    let err = smooth(&m, &f, &config).unwrap_err();
    assert_eq!(err.0.iterations, 1);
    assert_eq!(err.0.log.entries.len(), 2);
    assert_eq!(err.0.field.len(), m.vertex_count());
}

#[test]
fn no_fixed_vertices_returns_uniform_field() {
    let g = Graph::path(5);
    let mut f = CrossField::uniform(5, CrossTensor9::reference());
    f.tensors[2] = cross(&spin(0.4));
    let out = smooth(&g, &f, &SmootherConfig::default()).unwrap();
    assert_eq!(out.iterations, 0);
    assert_eq!(energy(&g, &out.field), 0.0);
}

fn reference_boundary_file(m: &TetMesh) -> String {
    let mut text = String::new();
    for (v, on) in m.boundary_vertices().iter().enumerate() {
        if *on {
            text.push_str(&format!("{v} 1 1 1 0 0 0 0 0 0 1\n"));
        }
    }
    text
}

#[test]
fn uniform_boundary_data_on_a_cube_converges_immediately() {
    let m = cube(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bc.txt");
    std::fs::write(&path, reference_boundary_file(&m)).unwrap();
    let f = boundary_conditions(&m, &BoundaryMode::FromFile(path)).unwrap();
    let out = smooth(&m, &f, &SmootherConfig::default()).unwrap();
    assert_eq!(out.iterations, 1);
    assert_eq!(out.log.final_energy(), Some(0.0));
}

#[test]
fn normal_aligned_conditions() {
    let m = cube(2);
    let f = boundary_conditions(&m, &BoundaryMode::NormalAligned).unwrap();
    let on = m.boundary_vertices();
    for (v, x) in m.vertices().iter().enumerate() {
        if !on[v] {
            assert_eq!(f.tensors[v], CrossTensor9::reference());
            assert!(!f.fixed[v]);
        } else {
            assert!(f.fixed[v]);
        }
        // Centre of the face z = 1.
        if *x == Vector3::new(0.0, 0.0, 1.0) {
            assert!(f.tensors[v].frobenius_distance(&CrossTensor9::reference()) < 1e-15);
        }
    }

    let ball = unit_ball(4);
    let f = boundary_conditions(&ball, &BoundaryMode::NormalAligned).unwrap();
    let normals = ball.weighted_vertex_normals();
    let v = ball
        .vertices()
        .iter()
        .position(|x| (x - Vector3::x()).norm() < 1e-12)
        .unwrap();
    let n = normals[v].normalize();
    assert!((f.tensors[v].evaluate(&n) - 1.0).abs() < 1e-12);
    assert!(f.tensors[v].evaluate(&Vector3::x()) > 0.99);
}

#[test]
fn cancelling_normals_are_rejected() {
    // Two tetrahedra touching at the origin, one the point reflection of the other.
    let p = [
        Vector3::new(1.0, 0.1, 0.2),
        Vector3::new(0.1, 1.0, 0.3),
        Vector3::new(0.2, 0.3, 1.0),
    ];
    let mut vertices = vec![Vector3::zeros()];
    vertices.extend(p);
    vertices.extend(p.map(|x| -x));
    let m = TetMesh::new(vertices, vec![[0, 1, 2, 3], [0, 4, 6, 5]]).unwrap();
    match boundary_conditions(&m, &BoundaryMode::NormalAligned) {
        Err(FieldError::DegenerateNormal { vertex: 0, magnitude }) => assert!(magnitude < 1e-6),
        other => panic!("expected a degenerate normal, got {other:?}"),
    }
}

#[test]
fn boundary_file_errors_name_the_line() {
    let mut f = CrossField::uniform(3, CrossTensor9::reference());
    let err = apply_boundary_file(
        &mut f,
        "0 1 1 1 0 0 0 0 0 0 1\n1 1 1 1 0 0\n",
        std::path::Path::new("bc"),
    )
    .unwrap_err();
    assert!(matches!(err, FieldError::File { line: 2, .. }));
    assert!(matches!(
        boundary_conditions(&cube(1), &BoundaryMode::FromFile("/nonexistent/bc".into())),
        Err(FieldError::Io { .. })
    ));
}

#[test]
fn normal_frames_are_proper_rotations() {
    let mut r = rng(42);
    for _ in 0..100 {
        let n = Rotation::random(&mut r).column(0);
        let frame = normal_frame(&n);
        assert!(frame.orthonormality_error() < 1e-12);
        assert!((frame.matrix().determinant() - 1.0).abs() < 1e-12);
        assert!((frame.column(2) - n).norm() < 1e-15);
    }
}

#[test]
fn singularity_indicator_examples() {
    let m = unit_ball(2);
    let f = CrossField::uniform(m.vertex_count(), cross(&spin(0.2)));
    let report = singularity_indicator(&m, &f, DEFAULT_ETA_BAND);
    assert!(report.eta.iter().all(|&e| e < 1e-12));
    assert!(report.flagged.is_empty());

    let (g, f) = path_field((cross(&spin(0.0)), cross(&spin(FRAC_PI_4))), 3);
    let report = singularity_indicator(&g, &f, DEFAULT_ETA_BAND);
    // Analytic: every x₃-aligned cross is equidistant from the mean.
    let mean = (f.tensors[0] + f.tensors[2]) * 0.5;
    let oracle = cross(&spin(0.1)).frobenius_distance(&mean);
    assert!((report.eta[1] - oracle).abs() < 1e-12);
    assert!(report.eta[1] > 0.0);
    assert_eq!(report.eta[0], 0.0);
}

#[test]
fn vtk_export() {
    let dir = tempfile::tempdir().unwrap();
    let m = crossfield::load_mesh(
        &std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/single_tet.tet"),
        crossfield::MeshFormat::SimpleTet,
    )
    .unwrap();
    let f = CrossField::uniform(4, cross(&spin(0.3)));
    let mut report = singularity_indicator(&m, &f, DEFAULT_ETA_BAND);
    report.eta = vec![0.1, 0.2, 0.35, 1.0 / 3.0];
    let path = dir.path().join("out.vtk");
    export_vtk(&m, &f, &report, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("POINTS 4 double"));
    assert!(text.contains("CELLS 1 5"));
    assert!(text.contains("CELL_TYPES 1\n10\n"));
    let eta = read_point_array(&text, "eta").unwrap();
    for (a, b) in eta.iter().zip(&report.eta) {
        assert!((a - b).abs() < 1e-6);
    }
    for q in 1..=3 {
        let d = read_point_array(&text, &format!("direction{q}")).unwrap();
        for v in 1..4 {
            assert_eq!(d[3 * v..3 * v + 3], d[0..3]);
        }
    }
    assert!(export_vtk(&m, &f, &report, &dir.path().join("missing/out.vtk")).is_err());
}

#[test]
fn convergence_log_csv() {
    let (g, f) = path_field((cross(&spin(0.0)), cross(&spin(0.2))), 4);
    let out = outcome(smooth(&g, &f, &SmootherConfig::default()));
    let csv = out.log.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,energy,elapsed_seconds"));
    for (k, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 3);
        assert_eq!(cols[0].parse::<usize>().unwrap(), k);
        assert!(cols[1].parse::<f64>().unwrap().is_finite());
    }
}
