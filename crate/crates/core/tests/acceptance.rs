//! Acceptance suite. Each test prints one `PASS`/`FAIL` line straight to
//! stdout so the verdicts show up without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use crossfield::field::{singularity_indicator, smooth_step, DEFAULT_ETA_BAND};
use crossfield::harmonic::{
    orthogonality_check, project_to_harmonic, sh_reference_frame, QuarticPolynomial, QUARTIC_MONOMIALS,
};
use crossfield::sampling::{bench_projection, bench_recovery, perturbed_tensors, random_rotations, rng};
use crossfield::{
    approx_project, boundary_conditions, cross_distance, export_vtk, recover_rotation, smooth, unit_ball, BoundaryMode,
    CrossField, CrossTensor9, FullTensor4, Graph, ManifoldCheck, NotConverged, Rotation, SmootherConfig, StopRule,
    VertexGraph,
};
use nalgebra::{SymmetricEigen, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

fn verdict(n: u32, name: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    writeln!(out, "acceptance {n} [{name}]: {tag} ({detail})").unwrap();
}

#[test]
fn criterion_1_recovery_robustness() {
    let start = Instant::now();
    let b = bench_recovery(10_000, 42);
    let secs = start.elapsed().as_secs_f64();
    let ok = b.samples == 10_000 && b.failures == 0 && b.max_distance < 1e-8;
    verdict(
        1,
        "recovery robustness",
        ok,
        &format!(
            "{} samples, {} failures, max distance {:.2e}, {secs:.2} s",
            b.samples, b.failures, b.max_distance
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_2_projector_algebra() {
    let mut worst_proj = 0.0f64;
    let mut worst_eig = 0.0f64;
    for r in random_rotations(1000, 2) {
        let m = *CrossTensor9::from_rotation(&r).to_mandel().matrix();
        worst_proj = worst_proj.max((m * m - m).norm());
        let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in values.iter().zip([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]) {
            worst_eig = worst_eig.max((got - want).abs());
        }
    }
    let ok = worst_proj < 1e-12 && worst_eig < 1e-10;
    verdict(
        2,
        "projector algebra",
        ok,
        &format!("max |MM - M| {worst_proj:.2e}, max eigenvalue error {worst_eig:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_3_structure() {
    let mut r = rng(3);
    let nine: Vec<CrossTensor9> = (0..1000)
        .map(|_| CrossTensor9::new(std::array::from_fn(|_| r.random_range(-2.0..2.0))))
        .collect();
    let mut structural = true;
    let mut worst_trace = 0.0f64;
    for a in &nine {
        let report = FullTensor4::from_nine(a).validate();
        structural &= report.passed() && report.symmetry_violation == 0.0;
        worst_trace = worst_trace.max(report.trace_violation);
    }
    for pair in nine.chunks(2) {
        let s = r.random_range(-3.0..3.0);
        let mix = FullTensor4::from_nine(&(pair[0] * s + pair[1] * (1.0 - s)));
        for (k, l) in [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)] {
            let want = if k == l { 1.0 } else { 0.0 };
            worst_trace = worst_trace.max((mix.partial_trace(k, l) - want).abs());
        }
    }
    let ok = structural && worst_trace < 1e-12;
    verdict(
        3,
        "structure of the 9-parameter space",
        ok,
        &format!("all structural: {structural}, max trace deviation {worst_trace:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_4_exact_vs_approx() {
    let start = Instant::now();
    let b = bench_projection(4000, 1.0, 42);
    let secs = start.elapsed().as_secs_f64();
    let gap = b.median_relative_gap();
    // The 1% bound is our own target.
    let ok = b.errors() == 0 && b.violations() == 0 && gap < 0.01;
    verdict(
        4,
        "exact vs approximate projection",
        ok,
        &format!(
            "4000 samples, {} errors, {} violations, median relative gap {:.3}%, {secs:.2} s",
            b.errors(),
            b.violations(),
            100.0 * gap
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_5_harmonic_identities() {
    let mut worst_lap = 0.0f64;
    let mut worst_orth = 0.0f64;
    for r in random_rotations(100, 5) {
        let a = CrossTensor9::from_rotation(&r);
        let lap = QuarticPolynomial::from_tensor(&a).laplacian();
        for (got, want) in lap.iter().zip([12.0, 0.0, 0.0, 12.0, 0.0, 12.0]) {
            worst_lap = worst_lap.max((got - want).abs());
        }
    }
    for r in random_rotations(10, 6).iter().chain([Rotation::identity()].iter()) {
        for m in -4..=4 {
            worst_orth = worst_orth.max(orthogonality_check(&CrossTensor9::from_rotation(r), m).abs());
        }
    }

    let h = project_to_harmonic(&CrossTensor9::reference());
    let mut worst_ref = 0.0f64;
    for (&(a, b, c), got) in QUARTIC_MONOMIALS.iter().zip(&h.polynomial().0) {
        let fourth = [a, b, c].contains(&4);
        let mixed = [a, b, c].iter().filter(|&&e| e == 2).count() == 2;
        let want = 0.4
            * if fourth {
                1.0
            } else if mixed {
                -3.0
            } else {
                0.0
            };
        worst_ref = worst_ref.max((got - want).abs());
    }

    let mut r = rng(7);
    let mut ratios = Vec::with_capacity(50);
    while ratios.len() < 50 {
        let x = Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(&mut r)).normalize();
        let f = sh_reference_frame(&x);
        if f.abs() > 1e-3 {
            ratios.push(h.evaluate(&x) / f);
        }
    }
    let mean = ratios.iter().sum::<f64>() / 50.0;
    let var = ratios.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / 50.0;

    let ok = worst_lap < 1e-12 && worst_ref < 1e-12 && worst_orth < 1e-8 && var < 1e-8;
    verdict(
        5,
        "harmonic identities",
        ok,
        &format!(
            "laplacian {worst_lap:.1e}, reference projection {worst_ref:.1e}, orthogonality {worst_orth:.1e}, \
             scalar {mean:.6} (8/15 sqrt(3pi/7) = {:.6}) variance {var:.1e}",
            8.0 / 15.0 * (3.0 * PI / 7.0).sqrt()
        ),
    );
    assert!(ok);
}

fn spin(t: f64) -> Rotation {
    Rotation::about_axis(Vector3::z(), t)
}

#[test]
fn criterion_6_smoother_correctness() {
    // Path midpoint against a ternary search over spins of the middle vertex.
    let g = Graph::path(3);
    let mut f = CrossField::uniform(3, CrossTensor9::reference());
    f.tensors[2] = CrossTensor9::from_rotation(&spin(0.2));
    f.fixed = vec![true, false, true];
    let e = |t: f64| {
        let m = CrossTensor9::from_rotation(&spin(t));
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
    let config = SmootherConfig {
        max_iterations: 50,
        ..SmootherConfig::default()
    };
    let out = match smooth(&g, &f, &config) {
        Ok(s) => s,
        Err(NotConverged(s)) => *s,
    };
    let mid = approx_project(&out.field.tensors[1]).unwrap().rotation;
    let path_error = cross_distance(&mid, &spin(0.5 * (lo + hi)));

    // Uniform field.
    let ball = unit_ball(4);
    let mut uniform = CrossField::uniform(ball.vertex_count(), CrossTensor9::from_rotation(&spin(0.7)));
    uniform.fixed[0] = true;
    let next = smooth_step(&ball, &uniform, &SmootherConfig::default());
    let drift = next
        .tensors
        .iter()
        .zip(&uniform.tensors)
        .map(|(a, b)| a.frobenius_distance(b))
        .fold(0.0, f64::max);

    // Global rotation.
    let bc = boundary_conditions(&ball, &BoundaryMode::NormalAligned).unwrap();
    let s = Rotation::random(&mut rng(6));
    let config = SmootherConfig {
        max_iterations: 300,
        stop_rule: StopRule::Residual,
        energy_reduction_target: 1e-10,
        ..SmootherConfig::default()
    };
    let run = |field: &CrossField| match smooth(&ball, field, &config) {
        Ok(s) => s.field,
        Err(NotConverged(s)) => s.field,
    };
    let (base, turned) = (run(&bc), run(&bc.rotated(&s)));
    let equivariance = base
        .tensors
        .iter()
        .zip(&turned.tensors)
        .map(|(a, b)| a.rotated(&s).frobenius_distance(b))
        .fold(0.0, f64::max);

    let ok = path_error < 1e-6 && drift < 1e-12 && equivariance < 1e-6;
    verdict(
        6,
        "smoother correctness",
        ok,
        &format!(
            "path midpoint error {path_error:.1e} after {} iterations, uniform drift {drift:.1e}, \
             equivariance {equivariance:.1e}",
            out.iterations
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_sphere_experiment() {
    let mesh = unit_ball(20);
    let field = boundary_conditions(&mesh, &BoundaryMode::NormalAligned).unwrap();
    let config = SmootherConfig::default();
    let start = Instant::now();
    let (converged, out) = match smooth(&mesh, &field, &config) {
        Ok(s) => (true, s),
        Err(NotConverged(s)) => (false, *s),
    };
    let secs = start.elapsed().as_secs_f64();

    let e0 = out.log.initial_energy().unwrap();
    // Energy on edges between two boundary vertices never changes.
    let floor: f64 = mesh
        .edges()
        .iter()
        .filter(|[a, b]| field.fixed[*a] && field.fixed[*b])
        .map(|&[a, b]| 0.5 * field.tensors[a].frobenius_distance(&field.tensors[b]).powi(2))
        .sum();
    let residual_hit = out
        .log
        .entries
        .iter()
        .find(|e| e.residual <= config.energy_reduction_target);

    let report = singularity_indicator(&mesh, &out.field, DEFAULT_ETA_BAND);
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let vtk = dir.join("sphere.vtk");
    let exported = export_vtk(&mesh, &out.field, &report, &vtk).is_ok();
    std::fs::write(dir.join("sphere_convergence.csv"), out.log.to_csv()).unwrap();

    let ok = converged && !report.flagged.is_empty() && exported;
    verdict(
        7,
        "sphere experiment",
        ok,
        &format!(
            "{} tets, {} iterations, {secs:.1} s, E/E0 = {:.4} (target {:.0e}), boundary-edge floor {:.4}, \
             update residual reached 1e-4 at iteration {}, eta max {:.3}, {} flagged vertices, VTK {}",
            mesh.tets().len(),
            out.iterations,
            out.ratio,
            config.energy_reduction_target,
            floor / e0,
            residual_hit.map_or("never".to_string(), |e| e.iteration.to_string()),
            report.max,
            report.flagged.len(),
            vtk.display()
        ),
    );
    assert!(!report.flagged.is_empty());
    assert!(exported);
    assert!(
        converged,
        "energy ratio {:.4} above {:e}",
        out.ratio, config.energy_reduction_target
    );
}

#[test]
fn criterion_8_manifold_witness() {
    let mut on_failures = 0;
    let mut worst = 0.0f64;
    for r in random_rotations(1000, 8) {
        let a = CrossTensor9::from_rotation(&r);
        let back = recover_rotation(&a.to_mandel()).map(|q| CrossTensor9::from_rotation(&q).frobenius_distance(&a));
        match back {
            Ok(d) if ManifoldCheck::new(&a).passed() => worst = worst.max(d),
            _ => on_failures += 1,
        }
    }
    let off_passing = perturbed_tensors(1000, 0.1, 9)
        .iter()
        .filter(|z| ManifoldCheck::new(z).passed())
        .count();
    let ok = on_failures == 0 && worst < 1e-8 && off_passing == 0;
    verdict(
        8,
        "manifold witness",
        ok,
        &format!(
            "{on_failures} constructed tensors rejected, max recovery error {worst:.1e}, \
             {off_passing} of 1000 perturbations accepted"
        ),
    );
    assert!(ok);
}
