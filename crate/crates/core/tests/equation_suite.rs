//! Cross-equation checks: the n-wave system from a dressed n = 3 solution,
//! the Lie-transform conjugation identity, and the gauge-transform
//! round trip.

use akns_core::algebra::{ComplexMatrix, DiagonalGenerator, C64};
use akns_core::dressing::{DressedSolution, SimpleFactor};
use akns_core::equations::{
    classical_backlund_sg, gnls_gauge_transform, lie_transform, residual, EquationId, FieldData,
    Matrix2D, Scalar2D,
};
use akns_core::frames::FlowSpec;
use akns_core::hierarchy::GridSpec;
use akns_core::verify::estimated_order;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn dressed_three_wave_satisfies_nwave_equation() {
    // n = 3 first flow defined by b != a: one dressing factor produces an
    // exact solution of the quadratic n-wave system
    let a = DiagonalGenerator::new(vec![1.0, 0.2, -0.9]).unwrap();
    let b = DiagonalGenerator::new(vec![0.4, -0.5, 0.8]).unwrap();
    let spec = FlowSpec::new(a.clone(), b.clone(), 1).unwrap();
    let f = SimpleFactor::new(
        c(0.2, 0.9),
        ComplexMatrix::column(&[c(1.0, 0.0), c(0.5, -0.3), c(-0.2, 0.6)]),
    )
    .unwrap();
    let sol = DressedSolution::vacuum(spec).dress(f).unwrap();
    let sample = |g: &GridSpec| Matrix2D::sample(g.clone(), |x, t| sol.u_at(x, t)).unwrap();
    let eq = EquationId::NWave { a, b };
    let g1 = GridSpec::rect(-6.0, 6.0, 161, -1.0, 1.0, 33).unwrap();
    let r1 = residual(&eq, &FieldData::Matrix(sample(&g1))).unwrap();
    let r2 = residual(&eq, &FieldData::Matrix(sample(&g1.refined()))).unwrap();
    let order = estimated_order(r1.max_abs, r2.max_abs);
    assert!(
        (order - 2.0).abs() <= 0.4,
        "order = {order}, maxAbs = {}",
        r1.max_abs
    );
}

#[test]
fn lie_transform_conjugates_backlund() {
    // with L_s(q)(x,t) = q(sx, t/s), the dressing parameter moves by
    // B_{s,c0} = L_s B_{1,c0} L_s^{-1} on vacuum-seeded kinks (the
    // composition order is fixed by checking the kink exponents)
    let s = 0.6;
    let c0 = 1.1;
    let grid = GridSpec::rect(-4.0, 4.0, 121, -1.5, 1.5, 41).unwrap();
    let q0 = Scalar2D::sample(grid.clone(), |_, _| c(0.0, 0.0)).unwrap();
    let bs = classical_backlund_sg(&q0, s, c0).unwrap().q_star;

    // right side: apply B_1 on the vacuum, then conjugate by the Lie map
    let b1 = move |x: f64, t: f64| 4.0 * ((2.0 * x + 0.5 * t).exp() * (c0 / 4.0).tan()).atan();
    // L_s then L_s^{-1} around B_1: (L_s B_1 L_{1/s})(0) = L_s(B_1(0))
    let conjugated = lie_transform(b1, s).unwrap();
    let mut worst: f64 = 0.0;
    for (it, t) in grid.ts().iter().enumerate() {
        for (ix, x) in grid.xs().enumerate() {
            // L_s(q)(x,t) = q(sx, t/s); B_s kink exponent 2sx + t/(2s)
            worst = worst.max((bs.at(it, ix).re - conjugated(x, *t)).abs());
        }
    }
    assert!(worst <= 1e-8, "conjugation mismatch {worst:.3e}");
}

#[test]
fn gnls_roundtrip_recovers_field() {
    let a = DiagonalGenerator::new(vec![1.0, -1.0]).unwrap();
    let f = SimpleFactor::new(
        c(0.0, 1.0),
        ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]),
    )
    .unwrap();
    let sol = DressedSolution::vacuum(FlowSpec::nls()).dress(f).unwrap();
    let grid = GridSpec::rect(-3.0, 3.0, 81, -0.4, 0.4, 17).unwrap();
    let out = gnls_gauge_transform(&sol.field(), &a, &grid).unwrap();
    assert!(
        out.roundtrip_defect <= 1e-8,
        "roundtrip {:.3e}",
        out.roundtrip_defect
    );
    assert!(
        out.conjugacy_drift <= 1e-9,
        "conjugacy {:.3e}",
        out.conjugacy_drift
    );
    assert!(out.compat_drift <= 1e-9, "compat {:.3e}", out.compat_drift);
}
