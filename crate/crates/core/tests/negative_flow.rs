//! End-to-end checks of the -1-flow constructions: dressed kinks against
//! the classical Bäcklund kink, breathers against the closed form, and the
//! harmonic-map route.

use akns_core::algebra::{projector_from_basis, ComplexMatrix, C64};
use akns_core::dressing::{build_breather, DressedSolution, Involution, SimpleFactor};
use akns_core::equations::{breather_closed_form, harmonic_map_from_frame, sg_field_from_solution};
use akns_core::frames::FlowSpec;
use akns_core::hierarchy::GridSpec;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dressing factor of the classical Bäcklund transformation `B_{s,c0}` from
/// the vacuum: pole `i s`, projector onto `(cos(f0/2), sin(f0/2))`,
/// `f0 = c0 / 2`.
fn kink_factor(s: f64, c0: f64) -> SimpleFactor {
    let f0 = 0.5 * c0;
    let basis = ComplexMatrix::column(&[c((f0 / 2.0).cos(), 0.0), c((f0 / 2.0).sin(), 0.0)]);
    SimpleFactor::new(c(0.0, s), basis).unwrap()
}

#[test]
fn dressed_kink_matches_backlund_closed_form() {
    // B_{s,c0}(0) = 4 arctan(e^{2 s x + t/(2 s)} tan(c0/4))
    let s = 0.5;
    let c0 = 1.2;
    let sol =
        DressedSolution::vacuum_with_involution(FlowSpec::sine_gordon(), Involution::Conjugation)
            .dress(kink_factor(s, c0))
            .unwrap();
    let grid = GridSpec::rect(-6.0, 6.0, 121, -2.0, 2.0, 17).unwrap();
    let q = sg_field_from_solution(&sol, &grid).unwrap();
    let tan0 = (c0 / 4.0).tan();
    let mut worst: f64 = 0.0;
    for (it, t) in grid.ts().iter().enumerate() {
        for (ix, x) in grid.xs().enumerate() {
            let exact = 4.0 * ((2.0 * s * x + t / (2.0 * s)).exp() * tan0).atan();
            worst = worst.max((q.at(it, ix).re - exact).abs());
        }
    }
    assert!(worst <= 1e-9, "kink mismatch {worst:.3e}");
}

#[test]
fn dressed_kink_u_is_half_q_x() {
    let s = 0.4;
    let c0 = 0.9;
    let sol =
        DressedSolution::vacuum_with_involution(FlowSpec::sine_gordon(), Involution::Conjugation)
            .dress(kink_factor(s, c0))
            .unwrap();
    let tan0 = (c0 / 4.0).tan();
    for (x, t) in [(0.3, 0.0), (-1.0, 1.5), (2.0, -0.7)] {
        let u = sol.u_at(x, t).unwrap();
        // d/dx 4 arctan(e^g T0) with g = 2 s x + t/(2s)
        let e = (2.0 * s * x + t / (2.0 * s)).exp() * tan0;
        let qx = 4.0 * (2.0 * s) * e / (1.0 + e * e);
        assert!((u[(0, 1)] - c(qx / 2.0, 0.0)).norm() <= 1e-11);
        assert!(u.conj().max_abs_diff(&u) <= 1e-11, "real form");
    }
}

#[test]
fn breather_matches_closed_form_and_period() {
    let theta = 0.4;
    let pi = projector_from_basis(&ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
    let sol = build_breather(theta, &pi).unwrap();
    let grid = GridSpec::rect(-5.0, 5.0, 81, -2.0, 2.0, 17).unwrap();
    let q = sg_field_from_solution(&sol, &grid).unwrap();
    let oracle = breather_closed_form(theta);
    let mut worst: f64 = 0.0;
    for (it, t) in grid.ts().iter().enumerate() {
        for (ix, x) in grid.xs().enumerate() {
            worst = worst.max((q.at(it, ix).re - oracle(x, *t)).abs());
        }
    }
    assert!(worst <= 1e-8, "breather mismatch {worst:.3e}");

    // periodic in lab time with period 2 pi / cos(theta): translating the
    // characteristic coordinates by (T/2, T/2) advances tau = x + t by T
    // and leaves y = x - t fixed
    let period = 2.0 * std::f64::consts::PI / theta.cos();
    let mut pworst: f64 = 0.0;
    for &t in &[-1.0, 0.3, 1.7] {
        for &x in &[-2.0, 0.4, 3.1] {
            let u1 = sol.u_at(x, t).unwrap();
            let u2 = sol.u_at(x + 0.5 * period, t + 0.5 * period).unwrap();
            pworst = pworst.max(u1.max_abs_diff(&u2));
        }
    }
    assert!(pworst <= 1e-8, "period violation {pworst:.3e}");
}

#[test]
fn breather_small_theta_stationary_limit() {
    // theta -> 0: the numerator sin(theta) suppresses all t-motion
    let theta = 1e-4;
    let pi = projector_from_basis(&ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
    let sol = build_breather(theta, &pi).unwrap();
    let mut worst: f64 = 0.0;
    for &x in &[-1.0, 0.0, 1.0] {
        let u0 = sol.u_at(x, 0.0).unwrap();
        let u1 = sol.u_at(x, 0.5).unwrap();
        worst = worst.max(u0.max_abs_diff(&u1));
    }
    assert!(worst <= 1e-3, "drift {worst:.3e}");
}

#[test]
fn harmonic_map_vacuum_and_breather() {
    // vacuum: s = exp(-2a(x + t)), so s^{-1} s_x is constant and the
    // characteristic residual vanishes identically
    let vac = DressedSolution::vacuum(FlowSpec::breather_flow());
    let grid = GridSpec::rect(-2.0, 2.0, 33, -1.0, 1.0, 9).unwrap();
    let hm = harmonic_map_from_frame(&vac, &grid).unwrap();
    assert!(
        hm.residual.max_abs <= 1e-10,
        "vacuum residual {}",
        hm.residual.max_abs
    );
    assert!(hm.invariant_drift <= 1e-9);
    let a = vac.spec().a().to_matrix();
    for (it, t) in grid.ts().iter().enumerate() {
        for (ix, x) in grid.xs().enumerate() {
            let expect = ComplexMatrix::from_fn(2, 2, |r, cc| {
                if r == cc {
                    (a[(r, r)] * c(-2.0 * (x + t), 0.0)).exp()
                } else {
                    c(0.0, 0.0)
                }
            });
            assert!(hm.s.at(it, ix).max_abs_diff(&expect) <= 1e-11);
        }
    }

    // breather: residual O(h^2), invariants conserved
    let pi = projector_from_basis(&ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
    let sol = build_breather(0.5, &pi).unwrap();
    let g1 = GridSpec::rect(-3.0, 3.0, 81, -1.0, 1.0, 33).unwrap();
    let h1 = harmonic_map_from_frame(&sol, &g1).unwrap();
    let h2 = harmonic_map_from_frame(&sol, &g1.refined()).unwrap();
    let order = (h1.residual.max_abs / h2.residual.max_abs).log2();
    assert!((order - 2.0).abs() <= 0.4, "order = {order}");
    assert!(
        h1.invariant_drift <= 1e-8,
        "drift {:.3e}",
        h1.invariant_drift
    );
}

#[test]
fn breather_satisfies_its_flow_normalization() {
    // the dressed breather solves q_xt = -4 sin q (b = a normalization);
    // checked as a finite-difference residual on the extracted field
    let theta = 0.4;
    let pi = projector_from_basis(&ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
    let sol = build_breather(theta, &pi).unwrap();
    let eval = |grid: &GridSpec| -> f64 {
        let q = sg_field_from_solution(&sol, grid).unwrap();
        let h = grid.h();
        let k = grid.k().unwrap();
        let nx = grid.nx;
        let nt = q.nt();
        let mut worst: f64 = 0.0;
        for it in 1..nt - 1 {
            for ix in 1..nx - 1 {
                let qxt = (q.at(it + 1, ix + 1) - q.at(it + 1, ix - 1) - q.at(it - 1, ix + 1)
                    + q.at(it - 1, ix - 1))
                .re / (4.0 * h * k);
                worst = worst.max((qxt + 4.0 * q.at(it, ix).re.sin()).abs());
            }
        }
        worst
    };
    let g1 = GridSpec::rect(-3.0, 3.0, 81, -1.0, 1.0, 33).unwrap();
    let r1 = eval(&g1);
    let r2 = eval(&g1.refined());
    let order = (r1 / r2).log2();
    assert!((order - 2.0).abs() <= 0.4, "order = {order}, r1 = {r1:.3e}");
}
