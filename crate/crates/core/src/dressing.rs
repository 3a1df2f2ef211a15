//! The rational loop-group (Bäcklund) action on solutions.
//!
//! A simple factor is the degree-one rational loop
//! `g_{z,pi}(lambda) = pi + (lambda - z)/(lambda - conj z) pi_perp` with a
//! non-real pole `z` and a Hermitian projector `pi`.  Dressing a solution by
//! `g_{z,pi}` transports `pi` along the frame,
//!
//! ```text
//! pi~(x,t) = W (W*W)^{-1} W*,   W = E(x,t,z)* U,
//! ```
//!
//! and updates the field by `u' = u + (z - conj z)[pi~, a]`.  The algebraic
//! transport is the source of truth; the first-order systems it satisfies in
//! `x` and `t` are kept as cross-checks (see [`projector_ode_check`]).
//!
//! Multi-factor transports run against the partially dressed frame in list
//! order (leftmost factor applied to the vacuum first).  Products taken in
//! the two orders related by the permutability identity produce the same
//! field; see [`permute_factors`] and [`dress_two_orders`].

use crate::algebra::{commutator, projector_from_basis, ComplexMatrix, HermitianProjector, C64};
use crate::frames::{vacuum_frame_eval, FlowSpec};
use crate::hierarchy::GridSpec;
use crate::tol;
use crate::{Error, Result};

/// One Bäcklund step: a pole off the real axis plus a Hermitian projector.
#[derive(Debug, Clone)]
pub struct SimpleFactor {
    z: C64,
    basis: ComplexMatrix,
    projector: HermitianProjector,
}

impl SimpleFactor {
    /// Build a factor from its pole and a full-rank basis of the target
    /// subspace `V` (an `n x k` matrix of column vectors).
    pub fn new(z: C64, basis: ComplexMatrix) -> Result<Self> {
        if z.im == 0.0 || !z.is_finite() {
            return Err(Error::RealPole);
        }
        let projector = projector_from_basis(&basis)?;
        Ok(Self {
            z,
            basis,
            projector,
        })
    }

    /// Factor from a projector; a basis of its image is extracted by
    /// column pivoting.
    pub fn from_projector(z: C64, pi: &HermitianProjector) -> Result<Self> {
        Self::new(z, basis_from_projector(pi))
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn projector(&self) -> &HermitianProjector {
        &self.projector
    }

    pub fn n(&self) -> usize {
        self.projector.n()
    }

    /// `g_{z,pi}(lambda)`; the value at `lambda = infinity` is the identity.
    pub fn eval(&self, lambda: C64) -> Result<ComplexMatrix> {
        eval_simple(lambda, self.z, self.projector.matrix())
    }

    /// `g_{z,pi}(lambda)^{-1} = pi + (lambda - conj z)/(lambda - z) pi_perp`
    /// (the simple factor with the conjugate pole and the same projector).
    pub fn eval_inverse(&self, lambda: C64) -> Result<ComplexMatrix> {
        eval_simple(lambda, self.z.conj(), self.projector.matrix())
    }
}

fn eval_simple(lambda: C64, z: C64, pi: &ComplexMatrix) -> Result<ComplexMatrix> {
    if (lambda - z.conj()).norm() < tol::pole_guard(z) {
        return Err(Error::PoleHit(lambda, z));
    }
    let blaschke = (lambda - z) / (lambda - z.conj());
    let n = pi.rows();
    let perp = &ComplexMatrix::identity(n) - pi;
    Ok(pi + &perp.scale(blaschke))
}

/// Simple-factor value at a symbolic `lambda = infinity`.
pub fn simple_factor_at_infinity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n)
}

/// Extract an orthonormal basis of the image of a projector by pivoted
/// Gram-Schmidt on its columns.
pub fn basis_from_projector(pi: &HermitianProjector) -> ComplexMatrix {
    let n = pi.n();
    let m = pi.matrix();
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for c in 0..n {
        let mut v: Vec<C64> = (0..n).map(|r| m[(r, c)]).collect();
        for b in &cols {
            let ip: C64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= ip * bi;
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-7 {
            let inv = C64::new(1.0 / norm, 0.0);
            for vi in v.iter_mut() {
                *vi *= inv;
            }
            cols.push(v);
        }
        if cols.len() == pi.rank() {
            break;
        }
    }
    ComplexMatrix::from_fn(n, cols.len(), |r, c| cols[c][r])
}

/// Involution restriction carried by a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Involution {
    None,
    /// `sigma(y) = conj(y)`: factors must have purely imaginary poles with
    /// real projectors, or appear in consecutive conjugate pairs
    /// `(z, pi), (-conj z, pi)` with real `pi`.
    Conjugation,
}

/// A flow together with an ordered factor list; every evaluation is exact
/// (closed-form) in `(x, t)`.
#[derive(Debug, Clone)]
pub struct DressedSolution {
    spec: FlowSpec,
    factors: Vec<SimpleFactor>,
    involution: Involution,
}

impl DressedSolution {
    pub fn vacuum(spec: FlowSpec) -> Self {
        Self {
            spec,
            factors: Vec::new(),
            involution: Involution::None,
        }
    }

    pub fn vacuum_with_involution(spec: FlowSpec, involution: Involution) -> Self {
        Self {
            spec,
            factors: Vec::new(),
            involution,
        }
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn factors(&self) -> &[SimpleFactor] {
        &self.factors
    }

    pub fn involution(&self) -> Involution {
        self.involution
    }

    /// Append a factor (the dressing update).  Under the conjugation
    /// involution the factor list must stay pair-closed: a trailing
    /// unmatched factor is accepted only as the first half of a conjugate
    /// pair and must be completed by the next call.
    pub fn dress(&self, factor: SimpleFactor) -> Result<DressedSolution> {
        if factor.n() != self.spec.n() {
            return Err(Error::Invalid(
                "factor dimension does not match the flow".into(),
            ));
        }
        let mut out = self.clone();
        out.factors.push(factor);
        if out.involution == Involution::Conjugation {
            out.check_conjugation_pairs(true)?;
        }
        Ok(out)
    }

    /// Validate the conjugation-involution constraint on the whole list.
    /// With `allow_pending`, a trailing first-half of a conjugate pair is
    /// tolerated (used while a solution is being built factor by factor).
    pub fn check_conjugation_pairs(&self, allow_pending: bool) -> Result<()> {
        let fs = &self.factors;
        let mut i = 0;
        while i < fs.len() {
            let f = &fs[i];
            if !f.projector.is_real() {
                return Err(Error::InvolutionViolation(format!(
                    "factor {i}: projector is not real"
                )));
            }
            let self_conjugate = (f.z + f.z.conj()).norm() <= tol::TAU_ALG;
            if self_conjugate {
                i += 1;
                continue;
            }
            // needs a partner (-conj z, same pi)
            if i + 1 < fs.len() {
                let g = &fs[i + 1];
                let pole_ok = (g.z + f.z.conj()).norm() <= tol::TAU_ALG;
                let proj_ok =
                    g.projector.matrix().max_abs_diff(f.projector.matrix()) <= tol::TAU_ALG;
                if pole_ok && proj_ok {
                    i += 2;
                    continue;
                }
                return Err(Error::InvolutionViolation(format!(
                    "factor {i}: pole {} is not purely imaginary and factor {} does not complete the conjugate pair",
                    f.z,
                    i + 1
                )));
            }
            if allow_pending {
                return Ok(());
            }
            return Err(Error::InvolutionViolation(format!(
                "factor {i}: pole {} is not purely imaginary and has no conjugate partner",
                f.z
            )));
        }
        Ok(())
    }

    /// Transported projectors `pi~_k(x, t)`, each computed against the frame
    /// dressed by the factors before it.
    pub fn transported(&self, x: f64, t: f64) -> Result<Vec<ComplexMatrix>> {
        let mut pis: Vec<ComplexMatrix> = Vec::with_capacity(self.factors.len());
        for (k, f) in self.factors.iter().enumerate() {
            let e = self.partial_frame_at(x, t, f.z, k, &pis)?;
            pis.push(transport_projector(&e, f.basis())?);
        }
        Ok(pis)
    }

    /// Frame dressed by the first `upto` factors, given their transported
    /// projectors at `(x, t)`.
    fn partial_frame_at(
        &self,
        x: f64,
        t: f64,
        lambda: C64,
        upto: usize,
        pis: &[ComplexMatrix],
    ) -> Result<ComplexMatrix> {
        let mut e = vacuum_frame_eval(&self.spec, x, t, lambda)?;
        for (f, pit) in self.factors[..upto].iter().zip(pis) {
            let left = f.eval(lambda)?;
            let right_inv = eval_simple(lambda, f.z.conj(), pit)?;
            e = &(&left * &e) * &right_inv;
        }
        Ok(e)
    }

    /// Dressed frame `E~(x, t, lambda)`.
    pub fn frame_at(&self, x: f64, t: f64, lambda: C64) -> Result<ComplexMatrix> {
        let pis = self.transported(x, t)?;
        self.partial_frame_at(x, t, lambda, self.factors.len(), &pis)
    }

    /// The field `u(x, t)`: vacuum `0` plus `(z_k - conj z_k)[pi~_k, a]` per
    /// factor.
    pub fn u_at(&self, x: f64, t: f64) -> Result<ComplexMatrix> {
        let n = self.spec.n();
        let a = self.spec.a().to_matrix();
        let mut u = ComplexMatrix::zeros(n, n);
        for (f, pit) in self.factors.iter().zip(self.transported(x, t)?) {
            u = &u + &commutator(&pit, &a).scale(f.z - f.z.conj());
        }
        Ok(u)
    }

    /// The `t`-connection coefficient of a negative flow: the dressed frame
    /// satisfies `E~^{-1} E~_t = lambda^{-1} M(x,t)` with
    /// `M = H(0) b H(0)^{-1}` and `H(0)` the product of the right factors at
    /// `lambda = 0` (last factor leftmost).  For the sine-Gordon embedding
    /// this carries the scalar field: `M` is conjugate to `b` by the
    /// x-trivialization of `u`.
    pub fn negative_flow_t_matrix(&self, x: f64, t: f64) -> Result<ComplexMatrix> {
        if self.spec.degree() != -1 {
            return Err(Error::Invalid(
                "t-connection matrix is specific to the -1 flow".into(),
            ));
        }
        let b = self.spec.b().to_matrix();
        let mut h = ComplexMatrix::identity(self.spec.n());
        for (f, pit) in self.factors.iter().zip(self.transported(x, t)?) {
            let g0 = eval_simple(C64::new(0.0, 0.0), f.z, &pit)?;
            h = &g0 * &h;
        }
        Ok(&(&h * &b) * &h.inverse()?)
    }

    /// Field evaluator closure.
    pub fn field(&self) -> FieldClosure {
        let sol = self.clone();
        FieldClosure::new(self.spec.n(), move |x, t| sol.u_at(x, t))
    }
}

/// Matrix-field evaluator `(x, t) -> u(x, t)`.
pub struct FieldClosure {
    n: usize,
    eval: Box<dyn Fn(f64, f64) -> Result<ComplexMatrix> + Send + Sync>,
}

impl FieldClosure {
    pub fn new(
        n: usize,
        eval: impl Fn(f64, f64) -> Result<ComplexMatrix> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            eval: Box::new(eval),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn at(&self, x: f64, t: f64) -> Result<ComplexMatrix> {
        (self.eval)(x, t)
    }
}

/// Projector onto `E* (V)` where the columns of `u_basis` span `V`:
/// `pi~ = W (W*W)^{-1} W*` with `W = E* U` (Gram-solved, then symmetrized).
pub fn transport_projector(
    frame_at_z: &ComplexMatrix,
    u_basis: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    let w = &frame_at_z.adjoint() * u_basis;
    let gram = &w.adjoint() * &w;
    let (solved, cond) = gram
        .solve(&w.adjoint())
        .map_err(|_| Error::GramSingular(f64::INFINITY))?;
    if cond > tol::GRAM_COND_MAX {
        return Err(Error::GramSingular(cond));
    }
    let pi = &w * &solved;
    Ok(&pi.adjoint().scale(C64::new(0.5, 0.0)) + &pi.scale(C64::new(0.5, 0.0)))
}

/// Closed-form one-soliton of the `j`-th flow defined by `a = diag(i, -i,
/// ..., -i)`, pole `z = r + i s`, projector onto `(1, v)^t`:
///
/// ```text
/// B_k(x,t) = 4 s e^{-2i(r x + Re(z^j) t)} conj(v_k)
///            / (e^{-2(s x + Im(z^j) t)} + e^{2(s x + Im(z^j) t)} |v|^2)
/// ```
///
/// embedded as `u = [[0, B], [-B*, 0]]`.  This is exactly the dressed field
/// produced by one simple factor over that vacuum; see the module notes on
/// the generator orientation.
pub fn one_soliton_closed_form(z: C64, v: &[C64], j: i32) -> Result<FieldClosure> {
    if z.im == 0.0 {
        return Err(Error::RealPole);
    }
    let nv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    if nv == 0.0 {
        return Err(Error::Invalid("v must be nonzero".into()));
    }
    let n = v.len() + 1;
    let v: Vec<C64> = v.to_vec();
    let (r, s) = (z.re, z.im);
    let zj = if j == -1 {
        C64::new(1.0, 0.0) / z
    } else {
        z.powi(j)
    };
    Ok(FieldClosure::new(n, move |x, t| {
        let phase = C64::new(0.0, -2.0 * (r * x + zj.re * t)).exp();
        let theta = s * x + zj.im * t;
        let denom = (-2.0 * theta).exp() + (2.0 * theta).exp() * nv;
        let mut u = ComplexMatrix::zeros(n, n);
        for (k, vk) in v.iter().enumerate() {
            let bk = phase * vk.conj() * (4.0 * s / denom);
            u[(0, k + 1)] = bk;
            u[(k + 1, 0)] = -bk.conj();
        }
        Ok(u)
    }))
}

/// Permuted projectors `(xi_1, xi_2)` with
/// `g_{z2,xi2} g_{z1,pi1} = g_{z1,xi1} g_{z2,pi2}` as loop-valued functions:
/// `xi_i = M pi_i M^{-1}`, `M = -(z1 - z2) I + 2i (s1 pi1 - s2 pi2)`.
pub fn permute_factors(
    f1: &SimpleFactor,
    f2: &SimpleFactor,
) -> Result<(HermitianProjector, HermitianProjector)> {
    let (z1, z2) = (f1.z(), f2.z());
    let scale = 1f64.max(z1.norm()).max(z2.norm());
    if (z1.re - z2.re).abs() <= 1e-12 * scale
        && (z1.im * z1.im - z2.im * z2.im).abs() <= 1e-12 * scale * scale
    {
        return Err(Error::DegeneratePair);
    }
    let n = f1.n();
    let i2 = C64::new(0.0, 2.0);
    let m = &(&ComplexMatrix::identity(n).scale(-(z1 - z2))
        + &f1.projector().matrix().scale(i2 * z1.im))
        - &f2.projector().matrix().scale(i2 * z2.im);
    let minv = m.inverse().map_err(|_| Error::MSingular)?;
    let conjugate = |pi: &ComplexMatrix| -> Result<HermitianProjector> {
        let xi = &(&m * pi) * &minv;
        // Theorem-level output is a Hermitian projector; symmetrize the
        // rounding residue before validating.
        let xi = &xi.adjoint().scale(C64::new(0.5, 0.0)) + &xi.scale(C64::new(0.5, 0.0));
        HermitianProjector::new(xi, pi.trace().re.round() as usize)
    };
    Ok((
        conjugate(f1.projector().matrix())?,
        conjugate(f2.projector().matrix())?,
    ))
}

/// Build the same two-factor solution in both permuted orders and return the
/// largest pointwise difference of the fields over the grid.
pub fn dress_two_orders(
    s0: &DressedSolution,
    f1: &SimpleFactor,
    f2: &SimpleFactor,
    grid: &GridSpec,
) -> Result<f64> {
    let (xi1, xi2) = permute_factors(f1, f2)?;
    let order_a = s0
        .dress(f1.clone())?
        .dress(SimpleFactor::from_projector(f2.z(), &xi2)?)?;
    let order_b = s0
        .dress(f2.clone())?
        .dress(SimpleFactor::from_projector(f1.z(), &xi1)?)?;
    let mut worst: f64 = 0.0;
    for t in grid.ts() {
        for x in grid.xs() {
            let ua = order_a.u_at(x, t)?;
            let ub = order_b.u_at(x, t)?;
            worst = worst.max(ua.max_abs_diff(&ub));
        }
    }
    Ok(worst)
}

/// Dilation action on the field: `j >= 1` maps `u` to
/// `r^{-1} u(r^{-1} x, r^{-j} t)`; the `-1` flow maps it to
/// `r^{-1} u(r^{-1} x, r t)`.
pub fn scale_action(r: f64, s: &DressedSolution) -> Result<FieldClosure> {
    if r == 0.0 {
        return Err(Error::Invalid("scale factor must be nonzero".into()));
    }
    let j = s.spec().degree();
    let t_scale = if j == -1 { r } else { r.powi(-j) };
    let inner = s.clone();
    let inv = 1.0 / r;
    Ok(FieldClosure::new(s.spec().n(), move |x, t| {
        Ok(inner.u_at(inv * x, t_scale * t)?.scale(C64::new(inv, 0.0)))
    }))
}

/// Conjugate-pair dressing of the `-1`-flow vacuum `exp(a(lambda x + t/lambda))`
/// with factors `(e^{i theta}, pi), (-e^{-i theta}, pi)`: the classical
/// breather family.  `pi` must be real; `cos theta` must not vanish.
pub fn build_breather(theta: f64, pi: &HermitianProjector) -> Result<DressedSolution> {
    if theta.cos().abs() < 1e-12 {
        return Err(Error::Invalid("cos theta must be nonzero".into()));
    }
    if !pi.is_real() {
        return Err(Error::RealnessViolation(
            "breather projector must be real".into(),
        ));
    }
    if pi.n() != 2 {
        return Err(Error::Invalid("breather construction is su(2)".into()));
    }
    let z1 = C64::new(theta.cos(), theta.sin());
    let z2 = C64::new(-theta.cos(), theta.sin());
    let spec = FlowSpec::breather_flow();
    DressedSolution::vacuum_with_involution(spec, Involution::Conjugation)
        .dress(SimpleFactor::from_projector(z1, pi)?)?
        .dress(SimpleFactor::from_projector(z2, pi)?)
}

/// Deviation of the RK4-integrated projector ODEs from the algebraic
/// transport, for the factor `f` over the background solution `s`.
///
/// The `x`-system is `pi~_x = pi~ A(z) pi~perp - pi~perp A(conj z) pi~` with
/// `A(lambda) = a lambda + u`; the `t`-system replaces `A` by the
/// `t`-connection `B(lambda)` of the flow (`sum_m Q_m lambda^{j-m}` for
/// positive flows, `lambda^{-1} M(x,t)` for the `-1` flow).  Both come out
/// of the residue cancellation that makes the dressed frame entire in the
/// spectral parameter; the commutator form
/// `pi~_x + [a z + u, pi~] = (z̄ - z)[pi~, a] pi~` is the same x-system.
pub struct OdeCheck {
    pub x_deviation: f64,
    pub t_deviation: f64,
}

/// Cross-check the transported projector along an x-path and a t-path
/// starting at `(x0, t0)`, each of the given length, with RK4 step `step`.
pub fn projector_ode_check(
    s: &DressedSolution,
    f: &SimpleFactor,
    start: (f64, f64),
    x_len: f64,
    t_len: f64,
    step: f64,
) -> Result<OdeCheck> {
    let dressed = s.dress(f.clone()).unwrap_or_else(|_| {
        // involution bookkeeping is irrelevant for the cross-check
        let mut d = s.clone();
        d.factors.push(f.clone());
        d.involution = Involution::None;
        d
    });
    let k = dressed.factors.len() - 1;
    let (x0, t0) = start;
    let z = f.z();
    let a = s.spec().a().to_matrix();
    let n = s.spec().n();
    let id = ComplexMatrix::identity(n);

    let transported_at =
        |x: f64, t: f64| -> Result<ComplexMatrix> { Ok(dressed.transported(x, t)?[k].clone()) };

    let rhs =
        |conn: &dyn Fn(C64) -> Result<ComplexMatrix>, p: &ComplexMatrix| -> Result<ComplexMatrix> {
            let perp = &id - p;
            let at_z = conn(z)?;
            let at_zbar = conn(z.conj())?;
            Ok(&(&(p * &at_z) * &perp) - &(&(&perp * &at_zbar) * p))
        };

    // x-path
    let mut x_dev: f64 = 0.0;
    if x_len != 0.0 {
        let mut p = transported_at(x0, t0)?;
        let nsteps = (x_len.abs() / step).ceil().max(1.0) as usize;
        let h = x_len / nsteps as f64;
        let mut x = x0;
        for _ in 0..nsteps {
            let f_ode = |xx: f64, pp: &ComplexMatrix| -> ComplexMatrix {
                let u = s.u_at(xx, t0).expect("background field");
                let conn = |lam: C64| -> Result<ComplexMatrix> { Ok(&a.scale(lam) + &u) };
                rhs(&conn, pp).expect("x-system rhs")
            };
            p = crate::verify::rk4_step(&p, x, h, &f_ode);
            x += h;
        }
        x_dev = p.max_abs_diff(&transported_at(x0 + x_len, t0)?);
    }

    // t-path
    let mut t_dev: f64 = 0.0;
    if t_len != 0.0 {
        let j = s.spec().degree();
        let mut p = transported_at(x0, t0)?;
        let nsteps = (t_len.abs() / step).ceil().max(1.0) as usize;
        let h = t_len / nsteps as f64;
        let mut t = t0;
        for _ in 0..nsteps {
            let f_ode = |tt: f64, pp: &ComplexMatrix| -> ComplexMatrix {
                let conn = |lam: C64| -> Result<ComplexMatrix> { t_connection(s, x0, tt, lam, j) };
                rhs(&conn, pp).expect("t-system rhs")
            };
            p = crate::verify::rk4_step(&p, t, h, &f_ode);
            t += h;
        }
        t_dev = p.max_abs_diff(&transported_at(x0, t0 + t_len)?);
    }

    let worst = x_dev.max(t_dev);
    if worst > tol::ODE_DEVIATION_CEILING {
        return Err(Error::StepTooLarge(worst));
    }
    Ok(OdeCheck {
        x_deviation: x_dev,
        t_deviation: t_dev,
    })
}

/// The `t`-connection `B(x, t, lambda)` of the background solution:
/// `b lambda^j + Q_1 lambda^{j-1} + ... + Q_j` for positive flows,
/// `lambda^{-1} M(x, t)` for the `-1` flow.  The `Q`-coefficients are built
/// from the dressed field by the pointwise local recursion.
pub fn t_connection(
    s: &DressedSolution,
    x: f64,
    t: f64,
    lambda: C64,
    j: i32,
) -> Result<ComplexMatrix> {
    if j == -1 {
        if lambda.norm() == 0.0 {
            return Err(Error::PoleAtZero);
        }
        let m = s.negative_flow_t_matrix(x, t)?;
        return Ok(m.scale(C64::new(1.0, 0.0) / lambda));
    }
    let qs = crate::hierarchy::pointwise_qstack(s, x, t, j as usize)?;
    let n = s.spec().n();
    let mut b = ComplexMatrix::zeros(n, n);
    for (m, q) in qs.iter().enumerate() {
        b = &b + &q.scale(lambda.powi(j - m as i32));
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn nls_soliton() -> DressedSolution {
        let f = SimpleFactor::new(
            c(0.0, 1.0),
            ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        DressedSolution::vacuum(FlowSpec::nls()).dress(f).unwrap()
    }

    #[test]
    fn simple_factor_values() {
        // pi = I -> g = I for all lambda
        let pi_full = projector_from_basis(&ComplexMatrix::identity(2)).unwrap();
        let f = SimpleFactor {
            z: c(0.0, 1.0),
            basis: ComplexMatrix::identity(2),
            projector: pi_full,
        };
        assert!(
            f.eval(c(0.7, -0.3))
                .unwrap()
                .max_abs_diff(&ComplexMatrix::identity(2))
                < 1e-15
        );

        // z = i, pi = diag(1,0), lambda = 0 -> diag(1, -1)
        let f = SimpleFactor::new(
            c(0.0, 1.0),
            ComplexMatrix::column(&[c(1.0, 0.0), c(0.0, 0.0)]),
        )
        .unwrap();
        let g = f.eval(c(0.0, 0.0)).unwrap();
        assert!((g[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((g[(1, 1)] - c(-1.0, 0.0)).norm() < 1e-15);

        // pole hit at conj z; symbolic infinity is the identity
        assert!(matches!(f.eval(c(0.0, -1.0)), Err(Error::PoleHit(_, _))));
        assert!(simple_factor_at_infinity(2).max_abs_diff(&ComplexMatrix::identity(2)) == 0.0);
        // real pole rejected
        assert!(matches!(
            SimpleFactor::new(c(1.0, 0.0), ComplexMatrix::identity(2)),
            Err(Error::RealPole)
        ));
    }

    #[test]
    fn transport_at_origin_is_pi() {
        let sol = nls_soliton();
        let pis = sol.transported(0.0, 0.0).unwrap();
        assert!(pis[0].max_abs_diff(sol.factors()[0].projector().matrix()) <= 1e-13);
    }

    #[test]
    fn transport_vacuum_closed_form() {
        // a = diag(-i, i), z = i, V = span (1,1)^t, t = 0:
        // E0(x, i) = diag(e^x, e^-x), pi~_11 = e^{2x}/(e^{2x} + e^{-2x})
        let a = crate::algebra::DiagonalGenerator::new(vec![-1.0, 1.0]).unwrap();
        let spec = FlowSpec::new(a.clone(), a, 2).unwrap();
        let f = SimpleFactor::new(
            c(0.0, 1.0),
            ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        let sol = DressedSolution::vacuum(spec).dress(f).unwrap();
        for x in [-1.5, 0.0, 0.8, 2.0] {
            let pit = &sol.transported(x, 0.0).unwrap()[0];
            let expect = (2.0 * x).exp() / ((2.0 * x).exp() + (-2.0 * x).exp());
            assert!((pit[(0, 0)] - c(expect, 0.0)).norm() <= 1e-12);
        }
    }

    #[test]
    fn transported_projector_invariants_on_grid() {
        let sol = nls_soliton();
        for it in 0..21 {
            for ix in 0..21 {
                let x = -5.0 + 0.5 * ix as f64;
                let t = -2.0 + 0.2 * it as f64;
                let p = &sol.transported(x, t).unwrap()[0];
                assert!((&(p * p)).max_abs_diff(p) <= 1e-11);
                assert!(p.hermitian_defect() <= 1e-11);
            }
        }
    }

    #[test]
    fn centralizer_factor_acts_trivially() {
        // [pi, a] = 0 -> u' = u
        let f = SimpleFactor::new(
            c(0.0, 1.0),
            ComplexMatrix::column(&[c(1.0, 0.0), c(0.0, 0.0)]),
        )
        .unwrap();
        let sol = DressedSolution::vacuum(FlowSpec::nls()).dress(f).unwrap();
        for (x, t) in [(0.4, -0.3), (-2.0, 1.0)] {
            assert!(sol.u_at(x, t).unwrap().max_abs() <= 1e-13);
        }
    }

    #[test]
    fn one_soliton_matches_dressing() {
        // the dressed field for a = diag(i, -i) IS the closed form
        let sol = nls_soliton();
        let oracle = one_soliton_closed_form(c(0.0, 1.0), &[c(1.0, 0.0)], 2).unwrap();
        for (x, t) in [(0.0, 0.0), (1.2, 0.7), (-2.0, -1.3), (3.0, 2.0)] {
            let u = sol.u_at(x, t).unwrap();
            let v = oracle.at(x, t).unwrap();
            assert!(u.max_abs_diff(&v) <= 1e-12, "mismatch at ({x},{t})");
        }
    }

    #[test]
    fn one_soliton_closed_form_values() {
        // z = i, v = 1, j = 2, t = 0: B = 2 sech 2x; general t: 2 e^{2it} sech 2x
        let b = one_soliton_closed_form(c(0.0, 1.0), &[c(1.0, 0.0)], 2).unwrap();
        for x in [-1.0, 0.0, 0.5] {
            let u = b.at(x, 0.0).unwrap();
            let expect = 2.0 / (2.0 * x).cosh();
            assert!((u[(0, 1)] - c(expect, 0.0)).norm() <= 1e-14);
        }
        let u = b.at(0.3, 0.9).unwrap();
        let expect = c(0.0, 2.0 * 0.9).exp() * (2.0 / (2.0f64 * 0.3).cosh());
        assert!((u[(0, 1)] - expect).norm() <= 1e-14);
        // ||v|| -> infinity kills the field pointwise
        let b = one_soliton_closed_form(c(0.0, 1.0), &[c(1e8, 0.0)], 2).unwrap();
        assert!(b.at(0.0, 0.0).unwrap().max_abs() <= 1e-7);
    }

    #[test]
    fn permute_commuting_projectors_fixed() {
        let u1 = ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]);
        let f1 = SimpleFactor::new(c(0.0, 1.0), u1.clone()).unwrap();
        let f2 = SimpleFactor::new(c(1.0, 2.0), u1).unwrap();
        let (x1, x2) = permute_factors(&f1, &f2).unwrap();
        assert!(x1.matrix().max_abs_diff(f1.projector().matrix()) <= 1e-12);
        assert!(x2.matrix().max_abs_diff(f2.projector().matrix()) <= 1e-12);
    }

    #[test]
    fn permute_identity_as_loops() {
        let f1 = SimpleFactor::new(
            c(0.0, 1.0),
            ComplexMatrix::column(&[c(1.0, 0.0), c(0.4, -0.2)]),
        )
        .unwrap();
        let f2 = SimpleFactor::new(
            c(1.0, 2.0),
            ComplexMatrix::column(&[c(0.3, 0.8), c(1.0, 0.0)]),
        )
        .unwrap();
        let (x1, x2) = permute_factors(&f1, &f2).unwrap();
        let g1 = SimpleFactor::from_projector(f1.z(), &x1).unwrap();
        let g2 = SimpleFactor::from_projector(f2.z(), &x2).unwrap();
        for lam in [c(0.0, 0.0), c(1.0, 0.0), c(-3.0, 1.0)] {
            let lhs = &g2.eval(lam).unwrap() * &f1.eval(lam).unwrap();
            let rhs = &g1.eval(lam).unwrap() * &f2.eval(lam).unwrap();
            assert!(lhs.max_abs_diff(&rhs) <= 1e-11);
        }
        // both outputs carry projector invariants
        for xi in [&x1, &x2] {
            let m = xi.matrix();
            assert!((&(m * m)).max_abs_diff(m) <= 1e-11);
            assert!(m.hermitian_defect() <= 1e-11);
        }
    }

    #[test]
    fn permute_degenerate_rejected() {
        let f1 = SimpleFactor::new(
            c(0.5, 1.0),
            ComplexMatrix::column(&[c(1.0, 0.0), c(0.0, 0.0)]),
        )
        .unwrap();
        let f2 = SimpleFactor::new(
            c(0.5, -1.0),
            ComplexMatrix::column(&[c(0.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        assert!(matches!(
            permute_factors(&f1, &f2),
            Err(Error::DegeneratePair)
        ));
    }

    #[test]
    fn scale_identity() {
        let sol = nls_soliton();
        let scaled = scale_action(1.0, &sol).unwrap();
        for (x, t) in [(0.7, -0.2), (-1.0, 0.4)] {
            assert!(
                scaled
                    .at(x, t)
                    .unwrap()
                    .max_abs_diff(&sol.u_at(x, t).unwrap())
                    == 0.0
            );
        }
    }

    #[test]
    fn involution_gate() {
        let spec = FlowSpec::sine_gordon();
        let sol = DressedSolution::vacuum_with_involution(spec, Involution::Conjugation);
        // purely imaginary pole with real projector: fine
        let ok = SimpleFactor::new(
            c(0.0, 0.5),
            ComplexMatrix::column(&[c(1.0, 0.0), c(0.7, 0.0)]),
        )
        .unwrap();
        assert!(sol.dress(ok).is_ok());
        // complex projector rejected
        let bad = SimpleFactor::new(
            c(0.0, 0.5),
            ComplexMatrix::column(&[c(1.0, 0.0), c(0.0, 0.7)]),
        )
        .unwrap();
        assert!(matches!(sol.dress(bad), Err(Error::InvolutionViolation(_))));
    }

    #[test]
    fn breather_is_real_form() {
        let pi = projector_from_basis(&ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)])).unwrap();
        let br = build_breather(0.4, &pi).unwrap();
        br.check_conjugation_pairs(false).unwrap();
        for (x, t) in [(0.3, 0.1), (-1.0, 2.0)] {
            let u = br.u_at(x, t).unwrap();
            assert!(u.conj().max_abs_diff(&u) <= 1e-11, "u must be real");
            assert!(u.skew_defect() <= 1e-11);
        }
    }

    #[test]
    fn zero_length_ode_check() {
        let sol = DressedSolution::vacuum(FlowSpec::nls());
        let f = SimpleFactor::new(
            c(0.0, 1.0),
            ComplexMatrix::column(&[c(1.0, 0.0), c(1.0, 0.0)]),
        )
        .unwrap();
        let r = projector_ode_check(&sol, &f, (0.2, 0.1), 0.0, 0.0, 1e-3).unwrap();
        assert_eq!(r.x_deviation, 0.0);
        assert_eq!(r.t_deviation, 0.0);
    }
}
