//! Flow machinery of the hierarchy: the `Q`-recursion, flow right-hand
//! sides, Hamiltonians, symplectic pairings, recursion operators and
//! negative flows.
//!
//! The recursion `(Q_i)_x + [u, Q_i] + [a, Q_{i+1}] = 0` is solved in two
//! ways.  The local route splits `Q = P + T` into `a`-off-diagonal and
//! `a`-diagonal parts, gets `P` from `ad(a)^{-1}` and `T` from the minimal
//! polynomial identity `f(a + Q_1 lambda^{-1} + ...) = 0`; it applies when
//! `b = a`, and extends to any commuting `b` for regular `a` through the
//! interpolation polynomial with `p(a) = b`.  The integral route instead
//! integrates `T_{b,j+1} = -int_{-inf}^x [u, P_{b,j+1}]^T dy` from the left
//! grid edge, which stands in for `-infinity`; fields are expected to have
//! decayed there and a warning is attached when they have not.

use crate::algebra::{
    ad_inverse, commutator, diag_part, minimal_polynomial, offdiag_part, ComplexMatrix,
    DiagonalGenerator, C64,
};
use crate::dressing::DressedSolution;
use crate::frames::FlowSpec;
use crate::tol;
use crate::verify;
use crate::{Error, Result};

/// Rectangular evaluation window: mandatory x-axis, optional t-axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub t_axis: Option<(f64, f64, usize)>,
}

impl GridSpec {
    pub fn x_only(x0: f64, x1: f64, nx: usize) -> Result<Self> {
        Self::new(x0, x1, nx, None)
    }

    pub fn rect(x0: f64, x1: f64, nx: usize, t0: f64, t1: f64, nt: usize) -> Result<Self> {
        Self::new(x0, x1, nx, Some((t0, t1, nt)))
    }

    pub fn new(x0: f64, x1: f64, nx: usize, t_axis: Option<(f64, f64, usize)>) -> Result<Self> {
        if nx < 5 {
            return Err(Error::GridTooSmall(5, nx));
        }
        if x1 <= x0 {
            return Err(Error::Invalid("grid bounds must be monotone".into()));
        }
        if let Some((t0, t1, nt)) = t_axis {
            if nt < 2 || t1 <= t0 {
                return Err(Error::Invalid(
                    "t-axis must be monotone with nt >= 2".into(),
                ));
            }
        }
        Ok(Self { x0, x1, nx, t_axis })
    }

    pub fn h(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn k(&self) -> Option<f64> {
        self.t_axis.map(|(t0, t1, nt)| (t1 - t0) / (nt - 1) as f64)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.nx).map(|i| self.x(i))
    }

    /// Time samples; a grid without a t-axis is the single slice `t = 0`.
    pub fn ts(&self) -> Vec<f64> {
        match self.t_axis {
            None => vec![0.0],
            Some((t0, t1, nt)) => {
                let k = (t1 - t0) / (nt - 1) as f64;
                (0..nt).map(|i| t0 + i as f64 * k).collect()
            }
        }
    }

    /// Same window with both axes refined 2:1 (nodes doubled minus one).
    pub fn refined(&self) -> Self {
        Self {
            x0: self.x0,
            x1: self.x1,
            nx: self.nx * 2 - 1,
            t_axis: self.t_axis.map(|(t0, t1, nt)| (t0, t1, nt * 2 - 1)),
        }
    }
}

/// Matrix-valued samples along the x-axis of a grid (one t-slice).
#[derive(Debug, Clone)]
pub struct SampledField {
    pub grid: GridSpec,
    pub values: Vec<ComplexMatrix>,
}

impl SampledField {
    pub fn from_values(grid: GridSpec, values: Vec<ComplexMatrix>) -> Result<Self> {
        if values.len() != grid.nx {
            return Err(Error::Invalid(
                "sample count does not match the grid".into(),
            ));
        }
        if !values.iter().all(|m| m.is_finite()) {
            return Err(Error::Invalid("field samples must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn sample(grid: GridSpec, mut f: impl FnMut(f64) -> Result<ComplexMatrix>) -> Result<Self> {
        let values = grid.xs().map(&mut f).collect::<Result<Vec<_>>>()?;
        Self::from_values(grid, values)
    }

    pub fn zero_like(&self) -> Self {
        let m = ComplexMatrix::zeros(self.values[0].rows(), self.values[0].cols());
        Self {
            grid: self.grid.clone(),
            values: vec![m; self.values.len()],
        }
    }

    pub fn n(&self) -> usize {
        self.values[0].rows()
    }

    /// Norms of the two edge samples.
    pub fn edge_norms(&self) -> (f64, f64) {
        (
            self.values[0].max_abs(),
            self.values[self.values.len() - 1].max_abs(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|m| m.max_abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x.max_abs_diff(y))
            .fold(0.0, f64::max)
    }

    /// Largest a-diagonal component over the grid (u-type fields keep this
    /// at the algebra tolerance).
    pub fn a_diagonal_defect(&self, a: &DiagonalGenerator) -> f64 {
        self.values
            .iter()
            .map(|m| diag_part(a, m).max_abs())
            .fold(0.0, f64::max)
    }

    /// Cubic (4-point Lagrange) interpolation at an off-node point.
    pub fn interpolate(&self, x: f64) -> ComplexMatrix {
        interpolate_cubic(&self.values, self.grid.x0, self.grid.h(), x)
    }
}

fn interpolate_cubic(values: &[ComplexMatrix], x0: f64, h: f64, x: f64) -> ComplexMatrix {
    let n = values.len();
    let pos = (x - x0) / h;
    let i = (pos.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = pos - i as f64;
    // Lagrange weights on nodes {-1, 0, 1, 2} around cell i
    let w = [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ];
    let mut acc = values[i - 1].scale(C64::new(w[0], 0.0));
    acc = &acc + &values[i].scale(C64::new(w[1], 0.0));
    acc = &acc + &values[i + 1].scale(C64::new(w[2], 0.0));
    &acc + &values[i + 2].scale(C64::new(w[3], 0.0))
}

/// The coefficient stack `Q_{b,0} .. Q_{b,j}` of a flow on a spatial grid.
#[derive(Debug, Clone)]
pub struct QStack {
    pub b: DiagonalGenerator,
    pub entries: Vec<SampledField>,
    pub warnings: Vec<String>,
}

impl QStack {
    pub fn order(&self) -> usize {
        self.entries.len() - 1
    }

    pub fn q(&self, m: usize) -> &SampledField {
        &self.entries[m]
    }

    /// Max interior residual of the recursion
    /// `(Q_m)_x + [u, Q_m] + [a, Q_{m+1}]` for `m < order`.
    pub fn recursion_residual(&self, a: &DiagonalGenerator, u: &SampledField) -> Result<f64> {
        let am = a.to_matrix();
        let h = u.grid.h();
        let mut worst: f64 = 0.0;
        for m in 0..self.order() {
            let dq = verify::fd1(&self.entries[m].values, h)?;
            for i in 2..u.grid.nx - 2 {
                let r = &(&dq[i] + &commutator(&u.values[i], &self.entries[m].values[i]))
                    + &commutator(&am, &self.entries[m + 1].values[i]);
                worst = worst.max(r.max_abs());
            }
        }
        Ok(worst)
    }
}

fn same_generator(a: &DiagonalGenerator, b: &DiagonalGenerator) -> bool {
    a.n() == b.n()
        && a.imag_parts()
            .iter()
            .zip(b.imag_parts())
            .all(|(x, y)| (x - y).abs() <= tol::dedup_tol(*x, *y))
}

/// Truncated product of two lambda^{-1}-series with matrix coefficients.
fn series_mul(lhs: &[ComplexMatrix], rhs: &[ComplexMatrix], order: usize) -> Vec<ComplexMatrix> {
    let n = lhs[0].rows();
    let mut out = vec![ComplexMatrix::zeros(n, n); order + 1];
    for (i, li) in lhs.iter().enumerate().take(order + 1) {
        for (k, rk) in rhs.iter().enumerate() {
            if i + k > order {
                break;
            }
            out[i + k] = &out[i + k] + &(li * rk);
        }
    }
    out
}

/// Evaluate `prod_i (S - c_i I)` truncated at `order`.
fn annihilator_series(s: &[ComplexMatrix], roots: &[C64], order: usize) -> Vec<ComplexMatrix> {
    let n = s[0].rows();
    let mut acc: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(n)];
    for &c in roots {
        let mut shifted: Vec<ComplexMatrix> = s.iter().take(order + 1).cloned().collect();
        shifted[0] = &shifted[0] - &ComplexMatrix::identity(n).scale(c);
        acc = series_mul(&acc, &shifted, order);
    }
    acc
}

/// Derivative of the minimal polynomial at a root:
/// `f'(c_i) = prod_{k != i} (c_i - c_k)`.
fn minpoly_derivative_at(roots: &[C64], at: C64) -> C64 {
    roots
        .iter()
        .filter(|&&c| (c - at).norm() > 1e-12)
        .map(|&c| at - c)
        .product()
}

/// Local (polynomial, quadrature-free) Q-recursion.
///
/// Applies when `b = a`, or when `a` is regular and `b` is reached as the
/// interpolation polynomial `p(a) = b`; otherwise [`Error::NotApplicable`]
/// directs the caller to [`q_recursion_integral`].
pub fn q_recursion_local(
    a: &DiagonalGenerator,
    b: &DiagonalGenerator,
    u: &SampledField,
    j: usize,
) -> Result<QStack> {
    let b_is_a = same_generator(a, b);
    if !b_is_a && !a.regular() {
        return Err(Error::NotApplicable(
            "local recursion needs b = a or a regular generator".into(),
        ));
    }
    let a_stack = q_stack_minimal_polynomial(a, u, j)?;
    if b_is_a {
        return Ok(QStack {
            b: b.clone(),
            entries: a_stack,
            warnings: Vec::new(),
        });
    }
    // regular a, b = p(a): the b-stack is the series p(a + Q_{a,1}/lambda + ...)
    let nodes: Vec<C64> = (0..a.n()).map(|k| a.entry(k)).collect();
    let values: Vec<C64> = (0..a.n()).map(|k| b.entry(k)).collect();
    let nx = u.grid.nx;
    let n = a.n();
    let mut entries: Vec<SampledField> = (0..=j)
        .map(|_| SampledField {
            grid: u.grid.clone(),
            values: vec![ComplexMatrix::zeros(n, n); nx],
        })
        .collect();
    for i in 0..nx {
        let s: Vec<ComplexMatrix> = a_stack.iter().map(|f| f.values[i].clone()).collect();
        let pb = lagrange_series(&s, &nodes, &values, j);
        for (m, field) in entries.iter_mut().enumerate() {
            field.values[i] = pb[m].clone();
        }
    }
    Ok(QStack {
        b: b.clone(),
        entries,
        warnings: Vec::new(),
    })
}

/// Evaluate the Lagrange polynomial through `(nodes_k, values_k)` on a
/// truncated matrix series.
fn lagrange_series(
    s: &[ComplexMatrix],
    nodes: &[C64],
    values: &[C64],
    order: usize,
) -> Vec<ComplexMatrix> {
    let n = s[0].rows();
    let mut acc = vec![ComplexMatrix::zeros(n, n); order + 1];
    for (k, &vk) in values.iter().enumerate() {
        let mut term: Vec<ComplexMatrix> = vec![ComplexMatrix::identity(n)];
        let mut denom = C64::new(1.0, 0.0);
        for (m, &cm) in nodes.iter().enumerate() {
            if m == k {
                continue;
            }
            let mut shifted: Vec<ComplexMatrix> = s.iter().take(order + 1).cloned().collect();
            shifted[0] = &shifted[0] - &ComplexMatrix::identity(n).scale(cm);
            term = series_mul(&term, &shifted, order);
            denom *= nodes[k] - cm;
        }
        let w = vk / denom;
        for (i, ti) in term.iter().enumerate() {
            acc[i] = &acc[i] + &ti.scale(w);
        }
    }
    acc
}

/// The `b = a` stack via the minimal-polynomial identity, on the grid.
fn q_stack_minimal_polynomial(
    a: &DiagonalGenerator,
    u: &SampledField,
    j: usize,
) -> Result<Vec<SampledField>> {
    let nx = u.grid.nx;
    let n = a.n();
    let h = u.grid.h();
    let am = a.to_matrix();
    let roots = minimal_polynomial(a);
    let mut stack: Vec<SampledField> = vec![SampledField {
        grid: u.grid.clone(),
        values: vec![am.clone(); nx],
    }];
    for m in 0..j {
        // P-step
        let p_prev: Vec<ComplexMatrix> =
            stack[m].values.iter().map(|q| offdiag_part(a, q)).collect();
        let dp = verify::fd1(&p_prev, h)?;
        let mut next: Vec<ComplexMatrix> = Vec::with_capacity(nx);
        for i in 0..nx {
            let drive = &dp[i] + &offdiag_part(a, &commutator(&u.values[i], &stack[m].values[i]));
            let p = ad_inverse(a, &drive)?.scale(C64::new(-1.0, 0.0));
            // T-step: lambda^{-(m+1)} coefficient of f(a + Q_1/lambda + ... + P/lambda^{m+1})
            let mut series: Vec<ComplexMatrix> = Vec::with_capacity(m + 2);
            series.push(am.clone());
            for q in stack.iter().skip(1) {
                series.push(q.values[i].clone());
            }
            series.push(p.clone());
            let f_series = annihilator_series(&series, &roots, m + 1);
            let c = diag_part(a, &f_series[m + 1]);
            let mut t = ComplexMatrix::zeros(n, n);
            for r in 0..n {
                for col in 0..n {
                    if a.same_class(r, col) && c[(r, col)].norm() > 0.0 {
                        let fp = minpoly_derivative_at(&roots, a.entry(r));
                        t[(r, col)] = -c[(r, col)] / fp;
                    }
                }
            }
            next.push(&p + &t);
        }
        stack.push(SampledField {
            grid: u.grid.clone(),
            values: next,
        });
    }
    Ok(stack)
}

/// Integral Q-recursion for arbitrary commuting `b`: the diagonal parts come
/// from cumulative quadrature off the left edge.  Carries an
/// `EdgeNotDecayed` warning instead of failing when the field has not
/// decayed at the window edges.
pub fn q_recursion_integral(
    a: &DiagonalGenerator,
    b: &DiagonalGenerator,
    u: &SampledField,
    j: usize,
) -> Result<QStack> {
    let mut warnings = Vec::new();
    let (l, r) = u.edge_norms();
    if l > tol::EDGE_DECAY || r > tol::EDGE_DECAY {
        warnings.push(format!(
            "EdgeNotDecayed: |u| = ({l:.2e}, {r:.2e}) at the window edges"
        ));
    }
    let nx = u.grid.nx;
    let h = u.grid.h();
    let bm = b.to_matrix();
    let mut stack: Vec<SampledField> = vec![SampledField {
        grid: u.grid.clone(),
        values: vec![bm; nx],
    }];
    for m in 0..j {
        let p_prev: Vec<ComplexMatrix> =
            stack[m].values.iter().map(|q| offdiag_part(a, q)).collect();
        let dp = verify::fd1(&p_prev, h)?;
        let mut p_next: Vec<ComplexMatrix> = Vec::with_capacity(nx);
        for i in 0..nx {
            let drive = &dp[i] + &offdiag_part(a, &commutator(&u.values[i], &stack[m].values[i]));
            p_next.push(ad_inverse(a, &drive)?.scale(C64::new(-1.0, 0.0)));
        }
        let integrand: Vec<ComplexMatrix> = (0..nx)
            .map(|i| diag_part(a, &commutator(&u.values[i], &p_next[i])))
            .collect();
        let cum = verify::cumulative_trapezoid_matrices(&integrand, h);
        let values: Vec<ComplexMatrix> = (0..nx).map(|i| &p_next[i] - &cum[i]).collect();
        stack.push(SampledField {
            grid: u.grid.clone(),
            values,
        });
    }
    Ok(QStack {
        b: b.clone(),
        entries: stack,
        warnings,
    })
}

/// Q-stack dispatch: local when available, integral otherwise.
pub fn q_stack(
    a: &DiagonalGenerator,
    b: &DiagonalGenerator,
    u: &SampledField,
    j: usize,
) -> Result<QStack> {
    match q_recursion_local(a, b, u, j) {
        Err(Error::NotApplicable(_)) => q_recursion_integral(a, b, u, j),
        other => other,
    }
}

/// Right-hand side of the `j`-th flow in both algebraic forms.
pub struct FlowRhs {
    /// `[Q_{b,j+1}, a]` (exact in the stack).
    pub rhs: SampledField,
    /// `(Q_{b,j})_x + [u, Q_{b,j}]` (finite-difference form).
    pub alternative: SampledField,
    /// Max interior difference of the two forms.
    pub discrepancy: f64,
    pub warnings: Vec<String>,
}

pub fn flow_rhs(spec: &FlowSpec, u: &SampledField) -> Result<FlowRhs> {
    if spec.degree() < 1 {
        return Err(Error::Invalid(
            "flow_rhs covers positive flows; use negflow_rhs".into(),
        ));
    }
    let j = spec.degree() as usize;
    let stack = q_stack(spec.a(), spec.b(), u, j + 1)?;
    let am = spec.a().to_matrix();
    let h = u.grid.h();
    let rhs_vals: Vec<ComplexMatrix> = stack
        .q(j + 1)
        .values
        .iter()
        .map(|q| commutator(q, &am))
        .collect();
    let dq = verify::fd1(&stack.q(j).values, h)?;
    let alt_vals: Vec<ComplexMatrix> = (0..u.grid.nx)
        .map(|i| &dq[i] + &commutator(&u.values[i], &stack.q(j).values[i]))
        .collect();
    let mut disc: f64 = 0.0;
    for i in 2..u.grid.nx.saturating_sub(2) {
        disc = disc.max(rhs_vals[i].max_abs_diff(&alt_vals[i]));
    }
    Ok(FlowRhs {
        rhs: SampledField {
            grid: u.grid.clone(),
            values: rhs_vals,
        },
        alternative: SampledField {
            grid: u.grid.clone(),
            values: alt_vals,
        },
        discrepancy: disc,
        warnings: stack.warnings,
    })
}

/// Value of a conserved functional together with decay warnings.
pub struct Functional {
    pub value: f64,
    pub warnings: Vec<String>,
}

/// `F_{a,j}(u) = -1/(j+1) int Re tr(Q_{a,j+2} a) dx` under the real trace
/// pairing (the normalization that reproduces the closed-form Hamiltonians
/// of the second flow; see the crate tests).
pub fn hamiltonian(a: &DiagonalGenerator, j: usize, u: &SampledField) -> Result<Functional> {
    let mut warnings = Vec::new();
    let (l, r) = u.edge_norms();
    if l > tol::EDGE_DECAY || r > tol::EDGE_DECAY {
        warnings.push(format!(
            "EdgeNotDecayed: |u| = ({l:.2e}, {r:.2e}) at the window edges"
        ));
    }
    let stack = q_recursion_local(a, a, u, j + 2)?;
    let am = a.to_matrix();
    let samples: Vec<f64> = stack
        .q(j + 2)
        .values
        .iter()
        .map(|q| (q * &am).trace().re)
        .collect();
    let value = -verify::trapezoid(&samples, u.grid.h()) / (j as f64 + 1.0);
    Ok(Functional { value, warnings })
}

/// Basic symplectic pairing
/// `w(v1, v2) = Re int tr(-ad(a)^{-1}(v1) v2) dx` on a-off-diagonal fields.
pub fn symplectic_pairing(
    a: &DiagonalGenerator,
    v1: &SampledField,
    v2: &SampledField,
) -> Result<f64> {
    let h = v1.grid.h();
    let mut samples = Vec::with_capacity(v1.grid.nx);
    for (m1, m2) in v1.values.iter().zip(&v2.values) {
        let w = ad_inverse(a, m1)?.scale(C64::new(-1.0, 0.0));
        samples.push((&w * m2).trace().re);
    }
    Ok(verify::trapezoid(&samples, h))
}

/// `P_u(v) = v_x + [u, v]^perp - [u, eta_u(v)]` with
/// `eta_u(v) = int_{-inf}^x [u, v]^diag dy`.
pub fn operator_pu(
    a: &DiagonalGenerator,
    u: &SampledField,
    v: &SampledField,
) -> Result<SampledField> {
    let h = u.grid.h();
    let dv = verify::fd1(&v.values, h)?;
    let bracket: Vec<ComplexMatrix> = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(ui, vi)| commutator(ui, vi))
        .collect();
    let diag: Vec<ComplexMatrix> = bracket.iter().map(|m| diag_part(a, m)).collect();
    let eta = verify::cumulative_trapezoid_matrices(&diag, h);
    let values: Vec<ComplexMatrix> = (0..u.grid.nx)
        .map(|i| &(&dv[i] + &offdiag_part(a, &bracket[i])) - &commutator(&u.values[i], &eta[i]))
        .collect();
    SampledField::from_values(u.grid.clone(), values)
}

/// `J_a^{-1}(v)`: solve `[w, a] = v`, i.e. `-ad(a)^{-1}(v)`.
pub fn ja_inverse(a: &DiagonalGenerator, v: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(ad_inverse(a, v)?.scale(C64::new(-1.0, 0.0)))
}

/// Shifted symplectic pairing `w_k` for `k <= -1`:
/// `w_k(v1, v2) = int Re tr(v1 xi_k(v2)) dx` with
/// `xi_k = (J_a^{-1} P_u)^{-k-1} J_a^{-1}`.
///
/// `w_k` is a 2-form on the submanifold where the recursion chain decays;
/// see [`sk_membership_defect`] for the first obstruction.
pub fn wk_pairing(
    a: &DiagonalGenerator,
    u: &SampledField,
    k: i32,
    v1: &SampledField,
    v2: &SampledField,
) -> Result<f64> {
    if k > -1 {
        return Err(Error::Invalid(format!("w_k needs k <= -1, got {k}")));
    }
    let mut xi = SampledField {
        grid: v2.grid.clone(),
        values: v2
            .values
            .iter()
            .map(|m| ja_inverse(a, m))
            .collect::<Result<Vec<_>>>()?,
    };
    for _ in 0..(-k - 1) {
        let pu = operator_pu(a, u, &xi)?;
        xi = SampledField {
            grid: pu.grid.clone(),
            values: pu
                .values
                .iter()
                .map(|m| ja_inverse(a, m))
                .collect::<Result<Vec<_>>>()?,
        };
    }
    let samples: Vec<f64> = v1
        .values
        .iter()
        .zip(&xi.values)
        .map(|(m1, m2)| (m1 * m2).trace().re)
        .collect();
    Ok(verify::trapezoid(&samples, v1.grid.h()))
}

/// First membership obstruction of a tangent field to the `w_{-2}` phase
/// space: `int [u, J_a^{-1}(v)]^diag dx` must vanish for the recursion
/// chain to decay on the right.
pub fn sk_membership_defect(
    a: &DiagonalGenerator,
    u: &SampledField,
    v: &SampledField,
) -> Result<f64> {
    let h = u.grid.h();
    let diag: Vec<ComplexMatrix> = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(ui, vi)| Ok(diag_part(a, &commutator(ui, &ja_inverse(a, vi)?))))
        .collect::<Result<Vec<_>>>()?;
    let total = verify::cumulative_trapezoid_matrices(&diag, h);
    Ok(total.last().unwrap().max_abs())
}

/// Right-hand side `[alpha, beta_{m-1}]` of the `-m`-th decay-case flow
/// defined by `b`, with the beta-chain built by the quadrature recursion
/// off the left edge.
pub fn negflow_rhs(
    alpha: &SampledField,
    b: &DiagonalGenerator,
    m: usize,
    u: &SampledField,
) -> Result<SampledField> {
    if m < 1 {
        return Err(Error::Invalid("negative flow order m must be >= 1".into()));
    }
    let g = trivialization_ode(u, Normalization::LeftEdge)?;
    let ginv: Vec<ComplexMatrix> = g
        .values
        .iter()
        .map(|m| m.inverse())
        .collect::<Result<_>>()?;
    let bm = b.to_matrix();
    let nx = u.grid.nx;
    let h = u.grid.h();
    // beta_0 = g^{-1} b g
    let mut beta: Vec<ComplexMatrix> = (0..nx).map(|i| &(&ginv[i] * &bm) * &g.values[i]).collect();
    for _ in 1..m {
        let integrand: Vec<ComplexMatrix> = (0..nx)
            .map(|i| &(&g.values[i] * &commutator(&alpha.values[i], &beta[i])) * &ginv[i])
            .collect();
        let cum = verify::cumulative_trapezoid_matrices(&integrand, h);
        beta = (0..nx)
            .map(|i| (&(&ginv[i] * &cum[i]) * &g.values[i]).scale(C64::new(-1.0, 0.0)))
            .collect();
    }
    let values: Vec<ComplexMatrix> = (0..nx)
        .map(|i| commutator(&alpha.values[i], &beta[i]))
        .collect();
    SampledField::from_values(u.grid.clone(), values)
}

/// Normalization point of an x-trivialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `g(x0) = I` at the left grid edge (stands in for `x -> -inf`).
    LeftEdge,
    /// `g(0) = I` at the spatial origin.
    Origin,
}

/// RK4 solution of `g_x = g u` over the grid with the chosen normalization;
/// cubic interpolation supplies `u` between nodes.  For skew-Hermitian `u`
/// the result is gated on unitarity drift.
pub fn trivialization_ode(u: &SampledField, normalization: Normalization) -> Result<SampledField> {
    let interp = u.clone();
    let f = move |x: f64| -> Result<ComplexMatrix> { Ok(interp.interpolate(x)) };
    trivialization_ode_fn(
        u.grid.clone(),
        u.n(),
        &f,
        normalization,
        u.grid.h() / 2.0,
        is_skew(u),
    )
}

fn is_skew(u: &SampledField) -> bool {
    u.values.iter().all(|m| m.skew_defect() <= 1e-8)
}

/// RK4 trivialization from an exact field callback (used when the field is
/// available in closed form, where the only error is the integrator's).
pub fn trivialization_ode_fn(
    grid: GridSpec,
    n: usize,
    u: &dyn Fn(f64) -> Result<ComplexMatrix>,
    normalization: Normalization,
    max_step: f64,
    check_unitarity: bool,
) -> Result<SampledField> {
    let rhs = |x: f64, g: &ComplexMatrix| -> ComplexMatrix {
        let ux = u(x).expect("field evaluation inside the trivialization");
        g * &ux
    };
    let nx = grid.nx;
    let h = grid.h();
    let mut values: Vec<ComplexMatrix> = Vec::with_capacity(nx);
    let mut g = ComplexMatrix::identity(n);
    values.push(g.clone());
    let substeps = (h / max_step).ceil().max(1.0) as usize;
    let sub = h / substeps as f64;
    for i in 0..nx - 1 {
        let mut x = grid.x(i);
        for _ in 0..substeps {
            g = verify::rk4_step(&g, x, sub, &rhs);
            x += sub;
        }
        values.push(g.clone());
    }
    if normalization == Normalization::Origin {
        // g_origin = g(0)^{-1} g: find the node nearest the origin and walk
        // the fractional remainder exactly.
        let pos = (0.0 - grid.x0) / h;
        let i0 = pos.round().clamp(0.0, (nx - 1) as f64) as usize;
        let mut g0 = values[i0].clone();
        let rem = 0.0 - grid.x(i0);
        if rem != 0.0 {
            g0 = verify::rk4_integrate(g0, grid.x(i0), 0.0, max_step, &rhs);
        }
        let g0inv = g0.inverse()?;
        for v in values.iter_mut() {
            *v = &g0inv * v;
        }
    }
    if check_unitarity {
        let id = ComplexMatrix::identity(n);
        let drift = values
            .iter()
            .map(|g| (&g.adjoint() * g).max_abs_diff(&id))
            .fold(0.0, f64::max);
        if drift > tol::UNITARITY_DRIFT {
            return Err(Error::UnitarityDrift(drift));
        }
    }
    SampledField::from_values(grid, values)
}

/// Pointwise Q-stack at `x` from a field callback, via the local recursion
/// on a narrow centered window, Richardson-extrapolated to kill the
/// finite-difference error.
pub fn pointwise_qstack_fn(
    a: &DiagonalGenerator,
    b: &DiagonalGenerator,
    u_fn: &dyn Fn(f64) -> Result<ComplexMatrix>,
    x: f64,
    j: usize,
) -> Result<Vec<ComplexMatrix>> {
    let build = |h: f64| -> Result<Vec<ComplexMatrix>> {
        let margin = j + 4;
        let nx = 2 * margin + 1;
        let grid = GridSpec::x_only(x - margin as f64 * h, x + margin as f64 * h, nx)?;
        let u = SampledField::sample(grid, u_fn)?;
        let stack = q_recursion_local(a, b, &u, j)?;
        Ok(stack
            .entries
            .iter()
            .map(|f| f.values[margin].clone())
            .collect())
    };
    let coarse = build(4e-3)?;
    let fine = build(2e-3)?;
    // O(h^2) leading error: (4 fine - coarse) / 3
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| &f.scale(C64::new(4.0 / 3.0, 0.0)) - &c.scale(C64::new(1.0 / 3.0, 0.0)))
        .collect())
}

/// Pointwise Q-stack of a dressed solution at `(x, t)`.
pub fn pointwise_qstack(
    s: &DressedSolution,
    x: f64,
    t: f64,
    j: usize,
) -> Result<Vec<ComplexMatrix>> {
    pointwise_qstack_fn(s.spec().a(), s.spec().b(), &|xx| s.u_at(xx, t), x, j)
}
