//! Time-variant equality-constrained QP solved by driving the KKT residual
//! `e = M(t) z - u(t)` through the error dynamics.
//!
//! The model integrated is `M ż = -Ṁ z + u̇ + r(e) + s(e) + w`, which makes
//! `ė = r(e) + s(e) + w` hold componentwise.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::compensate::{compensate, Compensation};
use crate::dynamics::{Disturbance, DisturbanceSampler};
use crate::error::{Error, Result};
use crate::laws::AttractingLaw;
use crate::linalg::{norm_inf, Lu, Matrix};

/// Condition estimate above which the KKT matrix is rejected.
pub const COND_LIMIT: f64 = 1e12;
const SYMMETRY_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

pub type MatFn = Arc<dyn Fn(f64) -> Matrix + Send + Sync>;
pub type VecFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// `min ½xᵀG(t)x + c(t)ᵀx` subject to `A(t)x = b(t)`.
///
/// The time functions must be pure.
#[derive(Clone)]
pub struct TimeVariantQP {
    n: usize,
    m: usize,
    g: MatFn,
    a: MatFn,
    c: VecFn,
    b: VecFn,
    g_dot: Option<MatFn>,
    a_dot: Option<MatFn>,
    c_dot: Option<VecFn>,
    b_dot: Option<VecFn>,
}

impl fmt::Debug for TimeVariantQP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeVariantQP")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("analytic_derivatives", &self.has_analytic_derivatives())
            .finish()
    }
}

/// KKT snapshot `M z = u` at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Kkt {
    pub m: Matrix,
    pub u: Vec<f64>,
}

impl TimeVariantQP {
    pub fn new(n: usize, m: usize, g: MatFn, a: MatFn, c: VecFn, b: VecFn) -> Self {
        Self {
            n,
            m,
            g,
            a,
            c,
            b,
            g_dot: None,
            a_dot: None,
            c_dot: None,
            b_dot: None,
        }
    }

    pub fn with_derivatives(mut self, g_dot: MatFn, a_dot: MatFn, c_dot: VecFn, b_dot: VecFn) -> Self {
        self.g_dot = Some(g_dot);
        self.a_dot = Some(a_dot);
        self.c_dot = Some(c_dot);
        self.b_dot = Some(b_dot);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Dimension `n + m` of the KKT system.
    pub fn k(&self) -> usize {
        self.n + self.m
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.g_dot.is_some() && self.a_dot.is_some() && self.c_dot.is_some() && self.b_dot.is_some()
    }

    pub fn g(&self, t: f64) -> Matrix {
        (self.g)(t)
    }

    pub fn a(&self, t: f64) -> Matrix {
        (self.a)(t)
    }

    pub fn c(&self, t: f64) -> Vec<f64> {
        (self.c)(t)
    }

    pub fn b(&self, t: f64) -> Vec<f64> {
        (self.b)(t)
    }

    fn check_dims(&self, g: &Matrix, a: &Matrix, c: &[f64], b: &[f64]) -> Result<()> {
        let (n, m) = (self.n, self.m);
        if g.shape() != (n, n) || a.shape() != (m, n) || c.len() != n || b.len() != m {
            return Err(Error::Structural(format!(
                "expected G {n}x{n}, A {m}x{n}, c {n}, b {m}; got G {:?}, A {:?}, c {}, b {}",
                g.shape(),
                a.shape(),
                c.len(),
                b.len()
            )));
        }
        Ok(())
    }

    /// Check symmetry and definiteness of `G` and full row rank of `A` at `t`.
    pub fn validate_at(&self, t: f64) -> Result<()> {
        let (g, a) = (self.g(t), self.a(t));
        self.check_dims(&g, &a, &self.c(t), &self.b(t))?;
        if g.asymmetry() > SYMMETRY_TOL * g.norm_inf().max(1.0) {
            return Err(Error::Structural(format!("G is not symmetric at t = {t}")));
        }
        if !g.is_positive_definite() {
            return Err(Error::Structural(format!("G is not positive definite at t = {t}")));
        }
        if a.rank(RANK_TOL) != self.m {
            return Err(Error::Structural(format!("A lacks full row rank at t = {t}")));
        }
        Ok(())
    }

    pub fn validate_on(&self, times: impl IntoIterator<Item = f64>) -> Result<()> {
        times.into_iter().try_for_each(|t| self.validate_at(t))
    }

    /// `M = [[G, Aᵀ], [A, 0]]`, `u = [-c; b]`.
    pub fn build_kkt(&self, t: f64) -> Result<Kkt> {
        let (g, a, c, b) = (self.g(t), self.a(t), self.c(t), self.b(t));
        self.check_dims(&g, &a, &c, &b)?;
        Ok(assemble(&g, &a, &c, &b))
    }

    /// `(Ṁ, u̇)` at `t`; the flag is set when central differences were used.
    pub fn kkt_derivative(&self, t: f64) -> Result<(Kkt, bool)> {
        if let (Some(gd), Some(ad), Some(cd), Some(bd)) = (&self.g_dot, &self.a_dot, &self.c_dot, &self.b_dot) {
            let (g, a, c, b) = (gd(t), ad(t), cd(t), bd(t));
            self.check_dims(&g, &a, &c, &b)?;
            return Ok((assemble(&g, &a, &c, &b), false));
        }
        let h = 1e-6 * t.abs().max(1.0);
        let hi = self.build_kkt(t + h)?;
        let lo = self.build_kkt(t - h)?;
        let k = self.k();
        let m = Matrix::from_fn(k, k, |i, j| (hi.m[(i, j)] - lo.m[(i, j)]) / (2.0 * h));
        let u = hi.u.iter().zip(&lo.u).map(|(p, q)| (p - q) / (2.0 * h)).collect();
        Ok((Kkt { m, u }, true))
    }

    /// `z* = M⁻¹ u` by LU with partial pivoting.
    pub fn reference_solution(&self, t: f64) -> Result<Vec<f64>> {
        let kkt = self.build_kkt(t)?;
        let lu = checked_lu(&kkt.m, t)?;
        Ok(lu.solve(&kkt.u))
    }

    /// `x* = -G⁻¹(c + Aᵀλ*)`, `λ* = -(A G⁻¹ Aᵀ)⁻¹(A G⁻¹ c + b)`, stacked as `[x*; λ*]`.
    pub fn block_reference_solution(&self, t: f64) -> Result<Vec<f64>> {
        let (g, a, c, b) = (self.g(t), self.a(t), self.c(t), self.b(t));
        self.check_dims(&g, &a, &c, &b)?;
        let g_lu = checked_lu(&g, t)?;
        let g_inv_c = g_lu.solve(&c);
        let at = a.transpose();
        let mut g_inv_at = Matrix::zeros(self.n, self.m);
        for j in 0..self.m {
            let col: Vec<f64> = (0..self.n).map(|i| at[(i, j)]).collect();
            let sol = g_lu.solve(&col);
            for i in 0..self.n {
                g_inv_at[(i, j)] = sol[i];
            }
        }
        let schur = a.matmul(&g_inv_at)?;
        let rhs: Vec<f64> = a.matvec(&g_inv_c).iter().zip(&b).map(|(p, q)| -(p + q)).collect();
        let lambda = checked_lu(&schur, t)?.solve(&rhs);
        let at_lambda = at.matvec(&lambda);
        let w: Vec<f64> = c.iter().zip(&at_lambda).map(|(p, q)| p + q).collect();
        let x: Vec<f64> = g_lu.solve(&w).into_iter().map(|v| -v).collect();
        Ok([x, lambda].concat())
    }

    /// `(‖Gx + c + Aᵀλ‖∞, ‖Ax - b‖∞)` for `z = [x; λ]`.
    pub fn kkt_residuals(&self, t: f64, z: &[f64]) -> Result<(f64, f64)> {
        let (g, a, c, b) = (self.g(t), self.a(t), self.c(t), self.b(t));
        self.check_dims(&g, &a, &c, &b)?;
        if z.len() != self.k() {
            return Err(Error::Structural(format!(
                "z has length {}, expected {}",
                z.len(),
                self.k()
            )));
        }
        let (x, lambda) = z.split_at(self.n);
        let gx = g.matvec(x);
        let atl = a.transpose().matvec(lambda);
        let stat = (0..self.n)
            .map(|i| gx[i] + c[i] + atl[i])
            .fold(0.0, |m: f64, v| m.max(v.abs()));
        let ax = a.matvec(x);
        let feas = (0..self.m).map(|i| ax[i] - b[i]).fold(0.0, |m: f64, v| m.max(v.abs()));
        Ok((stat, feas))
    }
}

fn assemble(g: &Matrix, a: &Matrix, c: &[f64], b: &[f64]) -> Kkt {
    let n = g.rows();
    let k = n + a.rows();
    let m = Matrix::from_fn(k, k, |i, j| match (i < n, j < n) {
        (true, true) => g[(i, j)],
        (true, false) => a[(j - n, i)],
        (false, true) => a[(i - n, j)],
        (false, false) => 0.0,
    });
    let u = c.iter().map(|v| -v).chain(b.iter().copied()).collect();
    Kkt { m, u }
}

/// LU factorization that rejects matrices with condition estimate above [`COND_LIMIT`].
pub fn checked_lu(m: &Matrix, t: f64) -> Result<Lu> {
    let lu = m.lu().map_err(|_| Error::IllConditioned {
        time: t,
        cond: f64::INFINITY,
    })?;
    let cond = lu.condition_inf();
    if cond.is_nan() || cond > COND_LIMIT {
        return Err(Error::IllConditioned { time: t, cond });
    }
    Ok(lu)
}

/// The desk-scale benchmark: `n = 2`, `m = 1`,
/// `G = diag(2 + sin t, 2 + cos t)`, `A = [1, sin t]`,
/// `c = [cos t, -sin t]`, `b = [cos t]`.
pub fn make_benchmark_qp() -> TimeVariantQP {
    let mat = |rows: Vec<Vec<f64>>| Matrix::from_rows(&rows).expect("rectangular");
    TimeVariantQP::new(
        2,
        1,
        Arc::new(move |t: f64| mat(vec![vec![2.0 + t.sin(), 0.0], vec![0.0, 2.0 + t.cos()]])),
        Arc::new(move |t: f64| mat(vec![vec![1.0, t.sin()]])),
        Arc::new(|t: f64| vec![t.cos(), -t.sin()]),
        Arc::new(|t: f64| vec![t.cos()]),
    )
    .with_derivatives(
        Arc::new(move |t: f64| mat(vec![vec![t.cos(), 0.0], vec![0.0, -t.sin()]])),
        Arc::new(move |t: f64| mat(vec![vec![0.0, t.cos()]])),
        Arc::new(|t: f64| vec![-t.sin(), -t.cos()]),
        Arc::new(|t: f64| vec![-t.sin()]),
    )
}

/// `c0 + a·sin(ωt) + b·cos(ωt)`, the entry type of inline problems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrigEntry {
    Const(f64),
    Wave {
        #[serde(default)]
        c0: f64,
        #[serde(default)]
        sin: f64,
        #[serde(default)]
        cos: f64,
        #[serde(default = "one")]
        omega: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl TrigEntry {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TrigEntry::Const(v) => v,
            TrigEntry::Wave { c0, sin, cos, omega } => c0 + sin * (omega * t).sin() + cos * (omega * t).cos(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            TrigEntry::Const(_) => 0.0,
            TrigEntry::Wave { sin, cos, omega, .. } => omega * (sin * (omega * t).cos() - cos * (omega * t).sin()),
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            TrigEntry::Const(v) => v.is_finite(),
            TrigEntry::Wave { c0, sin, cos, omega } => [c0, sin, cos, omega].iter().all(|v| v.is_finite()),
        }
    }
}

/// QP given entrywise by [`TrigEntry`] values; derivatives are analytic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineQp {
    pub g: Vec<Vec<TrigEntry>>,
    pub a: Vec<Vec<TrigEntry>>,
    pub c: Vec<TrigEntry>,
    pub b: Vec<TrigEntry>,
}

impl InlineQp {
    pub fn to_qp(&self) -> Result<TimeVariantQP> {
        let n = self.c.len();
        let m = self.b.len();
        let square = self.g.len() == n && self.g.iter().all(|r| r.len() == n);
        let wide = self.a.len() == m && self.a.iter().all(|r| r.len() == n);
        if !square || !wide || n == 0 {
            return Err(Error::Structural(format!(
                "inline QP needs G {n}x{n} and A {m}x{n} matching c and b"
            )));
        }
        let all = self.g.iter().chain(&self.a).flatten().chain(&self.c).chain(&self.b);
        if !all.clone().all(TrigEntry::is_finite) {
            return Err(Error::Config("inline QP has a non-finite entry".into()));
        }
        let mat = |rows: Vec<Vec<TrigEntry>>, d: bool| -> MatFn {
            Arc::new(move |t| {
                Matrix::from_fn(rows.len(), rows[0].len(), |i, j| {
                    if d {
                        rows[i][j].derivative(t)
                    } else {
                        rows[i][j].eval(t)
                    }
                })
            })
        };
        let vec = |v: Vec<TrigEntry>, d: bool| -> VecFn {
            Arc::new(move |t| v.iter().map(|e| if d { e.derivative(t) } else { e.eval(t) }).collect())
        };
        let a_fn = |d| {
            if m == 0 {
                Arc::new(move |_| Matrix::zeros(0, n)) as MatFn
            } else {
                mat(self.a.clone(), d)
            }
        };
        Ok(TimeVariantQP::new(
            n,
            m,
            mat(self.g.clone(), false),
            a_fn(false),
            vec(self.c.clone(), false),
            vec(self.b.clone(), false),
        )
        .with_derivatives(
            mat(self.g.clone(), true),
            a_fn(true),
            vec(self.c.clone(), true),
            vec(self.b.clone(), true),
        ))
    }
}

/// Sampled TZNN run; vectors are stored flat with stride `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpTrace {
    pub k: usize,
    pub times: Vec<f64>,
    pub z: Vec<f64>,
    pub e: Vec<f64>,
    pub zstar: Vec<f64>,
    /// Set when `Ṁ`, `u̇` came from central differences.
    pub derivative_approx: bool,
}

impl QpTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn z_at(&self, i: usize) -> &[f64] {
        &self.z[i * self.k..(i + 1) * self.k]
    }

    pub fn e_at(&self, i: usize) -> &[f64] {
        &self.e[i * self.k..(i + 1) * self.k]
    }

    pub fn zstar_at(&self, i: usize) -> &[f64] {
        &self.zstar[i * self.k..(i + 1) * self.k]
    }

    pub fn e_norm_inf(&self, i: usize) -> f64 {
        norm_inf(self.e_at(i))
    }

    /// `‖z - z*‖∞` at sample `i`.
    pub fn tracking_error(&self, i: usize) -> f64 {
        self.z_at(i)
            .iter()
            .zip(self.zstar_at(i))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Earliest sample time after which `‖e‖∞ ≤ tol` holds at every sample.
    pub fn settling_time(&self, tol: f64) -> Option<f64> {
        crate::dynamics::settling_index((0..self.len()).map(|i| self.e_norm_inf(i)), tol).map(|i| self.times[i])
    }

    /// `sup ‖e(t)‖∞` over samples with `t ≥ after`.
    pub fn residual(&self, after: f64) -> f64 {
        (0..self.len())
            .filter(|&i| self.times[i] >= after)
            .fold(0.0, |m, i| m.max(self.e_norm_inf(i)))
    }

    /// Write `t, z_1..z_k, e_1..e_k, zstar_1..zstar_k` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["t".to_string()];
        for prefix in ["z", "e", "zstar"] {
            header.extend((1..=self.k).map(|i| format!("{prefix}_{i}")));
        }
        writeln!(out, "{}", header.join(","))?;
        let mut line = String::new();
        for i in 0..self.len() {
            line.clear();
            line.push_str(&format!("{:?}", self.times[i]));
            for v in self.z_at(i).iter().chain(self.e_at(i)).chain(self.zstar_at(i)) {
                line.push_str(&format!(",{v:?}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Seed of the noise stream of component `i`.
pub fn component_seed(master: u64, i: usize) -> u64 {
    // splitmix64 finalizer over the master seed offset by the index
    let mut x = master.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// One evaluation of the model: returns `(M, rhs, ż)` with `M ż = rhs`.
pub fn tznn_rhs(
    qp: &TimeVariantQP,
    law: &AttractingLaw,
    comp: &Compensation,
    t: f64,
    z: &[f64],
    w: &[f64],
) -> Result<(Matrix, Vec<f64>, Vec<f64>)> {
    let kkt = qp.build_kkt(t)?;
    let (dot, _) = qp.kkt_derivative(t)?;
    let mz = kkt.m.matvec(z);
    let mdz = dot.m.matvec(z);
    let rhs: Vec<f64> = (0..z.len())
        .map(|i| {
            let e = mz[i] - kkt.u[i];
            -mdz[i] + dot.u[i] + law.rectify(e) + compensate(comp, e) + w[i]
        })
        .collect();
    // conditioning is checked once per output step by the caller
    let lu = kkt.m.lu().map_err(|_| Error::IllConditioned {
        time: t,
        cond: f64::INFINITY,
    })?;
    let zdot = lu.solve(&rhs);
    Ok((kkt.m, rhs, zdot))
}

/// Neuron-form rewrite `ż = (I - M)ż + rhs` of the same linear relation.
pub fn neuron_form(m: &Matrix, rhs: &[f64], zdot: &[f64]) -> Vec<f64> {
    let mz = m.matvec(zdot);
    (0..zdot.len()).map(|i| zdot[i] - mz[i] + rhs[i]).collect()
}

fn axpy(z: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    z.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

/// Integrate the model from `z0` over `[0, horizon]` with RK4 at step `dt`.
pub fn integrate_tznn(
    qp: &TimeVariantQP,
    law: &AttractingLaw,
    comp: &Compensation,
    dist: &Disturbance,
    z0: &[f64],
    dt: f64,
    horizon: f64,
) -> Result<QpTrace> {
    law.validate()?;
    comp.validate()?;
    dist.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param("dt", format!("{dt} must be > 0")));
    }
    if !(horizon >= dt && horizon.is_finite()) {
        return Err(Error::param("horizon", format!("{horizon} must be finite and >= dt")));
    }
    let k = qp.k();
    if z0.len() != k {
        return Err(Error::Structural(format!("z0 has length {}, expected {k}", z0.len())));
    }
    qp.validate_at(0.0)?;

    let mut samplers: Vec<DisturbanceSampler> = (0..k)
        .map(|i| match *dist {
            Disturbance::BoundedNoise { seed, .. } => dist.with_seed(component_seed(seed, i)).sampler(),
            _ => dist.sampler(),
        })
        .collect();
    let w_at = |samplers: &[DisturbanceSampler], t: f64| -> Vec<f64> { samplers.iter().map(|s| s.at(t)).collect() };
    let f = |t: f64, z: &[f64], w: &[f64]| tznn_rhs(qp, law, comp, t, z, w).map(|(_, _, zd)| zd);

    let n = (horizon / dt).round().max(1.0) as usize;
    let mut trace = QpTrace {
        k,
        times: Vec::with_capacity(n + 1),
        z: Vec::with_capacity((n + 1) * k),
        e: Vec::with_capacity((n + 1) * k),
        zstar: Vec::with_capacity((n + 1) * k),
        derivative_approx: !qp.has_analytic_derivatives(),
    };
    let mut z = z0.to_vec();
    for step in 0..=n {
        let t = step as f64 * dt;
        let kkt = qp.build_kkt(t)?;
        let lu = checked_lu(&kkt.m, t)?;
        let mz = kkt.m.matvec(&z);
        trace.times.push(t);
        trace.z.extend_from_slice(&z);
        trace.e.extend(mz.iter().zip(&kkt.u).map(|(a, b)| a - b));
        trace.zstar.extend(lu.solve(&kkt.u));
        if step == n {
            break;
        }
        samplers.iter_mut().for_each(DisturbanceSampler::begin_step);
        let w0 = w_at(&samplers, t);
        let wm = w_at(&samplers, t + 0.5 * dt);
        let w1 = w_at(&samplers, t + dt);
        let k1 = f(t, &z, &w0)?;
        let k2 = f(t + 0.5 * dt, &axpy(&z, 0.5 * dt, &k1), &wm)?;
        let k3 = f(t + 0.5 * dt, &axpy(&z, 0.5 * dt, &k2), &wm)?;
        let k4 = f(t + dt, &axpy(&z, dt, &k3), &w1)?;
        for i in 0..k {
            z[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t + dt });
        }
    }
    Ok(trace)
}
