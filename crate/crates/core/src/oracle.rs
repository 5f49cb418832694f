//! Reference computations that share no code with the closed forms they
//! check: adaptive Gauss-Kronrod quadrature and an incomplete Beta
//! function evaluated by direct integration.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// `∫_a^b f` to absolute tolerance `tol` by bisection of the worst interval.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..5000 {
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            return Ok(parts.iter().map(|p| p.2 .0).sum());
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    Err(Error::Numeric(format!(
        "quadrature on [{a}, {b}] did not reach tolerance {tol:e}"
    )))
}

/// `∫_0^x t^(p-1) (1-t)^(q-1) dt` for `x ≤ 1/2`; the substitution `t = w^(1/p)`
/// removes the endpoint singularity when `p < 1`.
fn lower_piece(x: f64, p: f64, q: f64, tol: f64) -> Result<f64> {
    if p < 1.0 {
        integrate(|w| (1.0 - w.powf(1.0 / p)).powf(q - 1.0) / p, 0.0, x.powf(p), tol)
    } else {
        integrate(|t| t.powf(p - 1.0) * (1.0 - t).powf(q - 1.0), 0.0, x, tol)
    }
}

/// Unnormalized incomplete Beta integral over `[0, x]`.
fn partial_beta(x: f64, p: f64, q: f64, tol: f64) -> Result<f64> {
    if x <= 0.5 {
        return lower_piece(x, p, q, tol);
    }
    // [0, 1/2] plus [1/2, x] mapped to s = 1 - t on [1 - x, 1/2]
    let head = lower_piece(0.5, p, q, tol)?;
    let tail = lower_piece(0.5, q, p, tol)? - lower_piece(1.0 - x, q, p, tol)?;
    Ok(head + tail)
}

/// `I(x, p, q)` by quadrature, normalized by the quadrature value of `B(p, q)`.
pub fn reg_inc_beta_quadrature(x: f64, p: f64, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(p > 0.0 && q > 0.0) {
        return Err(Error::Domain(format!("I({x}, {p}, {q})")));
    }
    let tol = 1e-14;
    let total = partial_beta(1.0, p, q, tol)?;
    Ok(partial_beta(x, p, q, tol * total.min(1.0))? / total)
}

/// Integrate `ẏ = f(y)` by RK4 until `stop(y)`; returns the end of the first
/// step where `stop` holds, or `None` after `t_max`.
pub fn first_passage(f: impl Fn(f64) -> f64, y0: f64, stop: impl Fn(f64) -> bool, dt: f64, t_max: f64) -> Option<f64> {
    let mut y = y0;
    let mut t = 0.0;
    if stop(y) {
        return Some(0.0);
    }
    while t < t_max {
        let k1 = f(y);
        let k2 = f(y + 0.5 * dt * k1);
        let k3 = f(y + 0.5 * dt * k2);
        let k4 = f(y + dt * k3);
        let next = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if stop(next) {
            return Some(t + dt);
        }
        y = next;
        t += dt;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_polynomials_and_singular() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((v - 0.0).abs() < 1e-13);
        let v = integrate(|x| 1.0 / x.sqrt(), 1e-300, 1.0, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
        let v = integrate(f64::exp, -1.0, 3.0, 1e-13).unwrap();
        assert!((v - (3f64.exp() - (-1f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn quadrature_beta_known_values() {
        assert!((reg_inc_beta_quadrature(0.3, 1.0, 1.0).unwrap() - 0.3).abs() < 1e-13);
        let x: f64 = 0.3;
        let want = 6.0 * x.powi(2) - 8.0 * x.powi(3) + 3.0 * x.powi(4);
        assert!((reg_inc_beta_quadrature(x, 2.0, 3.0).unwrap() - want).abs() < 1e-13);
        // I(x, 1/2, 1/2) = (2/π) asin(√x)
        for x in [0.01, 0.4, 0.9, 0.999] {
            let want = 2.0 / std::f64::consts::PI * f64::sqrt(x).asin();
            assert!((reg_inc_beta_quadrature(x, 0.5, 0.5).unwrap() - want).abs() < 1e-11);
        }
    }

    #[test]
    fn first_passage_exponential() {
        let t = first_passage(|y| -y, 1.0, |y| y <= 0.5, 1e-4, 5.0).unwrap();
        assert!((t - 2f64.ln()).abs() < 2e-4);
        assert_eq!(first_passage(|y| -y, 1.0, |y| y <= 0.0, 1e-2, 1.0), None);
    }
}
