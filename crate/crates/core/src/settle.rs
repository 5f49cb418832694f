//! Closed-form settling-time functions and uniform (fixed-time) bounds.
//!
//! Every function returns a [`SettlingEstimate`] carrying the label of the
//! formula it evaluated, so reports can be traced back to the derivation.
//! Exact estimates give the time for a scalar error starting at `e0` to
//! reach zero; upper bounds hold for every initial error.

use std::f64::consts::{E, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::AttractingLaw;
use crate::specfun::reg_inc_beta;

/// Tolerance used to recognise the special exponent slices
/// `γ1+γ2 = 2`, `2γ1+γ2 = 3` and integer `n` in the bound family.
pub const SLICE_TOL: f64 = 1e-12;
const THETA_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    Exact,
    UpperBound,
}

/// Closed vocabulary of formula labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormulaId {
    #[serde(rename = "sprr1.ts")]
    Sprr1Ts,
    #[serde(rename = "sprr2.ts")]
    Sprr2Ts,
    #[serde(rename = "key.ts")]
    KeyTs,
    #[serde(rename = "key.ts.2")]
    KeyTs2,
    #[serde(rename = "key.ts.3")]
    KeyTs3,
    #[serde(rename = "key.ts.bound")]
    KeyTsBound,
    #[serde(rename = "key.ts.bound.n")]
    KeyTsBoundN,
    #[serde(rename = "key.ts.bound.2")]
    KeyTsBound2,
    #[serde(rename = "key.ts.bound.3")]
    KeyTsBound3,
    #[serde(rename = "rqp.tg")]
    RqpTg,
    #[serde(rename = "1qp.ts.1")]
    Qp1Ts1,
    #[serde(rename = "1qp.ts.2")]
    Qp1Ts2,
    #[serde(rename = "1qp.ts.3")]
    Qp1Ts3,
    #[serde(rename = "1qp.tc.1")]
    Qp1Tc1,
    #[serde(rename = "1qp.tc.2")]
    Qp1Tc2,
    #[serde(rename = "1qp.tc.3")]
    Qp1Tc3,
    #[serde(rename = "thm.gammaC.i.outer")]
    TwoPhaseRhoOuter,
    #[serde(rename = "thm.gammaC.i.inner")]
    TwoPhaseRhoInner,
    #[serde(rename = "thm.gammaC.ii.outer")]
    TwoPhaseOuter,
    #[serde(rename = "thm.gammaC.ii.inner")]
    TwoPhaseInner,
    #[serde(rename = "thm.gammaC.sup")]
    TwoPhaseSup,
    #[serde(rename = "fastqp.t1t2")]
    FastqpT1T2,
    #[serde(rename = "fastqp.t1t2.b")]
    FastqpT1T2B,
    #[serde(rename = "b.fastqfe.t1t2")]
    BFastqfeT1T2,
    #[serde(rename = "b.qfe.t1t2")]
    BQfeT1T2,
    #[serde(rename = "lem.RAtool.i")]
    ReachSublinear,
    #[serde(rename = "lem.RAtool.ii")]
    ReachLinear,
    #[serde(rename = "lem.RAtool.iii")]
    ReachSuperlinear,
}

impl FormulaId {
    pub const ALL: [FormulaId; 28] = [
        Self::Sprr1Ts,
        Self::Sprr2Ts,
        Self::KeyTs,
        Self::KeyTs2,
        Self::KeyTs3,
        Self::KeyTsBound,
        Self::KeyTsBoundN,
        Self::KeyTsBound2,
        Self::KeyTsBound3,
        Self::RqpTg,
        Self::Qp1Ts1,
        Self::Qp1Ts2,
        Self::Qp1Ts3,
        Self::Qp1Tc1,
        Self::Qp1Tc2,
        Self::Qp1Tc3,
        Self::TwoPhaseRhoOuter,
        Self::TwoPhaseRhoInner,
        Self::TwoPhaseOuter,
        Self::TwoPhaseInner,
        Self::TwoPhaseSup,
        Self::FastqpT1T2,
        Self::FastqpT1T2B,
        Self::BFastqfeT1T2,
        Self::BQfeT1T2,
        Self::ReachSublinear,
        Self::ReachLinear,
        Self::ReachSuperlinear,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Self::Sprr1Ts => "sprr1.ts",
            Self::Sprr2Ts => "sprr2.ts",
            Self::KeyTs => "key.ts",
            Self::KeyTs2 => "key.ts.2",
            Self::KeyTs3 => "key.ts.3",
            Self::KeyTsBound => "key.ts.bound",
            Self::KeyTsBoundN => "key.ts.bound.n",
            Self::KeyTsBound2 => "key.ts.bound.2",
            Self::KeyTsBound3 => "key.ts.bound.3",
            Self::RqpTg => "rqp.tg",
            Self::Qp1Ts1 => "1qp.ts.1",
            Self::Qp1Ts2 => "1qp.ts.2",
            Self::Qp1Ts3 => "1qp.ts.3",
            Self::Qp1Tc1 => "1qp.tc.1",
            Self::Qp1Tc2 => "1qp.tc.2",
            Self::Qp1Tc3 => "1qp.tc.3",
            Self::TwoPhaseRhoOuter => "thm.gammaC.i.outer",
            Self::TwoPhaseRhoInner => "thm.gammaC.i.inner",
            Self::TwoPhaseOuter => "thm.gammaC.ii.outer",
            Self::TwoPhaseInner => "thm.gammaC.ii.inner",
            Self::TwoPhaseSup => "thm.gammaC.sup",
            Self::FastqpT1T2 => "fastqp.t1t2",
            Self::FastqpT1T2B => "fastqp.t1t2.b",
            Self::BFastqfeT1T2 => "b.fastqfe.t1t2",
            Self::BQfeT1T2 => "b.qfe.t1t2",
            Self::ReachSublinear => "lem.RAtool.i",
            Self::ReachLinear => "lem.RAtool.ii",
            Self::ReachSuperlinear => "lem.RAtool.iii",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.label() == label)
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlingEstimate {
    pub kind: EstimateKind,
    pub time: f64,
    pub formula_id: FormulaId,
    /// Set when `csc(θπ)` is evaluated with θ too close to 0 or 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl SettlingEstimate {
    fn exact(time: f64, formula_id: FormulaId) -> Self {
        Self {
            kind: EstimateKind::Exact,
            time,
            formula_id,
            warning: None,
        }
    }

    fn bound(time: f64, formula_id: FormulaId) -> Self {
        Self {
            kind: EstimateKind::UpperBound,
            time,
            formula_id,
            warning: None,
        }
    }

    fn with_theta_check(mut self, theta: f64) -> Self {
        if !(THETA_GUARD..=1.0 - THETA_GUARD).contains(&theta) {
            self.warning = Some(format!(
                "theta = {theta:e} is near 0 or 1; csc(theta*pi) is ill-conditioned"
            ));
        }
        self
    }
}

fn pos(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} must be > 0")))
    }
}

fn nonneg(field: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} must be >= 0")))
    }
}

fn unit(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} not in (0, 1)")))
    }
}

fn above_one(field: &'static str, v: f64) -> Result<()> {
    if v > 1.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} must be > 1")))
    }
}

fn check_dprl(kappa1: f64, kappa2: f64, gamma1: f64, gamma2: f64) -> Result<()> {
    pos("kappa1", kappa1)?;
    pos("kappa2", kappa2)?;
    unit("gamma1", gamma1)?;
    above_one("gamma2", gamma2)
}

fn check_e0(e0: f64) -> Result<()> {
    if e0.is_nan() {
        Err(Error::Domain("initial error is NaN".into()))
    } else {
        Ok(())
    }
}

/// `θ = (1-γ1)/(γ2-γ1)`, the Beta-function shape of the double power law.
pub fn theta(gamma1: f64, gamma2: f64) -> f64 {
    (1.0 - gamma1) / (gamma2 - gamma1)
}

fn csc(x: f64) -> f64 {
    1.0 / x.sin()
}

/// Single power-rate law `-κ sig^γ(e)`.
pub fn sprl_settling_time(kappa: f64, gamma: f64, e0: f64) -> Result<SettlingEstimate> {
    pos("kappa", kappa)?;
    unit("gamma", gamma)?;
    check_e0(e0)?;
    let t = e0.abs().powf(1.0 - gamma) / (kappa * (1.0 - gamma));
    Ok(SettlingEstimate::exact(t, FormulaId::Sprr1Ts))
}

/// Single power-rate law with a linear term, `-ρe - κ sig^γ(e)`.
pub fn sprl_alt_settling_time(rho: f64, kappa: f64, gamma: f64, e0: f64) -> Result<SettlingEstimate> {
    pos("rho", rho)?;
    pos("kappa", kappa)?;
    unit("gamma", gamma)?;
    check_e0(e0)?;
    let t = ((rho / kappa) * e0.abs().powf(1.0 - gamma)).ln_1p() / (rho * (1.0 - gamma));
    Ok(SettlingEstimate::exact(t, FormulaId::Sprr2Ts))
}

/// General double power-rate settling time through the incomplete Beta
/// function, without special-case dispatch.
pub fn dprl_settling_time_general(
    kappa1: f64,
    kappa2: f64,
    gamma1: f64,
    gamma2: f64,
    e0: f64,
) -> Result<SettlingEstimate> {
    check_dprl(kappa1, kappa2, gamma1, gamma2)?;
    check_e0(e0)?;
    let th = theta(gamma1, gamma2);
    let a = e0.abs();
    if a == 0.0 {
        return Ok(SettlingEstimate::exact(0.0, FormulaId::KeyTs).with_theta_check(th));
    }
    // 1 - c = κ2|e0|^(γ2-γ1) / (κ2|e0|^(γ2-γ1) + κ1), formed without cancellation.
    let grow = kappa2 * a.powf(gamma2 - gamma1);
    let one_minus_c = if grow.is_infinite() {
        1.0
    } else {
        grow / (grow + kappa1)
    };
    let scale = PI * csc(th * PI) / (kappa1 * (gamma2 - gamma1)) * (kappa1 / kappa2).powf(th);
    let t = scale * reg_inc_beta(one_minus_c, th, 1.0 - th)?;
    Ok(SettlingEstimate::exact(t, FormulaId::KeyTs).with_theta_check(th))
}

/// Arctan closed form valid on the slice `γ1 + γ2 = 2`.
pub fn dprl_settling_time_sum2(kappa1: f64, kappa2: f64, gamma1: f64, e0: f64) -> Result<SettlingEstimate> {
    pos("kappa1", kappa1)?;
    pos("kappa2", kappa2)?;
    unit("gamma1", gamma1)?;
    check_e0(e0)?;
    let y = e0.abs().powf(1.0 - gamma1);
    let t = ((kappa2 / kappa1).sqrt() * y).atan() / ((kappa1 * kappa2).sqrt() * (1.0 - gamma1));
    Ok(SettlingEstimate::exact(t, FormulaId::KeyTs2))
}

/// Logarithm/arctan closed form valid on the slice `2γ1 + γ2 = 3`.
pub fn dprl_settling_time_sum3(kappa1: f64, kappa2: f64, gamma1: f64, e0: f64) -> Result<SettlingEstimate> {
    pos("kappa1", kappa1)?;
    pos("kappa2", kappa2)?;
    unit("gamma1", gamma1)?;
    check_e0(e0)?;
    let a = (kappa1 / kappa2).cbrt();
    let y = e0.abs().powf(1.0 - gamma1);
    let s3 = 3f64.sqrt();
    let t = if y.is_infinite() {
        // limit y → ∞ of the bracket: ln 1 + √3π + √3π/3
        4.0 * s3 * PI / 3.0 / (6.0 * kappa2 * a * a * (1.0 - gamma1))
    } else {
        let log_term = ((y * y + 2.0 * a * y + a * a) / (y * y - a * y + a * a)).ln();
        let atan_term = 2.0 * s3 * (2.0 * s3 / (3.0 * a) * (y - a / 2.0)).atan();
        (log_term + atan_term + s3 * PI / 3.0) / (6.0 * kappa2 * a * a * (1.0 - gamma1))
    };
    Ok(SettlingEstimate::exact(t, FormulaId::KeyTs3))
}

/// Double power-rate law `-κ1 sig^γ1(e) - κ2 sig^γ2(e)`; dispatches to the
/// closed forms on their parameter slices.
pub fn dprl_settling_time(kappa1: f64, kappa2: f64, gamma1: f64, gamma2: f64, e0: f64) -> Result<SettlingEstimate> {
    check_dprl(kappa1, kappa2, gamma1, gamma2)?;
    if (gamma1 + gamma2 - 2.0).abs() <= SLICE_TOL {
        dprl_settling_time_sum2(kappa1, kappa2, gamma1, e0)
    } else if (2.0 * gamma1 + gamma2 - 3.0).abs() <= SLICE_TOL {
        dprl_settling_time_sum3(kappa1, kappa2, gamma1, e0)
    } else {
        dprl_settling_time_general(kappa1, kappa2, gamma1, gamma2, e0)
    }
}

/// Uniform bound of the double power-rate law, general form.
pub fn dprl_settling_bound_general(kappa1: f64, kappa2: f64, gamma1: f64, gamma2: f64) -> Result<SettlingEstimate> {
    check_dprl(kappa1, kappa2, gamma1, gamma2)?;
    let th = theta(gamma1, gamma2);
    let t = PI * csc(th * PI) / (kappa1 * (gamma2 - gamma1)) * (kappa1 / kappa2).powf(th);
    Ok(SettlingEstimate::bound(t, FormulaId::KeyTsBound).with_theta_check(th))
}

/// Bound on the slice `γ2 - γ1 = n(1-γ1)`.
pub fn dprl_settling_bound_n(kappa1: f64, kappa2: f64, gamma1: f64, n: f64) -> Result<SettlingEstimate> {
    pos("kappa1", kappa1)?;
    pos("kappa2", kappa2)?;
    unit("gamma1", gamma1)?;
    above_one("n", n)?;
    let t = PI / (n * kappa1 * (1.0 - gamma1) * (PI / n).sin()) * (kappa1 / kappa2).powf(1.0 / n);
    Ok(SettlingEstimate::bound(t, FormulaId::KeyTsBoundN))
}

/// Bound on the slice `γ1 + γ2 = 2`.
pub fn dprl_settling_bound_2(kappa1: f64, kappa2: f64, gamma1: f64) -> Result<SettlingEstimate> {
    pos("kappa1", kappa1)?;
    pos("kappa2", kappa2)?;
    unit("gamma1", gamma1)?;
    let t = PI / (2.0 * (kappa1 * kappa2).sqrt() * (1.0 - gamma1));
    Ok(SettlingEstimate::bound(t, FormulaId::KeyTsBound2))
}

/// Bound on the slice `2γ1 + γ2 = 3`.
pub fn dprl_settling_bound_3(kappa1: f64, kappa2: f64, gamma1: f64) -> Result<SettlingEstimate> {
    pos("kappa1", kappa1)?;
    pos("kappa2", kappa2)?;
    unit("gamma1", gamma1)?;
    let t = 2.0 * 3f64.sqrt() * PI / (9.0 * kappa2 * (1.0 - gamma1)) * (kappa1 / kappa2).powf(-2.0 / 3.0);
    Ok(SettlingEstimate::bound(t, FormulaId::KeyTsBound3))
}

/// Uniform bound of the double power-rate law, labelled with the
/// specialisation that applies to `n = (γ2-γ1)/(1-γ1)`.
pub fn dprl_settling_bound(kappa1: f64, kappa2: f64, gamma1: f64, gamma2: f64) -> Result<SettlingEstimate> {
    check_dprl(kappa1, kappa2, gamma1, gamma2)?;
    let n = (gamma2 - gamma1) / (1.0 - gamma1);
    if (n - 2.0).abs() <= SLICE_TOL {
        dprl_settling_bound_2(kappa1, kappa2, gamma1)
    } else if (n - 3.0).abs() <= SLICE_TOL {
        dprl_settling_bound_3(kappa1, kappa2, gamma1)
    } else if (n - n.round()).abs() <= SLICE_TOL {
        dprl_settling_bound_n(kappa1, kappa2, gamma1, n.round())
    } else {
        dprl_settling_bound_general(kappa1, kappa2, gamma1, gamma2)
    }
}

/// Two-phase bound for the double power-rate law with a linear term: the
/// linear gain is credited to `κ1` while `|e| ≥ 1` and to `κ2` below.
pub fn dprl_alt_settling_bound(
    rho: f64,
    kappa1: f64,
    kappa2: f64,
    gamma1: f64,
    gamma2: f64,
) -> Result<SettlingEstimate> {
    pos("rho", rho)?;
    check_dprl(kappa1, kappa2, gamma1, gamma2)?;
    let th = theta(gamma1, gamma2);
    let total = rho + kappa1 + kappa2;
    let b = (rho + kappa1) / total;
    let one_minus_c = (rho + kappa2) / total;
    let cs = PI * csc(th * PI) / (gamma2 - gamma1);
    let arrival = cs / kappa1 * (kappa1 / (rho + kappa2)).powf(th) * reg_inc_beta(one_minus_c, th, 1.0 - th)?;
    let travel = cs / kappa2 * (kappa2 / (rho + kappa1)).powf(1.0 - th) * reg_inc_beta(b, 1.0 - th, th)?;
    Ok(SettlingEstimate::bound(arrival + travel, FormulaId::RqpTg).with_theta_check(th))
}

/// Regime of the three-term law on the slice `γ1+γ2 = 2`, by the sign of
/// `a = 4κ1κ2 - ρ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sum2Regime {
    Oscillatory,
    Critical,
    Overdamped,
}

/// Classify `a = 4κ1κ2 - ρ²` with tolerance `1e-9·max(1, 4κ1κ2)`.
pub fn sum2_regime(rho: f64, kappa1: f64, kappa2: f64) -> (Sum2Regime, f64) {
    let four_k = 4.0 * kappa1 * kappa2;
    let a = four_k - rho * rho;
    let tol = 1e-9 * four_k.max(1.0);
    let regime = if a.abs() <= tol {
        Sum2Regime::Critical
    } else if a > 0.0 {
        Sum2Regime::Oscillatory
    } else {
        Sum2Regime::Overdamped
    };
    (regime, a)
}

fn check_sum2(rho: f64, kappa1: f64, kappa2: f64, gamma1: f64) -> Result<()> {
    nonneg("rho", rho)?;
    pos("kappa1", kappa1)?;
    pos("kappa2", kappa2)?;
    unit("gamma1", gamma1)
}

/// Exact settling time of `-ρe - κ1 sig^γ1(e) - κ2 sig^(2-γ1)(e)`.
pub fn dprl_alt_sum2_settling_time(
    rho: f64,
    kappa1: f64,
    kappa2: f64,
    gamma1: f64,
    e0: f64,
) -> Result<SettlingEstimate> {
    check_sum2(rho, kappa1, kappa2, gamma1)?;
    check_e0(e0)?;
    let y = e0.abs().powf(1.0 - gamma1);
    let g = 1.0 - gamma1;
    let (regime, a) = sum2_regime(rho, kappa1, kappa2);
    let est = match regime {
        Sum2Regime::Oscillatory => {
            let sa = a.sqrt();
            let arg = if y.is_infinite() {
                sa / rho
            } else {
                sa * y / (2.0 * kappa1 + rho * y)
            };
            // atan2 keeps ρ = 0 (argument → ∞) well defined
            let ang = if y.is_infinite() { sa.atan2(rho) } else { arg.atan() };
            SettlingEstimate::exact(2.0 / (g * sa) * ang, FormulaId::Qp1Ts1)
        }
        Sum2Regime::Overdamped => {
            let s = (-a).sqrt();
            let ratio = if y.is_infinite() {
                (rho + s) / (rho - s)
            } else {
                let q = 2.0 * kappa2 * y;
                (rho + s) * (q + rho - s) / ((rho - s) * (q + rho + s))
            };
            SettlingEstimate::exact(ratio.ln() / (g * s), FormulaId::Qp1Ts2)
        }
        Sum2Regime::Critical => {
            let t = if y.is_infinite() {
                2.0 / (g * rho)
            } else {
                4.0 / (g * rho) * (kappa2 * y) / (2.0 * kappa2 * y + rho)
            };
            SettlingEstimate::exact(t, FormulaId::Qp1Ts3)
        }
    };
    Ok(est)
}

/// Uniform bound matching [`dprl_alt_sum2_settling_time`].
pub fn dprl_alt_sum2_bound(rho: f64, kappa1: f64, kappa2: f64, gamma1: f64) -> Result<SettlingEstimate> {
    check_sum2(rho, kappa1, kappa2, gamma1)?;
    let g = 1.0 - gamma1;
    let (regime, a) = sum2_regime(rho, kappa1, kappa2);
    let est = match regime {
        Sum2Regime::Oscillatory => {
            let sa = a.sqrt();
            SettlingEstimate::bound(2.0 / (g * sa) * sa.atan2(rho), FormulaId::Qp1Tc1)
        }
        Sum2Regime::Overdamped => {
            let s = (-a).sqrt();
            SettlingEstimate::bound(((rho + s) / (rho - s)).ln() / (g * s), FormulaId::Qp1Tc2)
        }
        Sum2Regime::Critical => SettlingEstimate::bound(2.0 / (rho * g), FormulaId::Qp1Tc3),
    };
    Ok(est)
}

fn check_pe(rho: f64, kappa: f64, gamma1: f64, gamma2: f64, estar: f64) -> Result<()> {
    nonneg("rho", rho)?;
    pos("kappa", kappa)?;
    unit("gamma1", gamma1)?;
    above_one("gamma2", gamma2)?;
    pos("estar", estar)
}

/// Exact settling time of the two-phase power-exponential law. The branch
/// `|e0| ≥ e*` covers the transition state itself.
pub fn two_phase_pe_settling_time(
    rho: f64,
    kappa: f64,
    gamma1: f64,
    gamma2: f64,
    estar: f64,
    e0: f64,
) -> Result<SettlingEstimate> {
    check_pe(rho, kappa, gamma1, gamma2, estar)?;
    check_e0(e0)?;
    let x = e0.abs() / estar;
    let est = if rho > 0.0 {
        let reach = |x: f64| estar / (rho * (1.0 - gamma1)) * ((rho / kappa) * x.powf(1.0 - gamma1)).ln_1p();
        if x >= 1.0 {
            let k = kappa / rho;
            let travel = estar / (rho * (gamma2 - 1.0)) * ((1.0 + k) / (x.powf(1.0 - gamma2) + k)).ln();
            SettlingEstimate::exact(reach(1.0) + travel, FormulaId::TwoPhaseRhoOuter)
        } else {
            SettlingEstimate::exact(reach(x), FormulaId::TwoPhaseRhoInner)
        }
    } else if x >= 1.0 {
        let t = estar / (kappa * (1.0 - gamma1)) + estar / (kappa * (gamma2 - 1.0))
            - estar.powf(gamma2) / (kappa * (gamma2 - 1.0)) * e0.abs().powf(1.0 - gamma2);
        SettlingEstimate::exact(t, FormulaId::TwoPhaseOuter)
    } else {
        let t = estar / (kappa * (1.0 - gamma1)) * x.powf(1.0 - gamma1);
        SettlingEstimate::exact(t, FormulaId::TwoPhaseInner)
    };
    Ok(est)
}

/// Supremum over `e0` of [`two_phase_pe_settling_time`].
pub fn two_phase_pe_settling_bound(
    rho: f64,
    kappa: f64,
    gamma1: f64,
    gamma2: f64,
    estar: f64,
) -> Result<SettlingEstimate> {
    check_pe(rho, kappa, gamma1, gamma2, estar)?;
    let t = if rho > 0.0 {
        let r = rho / kappa;
        estar / (rho * (1.0 - gamma1)) * r.ln_1p() + estar / (rho * (gamma2 - 1.0)) * r.ln_1p()
    } else {
        estar / (kappa * (1.0 - gamma1)) + estar / (kappa * (gamma2 - 1.0))
    };
    Ok(SettlingEstimate::bound(t, FormulaId::TwoPhaseSup))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PiecewiseVariant {
    A,
    B,
}

/// Two-logarithm bound for the piecewise-linear exponents (requires `ρ > 0`).
pub fn piecewise_pe_bound(
    rho: f64,
    kappa: f64,
    gamma1: f64,
    gamma2: f64,
    estar: f64,
    delta: f64,
    variant: PiecewiseVariant,
) -> Result<SettlingEstimate> {
    check_pe(rho, kappa, gamma1, gamma2, estar)?;
    unit("delta", delta)?;
    if rho == 0.0 {
        return Err(Error::Unsupported(
            "no closed-form bound for piecewise exponents without a linear term".into(),
        ));
    }
    let (knot, id) = match variant {
        PiecewiseVariant::A => (delta, FormulaId::FastqpT1T2),
        PiecewiseVariant::B => (1.0 + delta, FormulaId::FastqpT1T2B),
    };
    let r = rho / kappa;
    let t = estar / (rho * (1.0 - gamma1)) * (r * knot.powf(1.0 - gamma1)).ln_1p()
        + estar / (rho * (gamma2 - 1.0)) * (r * knot.powf(1.0 - gamma2)).ln_1p();
    Ok(SettlingEstimate::bound(t, id))
}

/// `min_{s∈(0,1]} s^(β s^(2m)) = exp(-β/(2m·e))`.
pub fn fractional_floor(beta: f64, m: u32) -> f64 {
    (-beta / (2.0 * m as f64 * E)).exp()
}

/// Bound for the fractional exponent; the `ρ = 0` form is used when there is
/// no linear term.
pub fn fractional_pe_bound(
    rho: f64,
    kappa: f64,
    alpha: f64,
    beta: f64,
    m: u32,
    estar: f64,
) -> Result<SettlingEstimate> {
    nonneg("rho", rho)?;
    pos("kappa", kappa)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", format!("{alpha} not in [0, 1)")));
    }
    if !(beta > 2.0 && beta.is_finite()) {
        return Err(Error::param("beta", format!("{beta} must be > 2")));
    }
    if m == 0 {
        return Err(Error::param("m", "must be a positive integer"));
    }
    pos("estar", estar)?;
    let floor = fractional_floor(beta, m);
    let half = beta / 2.0 - 1.0;
    let est = if rho > 0.0 {
        let t = estar / (rho * half) * (rho / kappa).ln_1p()
            + estar / (rho * (1.0 - alpha)) * (rho / (kappa * floor)).ln_1p();
        SettlingEstimate::bound(t, FormulaId::BFastqfeT1T2)
    } else {
        let t = estar / (kappa * half) + estar / (kappa * floor * (1.0 - alpha));
        SettlingEstimate::bound(t, FormulaId::BQfeT1T2)
    };
    Ok(est)
}

/// Residual region and reach time for `V̇ ≤ -(K+R)V^α + Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachEstimate {
    pub radius: f64,
    pub time: SettlingEstimate,
}

/// Reach-time estimate for practical stability with gains split as `K + R`.
///
/// The sub-linear case subtracts `(Δ/R)^(1-α)` exactly as derived, which
/// can exceed `radius^(1-α)`; negative results are clamped to zero.
pub fn practical_reach_time(k: f64, r: f64, alpha: f64, delta: f64, v0: f64) -> Result<ReachEstimate> {
    pos("K", k)?;
    pos("R", r)?;
    pos("alpha", alpha)?;
    pos("Delta", delta)?;
    nonneg("V0", v0)?;
    let ratio = delta / r;
    let radius = ratio.powf(1.0 / alpha);
    let (time, id) = if alpha < 1.0 {
        (
            (v0.powf(1.0 - alpha) - ratio.powf(1.0 - alpha)) / (k * (1.0 - alpha)),
            FormulaId::ReachSublinear,
        )
    } else if alpha == 1.0 {
        ((v0 / ratio).ln() / k, FormulaId::ReachLinear)
    } else {
        (
            ((1.0 / ratio).powf(alpha - 1.0) - (1.0 / v0).powf(alpha - 1.0)) / (k * (alpha - 1.0)),
            FormulaId::ReachSuperlinear,
        )
    };
    let time = if v0 <= radius { 0.0 } else { time.max(0.0) };
    Ok(ReachEstimate {
        radius,
        time: SettlingEstimate::bound(time, id),
    })
}

/// Exact settling time of `law` from `e0`, when a closed form exists.
pub fn law_settling_time(law: &AttractingLaw, e0: f64) -> Result<Option<SettlingEstimate>> {
    law.validate()?;
    let est = match *law {
        AttractingLaw::Sprl { kappa, gamma } => Some(sprl_settling_time(kappa, gamma, e0)?),
        AttractingLaw::SprlAlt { rho, kappa, gamma } => Some(sprl_alt_settling_time(rho, kappa, gamma, e0)?),
        AttractingLaw::Dprl {
            kappa1,
            kappa2,
            gamma1,
            gamma2,
        } => Some(dprl_settling_time(kappa1, kappa2, gamma1, gamma2, e0)?),
        AttractingLaw::DprlAlt {
            rho,
            kappa1,
            kappa2,
            gamma1,
            gamma2,
        } => {
            if (gamma1 + gamma2 - 2.0).abs() <= SLICE_TOL {
                Some(dprl_alt_sum2_settling_time(rho, kappa1, kappa2, gamma1, e0)?)
            } else {
                None
            }
        }
        AttractingLaw::TwoPhasePE {
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
        } => Some(two_phase_pe_settling_time(rho, kappa, gamma1, gamma2, estar, e0)?),
        AttractingLaw::PiecewiseExpA { .. }
        | AttractingLaw::PiecewiseExpB { .. }
        | AttractingLaw::FractionalExp { .. } => None,
    };
    Ok(est)
}

/// Uniform bound for `law`, when the law is fixed-time stable and a bound
/// is available. Errors for piecewise exponents without a linear term.
pub fn law_settling_bound(law: &AttractingLaw) -> Result<Option<SettlingEstimate>> {
    law.validate()?;
    let est = match *law {
        AttractingLaw::Sprl { .. } | AttractingLaw::SprlAlt { .. } => None,
        AttractingLaw::Dprl {
            kappa1,
            kappa2,
            gamma1,
            gamma2,
        } => Some(dprl_settling_bound(kappa1, kappa2, gamma1, gamma2)?),
        AttractingLaw::DprlAlt {
            rho,
            kappa1,
            kappa2,
            gamma1,
            gamma2,
        } => Some(dprl_alt_settling_bound(rho, kappa1, kappa2, gamma1, gamma2)?),
        AttractingLaw::TwoPhasePE {
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
        } => Some(two_phase_pe_settling_bound(rho, kappa, gamma1, gamma2, estar)?),
        AttractingLaw::PiecewiseExpA {
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
            delta,
        } => Some(piecewise_pe_bound(
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
            delta,
            PiecewiseVariant::A,
        )?),
        AttractingLaw::PiecewiseExpB {
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
            delta,
        } => Some(piecewise_pe_bound(
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
            delta,
            PiecewiseVariant::B,
        )?),
        AttractingLaw::FractionalExp {
            rho,
            kappa,
            alpha,
            beta,
            m,
            estar,
        } => Some(fractional_pe_bound(rho, kappa, alpha, beta, m, estar)?),
    };
    Ok(est)
}

/// Every bound that applies to `law`: the primary one from
/// [`law_settling_bound`] plus the closed-form uniform bound of the
/// three-term law on its `γ1+γ2 = 2` slice.
pub fn law_bounds(law: &AttractingLaw) -> Result<Vec<SettlingEstimate>> {
    let mut out: Vec<SettlingEstimate> = law_settling_bound(law)?.into_iter().collect();
    if let AttractingLaw::DprlAlt {
        rho,
        kappa1,
        kappa2,
        gamma1,
        gamma2,
    } = *law
    {
        if (gamma1 + gamma2 - 2.0).abs() <= SLICE_TOL {
            out.push(dprl_alt_sum2_bound(rho, kappa1, kappa2, gamma1)?);
        }
    }
    Ok(out)
}

/// The tightest available uniform bound.
pub fn tightest_bound(law: &AttractingLaw) -> Result<Option<SettlingEstimate>> {
    Ok(law_bounds(law)?.into_iter().min_by(|a, b| a.time.total_cmp(&b.time)))
}
