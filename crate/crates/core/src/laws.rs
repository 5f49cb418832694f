//! Rectifying actions `r(e)`: the attracting laws that drive each error
//! component to zero in finite or fixed time.
//!
//! Every law is odd in `e` and opposes its sign. The power-exponential
//! family (`TwoPhasePE`, `PiecewiseExpA/B`, `FractionalExp`) scales the
//! error by the transition state `estar` and uses a state-dependent
//! exponent `γ(e)`, which is always evaluated on `|e|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed power `|x|^γ · sgn(x)`, exactly zero at the origin.
#[inline]
pub fn sig(x: f64, gamma: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(gamma).copysign(x)
    }
}

/// One rectifying action and its parameters.
///
/// Deserialization validates parameter ranges, so a law read from a config
/// file is always usable. Values built by hand should go through
/// [`AttractingLaw::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", try_from = "unchecked::Law")]
pub enum AttractingLaw {
    #[serde(rename = "SPRL")]
    Sprl { kappa: f64, gamma: f64 },
    #[serde(rename = "SPRLalt")]
    SprlAlt { rho: f64, kappa: f64, gamma: f64 },
    #[serde(rename = "DPRL")]
    Dprl {
        kappa1: f64,
        kappa2: f64,
        gamma1: f64,
        gamma2: f64,
    },
    #[serde(rename = "DPRLalt")]
    DprlAlt {
        rho: f64,
        kappa1: f64,
        kappa2: f64,
        gamma1: f64,
        gamma2: f64,
    },
    TwoPhasePE {
        rho: f64,
        kappa: f64,
        gamma1: f64,
        gamma2: f64,
        estar: f64,
    },
    PiecewiseExpA {
        rho: f64,
        kappa: f64,
        gamma1: f64,
        gamma2: f64,
        estar: f64,
        delta: f64,
    },
    PiecewiseExpB {
        rho: f64,
        kappa: f64,
        gamma1: f64,
        gamma2: f64,
        estar: f64,
        delta: f64,
    },
    FractionalExp {
        rho: f64,
        kappa: f64,
        alpha: f64,
        beta: f64,
        m: u32,
        estar: f64,
    },
}

mod unchecked {
    use serde::Deserialize;

    // Mirror of `AttractingLaw` used only to validate on deserialization.
    #[derive(Deserialize)]
    #[serde(tag = "type", deny_unknown_fields)]
    pub enum Law {
        #[serde(rename = "SPRL")]
        Sprl { kappa: f64, gamma: f64 },
        #[serde(rename = "SPRLalt")]
        SprlAlt { rho: f64, kappa: f64, gamma: f64 },
        #[serde(rename = "DPRL")]
        Dprl {
            kappa1: f64,
            kappa2: f64,
            gamma1: f64,
            gamma2: f64,
        },
        #[serde(rename = "DPRLalt")]
        DprlAlt {
            rho: f64,
            kappa1: f64,
            kappa2: f64,
            gamma1: f64,
            gamma2: f64,
        },
        TwoPhasePE {
            rho: f64,
            kappa: f64,
            gamma1: f64,
            gamma2: f64,
            estar: f64,
        },
        PiecewiseExpA {
            rho: f64,
            kappa: f64,
            gamma1: f64,
            gamma2: f64,
            estar: f64,
            delta: f64,
        },
        PiecewiseExpB {
            rho: f64,
            kappa: f64,
            gamma1: f64,
            gamma2: f64,
            estar: f64,
            delta: f64,
        },
        FractionalExp {
            rho: f64,
            kappa: f64,
            alpha: f64,
            beta: f64,
            m: u32,
            estar: f64,
        },
    }
}

impl TryFrom<unchecked::Law> for AttractingLaw {
    type Error = Error;

    fn try_from(raw: unchecked::Law) -> Result<Self> {
        use unchecked::Law as L;
        let law = match raw {
            L::Sprl { kappa, gamma } => Self::Sprl { kappa, gamma },
            L::SprlAlt { rho, kappa, gamma } => Self::SprlAlt { rho, kappa, gamma },
            L::Dprl {
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            } => Self::Dprl {
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            },
            L::DprlAlt {
                rho,
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            } => Self::DprlAlt {
                rho,
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            },
            L::TwoPhasePE {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
            } => Self::TwoPhasePE {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
            },
            L::PiecewiseExpA {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
                delta,
            } => Self::PiecewiseExpA {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
                delta,
            },
            L::PiecewiseExpB {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
                delta,
            } => Self::PiecewiseExpB {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
                delta,
            },
            L::FractionalExp {
                rho,
                kappa,
                alpha,
                beta,
                m,
                estar,
            } => Self::FractionalExp {
                rho,
                kappa,
                alpha,
                beta,
                m,
                estar,
            },
        };
        law.validate()?;
        Ok(law)
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} must be > 0")))
    }
}

fn nonnegative(field: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} must be >= 0")))
    }
}

fn unit_open(field: &'static str, v: f64) -> Result<()> {
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

impl AttractingLaw {
    /// Checks every parameter against its admissible range.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Sprl { kappa, gamma } => {
                positive("kappa", kappa)?;
                unit_open("gamma", gamma)
            }
            Self::SprlAlt { rho, kappa, gamma } => {
                positive("rho", rho)?;
                positive("kappa", kappa)?;
                unit_open("gamma", gamma)
            }
            Self::Dprl {
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            } => {
                positive("kappa1", kappa1)?;
                positive("kappa2", kappa2)?;
                unit_open("gamma1", gamma1)?;
                above_one("gamma2", gamma2)
            }
            Self::DprlAlt {
                rho,
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            } => {
                positive("rho", rho)?;
                positive("kappa1", kappa1)?;
                positive("kappa2", kappa2)?;
                unit_open("gamma1", gamma1)?;
                above_one("gamma2", gamma2)
            }
            Self::TwoPhasePE {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
            } => {
                nonnegative("rho", rho)?;
                positive("kappa", kappa)?;
                unit_open("gamma1", gamma1)?;
                above_one("gamma2", gamma2)?;
                positive("estar", estar)
            }
            Self::PiecewiseExpA {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
                delta,
            }
            | Self::PiecewiseExpB {
                rho,
                kappa,
                gamma1,
                gamma2,
                estar,
                delta,
            } => {
                nonnegative("rho", rho)?;
                positive("kappa", kappa)?;
                unit_open("gamma1", gamma1)?;
                above_one("gamma2", gamma2)?;
                positive("estar", estar)?;
                unit_open("delta", delta)
            }
            Self::FractionalExp {
                rho,
                kappa,
                alpha,
                beta,
                m,
                estar,
            } => {
                nonnegative("rho", rho)?;
                positive("kappa", kappa)?;
                if !(0.0..1.0).contains(&alpha) {
                    return Err(Error::param("alpha", format!("{alpha} not in [0, 1)")));
                }
                if !(beta > 2.0 && beta.is_finite()) {
                    return Err(Error::param("beta", format!("{beta} must be > 2")));
                }
                if m == 0 {
                    return Err(Error::param("m", "must be a positive integer"));
                }
                positive("estar", estar)
            }
        }
    }

    /// Short tag used in config files and reports.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Sprl { .. } => "SPRL",
            Self::SprlAlt { .. } => "SPRLalt",
            Self::Dprl { .. } => "DPRL",
            Self::DprlAlt { .. } => "DPRLalt",
            Self::TwoPhasePE { .. } => "TwoPhasePE",
            Self::PiecewiseExpA { .. } => "PiecewiseExpA",
            Self::PiecewiseExpB { .. } => "PiecewiseExpB",
            Self::FractionalExp { .. } => "FractionalExp",
        }
    }

    /// Coefficient of the linear term, zero for pure power laws.
    pub fn rho(&self) -> f64 {
        match *self {
            Self::Sprl { .. } | Self::Dprl { .. } => 0.0,
            Self::SprlAlt { rho, .. }
            | Self::DprlAlt { rho, .. }
            | Self::TwoPhasePE { rho, .. }
            | Self::PiecewiseExpA { rho, .. }
            | Self::PiecewiseExpB { rho, .. }
            | Self::FractionalExp { rho, .. } => rho,
        }
    }

    /// Transition state of the power-exponential laws.
    pub fn estar(&self) -> Option<f64> {
        match *self {
            Self::TwoPhasePE { estar, .. }
            | Self::PiecewiseExpA { estar, .. }
            | Self::PiecewiseExpB { estar, .. }
            | Self::FractionalExp { estar, .. } => Some(estar),
            _ => None,
        }
    }

    /// State-dependent exponent `γ(e)` of the power-exponential laws.
    pub fn exponent(&self, e: f64) -> Result<f64> {
        match *self {
            Self::TwoPhasePE {
                gamma1, gamma2, estar, ..
            } => Ok(if e.abs() < estar { gamma1 } else { gamma2 }),
            Self::PiecewiseExpA {
                gamma1,
                gamma2,
                estar,
                delta,
                ..
            } => {
                let x = e.abs() / estar;
                Ok(if x <= delta {
                    gamma1
                } else if x < 1.0 {
                    (gamma2 - gamma1) / (1.0 - delta) * (x - 1.0) + gamma2
                } else {
                    gamma2
                })
            }
            Self::PiecewiseExpB {
                gamma1,
                gamma2,
                estar,
                delta,
                ..
            } => {
                let x = e.abs() / estar;
                Ok(if x <= 1.0 {
                    gamma1
                } else if x < 1.0 + delta {
                    (gamma2 - gamma1) / delta * (x - 1.0) + gamma1
                } else {
                    gamma2
                })
            }
            Self::FractionalExp {
                alpha, beta, m, estar, ..
            } => {
                // (α + β s)/(1 + s); the large-s form keeps s = ∞ finite.
                let s = (e.abs() / estar).powi(2 * m as i32);
                if s <= 1.0 {
                    Ok((alpha + beta * s) / (1.0 + s))
                } else {
                    Ok(beta - (beta - alpha) / (1.0 + s))
                }
            }
            _ => Err(Error::Unsupported(format!("{} has a constant exponent", self.name()))),
        }
    }

    /// Rectifying action `r(e)`.
    pub fn rectify(&self, e: f64) -> f64 {
        if e == 0.0 {
            return 0.0;
        }
        match *self {
            Self::Sprl { kappa, gamma } => -kappa * sig(e, gamma),
            Self::SprlAlt { rho, kappa, gamma } => -rho * e - kappa * sig(e, gamma),
            Self::Dprl {
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            } => -kappa1 * sig(e, gamma1) - kappa2 * sig(e, gamma2),
            Self::DprlAlt {
                rho,
                kappa1,
                kappa2,
                gamma1,
                gamma2,
            } => -rho * e - kappa1 * sig(e, gamma1) - kappa2 * sig(e, gamma2),
            Self::TwoPhasePE { rho, kappa, estar, .. }
            | Self::PiecewiseExpA { rho, kappa, estar, .. }
            | Self::PiecewiseExpB { rho, kappa, estar, .. }
            | Self::FractionalExp { rho, kappa, estar, .. } => {
                // exponent() cannot fail for these variants
                let gamma = self.exponent(e).unwrap_or(1.0);
                let x = e / estar;
                -rho * x - kappa * sig(x, gamma)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn catalog() -> Vec<AttractingLaw> {
        vec![
            AttractingLaw::Sprl { kappa: 1.5, gamma: 0.4 },
            AttractingLaw::SprlAlt {
                rho: 0.7,
                kappa: 1.0,
                gamma: 0.6,
            },
            AttractingLaw::Dprl {
                kappa1: 1.0,
                kappa2: 2.0,
                gamma1: 0.25,
                gamma2: 2.0,
            },
            AttractingLaw::DprlAlt {
                rho: 1.0,
                kappa1: 1.0,
                kappa2: 1.0,
                gamma1: 0.5,
                gamma2: 1.5,
            },
            AttractingLaw::TwoPhasePE {
                rho: 2.0,
                kappa: 1.0,
                gamma1: 0.5,
                gamma2: 2.0,
                estar: 1.0,
            },
            AttractingLaw::TwoPhasePE {
                rho: 0.0,
                kappa: 1.0,
                gamma1: 0.3,
                gamma2: 1.7,
                estar: 0.5,
            },
            AttractingLaw::PiecewiseExpA {
                rho: 1.0,
                kappa: 1.0,
                gamma1: 0.5,
                gamma2: 2.0,
                estar: 2.0,
                delta: 0.5,
            },
            AttractingLaw::PiecewiseExpB {
                rho: 0.0,
                kappa: 3.0,
                gamma1: 0.5,
                gamma2: 2.0,
                estar: 1.0,
                delta: 0.25,
            },
            AttractingLaw::FractionalExp {
                rho: 1.0,
                kappa: 1.0,
                alpha: 0.5,
                beta: 3.0,
                m: 1,
                estar: 1.0,
            },
            AttractingLaw::FractionalExp {
                rho: 0.0,
                kappa: 2.0,
                alpha: 0.0,
                beta: 4.0,
                m: 2,
                estar: 0.5,
            },
        ]
    }

    fn grid() -> Vec<f64> {
        let mut g = Vec::new();
        for k in -80..=40 {
            let v = 10f64.powf(k as f64 / 10.0);
            g.push(v);
            g.push(-v);
        }
        g
    }

    #[test]
    fn validate_examples() {
        assert!(AttractingLaw::Sprl { kappa: 1.0, gamma: 0.5 }.validate().is_ok());
        let err = AttractingLaw::Sprl { kappa: 1.0, gamma: 1.5 }.validate().unwrap_err();
        assert!(matches!(err, Error::Parameter { field: "gamma", .. }));
        let err = AttractingLaw::FractionalExp {
            rho: 1.0,
            kappa: 1.0,
            alpha: 0.5,
            beta: 2.0,
            m: 1,
            estar: 1.0,
        }
        .validate()
        .unwrap_err();
        assert!(matches!(err, Error::Parameter { field: "beta", .. }));
    }

    #[test]
    fn validate_names_offending_field() {
        let cases = [
            (
                AttractingLaw::Dprl {
                    kappa1: 1.0,
                    kappa2: 1.0,
                    gamma1: 0.5,
                    gamma2: 1.0,
                },
                "gamma2",
            ),
            (
                AttractingLaw::DprlAlt {
                    rho: 0.0,
                    kappa1: 1.0,
                    kappa2: 1.0,
                    gamma1: 0.5,
                    gamma2: 1.5,
                },
                "rho",
            ),
            (
                AttractingLaw::TwoPhasePE {
                    rho: 0.0,
                    kappa: 1.0,
                    gamma1: 0.5,
                    gamma2: 2.0,
                    estar: 0.0,
                },
                "estar",
            ),
            (
                AttractingLaw::PiecewiseExpA {
                    rho: 1.0,
                    kappa: 1.0,
                    gamma1: 0.5,
                    gamma2: 2.0,
                    estar: 1.0,
                    delta: 1.0,
                },
                "delta",
            ),
            (
                AttractingLaw::FractionalExp {
                    rho: 1.0,
                    kappa: 1.0,
                    alpha: 1.0,
                    beta: 3.0,
                    m: 1,
                    estar: 1.0,
                },
                "alpha",
            ),
            (
                AttractingLaw::FractionalExp {
                    rho: 1.0,
                    kappa: 1.0,
                    alpha: 0.5,
                    beta: 3.0,
                    m: 0,
                    estar: 1.0,
                },
                "m",
            ),
            (
                AttractingLaw::SprlAlt {
                    rho: 1.0,
                    kappa: -1.0,
                    gamma: 0.5,
                },
                "kappa",
            ),
        ];
        for (law, field) in cases {
            match law.validate() {
                Err(Error::Parameter { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{law:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn exponent_examples() {
        let frac = AttractingLaw::FractionalExp {
            rho: 1.0,
            kappa: 1.0,
            alpha: 0.5,
            beta: 3.0,
            m: 1,
            estar: 1.0,
        };
        assert_eq!(frac.exponent(0.0).unwrap(), 0.5);
        assert!((frac.exponent(1.0).unwrap() - 1.75).abs() < 1e-15);
        let two = AttractingLaw::TwoPhasePE {
            rho: 0.0,
            kappa: 1.0,
            gamma1: 0.5,
            gamma2: 2.0,
            estar: 1.0,
        };
        assert_eq!(two.exponent(0.5).unwrap(), 0.5);
        assert_eq!(two.exponent(2.0).unwrap(), 2.0);
        assert_eq!(two.exponent(1.0).unwrap(), 2.0);
        assert_eq!(two.exponent(-0.5).unwrap(), 0.5);
    }

    #[test]
    fn exponent_unsupported_for_power_laws() {
        let law = AttractingLaw::Sprl { kappa: 1.0, gamma: 0.5 };
        assert!(matches!(law.exponent(1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn rectify_examples() {
        let sprl = AttractingLaw::Sprl { kappa: 1.0, gamma: 0.5 };
        assert_eq!(sprl.rectify(4.0), -2.0);
        let dalt = AttractingLaw::DprlAlt {
            rho: 1.0,
            kappa1: 1.0,
            kappa2: 1.0,
            gamma1: 0.5,
            gamma2: 1.5,
        };
        assert_eq!(dalt.rectify(1.0), -3.0);
        let two = AttractingLaw::TwoPhasePE {
            rho: 2.0,
            kappa: 1.0,
            gamma1: 0.5,
            gamma2: 2.0,
            estar: 1.0,
        };
        assert_eq!(two.rectify(-1.0), 3.0);
        for law in catalog() {
            assert_eq!(law.rectify(0.0), 0.0);
        }
    }

    #[test]
    fn odd_and_sign_opposing() {
        for law in catalog() {
            law.validate().unwrap();
            for e in grid() {
                let r = law.rectify(e);
                assert_eq!(law.rectify(-e), -r, "{law:?} e={e}");
                assert!(e * r < 0.0, "{law:?} e={e} r={r}");
            }
        }
    }

    #[test]
    fn two_phase_continuous_at_transition() {
        let law = AttractingLaw::TwoPhasePE {
            rho: 1.0,
            kappa: 2.0,
            gamma1: 0.3,
            gamma2: 2.5,
            estar: 1.7,
        };
        let mut prev = f64::INFINITY;
        for k in 2..12 {
            let h = 10f64.powi(-k);
            let gap = (law.rectify(1.7 - h) - law.rectify(1.7 + h)).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-9);
    }

    #[test]
    fn piecewise_exponents_continuous_at_knots() {
        let (g1, g2, estar, delta) = (0.4, 2.2, 1.5, 0.3);
        let a = AttractingLaw::PiecewiseExpA {
            rho: 1.0,
            kappa: 1.0,
            gamma1: g1,
            gamma2: g2,
            estar,
            delta,
        };
        let b = AttractingLaw::PiecewiseExpB {
            rho: 1.0,
            kappa: 1.0,
            gamma1: g1,
            gamma2: g2,
            estar,
            delta,
        };
        let h = 1e-10;
        for (law, knots) in [(a, [delta * estar, estar]), (b, [estar, (1.0 + delta) * estar])] {
            for k in knots {
                for s in [1.0, -1.0] {
                    let lo = law.exponent(s * (k - h)).unwrap();
                    let hi = law.exponent(s * (k + h)).unwrap();
                    assert!((lo - hi).abs() < 1e-8, "{law:?} knot {k}");
                }
            }
            assert_eq!(law.exponent(0.0).unwrap(), g1);
            assert_eq!(law.exponent(10.0 * estar).unwrap(), g2);
        }
    }

    #[test]
    fn fractional_exponent_range_and_limits() {
        for (alpha, beta, m) in [(0.5, 3.0, 1), (0.0, 4.0, 2), (0.9, 2.5, 3)] {
            let law = AttractingLaw::FractionalExp {
                rho: 1.0,
                kappa: 1.0,
                alpha,
                beta,
                m,
                estar: 2.0,
            };
            for e in grid() {
                let g = law.exponent(e).unwrap();
                assert!(g >= alpha && g <= beta, "e={e} g={g}");
            }
            assert!((law.exponent(2.0e6).unwrap() - beta).abs() < 1e-3);
            assert!((law.exponent(2.0e-6).unwrap() - alpha).abs() < 1e-3);
            // s = ∞ must not produce NaN
            assert_eq!(law.exponent(1e300).unwrap(), beta);
        }
    }

    #[test]
    fn fractional_minimum_matches_closed_form() {
        // Golden-section minimization of s^(β s^(2m)) over s in (0, 1].
        for (beta, m) in [(3.0, 1u32), (4.0, 1), (3.0, 2), (5.5, 3)] {
            let f = |s: f64| s.powf(beta * s.powi(2 * m as i32));
            let (mut lo, mut hi) = (1e-9, 1.0);
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let a = hi - phi * (hi - lo);
                let b = lo + phi * (hi - lo);
                if f(a) < f(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            let found = f(0.5 * (lo + hi));
            let want = (-beta / (2.0 * m as f64 * E)).exp();
            assert!((found - want).abs() < 1e-12, "beta={beta} m={m}");
        }
    }

    #[test]
    fn serde_tagged_round_trip_and_validation() {
        let law: AttractingLaw =
            toml::from_str("type = \"DPRL\"\nkappa1 = 1.0\nkappa2 = 2.0\ngamma1 = 0.5\ngamma2 = 1.5\n").unwrap();
        assert_eq!(
            law,
            AttractingLaw::Dprl {
                kappa1: 1.0,
                kappa2: 2.0,
                gamma1: 0.5,
                gamma2: 1.5
            }
        );
        let text = toml::to_string(&law).unwrap();
        assert!(text.contains("type = \"DPRL\""));
        assert_eq!(toml::from_str::<AttractingLaw>(&text).unwrap(), law);

        let bad = toml::from_str::<AttractingLaw>("type = \"SPRL\"\nkappa = 1.0\ngamma = 1.5\n");
        assert!(bad.unwrap_err().to_string().contains("gamma"));
        assert!(toml::from_str::<AttractingLaw>("type = \"Nope\"\nkappa = 1.0\n").is_err());
    }
}
