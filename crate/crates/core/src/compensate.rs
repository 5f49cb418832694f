//! Uncertainty compensation `s(e)` and residual-set radii under smooth
//! compensation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::AttractingLaw;
use crate::settle::fractional_floor;

/// Compensation term added to the rectifying action.
///
/// `varpi` is the assumed bound on the lumped disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", try_from = "unchecked::Comp")]
pub enum Compensation {
    #[default]
    None,
    Signum {
        varpi: f64,
    },
    Smooth {
        varpi: f64,
        epsilon: f64,
    },
}

mod unchecked {
    use serde::Deserialize;

    #[derive(Deserialize)]
    #[serde(tag = "type", deny_unknown_fields)]
    pub enum Comp {
        None,
        Signum { varpi: f64 },
        Smooth { varpi: f64, epsilon: f64 },
    }
}

impl TryFrom<unchecked::Comp> for Compensation {
    type Error = Error;

    fn try_from(c: unchecked::Comp) -> Result<Self> {
        let comp = match c {
            unchecked::Comp::None => Compensation::None,
            unchecked::Comp::Signum { varpi } => Compensation::Signum { varpi },
            unchecked::Comp::Smooth { varpi, epsilon } => Compensation::Smooth { varpi, epsilon },
        };
        comp.validate()?;
        Ok(comp)
    }
}

fn positive(field: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(field, format!("{v} must be > 0")))
    }
}

impl Compensation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Compensation::None => Ok(()),
            Compensation::Signum { varpi } => positive("varpi", varpi),
            Compensation::Smooth { varpi, epsilon } => {
                positive("varpi", varpi)?;
                positive("epsilon", epsilon)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Compensation::None => "None",
            Compensation::Signum { .. } => "Signum",
            Compensation::Smooth { .. } => "Smooth",
        }
    }

    pub fn is_signum(&self) -> bool {
        matches!(self, Compensation::Signum { .. })
    }

    /// `s(e)`.
    #[inline]
    pub fn apply(&self, e: f64) -> f64 {
        compensate(self, e)
    }
}

/// `s(e)`: zero, `-ϖ sgn(e)` with `sgn(0) = 0`, or `-ϖ² e / (ϖ|e| + ε)`.
#[inline]
pub fn compensate(comp: &Compensation, e: f64) -> f64 {
    match *comp {
        Compensation::None => 0.0,
        Compensation::Signum { varpi } => {
            if e == 0.0 {
                0.0
            } else {
                -varpi.copysign(e)
            }
        }
        Compensation::Smooth { varpi, epsilon } => -varpi * varpi * e / (varpi * e.abs() + epsilon),
    }
}

/// Split of the law gains reserved for disturbance absorption: `ρ''`, `κ''`
/// (power-exponential laws) and `κ1''`, `κ2''` (double power law).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSplit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa1_2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa2_2: Option<f64>,
}

impl GainSplit {
    /// Half of every gain the law has.
    pub fn half(law: &AttractingLaw) -> Self {
        match *law {
            AttractingLaw::DprlAlt {
                rho, kappa1, kappa2, ..
            } => GainSplit {
                rho2: Some(rho / 2.0),
                kappa1_2: Some(kappa1 / 2.0),
                kappa2_2: Some(kappa2 / 2.0),
                kappa2: None,
            },
            AttractingLaw::Dprl { kappa1, kappa2, .. } => GainSplit {
                kappa1_2: Some(kappa1 / 2.0),
                kappa2_2: Some(kappa2 / 2.0),
                ..Default::default()
            },
            AttractingLaw::Sprl { kappa, .. } => GainSplit {
                kappa2: Some(kappa / 2.0),
                ..Default::default()
            },
            AttractingLaw::SprlAlt { rho, kappa, .. }
            | AttractingLaw::TwoPhasePE { rho, kappa, .. }
            | AttractingLaw::PiecewiseExpA { rho, kappa, .. }
            | AttractingLaw::PiecewiseExpB { rho, kappa, .. }
            | AttractingLaw::FractionalExp { rho, kappa, .. } => GainSplit {
                rho2: Some(rho / 2.0),
                kappa2: Some(kappa / 2.0),
                ..Default::default()
            },
        }
    }
}

fn split_gain(field: &'static str, part: Option<f64>, whole: f64) -> Result<f64> {
    let v = part.ok_or_else(|| Error::param(field, "required by the residual radius of this law"))?;
    if v.is_nan() || v <= 0.0 {
        return Err(Error::param(field, format!("{v} must be > 0")));
    }
    if v >= whole {
        return Err(Error::param(field, format!("{v} must be below the law gain {whole}")));
    }
    Ok(v)
}

/// Radius of the residual set reached under `Smooth{ϖ, ε}` compensation.
pub fn residual_radius(law: &AttractingLaw, epsilon: f64, split: &GainSplit) -> Result<f64> {
    law.validate()?;
    positive("epsilon", epsilon)?;
    let two_eps = 2.0 * epsilon;
    match *law {
        AttractingLaw::DprlAlt {
            rho,
            kappa1,
            kappa2,
            gamma1,
            gamma2,
        } => {
            let r2 = split_gain("rho2", split.rho2, rho)?;
            let k1 = split_gain("kappa1_2", split.kappa1_2, kappa1)?;
            let k2 = split_gain("kappa2_2", split.kappa2_2, kappa2)?;
            Ok((two_eps / r2)
                .min((two_eps / k1).powf(1.0 / gamma1))
                .min((two_eps / k2).powf(1.0 / gamma2)))
        }
        AttractingLaw::TwoPhasePE {
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
        }
        | AttractingLaw::PiecewiseExpA {
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
            ..
        }
        | AttractingLaw::PiecewiseExpB {
            rho,
            kappa,
            gamma1,
            gamma2,
            estar,
            ..
        } => {
            let r2 = split_gain("rho2", split.rho2, rho)?;
            let k = split_gain("kappa2", split.kappa2, kappa)?;
            Ok(estar
                * (two_eps / r2)
                    .min((two_eps / k).powf(1.0 / gamma1))
                    .min((two_eps / k).powf(1.0 / gamma2)))
        }
        AttractingLaw::FractionalExp {
            rho,
            kappa,
            alpha,
            beta,
            m,
            estar,
        } => {
            let r2 = split_gain("rho2", split.rho2, rho)?;
            let k = split_gain("kappa2", split.kappa2, kappa)?;
            let floor = fractional_floor(beta, m);
            Ok(estar
                * (two_eps / r2)
                    .min((two_eps / k).powf(2.0 / beta))
                    .min((two_eps / (k * floor)).powf(1.0 / alpha)))
        }
        _ => Err(Error::Unsupported(format!(
            "no residual radius for {} (needs a linear term)",
            law.name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DPRL_ALT: AttractingLaw = AttractingLaw::DprlAlt {
        rho: 4.0,
        kappa1: 2.0,
        kappa2: 2.0,
        gamma1: 0.5,
        gamma2: 1.5,
    };

    fn two_phase(estar: f64) -> AttractingLaw {
        AttractingLaw::TwoPhasePE {
            rho: 1.0,
            kappa: 2.0,
            gamma1: 0.5,
            gamma2: 1.5,
            estar,
        }
    }

    #[test]
    fn compensate_examples() {
        let smooth = Compensation::Smooth {
            varpi: 1.0,
            epsilon: 0.1,
        };
        assert_eq!(compensate(&smooth, 0.0), 0.0);
        let smooth = Compensation::Smooth {
            varpi: 2.0,
            epsilon: 1.0,
        };
        assert!((compensate(&smooth, 1.0) + 4.0 / 3.0).abs() < 1e-15);
        let sharp = Compensation::Smooth {
            varpi: 1.0,
            epsilon: 1e-6,
        };
        let sgn = Compensation::Signum { varpi: 1.0 };
        assert!((compensate(&sharp, 1.0) - compensate(&sgn, 1.0)).abs() < 1e-5);
        assert_eq!(compensate(&sgn, 0.0), 0.0);
        assert_eq!(compensate(&Compensation::None, 3.0), 0.0);
    }

    #[test]
    fn compensation_is_bounded_odd_and_dissipative() {
        let comps = [
            Compensation::None,
            Compensation::Signum { varpi: 0.7 },
            Compensation::Smooth {
                varpi: 0.7,
                epsilon: 1e-3,
            },
            Compensation::Smooth {
                varpi: 3.0,
                epsilon: 2.0,
            },
        ];
        for c in comps {
            for i in -400..=400 {
                let e = i as f64 * 0.037;
                let s = compensate(&c, e);
                assert!(s * e <= 0.0);
                assert_eq!(compensate(&c, -e), -s);
                if let Compensation::Smooth { varpi, .. } = c {
                    assert!(s.abs() < varpi);
                }
            }
        }
        let c = Compensation::Smooth {
            varpi: 1.0,
            epsilon: 1.0,
        };
        assert!(compensate(&c, 1e6).abs() < 1.0);
    }

    #[test]
    fn compensation_validation() {
        assert!(Compensation::Signum { varpi: 0.0 }.validate().is_err());
        let err = Compensation::Smooth {
            varpi: 1.0,
            epsilon: -1.0,
        }
        .validate()
        .unwrap_err();
        assert!(matches!(err, Error::Parameter { field: "epsilon", .. }));
        let c: Compensation = toml::from_str("type = \"Smooth\"\nvarpi = 1.0\nepsilon = 0.01\n").unwrap();
        assert_eq!(
            c,
            Compensation::Smooth {
                varpi: 1.0,
                epsilon: 0.01
            }
        );
        assert!(toml::from_str::<Compensation>("type = \"Signum\"\nvarpi = -1.0\n").is_err());
    }

    #[test]
    fn case_i_example() {
        let split = GainSplit {
            rho2: Some(2.0),
            kappa1_2: Some(1.0),
            kappa2_2: Some(1.0),
            kappa2: None,
        };
        let r = residual_radius(&DPRL_ALT, 0.01, &split).unwrap();
        assert!((r - 4e-4).abs() < 1e-15);
    }

    #[test]
    fn case_ii_scales_with_estar() {
        let split = GainSplit::half(&two_phase(1.0));
        let r1 = residual_radius(&two_phase(1.0), 0.01, &split).unwrap();
        let r2 = residual_radius(&two_phase(2.0), 0.01, &split).unwrap();
        assert!((r2 - 2.0 * r1).abs() < 1e-15);
    }

    #[test]
    fn radius_monotone_in_eps_and_split() {
        let laws = [
            DPRL_ALT,
            two_phase(1.0),
            AttractingLaw::FractionalExp {
                rho: 1.0,
                kappa: 2.0,
                alpha: 0.5,
                beta: 3.0,
                m: 1,
                estar: 1.0,
            },
        ];
        for law in laws {
            let base = GainSplit::half(&law);
            let mut prev = 0.0;
            for k in (1..=8).rev() {
                let eps = 10f64.powi(-k);
                let r = residual_radius(&law, eps, &base).unwrap();
                assert!(r > prev);
                prev = r;
            }
            assert!(residual_radius(&law, 1e-30, &base).unwrap() < 1e-12);
            let scale = |s: Option<f64>| s.map(|v| v * 1.5);
            let bigger = GainSplit {
                rho2: scale(base.rho2),
                kappa2: scale(base.kappa2),
                kappa1_2: scale(base.kappa1_2),
                kappa2_2: scale(base.kappa2_2),
            };
            for eps in [1e-4, 1e-2] {
                assert!(residual_radius(&law, eps, &bigger).unwrap() <= residual_radius(&law, eps, &base).unwrap());
            }
        }
    }

    #[test]
    fn radius_errors() {
        let err = residual_radius(&DPRL_ALT, 0.01, &GainSplit::default()).unwrap_err();
        assert!(matches!(err, Error::Parameter { field: "rho2", .. }));
        let too_big = GainSplit {
            rho2: Some(4.0),
            ..GainSplit::half(&DPRL_ALT)
        };
        assert!(residual_radius(&DPRL_ALT, 0.01, &too_big).is_err());
        let dprl = AttractingLaw::Dprl {
            kappa1: 1.0,
            kappa2: 1.0,
            gamma1: 0.5,
            gamma2: 1.5,
        };
        assert!(matches!(
            residual_radius(&dprl, 0.01, &GainSplit::half(&dprl)),
            Err(Error::Unsupported(_))
        ));
    }
}
