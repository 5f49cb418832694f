//! Scenario files, runs and settling reports.
//!
//! A config file holds one or more `[[scenario]]` tables:
//!
//! ```toml
//! [[scenario]]
//! name = "sprl-demo"
//! problem = { type = "scalar", e0 = 4.0 }
//! law = { type = "SPRL", kappa = 1.0, gamma = 0.5 }
//! numerics = { dt = 1e-4, horizon = 10.0 }
//! ```

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compensate::{residual_radius, Compensation, GainSplit};
use crate::dynamics::{integrate_scalar, settling_index, Disturbance, ErsConfig, Trace};
use crate::error::{Error, Result};
use crate::laws::AttractingLaw;
use crate::linalg::norm_inf;
use crate::qp::{integrate_tznn, make_benchmark_qp, InlineQp, QpTrace, TimeVariantQP, TrigEntry};
use crate::settle::{law_settling_time, tightest_bound, EstimateKind, SettlingEstimate};
use crate::verify::Level;

fn default_dt() -> f64 {
    crate::dynamics::DEFAULT_DT
}
fn default_horizon() -> f64 {
    10.0
}
fn default_tol() -> f64 {
    crate::dynamics::DEFAULT_SETTLE_TOL
}
fn default_deadzone() -> f64 {
    crate::dynamics::DEFAULT_DEADZONE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_tol")]
    pub settle_tol: f64,
    #[serde(default = "default_deadzone")]
    pub deadzone: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            horizon: default_horizon(),
            settle_tol: default_tol(),
            deadzone: default_deadzone(),
        }
    }
}

/// What is being driven to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    /// A single error component starting at `e0`.
    Scalar { e0: f64 },
    /// The built-in time-variant QP; `z0` defaults to zeros.
    Benchmark {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z0: Option<Vec<f64>>,
    },
    /// A QP given entrywise as `c0 + sin·sin(ωt) + cos·cos(ωt)`.
    Inline {
        g: Vec<Vec<TrigEntry>>,
        a: Vec<Vec<TrigEntry>>,
        c: Vec<TrigEntry>,
        b: Vec<TrigEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        z0: Option<Vec<f64>>,
    },
}

impl Problem {
    pub fn is_qp(&self) -> bool {
        !matches!(self, Problem::Scalar { .. })
    }

    /// The QP and its start vector; `None` for scalar problems.
    pub fn qp(&self) -> Result<Option<(TimeVariantQP, Vec<f64>)>> {
        let (qp, z0) = match self {
            Problem::Scalar { .. } => return Ok(None),
            Problem::Benchmark { z0 } => (make_benchmark_qp(), z0.clone()),
            Problem::Inline { g, a, c, b, z0 } => (
                InlineQp {
                    g: g.clone(),
                    a: a.clone(),
                    c: c.clone(),
                    b: b.clone(),
                }
                .to_qp()?,
                z0.clone(),
            ),
        };
        let z0 = z0.unwrap_or_else(|| vec![0.0; qp.k()]);
        Ok(Some((qp, z0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub problem: Problem,
    pub law: AttractingLaw,
    #[serde(default)]
    pub comp: Compensation,
    #[serde(default)]
    pub dist: Disturbance,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<GainSplit>,
}

impl Scenario {
    pub fn ers_config(&self) -> ErsConfig {
        ErsConfig {
            law: self.law,
            comp: self.comp,
            dist: self.dist,
            dt: self.numerics.dt,
            horizon: self.numerics.horizon,
            settle_tol: self.numerics.settle_tol,
            deadzone: self.numerics.deadzone,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Config("scenario name is empty".into()));
        }
        self.ers_config().validate()?;
        if let Some((qp, z0)) = self.problem.qp()? {
            if z0.len() != qp.k() {
                return Err(Error::Config(format!(
                    "scenario `{}`: z0 has length {}, expected {}",
                    self.name,
                    z0.len(),
                    qp.k()
                )));
            }
            qp.validate_at(0.0)?;
        }
        Ok(())
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, s: &mut Scenario) {
        if let Some(dt) = self.dt {
            s.numerics.dt = dt;
        }
        if let Some(h) = self.horizon {
            s.numerics.horizon = h;
        }
        if let Some(tol) = self.tol {
            s.numerics.settle_tol = tol;
        }
        if let Some(seed) = self.seed {
            s.dist = s.dist.with_seed(seed);
        }
    }
}

/// Contents of a config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "RunOptions::is_empty")]
    pub run: RunOptions,
    #[serde(default)]
    pub scenario: Vec<Scenario>,
}

/// File equivalents of the `--out` and `--level` flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
}

impl RunOptions {
    fn is_empty(&self) -> bool {
        self.out.is_none() && self.level.is_none()
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.scenario {
            if !seen.insert(s.name.as_str()) {
                return Err(Error::Config(format!("duplicate scenario name `{}`", s.name)));
            }
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Margins {
    /// `analytic + tolerance - empirical`; positive is slack.
    pub settling: Option<f64>,
    /// `predicted - measured`; positive is slack.
    pub residual: Option<f64>,
}

/// Outcome of one run checked against its analytic predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlingReport {
    pub scenario: String,
    pub law: AttractingLaw,
    pub comp: Compensation,
    pub disturbance: Disturbance,
    pub settle_tol: f64,
    pub empirical_settling_time: Option<f64>,
    pub analytic_bound: Option<SettlingEstimate>,
    pub residual_sup: f64,
    pub residual_predicted: Option<f64>,
    pub margins: Margins,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Inputs of [`assess`]; `mags` are `|e|` (or `‖e‖∞`) on the sample grid.
pub struct Assessment<'a> {
    pub name: &'a str,
    pub law: AttractingLaw,
    pub comp: Compensation,
    pub dist: Disturbance,
    pub numerics: Numerics,
    pub split: Option<GainSplit>,
    pub e0: f64,
    pub times: &'a [f64],
    pub mags: &'a [f64],
}

/// Sampling tolerance applied when comparing an empirical time with a formula.
pub fn time_tolerance(analytic: f64, dt: f64) -> f64 {
    (0.01 * analytic).max(10.0 * dt)
}

/// Predicted bound on the long-run error for the compensation in use.
pub fn predicted_residual(
    law: &AttractingLaw,
    comp: &Compensation,
    split: Option<&GainSplit>,
    numerics: &Numerics,
) -> Result<Option<f64>> {
    match *comp {
        Compensation::None => Ok(None),
        Compensation::Signum { varpi } => Ok(Some(numerics.settle_tol.max(2.0 * varpi * numerics.dt))),
        Compensation::Smooth { epsilon, .. } => {
            let split = split.copied().unwrap_or_else(|| GainSplit::half(law));
            residual_radius(law, epsilon, &split).map(Some)
        }
    }
}

/// Compare a sampled run with the settling and residual predictions.
pub fn assess(a: &Assessment<'_>) -> SettlingReport {
    let mut notes = Vec::new();
    let num = a.numerics;
    let exact = law_settling_time(&a.law, a.e0).ok().flatten();
    let bound = match tightest_bound(&a.law) {
        Ok(b) => b,
        Err(e) => {
            notes.push(format!("no uniform bound: {e}"));
            None
        }
    };
    let analytic = exact.or(bound);
    if let Some(w) = analytic.as_ref().and_then(|x| x.warning.clone()) {
        notes.push(w);
    }

    let eff_tol = match a.comp {
        Compensation::Signum { varpi } => num.settle_tol.max(2.0 * varpi * num.dt),
        _ => num.settle_tol,
    };
    let empirical = settling_index(a.mags.iter().copied(), eff_tol).map(|i| a.times[i]);

    let window = analytic.as_ref().map_or(0.0, |x| x.time).max(num.horizon / 2.0);
    let residual_sup = a
        .times
        .iter()
        .zip(a.mags)
        .filter(|(t, _)| **t >= window)
        .fold(0.0, |m: f64, (_, v)| m.max(*v));

    let residual_predicted = match predicted_residual(&a.law, &a.comp, a.split.as_ref(), &num) {
        Ok(p) => p,
        Err(e) => {
            notes.push(format!("no residual prediction: {e}"));
            None
        }
    };

    let mut margins = Margins::default();
    let settle_ok = match (&analytic, empirical) {
        (Some(x), Some(emp)) => {
            let m = x.time + time_tolerance(x.time, num.dt) - emp;
            margins.settling = Some(m);
            m >= 0.0
        }
        (None, Some(_)) => true,
        (_, None) => false,
    };
    let residual_ok = match residual_predicted {
        Some(p) => {
            margins.residual = Some(p - residual_sup);
            residual_sup <= p
        }
        None => true,
    };

    if a.comp.is_signum() && residual_sup > num.settle_tol {
        notes.push(format!(
            "chattering: long-run |e| reaches {residual_sup:e} (step-induced scale 2*varpi*dt = {:e})",
            eff_tol
        ));
    }
    let pass = if a.dist == Disturbance::Zero {
        if empirical.is_none() {
            notes.push(format!("error did not settle below {eff_tol:e} within the horizon"));
        }
        settle_ok && residual_ok
    } else {
        if residual_predicted.is_none() {
            notes.push("disturbed run without a residual prediction".into());
        }
        residual_predicted.is_some() && residual_ok
    };

    SettlingReport {
        scenario: a.name.to_string(),
        law: a.law,
        comp: a.comp,
        disturbance: a.dist,
        settle_tol: num.settle_tol,
        empirical_settling_time: empirical,
        analytic_bound: analytic,
        residual_sup,
        residual_predicted,
        margins,
        pass,
        notes,
    }
}

/// Trace produced by a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum RunTrace {
    Scalar(Trace),
    Qp(QpTrace),
}

impl RunTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        match self {
            RunTrace::Scalar(t) => t.write_csv(out),
            RunTrace::Qp(t) => t.write_csv(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: SettlingReport,
    pub trace: RunTrace,
}

/// Simulate a scenario and assess the result.
pub fn run_scenario(s: &Scenario) -> Result<Outcome> {
    s.validate()?;
    match s.problem.qp()? {
        None => {
            let Problem::Scalar { e0 } = s.problem else {
                unreachable!()
            };
            let trace = integrate_scalar(&s.ers_config(), e0)?;
            let mags: Vec<f64> = trace.errors.iter().map(|e| e.abs()).collect();
            let report = assess(&Assessment {
                name: &s.name,
                law: s.law,
                comp: s.comp,
                dist: s.dist,
                numerics: s.numerics,
                split: s.split,
                e0: e0.abs(),
                times: &trace.times,
                mags: &mags,
            });
            Ok(Outcome {
                report,
                trace: RunTrace::Scalar(trace),
            })
        }
        Some((qp, z0)) => {
            let trace = integrate_tznn(&qp, &s.law, &s.comp, &s.dist, &z0, s.numerics.dt, s.numerics.horizon)?;
            let mags: Vec<f64> = (0..trace.len()).map(|i| trace.e_norm_inf(i)).collect();
            let mut report = assess(&Assessment {
                name: &s.name,
                law: s.law,
                comp: s.comp,
                dist: s.dist,
                numerics: s.numerics,
                split: s.split,
                e0: norm_inf(trace.e_at(0)),
                times: &trace.times,
                mags: &mags,
            });
            if trace.derivative_approx {
                report
                    .notes
                    .push("time derivatives approximated by central differences".into());
            }
            Ok(Outcome {
                report,
                trace: RunTrace::Qp(trace),
            })
        }
    }
}

/// Write `bytes` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("out")
    ));
    {
        let mut f = BufWriter::new(fs::File::create(&tmp)?);
        write(&mut f)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// `<out>/<scenario>/trace.csv` and `<out>/<scenario>/report.json`.
pub fn write_outcome(out: &Path, outcome: &Outcome) -> Result<()> {
    let dir = out.join(&outcome.report.scenario);
    write_atomic(&dir.join("trace.csv"), |w| outcome.trace.write_csv(w))?;
    let json = serde_json::to_string_pretty(&outcome.report).map_err(|e| Error::Config(e.to_string()))?;
    write_atomic(&dir.join("report.json"), |w| w.write_all(json.as_bytes()))?;
    Ok(())
}

/// Human-readable one-line summary.
pub fn summary_line(r: &SettlingReport) -> String {
    let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
    let analytic = r.analytic_bound.as_ref().map_or_else(
        || "-".to_string(),
        |a| {
            let kind = match a.kind {
                EstimateKind::Exact => "exact",
                EstimateKind::UpperBound => "bound",
            };
            format!("{:.6} ({kind}, {})", a.time, a.formula_id)
        },
    );
    format!(
        "{:<5} {:<28} empirical {:>12}  analytic {}  residual {:.3e} / {}",
        if r.pass { "PASS" } else { "FAIL" },
        r.scenario,
        fmt_opt(r.empirical_settling_time),
        analytic,
        r.residual_sup,
        r.residual_predicted
            .map_or_else(|| "-".to_string(), |p| format!("{p:.3e}")),
    )
}
