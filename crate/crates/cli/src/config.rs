//! JSON run configuration and its validation into a typed [`Plan`].

use std::fmt;

use polywind::analytic::QuadratureSpec;
use polywind::model::{InitialConfig, PolymerParams, DEFAULT_UNIFORM_MARGIN};
use polywind::montecarlo::{McConfig, ParamsTemplate, Statistic, SweepAxis};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::expr::parse_angle;
use crate::CliError;

/// Largest config file accepted, in bytes.
pub const MAX_CONFIG_BYTES: usize = 1 << 20;
const MAX_SWEEP_POINTS: usize = 100_000;
const MAX_REPLICATES: usize = 100_000_000;

/// A real number given either as a JSON number or an expression string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an expression such as \"7pi/4\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                parse_angle(v).map(Real).map_err(E::custom)
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Mrt,
    Mmrt,
    BoundaryLayer,
    AnalyticConstants,
    CltCheck,
    LaplaceCheck,
    AMoment,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Mrt => "mrt",
            Experiment::Mmrt => "mmrt",
            Experiment::BoundaryLayer => "boundary-layer",
            Experiment::AnalyticConstants => "analytic-constants",
            Experiment::CltCheck => "clt-check",
            Experiment::LaplaceCheck => "laplace-check",
            Experiment::AMoment => "a-moment",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub n: usize,
    #[serde(rename = "D")]
    pub diffusion: Real,
    #[serde(rename = "L")]
    pub offset: Real,
    pub l0: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSection {
    Stretched,
    Explicit { angles: Vec<Real> },
    Uniform {
        #[serde(default)]
        margin: Option<Real>,
    },
    BoundaryLayer { phi0: Real },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Scheduling hint only; left out of the echoed config so that output
    /// does not depend on it.
    #[serde(default, skip_serializing)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "n")]
    N,
    #[serde(rename = "D")]
    Diffusion,
    #[serde(rename = "L")]
    Offset,
    #[serde(rename = "phi0")]
    Phi0,
}

impl AxisName {
    pub fn axis(self) -> SweepAxis {
        match self {
            AxisName::N => SweepAxis::N,
            AxisName::Diffusion => SweepAxis::Diffusion,
            AxisName::Offset => SweepAxis::Offset,
            AxisName::Phi0 => SweepAxis::Phi0,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            AxisName::N => "n",
            AxisName::Diffusion => "D",
            AxisName::Offset => "L",
            AxisName::Phi0 => "phi0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: Real,
    pub stop: Real,
    pub step: Real,
}

impl RangeSpec {
    /// `start, start + step, ...` up to `stop` inclusive (within 1e-9 steps).
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let (a, b, h) = (self.start.0, self.stop.0, self.step.0);
        if !(a.is_finite() && b.is_finite() && h.is_finite() && h > 0.0 && b >= a) {
            return Err(CliError::Config(format!(
                "range needs finite start <= stop and step > 0, got {a}..{b} by {h}"
            )));
        }
        let count = ((b - a) / h + 1e-9).floor() + 1.0;
        if count > MAX_SWEEP_POINTS as f64 {
            return Err(CliError::Config(format!("range has more than {MAX_SWEEP_POINTS} points")));
        }
        Ok((0..count as usize).map(|i| a + i as f64 * h).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: AxisName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<Real>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<RangeSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    /// Half-width of the exit interval (laplace-check).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<Real>>,
    /// Horizons of the exponential functional (a-moment).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<Real>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CltPart {
    /// Bracket processes on a time grid.
    Qv,
    /// Terminal moments of the limit process.
    Limit,
    /// Moments of the finite-n sum against the limit.
    Zn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSection {
    pub part: CltPart,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub t_end: Real,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<Real>,
    /// Grid rows written for `qv`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_cutoff: Option<Real>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validate: Option<ValidateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt: Option<CltSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadratureSection>,
    /// Destination only; not echoed, so the table does not depend on it.
    #[serde(default, skip_serializing)]
    pub output: Option<String>,
}

/// Flag overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub dt: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<String>,
}

/// Statistic, template, start and sweep values of a rotation-time run.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationPlan {
    pub statistic: Statistic,
    pub template: ParamsTemplate,
    pub init: InitialConfig,
    pub axis: Option<AxisName>,
    pub values: Vec<f64>,
    pub mc: McConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CltPlan {
    Qv { n: usize, t_end: f64, dt: f64, rows: usize, seed: u64 },
    Limit { t_end: f64, dt: f64, replicates: usize, seed: u64, workers: usize },
    Zn { n: usize, t: f64, replicates: usize, seed: u64, workers: usize },
}

/// A validated experiment, ready to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Rotation(RotationPlan),
    Analytic(QuadratureSpec),
    Clt(CltPlan),
    Laplace { c: f64, ys: Vec<f64>, mc: McConfig },
    AMoment { ts: Vec<f64>, mc: McConfig },
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, CliError> {
        if text.len() > MAX_CONFIG_BYTES {
            return Err(CliError::Config(format!("config larger than {MAX_CONFIG_BYTES} bytes")));
        }
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Minimal config for an experiment that needs no fields.
    pub fn bare(experiment: Experiment) -> Self {
        Self {
            experiment,
            params: None,
            init: None,
            mc: None,
            sweep: None,
            validate: None,
            clt: None,
            quadrature: None,
            output: None,
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() || o.replicates.is_some() || o.dt.is_some() || o.workers.is_some() {
            let mc = self.mc.get_or_insert_with(McSection::default);
            if let Some(seed) = o.seed {
                mc.seed = Some(seed);
            }
            if let Some(r) = o.replicates {
                mc.replicates = Some(r);
            }
            if let Some(dt) = o.dt {
                mc.dt = Some(Real(dt));
            }
            if let Some(w) = o.workers {
                mc.workers = Some(w);
            }
        }
        if let Some(out) = &o.out {
            self.output = Some(out.clone());
        }
    }

    /// Seed the run will use.
    pub fn seed(&self) -> u64 {
        self.mc.as_ref().and_then(|m| m.seed).unwrap_or(0)
    }

    /// Check every field the experiment needs, without doing any work.
    pub fn plan(&self) -> Result<Plan, CliError> {
        match self.experiment {
            Experiment::Mrt => self.rotation_plan(Statistic::Mrt),
            Experiment::Mmrt => self.rotation_plan(Statistic::Mmrt),
            Experiment::BoundaryLayer => {
                let plan = self.rotation_plan(Statistic::Mrt)?;
                let Plan::Rotation(r) = &plan else { unreachable!() };
                let swept = r.axis == Some(AxisName::Phi0);
                let fixed = r.axis.is_none() && matches!(r.init, InitialConfig::BoundaryLayer { .. });
                if !(swept || fixed) {
                    return Err(CliError::Config(
                        "boundary-layer needs a phi0 sweep or init.kind = boundary_layer".into(),
                    ));
                }
                Ok(plan)
            }
            Experiment::AnalyticConstants => Ok(Plan::Analytic(self.quadrature_spec()?)),
            Experiment::CltCheck => self.clt_plan(),
            Experiment::LaplaceCheck => {
                let v = self.require(&self.validate, "validate")?;
                let c = require_field(v.c, "validate.c")?.0;
                let ys = reals(require_field(v.y.as_ref(), "validate.y")?);
                positive("validate.c", c)?;
                if ys.is_empty() || ys.iter().any(|y| !(*y >= 0.0 && y.is_finite())) {
                    return Err(CliError::Config("validate.y must be a non-empty list of values >= 0".into()));
                }
                Ok(Plan::Laplace {
                    c,
                    ys,
                    mc: self.mc_config(1e-3, 100.0)?,
                })
            }
            Experiment::AMoment => {
                let v = self.require(&self.validate, "validate")?;
                let ts = reals(require_field(v.t.as_ref(), "validate.t")?);
                if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    return Err(CliError::Config("validate.t must be a non-empty list of values > 0".into()));
                }
                Ok(Plan::AMoment {
                    ts,
                    mc: self.mc_config(1e-3, 1.0)?,
                })
            }
        }
    }

    fn require<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        section
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} needs a \"{name}\" section", self.experiment.name())))
    }

    fn rotation_plan(&self, statistic: Statistic) -> Result<Plan, CliError> {
        let p = self.require(&self.params, "params")?;
        let template = ParamsTemplate {
            n: p.n,
            diffusion: p.diffusion.0,
            offset: p.offset.0,
            rod_length: p.l0.0,
        };
        let init = match &self.init {
            None | Some(InitSection::Stretched) => InitialConfig::Stretched,
            Some(InitSection::Explicit { angles }) => InitialConfig::Explicit(reals(angles)),
            Some(InitSection::Uniform { margin }) => InitialConfig::UniformRandom {
                margin: margin.map_or(DEFAULT_UNIFORM_MARGIN, |m| m.0),
            },
            Some(InitSection::BoundaryLayer { phi0 }) => InitialConfig::BoundaryLayer { phi0: phi0.0 },
        };
        let (axis, values) = match &self.sweep {
            None => {
                // A single point must be a valid model up front.
                let params = PolymerParams::new(p.n, p.diffusion.0, p.offset.0, p.l0.0).map_err(CliError::Model)?;
                init.check(&params).map_err(CliError::Model)?;
                (None, Vec::new())
            }
            Some(s) => {
                let values = match (&s.values, &s.range) {
                    (Some(v), None) => reals(v),
                    (None, Some(r)) => r.values()?,
                    _ => {
                        return Err(CliError::Config(
                            "sweep needs exactly one of \"values\" and \"range\"".into(),
                        ))
                    }
                };
                if values.len() > MAX_SWEEP_POINTS {
                    return Err(CliError::Config(format!("sweep has more than {MAX_SWEEP_POINTS} points")));
                }
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(CliError::Config(format!("sweep value {bad} is not finite")));
                }
                (Some(s.axis), values)
            }
        };
        Ok(Plan::Rotation(RotationPlan {
            statistic,
            template,
            init,
            axis,
            values,
            mc: self.mc_config(polywind::sde::DEFAULT_DT, 1000.0)?,
        }))
    }

    fn clt_plan(&self) -> Result<Plan, CliError> {
        let c = self.require(&self.clt, "clt")?;
        let t_end = c.t_end.0;
        let dt = c.dt.map_or(polywind::cltlab::DEFAULT_CLT_DT, |d| d.0);
        positive("clt.dt", dt)?;
        let seed = self.seed();
        let n = || {
            let n = require_field(c.n, "clt.n")?;
            if n == 0 {
                return Err(CliError::Config("clt.n must be >= 1".into()));
            }
            Ok(n)
        };
        let (replicates, workers) = self.replicates_and_workers()?;
        let plan = match c.part {
            CltPart::Qv => {
                if !(t_end >= 0.0 && t_end.is_finite()) {
                    return Err(CliError::Config("clt.t_end must be >= 0".into()));
                }
                if t_end / dt > 1e8 {
                    return Err(CliError::Config("clt.t_end / clt.dt exceeds 1e8 steps".into()));
                }
                let rows = c.rows.unwrap_or(21);
                if rows < 2 {
                    return Err(CliError::Config("clt.rows must be >= 2".into()));
                }
                CltPlan::Qv { n: n()?, t_end, dt, rows, seed }
            }
            CltPart::Limit => {
                positive("clt.t_end", t_end)?;
                if t_end / dt > 1e8 {
                    return Err(CliError::Config("clt.t_end / clt.dt exceeds 1e8 steps".into()));
                }
                CltPlan::Limit { t_end, dt, replicates, seed, workers }
            }
            CltPart::Zn => {
                positive("clt.t_end", t_end)?;
                CltPlan::Zn { n: n()?, t: t_end, replicates, seed, workers }
            }
        };
        Ok(Plan::Clt(plan))
    }

    fn replicates_and_workers(&self) -> Result<(usize, usize), CliError> {
        let mc = self.mc.clone().unwrap_or_default();
        let replicates = mc.replicates.unwrap_or(300);
        if !(2..=MAX_REPLICATES).contains(&replicates) {
            return Err(CliError::Config(format!(
                "mc.replicates must lie in 2..={MAX_REPLICATES}, got {replicates}"
            )));
        }
        Ok((replicates, mc.workers.unwrap_or(0)))
    }

    fn mc_config(&self, default_dt: f64, default_t_max: f64) -> Result<McConfig, CliError> {
        let mc = self.mc.clone().unwrap_or_default();
        let replicates = mc.replicates.unwrap_or(300);
        if replicates > MAX_REPLICATES {
            return Err(CliError::Config(format!("mc.replicates exceeds {MAX_REPLICATES}")));
        }
        let dt = mc.dt.map_or(default_dt, |d| d.0);
        let t_max = mc.t_max.map_or(default_t_max, |t| t.0);
        if t_max / dt > 1e10 {
            return Err(CliError::Config("mc.t_max / mc.dt exceeds 1e10 steps".into()));
        }
        let config = McConfig::new(replicates, dt, t_max, mc.seed.unwrap_or(0))
            .map_err(|e| CliError::Config(format!("mc: {e}")))?;
        Ok(config.with_workers(mc.workers.unwrap_or(0)))
    }

    fn quadrature_spec(&self) -> Result<QuadratureSpec, CliError> {
        let mut spec = QuadratureSpec::default();
        if let Some(q) = &self.quadrature {
            if let Some(v) = q.rel_tol {
                spec.rel_tol = v.0;
            }
            if let Some(v) = q.abs_tol {
                spec.abs_tol = v.0;
            }
            if let Some(v) = q.truncation_cutoff {
                spec.truncation_cutoff = v.0;
            }
        }
        spec.validate().map_err(|e| CliError::Config(format!("quadrature: {e}")))?;
        Ok(spec)
    }

    /// Compact JSON of the resolved config, as echoed in CSV headers.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

fn reals(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

fn require_field<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("missing required field {name}")))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be > 0, got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig4_json(extra: &str) -> String {
        format!(
            r#"{{"experiment":"mrt","params":{{"n":100,"D":10,"L":0.3,"l0":0.25}},
               "mc":{{"replicates":300,"dt":0.01,"seed":4}}{extra}}}"#
        )
    }

    #[test]
    fn parses_and_plans() {
        let cfg = RunConfig::from_json_str(&fig4_json(
            r#","sweep":{"axis":"n","range":{"start":50,"stop":300,"step":10}}"#,
        ))
        .unwrap();
        let Plan::Rotation(plan) = cfg.plan().unwrap() else { panic!() };
        assert_eq!(plan.values.len(), 26);
        assert_eq!(plan.values[25], 300.0);
        assert_eq!(plan.mc.seed, 4);
        assert_eq!(plan.init, InitialConfig::Stretched);
    }

    #[test]
    fn angle_expressions_in_values() {
        let text = r#"{"experiment":"boundary-layer","params":{"n":10,"D":1,"L":0.1,"l0":0.2},
            "sweep":{"axis":"phi0","values":["pi/2","pi","3pi/2","7pi/4"]}}"#;
        let Plan::Rotation(plan) = RunConfig::from_json_str(text).unwrap().plan().unwrap() else { panic!() };
        assert_eq!(plan.values[3], 7.0 * std::f64::consts::PI / 4.0);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            r#"{"experiment":"mrt"}"#,
            r#"{"experiment":"nope"}"#,
            r#"{"experiment":"mrt","params":{"n":10,"D":1,"L":0.1,"l0":0.2},"extra":1}"#,
            r#"{"experiment":"mrt","params":{"n":10,"D":1,"L":0.1,"l0":0.2,"x":1}}"#,
            r#"{"experiment":"laplace-check","validate":{"y":[1]}}"#,
            r#"{"experiment":"boundary-layer","params":{"n":10,"D":1,"L":0.1,"l0":0.2}}"#,
            r#"{"experiment":"mrt","params":{"n":10,"D":"pi+","L":0.1,"l0":0.2}}"#,
            r#"{"experiment":"mrt","params":{"n":10,"D":1,"L":0.1,"l0":0.2},"mc":{"dt":0}}"#,
        ] {
            let err = RunConfig::from_json_str(text).and_then(|c| c.plan()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{text}: {err}");
        }
    }

    #[test]
    fn infeasible_single_point() {
        let text = r#"{"experiment":"mrt","params":{"n":1,"D":1,"L":0.3,"l0":0.25}}"#;
        let err = RunConfig::from_json_str(text).unwrap().plan().unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn overrides_and_echo() {
        let mut cfg = RunConfig::from_json_str(&fig4_json("")).unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            workers: Some(4),
            out: Some("x.csv".into()),
            ..Overrides::default()
        });
        assert_eq!(cfg.seed(), 9);
        let echo = cfg.to_json();
        assert!(!echo.contains("workers") && !echo.contains("x.csv"), "{echo}");
        assert_eq!(cfg.output.as_deref(), Some("x.csv"));
        let again = RunConfig::from_json_str(&echo).unwrap();
        assert_eq!(again.seed(), 9);
    }

    #[test]
    fn range_edges() {
        let r = RangeSpec {
            start: Real(0.1),
            stop: Real(0.3),
            step: Real(0.1),
        };
        assert_eq!(r.values().unwrap().len(), 3);
        let bad = RangeSpec {
            start: Real(1.0),
            stop: Real(0.0),
            step: Real(0.1),
        };
        assert!(bad.values().is_err());
    }
}
