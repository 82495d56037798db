//! Run configuration: TOML config files merged under command-line flags, and
//! resolution of scenario names and files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hullswarm::dynamics::WeightBounds;
use hullswarm::scenarios::{
    default_counterexample, jlc_params, make_inputs_c1, make_jlc_acyclic, make_jlc_bidirectional, make_jlc_broken,
    make_ujlc, scenario_suite, GenParams, InputModel, Scenario, Shape, WeightModel,
};
use serde::{Deserialize, Serialize};

/// Output directory used when neither `--out`, the config file nor
/// `HULLSWARM_OUT` names one.
pub const DEFAULT_OUT: &str = "hullswarm-out";
pub const DEFAULT_EPS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Dini,
    G2,
    Lemma7,
    Siss,
    Siiss,
    Tracking,
}

/// Generator knobs; unset fields fall back to the class defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub seed: Option<u64>,
    pub tau_d: Option<f64>,
    pub window: Option<f64>,
    pub bounds: Option<WeightBounds>,
    pub weights: Option<WeightModel>,
    pub inputs: Option<InputModel>,
}

/// Layout of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub checks: Option<Vec<Check>>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
    pub plot: Option<bool>,
    #[serde(default)]
    pub batch: Vec<String>,
    #[serde(default)]
    pub params: ParamsDoc,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Everything one invocation needs, after merging.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub batch: Vec<String>,
    pub params: ParamsDoc,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub checks: Vec<Check>,
    pub eps: f64,
    pub out: PathBuf,
    pub plot: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("dt must be positive, got {dt}");
            }
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                bail!("horizon must be positive, got {h}");
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            bail!("eps must be positive, got {}", self.eps);
        }
        Ok(())
    }
}

fn apply(p: &mut GenParams, doc: &ParamsDoc) {
    p.n = doc.n.unwrap_or(p.n);
    p.k = doc.k.unwrap_or(p.k);
    p.d = doc.d.unwrap_or(p.d);
    p.seed = doc.seed.unwrap_or(p.seed);
    p.tau_d = doc.tau_d.unwrap_or(p.tau_d);
    p.window = doc.window.unwrap_or(p.window);
    p.bounds = doc.bounds.unwrap_or(p.bounds);
    p.weights = doc.weights.unwrap_or(p.weights);
    p.inputs = doc.inputs.unwrap_or(p.inputs);
}

/// A scenario together with the time to simulate to.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub t_end: f64,
}

/// Turns a scenario name or path into scenarios. `suite` expands to the whole
/// mixed suite.
pub fn resolve(source: &str, params: &ParamsDoc, horizon: Option<f64>) -> Result<Vec<Resolved>> {
    let generated = |mut p: GenParams, f: &dyn Fn(&GenParams) -> hullswarm::Result<Scenario>| -> Result<Vec<Resolved>> {
        apply(&mut p, params);
        p.horizon = horizon.or(p.horizon);
        let scenario = f(&p).with_context(|| format!("generating `{source}`"))?;
        let t_end = scenario.horizon();
        Ok(vec![Resolved { scenario, t_end }])
    };
    let jlc = || jlc_params(params.seed.unwrap_or(0));
    match source {
        "ujlc" => {
            let mut p = GenParams {
                inputs: make_inputs_c1(Shape::Rotating, 1.0),
                ..GenParams::default()
            };
            if params.window.is_none() {
                // one arc per piece, each piece at least a dwell time long
                let n = params.n.unwrap_or(p.n) as f64;
                p.window = p.window.max(n * params.tau_d.unwrap_or(p.tau_d));
            }
            generated(p, &make_ujlc)
        }
        "jlc-bidirectional" => generated(jlc(), &make_jlc_bidirectional),
        "jlc-acyclic" => generated(jlc(), &make_jlc_acyclic),
        "jlc-broken" => generated(jlc(), &|p| make_jlc_broken(p, false)),
        "jlc-broken-acyclic" => generated(jlc(), &|p| make_jlc_broken(p, true)),
        "counterexample" => {
            let sc = default_counterexample(params.n.unwrap_or(3), params.k.unwrap_or(2), params.d.unwrap_or(2))
                .context("generating `counterexample`")?;
            fixed_horizon(sc, horizon)
        }
        "suite" => scenario_suite()
            .context("generating the suite")?
            .into_iter()
            .map(|scenario| {
                let t_end = scenario.horizon();
                Ok(Resolved { scenario, t_end })
            })
            .collect(),
        path => {
            let p = Path::new(path);
            if !p.exists() {
                bail!(
                    "`{path}` is neither a scenario name (ujlc, counterexample, jlc-bidirectional, \
                     jlc-acyclic, jlc-broken, jlc-broken-acyclic, suite) nor an existing file"
                );
            }
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {path}"))?;
            let sc = Scenario::from_toml(&text).with_context(|| format!("loading scenario {path}"))?;
            fixed_horizon(sc, horizon)
        }
    }
}

fn fixed_horizon(scenario: Scenario, horizon: Option<f64>) -> Result<Vec<Resolved>> {
    let t_end = match horizon {
        Some(h) if h > scenario.horizon() + 1e-9 => {
            bail!("horizon {h} exceeds the schedule horizon {} of `{}`", scenario.horizon(), scenario.name)
        }
        Some(h) => h,
        None => scenario.horizon(),
    };
    Ok(vec![Resolved { scenario, t_end }])
}
