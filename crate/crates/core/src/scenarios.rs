//! Reproducible scenarios for each connectivity class.
//!
//! A scenario is a fully serializable description: schedule, weight and input
//! models, and initial states. [`Scenario::spec`] turns it into a runnable
//! [`SystemSpec`].

use std::f64::consts::PI;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{compute_metrics, MetricSeries};
use crate::dynamics::{
    simulate, DisturbanceFn, LeaderInputFn, Points, SystemSpec, Trajectory, WeightBounds, WeightFn,
};
use crate::error::{invalid, Error, Result};
use crate::topology::{AgentId, Digraph, Piece, ScheduleDoc, SwitchingSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioClass {
    Ujlc,
    JlcBidirectional,
    JlcAcyclic,
    /// Joint connectivity lost after the first window.
    JlcBroken,
    Counterexample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Siss,
    Siiss,
    Tracking,
    Divergence,
}

/// Interaction weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightModel {
    Constant { a: f64, b: f64 },
    /// `a_ij = a_lo + (a_hi - a_lo) exp(-|x_i - x_j|^2)`,
    /// `b_ij = b_lo + (a_hi - a_lo) exp(-|x_i - y_j|^2)`.
    DistanceDependent,
    /// Sinusoidal in time across the admissible range.
    Periodic { period: f64 },
}

/// Time profile of the input magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Constant,
    /// `e^{-t}`: integrable.
    Exponential,
    /// `1 / (1 + t)`: vanishing but not integrable.
    Harmonic,
}

impl Profile {
    pub fn at(self, t: f64) -> f64 {
        match self {
            Profile::Constant => 1.0,
            Profile::Exponential => (-t).exp(),
            Profile::Harmonic => 1.0 / (1.0 + t),
        }
    }

    /// `int_0^t` of the profile.
    pub fn integral(self, t: f64) -> f64 {
        match self {
            Profile::Constant => t,
            Profile::Exponential => -(-t).exp_m1(),
            Profile::Harmonic => t.ln_1p(),
        }
    }
}

/// How the input is spread over agents and coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    /// Same direction `(1, .., 1) / sqrt(d)` for every agent.
    Uniform,
    /// Each agent's direction turns at unit angular speed in the first two
    /// coordinates; alternating signs when `d = 1`.
    Rotating,
    LeadersOnly,
    FollowersOnly,
}

/// Leader inputs `u` and follower disturbances `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputModel {
    Zero,
    /// Every leader moves with velocity `speed (1, .., 1)`; no disturbance.
    UniformDrift { speed: f64 },
    /// `z(t) = scale profile(t) e(t)` with `|e(t)| = 1` for the stacked
    /// vector `z = (u, w)`.
    Shaped {
        profile: Profile,
        shape: Shape,
        scale: f64,
    },
}

/// Integrable inputs, `|z(t)| = scale e^{-t}`.
pub fn make_inputs_c1(shape: Shape, scale: f64) -> InputModel {
    InputModel::Shaped {
        profile: Profile::Exponential,
        shape,
        scale,
    }
}

/// Vanishing, non-integrable inputs, `|z(t)| = scale / (1 + t)`.
pub fn make_inputs_c2(shape: Shape, scale: f64) -> InputModel {
    InputModel::Shaped {
        profile: Profile::Harmonic,
        shape,
        scale,
    }
}

fn direction(shape: Shape, agent: usize, t: f64, out: &mut [f64]) {
    let d = out.len();
    match shape {
        Shape::Rotating if d == 1 => out[0] = if agent % 2 == 0 { 1.0 } else { -1.0 },
        Shape::Rotating => {
            out.fill(0.0);
            let phase = t + agent as f64;
            out[0] = phase.cos();
            out[1] = phase.sin();
        }
        _ => out.fill(1.0 / (d as f64).sqrt()),
    }
}

impl InputModel {
    pub fn functions(self, n: usize, k: usize) -> Result<(LeaderInputFn, DisturbanceFn)> {
        match self {
            InputModel::Zero => Ok((
                Arc::new(|_, _, _, out: &mut [f64]| out.fill(0.0)),
                Arc::new(|_, _, out: &mut [f64]| out.fill(0.0)),
            )),
            InputModel::UniformDrift { speed } => Ok((
                Arc::new(move |_, _, _, out: &mut [f64]| out.fill(speed)),
                Arc::new(|_, _, out: &mut [f64]| out.fill(0.0)),
            )),
            InputModel::Shaped {
                profile,
                shape,
                scale,
            } => {
                if !(scale >= 0.0 && scale.is_finite()) {
                    return Err(invalid("input scale must be nonnegative"));
                }
                let (lead_on, foll_on) = match shape {
                    Shape::LeadersOnly => (true, false),
                    Shape::FollowersOnly => (false, true),
                    _ => (true, true),
                };
                let active = (lead_on as usize * k + foll_on as usize * n).max(1);
                let amp = scale / (active as f64).sqrt();
                let u: LeaderInputFn = Arc::new(move |l, _, t, out: &mut [f64]| {
                    if lead_on {
                        direction(shape, l, t, out);
                        let m = amp * profile.at(t);
                        out.iter_mut().for_each(|v| *v *= m);
                    } else {
                        out.fill(0.0);
                    }
                });
                let w: DisturbanceFn = Arc::new(move |i, t, out: &mut [f64]| {
                    if foll_on {
                        direction(shape, k + i, t, out);
                        let m = amp * profile.at(t);
                        out.iter_mut().for_each(|v| *v *= m);
                    } else {
                        out.fill(0.0);
                    }
                });
                Ok((u, w))
            }
        }
    }

    /// `int_0^t |z|` in closed form, when the model has one.
    pub fn z_integral(self, k: usize, d: usize, t: f64) -> f64 {
        match self {
            InputModel::Zero => 0.0,
            InputModel::UniformDrift { speed } => speed.abs() * ((k * d) as f64).sqrt() * t,
            InputModel::Shaped { profile, scale, .. } => scale * profile.integral(t),
        }
    }
}

impl WeightModel {
    pub fn functions(self, bounds: WeightBounds) -> Result<(WeightFn, WeightFn)> {
        let WeightBounds { a_lo, a_hi, b_lo } = bounds;
        match self {
            WeightModel::Constant { a, b } => {
                if !(a >= a_lo && a <= a_hi && b >= b_lo && b.is_finite()) {
                    return Err(invalid(format!(
                        "constant weights a = {a}, b = {b} violate the bounds"
                    )));
                }
                Ok((Arc::new(move |_, _, _, _, _| a), Arc::new(move |_, _, _, _, _| b)))
            }
            WeightModel::DistanceDependent => {
                let span = a_hi - a_lo;
                let a: WeightFn = Arc::new(move |i, j, x, _, _| {
                    let sq: f64 = x.row(i).iter().zip(x.row(j)).map(|(p, q)| (p - q) * (p - q)).sum();
                    (a_lo + span * (-sq).exp()).clamp(a_lo, a_hi)
                });
                let b: WeightFn = Arc::new(move |i, j, x, y, _| {
                    let sq: f64 = x.row(i).iter().zip(y.row(j)).map(|(p, q)| (p - q) * (p - q)).sum();
                    (b_lo + span * (-sq).exp()).max(b_lo)
                });
                Ok((a, b))
            }
            WeightModel::Periodic { period } => {
                if !(period > 0.0) {
                    return Err(invalid("weight period must be positive"));
                }
                let mid = 0.5 * (a_lo + a_hi);
                let half = 0.5 * (a_hi - a_lo);
                let a: WeightFn = Arc::new(move |i, j, _, _, t| {
                    let s = (2.0 * PI * t / period + i as f64 + 2.0 * j as f64).sin();
                    (mid + half * s).clamp(a_lo, a_hi)
                });
                let b: WeightFn = Arc::new(move |i, j, _, _, t| {
                    let s = (2.0 * PI * t / period + 2.0 * i as f64 + j as f64).sin();
                    (b_lo * (1.5 + 0.5 * s)).max(b_lo)
                });
                Ok((a, b))
            }
        }
    }
}

/// A self-contained, serializable experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub class: ScenarioClass,
    pub expected: Expectation,
    pub seed: u64,
    pub d: usize,
    pub bounds: WeightBounds,
    pub weights: WeightModel,
    pub inputs: InputModel,
    pub schedule: SwitchingSchedule,
    /// Uniform connectivity window, for uniformly connected classes.
    pub window: Option<f64>,
    pub x0: Points,
    pub y0: Points,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.schedule.followers()
    }

    pub fn k(&self) -> usize {
        self.schedule.leaders()
    }

    pub fn horizon(&self) -> f64 {
        self.schedule.horizon()
    }

    pub fn spec(&self) -> Result<SystemSpec> {
        let (a, b) = self.weights.functions(self.bounds)?;
        let (u, w) = self.inputs.functions(self.n(), self.k())?;
        Ok(SystemSpec::new(self.schedule.clone(), self.d, self.bounds)?
            .with_weights(a, b)
            .with_leader_input(u)
            .with_disturbance(w))
    }

    /// Simulates up to `t_end` (default: the horizon) with step `dt`
    /// (default: [`SystemSpec::default_dt`]) and computes the metrics.
    pub fn simulate(&self, dt: Option<f64>, t_end: Option<f64>) -> Result<Run> {
        let spec = self.spec()?;
        let dt = dt.unwrap_or_else(|| spec.default_dt());
        let traj = simulate(&spec, &self.x0, &self.y0, dt, t_end.unwrap_or(self.horizon()))?;
        let metrics = compute_metrics(&traj, &spec)?;
        Ok(Run {
            spec,
            traj,
            metrics,
        })
    }

    /// Confirms the schedule belongs to the claimed class.
    pub fn validate(&self) -> Result<()> {
        let s = &self.schedule;
        let fail = |what: &str| Err(invalid(format!("scenario `{}`: {what}", self.name)));
        if self.x0.len() != self.n() || self.y0.len() != self.k() {
            return fail("initial states do not match the agent counts");
        }
        if self.x0.dim() != self.d || self.y0.dim() != self.d {
            return fail("initial states do not match the dimension");
        }
        self.weights.functions(self.bounds)?;
        self.inputs.functions(self.n(), self.k())?;
        let half = s.horizon() / 2.0;
        match self.class {
            ScenarioClass::Ujlc => {
                let Some(t) = self.window else {
                    return fail("uniform class needs a window");
                };
                if !s.classify_ujlc(t)? {
                    return fail("schedule is not uniformly connected with its window");
                }
            }
            ScenarioClass::JlcBidirectional | ScenarioClass::JlcAcyclic => {
                if !s.classify_jlc() {
                    return fail("schedule is not jointly connected");
                }
                if s.ujlc_witness(half).is_some() {
                    return fail("schedule is uniformly connected");
                }
                if self.class == ScenarioClass::JlcBidirectional && !s.is_bidirectional() {
                    return fail("pieces are not bidirectional");
                }
                if self.class == ScenarioClass::JlcAcyclic && !s.union_is_acyclic() {
                    return fail("union follower graph has a cycle");
                }
            }
            ScenarioClass::JlcBroken | ScenarioClass::Counterexample => {
                if s.classify_jlc() {
                    return fail("schedule is jointly connected");
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioDoc::from(self)).expect("scenario serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let n = doc.schedule.followers;
        let k = doc.schedule.leaders;
        let sc = Scenario {
            name: doc.name,
            class: doc.class,
            expected: doc.expected,
            seed: doc.seed,
            d: doc.d,
            bounds: doc.bounds,
            weights: doc.weights,
            inputs: doc.inputs,
            window: doc.window,
            x0: rows_to_points(doc.d, n, &doc.x0)?,
            y0: rows_to_points(doc.d, k, &doc.y0)?,
            schedule: doc.schedule.try_into()?,
        };
        sc.bounds.validate()?;
        sc.validate()?;
        Ok(sc)
    }
}

/// A simulated scenario.
#[derive(Debug, Clone)]
pub struct Run {
    pub spec: SystemSpec,
    pub traj: Trajectory,
    pub metrics: MetricSeries,
}

fn rows_to_points(d: usize, count: usize, rows: &[Vec<f64>]) -> Result<Points> {
    if rows.len() != count {
        return Err(Error::Parse(format!("expected {count} initial rows, got {}", rows.len())));
    }
    Points::from_rows(d, rows).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Serialize, Deserialize)]
struct ScenarioDoc {
    name: String,
    class: ScenarioClass,
    expected: Expectation,
    seed: u64,
    d: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    window: Option<f64>,
    x0: Vec<Vec<f64>>,
    y0: Vec<Vec<f64>>,
    bounds: WeightBounds,
    weights: WeightModel,
    inputs: InputModel,
    schedule: ScheduleDoc,
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        ScenarioDoc {
            name: s.name.clone(),
            class: s.class,
            expected: s.expected,
            seed: s.seed,
            d: s.d,
            window: s.window,
            x0: s.x0.rows().map(<[f64]>::to_vec).collect(),
            y0: s.y0.rows().map(<[f64]>::to_vec).collect(),
            bounds: s.bounds,
            weights: s.weights,
            inputs: s.inputs,
            schedule: ScheduleDoc::from(&s.schedule),
        }
    }
}

/// Knobs shared by the generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub seed: u64,
    /// Dwell time; also the piece length of the jointly connected classes.
    pub tau_d: f64,
    /// Uniform window `T` of the uniformly connected class.
    pub window: f64,
    /// Overrides the class default horizon.
    pub horizon: Option<f64>,
    pub bounds: WeightBounds,
    pub weights: WeightModel,
    pub inputs: InputModel,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n: 4,
            k: 3,
            d: 2,
            seed: 0,
            tau_d: 0.5,
            window: 2.0,
            horizon: None,
            bounds: WeightBounds::default(),
            weights: WeightModel::Constant { a: 1.0, b: 1.0 },
            inputs: InputModel::Zero,
        }
    }
}

impl GenParams {
    fn check(&self) -> Result<()> {
        if self.n < 2 || self.k < 1 || self.d < 1 {
            return Err(invalid("need n >= 2, k >= 1 and d >= 1"));
        }
        if !(self.tau_d > 0.0 && self.window > 0.0) {
            return Err(invalid("dwell time and window must be positive"));
        }
        self.bounds.validate()
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Followers in `[-5, 5]^d`, leaders in `[-1, 1]^d`.
fn initial_states(rng: &mut ChaCha8Rng, n: usize, k: usize, d: usize) -> (Points, Points) {
    let mut draw = |count: usize, r: f64| {
        let data = (0..count * d).map(|_| rng.gen_range(-r..=r)).collect();
        Points::from_flat(d, data).expect("shape")
    };
    let x0 = draw(n, 5.0);
    let y0 = draw(k, 1.0);
    (x0, y0)
}

/// Random arborescence rooted at the leaders, listed parent before child.
fn leader_rooted_tree(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<(AgentId, AgentId)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut arcs = Vec::with_capacity(n);
    for (m, &i) in order.iter().enumerate() {
        let pick = rng.gen_range(0..k + m);
        let parent = if pick < k {
            AgentId::Leader(pick)
        } else {
            AgentId::Follower(order[pick - k])
        };
        arcs.push((parent, AgentId::Follower(i)));
    }
    arcs
}

/// Periodic schedule showing one arc of a random leader-rooted arborescence
/// per piece, so every window of `n` pieces (length `T`) holds the whole tree.
pub fn make_ujlc(p: &GenParams) -> Result<Scenario> {
    p.check()?;
    let piece = p.window / p.n as f64;
    if piece < p.tau_d - 1e-12 {
        return Err(invalid(format!(
            "window {} split into {} pieces is shorter than the dwell time {}",
            p.window, p.n, p.tau_d
        )));
    }
    let mut rng = p.rng();
    let tree = leader_rooted_tree(&mut rng, p.n, p.k);
    let graphs = tree
        .iter()
        .map(|&arc| Digraph::with_arcs(p.n, p.k, [arc]))
        .collect::<Result<Vec<_>>>()?;
    let t_star = p.n as f64 * (p.window + 2.0 * p.tau_d);
    let horizon = p.horizon.unwrap_or(3.0 * t_star);
    let schedule = SwitchingSchedule::periodic(&graphs, piece, horizon, p.tau_d)?;
    let (x0, y0) = initial_states(&mut rng, p.n, p.k, p.d);
    let sc = Scenario {
        name: format!("ujlc-n{}-k{}-d{}-s{}", p.n, p.k, p.d, p.seed),
        class: ScenarioClass::Ujlc,
        expected: Expectation::Siss,
        seed: p.seed,
        d: p.d,
        bounds: p.bounds,
        weights: p.weights,
        inputs: p.inputs,
        schedule,
        window: Some(p.window),
        x0,
        y0,
    };
    sc.validate()?;
    Ok(sc)
}

/// Alternates a connected piece of unit length with empty windows of length
/// `growth(1), growth(2), ..`, ending with the last empty window. Followers
/// start at the origin, leaders at `(1, .., 1)` and drift with unit velocity
/// per coordinate.
pub fn make_counterexample_nonjlc(
    n: usize,
    k: usize,
    d: usize,
    growth: impl Fn(usize) -> f64,
    windows: usize,
) -> Result<Scenario> {
    if n < 1 || k < 1 || d < 1 || windows < 1 {
        return Err(invalid("need at least one agent of each kind and one window"));
    }
    let connected_len = 1.0;
    let lengths: Vec<f64> = (1..=windows).map(&growth).collect();
    if lengths.windows(2).any(|w| !(w[1] > w[0])) || !(lengths[0] > 0.0) {
        return Err(invalid("window growth must be positive and strictly increasing"));
    }
    let dwell = lengths[0].min(connected_len);
    let connected = Digraph::leader_fanout(n, k);
    let empty = Digraph::empty(n, k);
    let mut pieces = Vec::with_capacity(2 * windows);
    let mut t = 0.0;
    for len in &lengths {
        pieces.push(Piece {
            start: t,
            graph: connected.clone(),
        });
        t += connected_len;
        pieces.push(Piece {
            start: t,
            graph: empty.clone(),
        });
        t += len;
    }
    let schedule = SwitchingSchedule::new(pieces, t, dwell)?;
    let sc = Scenario {
        name: format!("counterexample-n{n}-k{k}-d{d}"),
        class: ScenarioClass::Counterexample,
        expected: Expectation::Divergence,
        seed: 0,
        d,
        bounds: WeightBounds::default(),
        weights: WeightModel::Constant { a: 1.0, b: 1.0 },
        inputs: InputModel::UniformDrift { speed: 1.0 },
        schedule,
        window: None,
        x0: Points::zeros(n, d),
        y0: Points::from_flat(d, vec![1.0; k * d])?,
    };
    sc.validate()?;
    Ok(sc)
}

/// Disconnected windows `3 * 2^k` for `k = 1..=5`.
pub fn default_counterexample(n: usize, k: usize, d: usize) -> Result<Scenario> {
    make_counterexample_nonjlc(n, k, d, |m| 3.0 * 2f64.powi(m as i32), 5)
}

/// Number of connectivity windows in the jointly connected classes.
pub const JLC_WINDOWS: u32 = 7;

#[derive(Clone, Copy, PartialEq)]
enum JlcKind {
    Bidirectional,
    Acyclic,
}

/// Pieces of length `tau_D`; connectivity windows (every follower fed by a
/// leader, plus follower arcs) occupy single pieces starting at
/// `3 tau_D (2^m - 1)`. Between them, follower-only arcs. When `broken`,
/// leader arcs disappear after the first window. A horizon in the parameters
/// caps the schedule, which then ends with the last window that fits.
fn make_jlc(p: &GenParams, kind: JlcKind, broken: bool) -> Result<Scenario> {
    p.check()?;
    let piece = p.tau_d;
    // Window starts, in pieces: 3 (2^m - 1). The gap before the last window
    // then covers at least half of the horizon, which rules out any uniform
    // window that fits twice.
    let spacing = 3u64;
    let end_of = |m: u32| spacing * (2u64.pow(m - 1) - 1) + 1;
    let windows = match p.horizon {
        Some(h) => (2..=40)
            .take_while(|&m| end_of(m) as f64 * piece <= h + 1e-9)
            .last()
            .ok_or_else(|| invalid(format!("horizon {h} is too short for two windows")))?,
        None => JLC_WINDOWS,
    };
    let count = end_of(windows);
    let horizon = count as f64 * piece;
    let is_window = |m: u64| (m % spacing == 0) && ((m / spacing) + 1).is_power_of_two();

    let mut rng = p.rng();
    let mut order: Vec<usize> = (0..p.n).collect();
    order.shuffle(&mut rng);
    let follower_arcs = |rng: &mut ChaCha8Rng, dense: bool| -> Vec<(AgentId, AgentId)> {
        let mut arcs = Vec::new();
        match kind {
            JlcKind::Bidirectional => {
                for m in 1..p.n {
                    if dense || rng.gen_bool(0.5) {
                        let parent = order[rng.gen_range(0..m)];
                        let (a, b) = (AgentId::Follower(parent), AgentId::Follower(order[m]));
                        arcs.push((a, b));
                        arcs.push((b, a));
                    }
                }
            }
            JlcKind::Acyclic => {
                for m in 1..p.n {
                    if dense || rng.gen_bool(0.5) {
                        let from = order[rng.gen_range(0..m)];
                        arcs.push((AgentId::Follower(from), AgentId::Follower(order[m])));
                    }
                }
            }
        }
        arcs
    };

    let mut pieces = Vec::with_capacity(count as usize);
    let mut seen_window = false;
    for m in 0..count {
        let mut arcs;
        if is_window(m) {
            arcs = follower_arcs(&mut rng, true);
            if !(broken && seen_window) {
                for i in 0..p.n {
                    arcs.push((AgentId::Leader(rng.gen_range(0..p.k)), AgentId::Follower(i)));
                }
            }
            seen_window = true;
        } else {
            arcs = follower_arcs(&mut rng, false);
        }
        pieces.push(Piece {
            start: m as f64 * piece,
            graph: Digraph::with_arcs(p.n, p.k, arcs)?,
        });
    }
    let schedule = SwitchingSchedule::new(pieces, horizon, p.tau_d)?;
    let (x0, y0) = initial_states(&mut rng, p.n, p.k, p.d);
    let (class, tag) = match (broken, kind) {
        (true, JlcKind::Bidirectional) => (ScenarioClass::JlcBroken, "jlc-broken-bidirectional"),
        (true, JlcKind::Acyclic) => (ScenarioClass::JlcBroken, "jlc-broken-acyclic"),
        (false, JlcKind::Bidirectional) => (ScenarioClass::JlcBidirectional, "jlc-bidirectional"),
        (false, JlcKind::Acyclic) => (ScenarioClass::JlcAcyclic, "jlc-acyclic"),
    };
    let sc = Scenario {
        name: format!("{tag}-n{}-k{}-d{}-s{}", p.n, p.k, p.d, p.seed),
        class,
        expected: if broken {
            Expectation::Siiss
        } else {
            Expectation::Tracking
        },
        seed: p.seed,
        d: p.d,
        bounds: p.bounds,
        weights: p.weights,
        inputs: p.inputs,
        schedule,
        window: None,
        x0,
        y0,
    };
    sc.validate()?;
    Ok(sc)
}

pub fn make_jlc_bidirectional(p: &GenParams) -> Result<Scenario> {
    make_jlc(p, JlcKind::Bidirectional, false)
}

pub fn make_jlc_acyclic(p: &GenParams) -> Result<Scenario> {
    make_jlc(p, JlcKind::Acyclic, false)
}

/// The jointly connected construction with leader arcs removed after the
/// first connectivity window.
pub fn make_jlc_broken(p: &GenParams, acyclic: bool) -> Result<Scenario> {
    let kind = if acyclic {
        JlcKind::Acyclic
    } else {
        JlcKind::Bidirectional
    };
    make_jlc(p, kind, true)
}

/// Default parameters of the jointly connected classes: long pieces so that
/// the connectivity windows carry enough contraction to track.
pub fn jlc_params(seed: u64) -> GenParams {
    GenParams {
        n: 3,
        k: 2,
        d: 2,
        seed,
        tau_d: 4.0,
        inputs: make_inputs_c1(Shape::Rotating, 1.0),
        ..GenParams::default()
    }
}

/// The mixed suite used for the property checks across classes.
pub fn scenario_suite() -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    let shapes = [Shape::Uniform, Shape::Rotating, Shape::LeadersOnly, Shape::FollowersOnly];
    for (idx, &(n, k, d)) in [(2, 1, 1), (3, 2, 2), (4, 3, 2), (5, 2, 3), (4, 5, 3)].iter().enumerate() {
        for (j, inputs) in [
            InputModel::Zero,
            InputModel::Shaped {
                profile: Profile::Constant,
                shape: shapes[idx % 4],
                scale: 0.5,
            },
            make_inputs_c1(shapes[(idx + 1) % 4], 2.0),
            make_inputs_c2(shapes[(idx + 2) % 4], 1.0),
        ]
        .into_iter()
        .enumerate()
        {
            let weights = match (idx + j) % 3 {
                0 => WeightModel::Constant { a: 1.0, b: 1.0 },
                1 => WeightModel::DistanceDependent,
                _ => WeightModel::Periodic { period: 3.0 },
            };
            let p = GenParams {
                n,
                k,
                d,
                seed: (10 * idx + j) as u64,
                tau_d: 0.5,
                window: 0.5 * n as f64,
                weights,
                inputs,
                ..GenParams::default()
            };
            let mut sc = make_ujlc(&p)?;
            sc.name = format!("{}-{}", sc.name, j);
            out.push(sc);
        }
    }
    out.push(default_counterexample(3, 2, 2)?);
    for seed in 0..2 {
        let mut p = jlc_params(seed);
        p.horizon = Some(200.0);
        // Ends at 184 with four windows.
        if seed == 1 {
            p.weights = WeightModel::DistanceDependent;
        }
        out.push(make_jlc_bidirectional(&p)?);
        out.push(make_jlc_acyclic(&p)?);
    }
    Ok(out)
}
