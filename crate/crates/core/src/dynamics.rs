//! Closed-loop leader/follower dynamics and a fixed-step integrator.
//!
//! Leaders follow `dy_i = u_i(y, t)`. Follower `i` moves toward its follower
//! neighbors with weights `a_ij` and toward its leaders with weights `b_ij`,
//! plus a disturbance `w_i(t)`. Weights are checked against their bounds on
//! every evaluation.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, LeaderHull};
use crate::topology::{AgentId, InLists, SwitchingSchedule, TIME_EPS};

/// Bounds on the interaction weights: `a_lo <= a_ij <= a_hi`, `b_ij >= b_lo`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightBounds {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b_lo: f64,
}

impl WeightBounds {
    pub fn new(a_lo: f64, a_hi: f64, b_lo: f64) -> Result<Self> {
        let b = Self { a_lo, a_hi, b_lo };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a_lo > 0.0
            && self.a_lo <= self.a_hi
            && self.b_lo > 0.0
            && self.a_hi.is_finite()
            && self.b_lo.is_finite();
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "weight bounds need 0 < a_lo <= a_hi and b_lo > 0, got {self:?}"
            )))
        }
    }
}

impl Default for WeightBounds {
    fn default() -> Self {
        Self {
            a_lo: 0.5,
            a_hi: 1.5,
            b_lo: 0.5,
        }
    }
}

/// A set of points in `R^dim`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn zeros(count: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; count * dim],
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(invalid("point data does not split into rows"));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.as_ref().len() != dim {
                return Err(invalid(format!("expected rows of length {dim}")));
            }
            data.extend_from_slice(r.as_ref());
        }
        Ok(Self { dim, data })
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Convex hull of the rows.
    pub fn hull(&self) -> Result<LeaderHull> {
        LeaderHull::new(self.dim, self.data.clone())
    }

    fn set_lincomb(&mut self, base: &Points, h: f64, slope: &Points) {
        for ((o, b), s) in self.data.iter_mut().zip(&base.data).zip(&slope.data) {
            *o = b + h * s;
        }
    }
}

pub type WeightFn = Arc<dyn Fn(usize, usize, &Points, &Points, f64) -> f64 + Send + Sync>;
pub type LeaderInputFn = Arc<dyn Fn(usize, &Points, f64, &mut [f64]) + Send + Sync>;
pub type DisturbanceFn = Arc<dyn Fn(usize, f64, &mut [f64]) + Send + Sync>;

/// The closed-loop system: agent counts, weights, inputs and topology.
#[derive(Clone)]
pub struct SystemSpec {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub bounds: WeightBounds,
    /// `a_ij(x, y, t)` for follower `i` seeing follower `j`.
    pub weight_a: WeightFn,
    /// `b_ij(x, y, t)` for follower `i` seeing leader `j`.
    pub weight_b: WeightFn,
    /// Writes `u_i(y, t)` into the output slice.
    pub leader_input: LeaderInputFn,
    /// Writes `w_i(t)` into the output slice.
    pub disturbance: DisturbanceFn,
    schedule: SwitchingSchedule,
    lists: Arc<Vec<InLists>>,
}

impl std::fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemSpec")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("d", &self.d)
            .field("bounds", &self.bounds)
            .field("pieces", &self.schedule.pieces().len())
            .finish_non_exhaustive()
    }
}

impl SystemSpec {
    /// Constant weights at the middle of the `a` range and at `2 b_lo`, with
    /// static leaders and no disturbance.
    pub fn new(schedule: SwitchingSchedule, d: usize, bounds: WeightBounds) -> Result<Self> {
        bounds.validate()?;
        if d == 0 {
            return Err(invalid("state dimension must be at least 1"));
        }
        let a = 0.5 * (bounds.a_lo + bounds.a_hi);
        let b = 2.0 * bounds.b_lo;
        let lists = schedule.pieces().iter().map(|p| p.graph.in_lists()).collect();
        Ok(Self {
            n: schedule.followers(),
            k: schedule.leaders(),
            d,
            bounds,
            weight_a: Arc::new(move |_, _, _, _, _| a),
            weight_b: Arc::new(move |_, _, _, _, _| b),
            leader_input: Arc::new(|_, _, _, out| out.fill(0.0)),
            disturbance: Arc::new(|_, _, out| out.fill(0.0)),
            schedule,
            lists: Arc::new(lists),
        })
    }

    pub fn with_weights(mut self, a: WeightFn, b: WeightFn) -> Self {
        self.weight_a = a;
        self.weight_b = b;
        self
    }

    pub fn with_leader_input(mut self, u: LeaderInputFn) -> Self {
        self.leader_input = u;
        self
    }

    pub fn with_disturbance(mut self, w: DisturbanceFn) -> Self {
        self.disturbance = w;
        self
    }

    pub fn schedule(&self) -> &SwitchingSchedule {
        &self.schedule
    }

    /// Default step: at least twenty steps per dwell interval, at most `1e-2`.
    pub fn default_dt(&self) -> f64 {
        (self.schedule.dwell() / 20.0).min(1e-2)
    }

    fn check_shapes(&self, x: &Points, y: &Points) -> Result<()> {
        if x.len() != self.n || y.len() != self.k || x.dim() != self.d || y.dim() != self.d {
            return Err(invalid(format!(
                "state shapes {}x{} and {}x{} do not match n = {}, k = {}, d = {}",
                x.len(),
                x.dim(),
                y.len(),
                y.dim(),
                self.n,
                self.k,
                self.d
            )));
        }
        Ok(())
    }

    fn eval_into(
        &self,
        lists: &InLists,
        x: &Points,
        y: &Points,
        t: f64,
        dx: &mut Points,
        dy: &mut Points,
    ) -> Result<()> {
        let WeightBounds { a_lo, a_hi, b_lo } = self.bounds;
        for l in 0..self.k {
            (self.leader_input)(l, y, t, dy.row_mut(l));
        }
        for i in 0..self.n {
            let out = dx.row_mut(i);
            (self.disturbance)(i, t, out);
            let xi = x.row(i);
            for &j in &lists.neighbors[i] {
                let a = (self.weight_a)(i, j, x, y, t);
                if !(a >= a_lo && a <= a_hi) {
                    return Err(Error::BoundViolation {
                        from: AgentId::Follower(j),
                        to: AgentId::Follower(i),
                        t,
                        value: a,
                        lo: a_lo,
                        hi: a_hi,
                    });
                }
                for ((o, xj), xi) in out.iter_mut().zip(x.row(j)).zip(xi) {
                    *o += a * (xj - xi);
                }
            }
            for &j in &lists.leaders[i] {
                let b = (self.weight_b)(i, j, x, y, t);
                if !(b >= b_lo && b < f64::INFINITY) {
                    return Err(Error::BoundViolation {
                        from: AgentId::Leader(j),
                        to: AgentId::Follower(i),
                        t,
                        value: b,
                        lo: b_lo,
                        hi: f64::INFINITY,
                    });
                }
                for ((o, yj), xi) in out.iter_mut().zip(y.row(j)).zip(xi) {
                    *o += b * (yj - xi);
                }
            }
        }
        Ok(())
    }
}

/// Right-hand side at `(x, y, t)` using the topology active at `t`.
pub fn derivative(spec: &SystemSpec, x: &Points, y: &Points, t: f64) -> Result<(Points, Points)> {
    spec.check_shapes(x, y)?;
    if !(t >= 0.0 && t <= spec.schedule.horizon() + TIME_EPS) {
        return Err(invalid(format!("t = {t} outside the schedule horizon")));
    }
    let mut dx = Points::zeros(spec.n, spec.d);
    let mut dy = Points::zeros(spec.k, spec.d);
    let lists = &spec.lists[spec.schedule.piece_index_at(t)];
    spec.eval_into(lists, x, y, t, &mut dx, &mut dy)?;
    Ok((dx, dy))
}

/// Sampled solution of the closed-loop system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<Points>,
    pub y: Vec<Points>,
    pub dt: f64,
}

struct Workspace {
    k: [(Points, Points); 4],
    xs: Points,
    ys: Points,
}

/// Fixed-step RK4 from `t = 0` to `t_end`. Steps are cut at switching
/// instants so no step straddles a switch, and all four stages of a step use
/// the graph active at the step start. Every step endpoint is recorded.
pub fn simulate(
    spec: &SystemSpec,
    x0: &Points,
    y0: &Points,
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    spec.check_shapes(x0, y0)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("step size must be positive"));
    }
    let horizon = spec.schedule.horizon();
    if !(t_end > 0.0 && t_end <= horizon + TIME_EPS) {
        return Err(invalid(format!("t_end = {t_end} outside (0, {horizon}]")));
    }
    if !x0.is_finite() || !y0.is_finite() {
        return Err(invalid("initial state must be finite"));
    }
    let switches: Vec<f64> = spec.schedule.boundaries().skip(1).collect();
    let mut ws = Workspace {
        k: std::array::from_fn(|_| (Points::zeros(spec.n, spec.d), Points::zeros(spec.k, spec.d))),
        xs: x0.clone(),
        ys: y0.clone(),
    };
    let steps_hint = (t_end / dt).ceil() as usize + switches.len() + 1;
    let mut times = Vec::with_capacity(steps_hint);
    let mut xs = Vec::with_capacity(steps_hint);
    let mut ys = Vec::with_capacity(steps_hint);
    times.push(0.0);
    xs.push(x0.clone());
    ys.push(y0.clone());

    let mut x = x0.clone();
    let mut y = y0.clone();
    // Step endpoints are measured from the last switch to avoid drift.
    let mut anchor = 0.0;
    let mut m = 0u64;
    let mut t = 0.0;
    let mut next_switch = 0;
    while t < t_end - TIME_EPS {
        while next_switch < switches.len() && switches[next_switch] <= t + TIME_EPS {
            next_switch += 1;
        }
        let mut t_next = anchor + (m + 1) as f64 * dt;
        m += 1;
        let limit = switches
            .get(next_switch)
            .copied()
            .unwrap_or(f64::INFINITY)
            .min(t_end);
        if t_next >= limit - TIME_EPS {
            t_next = limit;
            if limit < t_end {
                anchor = limit;
                m = 0;
            }
        }
        let lists = &spec.lists[spec.schedule.piece_index_at(t)];
        rk4_step(spec, lists, &mut ws, &mut x, &mut y, t, t_next - t)?;
        t = t_next;
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Divergence { t });
        }
        times.push(t);
        xs.push(x.clone());
        ys.push(y.clone());
    }
    Ok(Trajectory {
        times,
        x: xs,
        y: ys,
        dt,
    })
}

fn rk4_step(
    spec: &SystemSpec,
    lists: &InLists,
    ws: &mut Workspace,
    x: &mut Points,
    y: &mut Points,
    t: f64,
    h: f64,
) -> Result<()> {
    let [k1, k2, k3, k4] = &mut ws.k;
    spec.eval_into(lists, x, y, t, &mut k1.0, &mut k1.1)?;
    ws.xs.set_lincomb(x, 0.5 * h, &k1.0);
    ws.ys.set_lincomb(y, 0.5 * h, &k1.1);
    spec.eval_into(lists, &ws.xs, &ws.ys, t + 0.5 * h, &mut k2.0, &mut k2.1)?;
    ws.xs.set_lincomb(x, 0.5 * h, &k2.0);
    ws.ys.set_lincomb(y, 0.5 * h, &k2.1);
    spec.eval_into(lists, &ws.xs, &ws.ys, t + 0.5 * h, &mut k3.0, &mut k3.1)?;
    ws.xs.set_lincomb(x, h, &k3.0);
    ws.ys.set_lincomb(y, h, &k3.1);
    spec.eval_into(lists, &ws.xs, &ws.ys, t + h, &mut k4.0, &mut k4.1)?;
    let c = h / 6.0;
    for (state, slopes) in [(&mut x.data, [&k1.0, &k2.0, &k3.0, &k4.0]), (&mut y.data, [&k1.1, &k2.1, &k3.1, &k4.1])] {
        for (idx, v) in state.iter_mut().enumerate() {
            *v += c
                * (slopes[0].data[idx]
                    + 2.0 * slopes[1].data[idx]
                    + 2.0 * slopes[2].data[idx]
                    + slopes[3].data[idx]);
        }
    }
    Ok(())
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn followers(&self) -> usize {
        self.x.first().map(Points::len).unwrap_or(0)
    }

    pub fn leaders(&self) -> usize {
        self.y.first().map(Points::len).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.x.first().map(Points::dim).unwrap_or(0)
    }

    /// Largest follower distance to the leader hull at each sample.
    pub fn max_distances(&self) -> Result<Vec<f64>> {
        self.x
            .iter()
            .zip(&self.y)
            .map(|(x, y)| {
                let hull = y.hull()?;
                x.rows()
                    .map(|xi| distance(xi, &hull))
                    .try_fold(0.0f64, |acc, d| Ok(acc.max(d?)))
            })
            .collect()
    }

    /// Writes `t,x_1_1..x_n_d,y_1_1..y_k_d` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let (n, k, d) = (self.followers(), self.leaders(), self.dim());
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["t".to_string()];
        for (prefix, count) in [("x", n), ("y", k)] {
            for i in 1..=count {
                for c in 1..=d {
                    header.push(format!("{prefix}_{i}_{c}"));
                }
            }
        }
        w.write_record(&header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(header.len());
        for ((t, x), y) in self.times.iter().zip(&self.x).zip(&self.y) {
            record.clear();
            record.push(format_num(*t));
            record.extend(x.as_slice().iter().chain(y.as_slice()).map(|v| format_num(*v)));
            w.write_record(&record).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a trajectory written by [`write_csv`](Self::write_csv). The
    /// step size is recovered from the first step.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        let (n, k, d) = parse_header(&header)?;
        let mut traj = Trajectory {
            times: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
            dt: 0.0,
        };
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let vals = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 1 + (n + k) * d {
                return Err(Error::Parse("row length does not match header".into()));
            }
            traj.times.push(vals[0]);
            traj.x.push(Points::from_flat(d, vals[1..1 + n * d].to_vec())?);
            traj.y.push(Points::from_flat(d, vals[1 + n * d..].to_vec())?);
        }
        traj.dt = match traj.times.as_slice() {
            [t0, t1, ..] => t1 - t0,
            _ => 0.0,
        };
        Ok(traj)
    }
}

pub(crate) fn format_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn parse_header(header: &csv::StringRecord) -> Result<(usize, usize, usize)> {
    let bad = || Error::Parse("trajectory header must be t,x_i_c...,y_j_c...".into());
    if header.get(0) != Some("t") {
        return Err(bad());
    }
    let (mut n, mut k, mut d) = (0, 0, 0);
    for name in header.iter().skip(1) {
        let mut parts = name.split('_');
        let (Some(kind), Some(i), Some(c), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(bad());
        };
        let i: usize = i.parse().map_err(|_| bad())?;
        let c: usize = c.parse().map_err(|_| bad())?;
        match kind {
            "x" => n = n.max(i),
            "y" => k = k.max(i),
            _ => return Err(bad()),
        }
        d = d.max(c);
    }
    if d == 0 || header.len() != 1 + (n + k) * d {
        return Err(bad());
    }
    Ok((n, k, d))
}
