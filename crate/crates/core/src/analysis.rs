//! Metrics along trajectories and numerical checks of the certified bounds.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::certificates::{CertificateBundle, JlcRecursion, SissEnvelope, SiissUjlc};
use crate::dynamics::{csv_err, format_num, SystemSpec, Trajectory};
use crate::error::{invalid, Error, Result};
use crate::geometry::{distance, norm};
use crate::topology::TIME_EPS;

/// Absolute slack on top of every envelope.
pub const ENVELOPE_TOL: f64 = 1e-6;
/// Slack of the input-norm sandwich.
pub const SANDWICH_TOL: f64 = 1e-9;
/// Absolute floor added to the distance-rate tolerance, for projection
/// round-off divided by the step.
pub const DINI_FLOOR: f64 = 1e-9;

/// Per-sample distances and input magnitudes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricSeries {
    pub times: Vec<f64>,
    /// Squared distance of each follower to the leader hull.
    pub psi: Vec<Vec<f64>>,
    /// Largest squared distance.
    pub psi_max: Vec<f64>,
    /// `sqrt(psi_max)`.
    pub dist: Vec<f64>,
    /// Largest leader speed.
    pub r: Vec<f64>,
    /// `r` plus the largest disturbance magnitude.
    pub q: Vec<f64>,
    /// Norm of the stacked leader inputs and disturbances.
    pub z_norm: Vec<f64>,
    /// Norm of the stacked leader inputs.
    pub u_norm: Vec<f64>,
    /// Norm of the stacked disturbances.
    pub w_norm: Vec<f64>,
}

pub fn compute_metrics(traj: &Trajectory, spec: &SystemSpec) -> Result<MetricSeries> {
    let mut m = MetricSeries::default();
    let mut u = vec![0.0; spec.d];
    let mut w = vec![0.0; spec.d];
    for ((&t, x), y) in traj.times.iter().zip(&traj.x).zip(&traj.y) {
        let hull = y.hull()?;
        let psi = x
            .rows()
            .map(|xi| distance(xi, &hull).map(|d| d * d))
            .collect::<Result<Vec<_>>>()?;
        let psi_max = psi.iter().copied().fold(0.0, f64::max);
        let (mut r, mut u_sq) = (0.0f64, 0.0);
        for l in 0..spec.k {
            (spec.leader_input)(l, y, t, &mut u);
            let nu = norm(&u);
            r = r.max(nu);
            u_sq += nu * nu;
        }
        let (mut w_max, mut w_sq) = (0.0f64, 0.0);
        for i in 0..spec.n {
            (spec.disturbance)(i, t, &mut w);
            let nw = norm(&w);
            w_max = w_max.max(nw);
            w_sq += nw * nw;
        }
        m.times.push(t);
        m.psi.push(psi);
        m.psi_max.push(psi_max);
        m.dist.push(psi_max.sqrt());
        m.r.push(r);
        m.q.push(r + w_max);
        m.z_norm.push((u_sq + w_sq).sqrt());
        m.u_norm.push(u_sq.sqrt());
        m.w_norm.push(w_sq.sqrt());
    }
    Ok(m)
}

impl MetricSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `|z|` over the samples.
    pub fn z_sup(&self) -> f64 {
        self.z_norm.iter().copied().fold(0.0, f64::max)
    }

    /// Trapezoid running integral of `series`, zero at the first sample.
    pub fn running_integral(&self, series: &[f64]) -> Vec<f64> {
        let mut acc = Vec::with_capacity(series.len());
        let mut total = 0.0;
        acc.push(0.0);
        for i in 1..series.len() {
            total += 0.5 * (self.times[i] - self.times[i - 1]) * (series[i] + series[i - 1]);
            acc.push(total);
        }
        acc
    }

    /// Index of the sample at `t`, within the switching slack.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let i = self.times.partition_point(|&s| s < t - TIME_EPS);
        (i < self.len() && (self.times[i] - t).abs() <= TIME_EPS).then_some(i)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.psi.first().map(Vec::len).unwrap_or(0);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("psi_{i}")));
        header.extend(
            ["Psi", "dist", "r", "q", "z_norm", "u_norm", "w_norm"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut row = vec![format_num(self.times[i])];
            row.extend(self.psi[i].iter().map(|v| format_num(*v)));
            for s in [
                &self.psi_max,
                &self.dist,
                &self.r,
                &self.q,
                &self.z_norm,
                &self.u_norm,
                &self.w_norm,
            ] {
                row.push(format_num(s[i]));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        let n = header.iter().filter(|h| h.starts_with("psi_")).count();
        if header.len() != n + 8 || header.get(0) != Some("t") {
            return Err(Error::Parse("unexpected metrics header".into()));
        }
        let mut m = MetricSeries::default();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let v = rec
                .iter()
                .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != n + 8 {
                return Err(Error::Parse("row length does not match header".into()));
            }
            m.times.push(v[0]);
            m.psi.push(v[1..=n].to_vec());
            let rest = &v[n + 1..];
            m.psi_max.push(rest[0]);
            m.dist.push(rest[1]);
            m.r.push(rest[2]);
            m.q.push(rest[3]);
            m.z_norm.push(rest[4]);
            m.u_norm.push(rest[5]);
            m.w_norm.push(rest[6]);
        }
        Ok(m)
    }
}

/// Outcome of one inequality checked at every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundVerdict {
    pub check: String,
    pub holds: bool,
    /// Largest `observed - bound`; negative when the bound holds with room.
    pub max_violation: f64,
    pub first_violation_time: Option<f64>,
    pub tolerance: f64,
    /// `bound - observed` per checked sample.
    pub margin: Vec<f64>,
    /// Sample times matching `margin`.
    pub margin_times: Vec<f64>,
}

impl BoundVerdict {
    fn from_margins(check: &str, tolerance: f64, times: Vec<f64>, margin: Vec<f64>) -> Self {
        let max_violation = margin.iter().map(|m| -m).fold(f64::NEG_INFINITY, f64::max);
        let max_violation = if margin.is_empty() { 0.0 } else { max_violation };
        let first_violation_time = margin
            .iter()
            .position(|m| -m > tolerance || m.is_nan())
            .map(|i| times[i]);
        Self {
            check: check.to_string(),
            holds: first_violation_time.is_none(),
            max_violation,
            first_violation_time,
            tolerance,
            margin,
            margin_times: times,
        }
    }

    pub fn entry(&self) -> VerdictEntry {
        VerdictEntry {
            check_name: self.check.clone(),
            holds: self.holds,
            max_violation: self.max_violation,
            first_violation_time: self.first_violation_time,
            tolerance: self.tolerance,
            samples: self.margin.len(),
            note: None,
        }
    }
}

/// `q <= |u| + |w| <= sqrt(2) |z| <= sqrt(2) max(sqrt n, sqrt k) q`.
pub fn check_g2_sandwich(metrics: &MetricSeries, n: usize, k: usize) -> BoundVerdict {
    let s2 = std::f64::consts::SQRT_2;
    let top = s2 * (n.max(k) as f64).sqrt();
    let margin = (0..metrics.len())
        .map(|i| {
            let uw = metrics.u_norm[i] + metrics.w_norm[i];
            let z = s2 * metrics.z_norm[i];
            (uw - metrics.q[i])
                .min(z - uw)
                .min(top * metrics.q[i] - z)
        })
        .collect();
    BoundVerdict::from_margins("g2", SANDWICH_TOL, metrics.times.clone(), margin)
}

/// Slope constant of the distance-rate tolerance: twice the largest second
/// divided difference of `dist` and of `q` over smooth sample triples. A
/// triple is smooth when no point of `breaks` lies strictly inside it, the
/// farthest follower is the same at all three samples and the distance stays
/// above `1e-8`; the remaining triples straddle kinks whose one-sided slopes
/// are each bounded and would only inflate the constant.
pub fn dini_slack_constant(metrics: &MetricSeries, breaks: &[f64]) -> f64 {
    let t = &metrics.times;
    let argmax = |i: usize| {
        metrics.psi[i]
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, _)| j)
    };
    let mut c = 0.0f64;
    for i in 1..t.len().saturating_sub(1) {
        let (h1, h2) = (t[i] - t[i - 1], t[i + 1] - t[i]);
        if h1 <= 0.0 || h2 <= 0.0 {
            continue;
        }
        if breaks.iter().any(|&b| b > t[i - 1] + TIME_EPS && b < t[i + 1] - TIME_EPS) {
            continue;
        }
        let second = |s: &[f64]| 2.0 * ((s[i + 1] - s[i]) / h2 - (s[i] - s[i - 1]) / h1) / (h1 + h2);
        c = c.max(second(&metrics.q).abs());
        let smooth_dist = metrics.dist[i - 1..=i + 1].iter().all(|&d| d > 1e-8)
            && !metrics.psi.is_empty()
            && argmax(i - 1) == argmax(i)
            && argmax(i) == argmax(i + 1);
        if smooth_dist {
            c = c.max(second(&metrics.dist).abs());
        }
    }
    2.0 * c
}

/// Forward-difference rate of `dist` against the larger endpoint value of `q`,
/// with slack `C h + DINI_FLOOR`; `breaks` are the switching instants.
pub fn check_dini_bound(metrics: &MetricSeries, breaks: &[f64]) -> BoundVerdict {
    let c = dini_slack_constant(metrics, breaks);
    let (mut times, mut margin) = (Vec::new(), Vec::new());
    for i in 0..metrics.len().saturating_sub(1) {
        let h = metrics.times[i + 1] - metrics.times[i];
        if h <= 0.0 {
            continue;
        }
        let rate = (metrics.dist[i + 1] - metrics.dist[i]) / h;
        let bound = metrics.q[i].max(metrics.q[i + 1]) + c * h + DINI_FLOOR;
        times.push(metrics.times[i]);
        margin.push(bound - rate);
    }
    let mut v = BoundVerdict::from_margins("dini", 0.0, times, margin);
    v.tolerance = c;
    v
}

/// Moving the hull changes a follower's distance by at most the integral of
/// the leader speed: `| |x_i(t)|_{L(y(t))} - |x_i(t)|_{L(y(t0))} | <= int r`.
pub fn check_hull_drift(traj: &Trajectory, metrics: &MetricSeries, t0: f64) -> Result<BoundVerdict> {
    let i0 = metrics
        .index_at(t0)
        .ok_or_else(|| invalid(format!("t0 = {t0} is not a sample instant")))?;
    let frozen = traj.y[i0].hull()?;
    let int_r = metrics.running_integral(&metrics.r);
    let (mut times, mut margin) = (Vec::new(), Vec::new());
    for j in i0..traj.len() {
        let hull = traj.y[j].hull()?;
        let budget = int_r[j] - int_r[i0];
        let mut worst = f64::INFINITY;
        for xi in traj.x[j].rows() {
            let gap = (distance(xi, &hull)? - distance(xi, &frozen)?).abs();
            worst = worst.min(budget - gap);
        }
        times.push(traj.times[j]);
        margin.push(worst);
    }
    Ok(BoundVerdict::from_margins("lemma7", ENVELOPE_TOL, times, margin))
}

fn require_ujlc(spec: &SystemSpec, window: f64) -> Result<()> {
    let ok = spec.schedule().classify_ujlc(window).unwrap_or(false);
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "schedule is not uniformly jointly connected with window {window}"
        )))
    }
}

/// `dist(t) <= beta(dist(0), t) + gamma(z_sup)` at every sample.
pub fn verify_siss(
    metrics: &MetricSeries,
    spec: &SystemSpec,
    bundle: &CertificateBundle,
    envelope: &SissEnvelope,
    z_sup: f64,
) -> Result<BoundVerdict> {
    require_ujlc(spec, bundle.params.window)?;
    let d0 = metrics.dist[0];
    let margin = metrics
        .times
        .iter()
        .zip(&metrics.dist)
        .map(|(&t, &d)| envelope.bound(d0, t, z_sup) - d)
        .collect();
    Ok(BoundVerdict::from_margins("siss", ENVELOPE_TOL, metrics.times.clone(), margin))
}

/// `dist(t) <= beta(dist(0), t) + int_0^t gamma(|z|)` at every sample, plus
/// the sharper discrete bound at multiples of `T*`.
pub fn verify_siiss_ujlc(
    metrics: &MetricSeries,
    spec: &SystemSpec,
    bundle: &CertificateBundle,
    envelope: &SiissUjlc,
) -> Result<(BoundVerdict, BoundVerdict)> {
    require_ujlc(spec, bundle.params.window)?;
    let d0 = metrics.dist[0];
    let int_z = metrics.running_integral(&metrics.z_norm);
    let margin = (0..metrics.len())
        .map(|i| envelope.beta(d0, metrics.times[i]) + envelope.gamma(int_z[i]) - metrics.dist[i])
        .collect();
    let cont = BoundVerdict::from_margins("siiss", ENVELOPE_TOL, metrics.times.clone(), margin);

    let (mut times, mut margin) = (Vec::new(), Vec::new());
    let mut integrals = Vec::new();
    let mut prev = 0;
    for kk in 1.. {
        let t = kk as f64 * envelope.t_star;
        let Some(j) = metrics.index_at(t).or_else(|| first_at_or_after(metrics, t)) else {
            break;
        };
        integrals.push(int_z[j] - int_z[prev]);
        prev = j;
        times.push(metrics.times[j]);
        margin.push(envelope.discrete_bound(d0, &integrals) - metrics.dist[j]);
    }
    let discrete = BoundVerdict::from_margins("siiss_discrete", ENVELOPE_TOL, times, margin);
    Ok((cont, discrete))
}

/// The recursion at the marks `T_{K+1}` of a jointly connected schedule with
/// bidirectional pieces or an acyclic union.
pub fn verify_jlc_recursion(
    metrics: &MetricSeries,
    spec: &SystemSpec,
    recursion: &JlcRecursion,
) -> Result<BoundVerdict> {
    let s = spec.schedule();
    if !s.classify_jlc() || !(s.is_bidirectional() || s.union_is_acyclic()) {
        return Err(Error::Precondition(
            "schedule is not jointly connected with bidirectional pieces or an acyclic union".into(),
        ));
    }
    let d0 = metrics.dist[0];
    let int_z = metrics.running_integral(&metrics.z_norm);
    let idx = recursion
        .marks
        .iter()
        .map(|&t| {
            metrics
                .index_at(t)
                .ok_or_else(|| Error::Precondition(format!("mark {t} is not a sample instant")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut times, mut margin) = (Vec::new(), Vec::new());
    let mut integrals = Vec::new();
    for w in idx.windows(2) {
        integrals.push(int_z[w[1]] - int_z[w[0]]);
        times.push(metrics.times[w[1]]);
        margin.push(recursion.discrete_bound(d0, &integrals) - metrics.dist[w[1]]);
    }
    Ok(BoundVerdict::from_margins("siiss_jlc", ENVELOPE_TOL, times, margin))
}

fn first_at_or_after(metrics: &MetricSeries, t: f64) -> Option<usize> {
    let i = metrics.times.partition_point(|&s| s < t - TIME_EPS);
    (i < metrics.len()).then_some(i)
}

/// Per-window contraction with no inputs: `dist(t + T*) <= eta* dist(t)`,
/// comparing against the first sample at or after `t + T*`. Also returns the
/// largest observed ratio over samples with a nonzero distance.
pub fn check_contraction(
    metrics: &MetricSeries,
    spec: &SystemSpec,
    bundle: &CertificateBundle,
) -> Result<(BoundVerdict, f64)> {
    require_ujlc(spec, bundle.params.window)?;
    if metrics.z_sup() > 0.0 {
        return Err(Error::Precondition("contraction check needs zero inputs".into()));
    }
    let eta = bundle.eta_star.value();
    let ts = bundle.t_star;
    let (mut times, mut margin) = (Vec::new(), Vec::new());
    let mut ratio = 0.0f64;
    let mut j = 0;
    for i in 0..metrics.len() {
        let target = metrics.times[i] + ts;
        while j < metrics.len() && metrics.times[j] < target - TIME_EPS {
            j += 1;
        }
        if j == metrics.len() {
            break;
        }
        times.push(metrics.times[i]);
        margin.push(eta * metrics.dist[i] - metrics.dist[j]);
        if metrics.dist[i] > 1e-12 {
            ratio = ratio.max(metrics.dist[j] / metrics.dist[i]);
        }
    }
    Ok((
        BoundVerdict::from_margins("contraction", ENVELOPE_TOL, times, margin),
        ratio,
    ))
}

/// Whether `dist` stays below `eps` from some sample to the end, and the
/// first such sample time.
pub fn detect_set_tracking(metrics: &MetricSeries, eps: f64) -> (bool, Option<f64>) {
    let last_above = metrics.dist.iter().rposition(|&d| !(d < eps));
    match last_above {
        None if metrics.is_empty() => (false, None),
        None => (true, Some(metrics.times[0])),
        Some(i) if i + 1 < metrics.len() => (true, Some(metrics.times[i + 1])),
        Some(_) => (false, None),
    }
}

/// One line of the verdict report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub check_name: String,
    pub holds: bool,
    pub max_violation: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_violation_time: Option<f64>,
    pub tolerance: f64,
    pub samples: usize,
    /// Why the check could not be evaluated as a bound, when it could not.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerdictReport {
    #[serde(default)]
    pub verdicts: Vec<VerdictEntry>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tracking_entry_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub contraction_ratio: Option<f64>,
}

impl VerdictReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("verdicts serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }
}
