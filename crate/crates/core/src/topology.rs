//! Switching directed topologies over followers and leaders.
//!
//! Arcs point in the direction of information flow: an arc `j -> i` means
//! agent `i` sees agent `j`. Leaders never receive arcs. A schedule is a
//! piecewise-constant graph signal on `[0, horizon)` with a minimum dwell
//! time between switches.
//!
//! Infinite-horizon notions are evaluated over the simulated window: a
//! schedule is treated as jointly connected when the union from every
//! switching instant in the first half of the horizon to the horizon is
//! leader-connected, and a window length `T <= horizon / 2` is uniform when
//! every `[t, t + T)` that fits inside the horizon has a leader-connected
//! union. The half-horizon cut keeps "uniform implies joint" true on finite
//! data: the last pieces of a periodic schedule need not be connected alone.
//! Unions only change when a boundary enters or leaves the window, so
//! checking window starts at switching instants is exact.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Slack used when comparing switching instants.
pub const TIME_EPS: f64 = 1e-9;

/// An agent, indexed from zero within its kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentId {
    Leader(usize),
    Follower(usize),
}

impl AgentId {
    pub fn index(self) -> usize {
        match self {
            AgentId::Leader(i) | AgentId::Follower(i) => i,
        }
    }

    pub fn is_leader(self) -> bool {
        matches!(self, AgentId::Leader(_))
    }

    fn kind_name(self) -> &'static str {
        match self {
            AgentId::Leader(_) => "leader",
            AgentId::Follower(_) => "follower",
        }
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind_name(), self.index() + 1)
    }
}

/// Directed graph over `n` followers and `k` leaders.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    k: usize,
    arcs: BTreeSet<(AgentId, AgentId)>,
}

impl Digraph {
    pub fn empty(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            arcs: BTreeSet::new(),
        }
    }

    pub fn with_arcs(
        n: usize,
        k: usize,
        arcs: impl IntoIterator<Item = (AgentId, AgentId)>,
    ) -> Result<Self> {
        let mut g = Self::empty(n, k);
        for (from, to) in arcs {
            g.add_arc(from, to)?;
        }
        Ok(g)
    }

    /// Every leader feeds every follower.
    pub fn leader_fanout(n: usize, k: usize) -> Self {
        let arcs = (0..k)
            .flat_map(|l| (0..n).map(move |i| (AgentId::Leader(l), AgentId::Follower(i))))
            .collect();
        Self { n, k, arcs }
    }

    pub fn add_arc(&mut self, from: AgentId, to: AgentId) -> Result<()> {
        if to.is_leader() {
            return Err(invalid(format!("arc {from} -> {to} enters a leader")));
        }
        if from == to {
            return Err(invalid(format!("self-loop at {from}")));
        }
        for a in [from, to] {
            let bound = if a.is_leader() { self.k } else { self.n };
            if a.index() >= bound {
                return Err(invalid(format!("{a} out of range")));
            }
        }
        self.arcs.insert((from, to));
        Ok(())
    }

    pub fn followers(&self) -> usize {
        self.n
    }

    pub fn leaders(&self) -> usize {
        self.k
    }

    pub fn arcs(&self) -> impl Iterator<Item = (AgentId, AgentId)> + '_ {
        self.arcs.iter().copied()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn contains(&self, from: AgentId, to: AgentId) -> bool {
        self.arcs.contains(&(from, to))
    }

    pub fn union(&self, other: &Digraph) -> Digraph {
        debug_assert_eq!((self.n, self.k), (other.n, other.k));
        let mut g = self.clone();
        g.arcs.extend(other.arcs.iter().copied());
        g
    }

    /// For each follower, its follower neighbors and its leaders.
    pub fn in_lists(&self) -> InLists {
        let mut neighbors = vec![Vec::new(); self.n];
        let mut leaders = vec![Vec::new(); self.n];
        for &(from, to) in &self.arcs {
            let i = to.index();
            match from {
                AgentId::Follower(j) => neighbors[i].push(j),
                AgentId::Leader(j) => leaders[i].push(j),
            }
        }
        InLists { neighbors, leaders }
    }

    /// Followers reachable from at least one leader.
    pub fn reached_followers(&self) -> Vec<bool> {
        let out = self.out_lists();
        let mut seen = vec![false; self.n];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for (from, to) in self.arcs() {
            if from.is_leader() && !seen[to.index()] {
                seen[to.index()] = true;
                queue.push_back(to.index());
            }
        }
        while let Some(i) = queue.pop_front() {
            for &j in &out[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen
    }

    /// Every follower is reachable from some leader.
    pub fn is_l_connected(&self) -> bool {
        self.reached_followers().into_iter().all(|r| r)
    }

    /// Every follower-to-follower arc has its reverse.
    pub fn is_bidirectional(&self) -> bool {
        self.arcs.iter().all(|&(from, to)| match from {
            AgentId::Follower(_) => self.arcs.contains(&(to, from)),
            AgentId::Leader(_) => true,
        })
    }

    /// The subgraph induced on followers has no directed cycle.
    pub fn follower_subgraph_is_acyclic(&self) -> bool {
        let out = self.out_lists();
        let mut indegree = vec![0usize; self.n];
        for edges in &out {
            for &j in edges {
                indegree[j] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..self.n).filter(|&i| indegree[i] == 0).collect();
        let mut visited = 0;
        while let Some(i) = queue.pop_front() {
            visited += 1;
            for &j in &out[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        visited == self.n
    }

    /// Follower-to-follower adjacency, outgoing.
    fn out_lists(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for &(from, to) in &self.arcs {
            if let AgentId::Follower(i) = from {
                out[i].push(to.index());
            }
        }
        out
    }
}

/// Incoming adjacency of each follower.
#[derive(Debug, Clone, Default)]
pub struct InLists {
    pub neighbors: Vec<Vec<usize>>,
    pub leaders: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub graph: Digraph,
}

/// Piecewise-constant topology on `[0, horizon)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSchedule {
    pieces: Vec<Piece>,
    horizon: f64,
    dwell: f64,
}

impl SwitchingSchedule {
    pub fn new(pieces: Vec<Piece>, horizon: f64, dwell: f64) -> Result<Self> {
        if !(dwell > 0.0 && dwell.is_finite()) {
            return Err(invalid("dwell time must be positive"));
        }
        let first = pieces
            .first()
            .ok_or_else(|| invalid("schedule needs at least one piece"))?;
        if first.start != 0.0 {
            return Err(invalid("first piece must start at t = 0"));
        }
        let (n, k) = (first.graph.n, first.graph.k);
        for w in pieces.windows(2) {
            let gap = w[1].start - w[0].start;
            if gap <= 0.0 {
                return Err(invalid("piece start times must increase strictly"));
            }
            if gap < dwell - TIME_EPS {
                return Err(invalid(format!(
                    "switch at t = {} follows the previous one after {gap}, below the dwell time {dwell}",
                    w[1].start
                )));
            }
        }
        if pieces.iter().any(|p| (p.graph.n, p.graph.k) != (n, k)) {
            return Err(invalid("all pieces must share the same agent sets"));
        }
        let last = pieces.last().unwrap().start;
        if !(horizon > last) || !horizon.is_finite() {
            return Err(invalid("horizon must lie after the last switching instant"));
        }
        Ok(Self {
            pieces,
            horizon,
            dwell,
        })
    }

    pub fn constant(graph: Digraph, horizon: f64, dwell: f64) -> Result<Self> {
        Self::new(vec![Piece { start: 0.0, graph }], horizon, dwell)
    }

    /// Cycles through `graphs`, holding each for `piece_len`, until `horizon`.
    pub fn periodic(graphs: &[Digraph], piece_len: f64, horizon: f64, dwell: f64) -> Result<Self> {
        if graphs.is_empty() || !(piece_len > 0.0) {
            return Err(invalid("periodic schedule needs graphs and a positive piece length"));
        }
        let count = ((horizon / piece_len) - TIME_EPS).ceil().max(1.0) as usize;
        let pieces = (0..count)
            .map(|m| Piece {
                start: m as f64 * piece_len,
                graph: graphs[m % graphs.len()].clone(),
            })
            .collect();
        Self::new(pieces, horizon, dwell)
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dwell(&self) -> f64 {
        self.dwell
    }

    pub fn followers(&self) -> usize {
        self.pieces[0].graph.n
    }

    pub fn leaders(&self) -> usize {
        self.pieces[0].graph.k
    }

    /// Switching instants, including `0`.
    pub fn boundaries(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().map(|p| p.start)
    }

    pub fn piece_end(&self, i: usize) -> f64 {
        self.pieces
            .get(i + 1)
            .map(|p| p.start)
            .unwrap_or(self.horizon)
    }

    /// Index of the piece active at `t`; instants within `TIME_EPS` of a
    /// switch belong to the new piece.
    pub fn piece_index_at(&self, t: f64) -> usize {
        self.pieces
            .partition_point(|p| p.start <= t + TIME_EPS)
            .saturating_sub(1)
    }

    pub fn graph_at(&self, t: f64) -> &Digraph {
        &self.pieces[self.piece_index_at(t)].graph
    }

    /// Pieces intersecting `[t1, t2)`.
    fn pieces_in(&self, t1: f64, t2: f64) -> impl Iterator<Item = (usize, &Piece)> + '_ {
        self.pieces
            .iter()
            .enumerate()
            .filter(move |(i, p)| p.start < t2 - TIME_EPS && self.piece_end(*i) > t1 + TIME_EPS)
    }

    /// Union of all graphs active during `[t1, t2)`.
    pub fn union_graph(&self, t1: f64, t2: f64) -> Result<Digraph> {
        if !(t1 >= -TIME_EPS && t1 < t2 && t2 <= self.horizon + TIME_EPS) {
            return Err(invalid(format!(
                "interval [{t1}, {t2}) is not inside [0, {}]",
                self.horizon
            )));
        }
        let mut g = Digraph::empty(self.followers(), self.leaders());
        for (_, p) in self.pieces_in(t1, t2) {
            g.arcs.extend(p.graph.arcs.iter().copied());
        }
        Ok(g)
    }

    /// Every window `[t, t + T)` inside the horizon has a leader-connected union.
    pub fn classify_ujlc(&self, window: f64) -> Result<bool> {
        if !(window > 0.0) {
            return Err(invalid("window length must be positive"));
        }
        if window > self.horizon / 2.0 + TIME_EPS {
            return Err(invalid(format!(
                "window {window} does not fit twice inside horizon {}",
                self.horizon
            )));
        }
        for b in self.boundaries() {
            if b + window > self.horizon + TIME_EPS {
                break;
            }
            if !self.union_graph(b, b + window)?.is_l_connected() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The union from every switching instant up to `horizon / 2` to the
    /// horizon is leader-connected.
    pub fn classify_jlc(&self) -> bool {
        let last = self.horizon / 2.0 + TIME_EPS;
        self.boundaries().take_while(|&b| b <= last).all(|b| {
            self.union_graph(b, self.horizon)
                .map(|g| g.is_l_connected())
                .unwrap_or(false)
        })
    }

    /// Smallest window for which [`classify_ujlc`](Self::classify_ujlc) holds,
    /// among spans of whole pieces and the cap `min(max_window, horizon / 2)`.
    pub fn ujlc_witness(&self, max_window: f64) -> Option<f64> {
        let cap = max_window.min(self.horizon / 2.0);
        let mut candidates: Vec<f64> = if cap > 0.0 { vec![cap] } else { Vec::new() };
        for (i, p) in self.pieces.iter().enumerate() {
            for j in i..self.pieces.len() {
                let span = self.piece_end(j) - p.start;
                if span <= cap + TIME_EPS {
                    candidates.push(span);
                }
            }
        }
        candidates.sort_by(f64::total_cmp);
        candidates.dedup_by(|a, b| (*a - *b).abs() <= TIME_EPS);
        // Window validity is monotone in the length.
        let first_ok = candidates.partition_point(|&t| !self.classify_ujlc(t).unwrap_or(false));
        candidates.get(first_ok).copied()
    }

    /// Every piece has a bidirectional follower subgraph.
    pub fn is_bidirectional(&self) -> bool {
        self.pieces.iter().all(|p| p.graph.is_bidirectional())
    }

    /// The follower subgraph of the union over the whole horizon is acyclic.
    pub fn union_is_acyclic(&self) -> bool {
        self.union_graph(0.0, self.horizon)
            .map(|g| g.follower_subgraph_is_acyclic())
            .unwrap_or(false)
    }

    pub fn report(&self, max_window: f64) -> ConnectivityReport {
        let is_jlc_on_horizon = self.classify_jlc();
        let ujlc_witness = if is_jlc_on_horizon {
            self.ujlc_witness(max_window)
        } else {
            None
        };
        ConnectivityReport {
            l_connected_per_piece: self.pieces.iter().map(|p| p.graph.is_l_connected()).collect(),
            is_jlc_on_horizon,
            ujlc_witness,
            is_bidirectional: self.is_bidirectional(),
            is_union_acyclic: self.union_is_acyclic(),
        }
    }

    /// Maximal runs of each arc over consecutive pieces, clipped to `[t1, t2)`.
    fn arc_runs(&self, t1: f64, t2: f64) -> BTreeMap<(AgentId, AgentId), Vec<(f64, f64)>> {
        let mut runs: BTreeMap<(AgentId, AgentId), Vec<(f64, f64)>> = BTreeMap::new();
        let mut prev: Option<usize> = None;
        for (i, p) in self.pieces_in(t1, t2) {
            let lo = p.start.max(t1);
            let hi = self.piece_end(i).min(t2);
            for &arc in &p.graph.arcs {
                let list = runs.entry(arc).or_default();
                let continues = prev == Some(i.wrapping_sub(1))
                    && list.last().is_some_and(|r| (r.1 - lo).abs() <= TIME_EPS);
                if continues {
                    list.last_mut().unwrap().1 = hi;
                } else {
                    list.push((lo, hi));
                }
            }
            prev = Some(i);
        }
        runs
    }

    /// For each follower, a leader-rooted path inside `[t, t + T + 2 dwell)`
    /// whose every arc stays present for at least one dwell time.
    pub fn window_paths(&self, t: f64, window: f64) -> Result<BTreeMap<usize, WindowPath>> {
        let span = window + 2.0 * self.dwell;
        if !(t >= 0.0 && window > 0.0) || t + span > self.horizon + TIME_EPS {
            return Err(Error::Precondition(format!(
                "window [{t}, {}) exceeds horizon {}",
                t + span,
                self.horizon
            )));
        }
        // Longest qualifying run per arc.
        let mut held: BTreeMap<(AgentId, AgentId), (f64, f64)> = BTreeMap::new();
        for (arc, list) in self.arc_runs(t, t + span) {
            if let Some(&run) = list
                .iter()
                .filter(|r| r.1 - r.0 >= self.dwell - TIME_EPS)
                .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
            {
                held.insert(arc, run);
            }
        }
        let n = self.followers();
        let mut parent: Vec<Option<(AgentId, (f64, f64))>> = vec![None; n];
        let mut queue = VecDeque::new();
        for (&(from, to), &run) in &held {
            if from.is_leader() && parent[to.index()].is_none() {
                parent[to.index()] = Some((from, run));
                queue.push_back(to.index());
            }
        }
        while let Some(i) = queue.pop_front() {
            for (&(from, to), &run) in &held {
                if from == AgentId::Follower(i) && parent[to.index()].is_none() {
                    parent[to.index()] = Some((from, run));
                    queue.push_back(to.index());
                }
            }
        }
        let mut paths = BTreeMap::new();
        for i in 0..n {
            let mut nodes = vec![AgentId::Follower(i)];
            let mut intervals = Vec::new();
            let mut cur = i;
            loop {
                let Some((from, run)) = parent[cur] else {
                    return Err(Error::CertificateFailure(format!(
                        "no leader reaches {} through arcs held for the dwell time in [{t}, {})",
                        AgentId::Follower(i),
                        t + span
                    )));
                };
                nodes.push(from);
                intervals.push(run);
                match from {
                    AgentId::Leader(_) => break,
                    AgentId::Follower(j) => cur = j,
                }
            }
            nodes.reverse();
            intervals.reverse();
            paths.insert(i, WindowPath { nodes, intervals });
        }
        Ok(paths)
    }

    /// Consecutive intervals `[T_i, T_{i+1})`, each split into `sub_windows`
    /// leader-connected sub-windows made of whole pieces that last at least
    /// one dwell time. Returned as the list of sub-window boundaries of each
    /// interval; only complete intervals are returned.
    pub fn jlc_marks(&self, sub_windows: usize) -> Vec<Vec<f64>> {
        let mut marks = Vec::new();
        let mut cur_piece = 0;
        'outer: loop {
            let mut interval = vec![self.pieces.get(cur_piece).map(|p| p.start).unwrap_or(self.horizon)];
            for _ in 0..sub_windows {
                let mut union = Digraph::empty(self.followers(), self.leaders());
                let mut end_piece = None;
                for j in cur_piece..self.pieces.len() {
                    if self.piece_end(j) - self.pieces[j].start < self.dwell - TIME_EPS {
                        break;
                    }
                    union.arcs.extend(self.pieces[j].graph.arcs.iter().copied());
                    if union.is_l_connected() {
                        end_piece = Some(j);
                        break;
                    }
                }
                let Some(j) = end_piece else { break 'outer };
                cur_piece = j + 1;
                interval.push(self.piece_end(j));
            }
            marks.push(interval);
        }
        marks
    }
}

/// A leader-to-follower path and the interval each arc is held.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPath {
    /// Leader first, target follower last.
    pub nodes: Vec<AgentId>,
    /// `intervals[m]` covers the arc `nodes[m] -> nodes[m + 1]`.
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub l_connected_per_piece: Vec<bool>,
    pub is_jlc_on_horizon: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ujlc_witness: Option<f64>,
    pub is_bidirectional: bool,
    pub is_union_acyclic: bool,
}

/// Layers of followers such that arcs entering a layer only come from leaders
/// or earlier layers. Requires an acyclic follower subgraph and a
/// leader-connected graph.
pub fn acyclic_partition(g: &Digraph) -> Result<Vec<Vec<usize>>> {
    if !g.follower_subgraph_is_acyclic() {
        return Err(invalid("follower subgraph has a cycle"));
    }
    if !g.is_l_connected() {
        return Err(invalid("graph is not leader-connected"));
    }
    let lists = g.in_lists();
    let mut placed = vec![false; g.n];
    let mut layers = Vec::new();
    let mut remaining = g.n;
    while remaining > 0 {
        let layer: Vec<usize> = (0..g.n)
            .filter(|&i| !placed[i] && lists.neighbors[i].iter().all(|&j| placed[j]))
            .collect();
        debug_assert!(!layer.is_empty());
        for &i in &layer {
            placed[i] = true;
        }
        remaining -= layer.len();
        layers.push(layer);
    }
    Ok(layers)
}

// Structured-text form.

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct ScheduleDoc {
    pub followers: usize,
    pub leaders: usize,
    pub dwell: f64,
    pub horizon: f64,
    pub pieces: Vec<PieceDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
pub(crate) struct PieceDoc {
    pub start_time: f64,
    pub arcs: Vec<(String, usize, String, usize)>,
}

fn agent_from_doc(kind: &str, idx: usize) -> Result<AgentId> {
    if idx == 0 {
        return Err(Error::Parse("agent indices start at 1".into()));
    }
    match kind {
        "leader" => Ok(AgentId::Leader(idx - 1)),
        "follower" => Ok(AgentId::Follower(idx - 1)),
        other => Err(Error::Parse(format!("unknown agent kind `{other}`"))),
    }
}

impl From<&SwitchingSchedule> for ScheduleDoc {
    fn from(s: &SwitchingSchedule) -> Self {
        ScheduleDoc {
            followers: s.followers(),
            leaders: s.leaders(),
            dwell: s.dwell,
            horizon: s.horizon,
            pieces: s
                .pieces
                .iter()
                .map(|p| PieceDoc {
                    start_time: p.start,
                    arcs: p
                        .graph
                        .arcs()
                        .map(|(a, b)| {
                            (
                                a.kind_name().to_string(),
                                a.index() + 1,
                                b.kind_name().to_string(),
                                b.index() + 1,
                            )
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<ScheduleDoc> for SwitchingSchedule {
    type Error = Error;

    fn try_from(doc: ScheduleDoc) -> Result<Self> {
        let pieces = doc
            .pieces
            .into_iter()
            .map(|p| {
                let arcs = p
                    .arcs
                    .iter()
                    .map(|(fk, fi, tk, ti)| Ok((agent_from_doc(fk, *fi)?, agent_from_doc(tk, *ti)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Piece {
                    start: p.start_time,
                    graph: Digraph::with_arcs(doc.followers, doc.leaders, arcs)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SwitchingSchedule::new(pieces, doc.horizon, doc.dwell)
    }
}

impl SwitchingSchedule {
    pub fn to_toml(&self) -> String {
        toml::to_string(&ScheduleDoc::from(self)).expect("schedule serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: ScheduleDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.try_into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use AgentId::{Follower as F, Leader as L};

    fn graph(n: usize, k: usize, arcs: &[(AgentId, AgentId)]) -> Digraph {
        Digraph::with_arcs(n, k, arcs.iter().copied()).unwrap()
    }

    #[test]
    fn rejects_arcs_into_leaders_and_loops() {
        let mut g = Digraph::empty(2, 1);
        assert!(g.add_arc(F(0), L(0)).is_err());
        assert!(g.add_arc(F(1), F(1)).is_err());
        assert!(g.add_arc(L(1), F(0)).is_err());
        assert!(g.add_arc(L(0), F(0)).is_ok());
    }

    #[test]
    fn l_connectivity_basics() {
        assert!(Digraph::leader_fanout(3, 2).is_l_connected());
        let g = graph(3, 1, &[(L(0), F(0)), (F(0), F(1))]);
        assert!(!g.is_l_connected());
        let g = graph(3, 1, &[(L(0), F(0)), (F(0), F(1)), (F(1), F(2))]);
        assert!(g.is_l_connected());
    }

    #[test]
    fn union_of_single_piece_is_that_piece() {
        let g = graph(2, 1, &[(L(0), F(0)), (F(0), F(1))]);
        let s = SwitchingSchedule::constant(g.clone(), 10.0, 1.0).unwrap();
        assert_eq!(s.union_graph(2.0, 3.5).unwrap(), g);
        assert!(s.union_graph(3.0, 11.0).is_err());
        assert!(s.union_graph(3.0, 3.0).is_err());
    }

    #[test]
    fn union_of_two_pieces() {
        let a = graph(2, 1, &[(L(0), F(0))]);
        let b = graph(2, 1, &[(F(0), F(1))]);
        let s = SwitchingSchedule::periodic(&[a.clone(), b.clone()], 1.0, 2.0, 1.0).unwrap();
        assert_eq!(s.union_graph(0.0, 2.0).unwrap(), a.union(&b));
        assert_eq!(s.union_graph(0.0, 1.0).unwrap(), a);
        assert_eq!(s.union_graph(1.0, 2.0).unwrap(), b);
    }

    #[test]
    fn dwell_time_is_enforced() {
        let g = Digraph::empty(1, 1);
        let pieces = vec![
            Piece {
                start: 0.0,
                graph: g.clone(),
            },
            Piece {
                start: 0.5,
                graph: g,
            },
        ];
        assert!(SwitchingSchedule::new(pieces, 2.0, 1.0).is_err());
    }

    #[test]
    fn periodic_two_graph_windows() {
        // Period 2 with pieces of length 1: neither graph alone is L-connected.
        let a = graph(2, 1, &[(L(0), F(0))]);
        let b = graph(2, 1, &[(F(0), F(1))]);
        let s = SwitchingSchedule::periodic(&[a, b], 1.0, 20.0, 1.0).unwrap();
        assert!(s.classify_ujlc(4.0).unwrap());
        assert!(s.classify_ujlc(2.0).unwrap());
        assert!(!s.classify_ujlc(0.5).unwrap());
        assert!(!s.classify_ujlc(1.0).unwrap());
        assert!(s.classify_jlc());
        assert_eq!(s.ujlc_witness(10.0), Some(2.0));
        assert!(s.classify_ujlc(10.0).unwrap());
        assert!(s.classify_ujlc(10.5).is_err());
    }

    #[test]
    fn final_disconnection_breaks_jlc() {
        let a = Digraph::leader_fanout(2, 1);
        let e = Digraph::empty(2, 1);
        let pieces = vec![
            Piece {
                start: 0.0,
                graph: a,
            },
            Piece {
                start: 5.0,
                graph: e,
            },
        ];
        let s = SwitchingSchedule::new(pieces, 10.0, 1.0).unwrap();
        assert!(!s.classify_jlc());
        assert!(!s.report(5.0).is_jlc_on_horizon);
    }

    #[test]
    fn partition_of_chain() {
        let g = graph(3, 1, &[(L(0), F(0)), (F(0), F(1)), (F(1), F(2))]);
        assert_eq!(acyclic_partition(&g).unwrap(), vec![vec![0], vec![1], vec![2]]);
        let g = Digraph::leader_fanout(4, 2);
        assert_eq!(acyclic_partition(&g).unwrap(), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn partition_errors() {
        let cyc = graph(2, 1, &[(L(0), F(0)), (F(0), F(1)), (F(1), F(0))]);
        assert!(acyclic_partition(&cyc).is_err());
        let disc = graph(2, 1, &[(L(0), F(0))]);
        assert!(acyclic_partition(&disc).is_err());
    }

    #[test]
    fn bidirectional_ignores_weights_and_leader_arcs() {
        let g = graph(2, 1, &[(L(0), F(0)), (F(0), F(1)), (F(1), F(0))]);
        assert!(g.is_bidirectional());
        let g = graph(2, 1, &[(L(0), F(0)), (F(0), F(1))]);
        assert!(!g.is_bidirectional());
    }

    #[test]
    fn window_paths_direct_arcs() {
        let s = SwitchingSchedule::constant(Digraph::leader_fanout(3, 2), 20.0, 1.0).unwrap();
        let paths = s.window_paths(0.0, 2.0).unwrap();
        for (i, p) in &paths {
            assert_eq!(p.nodes, vec![L(0), F(*i)]);
            assert_eq!(p.intervals, vec![(0.0, 4.0)]);
        }
    }

    #[test]
    fn window_paths_relay() {
        let a = graph(2, 1, &[(L(0), F(0))]);
        let b = graph(2, 1, &[(F(0), F(1))]);
        let s = SwitchingSchedule::periodic(&[a, b], 1.0, 20.0, 1.0).unwrap();
        let paths = s.window_paths(0.0, 2.0).unwrap();
        assert_eq!(paths[&1].nodes, vec![L(0), F(0), F(1)]);
        for (lo, hi) in &paths[&1].intervals {
            assert!(hi - lo >= 1.0 - TIME_EPS);
        }
        assert!(s.window_paths(17.0, 2.0).is_err());
    }

    #[test]
    fn window_paths_report_unreached_follower() {
        let s = SwitchingSchedule::constant(
            graph(2, 1, &[(L(0), F(0))]),
            20.0,
            1.0,
        )
        .unwrap();
        let err = s.window_paths(0.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("follower 2"), "{err}");
    }

    #[test]
    fn jlc_marks_are_leader_connected_subwindows() {
        let a = graph(2, 1, &[(L(0), F(0))]);
        let b = graph(2, 1, &[(F(0), F(1))]);
        let s = SwitchingSchedule::periodic(&[a, b], 1.0, 9.0, 1.0).unwrap();
        let marks = s.jlc_marks(2);
        assert_eq!(marks, vec![vec![0.0, 2.0, 4.0], vec![4.0, 6.0, 8.0]]);
    }

    #[test]
    fn schedule_text_round_trip() {
        let a = graph(3, 2, &[(L(1), F(0)), (F(0), F(2))]);
        let b = graph(3, 2, &[(L(0), F(1)), (F(1), F(2)), (F(2), F(1))]);
        let s = SwitchingSchedule::periodic(&[a, b], 0.75, 6.0, 0.5).unwrap();
        let text = s.to_toml();
        assert!(text.contains("start_time"));
        assert_eq!(SwitchingSchedule::from_toml(&text).unwrap(), s);
        assert!(SwitchingSchedule::from_toml("followers = 1").is_err());
    }
}
