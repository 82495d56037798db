//! Reference implementations that share no code with the library: exhaustive
//! face enumeration and grid search for projections, transitive closure for
//! reachability, a direct arc-by-arc right-hand side and a partition checker.
#![allow(dead_code)]

use hullswarm::dynamics::Points;
use hullswarm::topology::{AgentId, Digraph};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn combo(verts: &[Vec<f64>], w: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; verts[0].len()];
    for (v, &wi) in verts.iter().zip(w) {
        for (o, c) in p.iter_mut().zip(v) {
            *o += wi * c;
        }
    }
    p
}

/// Solves `a z = rhs` by Gaussian elimination; `None` when a pivot vanishes.
fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let m = rhs.len();
    let scale = a.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    for c in 0..m {
        let p = (c..m).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-11 * scale {
            return None;
        }
        a.swap(c, p);
        rhs.swap(c, p);
        for r in c + 1..m {
            let f = a[r][c] / a[c][c];
            for cc in c..m {
                a[r][cc] -= f * a[c][cc];
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut z = vec![0.0; m];
    for c in (0..m).rev() {
        let s: f64 = (c + 1..m).map(|cc| a[c][cc] * z[cc]).sum();
        z[c] = (rhs[c] - s) / a[c][c];
    }
    Some(z)
}

/// Nearest point by enumerating every vertex subset, projecting onto its
/// affine hull and keeping feasible barycentric solutions.
pub fn face_projection(x: &[f64], verts: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let k = verts.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let base = &verts[idx[0]];
        let dirs: Vec<Vec<f64>> = idx[1..]
            .iter()
            .map(|&i| verts[i].iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        let m = dirs.len();
        let alpha = if m == 0 {
            Vec::new()
        } else {
            let g = (0..m)
                .map(|i| (0..m).map(|j| dirs[i].iter().zip(&dirs[j]).map(|(a, b)| a * b).sum()).collect())
                .collect();
            let r = (0..m)
                .map(|i| dirs[i].iter().zip(x).zip(base).map(|((d, xv), b)| d * (xv - b)).sum())
                .collect();
            match solve(g, r) {
                Some(a) => a,
                None => continue,
            }
        };
        let w0 = 1.0 - alpha.iter().sum::<f64>();
        if w0 < -1e-10 || alpha.iter().any(|&a| a < -1e-10) {
            continue;
        }
        let mut p = base.clone();
        for (d, a) in dirs.iter().zip(&alpha) {
            for (o, c) in p.iter_mut().zip(d) {
                *o += a * c;
            }
        }
        let dist = sq(x, &p).sqrt();
        if best.as_ref().is_none_or(|b| dist < b.1) {
            best = Some((p, dist));
        }
    }
    best.expect("singletons are always feasible")
}

fn compositions(total: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        cur.push(total);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for i in 0..=total {
        cur.push(i);
        compositions(total - i, parts - 1, cur, out);
        cur.pop();
    }
}

/// Distance by brute force over barycentric weights: a full grid with step
/// 1/20, then a lattice search around the best point with the step halved
/// whenever no neighbour improves, down to 1e-9.
pub fn grid_distance(x: &[f64], verts: &[Vec<f64>]) -> f64 {
    let k = verts.len();
    let eval = |w: &[f64]| sq(x, &combo(verts, w));
    let mut pts = Vec::new();
    compositions(20, k, &mut Vec::new(), &mut pts);
    let (mut best, mut best_val) = (vec![1.0 / k as f64; k], f64::INFINITY);
    for c in pts {
        let w: Vec<f64> = c.iter().map(|&v| v as f64 / 20.0).collect();
        let v = eval(&w);
        if v < best_val {
            best_val = v;
            best = w;
        }
    }
    if k == 1 {
        return best_val.sqrt();
    }
    let free = k - 1;
    let offsets: Vec<Vec<i32>> = (0..5i32.pow(free as u32))
        .map(|mut c| {
            (0..free)
                .map(|_| {
                    let o = c % 5 - 2;
                    c /= 5;
                    o
                })
                .collect()
        })
        .collect();
    let mut h = 1.0 / 40.0;
    while h > 1e-9 {
        let mut moved = false;
        let base = best.clone();
        for off in &offsets {
            let mut w = base.clone();
            for (wi, &o) in w.iter_mut().zip(off) {
                *wi += h * o as f64;
            }
            w[free] = 1.0 - w[..free].iter().sum::<f64>();
            if w.iter().any(|&v| v < 0.0) {
                continue;
            }
            let v = eval(&w);
            if v < best_val - 1e-300 {
                best_val = v;
                best = w;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best_val.sqrt()
}

/// Random hull in `[-2, 2]^d` with occasional repeated or collinear vertices.
pub fn random_vertices(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(k);
    for i in 0..k {
        let v = match rng.gen_range(0..10) {
            0 if i > 0 => verts[rng.gen_range(0..i)].clone(),
            1 if i > 1 => {
                let s: f64 = rng.gen_range(-1.0..2.0);
                verts[0].iter().zip(&verts[1]).map(|(a, b)| a + s * (b - a)).collect()
            }
            _ => (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        };
        verts.push(v);
    }
    verts
}

/// Query point: outside, on a vertex, or a convex combination (inside).
pub fn random_query(rng: &mut ChaCha8Rng, verts: &[Vec<f64>]) -> Vec<f64> {
    let d = verts[0].len();
    match rng.gen_range(0..8) {
        0 => verts[rng.gen_range(0..verts.len())].clone(),
        1 => {
            let w: Vec<f64> = (0..verts.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let s: f64 = w.iter().sum();
            combo(verts, &w.iter().map(|v| v / s).collect::<Vec<_>>())
        }
        _ => (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect(),
    }
}

fn node(a: AgentId, k: usize) -> usize {
    match a {
        AgentId::Leader(l) => l,
        AgentId::Follower(i) => k + i,
    }
}

/// Transitive closure over leaders `0..k` then followers `k..k+n`.
pub fn closure(g: &Digraph) -> Vec<Vec<bool>> {
    let (n, k) = (g.followers(), g.leaders());
    let m = n + k;
    let mut r = vec![vec![false; m]; m];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in g.arcs() {
        r[node(a, k)][node(b, k)] = true;
    }
    for via in 0..m {
        for i in 0..m {
            if r[i][via] {
                for j in 0..m {
                    if r[via][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

/// Every follower is reachable from some leader.
pub fn l_connected(g: &Digraph) -> bool {
    let k = g.leaders();
    let r = closure(g);
    (0..g.followers()).all(|i| (0..k).any(|l| r[l][k + i]))
}

/// Whether the follower-follower arcs contain a cycle.
pub fn follower_cycle(g: &Digraph) -> bool {
    let mut r = vec![vec![false; g.followers()]; g.followers()];
    for (a, b) in g.arcs() {
        if let (AgentId::Follower(i), AgentId::Follower(j)) = (a, b) {
            r[i][j] = true;
        }
    }
    let n = g.followers();
    for via in 0..n {
        for i in 0..n {
            if r[i][via] {
                for j in 0..n {
                    if r[via][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    (0..n).any(|i| r[i][i])
}

/// Checks the layer property arc by arc: disjoint nonempty layers covering
/// every follower, and each arc into layer `j` starts at a leader or in a
/// layer before `j`.
pub fn check_partition(g: &Digraph, layers: &[Vec<usize>]) -> Result<(), String> {
    let n = g.followers();
    let mut layer_of = vec![None; n];
    for (j, layer) in layers.iter().enumerate() {
        if layer.is_empty() {
            return Err(format!("layer {j} is empty"));
        }
        for &i in layer {
            if i >= n {
                return Err(format!("follower {i} out of range"));
            }
            if layer_of[i].replace(j).is_some() {
                return Err(format!("follower {i} appears twice"));
            }
        }
    }
    if let Some(i) = layer_of.iter().position(Option::is_none) {
        return Err(format!("follower {i} is not covered"));
    }
    for (a, b) in g.arcs() {
        if let (AgentId::Follower(src), AgentId::Follower(dst)) = (a, b) {
            let (ls, ld) = (layer_of[src].unwrap(), layer_of[dst].unwrap());
            if ls >= ld {
                return Err(format!("arc {src} -> {dst} enters layer {ld} from layer {ls}"));
            }
        }
    }
    if let Some(first) = layers.first() {
        for &i in first {
            if !(0..g.leaders()).any(|l| g.contains(AgentId::Leader(l), AgentId::Follower(i))) {
                return Err(format!("first-layer follower {i} has no leader arc"));
            }
        }
    }
    Ok(())
}

/// Random follower order; each follower receives at least one arc from a
/// leader or an earlier follower, plus extra forward arcs. Acyclic and
/// leader-connected by construction.
pub fn random_acyclic_connected(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Digraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut g = Digraph::empty(n, k);
    for (pos, &i) in order.iter().enumerate() {
        let to = AgentId::Follower(i);
        if pos == 0 || rng.gen_bool(0.3) {
            g.add_arc(AgentId::Leader(rng.gen_range(0..k)), to).unwrap();
        } else {
            g.add_arc(AgentId::Follower(order[rng.gen_range(0..pos)]), to).unwrap();
        }
        for &j in &order[..pos] {
            if rng.gen_bool(0.25) {
                g.add_arc(AgentId::Follower(j), to).unwrap();
            }
        }
    }
    g
}

/// Any digraph on the given agents, with arc probability `p`.
pub fn random_digraph(rng: &mut ChaCha8Rng, n: usize, k: usize, p: f64) -> Digraph {
    let mut g = Digraph::empty(n, k);
    for i in 0..n {
        for l in 0..k {
            if rng.gen_bool(p) {
                g.add_arc(AgentId::Leader(l), AgentId::Follower(i)).unwrap();
            }
        }
        for j in 0..n {
            if j != i && rng.gen_bool(p) {
                g.add_arc(AgentId::Follower(j), AgentId::Follower(i)).unwrap();
            }
        }
    }
    g
}

/// Follower velocities summed arc by arc from `g.arcs()`.
pub fn follower_rhs(
    g: &Digraph,
    x: &Points,
    y: &Points,
    a: impl Fn(usize, usize) -> f64,
    b: impl Fn(usize, usize) -> f64,
    w: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = w.to_vec();
    for (from, to) in g.arcs() {
        let AgentId::Follower(i) = to else {
            panic!("arc into a leader");
        };
        let (weight, src) = match from {
            AgentId::Follower(j) => (a(i, j), x.row(j)),
            AgentId::Leader(l) => (b(i, l), y.row(l)),
        };
        for ((o, s), xi) in out[i].iter_mut().zip(src).zip(x.row(i)) {
            *o += weight * (s - xi);
        }
    }
    out
}
