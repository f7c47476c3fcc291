use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::edge::RenormalizedField;
use crate::error::RenormError;

/// Dinic max-flow on a small directed graph with integer capacities.
struct Dinic {
    head: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<i64>,
    next: Vec<usize>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            head: vec![NIL; n],
            to: Vec::new(),
            cap: Vec::new(),
            next: Vec::new(),
            level: vec![0; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, c: i64) {
        for (a, b, cc) in [(u, v, c), (v, u, 0)] {
            self.to.push(b);
            self.cap.push(cc);
            self.next.push(self.head[a]);
            self.head[a] = self.to.len() - 1;
        }
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            let mut e = self.head[u];
            while e != NIL {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    q.push_back(v);
                }
                e = self.next[e];
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, f: i64) -> i64 {
        if u == t {
            return f;
        }
        while self.iter[u] != NIL {
            let e = self.iter[u];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, f.min(self.cap[e]));
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.iter[u] = self.next[e];
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        while self.bfs(s, t) {
            self.iter.clone_from(&self.head);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
        flow
    }
}

fn check_window(field: &RenormalizedField, n: usize) -> Result<(), RenormError> {
    if field.dim() != 2 {
        return Err(RenormError::UnsupportedDim(field.dim()));
    }
    if n == 0 || field.cells.iter().any(|&c| c < n) {
        return Err(RenormError::InvalidWindow(format!(
            "crossing window {n} does not fit the field {:?}",
            field.cells
        )));
    }
    Ok(())
}

/// Open bonds inside the `n × n` window `[0,n)²`, wrap-around excluded.
fn window_bonds(field: &RenormalizedField, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for y in 0..n {
        for x in 0..n {
            let v = field.index(&[x as i64, y as i64]);
            if x + 1 < n && field.state(v, 0).is_open() {
                out.push((x + n * y, x + 1 + n * y));
            }
            if y + 1 < n && field.state(v, 1).is_open() {
                out.push((x + n * y, x + n * (y + 1)));
            }
        }
    }
    out
}

/// Maximum number of vertex-disjoint left-right open crossings of the
/// `n × n` window `[0,n)²` of a `d = 2` field, by max-flow with unit vertex
/// capacities.
pub fn crossing_count(field: &RenormalizedField, n: usize) -> Result<usize, RenormError> {
    check_window(field, n)?;
    let nv = n * n;
    let (src, sink) = (2 * nv, 2 * nv + 1);
    let mut g = Dinic::new(2 * nv + 2);
    for v in 0..nv {
        g.add_edge(2 * v, 2 * v + 1, 1);
        if v % n == 0 {
            g.add_edge(src, 2 * v, 1);
        }
        if v % n == n - 1 {
            g.add_edge(2 * v + 1, sink, 1);
        }
    }
    for (u, v) in window_bonds(field, n) {
        g.add_edge(2 * u + 1, 2 * v, 1);
        g.add_edge(2 * v + 1, 2 * u, 1);
    }
    Ok(g.max_flow(src, sink) as usize)
}

/// Window adjacency for the test oracles.
pub fn window_adjacency(field: &RenormalizedField, n: usize) -> Result<Vec<Vec<usize>>, RenormError> {
    check_window(field, n)?;
    let mut adj = vec![Vec::new(); n * n];
    for (u, v) in window_bonds(field, n) {
        adj[u].push(v);
        adj[v].push(u);
    }
    Ok(adj)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    /// Cluster label of each vertex (the smallest vertex index in it).
    pub labels: Vec<usize>,
    pub largest_label: usize,
    pub largest_size: usize,
    pub n_clusters: usize,
}

impl ClusterReport {
    pub fn largest_fraction(&self) -> f64 {
        self.largest_size as f64 / self.labels.len() as f64
    }

    pub fn members(&self, label: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&v| self.labels[v] == label).collect()
    }
}

fn find(parent: &mut [usize], mut v: usize) -> usize {
    while parent[v] != v {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    v
}

/// Connected components of the open bonds on the periodic field.
pub fn clusters(field: &RenormalizedField) -> ClusterReport {
    let nv = field.n_vertices();
    let d = field.dim();
    let mut parent: Vec<usize> = (0..nv).collect();
    for v in 0..nv {
        for a in 0..d {
            if field.state(v, a).is_open() {
                let w = field.step(v, a, 1);
                let (rv, rw) = (find(&mut parent, v), find(&mut parent, w));
                if rv != rw {
                    let (lo, hi) = (rv.min(rw), rv.max(rw));
                    parent[hi] = lo;
                }
            }
        }
    }
    let labels: Vec<usize> = (0..nv).map(|v| find(&mut parent, v)).collect();
    let mut size = vec![0usize; nv];
    for &l in &labels {
        size[l] += 1;
    }
    let (largest_label, largest_size) = size
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(l, &s)| (l, s))
        .unwrap_or((0, 0));
    ClusterReport {
        n_clusters: size.iter().filter(|&&s| s > 0).count(),
        labels,
        largest_label,
        largest_size,
    }
}

#[cfg(test)]
mod tests {
    use super::super::edge::EdgeState;
    use super::*;

    #[test]
    fn trivial_crossings() {
        let open = RenormalizedField::uniform(vec![5, 5], EdgeState::Open);
        assert_eq!(crossing_count(&open, 5).unwrap(), 5);
        let closed = RenormalizedField::uniform(vec![5, 5], EdgeState::Closed);
        assert_eq!(crossing_count(&closed, 5).unwrap(), 0);
        let mut line = closed.clone();
        for x in 0..4 {
            let v = line.index(&[x, 2]);
            line.states[v * 2] = EdgeState::Open;
        }
        assert_eq!(crossing_count(&line, 5).unwrap(), 1);
        assert!(crossing_count(&line, 6).is_err());
    }

    #[test]
    fn cluster_labels() {
        let closed = RenormalizedField::uniform(vec![4, 4], EdgeState::Closed);
        assert_eq!(clusters(&closed).n_clusters, 16);
        let open = RenormalizedField::uniform(vec![4, 4], EdgeState::Open);
        let c = clusters(&open);
        assert_eq!((c.n_clusters, c.largest_size), (1, 16));
    }
}
