//! Finite metric trees. Points live on edges as (edge index, offset from the
//! edge's first endpoint). Vertex-pair distances are precomputed once, so
//! every query after construction is a table lookup plus offset arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Description of a finite metric tree: weighted edges over vertices
/// `0..n-1` plus an optional root used for path computations.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TreeDescription {
    /// `(u, v, length)` triples; lengths are in metric units.
    pub edges: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TreeSpace {
    desc: TreeDescription,
    n: usize,
    edges: Vec<(usize, usize, f64)>,
    /// adjacency: vertex -> [(edge index, other endpoint)]
    adj: Vec<Vec<(usize, usize)>>,
    /// all vertex-pair distances
    vdist: Vec<Vec<f64>>,
    /// parent vertex and connecting edge, from the root
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    root: usize,
}

impl TreeSpace {
    pub(crate) fn build(desc: TreeDescription) -> Result<TreeSpace> {
        if desc.edges.is_empty() {
            return Err(Error::InvalidConfig("tree needs at least one edge".into()));
        }
        let mut max_v = 0;
        for &(u, v, len) in &desc.edges {
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "edge ({u}, {v}) must have positive finite length, got {len}"
                )));
            }
            if u == v {
                return Err(Error::InvalidConfig(format!("self-loop at vertex {u}")));
            }
            max_v = max_v.max(u).max(v);
        }
        let n = max_v + 1;
        if desc.edges.len() != n - 1 {
            return Err(Error::InvalidConfig(format!(
                "{} edges over {n} vertices cannot form a tree",
                desc.edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); n];
        for (i, &(u, v, _)) in desc.edges.iter().enumerate() {
            adj[u].push((i, v));
            adj[v].push((i, u));
        }
        let root = desc.root.unwrap_or(0);
        if root >= n {
            return Err(Error::InvalidConfig(format!("root {root} out of range")));
        }

        // DFS from the root checks connectivity (edge count already rules out
        // cycles given connectivity) and records parents/depths.
        let mut parent = vec![None; n];
        let mut depth = vec![usize::MAX; n];
        let mut stack = vec![root];
        depth[root] = 0;
        let mut seen = 1;
        while let Some(u) = stack.pop() {
            for &(e, w) in &adj[u] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[u] + 1;
                    parent[w] = Some((u, e));
                    seen += 1;
                    stack.push(w);
                }
            }
        }
        if seen != n {
            return Err(Error::InvalidConfig(
                "tree description is disconnected (every vertex id in 0..=max must occur)".into(),
            ));
        }

        // all-pairs distances: one DFS per source
        let mut vdist = vec![vec![0.0; n]; n];
        for s in 0..n {
            let mut stack = vec![s];
            let mut done = vec![false; n];
            done[s] = true;
            while let Some(u) = stack.pop() {
                for &(e, w) in &adj[u] {
                    if !done[w] {
                        done[w] = true;
                        vdist[s][w] = vdist[s][u] + desc.edges[e].2;
                        stack.push(w);
                    }
                }
            }
        }

        let edges = desc.edges.clone();
        Ok(TreeSpace {
            desc,
            n,
            edges,
            adj,
            vdist,
            parent,
            depth,
            root,
        })
    }

    pub fn description(&self) -> &TreeDescription {
        &self.desc
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge(&self, e: usize) -> (usize, usize, f64) {
        self.edges[e]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn vertex_distance(&self, u: usize, v: usize) -> f64 {
        self.vdist[u][v]
    }

    /// Total edge length; an upper bound for the diameter.
    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.2).sum()
    }

    pub(crate) fn validate(&self, edge: usize, offset: f64, tol: f64) -> Result<()> {
        if edge >= self.edges.len() {
            return Err(Error::PointNotInSpace(format!("edge {edge} out of range")));
        }
        let len = self.edges[edge].2;
        if !offset.is_finite() || offset < -tol || offset > len + tol {
            return Err(Error::PointNotInSpace(format!(
                "offset {offset} outside [0, {len}] on edge {edge}"
            )));
        }
        Ok(())
    }

    /// Position of a vertex in canonical form: lowest incident edge id, offset
    /// pinned to the matching endpoint.
    pub fn vertex_position(&self, v: usize) -> (usize, f64) {
        let &(e, _) = self.adj[v]
            .iter()
            .min_by_key(|(e, _)| *e)
            .expect("every vertex of a tree with >= 1 edge is incident to an edge");
        let (u, _, len) = self.edges[e];
        if u == v {
            (e, 0.0)
        } else {
            (e, len)
        }
    }

    pub(crate) fn canonical(&self, edge: usize, offset: f64, tol: f64) -> (usize, f64) {
        let (u, v, len) = self.edges[edge];
        if offset.abs() <= tol {
            self.vertex_position(u)
        } else if (offset - len).abs() <= tol {
            self.vertex_position(v)
        } else {
            (edge, offset)
        }
    }

    /// Distance from an edge point to a vertex.
    pub(crate) fn point_to_vertex(&self, edge: usize, offset: f64, w: usize) -> f64 {
        let (u, v, len) = self.edges[edge];
        (offset + self.vdist[u][w]).min(len - offset + self.vdist[v][w])
    }

    pub(crate) fn distance(&self, e1: usize, t1: f64, e2: usize, t2: f64) -> f64 {
        if e1 == e2 {
            return (t1 - t2).abs();
        }
        let (_, v2, len2) = self.edges[e2];
        let u2 = self.edges[e2].0;
        (t2 + self.point_to_vertex(e1, t1, u2)).min(len2 - t2 + self.point_to_vertex(e1, t1, v2))
    }

    /// Vertex sequence of the path from `a` to `b` (inclusive).
    fn vertex_path(&self, a: usize, b: usize) -> Vec<usize> {
        let mut up_a = vec![a];
        let mut up_b = vec![b];
        let (mut x, mut y) = (a, b);
        while self.depth[x] > self.depth[y] {
            x = self.parent[x].unwrap().0;
            up_a.push(x);
        }
        while self.depth[y] > self.depth[x] {
            y = self.parent[y].unwrap().0;
            up_b.push(y);
        }
        while x != y {
            x = self.parent[x].unwrap().0;
            y = self.parent[y].unwrap().0;
            up_a.push(x);
            up_b.push(y);
        }
        up_b.pop();
        up_b.reverse();
        up_a.extend(up_b);
        up_a
    }

    fn edge_between(&self, a: usize, b: usize) -> usize {
        self.adj[a]
            .iter()
            .find(|&&(_, w)| w == b)
            .expect("consecutive path vertices are adjacent")
            .0
    }

    /// Offset of the point at distance `dist` from vertex `from` along edge `e`.
    fn offset_from(&self, e: usize, from: usize, dist: f64) -> f64 {
        let (u, _, len) = self.edges[e];
        if u == from {
            dist.min(len).max(0.0)
        } else {
            (len - dist).min(len).max(0.0)
        }
    }

    /// Walks `target` metric units from `(e1, t1)` toward `(e2, t2)` along the
    /// unique path. `target` must not exceed the distance between the points.
    pub(crate) fn combine(&self, e1: usize, t1: f64, e2: usize, t2: f64, lambda: f64) -> (usize, f64) {
        if e1 == e2 {
            return (e1, t1 + lambda * (t2 - t1));
        }
        let total = self.distance(e1, t1, e2, t2);
        let mut remaining = lambda * total;

        // exit vertex of the first edge and entry vertex of the last
        let (u1, v1, len1) = self.edges[e1];
        let (u2, v2, len2) = self.edges[e2];
        let via = [
            (u1, t1, u2, t2),
            (u1, t1, v2, len2 - t2),
            (v1, len1 - t1, u2, t2),
            (v1, len1 - t1, v2, len2 - t2),
        ];
        let (a, off_a, b, off_b) = via
            .into_iter()
            .min_by(|p, q| {
                let dp = p.1 + self.vdist[p.0][p.2] + p.3;
                let dq = q.1 + self.vdist[q.0][q.2] + q.3;
                dp.partial_cmp(&dq).unwrap()
            })
            .unwrap();

        // segment from the start point to its exit vertex
        if remaining <= off_a {
            let toward_v1 = a == v1;
            let off = if toward_v1 { t1 + remaining } else { t1 - remaining };
            return (e1, off.clamp(0.0, len1));
        }
        remaining -= off_a;

        // full edges along the vertex path
        let path = self.vertex_path(a, b);
        for win in path.windows(2) {
            let (x, y) = (win[0], win[1]);
            let e = self.edge_between(x, y);
            let len = self.edges[e].2;
            if remaining <= len {
                return (e, self.offset_from(e, x, remaining));
            }
            remaining -= len;
        }

        // final segment from the entry vertex toward the end point
        let from_u2 = b == u2;
        let off = if from_u2 {
            remaining.min(t2)
        } else {
            len2 - remaining.min(off_b)
        };
        (e2, off.clamp(0.0, len2))
    }

    /// Continues past `(e2, t2)` on the geodesic that came from `(e1, t1)`,
    /// for `extra` more units. At branch vertices the lowest-id unexplored
    /// edge is taken; returns `None` when a leaf cuts the walk short.
    pub(crate) fn extend(
        &self,
        e1: usize,
        t1: f64,
        e2: usize,
        t2: f64,
        extra: f64,
    ) -> Option<(usize, f64)> {
        // direction of travel on the final edge
        let (u2, v2, len2) = self.edges[e2];
        let (mut cur_edge, mut cur_off) = (e2, t2);
        // `arrived_from` = the vertex of e2 behind us
        let mut behind = if e1 == e2 {
            if t2 >= t1 {
                u2
            } else {
                v2
            }
        } else {
            // the walk entered e2 via the endpoint on the path from (e1, t1)
            let du = t2 + self.point_to_vertex(e1, t1, u2);
            let dv = (len2 - t2) + self.point_to_vertex(e1, t1, v2);
            if du <= dv {
                u2
            } else {
                v2
            }
        };
        let mut remaining = extra;
        loop {
            let (u, v, len) = self.edges[cur_edge];
            let forward = if behind == u { v } else { u };
            let room = if behind == u { len - cur_off } else { cur_off };
            if remaining <= room {
                let off = if behind == u {
                    cur_off + remaining
                } else {
                    cur_off - remaining
                };
                return Some((cur_edge, off.clamp(0.0, len)));
            }
            remaining -= room;
            // step through `forward`, choosing the lowest-id continuing edge
            let next = self.adj[forward]
                .iter()
                .filter(|&&(e, _)| e != cur_edge)
                .min_by_key(|&&(e, _)| e)?;
            behind = forward;
            cur_edge = next.0;
            cur_off = if self.edges[cur_edge].0 == forward {
                0.0
            } else {
                self.edges[cur_edge].2
            };
        }
    }

    /// Whether both endpoints of `edge` belong to `vertices` (so the whole
    /// edge lies in the induced subtree).
    pub(crate) fn edge_in_subtree(&self, edge: usize, vertices: &[usize]) -> bool {
        let (u, v, _) = self.edges[edge];
        vertices.contains(&u) && vertices.contains(&v)
    }

    /// Checks that a vertex set induces a connected subgraph.
    pub(crate) fn subtree_connected(&self, vertices: &[usize]) -> bool {
        if vertices.is_empty() {
            return false;
        }
        if vertices.iter().any(|&v| v >= self.n) {
            return false;
        }
        let inside = |v: usize| vertices.contains(&v);
        let mut seen = vec![vertices[0]];
        let mut stack = vec![vertices[0]];
        while let Some(u) = stack.pop() {
            for &(_, w) in &self.adj[u] {
                if inside(w) && !seen.contains(&w) {
                    seen.push(w);
                    stack.push(w);
                }
            }
        }
        seen.len() == vertices.iter().collect::<std::collections::BTreeSet<_>>().len()
    }
}
