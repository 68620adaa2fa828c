//! Capacitated DAGs and an exact integer max-flow.

use std::collections::VecDeque;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Capacity {
    Finite(u64),
    Infinite,
}

/// What a vertex stands for in an information flow graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VertexTag {
    Source,
    Sink,
    /// Input half of a physical node. `version` counts repairs of the
    /// cluster (model 1) or of the node itself (model 2).
    In { cluster: usize, node: usize, version: usize },
    Out { cluster: usize, node: usize, version: usize },
    /// Cluster compute unit; `serial` distinguishes the per-use instances.
    Ext { cluster: usize, serial: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub cap: Capacity,
}

#[derive(Clone, Debug, Serialize)]
pub struct FlowGraph {
    vertices: Vec<VertexTag>,
    edges: Vec<Edge>,
    source: usize,
    sink: usize,
}

impl Default for FlowGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl FlowGraph {
    pub fn new() -> Self {
        FlowGraph {
            vertices: vec![VertexTag::Source, VertexTag::Sink],
            edges: Vec::new(),
            source: 0,
            sink: 1,
        }
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn add_vertex(&mut self, tag: VertexTag) -> usize {
        self.vertices.push(tag);
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: Capacity) {
        debug_assert!(from != self.sink && to != self.source);
        self.edges.push(Edge { from, to, cap });
    }

    pub fn vertices(&self) -> &[VertexTag] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edges_mut(&mut self) -> &mut [Edge] {
        &mut self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sum of all finite capacities; any cut that avoids infinite edges is
    /// bounded by this.
    pub fn finite_total(&self) -> u64 {
        self.edges
            .iter()
            .map(|e| match e.cap {
                Capacity::Finite(c) => c,
                Capacity::Infinite => 0,
            })
            .sum()
    }

    /// Checks acyclicity (Kahn's algorithm).
    pub fn is_acyclic(&self) -> bool {
        let n = self.vertices.len();
        let mut indeg = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            indeg[e.to] += 1;
            adj[e.from].push(e.to);
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for &w in &adj[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        seen == n
    }

    /// Value of the maximum source-sink flow, equal to the minimum cut.
    ///
    /// Infinite edges get capacity `finite_total() + 1`, so they are never
    /// the bottleneck of a finite cut. A result above `finite_total()` means
    /// no finite cut exists.
    pub fn max_flow(&self) -> u64 {
        let inf = self.finite_total() + 1;
        let mut net = Dinic::new(self.vertices.len());
        for e in &self.edges {
            let c = match e.cap {
                Capacity::Finite(c) => c,
                Capacity::Infinite => inf,
            };
            net.add_edge(e.from, e.to, c);
        }
        net.run(self.source, self.sink)
    }
}

struct Arc {
    to: usize,
    cap: u64,
    rev: usize,
}

/// Dinic's blocking-flow algorithm on a residual network.
struct Dinic {
    adj: Vec<Vec<Arc>>,
    level: Vec<i64>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            adj: (0..n).map(|_| Vec::new()).collect(),
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Arc { to, cap, rev: rev_from });
        self.adj[to].push(Arc {
            to: from,
            cap: 0,
            rev: rev_to,
        });
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut q = VecDeque::new();
        self.level[s] = 0;
        q.push_back(s);
        while let Some(v) = q.pop_front() {
            for a in &self.adj[v] {
                if a.cap > 0 && self.level[a.to] < 0 {
                    self.level[a.to] = self.level[v] + 1;
                    q.push_back(a.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: u64) -> u64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.adj[v].len() {
            let i = self.iter[v];
            let (to, cap) = (self.adj[v][i].to, self.adj[v][i].cap);
            if cap > 0 && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0 {
                    self.adj[v][i].cap -= d;
                    let rev = self.adj[v][i].rev;
                    self.adj[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0
    }

    fn run(&mut self, s: usize, t: usize) -> u64 {
        let mut flow = 0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, u64::MAX);
                if f == 0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mid(g: &mut FlowGraph) -> usize {
        g.add_vertex(VertexTag::Ext {
            cluster: 0,
            serial: g.vertex_count(),
        })
    }

    #[test]
    fn single_path() {
        let mut g = FlowGraph::new();
        let a = mid(&mut g);
        g.add_edge(g.source(), a, Capacity::Infinite);
        g.add_edge(a, g.sink(), Capacity::Finite(7));
        assert_eq!(g.max_flow(), 7);
    }

    #[test]
    fn disjoint_paths_add() {
        let mut g = FlowGraph::new();
        for cap in [3, 9] {
            let a = mid(&mut g);
            g.add_edge(g.source(), a, Capacity::Finite(cap));
            g.add_edge(a, g.sink(), Capacity::Infinite);
        }
        assert_eq!(g.max_flow(), 12);
        assert!(g.is_acyclic());
    }

    /// Brute-force min cut over every vertex bipartition.
    fn brute_min_cut(n_inner: usize, edges: &[(usize, usize, u64)]) -> u64 {
        // vertex 0 = source, 1 = sink, inner vertices 2..
        let mut best = u64::MAX;
        for mask in 0u32..(1 << n_inner) {
            let side_s = |v: usize| match v {
                0 => true,
                1 => false,
                v => mask >> (v - 2) & 1 == 1,
            };
            let cut: u64 = edges
                .iter()
                .filter(|(a, b, _)| side_s(*a) && !side_s(*b))
                .map(|e| e.2)
                .sum();
            best = best.min(cut);
        }
        best
    }

    proptest! {
        #[test]
        fn dinic_matches_brute_force(
            n_inner in 1usize..7,
            raw in proptest::collection::vec((0usize..9, 0usize..9, 0u64..10), 1..25)
        ) {
            // Orient edges forward in the order source < inner < sink to keep a DAG.
            let order = |v: usize| match v { 0 => 0, 1 => n_inner + 1, v => v - 1 };
            let nv = n_inner + 2;
            let mut g = FlowGraph::new();
            for i in 0..n_inner {
                g.add_vertex(VertexTag::Ext { cluster: 0, serial: i });
            }
            let mut edges = Vec::new();
            for (a, b, c) in raw {
                let (a, b) = (a % nv, b % nv);
                if order(a) < order(b) {
                    g.add_edge(a, b, Capacity::Finite(c));
                    edges.push((a, b, c));
                }
            }
            prop_assert!(g.is_acyclic());
            prop_assert_eq!(g.max_flow(), brute_min_cut(n_inner, &edges));
        }

        #[test]
        fn raising_capacity_never_lowers_flow(
            caps in proptest::collection::vec(0u64..10, 12),
            which in 0usize..12,
            bump in 1u64..5
        ) {
            // Fixed 4-vertex layered DAG with 12 candidate edges.
            let pairs = [(0,2),(0,3),(0,4),(0,5),(2,3),(2,4),(3,5),(4,5),(2,1),(3,1),(4,1),(5,1)];
            let build = |caps: &[u64]| {
                let mut g = FlowGraph::new();
                for i in 0..4 { g.add_vertex(VertexTag::Ext { cluster: 0, serial: i }); }
                for (&(a, b), &c) in pairs.iter().zip(caps) {
                    g.add_edge(a, b, Capacity::Finite(c));
                }
                g
            };
            let before = build(&caps).max_flow();
            let mut raised = caps.clone();
            raised[which] += bump;
            prop_assert!(build(&raised).max_flow() >= before);
        }
    }
}
