//! Simple loop-free digraphs with sorted adjacency and stable arc ids, plus
//! the multidigraph and degeneracy machinery used by the auxiliary graphs.

use serde::Serialize;
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("vertex {0} out of range (n = {1})")]
    InvalidVertex(usize, usize),
    #[error("invalid arc ({0}, {1}): {2}")]
    InvalidArc(usize, usize, &'static str),
}

/// Walk direction for [`Digraph::reachable_set`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DegreeStats {
    pub min_out: usize,
    pub max_out: usize,
    pub min_in: usize,
    pub max_in: usize,
}

/// Simple digraph: no loops, no parallel arcs. Adjacency lists are sorted,
/// and every arc has a stable id equal to its rank in the lexicographic
/// (tail, head) order, so seeded subsampling is reproducible.
#[derive(Clone, PartialEq, Eq)]
pub struct Digraph {
    n: usize,
    m: usize,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
    // arc_offsets[u] = id of the first out-arc of u; arc_offsets[n] = m
    arc_offsets: Vec<usize>,
}

impl std::fmt::Debug for Digraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Digraph(n={}, m={}", self.n, self.m)?;
        if self.m <= 40 {
            write!(f, ", arcs={:?}", self.arcs().collect::<Vec<_>>())?;
        }
        write!(f, ")")
    }
}

impl Digraph {
    pub fn new(n: usize) -> Self {
        Digraph {
            n,
            m: 0,
            out_adj: vec![Vec::new(); n],
            in_adj: vec![Vec::new(); n],
            arc_offsets: vec![0; n + 1],
        }
    }

    /// Builds a digraph from an arc list. Duplicate pairs collapse to a
    /// single arc; loops and out-of-range endpoints are rejected.
    pub fn from_arcs(n: usize, arcs: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut out_adj = vec![Vec::new(); n];
        for &(u, v) in arcs {
            if u >= n {
                return Err(GraphError::InvalidVertex(u, n));
            }
            if v >= n {
                return Err(GraphError::InvalidVertex(v, n));
            }
            if u == v {
                return Err(GraphError::InvalidArc(u, v, "self-loop"));
            }
            out_adj[u].push(v);
        }
        let mut in_adj = vec![Vec::new(); n];
        let mut arc_offsets = Vec::with_capacity(n + 1);
        let mut m = 0;
        for u in 0..n {
            out_adj[u].sort_unstable();
            out_adj[u].dedup();
            arc_offsets.push(m);
            m += out_adj[u].len();
            for &v in &out_adj[u] {
                in_adj[v].push(u);
            }
        }
        arc_offsets.push(m);
        // in_adj ends up sorted because tails are visited in increasing order
        Ok(Digraph { n, m, out_adj, in_adj, arc_offsets })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn out_adj(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_adj(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.out_adj[u].binary_search(&v).is_ok()
    }

    /// Arcs in lexicographic (tail, head) order, i.e. in arc-id order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().map(move |&v| (u, v)))
    }

    pub fn arc_id(&self, u: usize, v: usize) -> Option<usize> {
        self.out_adj[u]
            .binary_search(&v)
            .ok()
            .map(|r| self.arc_offsets[u] + r)
    }

    /// Id of the first out-arc of `v`; together with [`Self::out_degree`]
    /// this gives the contiguous id range of v's out-arcs.
    pub fn first_arc_id(&self, v: usize) -> usize {
        self.arc_offsets[v]
    }

    pub fn arc_endpoints(&self, id: usize) -> (usize, usize) {
        debug_assert!(id < self.m);
        let u = match self.arc_offsets.binary_search(&id) {
            Ok(mut i) => {
                // skip past zero-out-degree vertices sharing this offset
                while self.arc_offsets[i + 1] == id {
                    i += 1;
                }
                i
            }
            Err(i) => i - 1,
        };
        (u, self.out_adj[u][id - self.arc_offsets[u]])
    }

    pub fn degree_stats(&self) -> DegreeStats {
        if self.n == 0 {
            return DegreeStats::default();
        }
        let mut s = DegreeStats {
            min_out: usize::MAX,
            max_out: 0,
            min_in: usize::MAX,
            max_in: 0,
        };
        for v in 0..self.n {
            s.min_out = s.min_out.min(self.out_degree(v));
            s.max_out = s.max_out.max(self.out_degree(v));
            s.min_in = s.min_in.min(self.in_degree(v));
            s.max_in = s.max_in.max(self.in_degree(v));
        }
        s
    }

    pub fn min_out_degree(&self) -> usize {
        self.degree_stats().min_out
    }

    /// Ends of walks of length exactly `len` starting (forward) or ending
    /// (backward) in `starts`. Walks may repeat vertices, so this is the
    /// `len`-fold neighborhood composition; `len = 0` returns `starts`.
    pub fn reachable_set(&self, starts: &[usize], len: usize, dir: Direction) -> Vec<usize> {
        let mut frontier = vec![false; self.n];
        for &s in starts {
            frontier[s] = true;
        }
        for _ in 0..len {
            let mut next = vec![false; self.n];
            for v in 0..self.n {
                if !frontier[v] {
                    continue;
                }
                let nbrs = match dir {
                    Direction::Forward => &self.out_adj[v],
                    Direction::Backward => &self.in_adj[v],
                };
                for &w in nbrs {
                    next[w] = true;
                }
            }
            frontier = next;
        }
        (0..self.n).filter(|&v| frontier[v]).collect()
    }

    /// Spanning subgraph keeping exactly the arcs for which `keep` is true.
    pub fn spanning_subgraph(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Digraph {
        let arcs: Vec<(usize, usize)> = self.arcs().filter(|&(u, v)| keep(u, v)).collect();
        Digraph::from_arcs(self.n, &arcs).expect("subgraph of a valid digraph is valid")
    }

    /// Induced subgraph on `verts` (deduplicated). Returns the subgraph and
    /// the map from new ids to original ids (sorted ascending).
    pub fn induced_subgraph(&self, verts: &[usize]) -> (Digraph, Vec<usize>) {
        let mut keep: Vec<usize> = verts.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut new_id = vec![usize::MAX; self.n];
        for (i, &v) in keep.iter().enumerate() {
            new_id[v] = i;
        }
        let mut arcs = Vec::new();
        for &u in &keep {
            for &v in &self.out_adj[u] {
                if new_id[v] != usize::MAX {
                    arcs.push((new_id[u], new_id[v]));
                }
            }
        }
        (
            Digraph::from_arcs(keep.len(), &arcs).expect("induced arcs are valid"),
            keep,
        )
    }

    /// Vertices of the maximal induced subdigraph with all out-degrees ≥ k,
    /// found by repeatedly peeling vertices of out-degree < k.
    pub fn out_core_vertices(&self, k: usize) -> Vec<usize> {
        let mut deg: Vec<usize> = (0..self.n).map(|v| self.out_degree(v)).collect();
        let mut removed = vec![false; self.n];
        let mut queue: Vec<usize> = (0..self.n).filter(|&v| deg[v] < k).collect();
        while let Some(v) = queue.pop() {
            if removed[v] {
                continue;
            }
            removed[v] = true;
            for &u in &self.in_adj[v] {
                if !removed[u] {
                    deg[u] -= 1;
                    if deg[u] + 1 == k {
                        queue.push(u);
                    }
                }
            }
        }
        (0..self.n).filter(|&v| !removed[v]).collect()
    }

    /// The k-out-core as a digraph (original ids returned alongside).
    pub fn out_core(&self, k: usize) -> (Digraph, Vec<usize>) {
        self.induced_subgraph(&self.out_core_vertices(k))
    }

    /// Largest k with a nonempty k-out-core; 0 for arc-less graphs. Equals
    /// the maximum over all subdigraphs of their minimum out-degree.
    pub fn max_core_value(&self) -> usize {
        let mut lo = 0;
        let mut hi = self.degree_stats().max_out;
        // binary search over the monotone predicate "k-core nonempty"
        while lo < hi {
            let mid = lo + (hi - lo + 1) / 2;
            if self.out_core_vertices(mid).is_empty() {
                hi = mid - 1;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Keeps arcs matched by `subject` independently with probability p,
    /// keyed by (seed, arc id); other arcs are kept unconditionally. The
    /// output is a pure function of (self, p, seed, subject).
    pub fn subsample_arcs(
        &self,
        p: f64,
        seed: u64,
        mut subject: impl FnMut(usize, usize) -> bool,
    ) -> Digraph {
        let mut id = 0;
        self.spanning_subgraph(|u, v| {
            let keep = !subject(u, v) || rng::keyed_bernoulli(seed, id as u64, p);
            id += 1;
            keep
        })
    }
}

/// Digraph allowing parallel arcs; each arc carries a tag recording the
/// witness vertex it was created for.
#[derive(Debug, Clone)]
pub struct MultiDigraph {
    n: usize,
    arcs: Vec<(usize, usize, usize)>,
    out_arcs: Vec<Vec<(usize, usize)>>, // (head, tag)
    in_arcs: Vec<Vec<(usize, usize)>>,  // (tail, tag)
}

impl MultiDigraph {
    pub fn from_arcs(n: usize, arcs: Vec<(usize, usize, usize)>) -> Result<Self, GraphError> {
        let mut out_arcs = vec![Vec::new(); n];
        let mut in_arcs = vec![Vec::new(); n];
        for &(u, v, w) in &arcs {
            if u >= n {
                return Err(GraphError::InvalidVertex(u, n));
            }
            if v >= n {
                return Err(GraphError::InvalidVertex(v, n));
            }
            if u == v {
                return Err(GraphError::InvalidArc(u, v, "self-loop"));
            }
            out_arcs[u].push((v, w));
            in_arcs[v].push((u, w));
        }
        Ok(MultiDigraph { n, arcs, out_arcs, in_arcs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[(usize, usize, usize)] {
        &self.arcs
    }

    pub fn out_arcs(&self, v: usize) -> &[(usize, usize)] {
        &self.out_arcs[v]
    }

    pub fn in_arcs(&self, v: usize) -> &[(usize, usize)] {
        &self.in_arcs[v]
    }

    pub fn out_multiplicity(&self, v: usize) -> usize {
        self.out_arcs[v].len()
    }
}

#[derive(Debug, Clone)]
pub struct DegeneracyOrdering {
    /// Processing order; each vertex has at most `bound` arc-endpoints
    /// (both directions, counting multiplicity) among earlier vertices.
    pub order: Vec<usize>,
    /// position[v] = index of v in `order`.
    pub position: Vec<usize>,
    /// The degeneracy of the underlying multigraph.
    pub bound: usize,
}

/// Min-degree peeling (total degree with multiplicity, ties by smallest id),
/// emitted in reverse peel order so earlier-neighbor counts are bounded by
/// the degeneracy.
pub fn degeneracy_ordering(g: &MultiDigraph) -> DegeneracyOrdering {
    let n = g.n();
    let mut deg: Vec<usize> = (0..n)
        .map(|v| g.out_arcs(v).len() + g.in_arcs(v).len())
        .collect();
    let mut live: std::collections::BTreeSet<(usize, usize)> =
        (0..n).map(|v| (deg[v], v)).collect();
    let mut removed = vec![false; n];
    let mut peel = Vec::with_capacity(n);
    let mut bound = 0;
    while let Some(&(d, v)) = live.iter().next() {
        live.remove(&(d, v));
        bound = bound.max(d);
        removed[v] = true;
        peel.push(v);
        for arcs in [g.out_arcs(v), g.in_arcs(v)] {
            for &(u, _) in arcs {
                if !removed[u] {
                    live.remove(&(deg[u], u));
                    deg[u] -= 1;
                    live.insert((deg[u], u));
                }
            }
        }
    }
    peel.reverse();
    let mut position = vec![0; n];
    for (i, &v) in peel.iter().enumerate() {
        position[v] = i;
    }
    DegeneracyOrdering { order: peel, position, bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Digraph {
        Digraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn from_arcs_validates_and_collapses() {
        assert_eq!(
            Digraph::from_arcs(2, &[(0, 0)]),
            Err(GraphError::InvalidArc(0, 0, "self-loop"))
        );
        assert_eq!(
            Digraph::from_arcs(2, &[(0, 2)]),
            Err(GraphError::InvalidVertex(2, 2))
        );
        let g = Digraph::from_arcs(2, &[(0, 1), (0, 1)]).unwrap();
        assert_eq!(g.m(), 1);
        assert!(g.has_arc(0, 1) && !g.has_arc(1, 0));
    }

    #[test]
    fn arc_ids_are_lexicographic() {
        let g = Digraph::from_arcs(4, &[(2, 0), (0, 3), (0, 1), (3, 1)]).unwrap();
        let arcs: Vec<_> = g.arcs().collect();
        assert_eq!(arcs, vec![(0, 1), (0, 3), (2, 0), (3, 1)]);
        for (id, &(u, v)) in arcs.iter().enumerate() {
            assert_eq!(g.arc_id(u, v), Some(id));
            assert_eq!(g.arc_endpoints(id), (u, v));
        }
        assert_eq!(g.arc_id(1, 0), None);
    }

    #[test]
    fn degree_stats_cases() {
        assert_eq!(
            triangle().degree_stats(),
            DegreeStats { min_out: 1, max_out: 1, min_in: 1, max_in: 1 }
        );
        let single = Digraph::from_arcs(2, &[(0, 1)]).unwrap();
        assert_eq!(
            single.degree_stats(),
            DegreeStats { min_out: 0, max_out: 1, min_in: 0, max_in: 1 }
        );
        assert_eq!(Digraph::new(0).degree_stats(), DegreeStats::default());
    }

    #[test]
    fn reachable_set_walk_semantics() {
        let t = triangle();
        assert_eq!(t.reachable_set(&[0], 2, Direction::Forward), vec![2]);
        assert_eq!(t.reachable_set(&[0], 0, Direction::Forward), vec![0]);
        let p = Digraph::from_arcs(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(p.reachable_set(&[2], 1, Direction::Backward), vec![1]);
        assert_eq!(p.reachable_set(&[0], 2, Direction::Forward), vec![2]);
        assert_eq!(p.reachable_set(&[0], 3, Direction::Forward), Vec::<usize>::new());
        // walks, not paths: both endpoints of a digon alternate forever
        let d = Digraph::from_arcs(2, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(d.reachable_set(&[0], 4, Direction::Forward), vec![0]);
    }

    #[test]
    fn out_core_examples() {
        let path = Digraph::from_arcs(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(path.out_core_vertices(1).is_empty());

        assert_eq!(triangle().out_core_vertices(1), vec![0, 1, 2]);

        // pendant arc into the triangle: 3 keeps out-degree 1, all survive
        let g = Digraph::from_arcs(4, &[(0, 1), (1, 2), (2, 0), (3, 0)]).unwrap();
        assert_eq!(g.out_core_vertices(1), vec![0, 1, 2, 3]);
        assert!(g.out_core_vertices(2).is_empty());
        assert_eq!(g.max_core_value(), 1);

        // pendant arc out of the triangle: 3 has out-degree 0 and is peeled
        let h = Digraph::from_arcs(4, &[(0, 1), (1, 2), (2, 0), (0, 3)]).unwrap();
        assert_eq!(h.out_core_vertices(1), vec![0, 1, 2]);
    }

    #[test]
    fn out_core_is_fixed_point_and_maximal() {
        // brute force: union of all vertex subsets whose induced min out-degree ≥ k
        let g = Digraph::from_arcs(
            6,
            &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3), (3, 0)],
        )
        .unwrap();
        for k in 0..4 {
            let core = g.out_core_vertices(k);
            let (cg, _) = g.out_core(k);
            assert!(cg.n() == 0 || cg.degree_stats().min_out >= k);
            for mask in 1u32..(1 << g.n()) {
                let verts: Vec<usize> = (0..g.n()).filter(|&v| mask >> v & 1 == 1).collect();
                let (s, ids) = g.induced_subgraph(&verts);
                if s.degree_stats().min_out >= k {
                    for v in ids {
                        assert!(core.contains(&v), "k={k}: {v} missing from core");
                    }
                }
            }
        }
    }

    #[test]
    fn subsample_determinism_and_edges() {
        let g = Digraph::from_arcs(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        let a = g.subsample_arcs(0.5, 99, |_, _| true);
        let b = g.subsample_arcs(0.5, 99, |_, _| true);
        assert_eq!(a, b);
        assert_eq!(g.subsample_arcs(1.0, 1, |_, _| true), g);
        assert_eq!(g.subsample_arcs(0.0, 1, |_, _| true).m(), 0);
        // arcs outside the subject predicate are untouchable
        let c = g.subsample_arcs(0.0, 1, |u, _| u != 0);
        assert_eq!(c.out_degree(0), 2);
        assert_eq!(c.m(), 2);
    }

    #[test]
    fn degeneracy_on_directed_four_cycle() {
        let arcs: Vec<(usize, usize, usize)> =
            vec![(0, 1, 0), (1, 2, 0), (2, 3, 0), (3, 0, 0)];
        let g = MultiDigraph::from_arcs(4, arcs).unwrap();
        let ord = degeneracy_ordering(&g);
        assert_eq!(ord.bound, 2);
        assert_eq!(ord.order, vec![3, 2, 1, 0]);
        // every vertex has ≤ bound endpoints among earlier vertices
        for (i, &v) in ord.order.iter().enumerate() {
            let earlier = &ord.order[..i];
            let cnt = g
                .arcs()
                .iter()
                .filter(|&&(a, b, _)| {
                    (a == v && earlier.contains(&b)) || (b == v && earlier.contains(&a))
                })
                .count();
            assert!(cnt <= ord.bound);
        }
    }

    #[test]
    fn degeneracy_matches_exhaustive_on_small_multigraphs() {
        // exhaustive degeneracy: max over vertex subsets of min total degree inside
        fn exhaustive(g: &MultiDigraph) -> usize {
            let n = g.n();
            let mut best = 0;
            for mask in 1u32..(1 << n) {
                let inside = |v: usize| mask >> v & 1 == 1;
                let mut min_deg = usize::MAX;
                for v in 0..n {
                    if !inside(v) {
                        continue;
                    }
                    let d = g.out_arcs(v).iter().filter(|&&(u, _)| inside(u)).count()
                        + g.in_arcs(v).iter().filter(|&&(u, _)| inside(u)).count();
                    min_deg = min_deg.min(d);
                }
                if min_deg != usize::MAX {
                    best = best.max(min_deg);
                }
            }
            best
        }
        let mut rng = crate::rng::stream(2024, 0);
        use rand::Rng;
        for _ in 0..40 {
            let n = rng.gen_range(2..=7);
            let m = rng.gen_range(0..=12);
            let mut arcs = Vec::new();
            for _ in 0..m {
                let u = rng.gen_range(0..n);
                let v = rng.gen_range(0..n);
                if u != v {
                    arcs.push((u, v, 0));
                }
            }
            let g = MultiDigraph::from_arcs(n, arcs).unwrap();
            let ord = degeneracy_ordering(&g);
            assert_eq!(ord.bound, exhaustive(&g));
            // out-multiplicity Δ⁺ ≤ k forces bound ≤ 2k
            let max_out = (0..n).map(|v| g.out_multiplicity(v)).max().unwrap_or(0);
            assert!(ord.bound <= 2 * max_out);
        }
    }
}
