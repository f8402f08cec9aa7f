//! Forbidden-pattern catalog, injective containment search, orientation
//! enumeration, and height functions on oriented forests.
//!
//! Containment semantics throughout: a copy of F in D is an injective map φ
//! on V(F) with (φx, φy) an arc of D for every arc (x, y) of F. Non-arcs of
//! F are unconstrained.

use thiserror::Error;

use crate::digraph::Digraph;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PatternError {
    #[error("unknown pattern name {0:?}")]
    UnknownPattern(String),
    #[error("input is not an oriented forest (underlying cycle through vertex {0})")]
    NotAForest(usize),
}

/// A named forbidden digraph.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub name: String,
    pub graph: Digraph,
}

impl Pattern {
    pub fn new(name: impl Into<String>, graph: Digraph) -> Self {
        Pattern { name: name.into(), graph }
    }
}

fn small(name: &str, n: usize, arcs: &[(usize, usize)]) -> Pattern {
    Pattern::new(name, Digraph::from_arcs(n, arcs).expect("valid builtin"))
}

/// Directed cycle 0→1→…→(l−1)→0.
pub fn directed_cycle(l: usize) -> Pattern {
    assert!(l >= 2, "a directed cycle needs at least 2 vertices");
    let arcs: Vec<_> = (0..l).map(|i| (i, (i + 1) % l)).collect();
    small(&format!("c{l}_1"), l, &arcs)
}

/// The six fixed cycle orientations: directed and transitive triangles, and
/// the four orientation classes of the 5-cycle. `c5_2` has a unique source
/// whose two out-neighbors are joined by a directed path of length 3.
pub fn cycle_orientation(name: &str) -> Result<Pattern, PatternError> {
    Ok(match name {
        "c3_1" => directed_cycle(3),
        "c3_2" => small("c3_2", 3, &[(0, 1), (1, 2), (0, 2)]),
        "c5_1" => directed_cycle(5),
        "c5_2" => small("c5_2", 5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
        "c5_3" => small("c5_3", 5, &[(0, 1), (1, 2), (2, 3), (4, 3), (0, 4)]),
        "c5_4" => small("c5_4", 5, &[(0, 1), (1, 2), (3, 2), (3, 4), (0, 4)]),
        other => return Err(PatternError::UnknownPattern(other.into())),
    })
}

/// K_{a,b} with every arc directed from the a-side to the b-side.
pub fn one_directed_bipartite(a: usize, b: usize) -> Pattern {
    assert!(a >= 1 && b >= 1);
    let mut arcs = Vec::with_capacity(a * b);
    for u in 0..a {
        for v in 0..b {
            arcs.push((u, a + v));
        }
    }
    small(&format!("k_onedir_{a}_{b}"), a + b, &arcs)
}

/// Resolves a pattern by name: the six cycle orientations, `c<l>_1` for any
/// directed cycle length, or `k_onedir_<a>_<b>`.
pub fn builtin(name: &str) -> Result<Pattern, PatternError> {
    if let Ok(p) = cycle_orientation(name) {
        return Ok(p);
    }
    let parts: Vec<&str> = name.split('_').collect();
    match parts.as_slice() {
        ["k", "onedir", a, b] => {
            if let (Ok(a), Ok(b)) = (a.parse::<usize>(), b.parse::<usize>()) {
                if a >= 1 && b >= 1 && a.saturating_mul(b) <= 64 {
                    return Ok(one_directed_bipartite(a, b));
                }
            }
        }
        [c, "1"] if c.starts_with('c') => {
            if let Ok(l) = c[1..].parse::<usize>() {
                if (2..=64).contains(&l) {
                    return Ok(directed_cycle(l));
                }
            }
        }
        _ => {}
    }
    Err(PatternError::UnknownPattern(name.into()))
}

pub fn builtin_names() -> &'static [&'static str] {
    &["c3_1", "c3_2", "c5_1", "c5_2", "c5_3", "c5_4", "k_onedir_<a>_<b>", "c<l>_1"]
}

/// Minimum row-major adjacency encoding over all vertex permutations.
/// Only defined for n ≤ 8 (the encoding must fit in a u64).
pub fn canonical_code(g: &Digraph) -> u64 {
    let n = g.n();
    assert!(n <= 8, "canonical_code supports at most 8 vertices");
    let arcs: Vec<(usize, usize)> = g.arcs().collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = u64::MAX;
    // Heap's algorithm over all n! labelings
    let mut c = vec![0usize; n];
    let encode = |perm: &[usize]| -> u64 {
        let mut code = 0u64;
        for &(u, v) in &arcs {
            code |= 1u64 << (perm[u] * n + perm[v]);
        }
        code
    };
    best = best.min(encode(&perm));
    let mut i = 1;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(encode(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// All orientations of the undirected l-cycle up to digraph isomorphism.
/// Classes isomorphic to a fixed catalog pattern inherit its name; the rest
/// are named `c<l>_o<idx>` in canonical-code order.
pub fn enumerate_orientations(l: usize) -> Vec<Pattern> {
    assert!((3..=8).contains(&l), "orientation enumeration supports 3 ≤ l ≤ 8");
    let mut classes: Vec<(u64, Digraph)> = Vec::new();
    for mask in 0u32..(1 << l) {
        let arcs: Vec<(usize, usize)> = (0..l)
            .map(|i| {
                let j = (i + 1) % l;
                if mask >> i & 1 == 1 {
                    (i, j)
                } else {
                    (j, i)
                }
            })
            .collect();
        let g = Digraph::from_arcs(l, &arcs).unwrap();
        let code = canonical_code(&g);
        if !classes.iter().any(|&(c, _)| c == code) {
            classes.push((code, g));
        }
    }
    classes.sort_by_key(|&(c, _)| c);
    let known: Vec<Pattern> = ["c3_1", "c3_2", "c5_1", "c5_2", "c5_3", "c5_4"]
        .iter()
        .map(|n| cycle_orientation(n).unwrap())
        .collect();
    classes
        .into_iter()
        .enumerate()
        .map(|(idx, (code, g))| {
            let name = known
                .iter()
                .find(|p| p.graph.n() == l && canonical_code(&p.graph) == code)
                .map(|p| p.name.clone())
                .unwrap_or_else(|| format!("c{l}_o{}", idx + 1));
            Pattern::new(name, g)
        })
        .collect()
}

/// Finds an injective embedding of `f` into `d`, or None. `f`-freeness of
/// `d` is equivalent to a None result.
pub fn find_pattern(d: &Digraph, f: &Digraph) -> Option<Vec<usize>> {
    find_embedding_with(d, f, |_, _| true)
}

pub fn contains(d: &Digraph, f: &Digraph) -> bool {
    find_pattern(d, f).is_some()
}

/// Embedding search with an extra per-(pattern vertex, host vertex)
/// admissibility predicate (used to pin sources into a vertex class).
pub fn find_embedding_with(
    d: &Digraph,
    f: &Digraph,
    allowed: impl Fn(usize, usize) -> bool,
) -> Option<Vec<usize>> {
    let q = f.n();
    if q == 0 {
        return Some(Vec::new());
    }
    if q > d.n() {
        return None;
    }

    // Matching order: anchor the highest-degree pattern vertex, then greedily
    // take the vertex with most already-placed neighbors (ties: degree, id).
    let total = |v: usize| f.out_degree(v) + f.in_degree(v);
    let mut order = Vec::with_capacity(q);
    let mut placed = vec![false; q];
    let anchor = (0..q).max_by_key(|&v| (total(v), std::cmp::Reverse(v))).unwrap();
    order.push(anchor);
    placed[anchor] = true;
    for _ in 1..q {
        let next = (0..q)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| {
                let k = f.out_adj(v).iter().chain(f.in_adj(v)).filter(|&&u| placed[u]).count();
                (k, total(v), std::cmp::Reverse(v))
            })
            .unwrap();
        order.push(next);
        placed[next] = true;
    }

    // constraints[i]: arcs between order[i] and earlier pattern vertices,
    // as (earlier position, true = arc from order[i] to that vertex)
    let mut pos = vec![0; q];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut constraints: Vec<Vec<(usize, bool)>> = vec![Vec::new(); q];
    for (x, y) in f.arcs() {
        let (px, py) = (pos[x], pos[y]);
        if px > py {
            constraints[px].push((py, true));
        } else {
            constraints[py].push((px, false));
        }
    }

    let feasible = |pv: usize, hv: usize| {
        d.out_degree(hv) >= f.out_degree(pv)
            && d.in_degree(hv) >= f.in_degree(pv)
            && allowed(pv, hv)
    };

    fn rec(
        d: &Digraph,
        order: &[usize],
        constraints: &[Vec<(usize, bool)>],
        feasible: &dyn Fn(usize, usize) -> bool,
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> bool {
        let i = map.len();
        if i == order.len() {
            return true;
        }
        let pv = order[i];
        let cons = &constraints[i];
        let try_candidate = |hv: usize,
                             map: &mut Vec<usize>,
                             used: &mut Vec<bool>|
         -> bool {
            if used[hv] || !feasible(pv, hv) {
                return false;
            }
            for &(j, from_cur) in cons {
                let other = map[j];
                let ok = if from_cur { d.has_arc(hv, other) } else { d.has_arc(other, hv) };
                if !ok {
                    return false;
                }
            }
            map.push(hv);
            used[hv] = true;
            if rec(d, order, constraints, feasible, map, used) {
                return true;
            }
            map.pop();
            used[hv] = false;
            false
        };
        if cons.is_empty() {
            for hv in 0..d.n() {
                if try_candidate(hv, map, used) {
                    return true;
                }
            }
        } else {
            // enumerate from the tightest placed-neighbor adjacency list
            let (j, from_cur) = *cons
                .iter()
                .min_by_key(|&&(j, from_cur)| {
                    let other = map[j];
                    if from_cur {
                        d.in_degree(other)
                    } else {
                        d.out_degree(other)
                    }
                })
                .unwrap();
            let other = map[j];
            let cands = if from_cur { d.in_adj(other) } else { d.out_adj(other) };
            for &hv in cands {
                if try_candidate(hv, map, used) {
                    return true;
                }
            }
        }
        false
    }

    let mut map = Vec::with_capacity(q);
    let mut used = vec![false; d.n()];
    if rec(d, &order, &constraints, &feasible, &mut map, &mut used) {
        // map is in matching order; invert to pattern-vertex order
        let mut phi = vec![0; q];
        for (i, &hv) in map.iter().enumerate() {
            phi[order[i]] = hv;
        }
        Some(phi)
    } else {
        None
    }
}

/// Checks that φ is an injective arc-preserving embedding of f into d.
pub fn check_embedding(d: &Digraph, f: &Digraph, phi: &[usize]) -> bool {
    if phi.len() != f.n() {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    if !phi.iter().all(|&hv| hv < d.n() && seen.insert(hv)) {
        return false;
    }
    f.arcs().all(|(x, y)| d.has_arc(phi[x], phi[y]))
}

/// Weakly connected component ids (underlying undirected graph).
pub fn component_ids(g: &Digraph) -> Vec<usize> {
    let mut comp = vec![usize::MAX; g.n()];
    let mut next = 0;
    for s in 0..g.n() {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = next;
        while let Some(v) = stack.pop() {
            for &w in g.out_adj(v).iter().chain(g.in_adj(v)) {
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Levels satisfying h(head) = h(tail) + 1 on every arc, normalized to
/// minimum 0 in each weakly connected component; None when the constraints
/// are contradictory (some underlying cycle is unbalanced).
pub fn compute_height_function(g: &Digraph) -> Option<Vec<i64>> {
    let n = g.n();
    let mut h = vec![i64::MIN; n];
    for s in 0..n {
        if h[s] != i64::MIN {
            continue;
        }
        h[s] = 0;
        let mut comp = vec![s];
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in g.out_adj(v) {
                if h[w] == i64::MIN {
                    h[w] = h[v] + 1;
                    comp.push(w);
                    stack.push(w);
                } else if h[w] != h[v] + 1 {
                    return None;
                }
            }
            for &w in g.in_adj(v) {
                if h[w] == i64::MIN {
                    h[w] = h[v] - 1;
                    comp.push(w);
                    stack.push(w);
                } else if h[w] != h[v] - 1 {
                    return None;
                }
            }
        }
        let min = comp.iter().map(|&v| h[v]).min().unwrap();
        for &v in &comp {
            h[v] -= min;
        }
    }
    Some(h)
}

/// Outcome of the grounded-forest test. Either way the witness re-verifies
/// against the input forest via [`GroundedCertificate::verify`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroundedCertificate {
    /// Heights witnessing that in-degree-≥2 vertices are level within each
    /// component (components may be shifted independently).
    Grounded { heights: Vec<i64> },
    /// Two in-degree-≥2 vertices in one component at different levels; the
    /// path between them has unequal forward and backward arc counts.
    NotGrounded { u: usize, v: usize },
}

impl GroundedCertificate {
    pub fn verify(&self, f: &Digraph) -> bool {
        match self {
            GroundedCertificate::Grounded { heights } => {
                if heights.len() != f.n() {
                    return false;
                }
                if !f.arcs().all(|(u, v)| heights[v] == heights[u] + 1) {
                    return false;
                }
                let comp = component_ids(f);
                let mut level: Vec<Option<i64>> = vec![None; f.n()];
                for v in 0..f.n() {
                    if f.in_degree(v) < 2 {
                        continue;
                    }
                    match level[comp[v]] {
                        None => level[comp[v]] = Some(heights[v]),
                        Some(l) if l == heights[v] => {}
                        Some(_) => return false,
                    }
                }
                true
            }
            GroundedCertificate::NotGrounded { u, v } => {
                if *u >= f.n() || *v >= f.n() || u == v {
                    return false;
                }
                if f.in_degree(*u) < 2 || f.in_degree(*v) < 2 {
                    return false;
                }
                // walk the unique undirected path and compare arc directions
                match path_balance(f, *u, *v) {
                    Some((fwd, bwd)) => fwd != bwd,
                    None => false,
                }
            }
        }
    }
}

/// Forward/backward arc counts along the unique undirected path u→v in a
/// forest; None if u and v are in different components.
pub fn path_balance(f: &Digraph, u: usize, v: usize) -> Option<(usize, usize)> {
    let n = f.n();
    // parent[w] = (prev vertex, arc was traversed forward)
    let mut parent: Vec<Option<(usize, bool)>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    visited[u] = true;
    queue.push_back(u);
    while let Some(x) = queue.pop_front() {
        if x == v {
            break;
        }
        for &w in f.out_adj(x) {
            if !visited[w] {
                visited[w] = true;
                parent[w] = Some((x, true));
                queue.push_back(w);
            }
        }
        for &w in f.in_adj(x) {
            if !visited[w] {
                visited[w] = true;
                parent[w] = Some((x, false));
                queue.push_back(w);
            }
        }
    }
    if !visited[v] {
        return None;
    }
    let (mut fwd, mut bwd) = (0, 0);
    let mut cur = v;
    while cur != u {
        let (prev, forward) = parent[cur].expect("path exists");
        if forward {
            fwd += 1;
        } else {
            bwd += 1;
        }
        cur = prev;
    }
    Some((fwd, bwd))
}

/// True when the underlying undirected (multi)graph is acyclic. Digons count
/// as cycles of length 2.
pub fn is_oriented_forest(g: &Digraph) -> Result<(), PatternError> {
    let mut parent: Vec<usize> = (0..g.n()).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (u, v) in g.arcs() {
        if u > v && g.has_arc(v, u) {
            return Err(PatternError::NotAForest(u)); // digon, counted once
        }
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return Err(PatternError::NotAForest(u));
        }
        parent[ru] = rv;
    }
    Ok(())
}

/// Decides groundedness of an oriented forest: grounded iff within each
/// component all in-degree-≥2 vertices share one height.
pub fn is_grounded_forest(f: &Digraph) -> Result<GroundedCertificate, PatternError> {
    is_oriented_forest(f)?;
    let heights = compute_height_function(f).expect("forests always admit heights");
    let comp = component_ids(f);
    let mut first: Vec<Option<usize>> = vec![None; f.n()];
    for v in 0..f.n() {
        if f.in_degree(v) < 2 {
            continue;
        }
        match first[comp[v]] {
            None => first[comp[v]] = Some(v),
            Some(u) if heights[u] == heights[v] => {}
            Some(u) => return Ok(GroundedCertificate::NotGrounded { u, v }),
        }
    }
    Ok(GroundedCertificate::Grounded { heights })
}
