//! Deterministic gadget builders: arborescences, the leaf-to-root bipartite
//! gadget, the layered recursive gadget, its forest-level stacking, and a
//! seeded regular digraph generator.
//!
//! Size prechecks run on u128 arithmetic before anything is allocated, so a
//! too-large request fails with the exact vertex count it would have needed.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::digraph::{Digraph, GraphError};
use crate::patterns::{component_ids, is_oriented_forest};
use crate::rng;

pub const DEFAULT_VERTEX_CAP: u128 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstructError {
    #[error("parameters out of range: {0}")]
    ParameterInfeasible(&'static str),
    #[error("construction needs {needed} vertices, cap is {cap}")]
    TooLarge { needed: u128, cap: u128 },
    #[error("input is not an oriented tree")]
    NotATree,
    #[error("retry budget exceeded while repairing the permutation union")]
    RetryBudgetExceeded,
}

impl From<GraphError> for ConstructError {
    fn from(_: GraphError) -> Self {
        ConstructError::ParameterInfeasible("internal arc validation failed")
    }
}

/// A digraph with a distinguished root and a partition into levels such that
/// every arc descends exactly one level.
#[derive(Debug, Clone)]
pub struct LayeredRooted {
    pub graph: Digraph,
    pub root: usize,
    pub layers: Vec<Vec<usize>>,
    pub bottom: Vec<usize>,
}

impl LayeredRooted {
    /// Structural re-verification: layers partition the vertices, the root
    /// is alone on top, arcs descend one level, everything is reachable from
    /// the root, and the out-degree-zero vertices are exactly the bottom.
    pub fn check(&self) -> Result<(), String> {
        let g = &self.graph;
        let n = g.n();
        let mut level = vec![usize::MAX; n];
        for (i, layer) in self.layers.iter().enumerate() {
            for &v in layer {
                if v >= n {
                    return Err(format!("layer {i} has out-of-range vertex {v}"));
                }
                if level[v] != usize::MAX {
                    return Err(format!("vertex {v} appears in two layers"));
                }
                level[v] = i;
            }
        }
        if level.iter().any(|&l| l == usize::MAX) {
            return Err("layers do not cover all vertices".into());
        }
        if self.layers.first().map(Vec::as_slice) != Some(&[self.root][..]) {
            return Err("top layer is not exactly the root".into());
        }
        for (u, v) in g.arcs() {
            if level[v] != level[u] + 1 {
                return Err(format!("arc ({u}, {v}) skips levels"));
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(v) = stack.pop() {
            for &w in g.out_adj(v) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err("not every vertex is reachable from the root".into());
        }
        let last = self.layers.last().expect("nonempty layers");
        let mut in_bottom = vec![false; n];
        for &v in &self.bottom {
            in_bottom[v] = true;
        }
        let mut sorted_bottom = self.bottom.clone();
        sorted_bottom.sort_unstable();
        let mut sorted_last = last.clone();
        sorted_last.sort_unstable();
        if sorted_bottom != sorted_last {
            return Err("bottom set differs from the last layer".into());
        }
        for v in 0..n {
            if (g.out_degree(v) == 0) != in_bottom[v] {
                return Err(format!("vertex {v} violates the bottom/out-degree-0 match"));
            }
        }
        Ok(())
    }
}

// power-based sizes, all checked: None means "overflows u128"
fn checked_pow(base: u128, exp: u32) -> Option<u128> {
    base.checked_pow(exp)
}

fn arborescence_size(d: u128, l: u32) -> Option<u128> {
    if d == 1 {
        return Some(l as u128 + 1);
    }
    // (d^(l+1) - 1) / (d - 1)
    Some((checked_pow(d, l + 1)? - 1) / (d - 1))
}

/// Smallest l ≥ 0 with k^l ≥ x (k ≥ 2).
fn ceil_log(k: u128, x: u128) -> u32 {
    debug_assert!(k >= 2 && x >= 1);
    let mut l = 0;
    let mut pw: u128 = 1;
    while pw < x {
        pw = pw.saturating_mul(k);
        l += 1;
    }
    l
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

fn require_cap(needed: Option<u128>, cap: u128) -> Result<u128, ConstructError> {
    match needed {
        Some(v) if v <= cap => Ok(v),
        Some(v) => Err(ConstructError::TooLarge { needed: v, cap }),
        None => Err(ConstructError::TooLarge { needed: u128::MAX, cap }),
    }
}

/// Complete d-ary out-tree of height l; leaves form the bottom layer.
pub fn out_arborescence(d: usize, l: usize) -> Result<LayeredRooted, ConstructError> {
    if d < 1 {
        return Err(ConstructError::ParameterInfeasible("branching must be ≥ 1"));
    }
    let n = require_cap(arborescence_size(d as u128, l as u32), DEFAULT_VERTEX_CAP)? as usize;
    let mut layers: Vec<Vec<usize>> = Vec::with_capacity(l + 1);
    let mut arcs = Vec::with_capacity(n.saturating_sub(1));
    let mut next = 0usize;
    let mut width = 1usize;
    for _ in 0..=l {
        layers.push((next..next + width).collect());
        next += width;
        width *= d;
    }
    for li in 0..l {
        for (j, &v) in layers[li].iter().enumerate() {
            for c in 0..d {
                arcs.push((v, layers[li + 1][j * d + c]));
            }
        }
    }
    let graph = Digraph::from_arcs(n, &arcs)?;
    let bottom = layers.last().unwrap().clone();
    Ok(LayeredRooted { graph, root: 0, layers, bottom })
}

/// Output of [`bipartite_gadget`]: the graph plus the root ids (the vertices
/// every directed cycle must pass through) and the tree height used.
#[derive(Debug, Clone)]
pub struct BipartiteGadget {
    pub graph: Digraph,
    pub roots: Vec<usize>,
    pub height: usize,
}

/// Host on which no one-directed K_{a,b}-free subdigraph of min out-degree k
/// survives: d disjoint d-ary out-arborescences of height
/// ⌈log_k(a·binom(d,k))⌉, with an arc from every leaf to every root. Every
/// vertex ends with out-degree exactly d.
pub fn bipartite_gadget(
    a: usize,
    b: usize,
    k: usize,
    d: usize,
) -> Result<BipartiteGadget, ConstructError> {
    bipartite_gadget_opts(a, b, k, d, DEFAULT_VERTEX_CAP, None)
}

pub fn bipartite_gadget_opts(
    a: usize,
    b: usize,
    k: usize,
    d: usize,
    cap: u128,
    height_override: Option<usize>,
) -> Result<BipartiteGadget, ConstructError> {
    if a < 1 || b < 1 {
        return Err(ConstructError::ParameterInfeasible("a and b must be ≥ 1"));
    }
    if k < 2 {
        return Err(ConstructError::ParameterInfeasible("k must be ≥ 2"));
    }
    if k < b {
        return Err(ConstructError::ParameterInfeasible("k must be ≥ b"));
    }
    if d < k {
        return Err(ConstructError::ParameterInfeasible("d must be ≥ k"));
    }
    let l = match height_override {
        Some(0) => {
            return Err(ConstructError::ParameterInfeasible(
                "height override must be ≥ 1 (a root cannot be its own leaf)",
            ))
        }
        Some(l) => l as u32,
        None => {
            let leaves_needed = (a as u128)
                .checked_mul(binomial(d as u128, k as u128).unwrap_or(u128::MAX))
                .unwrap_or(u128::MAX);
            // height 0 would merge leaf and root into a self-arc
            ceil_log(k as u128, leaves_needed).max(1)
        }
    };
    let tree_size = arborescence_size(d as u128, l);
    let total = tree_size.and_then(|s| s.checked_mul(d as u128));
    let total = require_cap(total, cap)? as usize;
    let tree_size = total / d;
    let mut arcs = Vec::new();
    let mut roots = Vec::with_capacity(d);
    let mut leaves = Vec::new();
    for t in 0..d {
        let base = t * tree_size;
        let tree = out_arborescence(d, l as usize)?;
        roots.push(base + tree.root);
        for (u, v) in tree.graph.arcs() {
            arcs.push((base + u, base + v));
        }
        leaves.extend(tree.bottom.iter().map(|&v| base + v));
    }
    for &leaf in &leaves {
        for &root in &roots {
            arcs.push((leaf, root));
        }
    }
    let graph = Digraph::from_arcs(total, &arcs)?;
    Ok(BipartiteGadget { graph, roots, height: l as usize })
}

// Shared allocator for layered builds: ids with levels, arcs on the side.
struct LevelAlloc {
    level: Vec<usize>,
    arcs: Vec<(usize, usize)>,
}

impl LevelAlloc {
    fn new() -> Self {
        LevelAlloc { level: Vec::new(), arcs: Vec::new() }
    }

    fn vertex(&mut self, level: usize) -> usize {
        self.level.push(level);
        self.level.len() - 1
    }
}

fn layered_height(k: usize, d: usize, override_l: Option<usize>) -> u32 {
    match override_l {
        Some(l) => l as u32,
        None => {
            let need = checked_pow(2, d as u32)
                .and_then(|p| p.checked_mul(k as u128))
                .unwrap_or(u128::MAX);
            ceil_log(k as u128, need)
        }
    }
}

fn layered_size(k: usize, d: usize, t: usize, override_l: Option<usize>) -> Option<u128> {
    let mut size: u128 = 1; // t = 1
    if t >= 2 {
        let l = layered_height(k, d, override_l);
        let internal = if d == 1 {
            l as u128
        } else {
            (checked_pow(d as u128, l)? - 1) / (d as u128 - 1)
        };
        let leaves = checked_pow(d as u128, l)?;
        for _ in 2..=t {
            size = internal
                .checked_add(leaves.checked_mul(size)?)?
                .checked_add(d as u128)?;
        }
    }
    Some(size)
}

// Returns (root id, bottom ids, number of levels occupied).
fn build_layered(
    k: usize,
    d: usize,
    t: usize,
    base_level: usize,
    override_l: Option<usize>,
    alloc: &mut LevelAlloc,
) -> (usize, Vec<usize>, usize) {
    if t == 1 {
        let v = alloc.vertex(base_level);
        return (v, vec![v], 1);
    }
    let l = layered_height(k, d, override_l) as usize;
    // internal part of T_0: levels base..base+l, where the deepest slots are
    // the roots of the recursive copies rather than plain leaves
    let mut prev: Vec<usize> = Vec::new();
    let mut root = usize::MAX;
    for li in 0..l {
        let width = d.pow(li as u32);
        let cur: Vec<usize> = (0..width).map(|_| alloc.vertex(base_level + li)).collect();
        if li == 0 {
            root = cur[0];
        } else {
            for (j, &v) in cur.iter().enumerate() {
                alloc.arcs.push((prev[j / d], v));
            }
        }
        prev = cur;
    }
    let mut bottoms = Vec::new();
    let mut copy_depth = 0;
    for j in 0..d.pow(l as u32) {
        let (copy_root, copy_bottom, depth) =
            build_layered(k, d, t - 1, base_level + l, override_l, alloc);
        alloc.arcs.push((prev[j / d], copy_root));
        bottoms.extend(copy_bottom);
        copy_depth = depth;
    }
    let b_level = base_level + l + copy_depth;
    let b: Vec<usize> = (0..d).map(|_| alloc.vertex(b_level)).collect();
    for &u in &bottoms {
        for &v in &b {
            alloc.arcs.push((u, v));
        }
    }
    (root, b, l + copy_depth + 1)
}

/// Rooted layered digraph in which every vertex off the bottom layer has
/// out-degree exactly d, recursing until the layer budget t is spent.
pub fn layered_gadget(k: usize, d: usize, t: usize) -> Result<LayeredRooted, ConstructError> {
    layered_gadget_opts(k, d, t, DEFAULT_VERTEX_CAP, None)
}

pub fn layered_gadget_opts(
    k: usize,
    d: usize,
    t: usize,
    cap: u128,
    height_override: Option<usize>,
) -> Result<LayeredRooted, ConstructError> {
    if k < 2 {
        return Err(ConstructError::ParameterInfeasible("k must be ≥ 2"));
    }
    if d < k {
        return Err(ConstructError::ParameterInfeasible("d must be ≥ k"));
    }
    if t < 1 {
        return Err(ConstructError::ParameterInfeasible("t must be ≥ 1"));
    }
    if height_override == Some(0) {
        return Err(ConstructError::ParameterInfeasible("height override must be ≥ 1"));
    }
    require_cap(layered_size(k, d, t, height_override), cap)?;
    let mut alloc = LevelAlloc::new();
    let (root, bottom, _) = build_layered(k, d, t, 0, height_override, &mut alloc);
    let n = alloc.level.len();
    let graph = Digraph::from_arcs(n, &alloc.arcs)?;
    let depth = alloc.level.iter().copied().max().unwrap_or(0);
    let mut layers: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
    for (v, &lv) in alloc.level.iter().enumerate() {
        layers[lv].push(v);
    }
    Ok(LayeredRooted { graph, root, layers, bottom })
}

/// Output of [`forest_gadget`]: the graph plus the d copy roots.
#[derive(Debug, Clone)]
pub struct ForestGadget {
    pub graph: Digraph,
    pub roots: Vec<usize>,
}

/// Host on which no T-free subdigraph of min out-degree |V(T)| survives
/// (T an oriented tree): d copies of the layered gadget with layer budget
/// 2|V(T)|, every bottom vertex arced to all d roots. The result is
/// d-out-regular everywhere.
pub fn forest_gadget(tree: &Digraph, d: usize) -> Result<ForestGadget, ConstructError> {
    forest_gadget_opts(tree, d, DEFAULT_VERTEX_CAP, None)
}

pub fn forest_gadget_opts(
    tree: &Digraph,
    d: usize,
    cap: u128,
    height_override: Option<usize>,
) -> Result<ForestGadget, ConstructError> {
    let k = tree.n();
    if is_oriented_forest(tree).is_err()
        || k == 0
        || component_ids(tree).iter().any(|&c| c != 0)
    {
        return Err(ConstructError::NotATree);
    }
    if k < 2 {
        return Err(ConstructError::ParameterInfeasible(
            "a single-vertex tree needs no gadget (k must be ≥ 2)",
        ));
    }
    if d < k {
        return Err(ConstructError::ParameterInfeasible("d must be ≥ |V(T)|"));
    }
    let t = 2 * k;
    let per_copy = layered_size(k, d, t, height_override);
    let total = per_copy.and_then(|s| s.checked_mul(d as u128));
    require_cap(total, cap)?;
    let copy = layered_gadget_opts(k, d, t, cap, height_override)?;
    let size = copy.graph.n();
    let mut arcs = Vec::new();
    let mut roots = Vec::with_capacity(d);
    for c in 0..d {
        let base = c * size;
        roots.push(base + copy.root);
        for (u, v) in copy.graph.arcs() {
            arcs.push((base + u, base + v));
        }
    }
    for c in 0..d {
        let base = c * size;
        for &u in &copy.bottom {
            for &root in &roots {
                arcs.push((base + u, root));
            }
        }
    }
    let graph = Digraph::from_arcs(d * size, &arcs)?;
    Ok(ForestGadget { graph, roots })
}

/// Union of d seeded random permutations, locally repaired by transpositions
/// until it is loop-free with all d·n arcs distinct. Every vertex gets
/// in-degree and out-degree exactly d; output is a pure function of the
/// arguments.
pub fn random_regular_digraph(
    n: usize,
    d: usize,
    seed: u64,
) -> Result<Digraph, ConstructError> {
    if d >= n && !(n == 0 && d == 0) {
        return Err(ConstructError::ParameterInfeasible("need d < n"));
    }
    if n as u128 > DEFAULT_VERTEX_CAP {
        return Err(ConstructError::TooLarge { needed: n as u128, cap: DEFAULT_VERTEX_CAP });
    }
    let key = |u: usize, v: usize| ((u as u64) << 32) | v as u64;
    let mut taken: HashSet<u64> = HashSet::with_capacity(n * d);
    let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(n * d);
    for layer in 0..d {
        let mut rng = rng::stream(seed, 0x7265_6700 + layer as u64);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let conflict = |perm: &[usize], i: usize, taken: &HashSet<u64>| {
            perm[i] == i || taken.contains(&key(i, perm[i]))
        };
        let mut work: Vec<usize> =
            (0..n).filter(|&i| conflict(&perm, i, &taken)).collect();
        let mut budget = 200 * n + 1000;
        while let Some(i) = work.pop() {
            if !conflict(&perm, i, &taken) {
                continue;
            }
            if budget == 0 {
                return Err(ConstructError::RetryBudgetExceeded);
            }
            budget -= 1;
            let r = rng.gen_range(0..n);
            if r == i {
                work.push(i);
                continue;
            }
            perm.swap(i, r);
            if conflict(&perm, i, &taken) {
                work.push(i);
            }
            if conflict(&perm, r, &taken) {
                work.push(r);
            }
        }
        for i in 0..n {
            taken.insert(key(i, perm[i]));
            arcs.push((i, perm[i]));
        }
    }
    Ok(Digraph::from_arcs(n, &arcs)?)
}
