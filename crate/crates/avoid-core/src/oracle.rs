//! Exact oracles for small hosts: the largest minimum out-degree over
//! pattern-free sub-digraphs, unavoidability verdicts built on that value,
//! and a bundled re-verification entry point. Capped searches report budget
//! exhaustion as "unknown" rather than guessing.

use serde::Serialize;
use thiserror::Error;

use crate::digraph::Digraph;
use crate::patterns::{self, Pattern};
use crate::reductions::{typed_violations, TypedPartition};
use crate::regular::{layered_violations, LayeredPartition};

#[derive(Debug, Clone, Copy)]
pub struct OracleCaps {
    pub max_vertices: usize,
    pub max_arcs: usize,
    pub max_nodes_expanded: u64,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps { max_vertices: 12, max_arcs: 30, max_nodes_expanded: 10_000_000 }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance exceeds the oracle caps: {0}")]
    CapsExceeded(String),
    #[error("search budget exhausted after {nodes} expanded nodes")]
    BudgetExceeded { nodes: u64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Largest minimum out-degree over nonempty pattern-free sub-digraphs.
    pub value: usize,
    /// A pattern-free sub-digraph attaining the value, on fresh ids.
    pub witness: Digraph,
    /// Original host ids of the witness vertices, ascending.
    pub vertices: Vec<usize>,
    pub nodes_expanded: u64,
}

/// Assignment order for the embedded matcher: breadth-first over underlying
/// components, so every later vertex is constrained by an earlier one.
/// `cons[i]` lists (earlier position e, forward) pairs; forward means the
/// pattern arc runs order[e] → order[i].
fn matcher_order(f: &Digraph) -> (Vec<usize>, Vec<Vec<(usize, bool)>>) {
    let n = f.n();
    let mut und: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v) in f.arcs() {
        und[u].push(v);
        und[v].push(u);
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        order.push(s);
        let mut head = order.len() - 1;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in &und[u] {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
        }
    }
    let mut pos = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        pos[v] = i;
    }
    let mut cons: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for (u, v) in f.arcs() {
        let (pu, pv) = (pos[u], pos[v]);
        if pu < pv {
            cons[pv].push((pu, true));
        } else {
            cons[pu].push((pv, false));
        }
    }
    (order, cons)
}

struct Search<'a> {
    host: &'a Digraph,
    f: &'a Digraph,
    order: Vec<usize>,
    cons: Vec<Vec<(usize, bool)>>,
    out_mask: Vec<u64>,
    arc_of: Vec<(usize, usize)>,
    frozen: Vec<bool>,
    deleted: Vec<bool>,
    best_value: usize,
    best_deleted: Vec<bool>,
    nodes: u64,
    cap_nodes: u64,
}

/// Max over greedy peeling of the current minimum out-degree; equals the
/// largest k whose k-out-core is nonempty.
fn mask_core_value(out_mask: &[u64]) -> usize {
    let n = out_mask.len();
    let mut alive: u64 = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = 0usize;
    while alive != 0 {
        let mut min_v = usize::MAX;
        let mut min_d = u32::MAX;
        for v in 0..n {
            if alive & (1 << v) != 0 {
                let d = (out_mask[v] & alive).count_ones();
                if d < min_d {
                    min_d = d;
                    min_v = v;
                }
            }
        }
        best = best.max(min_d as usize);
        alive &= !(1 << min_v);
    }
    best
}

impl<'a> Search<'a> {
    /// First embedding of the pattern into the current graph, as host arc
    /// ids, or None.
    fn find_copy(&self) -> Option<Vec<usize>> {
        let fk = self.f.n();
        let mut assign = vec![usize::MAX; fk];
        if !self.extend_copy(0, &mut assign, 0) {
            return None;
        }
        Some(
            self.f
                .arcs()
                .map(|(a, b)| {
                    self.host
                        .arc_id(assign[a], assign[b])
                        .expect("embedded arcs exist in the host")
                })
                .collect(),
        )
    }

    fn extend_copy(&self, i: usize, assign: &mut [usize], used: u64) -> bool {
        if i == self.order.len() {
            return true;
        }
        let pv = self.order[i];
        for w in 0..self.host.n() {
            if used & (1 << w) != 0 {
                continue;
            }
            let ok = self.cons[i].iter().all(|&(e, fwd)| {
                let earlier = assign[self.order[e]];
                if fwd {
                    self.out_mask[earlier] & (1 << w) != 0
                } else {
                    self.out_mask[w] & (1 << earlier) != 0
                }
            });
            if !ok {
                continue;
            }
            assign[pv] = w;
            if self.extend_copy(i + 1, assign, used | (1 << w)) {
                return true;
            }
            assign[pv] = usize::MAX;
        }
        false
    }

    fn delete(&mut self, e: usize) {
        let (u, v) = self.arc_of[e];
        self.deleted[e] = true;
        self.out_mask[u] &= !(1 << v);
    }

    fn undelete(&mut self, e: usize) {
        let (u, v) = self.arc_of[e];
        self.deleted[e] = false;
        self.out_mask[u] |= 1 << v;
    }

    fn search(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.cap_nodes {
            return Err(OracleError::BudgetExceeded { nodes: self.nodes });
        }
        // optimistic bound: nothing below this node beats its core value
        let bound = mask_core_value(&self.out_mask);
        if bound <= self.best_value {
            return Ok(());
        }
        let copy = match self.find_copy() {
            None => {
                self.best_value = bound;
                self.best_deleted = self.deleted.clone();
                return Ok(());
            }
            Some(c) => c,
        };
        let mut cands: Vec<usize> =
            copy.iter().copied().filter(|&e| !self.frozen[e]).collect();
        if cands.is_empty() {
            // the copy is pinned by frozen arcs: no pattern-free subset here
            return Ok(());
        }
        // hit arcs incident to the lowest-out-degree vertex first
        cands.sort_by_key(|&e| {
            let (u, v) = self.arc_of[e];
            let du = self.out_mask[u].count_ones();
            let dv = self.out_mask[v].count_ones();
            (du.min(dv), e)
        });
        let mut result = Ok(());
        let mut frozen_here = Vec::with_capacity(cands.len());
        for &e in &cands {
            self.delete(e);
            result = self.search();
            self.undelete(e);
            if result.is_err() {
                break;
            }
            self.frozen[e] = true;
            frozen_here.push(e);
        }
        for e in frozen_here {
            self.frozen[e] = false;
        }
        result
    }
}

/// Exact maximum, over nonempty pattern-free sub-digraphs of `d` (any vertex
/// subset, any arc subset), of the minimum out-degree, with a witness.
/// Sub-digraphs are canonicalized to arc subsets: for a fixed arc set the
/// best vertex set is its out-core, and dropping zero-out-degree vertices
/// never hurts. That canonicalization needs every pattern vertex to touch an
/// arc; arc-less patterns get the direct vertex-count treatment and mixed
/// ones are rejected. Never wrong: budget exhaustion is an error, not a
/// guess.
pub fn max_f_free_min_outdegree(
    d: &Digraph,
    f: &Digraph,
    caps: &OracleCaps,
) -> Result<OracleResult, OracleError> {
    if d.n() == 0 {
        return Err(OracleError::InvalidInput("empty host".into()));
    }
    if f.n() == 0 {
        return Err(OracleError::InvalidInput("empty pattern".into()));
    }
    if d.n() > caps.max_vertices.min(64) {
        return Err(OracleError::CapsExceeded(format!(
            "host has {} vertices, cap is {}",
            d.n(),
            caps.max_vertices.min(64)
        )));
    }
    if d.m() > caps.max_arcs {
        return Err(OracleError::CapsExceeded(format!(
            "host has {} arcs, cap is {}",
            d.m(),
            caps.max_arcs
        )));
    }
    if f.m() == 0 {
        return arcless_pattern_value(d, f);
    }
    if (0..f.n()).any(|v| f.out_degree(v) + f.in_degree(v) == 0) {
        return Err(OracleError::InvalidInput(
            "pattern mixes arcs with isolated vertices".into(),
        ));
    }
    let mut out_mask = vec![0u64; d.n()];
    let mut arc_of = Vec::with_capacity(d.m());
    for (u, v) in d.arcs() {
        out_mask[u] |= 1 << v;
        arc_of.push((u, v));
    }
    let (order, cons) = matcher_order(f);
    let mut s = Search {
        host: d,
        f,
        order,
        cons,
        out_mask,
        arc_of,
        frozen: vec![false; d.m()],
        deleted: vec![false; d.m()],
        best_value: 0,
        best_deleted: vec![true; d.m()],
        nodes: 0,
        cap_nodes: caps.max_nodes_expanded,
    };
    s.search()?;
    let (value, nodes) = (s.best_value, s.nodes);
    let best_deleted = s.best_deleted;
    let mut id = 0;
    let kept = d.spanning_subgraph(|_, _| {
        let keep = !best_deleted[id];
        id += 1;
        keep
    });
    let (witness, vertices) = if value == 0 {
        d.induced_subgraph(&[0])
    } else {
        kept.out_core(value)
    };
    assert_eq!(witness.min_out_degree(), value, "witness misses the value");
    assert!(
        patterns::find_pattern(&witness, f).is_none(),
        "witness embeds the pattern"
    );
    Ok(OracleResult { value, witness, vertices, nodes_expanded: nodes })
}

/// For patterns with no arcs, freeness only limits the vertex count: the
/// best sub-digraph keeps every arc of some vertex set smaller than the
/// pattern.
fn arcless_pattern_value(d: &Digraph, f: &Digraph) -> Result<OracleResult, OracleError> {
    if f.n() == 1 {
        return Err(OracleError::InvalidInput(
            "a single-vertex pattern embeds in every nonempty digraph".into(),
        ));
    }
    let n = d.n();
    let mut out_mask = vec![0u64; n];
    for (u, v) in d.arcs() {
        out_mask[u] |= 1 << v;
    }
    let mut best = 0usize;
    let mut best_set: u64 = 1;
    for w in 1u64..(1 << n) {
        if (w.count_ones() as usize) >= f.n() {
            continue;
        }
        let mut min_out = usize::MAX;
        let mut v = w;
        while v != 0 {
            let b = v.trailing_zeros() as usize;
            v &= v - 1;
            min_out = min_out.min((out_mask[b] & w).count_ones() as usize);
        }
        if min_out > best {
            best = min_out;
            best_set = w;
        }
    }
    let verts: Vec<usize> = (0..n).filter(|&v| best_set & (1 << v) != 0).collect();
    let (witness, vertices) = d.induced_subgraph(&verts);
    Ok(OracleResult {
        value: best,
        witness,
        vertices,
        nodes_expanded: 1 << n,
    })
}

/// Outcome of an unavoidability probe at target degree k.
#[derive(Debug, Clone)]
pub enum Verdict {
    /// Every sub-digraph of the host with min out-degree ≥ k embeds the
    /// pattern: the host is a lower-bound witness at k.
    UnavoidableWitness { value: usize },
    /// A pattern-free sub-digraph with min out-degree ≥ k exists.
    AvoidableHere { value: usize, witness: Digraph, vertices: Vec<usize> },
    /// The search gave up inside its caps; no claim either way.
    Unknown { reason: String },
}

/// Decides whether `d` certifies that every pattern-free sub-digraph drops
/// below min out-degree k.
pub fn check_unavoidable(d: &Digraph, f: &Pattern, k: usize, caps: &OracleCaps) -> Verdict {
    match max_f_free_min_outdegree(d, &f.graph, caps) {
        Ok(r) if r.value >= k => Verdict::AvoidableHere {
            value: r.value,
            witness: r.witness,
            vertices: r.vertices,
        },
        Ok(r) => Verdict::UnavoidableWitness { value: r.value },
        Err(e) => Verdict::Unknown { reason: e.to_string() },
    }
}

/// What a digraph is expected to satisfy: a degree floor, pattern freeness,
/// and optionally the layered or typed partition invariants.
#[derive(Debug, Clone, Default)]
pub struct VerificationSpec {
    pub min_out_degree: usize,
    pub forbidden: Vec<Pattern>,
    pub layered: Option<LayeredPartition>,
    pub typed: Option<TypedPartition>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    /// Counterexample or violation summary when the check fails.
    pub detail: Option<String>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct VerifyReport {
    pub pass: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Runs every requested check exhaustively and reports them one by one;
/// pure, so re-running on the same input gives the same report.
pub fn verify(d: &Digraph, spec: &VerificationSpec) -> VerifyReport {
    let mut checks = Vec::new();
    let argmin = (0..d.n()).min_by_key(|&v| d.out_degree(v));
    let min_out = argmin.map_or(0, |v| d.out_degree(v));
    checks.push(CheckOutcome {
        name: format!("min-out-degree ≥ {}", spec.min_out_degree),
        pass: min_out >= spec.min_out_degree,
        detail: if min_out >= spec.min_out_degree {
            None
        } else {
            argmin.map(|v| format!("vertex {v} has out-degree {}", d.out_degree(v)))
        },
    });
    for f in &spec.forbidden {
        let hit = patterns::find_pattern(d, &f.graph);
        checks.push(CheckOutcome {
            name: format!("forbids {}", f.name),
            pass: hit.is_none(),
            detail: hit.map(|phi| format!("embedding at {phi:?}")),
        });
    }
    if let Some(lp) = &spec.layered {
        let viols = layered_violations(d, lp);
        checks.push(CheckOutcome {
            name: "layered partition".into(),
            pass: viols.is_empty(),
            detail: if viols.is_empty() { None } else { Some(viols.join("; ")) },
        });
    }
    if let Some(tp) = &spec.typed {
        let viols = typed_violations(d, tp);
        checks.push(CheckOutcome {
            name: "typed partition".into(),
            pass: viols.is_empty(),
            detail: if viols.is_empty() { None } else { Some(viols.join("; ")) },
        });
    }
    VerifyReport { pass: checks.iter().all(|c| c.pass), checks }
}
