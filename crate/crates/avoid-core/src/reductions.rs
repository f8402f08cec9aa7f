//! Arc-deletion reductions: majority coloring, tripartite restriction,
//! s-typing, directed-cycle avoidance, and the ordered-sampling procedure
//! that removes every copy of the chorded 5-cycle `c5_2` whose source lies
//! in a prescribed class, composed into one pipeline.
//!
//! Every operation re-verifies its postconditions on the actual output
//! before returning; randomized search failures surface as errors instead
//! of unverified results.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::digraph::{degeneracy_ordering, Digraph, MultiDigraph};
use crate::patterns::{cycle_orientation, find_embedding_with};
use crate::resample::{
    mt_resample, BadEvent, BadEventLabel, EventKind, ResampleConfig, ResampleError,
};
use crate::rng;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("parameters out of range: {0}")]
    ParameterInfeasible(String),
    #[error("coloring violates the majority condition at vertex {0}")]
    ColoringInvalid(usize),
    #[error("input is not tripartite under the given partition: {0}")]
    NotTripartite(String),
    #[error("the prescribed vertex set is not independent (arc within it at {0})")]
    VNotIndependent(usize),
    #[error("could not keep {k} independent out-arcs at vertex {vertex}")]
    RestrictionInfeasible { vertex: usize, k: usize },
    #[error(transparent)]
    Budget(#[from] ResampleError),
}

/// Whether parameter gates demand the full proof inequalities or only the
/// floor that keeps the randomized search meaningful (every output is
/// re-verified either way).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateMode {
    /// d_trim·p/2 must cover the proof's demand for the target degree.
    Strict,
    /// d_trim·p must reach the target degree; thresholds floor at it.
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Class {
    A,
    B,
    C,
}

pub const CLASSES: [Class; 3] = [Class::A, Class::B, Class::C];

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Class::A => write!(f, "A"),
            Class::B => write!(f, "B"),
            Class::C => write!(f, "C"),
        }
    }
}

/// A 3-partition with, for each vertex, a length-s word constraining its
/// forward reachable sets: everything reachable in exactly i steps lies in
/// the class at position i of the word.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypedPartition {
    pub classes: Vec<Class>,
    pub s: usize,
    pub types: Vec<Vec<Class>>,
}

impl TypedPartition {
    pub fn untyped(classes: Vec<Class>) -> Self {
        let n = classes.len();
        TypedPartition { classes, s: 0, types: vec![Vec::new(); n] }
    }
}

/// Violations of the typed-partition invariants on `d`, as messages; empty
/// means the partition is a valid witness. The per-arc word-stability check
/// is equivalent to the reachable-set containments.
pub fn typed_violations(d: &Digraph, tp: &TypedPartition) -> Vec<String> {
    let mut out = Vec::new();
    if tp.classes.len() != d.n() || tp.types.len() != d.n() {
        out.push("partition size differs from vertex count".into());
        return out;
    }
    for (v, t) in tp.types.iter().enumerate() {
        if t.len() != tp.s {
            out.push(format!("type word of {v} has wrong length"));
            return out;
        }
    }
    for (u, v) in d.arcs() {
        if tp.classes[u] == tp.classes[v] {
            out.push(format!("arc ({u}, {v}) stays inside class {}", tp.classes[u]));
        }
        if tp.s >= 1 && tp.types[u][0] != tp.classes[v] {
            out.push(format!("arc ({u}, {v}) leaves the class of {u}'s type word"));
        }
        for j in 1..tp.s {
            if tp.types[u][j] != tp.types[v][j - 1] {
                out.push(format!("type words of {u} and {v} disagree at {j}"));
            }
        }
        if out.len() > 20 {
            out.push("...".into());
            return out;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StageStats {
    pub rounds: u64,
    pub restarts: u32,
}

/// Per-stage summary, serializable for sidecar reports.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub stage: String,
    pub n: usize,
    pub m_before: usize,
    pub m: usize,
    pub min_out_before: usize,
    pub min_out_after: usize,
    pub rounds: u64,
    pub restarts: u32,
    pub seed: u64,
    pub verified: bool,
    pub violations: Vec<String>,
    pub params: serde_json::Value,
}

impl ReductionReport {
    pub fn new(
        stage: &str,
        before: &Digraph,
        after: &Digraph,
        stats: StageStats,
        seed: u64,
        violations: Vec<String>,
        params: serde_json::Value,
    ) -> Self {
        ReductionReport {
            stage: stage.into(),
            n: after.n(),
            m_before: before.m(),
            m: after.m(),
            min_out_before: before.min_out_degree(),
            min_out_after: after.min_out_degree(),
            rounds: stats.rounds,
            restarts: stats.restarts,
            seed,
            verified: violations.is_empty(),
            violations,
            params,
        }
    }
}

/// Every vertex keeps a seeded random subset of `d_trim` out-arcs (all of
/// them when it has fewer).
pub fn trim_out_arcs(d: &Digraph, d_trim: usize, seed: u64) -> Digraph {
    let mut keep = vec![false; d.m()];
    for v in 0..d.n() {
        let deg = d.out_degree(v);
        let base = d.first_arc_id(v);
        if deg <= d_trim {
            for id in base..base + deg {
                keep[id] = true;
            }
        } else {
            let mut r = rng::stream(seed, 0x7213_0000 ^ v as u64);
            for i in rand::seq::index::sample(&mut r, deg, d_trim) {
                keep[base + i] = true;
            }
        }
    }
    let mut id = 0;
    d.spanning_subgraph(|_, _| {
        let k = keep[id];
        id += 1;
        k
    })
}

// ---------------------------------------------------------------------------
// majority coloring

/// Vertices violating "at least 1/colors of the out-neighbors are colored
/// differently", i.e. #differently-colored < ⌈d⁺(v)/colors⌉.
pub fn coloring_violations(d: &Digraph, coloring: &[Class], colors: usize) -> Vec<usize> {
    (0..d.n())
        .filter(|&v| {
            let diff = d.out_adj(v).iter().filter(|&&w| coloring[w] != coloring[v]).count();
            diff < d.out_degree(v).div_ceil(colors)
        })
        .collect()
}

/// Colors every vertex so that at least a `1/colors` fraction of its
/// out-neighbors get a different color, by seeded recoloring to the least
/// frequent color among out-neighbors, with restarts. The returned coloring
/// is always re-verified.
pub fn majority_coloring(
    d: &Digraph,
    colors: usize,
    cfg: &ResampleConfig,
) -> Result<Vec<Class>, ReduceError> {
    assert!(colors == 2 || colors == 3, "2 or 3 colors supported");
    cfg.validate();
    let palette = &CLASSES[..colors];
    let threshold = |v: usize| d.out_degree(v).div_ceil(colors);
    let mut total_recolors = 0u64;
    for attempt in 0..cfg.restarts {
        let init = rng::derive(cfg.seed, 0xC010_0000 + attempt as u64);
        let mut coloring: Vec<Class> = (0..d.n())
            .map(|v| palette[(rng::keyed_u64(init, v as u64) % colors as u64) as usize])
            .collect();
        let violated = |v: usize, coloring: &[Class]| {
            let diff = d.out_adj(v).iter().filter(|&&w| coloring[w] != coloring[v]).count();
            diff < threshold(v)
        };
        let mut work: Vec<usize> = (0..d.n()).rev().filter(|&v| violated(v, &coloring)).collect();
        let mut queued = vec![false; d.n()];
        for &v in &work {
            queued[v] = true;
        }
        let mut budget = cfg.max_rounds;
        while let Some(v) = work.pop() {
            queued[v] = false;
            if !violated(v, &coloring) {
                continue;
            }
            if budget == 0 {
                break;
            }
            budget -= 1;
            total_recolors += 1;
            // least frequent color among out-neighbors always satisfies v
            let mut freq = [0usize; 3];
            for &w in d.out_adj(v) {
                freq[coloring[w] as usize] += 1;
            }
            coloring[v] = *palette
                .iter()
                .min_by_key(|&&c| (freq[c as usize], c as usize))
                .unwrap();
            for &u in d.in_adj(v).iter().chain(std::iter::once(&v)) {
                if !queued[u] && violated(u, &coloring) {
                    queued[u] = true;
                    work.push(u);
                }
            }
        }
        if coloring_violations(d, &coloring, colors).is_empty() {
            return Ok(coloring);
        }
    }
    let surviving: Vec<_> = {
        // report the last attempt's stuck vertices
        let init = rng::derive(cfg.seed, 0xC010_0000 + (cfg.restarts - 1) as u64);
        let coloring: Vec<Class> = (0..d.n())
            .map(|v| palette[(rng::keyed_u64(init, v as u64) % colors as u64) as usize])
            .collect();
        coloring_violations(d, &coloring, colors)
            .into_iter()
            .map(|v| (BadEventLabel::DegreeOutOfRange, v as u64))
            .collect()
    };
    Err(ResampleError::BudgetExceeded { surviving, rounds: total_recolors }.into())
}

pub fn majority_3_coloring(d: &Digraph, cfg: &ResampleConfig) -> Result<Vec<Class>, ReduceError> {
    majority_coloring(d, 3, cfg)
}

/// Keeps exactly the arcs whose endpoints differ in color. Requires a valid
/// majority coloring, which makes the output minimum out-degree at least a
/// third of the input's.
pub fn tripartite_restrict(
    d: &Digraph,
    coloring: &[Class],
) -> Result<(Digraph, TypedPartition), ReduceError> {
    assert_eq!(coloring.len(), d.n());
    if let Some(&v) = coloring_violations(d, coloring, 3).first() {
        return Err(ReduceError::ColoringInvalid(v));
    }
    let out = d.spanning_subgraph(|u, v| coloring[u] != coloring[v]);
    debug_assert!(out.min_out_degree() >= d.min_out_degree().div_ceil(3));
    Ok((out, TypedPartition::untyped(coloring.to_vec())))
}

// ---------------------------------------------------------------------------
// s-typing

/// Refines a tripartite digraph into an s-typed spanning subdigraph by
/// repeatedly keeping, per vertex, the out-arcs into the most common
/// (class, word) group. Keeps at least a third of each out-neighborhood per
/// round, so the minimum out-degree falls by at most 3^s overall.
pub fn extract_typed(
    d: &Digraph,
    tp: &TypedPartition,
    s: usize,
) -> Result<(Digraph, TypedPartition), ReduceError> {
    if tp.classes.len() != d.n() {
        return Err(ReduceError::NotTripartite("partition size mismatch".into()));
    }
    if let Some((u, v)) = d.arcs().find(|&(u, v)| tp.classes[u] == tp.classes[v]) {
        return Err(ReduceError::NotTripartite(format!(
            "arc ({u}, {v}) stays inside class {}",
            tp.classes[u]
        )));
    }
    let classes = tp.classes.clone();
    let mut cur = d.clone();
    let mut words: Vec<Vec<Class>> = vec![Vec::new(); d.n()];
    for _round in 0..s {
        let mut keep_head_word: Vec<Option<(Class, Vec<Class>)>> = vec![None; d.n()];
        for v in 0..cur.n() {
            if cur.out_degree(v) == 0 {
                continue;
            }
            // group out-neighbors by (class, current word); at most three
            // groups exist, so the majority group keeps ≥ 1/3 of the arcs
            let mut groups: Vec<((Class, &Vec<Class>), usize)> = Vec::new();
            for &w in cur.out_adj(v) {
                let key = (classes[w], &words[w]);
                match groups.iter_mut().find(|(k, _)| *k == key) {
                    Some((_, c)) => *c += 1,
                    None => groups.push((key, 1)),
                }
            }
            let ((class, word), _) = groups
                .iter()
                .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
                .unwrap();
            keep_head_word[v] = Some((*class, (*word).clone()));
        }
        cur = cur.spanning_subgraph(|u, w| {
            let (class, word) = keep_head_word[u].as_ref().unwrap();
            classes[w] == *class && words[w] == *word
        });
        for v in 0..d.n() {
            match keep_head_word[v].take() {
                Some((class, mut word)) => {
                    word.insert(0, class);
                    words[v] = word;
                }
                // no out-arcs: any word extension is vacuously valid, and
                // appending keeps the existing prefix stable for in-neighbors
                None => words[v].push(Class::A),
            }
        }
    }
    let out_tp = TypedPartition { classes, s, types: words };
    let violations = typed_violations(&cur, &out_tp);
    if !violations.is_empty() {
        return Err(ReduceError::NotTripartite(violations.join("; ")));
    }
    let want = d.min_out_degree().div_ceil(3usize.pow(s as u32));
    debug_assert!(cur.min_out_degree() >= want);
    Ok((cur, out_tp))
}

/// Vertices whose type word starts with `class`, i.e. whose entire
/// out-neighborhood lies in it. Out-degree-zero vertices are excluded (their
/// word is unconstrained and they cannot source any pattern).
pub fn n1_minus(d: &Digraph, tp: &TypedPartition, class: Class) -> Vec<usize> {
    assert!(tp.s >= 1, "need a 1-typed partition");
    (0..d.n())
        .filter(|&v| d.out_degree(v) > 0 && tp.types[v][0] == class)
        .collect()
}

// ---------------------------------------------------------------------------
// directed-cycle avoidance

/// All directed cycles of `d` whose length is in `lengths`, each as the list
/// of its arc ids; every cycle is found exactly once (rooted at its minimum
/// vertex). Fails when more than `cap` cycles exist.
pub fn directed_cycles_up_to(
    d: &Digraph,
    lengths: &[usize],
    cap: usize,
) -> Result<Vec<Vec<usize>>, ReduceError> {
    let mut mask: u32 = 0;
    for &l in lengths {
        if !(2..=16).contains(&l) {
            return Err(ReduceError::ParameterInfeasible(format!(
                "cycle length {l} out of the supported range 2..=16"
            )));
        }
        mask |= 1 << l;
    }
    let maxl = lengths.iter().copied().max().unwrap_or(0);
    let mut out = Vec::new();
    let mut on_path = vec![false; d.n()];

    fn dfs(
        d: &Digraph,
        root: usize,
        v: usize,
        depth: usize,
        maxl: usize,
        mask: u32,
        on_path: &mut Vec<bool>,
        path_arcs: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> Result<(), ReduceError> {
        if mask >> (depth + 1) & 1 == 1 {
            if let Some(id) = d.arc_id(v, root) {
                if out.len() == cap {
                    return Err(ReduceError::ParameterInfeasible(format!(
                        "more than {cap} directed cycles"
                    )));
                }
                let mut cycle = path_arcs.clone();
                cycle.push(id);
                out.push(cycle);
            }
        }
        if depth + 1 >= maxl {
            return Ok(());
        }
        let base = d.first_arc_id(v);
        for (i, &w) in d.out_adj(v).iter().enumerate() {
            if w > root && !on_path[w] {
                on_path[w] = true;
                path_arcs.push(base + i);
                dfs(d, root, w, depth + 1, maxl, mask, on_path, path_arcs, out, cap)?;
                path_arcs.pop();
                on_path[w] = false;
            }
        }
        Ok(())
    }

    for root in 0..d.n() {
        on_path[root] = true;
        let mut path_arcs = Vec::with_capacity(maxl);
        dfs(d, root, root, 0, maxl, mask, &mut on_path, &mut path_arcs, &mut out, cap)?;
        on_path[root] = false;
    }
    Ok(out)
}

const CYCLE_CAP: usize = 20_000_000;

/// Trims to `cfg.d_trim` out-arcs, then deletes arcs so that no directed
/// cycle with length in `lengths` survives while every vertex keeps at
/// least k out-arcs. The output is re-verified by independent enumeration.
pub fn avoid_directed_cycles(
    d: &Digraph,
    lengths: &[usize],
    k: usize,
    cfg: &ResampleConfig,
    mode: GateMode,
) -> Result<(Digraph, StageStats), ReduceError> {
    cfg.validate();
    if k < 1 {
        return Err(ReduceError::ParameterInfeasible("k must be ≥ 1".into()));
    }
    if d.n() == 0 {
        return Ok((d.clone(), StageStats::default()));
    }
    if d.min_out_degree() < cfg.d_trim {
        return Err(ReduceError::ParameterInfeasible(format!(
            "minimum out-degree {} below d_trim {}",
            d.min_out_degree(),
            cfg.d_trim
        )));
    }
    let expect = cfg.d_trim as f64 * cfg.p;
    let ok = match mode {
        GateMode::Strict => expect / 2.0 >= k as f64,
        GateMode::Calibrated => expect >= k as f64,
    };
    if !ok {
        return Err(ReduceError::ParameterInfeasible(format!(
            "d_trim·p = {expect} too small for target degree {k}"
        )));
    }
    let threshold = (((expect / 2.0).ceil() as usize).max(k)).min(cfg.d_trim);

    let trimmed = trim_out_arcs(d, cfg.d_trim, rng::derive(cfg.seed, 0xD1C0));
    let cycles = directed_cycles_up_to(&trimmed, lengths, CYCLE_CAP)?;
    let mut events = Vec::with_capacity(cycles.len() + trimmed.n());
    for (i, cyc) in cycles.iter().enumerate() {
        events.push(BadEvent {
            label: BadEventLabel::CycleSurvives,
            scope: i as u64,
            kind: EventKind::AllVarsKept { vars: cyc.iter().map(|&a| a as u32).collect() },
        });
    }
    for v in 0..trimmed.n() {
        let base = trimmed.first_arc_id(v);
        let vars: Vec<u32> = (0..trimmed.out_degree(v)).map(|i| (base + i) as u32).collect();
        events.push(BadEvent {
            label: BadEventLabel::OutDegreeLow,
            scope: cycles.len() as u64 + v as u64,
            kind: EventKind::KeptBelow { vars, threshold },
        });
    }
    let outcome = mt_resample(trimmed.m(), &events, cfg, None)?;
    let mut id = 0;
    let output = trimmed.spanning_subgraph(|_, _| {
        let keep = outcome.bits[id];
        id += 1;
        keep
    });

    let mut violations = Vec::new();
    if output.min_out_degree() < k {
        violations.push(format!("minimum out-degree {} < {k}", output.min_out_degree()));
    }
    let survivors = directed_cycles_up_to(&output, lengths, CYCLE_CAP)?;
    if !survivors.is_empty() {
        violations.push(format!("{} forbidden cycles survive", survivors.len()));
    }
    if !violations.is_empty() {
        // the events encode exactly these conditions, so this is unreachable
        // unless the engine and the verifier disagree
        return Err(ResampleError::BudgetExceeded {
            surviving: violations
                .iter()
                .map(|_| (BadEventLabel::CycleSurvives, 0))
                .collect(),
            rounds: outcome.rounds,
        }
        .into());
    }
    Ok((
        output,
        StageStats { rounds: outcome.rounds, restarts: outcome.restarts_used },
    ))
}

// ---------------------------------------------------------------------------
// auxiliary multidigraph H

/// The auxiliary multidigraph on `v_set`: one arc (u, v) tagged w for every
/// pair u, v with a common out-neighbor and every out-arc (u, w) from which
/// a directed path of length 2 reaches v. Vertices of the result are
/// indices into the sorted `v_set` (returned alongside); tags are original
/// vertex ids.
pub fn build_aux_h(
    d: &Digraph,
    v_set: &[usize],
) -> Result<(MultiDigraph, Vec<usize>), ReduceError> {
    let mut vs: Vec<usize> = v_set.to_vec();
    vs.sort_unstable();
    vs.dedup();
    let mut v_index = vec![usize::MAX; d.n()];
    for (i, &v) in vs.iter().enumerate() {
        v_index[v] = i;
    }
    for &u in &vs {
        for &w in d.out_adj(u) {
            if v_index[w] != usize::MAX {
                return Err(ReduceError::VNotIndependent(u));
            }
        }
    }

    // pairs (u, v) of members with a common out-neighbor
    let mut partners: Vec<HashSet<usize>> = vec![HashSet::new(); vs.len()];
    let mut from_v: Vec<Vec<usize>> = vec![Vec::new(); d.n()];
    for (i, &u) in vs.iter().enumerate() {
        for &y in d.out_adj(u) {
            from_v[y].push(i);
        }
    }
    for list in &from_v {
        for &a in list {
            for &b in list {
                if a != b {
                    partners[b].insert(a);
                }
            }
        }
    }

    // stamp[w] == v marks w as the start of a 2-path into v
    let mut stamp = vec![usize::MAX; d.n()];
    let mut arcs: Vec<(usize, usize, usize)> = Vec::new();
    for (vi, &v) in vs.iter().enumerate() {
        if partners[vi].is_empty() {
            continue;
        }
        for &x in d.in_adj(v) {
            for &w in d.in_adj(x) {
                stamp[w] = v;
            }
        }
        let mut us: Vec<usize> = partners[vi].iter().copied().collect();
        us.sort_unstable();
        for ui in us {
            let u = vs[ui];
            for &w in d.out_adj(u) {
                if stamp[w] == v {
                    arcs.push((ui, vi, w));
                }
            }
        }
    }
    let h = MultiDigraph::from_arcs(vs.len(), arcs).expect("indices are in range");
    Ok((h, vs))
}

// ---------------------------------------------------------------------------
// ordered sampling (the claim step)

#[derive(Debug, Clone)]
pub struct ClaimResult {
    /// Spanning subdigraph: members of V keep a sampled large out-degree,
    /// everyone else keeps exactly k out-arcs.
    pub f: Digraph,
    /// The members of V in processing order.
    pub ordering: Vec<usize>,
    pub stats: StageStats,
}

fn claim_threshold(k: usize, cfg: &ResampleConfig, mode: GateMode) -> Result<usize, ReduceError> {
    let expect = cfg.d_trim as f64 * cfg.p;
    let demand = 3 * k.pow(4);
    match mode {
        GateMode::Strict => {
            if expect / 2.0 < demand as f64 {
                return Err(ReduceError::ParameterInfeasible(format!(
                    "d_trim·p/2 = {} below 3k⁴ = {demand}",
                    expect / 2.0
                )));
            }
            Ok((expect / 2.0).ceil() as usize)
        }
        GateMode::Calibrated => {
            if expect < k as f64 {
                return Err(ReduceError::ParameterInfeasible(format!(
                    "d_trim·p = {expect} below k = {k}"
                )));
            }
            Ok(((expect / 2.0).ceil() as usize).max(k))
        }
    }
}

/// Trims, fixes k out-arcs outside V, samples the out-arcs of V, and orders
/// V by peeling the auxiliary multidigraph, so that every member ends up
/// with a large sampled out-degree and at most 2k earlier in-neighbors in
/// the auxiliary graph of the result. All postconditions are re-verified on
/// the returned subdigraph.
pub fn claim_order_and_sample(
    d: &Digraph,
    v_set: &[usize],
    k: usize,
    cfg: &ResampleConfig,
    mode: GateMode,
) -> Result<ClaimResult, ReduceError> {
    cfg.validate();
    if k < 1 || cfg.d_trim < k {
        return Err(ReduceError::ParameterInfeasible("need d_trim ≥ k ≥ 1".into()));
    }
    if d.min_out_degree() < cfg.d_trim {
        return Err(ReduceError::ParameterInfeasible(format!(
            "minimum out-degree {} below d_trim {}",
            d.min_out_degree(),
            cfg.d_trim
        )));
    }
    let threshold = claim_threshold(k, cfg, mode)?;

    let mut vs: Vec<usize> = v_set.to_vec();
    vs.sort_unstable();
    vs.dedup();
    let in_v = {
        let mut m = vec![false; d.n()];
        for &v in &vs {
            m[v] = true;
        }
        m
    };

    let mut total_rounds = 0u64;
    let mut last_err: Option<ReduceError> = None;
    for attempt in 0..cfg.restarts {
        let trim_seed = rng::derive(cfg.seed, 0x7121_0000 + attempt as u64);
        let f0 = trim_out_arcs(d, cfg.d_trim, trim_seed);
        // outside V: keep the k smallest out-neighbors, deterministically
        let f1 = f0.spanning_subgraph(|u, w| in_v[u] || f0.out_adj(u).binary_search(&w).unwrap() < k);

        let (h, hvs) = build_aux_h(&f1, &vs)?;
        debug_assert_eq!(hvs, vs);
        let ordering_idx = degeneracy_ordering(&h).order;
        let mut pos = vec![usize::MAX; vs.len()];
        for (i, &vi) in ordering_idx.iter().enumerate() {
            pos[vi] = i;
        }

        // sampling variables: the f0 out-arcs of members of V
        let mut var_of_arc: HashMap<(usize, usize), u32> = HashMap::new();
        let mut var_arcs: Vec<(usize, usize)> = Vec::new();
        for &u in &vs {
            for &w in f0.out_adj(u) {
                var_of_arc.insert((u, w), var_arcs.len() as u32);
                var_arcs.push((u, w));
            }
        }

        // per ordering position i: earlier potential in-neighbors j with,
        // per j, the tag variables and the common-out-neighbor var pairs
        let mut incoming: Vec<Vec<(usize, Vec<u32>, Vec<(u32, u32)>)>> =
            vec![Vec::new(); vs.len()];
        for (i, &vi_idx) in ordering_idx.iter().enumerate() {
            let v_orig = vs[vi_idx];
            let mut tails: HashMap<usize, Vec<u32>> = HashMap::new();
            for &(uj, w) in h.in_arcs(vi_idx) {
                if pos[uj] < i {
                    tails
                        .entry(uj)
                        .or_default()
                        .push(var_of_arc[&(vs[uj], w)]);
                }
            }
            let mut tails: Vec<(usize, Vec<u32>)> = tails.into_iter().collect();
            tails.sort_unstable_by_key(|&(j, _)| j);
            for (uj, tag_vars) in tails {
                let u_orig = vs[uj];
                let mut commons = Vec::new();
                for &y in f0.out_adj(u_orig) {
                    if let Some(&b) = var_of_arc.get(&(v_orig, y)) {
                        commons.push((var_of_arc[&(u_orig, y)], b));
                    }
                }
                incoming[i].push((uj, tag_vars, commons));
            }
        }

        let mut events = Vec::new();
        for (idx, &u) in vs.iter().enumerate() {
            let base_vars: Vec<u32> =
                f0.out_adj(u).iter().map(|&w| var_of_arc[&(u, w)]).collect();
            events.push(BadEvent {
                label: BadEventLabel::OutDegreeLow,
                scope: 2 * idx as u64,
                kind: EventKind::KeptBelow { vars: base_vars, threshold },
            });
        }
        for (i, inc) in incoming.iter().enumerate() {
            if inc.is_empty() {
                continue;
            }
            let mut vars: std::collections::BTreeSet<u32> = std::collections::BTreeSet::new();
            for (_, tags, commons) in inc {
                vars.extend(tags.iter().copied());
                for &(a, b) in commons {
                    vars.insert(a);
                    vars.insert(b);
                }
            }
            events.push(BadEvent {
                label: BadEventLabel::TooManyHInNeighbors,
                scope: 2 * ordering_idx[i] as u64 + 1,
                kind: EventKind::Custom {
                    vars: vars.into_iter().collect(),
                    id: i as u32,
                },
            });
        }

        let mut survives = |i: u32, bits: &[bool]| {
            let mut count = 0usize;
            for (_, tags, commons) in &incoming[i as usize] {
                let tagged = tags.iter().any(|&t| bits[t as usize]);
                if !tagged {
                    continue;
                }
                if commons.iter().any(|&(a, b)| bits[a as usize] && bits[b as usize]) {
                    count += 1;
                    if count > 2 * k {
                        return true;
                    }
                }
            }
            false
        };

        let mut mt_cfg = *cfg;
        mt_cfg.restarts = 1;
        mt_cfg.seed = rng::derive(cfg.seed, 0x5A3B_0000 + attempt as u64);
        let outcome = match mt_resample(var_arcs.len(), &events, &mt_cfg, Some(&mut survives)) {
            Ok(o) => o,
            Err(e) => {
                total_rounds += match &e {
                    ResampleError::BudgetExceeded { rounds, .. } => *rounds,
                };
                last_err = Some(e.into());
                continue;
            }
        };
        total_rounds += outcome.rounds;

        let f = f0.spanning_subgraph(|u, w| {
            if in_v[u] {
                outcome.bits[var_of_arc[&(u, w)] as usize]
            } else {
                f1.has_arc(u, w)
            }
        });
        let ordering: Vec<usize> = ordering_idx.iter().map(|&i| vs[i]).collect();

        match verify_claim(&f, &vs, &in_v, &ordering, k, threshold) {
            Ok(()) => {
                return Ok(ClaimResult {
                    f,
                    ordering,
                    stats: StageStats { rounds: total_rounds, restarts: attempt },
                })
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        ReduceError::ParameterInfeasible("no attempts were configured".into())
    }))
}

/// Independent re-check of the three ordered-sampling postconditions.
fn verify_claim(
    f: &Digraph,
    vs: &[usize],
    in_v: &[bool],
    ordering: &[usize],
    k: usize,
    threshold: usize,
) -> Result<(), ReduceError> {
    for v in 0..f.n() {
        if in_v[v] {
            if f.out_degree(v) < threshold {
                return Err(ResampleError::BudgetExceeded {
                    surviving: vec![(BadEventLabel::OutDegreeLow, v as u64)],
                    rounds: 0,
                }
                .into());
            }
        } else if f.out_degree(v) != k {
            return Err(ReduceError::ParameterInfeasible(format!(
                "vertex {v} outside V kept {} ≠ {k} arcs",
                f.out_degree(v)
            )));
        }
    }
    let mut sorted = ordering.to_vec();
    sorted.sort_unstable();
    if sorted != vs {
        return Err(ReduceError::ParameterInfeasible(
            "ordering is not a permutation of V".into(),
        ));
    }
    let (h, hvs) = build_aux_h(f, vs)?;
    let mut pos = vec![usize::MAX; hvs.len()];
    for (i, &v) in ordering.iter().enumerate() {
        let idx = hvs.binary_search(&v).unwrap();
        pos[idx] = i;
    }
    for vi in 0..hvs.len() {
        let mut earlier: HashSet<usize> = HashSet::new();
        for &(uj, _) in h.in_arcs(vi) {
            if pos[uj] < pos[vi] {
                earlier.insert(uj);
            }
        }
        if earlier.len() > 2 * k {
            return Err(ResampleError::BudgetExceeded {
                surviving: vec![(BadEventLabel::TooManyHInNeighbors, hvs[vi] as u64)],
                rounds: 0,
            }
            .into());
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// sequential restriction

/// Processes V in the given order; each member keeps k out-arcs that avoid
/// the kept out-neighborhoods of its earlier auxiliary-graph in-neighbors
/// and are pairwise non-conflicting (no directed 3-path through an earlier
/// member joins two kept heads). The output has no `c5_2` copy with source
/// in V, which is re-verified by pattern search.
pub fn sequential_restriction(
    f: &Digraph,
    ordering: &[usize],
    v_set: &[usize],
    k: usize,
) -> Result<Digraph, ReduceError> {
    sequential_restriction_impl(f, ordering, v_set, k, false)
}

/// Same as [`sequential_restriction`] but additionally asserts, after every
/// step, that the auxiliary graph of the partially restricted digraph has no
/// arcs among the processed prefix. Quadratic; intended for tests.
pub fn sequential_restriction_checked(
    f: &Digraph,
    ordering: &[usize],
    v_set: &[usize],
    k: usize,
) -> Result<Digraph, ReduceError> {
    sequential_restriction_impl(f, ordering, v_set, k, true)
}

fn sequential_restriction_impl(
    f: &Digraph,
    ordering: &[usize],
    v_set: &[usize],
    k: usize,
    check_prefixes: bool,
) -> Result<Digraph, ReduceError> {
    let mut vs: Vec<usize> = v_set.to_vec();
    vs.sort_unstable();
    vs.dedup();
    let mut in_v = vec![false; f.n()];
    for &v in &vs {
        in_v[v] = true;
    }
    let mut pos = vec![usize::MAX; f.n()];
    for (i, &v) in ordering.iter().enumerate() {
        pos[v] = i;
    }

    let (h, hvs) = build_aux_h(f, &vs)?;
    let hidx = |v: usize| hvs.binary_search(&v).unwrap();

    let mut chosen: Vec<Option<Vec<usize>>> = vec![None; f.n()];
    let mut blocked = vec![false; f.n()]; // scratch: U_i membership
    for (i, &vi) in ordering.iter().enumerate() {
        // U_i: kept out-neighborhoods of earlier in-neighbors in H(f)
        let mut earlier_tails: Vec<usize> = h
            .in_arcs(hidx(vi))
            .iter()
            .map(|&(uj, _)| hvs[uj])
            .filter(|&u| pos[u] < i)
            .collect();
        earlier_tails.sort_unstable();
        earlier_tails.dedup();
        let mut blocked_list = Vec::new();
        for &u in &earlier_tails {
            for &w in chosen[u].as_ref().expect("earlier members are processed") {
                if !blocked[w] {
                    blocked[w] = true;
                    blocked_list.push(w);
                }
            }
        }
        let n_prime: Vec<usize> =
            f.out_adj(vi).iter().copied().filter(|&w| !blocked[w]).collect();
        for w in blocked_list {
            blocked[w] = false;
        }

        // conflict graph on N': heads joined by a 3-path through an earlier
        // member's kept arc (checked in both directions), including w to
        // itself, which also rules the head out entirely
        let m = n_prime.len();
        let mut head_idx: HashMap<usize, usize> = HashMap::new();
        for (a, &w) in n_prime.iter().enumerate() {
            head_idx.insert(w, a);
        }
        let mut adj = vec![false; m * m];
        let mut selfloop = vec![false; m];
        for (a, &w1) in n_prime.iter().enumerate() {
            for &x in f.out_adj(w1) {
                for &vj in f.out_adj(x) {
                    if in_v[vj] && pos[vj] < i {
                        for &w2 in chosen[vj].as_ref().unwrap() {
                            if let Some(&b) = head_idx.get(&w2) {
                                if a == b {
                                    selfloop[a] = true;
                                } else {
                                    adj[a * m + b] = true;
                                    adj[b * m + a] = true;
                                }
                            }
                        }
                    }
                }
            }
        }

        // greedy minimum-degree independent set, ties by smallest vertex id
        let mut alive: Vec<bool> = selfloop.iter().map(|&s| !s).collect();
        let mut deg: Vec<usize> = (0..m)
            .map(|a| (0..m).filter(|&b| alive[b] && adj[a * m + b]).count())
            .collect();
        let mut picked = Vec::with_capacity(k);
        while picked.len() < k {
            let Some(best) = (0..m)
                .filter(|&a| alive[a])
                .min_by_key(|&a| (deg[a], n_prime[a]))
            else {
                return Err(ReduceError::RestrictionInfeasible { vertex: vi, k });
            };
            picked.push(n_prime[best]);
            let mut dead = vec![best];
            for b in 0..m {
                if alive[b] && adj[best * m + b] {
                    dead.push(b);
                }
            }
            for x in dead {
                if alive[x] {
                    alive[x] = false;
                    for b in 0..m {
                        if adj[x * m + b] && deg[b] > 0 {
                            deg[b] -= 1;
                        }
                    }
                }
            }
        }
        picked.sort_unstable();
        chosen[vi] = Some(picked);

        if check_prefixes {
            let partial = f.spanning_subgraph(|u, w| match &chosen[u] {
                Some(heads) => heads.contains(&w),
                None => true,
            });
            let (hp, _) = build_aux_h(&partial, &vs)?;
            for &(a, b, _) in hp.arcs() {
                if pos[hvs[a]] <= i && pos[hvs[b]] <= i {
                    return Err(ReduceError::RestrictionInfeasible { vertex: hvs[b], k });
                }
            }
        }
    }

    let out = f.spanning_subgraph(|u, w| match &chosen[u] {
        Some(heads) => heads.contains(&w),
        None => true,
    });
    // re-verify the whole point: no c5_2 with source in V
    let c52 = cycle_orientation("c5_2").unwrap().graph;
    if let Some(phi) = find_embedding_with(&out, &c52, |pv, hv| pv != 0 || in_v[hv]) {
        return Err(ReduceError::RestrictionInfeasible { vertex: phi[0], k });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// per-class composition and the full pipeline

/// Removes every copy of `c5_2` whose source sees only `class`: fixes
/// V = the 1-typed in-set of the class, then runs ordered sampling followed
/// by sequential restriction, restarting with fresh trims on failure. Every
/// vertex of the output has out-degree exactly k.
pub fn avoid_c5_from_class(
    d: &Digraph,
    tp: &TypedPartition,
    class: Class,
    k: usize,
    cfg: &ResampleConfig,
    mode: GateMode,
) -> Result<(Digraph, StageStats), ReduceError> {
    cfg.validate();
    if tp.s < 1 {
        return Err(ReduceError::NotTripartite("need a 1-typed witness".into()));
    }
    if k < 2 {
        return Err(ReduceError::ParameterInfeasible("k must be ≥ 2".into()));
    }
    let violations = typed_violations(d, tp);
    if !violations.is_empty() {
        return Err(ReduceError::NotTripartite(violations.join("; ")));
    }
    let vs = n1_minus(d, tp, class);
    let mut stats = StageStats::default();
    let mut last_err: Option<ReduceError> = None;
    for attempt in 0..cfg.restarts {
        let mut sub = *cfg;
        sub.restarts = 1;
        sub.seed = rng::derive(cfg.seed, 0xC1A5_0000 + attempt as u64);
        let claim = match claim_order_and_sample(d, &vs, k, &sub, mode) {
            Ok(c) => c,
            Err(e @ ReduceError::ParameterInfeasible(_)) => return Err(e),
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        stats.rounds += claim.stats.rounds;
        match sequential_restriction(&claim.f, &claim.ordering, &vs, k) {
            Ok(out) => {
                stats.restarts = attempt;
                debug_assert!((0..out.n()).all(|v| out.out_degree(v) == k));
                return Ok((out, stats));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| {
        ReduceError::ParameterInfeasible("no attempts were configured".into())
    }))
}

/// Pipeline profile: `Strict` demands the full proof constants (infeasible
/// off astronomically large inputs, and reported honestly as such), `Desk`
/// runs the same stages with the smallest parameters the inequalities and
/// re-verification allow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Strict,
    Desk,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub graph: Digraph,
    pub tp: TypedPartition,
    pub reports: Vec<ReductionReport>,
}

fn sat_pow(base: u128, exp: u32) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
    }
    acc
}

/// The per-stage plan: target degrees for the cycle stage and the three
/// class stages, with trim/probability settings and stage order.
#[derive(Debug, Clone)]
pub struct PipelinePlan {
    /// Remove cycles before coloring (as the proof chains the stages) or
    /// after typing, where the graph is already thin enough to enumerate.
    pub cycles_first: bool,
    pub cycle_k: usize,
    pub cycle_d_trim: usize,
    pub cycle_p: f64,
    /// (class, k, d_trim, p) for the three class stages, in order.
    pub class_stages: Vec<(Class, usize, usize, f64)>,
    pub mode: GateMode,
    pub restarts: u32,
}

impl PipelinePlan {
    /// Desk-scale ladder: the cycle stage outputs k+3, and the class stages
    /// step the degree down k+3 → k+2 → k+1 → k, trimming one above the
    /// target each time.
    pub fn desk(k: usize) -> Self {
        let k1 = k + 3;
        PipelinePlan {
            cycles_first: false,
            cycle_k: k1,
            cycle_d_trim: 4 * k1 - 2,
            cycle_p: 0.5,
            class_stages: vec![
                (Class::A, k + 2, k + 3, 1.0),
                (Class::B, k + 1, k + 2, 1.0),
                (Class::C, k, k + 1, 1.0),
            ],
            mode: GateMode::Calibrated,
            restarts: 40,
        }
    }

    /// The proof's constants: class stage for target κ trims to κ^20 and
    /// keeps arcs with probability κ^-15; the cycle stage must hand the
    /// first class stage 27-fold headroom for the coloring and typing
    /// stages in between. Saturating arithmetic; callers see an honest
    /// infeasibility error on any realistic input.
    pub fn strict(k: usize) -> Self {
        let kc = k as u128;
        let kb = sat_pow(kc, 20);
        let ka = sat_pow(kb, 20);
        let cap = |x: u128| x.min(usize::MAX as u128) as usize;
        let keep_p = |x: u128| (x.min(1 << 62) as f64).powi(-15);
        let d_a = cap(sat_pow(ka, 20));
        let cycle_k = cap(27u128.saturating_mul(sat_pow(ka, 20)));
        PipelinePlan {
            cycles_first: true,
            cycle_k,
            cycle_d_trim: cap(4u128.saturating_mul(cycle_k as u128)),
            cycle_p: 0.5,
            class_stages: vec![
                (Class::A, cap(ka), d_a, keep_p(ka)),
                (Class::B, cap(kb), cap(ka), keep_p(kb)),
                (Class::C, k, cap(kb), keep_p(kc)),
            ],
            mode: GateMode::Strict,
            restarts: 3,
        }
    }
}

/// Runs the stage chain of [`pipeline_avoid_c3_c5`] with explicit per-stage
/// parameters.
pub fn pipeline_with_plan(
    d: &Digraph,
    k: usize,
    plan: &PipelinePlan,
    seed: u64,
) -> Result<PipelineOutcome, (ReduceError, Vec<ReductionReport>)> {
    let mut reports = Vec::new();

    let budget = |p: f64, d_trim: usize, s: u64| ResampleConfig {
        p,
        d_trim,
        max_rounds: 2_000_000,
        restarts: plan.restarts,
        seed: s,
    };

    let fail = |e: ReduceError, stage: &str, reports: Vec<ReductionReport>| {
        (
            ReduceError::ParameterInfeasible(format!("stage {stage}: {e}")),
            reports,
        )
    };

    let run_cycles = |current: &Digraph,
                      reports: &mut Vec<ReductionReport>|
     -> Result<Digraph, ReduceError> {
        let cfg = budget(plan.cycle_p, plan.cycle_d_trim, rng::derive(seed, 1));
        let (g, stats) = avoid_directed_cycles(current, &[3, 5], plan.cycle_k, &cfg, plan.mode)?;
        let viols = match directed_cycles_up_to(&g, &[3, 5], CYCLE_CAP) {
            Ok(c) if c.is_empty() => Vec::new(),
            Ok(c) => vec![format!("{} cycles survive", c.len())],
            Err(e) => vec![e.to_string()],
        };
        reports.push(ReductionReport::new(
            "avoid-dicycles",
            current,
            &g,
            stats,
            cfg.seed,
            viols,
            json!({"lengths": [3, 5], "k": plan.cycle_k, "d_trim": plan.cycle_d_trim, "p": plan.cycle_p}),
        ));
        Ok(g)
    };

    let mut current = d.clone();
    if plan.cycles_first {
        current = match run_cycles(&current, &mut reports) {
            Ok(g) => g,
            Err(e) => return Err(fail(e, "avoid-dicycles", reports)),
        };
    }

    // majority coloring + tripartite restriction
    let color_cfg = ResampleConfig {
        p: 1.0,
        d_trim: 0,
        max_rounds: 50 * (current.n() as u64) + 1000,
        restarts: 10,
        seed: rng::derive(seed, 2),
    };
    let coloring = match majority_3_coloring(&current, &color_cfg) {
        Ok(c) => c,
        Err(e) => return Err(fail(e, "majority-color", reports)),
    };
    let (tri, tp0) = match tripartite_restrict(&current, &coloring) {
        Ok(x) => x,
        Err(e) => return Err(fail(e, "tripartite-restrict", reports)),
    };
    reports.push(ReductionReport::new(
        "majority-color",
        &current,
        &tri,
        StageStats::default(),
        color_cfg.seed,
        coloring_violations(&current, &coloring, 3)
            .into_iter()
            .map(|v| format!("majority condition fails at {v}"))
            .collect(),
        json!({"colors": 3}),
    ));
    current = tri;

    // 2-typing
    let (typed, tp) = match extract_typed(&current, &tp0, 2) {
        Ok(x) => x,
        Err(e) => return Err(fail(e, "extract-typed", reports)),
    };
    reports.push(ReductionReport::new(
        "extract-typed",
        &current,
        &typed,
        StageStats::default(),
        seed,
        typed_violations(&typed, &tp),
        json!({"s": 2}),
    ));
    current = typed;

    if !plan.cycles_first {
        current = match run_cycles(&current, &mut reports) {
            Ok(g) => g,
            Err(e) => return Err(fail(e, "avoid-dicycles", reports)),
        };
    }

    // three class stages
    for (idx, &(class, kx, d_trim, p)) in plan.class_stages.iter().enumerate() {
        if !(p > 0.0 && p <= 1.0) {
            return Err(fail(
                ReduceError::ParameterInfeasible(format!(
                    "keep probability {p} for class {class} is out of range"
                )),
                &format!("avoid-c5-class-{class}"),
                reports,
            ));
        }
        let cfg = budget(p, d_trim, rng::derive(seed, 4 + idx as u64));
        let stage_name = format!("avoid-c5-class-{class}");
        match avoid_c5_from_class(&current, &tp, class, kx, &cfg, plan.mode) {
            Ok((g, stats)) => {
                let mut viols = Vec::new();
                if (0..g.n()).any(|v| g.out_degree(v) != kx) {
                    viols.push(format!("some vertex does not have out-degree {kx}"));
                }
                let in_v = {
                    let vsx = n1_minus(&g, &tp, class);
                    let mut m = vec![false; g.n()];
                    for v in vsx {
                        m[v] = true;
                    }
                    m
                };
                let c52 = cycle_orientation("c5_2").unwrap().graph;
                if find_embedding_with(&g, &c52, |pv, hv| pv != 0 || in_v[hv]).is_some() {
                    viols.push(format!("a c5_2 with source in class {class} survives"));
                }
                reports.push(ReductionReport::new(
                    &stage_name,
                    &current,
                    &g,
                    stats,
                    cfg.seed,
                    viols,
                    json!({"class": class.to_string(), "k": kx, "d_trim": d_trim, "p": p}),
                ));
                current = g;
            }
            Err(e) => return Err(fail(e, &stage_name, reports)),
        }
    }

    // final verification: all six orientations gone, degree preserved
    let mut viols = Vec::new();
    if current.min_out_degree() < k {
        viols.push(format!(
            "final minimum out-degree {} < {k}",
            current.min_out_degree()
        ));
    }
    for name in ["c3_1", "c3_2", "c5_1", "c5_2", "c5_3", "c5_4"] {
        let pat = cycle_orientation(name).unwrap();
        if crate::patterns::contains(&current, &pat.graph) {
            viols.push(format!("a copy of {name} survives"));
        }
    }
    let verified = viols.is_empty();
    reports.push(ReductionReport::new(
        "final-verify",
        &current,
        &current,
        StageStats::default(),
        seed,
        viols,
        json!({"k": k, "patterns": ["c3_1", "c3_2", "c5_1", "c5_2", "c5_3", "c5_4"]}),
    ));
    if !verified {
        let msgs = reports.last().unwrap().violations.join("; ");
        return Err((
            ReduceError::ParameterInfeasible(format!("final verification failed: {msgs}")),
            reports,
        ));
    }
    Ok(PipelineOutcome { graph: current, tp, reports })
}

/// Runs the stage chain: directed-cycle removal (lengths 3 and 5), majority
/// coloring + tripartite restriction, 2-typing, then one class stage per
/// type class. In the desk profile the cycle stage runs after typing, where
/// the graph is already thin enough to enumerate cycles. Aborts with
/// partial reports on the first failing stage; the final graph is verified
/// free of all six 3- and 5-cycle orientations with min out-degree ≥ k.
pub fn pipeline_avoid_c3_c5(
    d: &Digraph,
    k: usize,
    profile: Profile,
    seed: u64,
) -> Result<PipelineOutcome, (ReduceError, Vec<ReductionReport>)> {
    let plan = match profile {
        Profile::Strict => PipelinePlan::strict(k),
        Profile::Desk => PipelinePlan::desk(k),
    };
    pipeline_with_plan(d, k, &plan, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::random_regular_digraph;
    use crate::patterns::contains;

    fn cfg(p: f64, d_trim: usize, seed: u64) -> ResampleConfig {
        ResampleConfig { p, d_trim, max_rounds: 200_000, restarts: 10, seed }
    }

    #[test]
    fn majority_coloring_examples() {
        let tri = Digraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let c = majority_3_coloring(&tri, &cfg(1.0, 0, 1)).unwrap();
        assert!(coloring_violations(&tri, &c, 3).is_empty());

        let empty = Digraph::new(5);
        let c = majority_3_coloring(&empty, &cfg(1.0, 0, 1)).unwrap();
        assert!(coloring_violations(&empty, &c, 3).is_empty());

        let g = random_regular_digraph(300, 12, 5).unwrap();
        let c = majority_3_coloring(&g, &cfg(1.0, 0, 2)).unwrap();
        assert!(coloring_violations(&g, &c, 3).is_empty());
        for v in 0..g.n() {
            let diff = g.out_adj(v).iter().filter(|&&w| c[w] != c[v]).count();
            assert!(diff >= 4, "vertex {v} has only {diff} differing out-neighbors");
        }

        // experimental half-threshold variant with two colors
        let g2 = random_regular_digraph(60, 4, 9).unwrap();
        if let Ok(c2) = majority_coloring(&g2, 2, &cfg(1.0, 0, 3)) {
            assert!(coloring_violations(&g2, &c2, 2).is_empty());
        }
    }

    #[test]
    fn tripartite_restrict_examples() {
        let tri = Digraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let coloring = vec![Class::A, Class::B, Class::C];
        let (out, tp) = tripartite_restrict(&tri, &coloring).unwrap();
        assert_eq!(out, tri);
        assert_eq!(tp.s, 0);

        // same-colored arc is dropped; (0,1) is A→A but 0 still keeps (0,2)
        let g = Digraph::from_arcs(3, &[(0, 1), (0, 2), (1, 2), (2, 0)]).unwrap();
        let c = vec![Class::A, Class::A, Class::B];
        let (out, _) = tripartite_restrict(&g, &c).unwrap();
        assert!(!out.has_arc(0, 1));
        assert_eq!(out.m(), 3);

        // coloring violating the majority condition is rejected
        let arc = Digraph::from_arcs(2, &[(0, 1)]).unwrap();
        assert!(matches!(
            tripartite_restrict(&arc, &[Class::A, Class::A]),
            Err(ReduceError::ColoringInvalid(0))
        ));

        let g = random_regular_digraph(200, 18, 7).unwrap();
        let c = majority_3_coloring(&g, &cfg(1.0, 0, 4)).unwrap();
        let (out, _) = tripartite_restrict(&g, &c).unwrap();
        assert!(out.min_out_degree() >= 6);
    }

    #[test]
    fn extract_typed_examples() {
        let tri = Digraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let tp = TypedPartition::untyped(vec![Class::A, Class::B, Class::C]);
        let (out, tp1) = extract_typed(&tri, &tp, 1).unwrap();
        assert_eq!(out, tri);
        assert_eq!(tp1.types[0], vec![Class::B]);
        assert_eq!(tp1.types[1], vec![Class::C]);
        assert_eq!(tp1.types[2], vec![Class::A]);

        let (out0, tp0) = extract_typed(&tri, &tp, 0).unwrap();
        assert_eq!(out0, tri);
        assert_eq!(tp0.s, 0);

        // not tripartite under the witness
        let bad = TypedPartition::untyped(vec![Class::A, Class::A, Class::B]);
        assert!(matches!(
            extract_typed(&tri, &bad, 1),
            Err(ReduceError::NotTripartite(_))
        ));
    }

    #[test]
    fn extract_typed_random_tripartite() {
        // random 3-partite digraph with out-degree 27 into the next class
        let n = 180;
        let mut arcs = Vec::new();
        let mut r = rng::stream(77, 0);
        use rand::seq::SliceRandom;
        for v in 0..n {
            let next: Vec<usize> = (0..n).filter(|&w| w % 3 == (v + 1) % 3).collect();
            for &w in next.choose_multiple(&mut r, 27) {
                arcs.push((v, w));
            }
        }
        let d = Digraph::from_arcs(n, &arcs).unwrap();
        let classes: Vec<Class> = (0..n).map(|v| CLASSES[v % 3]).collect();
        let tp = TypedPartition::untyped(classes);
        let (out, tp2) = extract_typed(&d, &tp, 2).unwrap();
        assert!(out.min_out_degree() >= 3);
        assert!(typed_violations(&out, &tp2).is_empty());
        // spot-check the reachable-set reading of typedness
        for v in (0..n).step_by(17) {
            for i in 1..=2 {
                let reach = out.reachable_set(&[v], i, crate::digraph::Direction::Forward);
                assert!(reach.iter().all(|&w| tp2.classes[w] == tp2.types[v][i - 1]));
            }
        }
    }

    #[test]
    fn cycle_enumeration_is_exact() {
        let g = Digraph::from_arcs(
            6,
            &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2), (3, 0), (4, 5), (5, 3), (4, 0)],
        )
        .unwrap();
        let c3 = directed_cycles_up_to(&g, &[3], 1000).unwrap();
        assert_eq!(c3.len(), 3); // 0-1-2, 2-3-4, 3-4-5
        let c5 = directed_cycles_up_to(&g, &[5], 1000).unwrap();
        assert_eq!(c5.len(), 1); // 0-1-2-3-4
        let c4 = directed_cycles_up_to(&g, &[4], 1000).unwrap();
        assert_eq!(c4.len(), 1); // 0-1-2-3
        let c35 = directed_cycles_up_to(&g, &[3, 5], 1000).unwrap();
        assert_eq!(c35.len(), c3.len() + c5.len());
        // arc ids actually form the cycles
        for cyc in &c35 {
            let arcs: Vec<(usize, usize)> = cyc.iter().map(|&id| g.arc_endpoints(id)).collect();
            for w in 0..arcs.len() {
                assert_eq!(arcs[w].1, arcs[(w + 1) % arcs.len()].0);
            }
        }
        // brute-force cross-check: rotate-canonical vertex sequences
        let mut brute = std::collections::HashSet::new();
        for a in 0..6usize {
            for b in 0..6 {
                for c in 0..6 {
                    let mut seq = vec![a, b, c];
                    seq.sort_unstable();
                    seq.dedup();
                    if seq.len() == 3 && g.has_arc(a, b) && g.has_arc(b, c) && g.has_arc(c, a) {
                        let mut key = [a, b, c];
                        let r = key.iter().position(|x| x == key.iter().min().unwrap()).unwrap();
                        key.rotate_left(r);
                        brute.insert(key);
                    }
                }
            }
        }
        assert_eq!(brute.len(), c3.len());
    }

    #[test]
    fn avoid_cycles_trivial_and_impossible() {
        // bipartite host with both directions: no odd cycle exists, so with
        // p = 1 nothing is ever resampled and the trim is returned as is
        let mut arcs = Vec::new();
        for u in 0..4 {
            for v in 4..8 {
                arcs.push((u, v));
                arcs.push((v, u));
            }
        }
        let host = Digraph::from_arcs(8, &arcs).unwrap();
        let c = cfg(1.0, 4, 31);
        let (out, stats) = avoid_directed_cycles(&host, &[3, 5], 2, &c, GateMode::Calibrated)
            .unwrap();
        assert_eq!(stats.rounds, 0);
        assert_eq!(out, host);

        // a directed triangle cannot lose an arc and keep min out-degree 1
        let tri = Digraph::from_arcs(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let mut c = cfg(1.0, 1, 5);
        c.max_rounds = 300;
        c.restarts = 2;
        match avoid_directed_cycles(&tri, &[3], 1, &c, GateMode::Calibrated) {
            Err(ReduceError::Budget(_)) => {}
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn avoid_cycles_on_random_regular() {
        let g = random_regular_digraph(300, 60, 13).unwrap();
        let c = cfg(0.5, 6, 6);
        let (out, _) = avoid_directed_cycles(&g, &[3, 5], 2, &c, GateMode::Calibrated).unwrap();
        assert!(out.min_out_degree() >= 2);
        assert!(directed_cycles_up_to(&out, &[3, 5], 100).unwrap().is_empty());
        // deterministic given the seed
        let (again, _) = avoid_directed_cycles(&g, &[3, 5], 2, &c, GateMode::Calibrated).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn aux_h_examples() {
        // u=0, v=1, a=2, w=3, x=4
        let d = Digraph::from_arcs(5, &[(0, 2), (1, 2), (0, 3), (3, 4), (4, 1)]).unwrap();
        let (h, vs) = build_aux_h(&d, &[0, 1]).unwrap();
        assert_eq!(vs, vec![0, 1]);
        assert_eq!(h.arcs(), &[(0, 1, 3)]);

        let (h, _) = build_aux_h(&d, &[]).unwrap();
        assert!(h.arcs().is_empty());

        // no 2-paths back into V: empty
        let d2 = Digraph::from_arcs(4, &[(0, 2), (1, 2), (0, 3), (1, 3)]).unwrap();
        let (h, _) = build_aux_h(&d2, &[0, 1]).unwrap();
        assert!(h.arcs().is_empty());

        // V not independent
        let d3 = Digraph::from_arcs(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(matches!(
            build_aux_h(&d3, &[0, 1]),
            Err(ReduceError::VNotIndependent(0))
        ));
    }

    /// Three rings of `n` vertices each; every vertex points at the next
    /// `span` vertices of the following ring. Class cycle C→A→B→C with all
    /// shifts ≥ 1, so directed cycles have length ≥ 3·ring steps with total
    /// shift ≡ 0 mod n: none of length 3 or 5 exist for span·3 < n.
    fn ring_instance(n: usize, span: usize) -> (Digraph, TypedPartition) {
        let mut arcs = Vec::new();
        let pool = |p: usize, i: usize| p * n + i;
        for i in 0..n {
            for s in 1..=span {
                arcs.push((pool(0, i), pool(1, (i + s) % n))); // V2 → A*
                arcs.push((pool(1, i), pool(2, (i + s) % n))); // A* → B2
                arcs.push((pool(2, i), pool(0, (i + s) % n))); // B2 → V2
            }
        }
        let d = Digraph::from_arcs(3 * n, &arcs).unwrap();
        let classes: Vec<Class> = (0..3 * n)
            .map(|v| match v / n {
                0 => Class::C,
                1 => Class::A,
                _ => Class::B,
            })
            .collect();
        let tp = TypedPartition::untyped(classes);
        let (typed, tp1) = extract_typed(&d, &tp, 1).unwrap();
        assert_eq!(typed, d, "span-uniform instance is already 1-typed");
        (d, tp1)
    }

    #[test]
    fn claim_on_ring_instance() {
        let (d, tp) = ring_instance(60, 6);
        assert!(!contains(&d, &cycle_orientation("c3_1").unwrap().graph));
        let vs = n1_minus(&d, &tp, Class::A);
        assert_eq!(vs, (0..60).collect::<Vec<_>>());

        let c = cfg(1.0, 6, 21);
        let claim = claim_order_and_sample(&d, &vs, 2, &c, GateMode::Calibrated).unwrap();
        // members keep all 6 (p = 1), others exactly k = 2
        for v in 0..d.n() {
            if v < 60 {
                assert_eq!(claim.f.out_degree(v), 6);
            } else {
                assert_eq!(claim.f.out_degree(v), 2);
            }
        }
        // H is nonempty on this instance, so the ordering bound is real
        let (h, _) = build_aux_h(&claim.f, &vs).unwrap();
        assert!(!h.arcs().is_empty());

        // gate check
        assert!(matches!(
            claim_order_and_sample(&d, &vs, 2, &cfg(0.1, 6, 1), GateMode::Strict),
            Err(ReduceError::ParameterInfeasible(_))
        ));
    }

    #[test]
    fn claim_with_empty_v_trims_everyone() {
        let g = random_regular_digraph(40, 6, 3).unwrap();
        let claim =
            claim_order_and_sample(&g, &[], 2, &cfg(0.5, 4, 2), GateMode::Calibrated).unwrap();
        assert!(claim.ordering.is_empty());
        assert!((0..40).all(|v| claim.f.out_degree(v) == 2));
    }

    #[test]
    fn sequential_restriction_end_to_end() {
        let (d, tp) = ring_instance(60, 6);
        let vs = n1_minus(&d, &tp, Class::A);
        let c = cfg(1.0, 6, 21);
        let claim = claim_order_and_sample(&d, &vs, 2, &c, GateMode::Calibrated).unwrap();
        let out =
            sequential_restriction_checked(&claim.f, &claim.ordering, &vs, 2).unwrap();
        for v in 0..out.n() {
            assert_eq!(out.out_degree(v), 2);
        }
        let c52 = cycle_orientation("c5_2").unwrap().graph;
        let in_v = |hv: usize| hv < 60;
        assert!(find_embedding_with(&out, &c52, |pv, hv| pv != 0 || in_v(hv)).is_none());
        // the auxiliary graph of the result has no arcs at all within V
        let (h, _) = build_aux_h(&out, &vs).unwrap();
        assert!(h.arcs().is_empty());
    }

    #[test]
    fn sequential_restriction_trivial_cases() {
        let g = random_regular_digraph(30, 3, 8).unwrap();
        let out = sequential_restriction(&g, &[], &[], 3).unwrap();
        assert_eq!(out, g);
    }

    #[test]
    fn avoid_c5_stage_on_ring_instance() {
        let (d, tp) = ring_instance(60, 6);
        let (out, _) =
            avoid_c5_from_class(&d, &tp, Class::A, 2, &cfg(1.0, 6, 33), GateMode::Calibrated)
                .unwrap();
        assert!((0..out.n()).all(|v| out.out_degree(v) == 2));

        // the strict demand is reported as infeasible at this scale
        let big = cfg((100f64).powi(-15), 100usize.pow(5), 1);
        assert!(matches!(
            avoid_c5_from_class(&d, &tp, Class::A, 100, &big, GateMode::Strict),
            Err(ReduceError::ParameterInfeasible(_))
        ));
    }

    #[test]
    fn claim_desk_preset_on_four_pool_instance() {
        // four pools wired in an even cycle: P→Q→R→S→P; V = P ∪ R sees a
        // shared out-pool on each side, and every directed cycle has length
        // divisible by 4, so 3- and 5-cycles are absent
        let np = 150;
        let mut arcs = Vec::new();
        let mut r = rng::stream(4242, 0);
        use rand::seq::SliceRandom;
        let pool = |p: usize, i: usize| p * np + i;
        for p in 0..4 {
            let targets: Vec<usize> = (0..np).map(|i| pool((p + 1) % 4, i)).collect();
            for i in 0..np {
                for &t in targets.choose_multiple(&mut r, 100) {
                    arcs.push((pool(p, i), t));
                }
            }
        }
        let d = Digraph::from_arcs(4 * np, &arcs).unwrap();
        assert_eq!(d.min_out_degree(), 100);
        let classes: Vec<Class> = (0..4 * np)
            .map(|v| match v / np {
                0 => Class::B,  // P
                1 => Class::A,  // Q
                2 => Class::C,  // R
                _ => Class::A,  // S
            })
            .collect();
        let (typed, tp) = extract_typed(&d, &TypedPartition::untyped(classes), 1).unwrap();
        assert_eq!(typed, d);
        let vs = n1_minus(&d, &tp, Class::A);
        assert_eq!(vs.len(), 2 * np);

        // desk preset: k = 2, d_trim = 96, p = 0.5 meets the strict gate
        // exactly (96·0.5/2 = 24... need 48) — use d_trim = 192 scaled: the
        // pools here have out-degree 100, so scale the preset to d_trim = 96
        // under the calibrated gate and separately check the strict gate
        // arithmetic with the documented preset numbers.
        let c = cfg(0.5, 96, 55);
        let claim = claim_order_and_sample(&d, &vs, 2, &c, GateMode::Calibrated).unwrap();
        for &v in &vs {
            assert!(claim.f.out_degree(v) >= 24);
        }
        let out = sequential_restriction(&claim.f, &claim.ordering, &vs, 2).unwrap();
        assert!((0..out.n()).all(|v| out.out_degree(v) == 2));
    }

    #[test]
    fn strict_gate_matches_documented_preset() {
        // the documented standalone preset: k = 2, d_trim = 192, p = 0.5
        let c = ResampleConfig { p: 0.5, d_trim: 192, max_rounds: 10, restarts: 1, seed: 0 };
        assert_eq!(claim_threshold(2, &c, GateMode::Strict).unwrap(), 48);
        let short = ResampleConfig { p: 0.5, d_trim: 190, max_rounds: 10, restarts: 1, seed: 0 };
        assert!(claim_threshold(2, &short, GateMode::Strict).is_err());
    }

    #[test]
    fn desk_pipeline_on_bipartite_is_trim_only() {
        // both directions of K_{216,216}: bipartite, so no orientation of an
        // odd cycle exists anywhere; with p = 1 everywhere the pipeline only
        // thins degrees and never resamples
        let side = 216;
        let mut arcs = Vec::new();
        for u in 0..side {
            for v in side..2 * side {
                arcs.push((u, v));
                arcs.push((v, u));
            }
        }
        let d = Digraph::from_arcs(2 * side, &arcs).unwrap();
        let mut plan = PipelinePlan::desk(2);
        plan.cycle_p = 1.0;
        plan.cycle_d_trim = 8;
        let out = pipeline_with_plan(&d, 2, &plan, 99).map_err(|(e, _)| e).unwrap();
        assert!(out.graph.min_out_degree() >= 2);
        let cycle_stage = out
            .reports
            .iter()
            .find(|r| r.stage == "avoid-dicycles")
            .unwrap();
        assert_eq!(cycle_stage.rounds, 0);
        assert!(out.reports.iter().all(|r| r.verified));
    }

    #[test]
    fn strict_pipeline_reports_honest_infeasibility() {
        let g = random_regular_digraph(50, 10, 3).unwrap();
        match pipeline_avoid_c3_c5(&g, 2, Profile::Strict, 7) {
            Err((ReduceError::ParameterInfeasible(msg), reports)) => {
                assert!(msg.contains("avoid-dicycles"), "unexpected stage: {msg}");
                assert!(reports.is_empty());
            }
            other => panic!("expected strict infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn desk_pipeline_demand_failure_names_the_stage() {
        let g = random_regular_digraph(30, 5, 3).unwrap();
        match pipeline_avoid_c3_c5(&g, 2, Profile::Desk, 7) {
            Err((ReduceError::ParameterInfeasible(msg), _)) => {
                assert!(msg.contains("avoid-dicycles"), "got: {msg}");
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }
}
