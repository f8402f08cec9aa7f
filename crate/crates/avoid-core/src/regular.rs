//! Arc-deletion reductions for hosts that are d-regular in both directions:
//! removing every short cycle of the underlying graph while keeping minimum
//! out-degree, and a layered construction whose output cannot host any fixed
//! non-grounded forest. [`regular_avoid`] picks the branch from the shape of
//! the forbidden pattern; grounded forests are refused with a certificate.

use std::collections::BTreeSet;

use num::rational::Ratio;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digraph::Digraph;
use crate::patterns::{self, GroundedCertificate, Pattern, PatternError};
use crate::reductions::{GateMode, StageStats};
use crate::resample::{
    mt_resample, BadEvent, BadEventLabel, EventKind, ResampleConfig, ResampleError,
};
use crate::rng;

/// Hard cap on enumerated cycles, mirroring the directed enumerator.
pub const UNDIRECTED_CYCLE_CAP: usize = 20_000_000;

#[derive(Debug, Error)]
pub enum RegularError {
    #[error("host is not regular in both directions: {0}")]
    NotRegular(String),
    #[error("parameters cannot work: {0}")]
    ParameterInfeasible(String),
    #[error("pattern is a grounded forest; deleting arcs of a regular host cannot rule it out")]
    NotRegularAvoidable(GroundedCertificate),
    #[error(transparent)]
    Budget(#[from] ResampleError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Checks that every vertex has the same out-degree and the same in-degree
/// and returns that common degree.
pub fn regular_degree(d: &Digraph) -> Result<usize, RegularError> {
    if d.n() == 0 {
        return Err(RegularError::NotRegular("empty digraph".into()));
    }
    let deg = d.out_degree(0);
    for v in 0..d.n() {
        if d.out_degree(v) != deg {
            return Err(RegularError::NotRegular(format!(
                "out-degree of {v} is {}, vertex 0 has {deg}",
                d.out_degree(v)
            )));
        }
        if d.in_degree(v) != deg {
            return Err(RegularError::NotRegular(format!(
                "in-degree of {v} is {}, expected {deg}",
                d.in_degree(v)
            )));
        }
    }
    Ok(deg)
}

/// A cyclic layering V_1 … V_t. In a conforming digraph `parts` partitions
/// the vertex set, every arc goes from `parts[i]` to `parts[(i+1) % t]`, and
/// every vertex outside `parts[0]` has in-degree at most one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayeredPartition {
    pub parts: Vec<Vec<usize>>,
    pub t: usize,
}

impl LayeredPartition {
    /// Class index per vertex, or an error message when `parts` is not a
    /// partition of 0..n.
    pub fn class_index(&self, n: usize) -> Result<Vec<usize>, String> {
        let mut class = vec![usize::MAX; n];
        for (i, part) in self.parts.iter().enumerate() {
            for &v in part {
                if v >= n {
                    return Err(format!("vertex {v} out of range"));
                }
                if class[v] != usize::MAX {
                    return Err(format!("vertex {v} listed in two parts"));
                }
                class[v] = i;
            }
        }
        if let Some(v) = class.iter().position(|&c| c == usize::MAX) {
            return Err(format!("vertex {v} missing from every part"));
        }
        Ok(class)
    }
}

/// Violations of the layered invariants on `d`, as messages; empty means the
/// partition is a valid witness. Truncated after 20 entries.
pub fn layered_violations(d: &Digraph, lp: &LayeredPartition) -> Vec<String> {
    let mut out = Vec::new();
    if lp.t == 0 || lp.parts.len() != lp.t {
        out.push(format!(
            "t = {} but {} parts are listed",
            lp.t,
            lp.parts.len()
        ));
        return out;
    }
    let class = match lp.class_index(d.n()) {
        Ok(c) => c,
        Err(msg) => {
            out.push(msg);
            return out;
        }
    };
    for (u, v) in d.arcs() {
        if class[v] != (class[u] + 1) % lp.t {
            out.push(format!(
                "arc ({u}, {v}) goes from class {} to class {}",
                class[u], class[v]
            ));
        }
        if out.len() > 20 {
            out.push("...".into());
            return out;
        }
    }
    for v in 0..d.n() {
        if class[v] != 0 && d.in_degree(v) > 1 {
            out.push(format!(
                "vertex {v} outside the first class has in-degree {}",
                d.in_degree(v)
            ));
            if out.len() > 20 {
                out.push("...".into());
                return out;
            }
        }
    }
    out
}

/// Consequence check for layered outputs: along any simple undirected path
/// with fewer than `lp.t` edges between two first-class vertices, forward
/// and backward arcs balance exactly. Exponential in `t`; for small outputs.
pub fn balanced_paths_violations(d: &Digraph, lp: &LayeredPartition) -> Vec<String> {
    let n = d.n();
    let mut out = Vec::new();
    if lp.parts.is_empty() {
        return out;
    }
    let mut in_first = vec![false; n];
    for &v in &lp.parts[0] {
        if v < n {
            in_first[v] = true;
        }
    }
    // underlying adjacency with orientation sign
    let mut und: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for (u, v) in d.arcs() {
        und[u].push((v, 1));
        und[v].push((u, -1));
    }
    for a in &mut und {
        a.sort_unstable();
    }
    fn walk(
        und: &[Vec<(usize, i64)>],
        in_first: &[bool],
        start: usize,
        cur: usize,
        balance: i64,
        edges_left: usize,
        on_path: &mut [bool],
        out: &mut Vec<String>,
    ) {
        if edges_left == 0 || out.len() > 20 {
            return;
        }
        for &(w, sign) in &und[cur] {
            if on_path[w] {
                continue;
            }
            let b = balance + sign;
            if in_first[w] && w > start && b != 0 {
                out.push(format!(
                    "first-class vertices {start} and {w} joined by a path with imbalance {b}"
                ));
            }
            on_path[w] = true;
            walk(und, in_first, start, w, b, edges_left - 1, on_path, out);
            on_path[w] = false;
        }
    }
    let mut on_path = vec![false; n];
    for &s in &lp.parts[0] {
        if s >= n {
            continue;
        }
        on_path[s] = true;
        walk(&und, &in_first, s, s, 0, lp.t - 1, &mut on_path, &mut out);
        on_path[s] = false;
        if out.len() > 20 {
            out.push("...".into());
            break;
        }
    }
    out
}

/// Class probabilities p_1 … p_t with p_{i+1} = 6k·p_i and Σ p_i = 1, kept
/// exact: p_i = q^{i−1}(q−1)/(q^t−1) with q = 6k. The geometric ratio makes
/// the expected number of surviving out-arcs per vertex at least 2k after
/// the unique-in-arc phase of [`layered_partition`].
#[derive(Debug, Clone)]
pub struct PartitionProbabilities {
    pub probs: Vec<Ratio<u128>>,
    cum: Vec<Ratio<u128>>,
}

impl PartitionProbabilities {
    pub fn new(t: usize, k: usize) -> Result<Self, RegularError> {
        if t == 0 || k == 0 {
            return Err(RegularError::ParameterInfeasible(
                "need t ≥ 1 and k ≥ 1".into(),
            ));
        }
        let q = 6 * k as u128;
        // q^t − 1 is the common denominator; keeping it below 2^40 leaves
        // room for exact 64-bit draw comparisons inside u128
        let qt = q
            .checked_pow(t as u32)
            .filter(|&x| x <= (1 << 40))
            .ok_or_else(|| {
                RegularError::ParameterInfeasible(format!(
                    "(6k)^t out of range for exact arithmetic (k = {k}, t = {t})"
                ))
            })?;
        let denom = qt - 1;
        let mut probs = Vec::with_capacity(t);
        let mut numer = q - 1;
        for _ in 0..t {
            probs.push(Ratio::new(numer, denom));
            numer *= q;
        }
        let mut cum = Vec::with_capacity(t);
        let mut acc = Ratio::from_integer(0u128);
        for p in &probs {
            acc += p;
            cum.push(acc);
        }
        debug_assert_eq!(*cum.last().unwrap(), Ratio::from_integer(1u128));
        Ok(PartitionProbabilities { probs, cum })
    }

    pub fn t(&self) -> usize {
        self.probs.len()
    }

    /// Class of a uniform 64-bit draw: the unique i with
    /// Σ_{j<i} p_j ≤ x/2^64 < Σ_{j≤i} p_j, compared in exact integers.
    pub fn color_of_draw(&self, x: u64) -> usize {
        let x = x as u128;
        for (i, c) in self.cum.iter().enumerate() {
            if x * c.denom() < c.numer() << 64 {
                return i;
            }
        }
        self.cum.len() - 1
    }
}

/// An undirected cycle as edge groups: entry e lists the ids of the arcs
/// realizing edge e (two ids for an antiparallel pair).
pub type UndirectedCycle = Vec<Vec<u32>>;

fn edge_group(d: &Digraph, a: usize, b: usize) -> Vec<u32> {
    let mut g = Vec::with_capacity(2);
    if let Some(id) = d.arc_id(a, b) {
        g.push(id as u32);
    }
    if let Some(id) = d.arc_id(b, a) {
        g.push(id as u32);
    }
    g
}

/// All simple cycles of length `l` in the underlying graph of `d`, each
/// listed once. Length 2 means an antiparallel arc pair. Errors out when
/// more than `cap` cycles exist.
pub fn undirected_cycles(
    d: &Digraph,
    l: usize,
    cap: usize,
) -> Result<Vec<UndirectedCycle>, RegularError> {
    if !(2..=64).contains(&l) {
        return Err(RegularError::ParameterInfeasible(format!(
            "cycle length {l} outside 2..=64"
        )));
    }
    let n = d.n();
    let mut found: Vec<UndirectedCycle> = Vec::new();
    if l == 2 {
        for u in 0..n {
            for &v in d.out_adj(u) {
                if v > u && d.has_arc(v, u) {
                    found.push(vec![
                        vec![d.arc_id(u, v).unwrap() as u32],
                        vec![d.arc_id(v, u).unwrap() as u32],
                    ]);
                    if found.len() > cap {
                        return Err(RegularError::ParameterInfeasible(format!(
                            "more than {cap} cycles of length 2"
                        )));
                    }
                }
            }
        }
        return Ok(found);
    }
    let mut und: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, v) in d.arcs() {
        und[u].push(v);
        und[v].push(u);
    }
    for a in &mut und {
        a.sort_unstable();
        a.dedup();
    }
    // rooted search: the root is the cycle's smallest vertex and the
    // direction is fixed by path[1] < path[l−1], so each cycle shows up once
    fn extend(
        d: &Digraph,
        und: &[Vec<usize>],
        l: usize,
        cap: usize,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        found: &mut Vec<UndirectedCycle>,
    ) -> Result<(), RegularError> {
        let root = path[0];
        let cur = *path.last().unwrap();
        if path.len() == l {
            if path[1] < path[l - 1] && und[root].binary_search(&cur).is_ok() {
                let cycle = (0..l)
                    .map(|i| edge_group(d, path[i], path[(i + 1) % l]))
                    .collect();
                found.push(cycle);
                if found.len() > cap {
                    return Err(RegularError::ParameterInfeasible(format!(
                        "more than {cap} cycles of length {l}"
                    )));
                }
            }
            return Ok(());
        }
        for &w in &und[cur] {
            if w <= root || on_path[w] {
                continue;
            }
            path.push(w);
            on_path[w] = true;
            extend(d, und, l, cap, path, on_path, found)?;
            on_path[w] = false;
            path.pop();
        }
        Ok(())
    }
    let mut path = Vec::with_capacity(l);
    let mut on_path = vec![false; n];
    for root in 0..n {
        path.push(root);
        on_path[root] = true;
        extend(d, &und, l, cap, &mut path, &mut on_path, &mut found)?;
        on_path[root] = false;
        path.pop();
    }
    Ok(found)
}

/// Length of the shortest cycle in the underlying graph, None for forests.
pub fn underlying_girth(g: &Digraph) -> Option<usize> {
    for l in 2..=g.n().min(64) {
        match undirected_cycles(g, l, UNDIRECTED_CYCLE_CAP) {
            Ok(c) if c.is_empty() => continue,
            // found some; overflowing the cap also proves existence
            _ => return Some(l),
        }
    }
    None
}

/// Deletes arcs of a both-ways `d`-regular host so that no length-`l` cycle
/// survives in the underlying graph while every out-degree stays at least
/// ⌈d·p/2⌉ ≥ k. Strict mode pins p = k^{−l} and demands d·k^{−l}/2 ≥ k (so
/// d ≥ 2k^{l+1}); calibrated mode takes p from `cfg` and demands d·p ≥ k.
/// The output is re-verified by exhaustive cycle enumeration.
pub fn avoid_short_cycle_regular(
    d: &Digraph,
    l: usize,
    k: usize,
    cfg: &ResampleConfig,
    mode: GateMode,
) -> Result<(Digraph, StageStats), RegularError> {
    cfg.validate();
    if k == 0 {
        return Err(RegularError::ParameterInfeasible("need k ≥ 1".into()));
    }
    let deg = regular_degree(d)?;
    let p = match mode {
        GateMode::Strict => {
            let p = (k as f64).powi(-(l as i32));
            if (deg as f64) * p / 2.0 < k as f64 {
                return Err(RegularError::ParameterInfeasible(format!(
                    "strict demand d·k^-l/2 ≥ k fails for d = {deg}, k = {k}, l = {l}"
                )));
            }
            p
        }
        GateMode::Calibrated => {
            if (deg as f64) * cfg.p < k as f64 {
                return Err(RegularError::ParameterInfeasible(format!(
                    "calibrated demand d·p ≥ k fails for d = {deg}, p = {}, k = {k}",
                    cfg.p
                )));
            }
            cfg.p
        }
    };
    let theta = (((deg as f64) * p / 2.0).ceil() as usize).max(k);
    let cycles = undirected_cycles(d, l, UNDIRECTED_CYCLE_CAP)?;
    let mut events = Vec::with_capacity(cycles.len() + d.n());
    for (i, cycle) in cycles.iter().enumerate() {
        events.push(BadEvent {
            label: BadEventLabel::CycleSurvives,
            scope: i as u64,
            kind: EventKind::AllGroupsHit { groups: cycle.clone() },
        });
    }
    for v in 0..d.n() {
        let first = d.first_arc_id(v) as u32;
        let vars = (first..first + deg as u32).collect();
        events.push(BadEvent {
            label: BadEventLabel::OutDegreeLow,
            scope: (cycles.len() + v) as u64,
            kind: EventKind::KeptBelow { vars, threshold: theta },
        });
    }
    let mut mt_cfg = cfg.clone();
    mt_cfg.p = p;
    let outcome = mt_resample(d.m(), &events, &mt_cfg, None)?;
    let mut id = 0;
    let g = d.spanning_subgraph(|_, _| {
        let keep = outcome.bits[id];
        id += 1;
        keep
    });
    let survivors = undirected_cycles(&g, l, UNDIRECTED_CYCLE_CAP)?;
    assert!(
        survivors.is_empty(),
        "output still has {} cycles of length {l}",
        survivors.len()
    );
    assert!(g.min_out_degree() >= k, "output lost the degree floor");
    Ok((
        g,
        StageStats { rounds: outcome.rounds, restarts: outcome.restarts_used },
    ))
}

/// Phase 1 of the layered construction: a seeded class assignment, locally
/// redrawn until every vertex sees at least ⌈p_i·d/2⌉ out-neighbors and at
/// most ⌊3p_i·d/2⌋ in-neighbors in every class i (thresholds exact).
/// Returns (colors, rounds, success).
fn color_classes(
    d: &Digraph,
    pp: &PartitionProbabilities,
    lo_out: &[u64],
    hi_in: &[u64],
    max_rounds: u64,
    seed: u64,
) -> (Vec<usize>, u64, bool) {
    let n = d.n();
    let t = pp.t();
    let mut color: Vec<usize> = (0..n)
        .map(|v| pp.color_of_draw(rng::keyed_u64(seed, v as u64)))
        .collect();
    let mut cnt_out = vec![0u64; n * t];
    let mut cnt_in = vec![0u64; n * t];
    for (u, v) in d.arcs() {
        cnt_out[u * t + color[v]] += 1;
        cnt_in[v * t + color[u]] += 1;
    }
    let bad_out =
        |cnt_out: &[u64], v: usize| (0..t).any(|c| cnt_out[v * t + c] < lo_out[c]);
    let bad_in = |cnt_in: &[u64], v: usize| (0..t).any(|c| cnt_in[v * t + c] > hi_in[c]);
    // an event keys on (vertex, side): side 0 reads colors of N⁺(v), side 1
    // of N⁻(v); redrawing exactly those colors is the repair step
    let mut bad: BTreeSet<(usize, u8)> = BTreeSet::new();
    for v in 0..n {
        if bad_out(&cnt_out, v) {
            bad.insert((v, 0));
        }
        if bad_in(&cnt_in, v) {
            bad.insert((v, 1));
        }
    }
    let mut stream = rng::stream(seed, 0xC070_0001);
    let mut rounds = 0u64;
    let mut touched: Vec<usize> = Vec::new();
    let mut stamp = vec![u64::MAX; n];
    while let Some(&(v, side)) = bad.iter().next() {
        if rounds == max_rounds {
            return (color, rounds, false);
        }
        rounds += 1;
        touched.clear();
        let nbrs = if side == 0 { d.out_adj(v) } else { d.in_adj(v) };
        for &w in nbrs {
            let new = pp.color_of_draw(stream.next_u64());
            let old = color[w];
            if new == old {
                continue;
            }
            color[w] = new;
            for &u in d.in_adj(w) {
                cnt_out[u * t + old] -= 1;
                cnt_out[u * t + new] += 1;
                if stamp[u] != rounds {
                    stamp[u] = rounds;
                    touched.push(u);
                }
            }
            for &u in d.out_adj(w) {
                cnt_in[u * t + old] -= 1;
                cnt_in[u * t + new] += 1;
                if stamp[u] != rounds {
                    stamp[u] = rounds;
                    touched.push(u);
                }
            }
        }
        for &u in touched.iter().chain(std::iter::once(&v)) {
            if bad_out(&cnt_out, u) {
                bad.insert((u, 0));
            } else {
                bad.remove(&(u, 0));
            }
            if bad_in(&cnt_in, u) {
                bad.insert((u, 1));
            } else {
                bad.remove(&(u, 1));
            }
        }
    }
    (color, rounds, true)
}

/// Splits a both-ways regular host into t cyclically ordered classes and
/// thins it to one kept in-arc per vertex outside the first class. The class
/// probabilities grow geometrically with ratio 6k, which keeps the expected
/// surviving out-degree at 2k or more; the result is re-verified to have
/// min out-degree ≥ k and the layered invariants. Strict mode additionally
/// pins d = k^{2t}; both modes demand p_1·d ≥ 2k (checked exactly).
pub fn layered_partition(
    d: &Digraph,
    t: usize,
    k: usize,
    cfg: &ResampleConfig,
    mode: GateMode,
) -> Result<(Digraph, LayeredPartition, StageStats), RegularError> {
    cfg.validate();
    if k == 0 {
        return Err(RegularError::ParameterInfeasible("need k ≥ 1".into()));
    }
    let deg = regular_degree(d)?;
    let pp = PartitionProbabilities::new(t, k)?;
    if let GateMode::Strict = mode {
        if (k as u128).checked_pow(2 * t as u32) != Some(deg as u128) {
            return Err(RegularError::ParameterInfeasible(format!(
                "strict profile pins d = k^(2t); got d = {deg} for k = {k}, t = {t}"
            )));
        }
    }
    let p1 = pp.probs[0];
    if p1.numer() * (deg as u128) < 2 * (k as u128) * p1.denom() {
        return Err(RegularError::ParameterInfeasible(format!(
            "demand p_1·d ≥ 2k fails: p_1 = {p1}, d = {deg}, k = {k}"
        )));
    }
    // exact integer thresholds for the class-degree window
    let lo_out: Vec<u64> = pp
        .probs
        .iter()
        .map(|p| {
            let (num, den) = (p.numer() * deg as u128, 2 * p.denom());
            (num.div_ceil(den)) as u64
        })
        .collect();
    let hi_in: Vec<u64> = pp
        .probs
        .iter()
        .map(|p| ((3 * p.numer() * deg as u128) / (2 * p.denom())) as u64)
        .collect();
    let n = d.n();
    let mut rounds_total = 0u64;
    let mut last_label = BadEventLabel::DegreeOutOfRange;
    for attempt in 0..cfg.restarts {
        let aseed = rng::derive(cfg.seed, 0x4A7E_0000 + attempt as u64);
        let (color, rounds, ok) =
            color_classes(d, &pp, &lo_out, &hi_in, cfg.max_rounds, aseed);
        rounds_total += rounds;
        if !ok {
            last_label = BadEventLabel::DegreeOutOfRange;
            continue;
        }
        // phase 2: only arcs stepping one class forward survive
        let g2 = d.spanning_subgraph(|u, v| color[v] == (color[u] + 1) % t);
        // phase 3: outside the first class, one uniformly chosen in-arc stays
        let pick_seed = rng::derive(aseed, 0x9CED);
        let keep_rank: Vec<usize> = (0..n)
            .map(|w| {
                let indeg = g2.in_degree(w);
                if color[w] == 0 || indeg == 0 {
                    0
                } else {
                    (rng::keyed_u64(pick_seed, w as u64) % indeg as u64) as usize
                }
            })
            .collect();
        let mut seen_in = vec![0usize; n];
        let g3 = g2.spanning_subgraph(|_, w| {
            let keep = color[w] == 0 || seen_in[w] == keep_rank[w];
            seen_in[w] += 1;
            keep
        });
        if g3.min_out_degree() < k {
            last_label = BadEventLabel::OutDegreeLow;
            continue;
        }
        let mut parts = vec![Vec::new(); t];
        for v in 0..n {
            parts[color[v]].push(v);
        }
        let lp = LayeredPartition { parts, t };
        let viols = layered_violations(&g3, &lp);
        assert!(viols.is_empty(), "layered output broke invariants: {viols:?}");
        return Ok((
            g3,
            lp,
            StageStats { rounds: rounds_total, restarts: attempt },
        ));
    }
    Err(ResampleError::BudgetExceeded {
        surviving: vec![(last_label, 0)],
        rounds: rounds_total,
    }
    .into())
}

/// Smallest layer count that blocks every embedding of the non-grounded
/// forest `f`: vertices with in-degree ≥ 2 can only land in the first class,
/// and an unbalanced path between two of them contradicts the cyclic level
/// structure whenever it is shorter than t. Returns 1 + the length of the
/// shortest unbalanced path between in-degree-≥2 vertices, None when no such
/// pair exists (the forest is grounded).
pub fn forest_layer_count(f: &Digraph) -> Option<usize> {
    let heavy: Vec<usize> = (0..f.n()).filter(|&v| f.in_degree(v) >= 2).collect();
    let mut best: Option<usize> = None;
    for (i, &u) in heavy.iter().enumerate() {
        for &v in &heavy[i + 1..] {
            if let Some((fwd, bwd)) = patterns::path_balance(f, u, v) {
                if fwd != bwd {
                    let t = fwd + bwd + 1;
                    best = Some(best.map_or(t, |b| b.min(t)));
                }
            }
        }
    }
    best
}

/// Which reduction handled the pattern.
#[derive(Debug, Clone)]
pub enum AvoidBranch {
    ShortCycle { l: usize },
    Layered { partition: LayeredPartition },
}

#[derive(Debug, Clone)]
pub struct RegularOutcome {
    pub graph: Digraph,
    pub branch: AvoidBranch,
    pub stats: StageStats,
}

/// Deletes arcs of a both-ways regular host so the result has minimum
/// out-degree ≥ k and no copy of `f`. Patterns whose underlying graph has a
/// cycle go through [`avoid_short_cycle_regular`] at the underlying girth;
/// non-grounded forests go through [`layered_partition`]; grounded forests
/// are refused, returning the certificate. The output is re-checked against
/// `f` by exhaustive embedding search.
pub fn regular_avoid(
    d: &Digraph,
    f: &Pattern,
    k: usize,
    cfg: &ResampleConfig,
    mode: GateMode,
) -> Result<RegularOutcome, RegularError> {
    let fg = &f.graph;
    if fg.m() == 0 {
        return Err(RegularError::ParameterInfeasible(
            "pattern has no arcs".into(),
        ));
    }
    if let Some(l) = underlying_girth(fg) {
        let (graph, stats) = avoid_short_cycle_regular(d, l, k, cfg, mode)?;
        assert!(
            patterns::find_pattern(&graph, fg).is_none(),
            "output of the short-cycle branch still embeds {}",
            f.name
        );
        return Ok(RegularOutcome { graph, branch: AvoidBranch::ShortCycle { l }, stats });
    }
    match patterns::is_grounded_forest(fg)? {
        cert @ GroundedCertificate::Grounded { .. } => {
            Err(RegularError::NotRegularAvoidable(cert))
        }
        GroundedCertificate::NotGrounded { .. } => {
            let t = forest_layer_count(fg)
                .expect("non-grounded forests have an unbalanced heavy pair");
            let (graph, partition, stats) = layered_partition(d, t, k, cfg, mode)?;
            assert!(
                patterns::find_pattern(&graph, fg).is_none(),
                "layered output still embeds {}",
                f.name
            );
            Ok(RegularOutcome { graph, branch: AvoidBranch::Layered { partition }, stats })
        }
    }
}
