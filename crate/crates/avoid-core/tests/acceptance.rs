//! End-to-end acceptance checks. Each test covers one advertised guarantee
//! on realistic instance sizes, re-verifying outputs with independent
//! checkers rather than trusting internal asserts. Randomized stages get a
//! success quota; deterministic claims must hold on every sample.

use std::time::Instant;

use avoid_core::constructions::{bipartite_gadget, random_regular_digraph};
use avoid_core::digraph::Digraph;
use avoid_core::oracle::{check_unavoidable, max_f_free_min_outdegree, OracleCaps, Verdict};
use avoid_core::patterns::{
    cycle_orientation, directed_cycle, find_pattern, is_grounded_forest, one_directed_bipartite,
    GroundedCertificate, Pattern,
};
use avoid_core::reductions::{
    extract_typed, majority_3_coloring, pipeline_avoid_c3_c5, typed_violations, Class, GateMode,
    Profile, TypedPartition,
};
use avoid_core::regular::{
    avoid_short_cycle_regular, layered_partition, layered_violations, regular_avoid,
    undirected_cycles, AvoidBranch, PartitionProbabilities, RegularError, UNDIRECTED_CYCLE_CAP,
};
use avoid_core::resample::ResampleConfig;
use avoid_core::rng;
use num::rational::Ratio;

fn cfg(p: f64, max_rounds: u64, restarts: u32, seed: u64) -> ResampleConfig {
    ResampleConfig { p, d_trim: 0, max_rounds, restarts, seed }
}

/// Tripartite host with every vertex sending exactly `dplus` arcs into the
/// other two classes.
fn tripartite_host(n: usize, dplus: usize, seed: u64) -> (Digraph, Vec<Class>) {
    let palette = [Class::A, Class::B, Class::C];
    let classes: Vec<Class> = (0..n).map(|v| palette[v % 3]).collect();
    let mut arcs = Vec::with_capacity(n * dplus);
    for v in 0..n {
        let cands: Vec<usize> = (0..n).filter(|&w| classes[w] != classes[v]).collect();
        let mut r = rng::stream(seed, v as u64);
        for i in rand::seq::index::sample(&mut r, cands.len(), dplus) {
            arcs.push((v, cands[i]));
        }
    }
    (Digraph::from_arcs(n, &arcs).unwrap(), classes)
}

fn typed_batch(count: u64) -> Vec<(u64, Digraph, TypedPartition)> {
    (0..count)
        .map(|seed| {
            let (g, classes) = tripartite_host(501, 27, 1000 + seed);
            assert_eq!(g.min_out_degree(), 27, "host seed {seed}");
            let (typed, tp) = extract_typed(&g, &TypedPartition::untyped(classes), 2)
                .unwrap_or_else(|e| panic!("typing failed on seed {seed}: {e}"));
            (seed, typed, tp)
        })
        .collect()
}

#[test]
fn a01_typing_keeps_a_ninth_of_the_out_degree() {
    let t0 = Instant::now();
    for (seed, typed, tp) in typed_batch(50) {
        assert!(
            typed_violations(&typed, &tp).is_empty(),
            "typed invariants fail on seed {seed}"
        );
        assert!(
            typed.min_out_degree() >= 27usize.div_ceil(9),
            "seed {seed}: min out-degree {} < 3",
            typed.min_out_degree()
        );
    }
    println!("a01: 50/50 hosts 2-typed with min out-degree >= 3 in {:?}", t0.elapsed());
}

#[test]
fn a02_typed_outputs_avoid_the_easy_orientations() {
    let t0 = Instant::now();
    for (seed, typed, _) in typed_batch(50) {
        for name in ["c3_2", "c5_3", "c5_4"] {
            let f = cycle_orientation(name).unwrap();
            assert!(
                find_pattern(&typed, &f.graph).is_none(),
                "a copy of {name} survives typing on seed {seed}"
            );
        }
    }
    println!("a02: 50/50 typed outputs free of c3_2, c5_3, c5_4 in {:?}", t0.elapsed());
}

#[test]
fn a03_majority_coloring_on_regular_hosts() {
    let t0 = Instant::now();
    let mut ok = 0;
    for i in 0..50u64 {
        let n = 200 + ((i * 97) % 1800) as usize;
        let d = 3 + (i % 30) as usize;
        let g = random_regular_digraph(n, d, 7000 + i).unwrap();
        let c = match majority_3_coloring(&g, &cfg(1.0, 50 * n as u64 + 1000, 10, 300 + i)) {
            Ok(c) => c,
            Err(_) => continue,
        };
        // independent re-check of the majority condition
        for v in 0..g.n() {
            let diff = g.out_adj(v).iter().filter(|&&w| c[w] != c[v]).count();
            assert!(
                diff >= g.out_degree(v).div_ceil(3),
                "host {i}: vertex {v} has {diff} differing out-neighbors"
            );
        }
        ok += 1;
    }
    assert!(ok >= 48, "only {ok}/50 colorings succeeded");
    println!("a03: {ok}/50 regular hosts majority-3-colored in {:?}", t0.elapsed());
}

#[test]
fn a04_triangle_removal_on_regular_hosts() {
    let t0 = Instant::now();
    let mut ok = 0;
    for seed in 0..20u64 {
        let g = random_regular_digraph(3000, 50, 4000 + seed).unwrap();
        match avoid_short_cycle_regular(&g, 3, 2, &cfg(0.125, 2_000_000, 5, 40 + seed), GateMode::Strict) {
            Ok((out, _)) => {
                assert!(out.min_out_degree() >= 2, "seed {seed}");
                let survivors = undirected_cycles(&out, 3, UNDIRECTED_CYCLE_CAP).unwrap();
                assert!(survivors.is_empty(), "seed {seed}: {} triangles left", survivors.len());
                ok += 1;
            }
            Err(RegularError::Budget(_)) => {}
            Err(e) => panic!("seed {seed}: unexpected error {e}"),
        }
    }
    assert!(ok >= 18, "only {ok}/20 runs succeeded");
    println!("a04: {ok}/20 hosts made triangle-free with min out-degree >= 2 in {:?}", t0.elapsed());
}

#[test]
fn a05_two_class_layering_on_regular_hosts() {
    let t0 = Instant::now();
    // the class-size profile is exact in rationals
    let pp = PartitionProbabilities::new(2, 2).unwrap();
    assert_eq!(pp.probs[1] / pp.probs[0], Ratio::from_integer(12u128));
    assert_eq!(pp.probs.iter().copied().sum::<Ratio<u128>>(), Ratio::from_integer(1u128));

    let mut ok = 0;
    for seed in 0..10u64 {
        let g = random_regular_digraph(2000, 384, 5000 + seed).unwrap();
        match layered_partition(&g, 2, 2, &cfg(1.0, 200_000, 10, 50 + seed), GateMode::Calibrated) {
            Ok((out, lp, _)) => {
                let viols = layered_violations(&out, &lp);
                assert!(viols.is_empty(), "seed {seed}: {viols:?}");
                assert!(out.min_out_degree() >= 2, "seed {seed}");
                ok += 1;
            }
            Err(RegularError::Budget(_)) => {}
            Err(e) => panic!("seed {seed}: unexpected error {e}"),
        }
    }
    assert!(ok >= 9, "only {ok}/10 layerings succeeded");
    println!("a05: {ok}/10 hosts layered with all invariants exact in {:?}", t0.elapsed());
}

#[test]
fn a06_full_reduction_to_c3_c5_free_with_degree_two() {
    let t0 = Instant::now();
    let mut ok = 0;
    let mut failures = Vec::new();
    for seed in 0..10u64 {
        let g = random_regular_digraph(2000, 480, 6000 + seed).unwrap();
        match pipeline_avoid_c3_c5(&g, 2, Profile::Desk, 60 + seed) {
            Ok(out) => {
                assert!(out.graph.min_out_degree() >= 2, "seed {seed}");
                for name in ["c3_1", "c3_2", "c5_1", "c5_2", "c5_3", "c5_4"] {
                    let f = cycle_orientation(name).unwrap();
                    assert!(
                        find_pattern(&out.graph, &f.graph).is_none(),
                        "seed {seed}: a copy of {name} survives the pipeline"
                    );
                }
                assert!(out.reports.iter().all(|r| r.verified), "seed {seed}");
                ok += 1;
            }
            Err((e, _)) => failures.push(format!("seed {seed}: {e}")),
        }
    }
    assert!(ok >= 8, "only {ok}/10 pipeline runs succeeded: {failures:?}");
    println!("a06: {ok}/10 pipeline runs verified free of all six orientations in {:?}", t0.elapsed());
}

#[test]
fn a07_bipartite_gadget_is_certified_unavoidable() {
    let t0 = Instant::now();
    let g = bipartite_gadget(1, 2, 2, 2).unwrap();
    let f = one_directed_bipartite(1, 2);
    match check_unavoidable(&g.graph, &f, 2, &OracleCaps::default()) {
        Verdict::UnavoidableWitness { value } => assert!(value < 2, "value {value}"),
        other => panic!("expected an unavoidable verdict, got {other:?}"),
    }
    println!("a07: gadget certified unavoidable at degree 2 in {:?}", t0.elapsed());
}

/// Literal reference semantics for the oracle: every vertex subset with
/// every arc subset, freeness decided on the materialized sub-digraph.
fn brute_force_value(d: &Digraph, f: &Digraph) -> usize {
    let n = d.n();
    let arcs: Vec<(usize, usize)> = d.arcs().collect();
    let mut best = 0usize;
    for wmask in 1u32..(1 << n) {
        let verts: Vec<usize> = (0..n).filter(|&v| wmask & (1 << v) != 0).collect();
        let inside: Vec<(usize, usize)> = arcs
            .iter()
            .copied()
            .filter(|&(u, v)| wmask & (1 << u) != 0 && wmask & (1 << v) != 0)
            .collect();
        let idx: std::collections::HashMap<usize, usize> =
            verts.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for smask in 0u32..(1 << inside.len()) {
            let picked: Vec<(usize, usize)> = inside
                .iter()
                .enumerate()
                .filter(|(i, _)| smask & (1 << i) != 0)
                .map(|(_, &(u, v))| (idx[&u], idx[&v]))
                .collect();
            let sub = Digraph::from_arcs(verts.len(), &picked).unwrap();
            if sub.min_out_degree() > best && find_pattern(&sub, f).is_none() {
                best = sub.min_out_degree();
            }
        }
    }
    best
}

#[test]
fn a08_branch_and_bound_matches_brute_force() {
    let t0 = Instant::now();
    let patterns: Vec<(&str, Digraph)> = vec![
        ("arc", Digraph::from_arcs(2, &[(0, 1)]).unwrap()),
        ("c3_1", directed_cycle(3).graph),
        ("c3_2", cycle_orientation("c3_2").unwrap().graph),
    ];
    let caps = OracleCaps::default();
    let mut sampled = 0u32;
    let mut seed = 0u64;
    while sampled < 500 {
        seed += 1;
        let n = 3 + (seed % 3) as usize;
        let mut arcs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if u != v && rng::keyed_bernoulli(90_000 + seed, (u * n + v) as u64, 0.4) {
                    arcs.push((u, v));
                }
            }
        }
        if arcs.len() < 2 || arcs.len() > 8 {
            continue;
        }
        let g = Digraph::from_arcs(n, &arcs).unwrap();
        sampled += 1;
        for (name, f) in &patterns {
            let fast = max_f_free_min_outdegree(&g, f, &caps).unwrap().value;
            let slow = brute_force_value(&g, f);
            assert_eq!(fast, slow, "host seed {seed}, pattern {name}");
        }
    }
    println!("a08: 500/500 hosts, 3 patterns each, search equals brute force in {:?}", t0.elapsed());
}

fn random_oriented_forest(n: usize, seed: u64) -> Digraph {
    let mut arcs = Vec::new();
    for v in 1..n {
        if rng::keyed_u64(seed, v as u64) % 10 < 8 {
            let u = (rng::keyed_u64(seed, 1000 + v as u64) % v as u64) as usize;
            if rng::keyed_u64(seed, 2000 + v as u64) % 2 == 0 {
                arcs.push((u, v));
            } else {
                arcs.push((v, u));
            }
        }
    }
    Digraph::from_arcs(n, &arcs).unwrap()
}

/// Signed arc count along the unique underlying path, if the endpoints are
/// connected: forward arcs count +1, backward arcs -1.
fn path_imbalance(f: &Digraph, from: usize, to: usize) -> Option<i64> {
    let n = f.n();
    let mut und: Vec<Vec<(usize, i64)>> = vec![Vec::new(); n];
    for (a, b) in f.arcs() {
        und[a].push((b, 1));
        und[b].push((a, -1));
    }
    let mut stack = vec![(from, 0i64)];
    let mut seen = vec![false; n];
    seen[from] = true;
    while let Some((x, acc)) = stack.pop() {
        if x == to {
            return Some(acc);
        }
        for &(y, w) in &und[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push((y, acc + w));
            }
        }
    }
    None
}

/// Reference classifier: a forest is grounded exactly when every pair of
/// in-degree-2+ vertices in a common component sits at balanced path offset.
fn brute_grounded(f: &Digraph) -> bool {
    let heavy: Vec<usize> = (0..f.n()).filter(|&v| f.in_degree(v) >= 2).collect();
    for (i, &u) in heavy.iter().enumerate() {
        for &v in &heavy[i + 1..] {
            if path_imbalance(f, u, v).is_some_and(|delta| delta != 0) {
                return false;
            }
        }
    }
    true
}

#[test]
fn a09_grounded_classifier_matches_path_balance() {
    let t0 = Instant::now();
    let mut grounded = 0;
    let mut non_grounded = 0;
    for seed in 0..1000u64 {
        let n = 2 + (seed % 6) as usize;
        let f = random_oriented_forest(n, 8000 + seed);
        let cert = is_grounded_forest(&f).unwrap();
        assert!(cert.verify(&f), "certificate fails to re-verify on seed {seed}");
        let expected = brute_grounded(&f);
        match cert {
            GroundedCertificate::Grounded { .. } => {
                assert!(expected, "seed {seed}: classifier says grounded, paths disagree");
                grounded += 1;
            }
            GroundedCertificate::NotGrounded { .. } => {
                assert!(!expected, "seed {seed}: classifier says non-grounded, paths disagree");
                non_grounded += 1;
            }
        }
    }
    assert!(grounded > 0 && non_grounded > 0, "degenerate sample: {grounded}/{non_grounded}");
    println!(
        "a09: 1000/1000 forests agree ({grounded} grounded, {non_grounded} not) in {:?}",
        t0.elapsed()
    );
}

#[test]
fn a10_dispatch_layers_forests_and_refuses_grounded_ones() {
    let t0 = Instant::now();
    // smallest forest with two heavy vertices at unbalanced offset
    let w5 = Pattern::new(
        "w5",
        Digraph::from_arcs(5, &[(0, 2), (1, 2), (2, 3), (4, 3)]).unwrap(),
    );
    let host = random_regular_digraph(1200, 512, 0xA10).unwrap();
    let run_cfg = cfg(1.0, 200_000, 10, 0xA10);
    let out = regular_avoid(&host, &w5, 2, &run_cfg, GateMode::Calibrated).unwrap();
    assert!(out.graph.min_out_degree() >= 2);
    assert!(find_pattern(&out.graph, &w5.graph).is_none());
    match &out.branch {
        AvoidBranch::Layered { partition } => {
            assert!(layered_violations(&out.graph, partition).is_empty());
        }
        other => panic!("expected the layered branch, got {other:?}"),
    }

    // a directed path is grounded: refusal with a certificate that re-verifies
    let path = Pattern::new("p3", Digraph::from_arcs(3, &[(0, 1), (1, 2)]).unwrap());
    let ring = directed_cycle(6).graph;
    match regular_avoid(&ring, &path, 1, &run_cfg, GateMode::Calibrated) {
        Err(RegularError::NotRegularAvoidable(cert)) => {
            assert!(cert.verify(&path.graph));
            assert!(matches!(cert, GroundedCertificate::Grounded { .. }));
        }
        other => panic!("expected a refusal, got {other:?}"),
    }

    // cyclic patterns take the girth branch
    let tri = cycle_orientation("c3_1").unwrap();
    let ring4 = directed_cycle(4).graph;
    let out2 = regular_avoid(&ring4, &tri, 1, &run_cfg, GateMode::Calibrated).unwrap();
    assert!(matches!(out2.branch, AvoidBranch::ShortCycle { l: 3 }));
    println!("a10: forest dispatch, grounded refusal, and girth branch all verified in {:?}", t0.elapsed());
}
