//! Randomized invariant checks pitting the library against independent
//! reference implementations: literal subset enumeration for cores and
//! degeneracy, injection enumeration for the pattern matcher, orbit counting
//! for the orientation catalog, and offset propagation for height functions.

use avoid_core::digraph::{degeneracy_ordering, Digraph, Direction, MultiDigraph};
use avoid_core::io::{emit_digraph, emit_pattern, parse_digraph, pattern_name};
use avoid_core::patterns::{
    canonical_code, check_embedding, compute_height_function, enumerate_orientations,
    find_pattern, is_grounded_forest,
};
use proptest::prelude::*;

fn arb_digraph(max_n: usize, max_m: usize) -> impl Strategy<Value = Digraph> {
    (1..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec((0..n, 0..n), 0..=max_m).prop_map(move |pairs| {
            let arcs: Vec<(usize, usize)> =
                pairs.into_iter().filter(|&(u, v)| u != v).collect();
            Digraph::from_arcs(n, &arcs).unwrap()
        })
    })
}

fn arb_multi(max_n: usize, max_m: usize) -> impl Strategy<Value = MultiDigraph> {
    (1..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec((0..n, 0..n, 0..n), 0..=max_m).prop_map(move |triples| {
            let arcs: Vec<_> = triples.into_iter().filter(|&(u, v, _)| u != v).collect();
            MultiDigraph::from_arcs(n, arcs).unwrap()
        })
    })
}

/// Union of trees: every vertex attaches to at most one smaller vertex, with
/// a random arc orientation.
fn arb_forest(max_n: usize) -> impl Strategy<Value = Digraph> {
    (2..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(proptest::option::of((any::<usize>(), any::<bool>())), n - 1)
            .prop_map(move |choices| {
                let mut arcs = Vec::new();
                for (i, c) in choices.into_iter().enumerate() {
                    let v = i + 1;
                    if let Some((sel, fwd)) = c {
                        let u = sel % v;
                        arcs.push(if fwd { (u, v) } else { (v, u) });
                    }
                }
                Digraph::from_arcs(n, &arcs).unwrap()
            })
    })
}

/// Plain enumeration of injective vertex maps preserving every pattern arc.
fn injection_exists(d: &Digraph, f: &Digraph) -> bool {
    fn rec(d: &Digraph, f: &Digraph, phi: &mut Vec<usize>, used: &mut [bool]) -> bool {
        if phi.len() == f.n() {
            return f.arcs().all(|(a, b)| d.has_arc(phi[a], phi[b]));
        }
        for w in 0..d.n() {
            if used[w] {
                continue;
            }
            used[w] = true;
            phi.push(w);
            if rec(d, f, phi, used) {
                return true;
            }
            phi.pop();
            used[w] = false;
        }
        false
    }
    f.n() <= d.n() && rec(d, f, &mut Vec::new(), &mut vec![false; d.n()])
}

proptest! {
    #[test]
    fn emit_parse_roundtrip(g in arb_digraph(10, 30)) {
        let back = parse_digraph(&emit_digraph(&g)).unwrap();
        prop_assert_eq!(back, g.clone());

        let tagged = emit_pattern("probe", &g);
        prop_assert_eq!(pattern_name(&tagged), Some("probe"));
        prop_assert_eq!(parse_digraph(&tagged).unwrap(), g);
    }

    #[test]
    fn reachable_walks_compose(
        g in arb_digraph(8, 24),
        starts in proptest::collection::vec(0usize..8, 0..4),
        i in 0usize..4,
        j in 0usize..4,
        forward in any::<bool>(),
    ) {
        let dir = if forward { Direction::Forward } else { Direction::Backward };
        let starts: Vec<usize> = starts.into_iter().filter(|&v| v < g.n()).collect();
        let whole = g.reachable_set(&starts, i + j, dir);
        let mid = g.reachable_set(&starts, i, dir);
        let stepped = g.reachable_set(&mid, j, dir);
        prop_assert_eq!(whole, stepped);
    }

    #[test]
    fn out_core_is_the_union_of_all_good_subsets(g in arb_digraph(7, 20), k in 0usize..4) {
        let (core, core_verts) = g.out_core(k);
        if core.n() > 0 {
            prop_assert!(core.min_out_degree() >= k);
        }
        let n = g.n();
        let mut union_mask = 0u64;
        for mask in 1u64..(1 << n) {
            let verts: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
            let (sub, _) = g.induced_subgraph(&verts);
            if sub.min_out_degree() >= k {
                union_mask |= mask;
            }
        }
        let core_mask = core_verts.iter().fold(0u64, |m, &v| m | (1 << v));
        prop_assert_eq!(core_mask, union_mask);
    }

    #[test]
    fn max_core_value_matches_subset_enumeration(g in arb_digraph(7, 20)) {
        let n = g.n();
        let brute = (1u64..(1 << n))
            .map(|mask| {
                let verts: Vec<usize> = (0..n).filter(|&v| mask & (1 << v) != 0).collect();
                g.induced_subgraph(&verts).0.min_out_degree()
            })
            .max()
            .unwrap_or(0);
        prop_assert_eq!(g.max_core_value(), brute);
    }

    #[test]
    fn degeneracy_matches_subset_enumeration(g in arb_multi(6, 18)) {
        let ord = degeneracy_ordering(&g);
        let n = g.n();
        for v in 0..n {
            let earlier = g
                .out_arcs(v)
                .iter()
                .chain(g.in_arcs(v))
                .filter(|&&(u, _)| ord.position[u] < ord.position[v])
                .count();
            prop_assert!(earlier <= ord.bound, "vertex {} exceeds the bound", v);
        }
        let mut brute = 0;
        for mask in 1u64..(1 << n) {
            let min_deg = (0..n)
                .filter(|&v| mask & (1 << v) != 0)
                .map(|v| {
                    g.out_arcs(v)
                        .iter()
                        .chain(g.in_arcs(v))
                        .filter(|&&(u, _)| mask & (1 << u) != 0)
                        .count()
                })
                .min()
                .unwrap();
            brute = brute.max(min_deg);
        }
        prop_assert_eq!(ord.bound, brute);
        // out-multiplicity Δ+ ≤ k forces 2k-degeneracy
        let max_out = (0..n).map(|v| g.out_arcs(v).len()).max().unwrap_or(0);
        prop_assert!(ord.bound <= 2 * max_out);
    }

    #[test]
    fn pattern_matcher_agrees_with_injection_enumeration(
        d in arb_digraph(6, 18),
        f in arb_digraph(4, 6),
    ) {
        let found = find_pattern(&d, &f);
        if let Some(phi) = &found {
            prop_assert!(check_embedding(&d, &f, phi));
        }
        prop_assert_eq!(found.is_some(), injection_exists(&d, &f));
    }

    #[test]
    fn subsampling_is_deterministic_and_scoped(
        g in arb_digraph(8, 24),
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let a = g.subsample_arcs(p, seed, |_, _| true);
        let b = g.subsample_arcs(p, seed, |_, _| true);
        prop_assert_eq!(a, b);
        prop_assert_eq!(g.subsample_arcs(1.0, seed, |_, _| true), g.clone());
        prop_assert_eq!(g.subsample_arcs(0.0, seed, |_, _| true).m(), 0);
        // arcs outside the subject predicate survive any p
        let scoped = g.subsample_arcs(0.0, seed, |u, _| u % 2 == 0);
        for (u, v) in g.arcs() {
            if u % 2 != 0 {
                prop_assert!(scoped.has_arc(u, v));
            }
        }
    }

    #[test]
    fn forests_admit_verifying_heights_and_certificates(f in arb_forest(8)) {
        let h = compute_height_function(&f).expect("forests admit height functions");
        for (u, v) in f.arcs() {
            prop_assert_eq!(h[v], h[u] + 1);
        }
        let cert = is_grounded_forest(&f).unwrap();
        prop_assert!(cert.verify(&f));
    }

    #[test]
    fn height_existence_matches_offset_propagation(g in arb_digraph(7, 14)) {
        match compute_height_function(&g) {
            Some(h) => {
                for (u, v) in g.arcs() {
                    prop_assert_eq!(h[v], h[u] + 1);
                }
            }
            None => {
                // independent route: forced offset propagation over the
                // underlying graph must hit a contradiction
                let n = g.n();
                let mut off: Vec<Option<i64>> = vec![None; n];
                let mut contradiction = false;
                'roots: for root in 0..n {
                    if off[root].is_some() {
                        continue;
                    }
                    off[root] = Some(0);
                    let mut stack = vec![root];
                    while let Some(x) = stack.pop() {
                        let ox = off[x].unwrap();
                        let steps: Vec<(usize, i64)> = g
                            .out_adj(x)
                            .iter()
                            .map(|&y| (y, 1))
                            .chain(g.in_adj(x).iter().map(|&y| (y, -1)))
                            .collect();
                        for (y, w) in steps {
                            match off[y] {
                                None => {
                                    off[y] = Some(ox + w);
                                    stack.push(y);
                                }
                                Some(oy) => {
                                    if oy != ox + w {
                                        contradiction = true;
                                        break 'roots;
                                    }
                                }
                            }
                        }
                    }
                }
                prop_assert!(contradiction, "no height function, yet offsets are consistent");
            }
        }
    }
}

#[test]
fn orientation_catalog_matches_necklace_orbits() {
    // independent count: orbits of direction strings under rotation and
    // reversal-with-flip, the automorphisms of the underlying cycle
    fn orbit_count(l: usize) -> usize {
        let rotate = |x: u32| {
            let mut y = 0;
            for i in 0..l {
                if x & (1 << i) != 0 {
                    y |= 1 << ((i + 1) % l);
                }
            }
            y
        };
        let reflect = |x: u32| {
            let mut y = 0;
            for i in 0..l {
                if x & (1 << i) == 0 {
                    y |= 1 << (l - 1 - i);
                }
            }
            y
        };
        let mut seen = vec![false; 1 << l];
        let mut orbits = 0;
        for s in 0..(1u32 << l) {
            if seen[s as usize] {
                continue;
            }
            orbits += 1;
            let mut stack = vec![s];
            seen[s as usize] = true;
            while let Some(x) = stack.pop() {
                for y in [rotate(x), reflect(x)] {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        stack.push(y);
                    }
                }
            }
        }
        orbits
    }

    for l in 3..=8 {
        let pats = enumerate_orientations(l);
        for p in &pats {
            assert_eq!(p.graph.n(), l);
            assert_eq!(p.graph.m(), l);
            for v in 0..l {
                assert_eq!(p.graph.out_degree(v) + p.graph.in_degree(v), 2);
            }
        }
        let mut codes: Vec<u64> = pats.iter().map(|p| canonical_code(&p.graph)).collect();
        codes.sort_unstable();
        codes.dedup();
        assert_eq!(codes.len(), pats.len(), "duplicate orientations at l={l}");
        assert_eq!(pats.len(), orbit_count(l), "catalog size differs at l={l}");
    }
    assert_eq!(enumerate_orientations(3).len(), 2);
    assert_eq!(enumerate_orientations(4).len(), 4);
    assert_eq!(enumerate_orientations(5).len(), 4);
}
