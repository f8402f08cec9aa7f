#![no_main]

use avoid_core::io::parse_digraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = parse_digraph(text) {
        // accepted graphs satisfy the arc-list invariants
        assert_eq!(g.m(), g.arcs().count());
        assert!(g.arcs().all(|(u, v)| u < g.n() && v < g.n() && u != v));
        for v in 0..g.n() {
            assert_eq!(g.out_degree(v), g.out_adj(v).len());
        }
    }
});
