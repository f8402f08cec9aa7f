#![no_main]

use avoid_core::io::{emit_digraph, parse_digraph};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(g) = parse_digraph(text) else { return };
    let emitted = emit_digraph(&g);
    let h = parse_digraph(&emitted).expect("emitted text parses back");
    assert_eq!(g.n(), h.n());
    assert!(g.arcs().eq(h.arcs()));
    // a second trip is a fixed point
    assert_eq!(emitted, emit_digraph(&h));
});
