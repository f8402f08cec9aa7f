#![no_main]

use avoid_core::io::{emit_pattern, parse_digraph, pattern_name};
use avoid_core::patterns::{builtin, check_embedding, find_pattern};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };

    // the header scanner tolerates anything
    if let Some(name) = pattern_name(text) {
        if let Ok(p) = builtin(name) {
            let again = emit_pattern(&p.name, &p.graph);
            assert_eq!(pattern_name(&again), Some(p.name.as_str()));
        }
    }
    if let Some(first) = text.lines().next() {
        let _ = builtin(first.trim());
    }

    let Ok(g) = parse_digraph(text) else { return };
    if (1..=6).contains(&g.n()) && g.m() <= 12 {
        // every digraph embeds into itself
        let phi = find_pattern(&g, &g).expect("self-embedding exists");
        assert!(check_embedding(&g, &g, &phi));
    }
});
