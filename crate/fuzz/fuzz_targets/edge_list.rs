#![no_main]

use labeldeconv::graph::{format_edge_list, parse_edge_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(edges) = parse_edge_list(text) {
        let again = parse_edge_list(&format_edge_list(edges.iter().copied())).unwrap();
        assert_eq!(edges, again);
    }
});
