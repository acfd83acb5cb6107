#![no_main]

use libfuzzer_sys::fuzz_target;
use slowvary_algebra::{parse_expr, Registry};

fuzz_target!(|data: &str| {
    // printing then parsing a parsed expression must give it back
    if let Ok(e) = parse_expr(data, &Registry::new()) {
        let text = e.to_string();
        let back = parse_expr(&text, &Registry::new()).expect("printed form parses");
        assert_eq!(back, e, "{text}");
    }
});
