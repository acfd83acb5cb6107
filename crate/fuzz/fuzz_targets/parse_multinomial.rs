#![no_main]

use libfuzzer_sys::fuzz_target;
use slowvary::problems::parse_multinomial;

fuzz_target!(|data: &str| {
    if let Ok(m) = parse_multinomial(data) {
        let again = parse_multinomial(&m.to_string()).expect("printed form parses");
        assert_eq!(again, m);
    }
});
