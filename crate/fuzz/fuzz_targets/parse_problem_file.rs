#![no_main]

use libfuzzer_sys::fuzz_target;
use slowvary::problems::parse_problem_file;

fuzz_target!(|data: &str| {
    let _ = parse_problem_file(data);
});
