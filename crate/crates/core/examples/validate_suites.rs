//! Run the fast oracle suites; pass `all` to include the grid and recovery suites.

use refprime::runner::cmd_validate;
use refprime::validation::{Suite, ValidationOptions};

fn main() {
    let all = std::env::args().any(|a| a == "all");
    let suites = if all { Suite::ALL.to_vec() } else { vec![Suite::Gradient, Suite::Pmap, Suite::Levene] };
    for r in cmd_validate(&suites, &ValidationOptions::default()) {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.suite, r.details.join("; "));
    }
}
