//! One line per acceptance criterion. A criterion may only fail if its
//! failure is traced to a documented cause; the line still reads FAIL.
//!
//! FLIPLAB_SUITE=small runs the quick subset.

use fliplab::acceptance::{run_suite, Status, Suite};

fn main() {
    let suite = match std::env::var("FLIPLAB_SUITE").as_deref() {
        Ok("small") => Suite::Small,
        _ => Suite::Full,
    };
    // libtest-style arguments (e.g. --list from tooling) are not supported.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    println!("acceptance suite: {suite:?}");
    let outcomes = run_suite(suite, |o| println!("{}", o.line()));
    let mut unexplained = Vec::new();
    for o in &outcomes {
        if o.status != Status::Fail {
            continue;
        }
        match &o.known_cause {
            Some(cause) => println!("  criterion {} fails for a documented reason: {cause}", o.id),
            None => unexplained.push(o.id),
        }
    }
    let passed = outcomes.iter().filter(|o| o.status.is_pass()).count();
    println!("{passed}/{} criteria pass", outcomes.len());
    if !unexplained.is_empty() {
        eprintln!("unexplained failures: {unexplained:?}");
        std::process::exit(1);
    }
}
