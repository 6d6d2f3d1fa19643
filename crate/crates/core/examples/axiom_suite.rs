//! Randomized axiom checks for Shapley, Banzhaf and a coalitional value
//! restricted to singletons.

use group_explain::axioms::{axiom_suite, Axiom};
use group_explain::coalition::OnSingletons;
use group_explain::{Banzhaf, CoalitionalValueSpec, GameValue, Shapley};

fn main() {
    let values: Vec<Box<dyn GameValue>> =
        vec![Box::new(Shapley), Box::new(Banzhaf), Box::new(OnSingletons(CoalitionalValueSpec::banzhaf_owen()))];
    for h in &values {
        println!("{}", h.name());
        for r in axiom_suite(h.as_ref(), &Axiom::ALL, 300, 11) {
            let status = if r.passed() { "pass" } else { "fail" };
            println!("  {:<4} {status}  ({} of {} trials violated, max deviation {:.2e})", r.axiom, r.failures, r.trials, r.max_deviation);
        }
    }
}
