//! Negates a few perspectives with the bundled templates and the two
//! baselines, then reports template coverage on the synthetic benchmark.
//!
//!     cargo run --example negate_perspectives

use tribrid::eval::synthetic;
use tribrid::negation::{Negator, RuleSet};

fn main() {
    let rules = RuleSet::bundled();
    let sentences = [
        "Animal testing is necessary for medical progress.",
        "Sanctions can't change the regime.",
        "Voters need to know the facts.",
        "Social media platforms help people stay in touch.",
        "Tariffs hurt consumers.",
        "Everyone deserves a second chance.",
        "Nothing here matches.",
    ];
    for s in sentences {
        println!("{s}");
        match rules.negate(s) {
            Some(r) => println!("  templates (rule {}): {}", r.rule_index, r.negated_text),
            None => println!("  templates: no rule applies"),
        }
        for n in [Negator::AppSuff, Negator::DelNot] {
            if let Some(out) = n.apply(&rules, s) {
                println!("  {}: {out}", n.name());
            }
        }
    }

    let perspectives: Vec<String> = synthetic::bundled().into_iter().map(|p| p.perspective).collect();
    println!();
    for n in Negator::ALL {
        println!("{:<9} coverage {}", n.name(), n.coverage(&rules, &perspectives));
    }
    let report = rules.coverage(&perspectives);
    for rule in rules.rules() {
        let count = report.per_rule[rule.index];
        if count > 0 {
            println!("  {count:>5}  {}", rule.source);
        }
    }
}
