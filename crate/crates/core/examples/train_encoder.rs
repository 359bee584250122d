//! Trains the triple-input encoder on the synthetic benchmark, saves a
//! checkpoint and evaluates it at tau = 0.
//!
//!     cargo run --release --example train_encoder -- /tmp/tribrid.ckpt

use tribrid::decision::Family;
use tribrid::encoder::{EncoderConfig, EncoderParams};
use tribrid::eval::{evaluate_at, negatable, score_dataset, split_of, synthetic, triple_for, Split};
use tribrid::negation::RuleSet;
use tribrid::objective::{train, TrainConfig, TrainExample};

fn main() -> tribrid::Result<()> {
    let data = synthetic::bundled();
    let rules = RuleSet::bundled();
    let config = TrainConfig::default();

    let examples: Vec<TrainExample> = split_of(&data, Split::Train)
        .iter()
        .map(|p| TrainExample {
            triple: triple_for(&rules, p, config.use_negation),
            label: p.label,
        })
        .collect();
    let init = EncoderParams::init(EncoderConfig::default(), config.seed);
    println!("{} parameters, {} training triples", init.num_params(), examples.len());

    let (model, history) = train(init, &examples, &config)?;
    println!("epoch  total     ce        cos       triplet");
    println!("{:>5}  {:.5}  {:.5}  {:.5}  {:.5}", 0, history.initial.total, history.initial.l_ce, history.initial.l_cos, history.initial.l_tri);
    for e in history.epochs.iter().filter(|e| e.epoch % 5 == 0) {
        println!("{:>5}  {:.5}  {:.5}  {:.5}  {:.5}", e.epoch, e.loss.total, e.loss.l_ce, e.loss.l_cos, e.loss.l_tri);
    }

    let test = score_dataset(&model, &rules, &split_of(&data, Split::Test), true);
    println!("test, logit decision:    {}", evaluate_at(&test, Family::Logit, 0.0));
    println!("test, distance decision: {}", evaluate_at(&negatable(&test), Family::Distance, 0.0));

    if let Some(path) = std::env::args().nth(1) {
        model.save(&path)?;
        println!("checkpoint written to {path}");
    }
    Ok(())
}
