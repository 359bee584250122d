//! Compares the analytic gradient of each loss term with central finite
//! differences on a small random encoder.
//!
//!     cargo run --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tribrid::encoder::{EncoderConfig, EncoderParams, InputTriple};
use tribrid::objective::{kink_pattern, loss, loss_and_gradient_of, Components, TrainExample, DEFAULT_MARGIN};
use tribrid::Stance;

fn main() {
    let config = EncoderConfig {
        hash_size: 64,
        dim: 4,
        init_scale: 0.5,
    };
    let params = EncoderParams::init(config, 7);
    let ex = TrainExample {
        triple: InputTriple::new(
            "School uniforms should be banned.",
            "Uniforms help students focus.",
            Some("Uniforms harm students focus.".to_string()),
        ),
        label: Stance::Oppose,
    };
    let h = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (name, which) in [("ce", Components::CE), ("cos", Components::COS), ("triplet", Components::TRI), ("total", Components::ALL)] {
        let (_, grad) = loss_and_gradient_of(&params, &ex, DEFAULT_MARGIN, true, which);
        let analytic = grad.to_dense(params.hash_size);
        let base = kink_pattern(&params, &ex, DEFAULT_MARGIN, true);
        let (mut worst, mut checked) = (0.0f64, 0);
        for _ in 0..200 {
            let i = rng.gen_range(0..analytic.len());
            let eval = |delta: f64| {
                let mut p = params.clone();
                *p.param_mut(i) += delta;
                (which.pick(&loss(&p, &ex, DEFAULT_MARGIN, true)), kink_pattern(&p, &ex, DEFAULT_MARGIN, true))
            };
            let ((up, k_up), (down, k_down)) = (eval(h), eval(-h));
            if k_up != base || k_down != base {
                continue;
            }
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            checked += 1;
        }
        println!("{name:<8} {checked} coordinates, worst relative error {worst:.2e}");
    }
}
