//! Verify the hand-written reverse-mode gradients against central finite
//! differences on random tiny model instances, in 64-bit mode.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use batm::training::{finite_diff_check, random_tiny_check, TinyCase};

fn main() -> batm::Result<()> {
    // One fully spelled-out instance first.
    let tiny = TinyCase {
        effective_len: 3,
        max_len: 4,
        head_count: 2,
        embed_dim: 2,
        head_hidden_dim: 2,
        pool_hidden_dim: 2,
        num_classes: 2,
        vocab_size: 6,
        label: 1,
        seed: 4,
    };
    let (mut params, seq) = tiny.build();
    for lambda in [0.0, 1e-3] {
        let err = finite_diff_check(&mut params, &seq, tiny.label, lambda, 1e-5)?;
        println!("single instance, lambda {lambda:>5}: max relative error {err:.3e}");
    }

    // Then the batch of random configurations the acceptance gate uses.
    let report = random_tiny_check(20, &[0.0, 1e-3], 3e-4, 1)?;
    println!(
        "{} random configurations x {} lambda values: max relative error {:.3e}",
        report.cases,
        report.lambdas.len(),
        report.max_rel_error
    );
    let pass = report.max_rel_error < 1e-4;
    println!("tolerance 1e-4: {}", if pass { "PASS" } else { "FAIL" });
    std::process::exit(i32::from(!pass));
}
