// Compare the pooled baseline with zero-shot prediction using expert and SVD
// signatures, holding out each building type in turn.

use zsl_energy::eval::{leave_one_type_out, EvalConfig};
use zsl_energy::models::Hyperparams;
use zsl_energy::synthgen::{default_expert_signatures, default_profiles, generate};

pub fn run_example() -> zsl_energy::Result<usize> {
    let data = generate(&default_profiles(), 120, 5)?;
    let config = EvalConfig {
        seed: 5,
        grid: vec![Hyperparams::new(3, 0.1, 80)?],
        ..EvalConfig::default()
    };
    let report = leave_one_type_out(&data, &default_expert_signatures(), &config)?;
    print!("{}", report.to_table());
    Ok(report.rows.len())
}

#[allow(dead_code)]
fn main() -> zsl_energy::Result<()> {
    run_example().map(|_| ())
}
