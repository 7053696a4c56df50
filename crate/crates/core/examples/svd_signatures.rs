// Derive data-driven type signatures from singular values and compare them
// with the hand-written expert matrix.

use zsl_energy::synthgen::{default_expert_signatures, default_profiles, generate};
use zsl_energy::tabular::Encoder;
use zsl_energy::zsl::svd_signature_matrix;

pub fn run_example() -> zsl_energy::Result<Vec<f64>> {
    let data = generate(&default_profiles(), 300, 1)?;
    let all: Vec<usize> = (0..data.len()).collect();
    let encoder = Encoder::fit(&data, &all)?;
    let expert = default_expert_signatures();

    let svd = svd_signature_matrix(&data, &encoder, expert.types(), 4)?;
    for (t, ty) in svd.types().iter().enumerate() {
        let col = svd.values().column(t);
        let shown: Vec<String> = col.iter().map(|v| format!("{v:8.2}")).collect();
        println!("{ty}: {}", shown.join(" "));
    }
    Ok(svd.values().column(0))
}

#[allow(dead_code)]
fn main() -> zsl_energy::Result<()> {
    run_example().map(|_| ())
}
