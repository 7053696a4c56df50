// Sample the default building profiles and write a CSV plus schema sidecar.

use zsl_energy::synthgen::{default_profiles, generate};
use zsl_energy::tabular::{csv_bytes, read_csv};

pub fn run_example() -> zsl_energy::Result<usize> {
    let profiles = default_profiles();
    let data = generate(&profiles, 200, 42)?;
    for (label, count) in data.class_labels().iter().zip(data.class_counts()) {
        println!("{label}: {count} records");
    }

    let bytes = csv_bytes(&data)?;
    let back = read_csv(bytes.as_slice(), data.schema())?;
    assert_eq!(back.len(), data.len());
    println!(
        "csv is {} bytes, header: {}",
        bytes.len(),
        String::from_utf8_lossy(&bytes[..bytes.iter().position(|&b| b == b'\n').unwrap_or(0)])
    );
    Ok(data.len())
}

#[allow(dead_code)]
fn main() -> zsl_energy::Result<()> {
    run_example().map(|_| ())
}
