// Train a zero-shot ensemble with one building type held out, persist it and
// predict that type's metrics from features alone.

use zsl_energy::models::{default_grid, Hyperparams, RegressorConfig};
use zsl_energy::synthgen::{default_expert_signatures, default_profiles, generate};
use zsl_energy::tabular::split;
use zsl_energy::zsl::{train, ZslConfig, ZslEnsemble};

pub fn run_example() -> zsl_energy::Result<Vec<f64>> {
    let data = generate(&default_profiles(), 150, 3)?;
    let (train_data, test_data) = split(&data, 0.8, 3)?;
    let unknown = "RS".to_string();
    let known = train_data.subset(
        &(0..train_data.len())
            .filter(|&i| train_data.schema().classes()[train_data.records()[i].class] != unknown)
            .collect::<Vec<_>>(),
    );

    let config = ZslConfig {
        regressors: RegressorConfig {
            // A small grid keeps the example quick; the default has nine entries.
            grid: vec![default_grid()[0], Hyperparams::new(3, 0.1, 100)?],
            folds: 3,
            seed: 3,
        },
        ..ZslConfig::default()
    };
    let ensemble = train(
        &known,
        &default_expert_signatures(),
        &[unknown.clone()],
        &config,
    )?;

    let dir = std::env::temp_dir().join(format!("zsl-energy-example-{}", std::process::id()));
    ensemble.save(&dir)?;
    let reloaded = ZslEnsemble::load(&dir)?;
    std::fs::remove_dir_all(&dir).ok();

    let held_out = test_data.of_class(&unknown)?;
    let predictions = reloaded.predict(&held_out, &unknown, 2)?;
    let first = &predictions[0];
    for (r, w) in first.ranked.iter().zip(&first.weights) {
        println!("closest {} score {:.3} weight {:.3}", r.type_id, r.score, w);
    }
    println!("metrics {:?}", reloaded.metrics());
    println!("predicted {:?}", first.values);
    println!("actual    {:?}", held_out.records()[0].targets);
    Ok(first.values.clone())
}

#[allow(dead_code)]
fn main() -> zsl_energy::Result<()> {
    run_example().map(|_| ())
}
