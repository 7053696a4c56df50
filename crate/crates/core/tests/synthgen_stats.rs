use zsl_energy::linalg::svd;
use zsl_energy::synthgen::{default_expert_signatures, default_profiles, generate, FeatureDist};
use zsl_energy::tabular::FeatureValue;

fn column(data: &zsl_energy::tabular::Dataset, class: usize, f: usize) -> Vec<f64> {
    data.records()
        .iter()
        .filter(|r| r.class == class)
        .map(|r| match r.features[f] {
            FeatureValue::Num(v) => v,
            FeatureValue::Level(l) => l as f64,
        })
        .collect()
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (
        m,
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt(),
    )
}

#[test]
fn sample_moments_match_profiles() {
    let profiles = default_profiles();
    let data = generate(&profiles, 10_000, 77).unwrap();
    for p in &profiles {
        let class = data.schema().class_index(&p.class_id).unwrap();
        for (f, gen) in p.features.iter().enumerate() {
            let v = column(&data, class, f);
            match &gen.dist {
                FeatureDist::Continuous { mean, stddev } => {
                    let (m, s) = mean_sd(&v);
                    // 5 standard errors
                    assert!(
                        (m - mean).abs() < 5.0 * stddev / 100.0,
                        "{} {} mean {m}",
                        p.class_id,
                        gen.name
                    );
                    assert!(
                        (s - stddev).abs() < 0.05 * stddev,
                        "{} {} sd {s}",
                        p.class_id,
                        gen.name
                    );
                }
                FeatureDist::Categorical { probs, .. } => {
                    for (level, &prob) in probs.iter().enumerate() {
                        let freq = v.iter().filter(|&&x| x == level as f64).count() as f64
                            / v.len() as f64;
                        assert!(
                            (freq - prob).abs() < 0.025,
                            "{} {} level {level}",
                            p.class_id,
                            gen.name
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn neighbouring_types_are_separated() {
    // Combined per-feature separation between adjacent types on the latent
    // axis, measured in pooled standard deviations.
    let profiles = default_profiles();
    let data = generate(&profiles, 5_000, 3).unwrap();
    let order = ["ED", "OF", "MU", "RS", "RL"];
    for pair in order.windows(2) {
        let a = data.schema().class_index(pair[0]).unwrap();
        let b = data.schema().class_index(pair[1]).unwrap();
        let mut dist2 = 0.0;
        for (f, gen) in profiles[0].features.iter().enumerate() {
            if !matches!(gen.dist, FeatureDist::Continuous { .. }) {
                continue;
            }
            let (ma, sa) = mean_sd(&column(&data, a, f));
            let (mb, sb) = mean_sd(&column(&data, b, f));
            dist2 += ((ma - mb) / (0.5 * (sa * sa + sb * sb)).sqrt()).powi(2);
        }
        assert!(dist2.sqrt() > 3.0, "{pair:?} separated by {}", dist2.sqrt());
    }
}

#[test]
fn expert_signatures_leave_full_rank_known_sets() {
    let sigs = default_expert_signatures();
    for b in sigs.types() {
        let s = sigs.drop_columns(&[b.clone()]).unwrap();
        let sigma = svd(s.values()).unwrap().sigma;
        assert_eq!(sigma.len(), 4);
        assert!(sigma[3] / sigma[0] > 1e-3, "dropping {b}: {sigma:?}");
    }
}
