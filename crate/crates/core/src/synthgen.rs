//! Parametric Monte-Carlo generator for per-type building datasets.
//!
//! Each [`TypeProfile`] samples features independently (normal for
//! continuous, categorical draws over a probability vector) and computes
//! every target metric as an affine-plus-pairwise-interaction function of
//! the sampled features plus Gaussian noise.
//!
//! Class `c` draws from `ChaCha8Rng::seed_from_u64(child_seed(seed, c))` (see
//! [`crate::seed`]), so a class's records do not depend on which other
//! classes are generated alongside it.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::Matrix;
use crate::seed::child_seed;
use crate::tabular::{Dataset, FeatureKind, FeatureSchema, FeatureSpec, FeatureValue, Record};
use crate::zsl::{SignatureMatrix, SignatureSource};

/// Class column written by [`generate`].
pub const CLASS_COLUMN: &str = "building_type";

pub const DEFAULT_TYPES: [&str; 5] = ["ED", "MU", "OF", "RS", "RL"];
pub const DEFAULT_METRICS: [&str; 3] = ["TGAS", "COOL", "PFAC"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDist {
    Continuous {
        mean: f64,
        stddev: f64,
    },
    Categorical {
        levels: Vec<String>,
        probs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGen {
    pub name: String,
    #[serde(flatten)]
    pub dist: FeatureDist,
}

/// One additive term of a target function. Feature indices refer to the
/// profile's feature list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum Term {
    Linear {
        feature: usize,
        coef: f64,
    },
    Interaction {
        a: usize,
        b: usize,
        coef: f64,
    },
    /// Additive offset per level of a categorical feature.
    Level {
        feature: usize,
        offsets: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFn {
    pub metric: String,
    pub intercept: f64,
    pub terms: Vec<Term>,
    pub noise_stddev: f64,
}

impl TargetFn {
    /// Noise-free value at a feature vector.
    pub fn mean_value(&self, features: &[FeatureValue]) -> f64 {
        let num = |i: usize| match features[i] {
            FeatureValue::Num(x) => x,
            FeatureValue::Level(_) => unreachable!("validated profile"),
        };
        let mut v = self.intercept;
        for t in &self.terms {
            v += match t {
                Term::Linear { feature, coef } => coef * num(*feature),
                Term::Interaction { a, b, coef } => coef * num(*a) * num(*b),
                Term::Level { feature, offsets } => match features[*feature] {
                    FeatureValue::Level(l) => offsets[l as usize],
                    FeatureValue::Num(_) => unreachable!("validated profile"),
                },
            };
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeProfile {
    pub class_id: String,
    pub features: Vec<FeatureGen>,
    pub targets: Vec<TargetFn>,
}

impl TypeProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Error::InvalidArgument(format!("profile `{}`: {m}", self.class_id));
        for f in &self.features {
            match &f.dist {
                FeatureDist::Continuous { mean, stddev } => {
                    if !mean.is_finite() || !stddev.is_finite() || *stddev < 0.0 {
                        return Err(bad(format!(
                            "feature `{}` needs finite mean and stddev ≥ 0",
                            f.name
                        )));
                    }
                }
                FeatureDist::Categorical { levels, probs } => {
                    if levels.len() != probs.len() || levels.is_empty() {
                        return Err(bad(format!(
                            "feature `{}` needs one probability per level",
                            f.name
                        )));
                    }
                    if probs.iter().any(|p| !(*p >= 0.0)) {
                        return Err(bad(format!(
                            "feature `{}` has a negative probability",
                            f.name
                        )));
                    }
                    let total: f64 = probs.iter().sum();
                    if (total - 1.0).abs() > 1e-12 {
                        return Err(bad(format!(
                            "feature `{}` probabilities sum to {total}",
                            f.name
                        )));
                    }
                }
            }
        }
        let is_cont = |i: usize| {
            matches!(
                self.features.get(i).map(|f| &f.dist),
                Some(FeatureDist::Continuous { .. })
            )
        };
        for t in &self.targets {
            if !t.intercept.is_finite() || !t.noise_stddev.is_finite() || t.noise_stddev < 0.0 {
                return Err(bad(format!(
                    "target `{}` has invalid intercept or noise",
                    t.metric
                )));
            }
            for term in &t.terms {
                let ok = match term {
                    Term::Linear { feature, coef } => is_cont(*feature) && coef.is_finite(),
                    Term::Interaction { a, b, coef } => {
                        is_cont(*a) && is_cont(*b) && coef.is_finite()
                    }
                    Term::Level { feature, offsets } => {
                        match self.features.get(*feature).map(|f| &f.dist) {
                            Some(FeatureDist::Categorical { levels, .. }) => {
                                levels.len() == offsets.len()
                                    && offsets.iter().all(|o| o.is_finite())
                            }
                            _ => false,
                        }
                    }
                };
                if !ok {
                    return Err(bad(format!("target `{}` has an ill-formed term", t.metric)));
                }
            }
        }
        Ok(())
    }

    fn feature_specs(&self) -> Vec<FeatureSpec> {
        self.features
            .iter()
            .map(|f| FeatureSpec {
                name: f.name.clone(),
                kind: match &f.dist {
                    FeatureDist::Continuous { .. } => FeatureKind::Continuous,
                    FeatureDist::Categorical { levels, .. } => FeatureKind::Categorical {
                        levels: levels.clone(),
                    },
                },
            })
            .collect()
    }

    fn metric_names(&self) -> Vec<String> {
        self.targets.iter().map(|t| t.metric.clone()).collect()
    }

    fn sample(&self, rng: &mut ChaCha8Rng, class: usize) -> Record {
        let features: Vec<FeatureValue> = self
            .features
            .iter()
            .map(|f| match &f.dist {
                FeatureDist::Continuous { mean, stddev } => {
                    let z: f64 = rng.sample(StandardNormal);
                    FeatureValue::Num(mean + stddev * z)
                }
                FeatureDist::Categorical { probs, .. } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = probs.len() - 1;
                    for (i, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = i;
                            break;
                        }
                    }
                    FeatureValue::Level(pick as u32)
                }
            })
            .collect();
        let targets = self
            .targets
            .iter()
            .map(|t| {
                let z: f64 = rng.sample(StandardNormal);
                t.mean_value(&features) + t.noise_stddev * z
            })
            .collect();
        Record {
            features,
            class,
            targets,
        }
    }
}

/// Schema shared by `profiles`; classes are the profile ids in order.
pub fn schema_for(profiles: &[TypeProfile]) -> Result<FeatureSchema> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Empty("no profiles".into()))?;
    let specs = first.feature_specs();
    let metrics = first.metric_names();
    for p in &profiles[1..] {
        if p.feature_specs() != specs || p.metric_names() != metrics {
            return Err(Error::Schema(format!(
                "profile `{}` does not share the schema of profile `{}`",
                p.class_id, first.class_id
            )));
        }
    }
    FeatureSchema::new(
        specs,
        metrics,
        CLASS_COLUMN,
        profiles.iter().map(|p| p.class_id.clone()).collect(),
    )
}

/// Draws `n_per_class` records from every profile.
pub fn generate(profiles: &[TypeProfile], n_per_class: usize, seed: u64) -> Result<Dataset> {
    if profiles.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 profiles, got {}",
            profiles.len()
        )));
    }
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be ≥ 1".into()));
    }
    for p in profiles {
        p.validate()?;
    }
    let schema = schema_for(profiles)?;
    let mut records = Vec::with_capacity(profiles.len() * n_per_class);
    for (class, p) in profiles.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, &p.class_id));
        for _ in 0..n_per_class {
            records.push(p.sample(&mut rng, class));
        }
    }
    Dataset::new(schema, records)
}

pub fn load_profiles(path: &Path) -> Result<Vec<TypeProfile>> {
    let profiles: Vec<TypeProfile> = serde_json::from_str(&fsutil::read_to_string(path)?)?;
    for p in &profiles {
        p.validate()?;
    }
    Ok(profiles)
}

pub fn save_profiles(profiles: &[TypeProfile], path: &Path) -> Result<()> {
    fsutil::write_json(path, &profiles)
}

// Default five-type setup. Every type sits at a position on a one-dimensional
// "use" axis (education → office → mixed use → standalone retail → strip
// mall). Feature means, level probabilities and target coefficients are all
// affine in that position, so types adjacent on the axis behave alike.

fn axis_position(class_id: &str) -> f64 {
    match class_id {
        "ED" => 0.0,
        "OF" => 1.0,
        "MU" => 2.0,
        "RS" => 3.0,
        "RL" => 4.0,
        _ => unreachable!("default type ids only"),
    }
}

const F_AREA: usize = 0;
const F_FLOORS: usize = 1;
const F_WWR: usize = 2;
const F_RVALUE: usize = 3;
const F_OCCUPANCY: usize = 4;
const F_HOURS: usize = 5;
const F_CLIMATE: usize = 6;
const F_HVAC: usize = 7;

fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

fn default_profile(class_id: &str) -> TypeProfile {
    let z = axis_position(class_id);
    let t = z / 4.0;
    let cont = |name: &str, mean: f64, stddev: f64| FeatureGen {
        name: name.into(),
        dist: FeatureDist::Continuous { mean, stddev },
    };
    let hvac_ed = [0.6, 0.2, 0.2];
    let hvac_rl = [0.1, 0.7, 0.2];
    let features = vec![
        cont("floor_area_kft2", 40.0 + 16.0 * z, 10.0),
        cont("num_floors", 4.5 - 0.8 * z, 0.5),
        cont("window_wall_ratio", 0.22 + 0.08 * z, 0.045),
        cont("wall_r_value", 19.0 - 2.6 * z, 1.8),
        cont("occupancy_per_kft2", 9.0 - 1.3 * z, 0.9),
        cont("weekly_hours", 50.0 + 13.0 * z, 8.0),
        FeatureGen {
            name: "climate_zone".into(),
            dist: FeatureDist::Categorical {
                levels: vec!["hot".into(), "mixed".into(), "cold".into()],
                probs: vec![0.3, 0.4, 0.3],
            },
        },
        FeatureGen {
            name: "hvac_system".into(),
            dist: FeatureDist::Categorical {
                levels: vec!["vav".into(), "rooftop".into(), "heat_pump".into()],
                probs: normalized(&[
                    lerp(hvac_ed[0], hvac_rl[0], t),
                    lerp(hvac_ed[1], hvac_rl[1], t),
                    lerp(hvac_ed[2], hvac_rl[2], t),
                ]),
            },
        },
    ];

    let tgas = TargetFn {
        metric: "TGAS".into(),
        intercept: 42.0 - 3.0 * z,
        terms: vec![
            Term::Linear {
                feature: F_RVALUE,
                coef: -0.7 + 0.08 * z,
            },
            Term::Linear {
                feature: F_HOURS,
                coef: 0.18 - 0.02 * z,
            },
            Term::Linear {
                feature: F_OCCUPANCY,
                coef: 1.2 - 0.2 * z,
            },
            Term::Interaction {
                a: F_WWR,
                b: F_FLOORS,
                coef: 3.0 + 1.0 * z,
            },
            Term::Level {
                feature: F_CLIMATE,
                offsets: vec![-9.0 + z, 0.0, 11.0 - z],
            },
            Term::Level {
                feature: F_HVAC,
                offsets: vec![0.0, 3.0, -8.0],
            },
        ],
        noise_stddev: 1.2,
    };
    let cool = TargetFn {
        metric: "COOL".into(),
        intercept: 80.0 + 30.0 * z,
        terms: vec![
            Term::Linear {
                feature: F_AREA,
                coef: 2.2 - 0.15 * z,
            },
            Term::Linear {
                feature: F_WWR,
                coef: 180.0 + 40.0 * z,
            },
            Term::Linear {
                feature: F_OCCUPANCY,
                coef: 6.0 + 1.5 * z,
            },
            Term::Interaction {
                a: F_AREA,
                b: F_WWR,
                coef: 1.5 + 0.5 * z,
            },
            Term::Level {
                feature: F_CLIMATE,
                offsets: vec![45.0 + 5.0 * z, 0.0, -35.0],
            },
            Term::Level {
                feature: F_HVAC,
                offsets: vec![0.0, 12.0, -10.0],
            },
        ],
        noise_stddev: 8.0,
    };
    let pfac = TargetFn {
        metric: "PFAC".into(),
        intercept: 150.0 + 25.0 * z,
        terms: vec![
            Term::Linear {
                feature: F_AREA,
                coef: 4.0 + 0.4 * z,
            },
            Term::Linear {
                feature: F_HOURS,
                coef: 0.8 - 0.1 * z,
            },
            Term::Linear {
                feature: F_FLOORS,
                coef: 10.0 - 2.0 * z,
            },
            Term::Interaction {
                a: F_AREA,
                b: F_OCCUPANCY,
                coef: 0.15 - 0.02 * z,
            },
            Term::Level {
                feature: F_CLIMATE,
                offsets: vec![30.0, 0.0, -10.0],
            },
            Term::Level {
                feature: F_HVAC,
                offsets: vec![0.0, 20.0, -15.0 + 3.0 * z],
            },
        ],
        noise_stddev: 12.0,
    };

    TypeProfile {
        class_id: class_id.into(),
        features,
        targets: vec![tgas, cool, pfac],
    }
}

fn normalized(p: &[f64]) -> Vec<f64> {
    let total: f64 = p.iter().sum();
    let mut out: Vec<f64> = p.iter().map(|v| v / total).collect();
    // absorb rounding so the vector sums to one
    let drift: f64 = 1.0 - out.iter().sum::<f64>();
    out[0] += drift;
    out
}

/// The five default building types ED, MU, OF, RS and RL with metrics TGAS,
/// COOL and PFAC.
pub fn default_profiles() -> Vec<TypeProfile> {
    DEFAULT_TYPES.iter().map(|id| default_profile(id)).collect()
}

/// Expert-style signature matrix for the default types. Parameters are
/// ratings in [0, 1]; columns of types adjacent on the use axis are close.
pub fn default_expert_signatures() -> SignatureMatrix {
    let parameters = [
        "occupant_intensity",
        "glazing_exposure",
        "operating_schedule",
        "process_load",
        "envelope_compactness",
    ];
    // rows: parameters, columns: ED, OF, MU, RS, RL (axis order)
    let by_axis = [
        [0.90, 0.75, 0.60, 0.45, 0.40],
        [0.35, 0.50, 0.55, 0.70, 0.75],
        [0.45, 0.55, 0.70, 0.85, 0.90],
        [0.30, 0.45, 0.50, 0.40, 0.35],
        [0.60, 0.70, 0.55, 0.35, 0.25],
    ];
    let axis_order = ["ED", "OF", "MU", "RS", "RL"];
    let mut values = Matrix::zeros(parameters.len(), DEFAULT_TYPES.len());
    for (c, ty) in DEFAULT_TYPES.iter().enumerate() {
        let a = axis_order.iter().position(|x| x == ty).unwrap();
        for r in 0..parameters.len() {
            values[(r, c)] = by_axis[r][a];
        }
    }
    SignatureMatrix::new(
        parameters.iter().map(|s| s.to_string()).collect(),
        DEFAULT_TYPES.iter().map(|s| s.to_string()).collect(),
        values,
        SignatureSource::Expert,
    )
    .expect("default signature matrix is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::csv_bytes;

    fn constant_profile(id: &str, c: f64, noise: f64) -> TypeProfile {
        TypeProfile {
            class_id: id.into(),
            features: vec![
                FeatureGen {
                    name: "x".into(),
                    dist: FeatureDist::Continuous {
                        mean: 1.0,
                        stddev: 2.0,
                    },
                },
                FeatureGen {
                    name: "k".into(),
                    dist: FeatureDist::Categorical {
                        levels: vec!["a".into(), "b".into()],
                        probs: vec![0.25, 0.75],
                    },
                },
            ],
            targets: vec![TargetFn {
                metric: "y".into(),
                intercept: c,
                terms: vec![],
                noise_stddev: noise,
            }],
        }
    }

    #[test]
    fn zero_noise_constant_target() {
        let ds = generate(
            &[
                constant_profile("A", 3.5, 0.0),
                constant_profile("B", 3.5, 0.0),
            ],
            40,
            1,
        )
        .unwrap();
        assert!(ds.records().iter().all(|r| r.targets[0] == 3.5));
    }

    #[test]
    fn counts_per_class() {
        let ds = generate(
            &[
                constant_profile("A", 1.0, 1.0),
                constant_profile("B", 2.0, 1.0),
            ],
            50,
            9,
        )
        .unwrap();
        assert_eq!(ds.len(), 100);
        assert_eq!(ds.class_counts(), vec![50, 50]);
    }

    #[test]
    fn deterministic_bytes() {
        let p = default_profiles();
        let a = csv_bytes(&generate(&p, 30, 3).unwrap()).unwrap();
        let b = csv_bytes(&generate(&p, 30, 3).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = csv_bytes(&generate(&p, 30, 4).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn class_streams_are_independent() {
        let p = default_profiles();
        let all = generate(&p, 20, 5).unwrap();
        let pair = generate(&p[1..3], 20, 5).unwrap();
        let mu_all = all.of_class("MU").unwrap();
        let mu_pair = pair.of_class("MU").unwrap();
        let feats = |d: &Dataset| {
            d.records()
                .iter()
                .map(|r| r.features.clone())
                .collect::<Vec<_>>()
        };
        assert_eq!(feats(&mu_all), feats(&mu_pair));
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(generate(&[constant_profile("A", 1.0, 0.0)], 5, 0).is_err());
        let p = [
            constant_profile("A", 1.0, 0.0),
            constant_profile("B", 1.0, 0.0),
        ];
        assert!(generate(&p, 0, 0).is_err());

        let mut other = constant_profile("B", 1.0, 0.0);
        other.features[0].name = "renamed".into();
        let err = generate(&[constant_profile("A", 1.0, 0.0), other], 5, 0).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");

        let mut bad_probs = constant_profile("B", 1.0, 0.0);
        bad_probs.features[1].dist = FeatureDist::Categorical {
            levels: vec!["a".into(), "b".into()],
            probs: vec![0.5, 0.6],
        };
        assert!(bad_probs.validate().is_err());

        let mut bad_term = constant_profile("B", 1.0, 0.0);
        bad_term.targets[0].terms.push(Term::Linear {
            feature: 1,
            coef: 1.0,
        });
        assert!(bad_term.validate().is_err());
    }

    #[test]
    fn default_setup_shape() {
        let p = default_profiles();
        assert_eq!(p.len(), 5);
        let ids: Vec<&str> = p.iter().map(|x| x.class_id.as_str()).collect();
        assert_eq!(ids, DEFAULT_TYPES);
        for prof in &p {
            prof.validate().unwrap();
            let names: Vec<&str> = prof.targets.iter().map(|t| t.metric.as_str()).collect();
            assert_eq!(names, DEFAULT_METRICS);
            for f in &prof.features {
                if let FeatureDist::Categorical { probs, .. } = &f.dist {
                    assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                }
            }
        }
        let schema = schema_for(&p).unwrap();
        assert_eq!(schema.classes(), DEFAULT_TYPES);
        let sig = default_expert_signatures();
        assert_eq!(sig.types(), DEFAULT_TYPES);
    }

    #[test]
    fn profiles_json_round_trip() {
        let p = default_profiles();
        let text = serde_json::to_string(&p).unwrap();
        let back: Vec<TypeProfile> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
