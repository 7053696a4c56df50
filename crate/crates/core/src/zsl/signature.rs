use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil;
use crate::linalg::{svd, Matrix};
use crate::tabular::{Dataset, Encoder};

pub const SIGNATURE_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignatureSource {
    Expert,
    Svd,
}

/// Side information: one row per parameter, one column per building type.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix {
    parameters: Vec<String>,
    types: Vec<String>,
    values: Matrix,
    source: SignatureSource,
}

/// On-disk layout; `values` lists the matrix column by column.
#[derive(Serialize, Deserialize)]
struct SignatureFile {
    version: u32,
    source: SignatureSource,
    parameters: Vec<String>,
    types: Vec<String>,
    values: Vec<f64>,
}

impl SignatureMatrix {
    pub fn new(
        parameters: Vec<String>,
        types: Vec<String>,
        values: Matrix,
        source: SignatureSource,
    ) -> Result<Self> {
        if parameters.is_empty() || types.is_empty() {
            return Err(Error::Signature(
                "needs at least one parameter and one type".into(),
            ));
        }
        if values.shape() != (parameters.len(), types.len()) {
            return Err(Error::Signature(format!(
                "values are {}x{} but there are {} parameters and {} types",
                values.rows(),
                values.cols(),
                parameters.len(),
                types.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(d) = parameters.iter().find(|p| !seen.insert(p.as_str())) {
            return Err(Error::Signature(format!("duplicate parameter `{d}`")));
        }
        seen.clear();
        if let Some(d) = types.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::Signature(format!("duplicate type `{d}`")));
        }
        if !values.is_finite() {
            return Err(Error::NonFinite("signature values".into()));
        }
        Ok(SignatureMatrix {
            parameters,
            types,
            values,
            source,
        })
    }

    pub fn parameters(&self) -> &[String] {
        &self.parameters
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn source(&self) -> SignatureSource {
        self.source
    }

    pub fn type_index(&self, ty: &str) -> Result<usize> {
        self.types
            .iter()
            .position(|t| t == ty)
            .ok_or_else(|| Error::Signature(format!("no signature column for type `{ty}`")))
    }

    pub fn column(&self, ty: &str) -> Result<Vec<f64>> {
        Ok(self.values.column(self.type_index(ty)?))
    }

    /// Columns for `types`, in the order given.
    pub fn restrict(&self, types: &[String]) -> Result<SignatureMatrix> {
        let idx = types
            .iter()
            .map(|t| self.type_index(t))
            .collect::<Result<Vec<_>>>()?;
        SignatureMatrix::new(
            self.parameters.clone(),
            types.to_vec(),
            self.values.select_columns(&idx),
            self.source,
        )
    }

    /// Drops the columns of `dropped`, keeping the remaining types in their
    /// original order.
    pub fn drop_columns(&self, dropped: &[String]) -> Result<SignatureMatrix> {
        for d in dropped {
            self.type_index(d)?;
        }
        let kept: Vec<String> = self
            .types
            .iter()
            .filter(|t| !dropped.contains(t))
            .cloned()
            .collect();
        if kept.is_empty() {
            return Err(Error::Signature(
                "dropping every column leaves nothing".into(),
            ));
        }
        self.restrict(&kept)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = SignatureFile {
            version: SIGNATURE_FILE_VERSION,
            source: self.source,
            parameters: self.parameters.clone(),
            types: self.types.clone(),
            values: self.values.transpose().into_vec(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SignatureFile = serde_json::from_str(text)?;
        if file.version != SIGNATURE_FILE_VERSION {
            return Err(Error::Version {
                kind: "signature matrix",
                found: file.version,
                expected: SIGNATURE_FILE_VERSION,
            });
        }
        let (p, b) = (file.parameters.len(), file.types.len());
        let values = Matrix::from_vec(b, p, file.values)
            .map_err(|_| Error::Signature(format!("expected {} values for {p}x{b}", p * b)))?
            .transpose();
        SignatureMatrix::new(file.parameters, file.types, values, file.source)
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&fsutil::read_to_string(path)?)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        fsutil::write_atomic(path, text.as_bytes())
    }
}

/// Signature column from data: the `n_params` largest singular values of
/// `encoded` (instances × encoded features), zero-padded when the matrix has
/// fewer singular values than that.
pub fn svd_signature(encoded: &Matrix, n_params: usize) -> Result<Vec<f64>> {
    if n_params == 0 {
        return Err(Error::InvalidArgument("n_params must be ≥ 1".into()));
    }
    if encoded.rows() == 0 {
        return Err(Error::Empty("no instances for an SVD signature".into()));
    }
    let mut sigma = svd(encoded)?.sigma;
    sigma.resize(n_params, 0.0);
    Ok(sigma)
}

/// Builds an SVD signature matrix with one column per entry of `types`,
/// each computed from that type's rows of `data` after standardizing with
/// `encoder`. Parameters are named `sv1`, `sv2`, ….
pub fn svd_signature_matrix(
    data: &Dataset,
    encoder: &Encoder,
    types: &[String],
    n_params: usize,
) -> Result<SignatureMatrix> {
    let mut columns = Vec::with_capacity(types.len());
    for ty in types {
        let subset = data.of_class(ty)?;
        if subset.is_empty() {
            return Err(Error::Empty(format!(
                "no instances of type `{ty}` for its signature"
            )));
        }
        columns.push(svd_signature(
            &encoder.transform(&subset)?.values,
            n_params,
        )?);
    }
    SignatureMatrix::new(
        (1..=n_params).map(|i| format!("sv{i}")).collect(),
        types.to_vec(),
        Matrix::from_columns(&columns)?,
        SignatureSource::Svd,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> SignatureMatrix {
        SignatureMatrix::new(
            vec!["p1".into(), "p2".into()],
            vec!["A".into(), "B".into(), "C".into()],
            Matrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap(),
            SignatureSource::Expert,
        )
        .unwrap()
    }

    #[test]
    fn drop_and_restrict_keep_order() {
        let s = sig();
        let known = s.drop_columns(&["B".into()]).unwrap();
        assert_eq!(known.types(), ["A", "C"]);
        assert_eq!(known.values().row(0), &[1.0, 3.0]);
        let reordered = s.restrict(&["C".into(), "A".into()]).unwrap();
        assert_eq!(reordered.values().row(1), &[6.0, 4.0]);
        assert!(s.drop_columns(&["Z".into()]).is_err());
        assert!(s
            .drop_columns(&["A".into(), "B".into(), "C".into()])
            .is_err());
    }

    #[test]
    fn rejects_malformed() {
        let m = Matrix::zeros(2, 2);
        assert!(SignatureMatrix::new(
            vec!["p".into(), "p".into()],
            vec!["A".into(), "B".into()],
            m.clone(),
            SignatureSource::Expert
        )
        .is_err());
        assert!(SignatureMatrix::new(
            vec!["p".into(), "q".into()],
            vec!["A".into(), "A".into()],
            m.clone(),
            SignatureSource::Expert
        )
        .is_err());
        assert!(SignatureMatrix::new(
            vec!["p".into()],
            vec!["A".into(), "B".into()],
            m,
            SignatureSource::Expert
        )
        .is_err());
    }

    #[test]
    fn json_is_column_major_and_versioned() {
        let s = sig();
        let text = s.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(
            v["values"],
            serde_json::json!([1.0, 4.0, 2.0, 5.0, 3.0, 6.0])
        );
        assert_eq!(v["source"], "expert");
        assert_eq!(SignatureMatrix::from_json(&text).unwrap(), s);
        let bumped = text.replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            SignatureMatrix::from_json(&bumped),
            Err(Error::Version { found: 9, .. })
        ));
    }

    #[test]
    fn svd_signature_examples() {
        assert_eq!(
            svd_signature(&Matrix::identity(3), 3).unwrap(),
            vec![1.0, 1.0, 1.0]
        );
        let col = svd_signature(&Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap(), 2).unwrap();
        assert!((col[0] - 2.0).abs() < 1e-14);
        assert!(col[1].abs() < 1e-14);
        assert_eq!(
            svd_signature(&Matrix::identity(2), 4).unwrap(),
            vec![1.0, 1.0, 0.0, 0.0]
        );
        assert!(svd_signature(&Matrix::zeros(0, 2), 2).is_err());
    }
}
