//! PCA anomaly scoring by squared reconstruction error (SPE).

use serde::{Deserialize, Serialize};

use super::{ModelArtifact, ModelPayload};
use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcaParams {
    /// Keep the smallest component count whose cumulative explained
    /// variance reaches this fraction.
    pub variance_keep: f64,
}

impl Default for PcaParams {
    fn default() -> Self {
        Self { variance_keep: 0.95 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub params: PcaParams,
    /// Indices of the training columns kept (zero-variance columns drop).
    pub kept_columns: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Principal axes, one row per component (length = kept columns).
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    fn standardize_row(&self, x: &FeatureMatrix, map: &[usize], row: usize) -> Vec<f64> {
        self.kept_columns
            .iter()
            .enumerate()
            .map(|(j, &orig)| (x.col(map[orig])[row] - self.means[j]) / self.stds[j])
            .collect()
    }

    /// Projection onto the kept components (used as the reduced
    /// representation by pipelines).
    pub fn transform_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<Vec<f64>> {
        (0..x.n_rows())
            .map(|row| {
                let z = self.standardize_row(x, map, row);
                self.components
                    .iter()
                    .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect()
    }

    /// Squared reconstruction error in the standardized space.
    pub fn score_spe_mapped(&self, x: &FeatureMatrix, map: &[usize]) -> Vec<f64> {
        (0..x.n_rows())
            .map(|row| {
                let z = self.standardize_row(x, map, row);
                let proj: Vec<f64> = self
                    .components
                    .iter()
                    .map(|c| c.iter().zip(&z).map(|(a, b)| a * b).sum())
                    .collect();
                let mut spe = 0.0;
                for (j, &zj) in z.iter().enumerate() {
                    let rec: f64 = self.components.iter().zip(&proj).map(|(c, p)| c[j] * p).sum();
                    spe += (zj - rec) * (zj - rec);
                }
                spe
            })
            .collect()
    }
}

/// Fits PCA on standardized columns (training moments). Zero-variance
/// columns are dropped with a warning.
pub fn fit_pca(x: &FeatureMatrix, params: &PcaParams) -> Result<ModelArtifact> {
    if x.n_rows() < 2 || x.n_cols() == 0 {
        return Err(Error::RejectedInput("pca needs at least 2 rows and 1 column".into()));
    }
    if !(0.0 < params.variance_keep && params.variance_keep <= 1.0) {
        return Err(Error::RejectedInput("variance_keep must lie in (0, 1]".into()));
    }
    let n = x.n_rows() as f64;
    let mut kept_columns = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    let mut warnings = Vec::new();
    for c in 0..x.n_cols() {
        let col = x.col(c);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if var <= 0.0 {
            warnings.push(format!("zero-variance column {:?} dropped", x.names()[c]));
            continue;
        }
        kept_columns.push(c);
        means.push(mean);
        stds.push(var.sqrt());
    }
    if kept_columns.is_empty() {
        return Err(Error::RejectedInput("every column has zero variance".into()));
    }
    let d = kept_columns.len();

    // Correlation matrix of the standardized kept columns.
    let z: Vec<Vec<f64>> = (0..x.n_rows())
        .map(|row| {
            kept_columns
                .iter()
                .enumerate()
                .map(|(j, &c)| (x.col(c)[row] - means[j]) / stds[j])
                .collect()
        })
        .collect();
    let mut cov = vec![vec![0.0; d]; d];
    for zrow in &z {
        for i in 0..d {
            for j in i..d {
                cov[i][j] += zrow[i] * zrow[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&cov);
    let total: f64 = eigenvalues.iter().map(|&v| v.max(0.0)).sum();
    let ratios: Vec<f64> = eigenvalues.iter().map(|&v| v.max(0.0) / total).collect();
    let mut cumulative = 0.0;
    let mut n_components = d;
    for (i, &r) in ratios.iter().enumerate() {
        cumulative += r;
        if cumulative >= params.variance_keep - 1e-12 {
            n_components = i + 1;
            break;
        }
    }
    let components: Vec<Vec<f64>> = (0..n_components)
        .map(|k| (0..d).map(|i| eigenvectors[i][k]).collect())
        .collect();

    let model = PcaModel {
        params: *params,
        kept_columns,
        means,
        stds,
        components,
        explained_variance_ratio: ratios[..n_components].to_vec(),
    };
    let identity: Vec<usize> = (0..x.n_cols()).collect();
    let train_scores = model.score_spe_mapped(x, &identity);
    Ok(ModelArtifact::new(
        x.names().to_vec(),
        0,
        &train_scores,
        warnings,
        ModelPayload::Pca(model),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(cols: Vec<Vec<f64>>) -> FeatureMatrix {
        let names = (0..cols.len()).map(|i| format!("f{i}")).collect();
        FeatureMatrix::from_columns(names, cols).unwrap()
    }

    #[test]
    fn full_basis_reconstructs_training_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let cols: Vec<Vec<f64>> =
            (0..4).map(|_| (0..60).map(|_| normal.sample(&mut rng)).collect()).collect();
        let x = matrix(cols);
        let artifact = fit_pca(&x, &PcaParams { variance_keep: 1.0 }).unwrap();
        for spe in artifact.score(&x).unwrap() {
            assert!(spe <= 1e-9, "spe {spe}");
        }
    }

    #[test]
    fn rank_one_data_needs_one_component() {
        // Points on the line (t, 2t) plus nothing else: one component
        // explains everything.
        let t: Vec<f64> = (0..50).map(|i| i as f64 / 7.0 - 3.0).collect();
        let x = matrix(vec![t.clone(), t.iter().map(|v| 2.0 * v).collect()]);
        let artifact = fit_pca(&x, &PcaParams { variance_keep: 0.999 }).unwrap();
        let ModelPayload::Pca(model) = &artifact.payload else { unreachable!() };
        assert_eq!(model.n_components(), 1);
        assert!(model.explained_variance_ratio[0] >= 0.999);
        for spe in artifact.score(&x).unwrap() {
            assert!(spe <= 1e-18, "spe {spe}");
        }
    }

    #[test]
    fn off_subspace_query_spe_is_squared_distance() {
        // Perfectly correlated columns: the standardized data lies on the
        // diagonal z0 = z1, so one component suffices and an off-diagonal
        // query scores its squared distance to that line, (z0 - z1)^2 / 2.
        let t: Vec<f64> = (0..40).map(|i| i as f64 - 20.0).collect();
        let x = matrix(vec![t.clone(), t.iter().map(|v| 3.0 * v + 1.0).collect()]);
        let artifact = fit_pca(&x, &PcaParams { variance_keep: 0.9 }).unwrap();
        let ModelPayload::Pca(model) = &artifact.payload else { unreachable!() };
        assert_eq!(model.n_components(), 1);

        let query = matrix(vec![vec![4.0], vec![-2.0]]);
        let spe = artifact.score(&query).unwrap()[0];
        let z0 = (4.0 - model.means[0]) / model.stds[0];
        let z1 = (-2.0 - model.means[1]) / model.stds[1];
        let expected = (z0 - z1) * (z0 - z1) / 2.0;
        assert!((spe - expected).abs() < 1e-9, "spe {spe} vs {expected}");
    }

    #[test]
    fn zero_variance_column_dropped_with_warning() {
        let x = matrix(vec![(0..30).map(|i| i as f64).collect(), vec![7.0; 30]]);
        let artifact = fit_pca(&x, &PcaParams::default()).unwrap();
        assert_eq!(artifact.warnings.len(), 1);
        let ModelPayload::Pca(model) = &artifact.payload else { unreachable!() };
        assert_eq!(model.kept_columns, vec![0]);
    }

    #[test]
    fn artifact_roundtrip() {
        let x = matrix(vec![
            (0..30).map(|i| (i as f64 * 0.37).sin()).collect(),
            (0..30).map(|i| (i as f64 * 0.11).cos()).collect(),
        ]);
        let artifact = fit_pca(&x, &PcaParams::default()).unwrap();
        let back = ModelArtifact::from_json(&artifact.to_json().unwrap()).unwrap();
        assert_eq!(artifact, back);
    }
}
