use nalgebra::{DMatrix, SymmetricEigen};

use super::{ClassLabel, Dataset};
use crate::error::{Error, Result};

/// Principal-component projection of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    pub mean: Vec<f64>,
    /// `k` unit-norm, mutually orthogonal directions, largest variance first.
    pub components: Vec<Vec<f64>>,
    /// Population variance along each component.
    pub explained_variance: Vec<f64>,
    /// Fraction of total variance captured by each component.
    pub explained_ratio: Vec<f64>,
    /// `n × k` projected coordinates of the centred samples.
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
}

/// Projects `dataset` onto its top `k` principal components.
///
/// Each component's sign is fixed so that its largest-magnitude entry is
/// positive.
pub fn pca_project(dataset: &Dataset, k: usize) -> Result<PcaProjection> {
    let d = dataset.feature_dim();
    if k == 0 || k > d {
        return Err(Error::config(format!("k = {k} must be in 1..={d}")));
    }
    if dataset.is_empty() {
        return Err(Error::Data("cannot project an empty dataset".into()));
    }
    let n = dataset.len();
    let x = DMatrix::from_fn(n, d, |i, j| dataset.samples()[i].features[j]);
    let mean = x.row_mean();
    let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / n as f64;

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &col in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().copied().collect();
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        if pivot < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[col].max(0.0));
    }
    let explained_ratio = explained_variance
        .iter()
        .map(|v| if total > 0.0 { v / total } else { 0.0 })
        .collect();
    let points = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| (0..d).map(|j| centred[(i, j)] * c[j]).sum())
                .collect()
        })
        .collect();

    Ok(PcaProjection {
        mean: mean.iter().copied().collect(),
        components,
        explained_variance,
        explained_ratio,
        points,
        labels: dataset.labels(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, Provenance, Sample, SynthConfig};
    use approx::assert_abs_diff_eq;

    fn points(rows: &[&[f64]]) -> Dataset {
        let samples = rows
            .iter()
            .map(|r| Sample { features: r.to_vec(), label: ClassLabel::NORMAL })
            .collect();
        Dataset::new(samples, rows[0].len(), 4, Provenance::Derived("p".into())).unwrap()
    }

    #[test]
    fn diagonal_line() {
        let ds = points(&[&[1.0, 1.0], &[-1.0, -1.0], &[2.0, 2.0], &[-2.0, -2.0]]);
        let p = pca_project(&ds, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(p.components[0][0], h, epsilon = 1e-12);
        assert_abs_diff_eq!(p.components[0][1], h, epsilon = 1e-12);
        let s2 = 2f64.sqrt();
        let expected = [s2, -s2, 2.0 * s2, -2.0 * s2];
        for (pt, e) in p.points.iter().zip(expected) {
            assert_abs_diff_eq!(pt[0], e, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p.explained_variance[0], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn single_axis_variation() {
        let ds = points(&[&[0.0, 3.0, 1.0], &[0.0, 3.0, 2.0], &[0.0, 3.0, 6.0]]);
        let p = pca_project(&ds, 2).unwrap();
        assert_abs_diff_eq!(p.components[0][2], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.explained_ratio[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.explained_variance[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn full_basis_reconstructs() {
        let ds = &generate_synthetic(&SynthConfig::uniform(1, &[40, 5, 5, 5], 5, 2)).unwrap()[0];
        let p = pca_project(ds, 5).unwrap();
        for (c, a) in p.components.iter().enumerate() {
            for (e, b) in p.components.iter().enumerate() {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                assert_abs_diff_eq!(dot, if c == e { 1.0 } else { 0.0 }, epsilon = 1e-9);
            }
        }
        assert!(p.explained_variance.windows(2).all(|w| w[0] >= w[1]));
        for (s, pt) in ds.samples().iter().zip(&p.points) {
            for j in 0..5 {
                let rec: f64 = pt.iter().zip(&p.components).map(|(t, c)| t * c[j]).sum();
                assert_abs_diff_eq!(rec, s.features[j] - p.mean[j], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn k_larger_than_dim() {
        let ds = points(&[&[1.0, 2.0]]);
        assert!(pca_project(&ds, 3).is_err());
    }
}
