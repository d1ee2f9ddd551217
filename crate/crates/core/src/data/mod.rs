//! Point clouds, labelled datasets and their ingestion.

mod csv;
mod idx;
mod synth;

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::csv::{load_csv, parse_csv, write_csv, write_csv_to};
pub use self::idx::{
    load_idx_images, load_idx_labels, parse_idx_images, parse_idx_labels, write_idx_images,
    write_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use self::synth::{
    generate_class_manifolds, generate_hypercube, generate_hypersphere, generate_swiss_roll,
    swiss_roll_with_params, ClassManifoldSpec,
};

/// `N` samples of `D` real coordinates, optionally labelled.
///
/// Coordinates are always finite. `D >= 1` even when the cloud is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Array2<f64>,
    labels: Option<Vec<usize>>,
}

impl PointCloud {
    pub fn new(points: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if points.ncols() == 0 {
            return Err(Error::Parameter("point cloud needs at least one coordinate".into()));
        }
        if let Some((idx, _)) = points.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (r, c) = (idx / points.ncols(), idx % points.ncols());
            return Err(Error::Parameter(format!(
                "non-finite coordinate at row {r}, column {c}"
            )));
        }
        if let Some(l) = &labels {
            if l.len() != points.nrows() {
                return Err(Error::Parameter(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.nrows()
                )));
            }
        }
        Ok(PointCloud { points, labels })
    }

    pub fn unlabeled(points: Array2<f64>) -> Result<Self> {
        Self::new(points, None)
    }

    /// Builds a cloud from row vectors; all rows must have length `dim`.
    pub fn from_rows(rows: &[Vec<f64>], dim: usize) -> Result<Self> {
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::Parameter(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    r.len()
                )));
            }
            flat.extend_from_slice(r);
        }
        let points = Array2::from_shape_vec((rows.len(), dim), flat)
            .map_err(|e| Error::Parameter(e.to_string()))?;
        Self::new(points, None)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn with_labels(self, labels: Vec<usize>) -> Result<Self> {
        Self::new(self.points, Some(labels))
    }

    pub fn without_labels(self) -> Self {
        PointCloud {
            points: self.points,
            labels: None,
        }
    }

    /// Rows `indices`, in the given order, labels carried along.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let points = self.points.select(Axis(0), indices);
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i]).collect());
        PointCloud { points, labels }
    }

    /// Rows as a JSON array of arrays.
    pub fn to_json_rows(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.points
                .rows()
                .into_iter()
                .map(|r| serde_json::json!(r.to_vec()))
                .collect(),
        )
    }

    pub fn into_parts(self) -> (Array2<f64>, Option<Vec<usize>>) {
        (self.points, self.labels)
    }
}

/// Inputs paired with one-hot targets.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    inputs: PointCloud,
    targets: Array2<f64>,
    classes: Vec<usize>,
}

impl LabeledDataset {
    /// One-hot encodes the cloud's labels. Column `j` of the targets
    /// corresponds to the `j`-th smallest distinct label.
    pub fn from_labeled(inputs: PointCloud) -> Result<Self> {
        let labels = inputs
            .labels()
            .ok_or_else(|| Error::Usage("dataset requires class labels".into()))?;
        let classes: Vec<usize> = labels
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if classes.is_empty() {
            return Err(Error::Usage("dataset has no samples".into()));
        }
        let column: BTreeMap<usize, usize> =
            classes.iter().enumerate().map(|(j, &c)| (c, j)).collect();
        let mut targets = Array2::zeros((labels.len(), classes.len()));
        for (i, l) in labels.iter().enumerate() {
            targets[[i, column[l]]] = 1.0;
        }
        Ok(LabeledDataset {
            inputs,
            targets,
            classes,
        })
    }

    /// Pairs inputs with explicit targets. Every target row must be one-hot.
    pub fn with_targets(inputs: PointCloud, targets: Array2<f64>) -> Result<Self> {
        if targets.nrows() != inputs.len() || targets.ncols() == 0 {
            return Err(Error::Parameter(format!(
                "targets shape {:?} does not match {} inputs",
                targets.dim(),
                inputs.len()
            )));
        }
        for (i, row) in targets.rows().into_iter().enumerate() {
            let ones = row.iter().filter(|&&v| v == 1.0).count();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones != 1 || ones + zeros != row.len() {
                return Err(Error::Parameter(format!("target row {i} is not one-hot")));
            }
        }
        let classes = (0..targets.ncols()).collect();
        Ok(LabeledDataset {
            inputs,
            targets,
            classes,
        })
    }

    pub fn inputs(&self) -> &PointCloud {
        &self.inputs
    }

    pub fn targets(&self) -> &Array2<f64> {
        &self.targets
    }

    pub fn num_classes(&self) -> usize {
        self.targets.ncols()
    }

    /// Distinct labels in column order.
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// One class of a [`split_by_class`] partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassCloud {
    pub label: usize,
    /// Row indices into the source cloud, ascending.
    pub indices: Vec<usize>,
    pub cloud: PointCloud,
}

/// Partitions a labelled cloud by class, ascending label order.
pub fn split_by_class(cloud: &PointCloud) -> Result<Vec<ClassCloud>> {
    let labels = cloud
        .labels()
        .ok_or_else(|| Error::Usage("split_by_class requires labels".into()))?;
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    Ok(groups
        .into_iter()
        .map(|(label, indices)| ClassCloud {
            label,
            cloud: cloud.select(&indices),
            indices,
        })
        .collect())
}
