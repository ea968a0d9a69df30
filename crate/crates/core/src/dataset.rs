//! Labeled dataset: dense features, integer class labels, stable example ids.

use crate::matrix::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    ids: Vec<usize>,
}

impl Dataset {
    /// Build with fresh ids `0..N`; validates label range and lengths.
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        let ids = (0..features.rows()).collect();
        Self::with_ids(features, labels, num_classes, ids)
    }

    pub fn with_ids(
        features: Matrix,
        labels: Vec<usize>,
        num_classes: usize,
        ids: Vec<usize>,
    ) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Shape(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        if ids.len() != features.rows() || !is_permutation(&ids) {
            return Err(Error::InvalidArgument(
                "ids must be a permutation of 0..N".into(),
            ));
        }
        Ok(Dataset {
            features,
            labels,
            num_classes,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    /// Per-class counts, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// New dataset from the given rows (ids renumbered `0..k`).
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidArgument(format!(
                "subset index {bad} out of range for {} examples",
                self.len()
            )));
        }
        let features = self.features.select_rows(indices);
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(features, labels, self.num_classes)
    }

    /// Replace the label vector (same length and class range).
    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset> {
        Dataset::with_ids(
            self.features.clone(),
            labels,
            self.num_classes,
            self.ids.clone(),
        )
    }
}

fn is_permutation(ids: &[usize]) -> bool {
    let mut seen = vec![false; ids.len()];
    for &id in ids {
        if id >= ids.len() || seen[id] {
            return false;
        }
        seen[id] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        let features = Matrix::new(4, 2, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]).unwrap();
        Dataset::new(features, vec![0, 1, 0, 1], 2).unwrap()
    }

    #[test]
    fn label_length_mismatch_rejected() {
        let features = Matrix::new(3, 1, vec![0.0; 3]).unwrap();
        assert!(Dataset::new(features, vec![0, 1], 2).is_err());
    }

    #[test]
    fn label_out_of_range_rejected() {
        let features = Matrix::new(2, 1, vec![0.0; 2]).unwrap();
        assert!(Dataset::new(features, vec![0, 2], 2).is_err());
    }

    #[test]
    fn bad_ids_rejected() {
        let features = Matrix::new(2, 1, vec![0.0; 2]).unwrap();
        assert!(Dataset::with_ids(features, vec![0, 1], 2, vec![0, 0]).is_err());
    }

    #[test]
    fn subset_extracts_rows_in_order() {
        let d = toy();
        let s = d.subset(&[2, 0]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.features().row(0), &[4.0, 5.0]);
        assert_eq!(s.features().row(1), &[0.0, 1.0]);
        assert_eq!(s.labels(), &[0, 0]);
        assert_eq!(s.ids(), &[0, 1]);
    }

    #[test]
    fn class_counts_sum_to_len() {
        let d = toy();
        assert_eq!(d.class_counts(), vec![2, 2]);
    }
}
