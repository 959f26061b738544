use rand::seq::SliceRandom;

use super::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Stratified train/test split.
///
/// Each class contributes `round(test_fraction * count)` samples to the test
/// side. Both outputs keep the input order of their samples. Absent classes
/// are skipped; a class with a single sample cannot be split.
pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut rng = seeded(seed, &[0x0073_706c_6974]);
    let mut in_test = vec![false; dataset.len()];
    for class in 0..dataset.classes() {
        let mut idx: Vec<usize> = dataset
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label.index() == class)
            .map(|(i, _)| i)
            .collect();
        match idx.len() {
            0 => continue,
            1 => {
                return Err(Error::Data(format!(
                    "class {} has a single sample and cannot be split",
                    class + 1
                )))
            }
            n => {
                idx.shuffle(&mut rng);
                let n_test = (test_fraction * n as f64).round() as usize;
                for &i in &idx[..n_test] {
                    in_test[i] = true;
                }
            }
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, &t) in dataset.samples().iter().zip(&in_test) {
        if t {
            test.push(s.clone());
        } else {
            train.push(s.clone());
        }
    }
    Ok((
        dataset.with_samples(train, Provenance::Derived(format!("train split seed {seed}"))),
        dataset.with_samples(test, Provenance::Derived(format!("test split seed {seed}"))),
    ))
}
