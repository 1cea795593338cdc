use rand::Rng as _;

use super::tree::Tree;
use super::ForestConfig;
use crate::data::{BinaryData, Matrix};
use crate::error::{Error, Result};
use crate::par;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    pub config: ForestConfig,
    pub n_features: usize,
    pub trees: Vec<Tree>,
    /// Bootstrap multiplicity of every training row, per tree. Empty for a
    /// forest read back from disk.
    pub in_bag: Vec<Vec<u32>>,
    pub oob_score: Option<f64>,
    /// Mean decrease in impurity, normalized to sum to 1 (all zeros when no
    /// tree split).
    pub importances: Vec<f64>,
}

impl RandomForest {
    pub fn fit(data: &BinaryData, config: &ForestConfig) -> Result<RandomForest> {
        config.validate()?;
        if data.n_positive() == 0 || data.n_negative() == 0 {
            return Err(Error::DegenerateTraining);
        }
        let n = data.len();
        let grown = par::map_range(config.n_estimators, |t| {
            let mut rng = seed::rng(config.seed, "bootstrap", &[t as u64]);
            let mut counts = vec![0u32; n];
            let rows: Vec<usize> = (0..n)
                .map(|_| {
                    let r = rng.gen_range(0..n);
                    counts[r] += 1;
                    r
                })
                .collect();
            let key = seed::derive(config.seed, "tree", &[t as u64]);
            (Tree::fit(&data.x, &data.y, rows, config, key), counts)
        });
        let (trees, in_bag): (Vec<Tree>, Vec<Vec<u32>>) = grown.into_iter().unzip();

        let n_features = data.n_features();
        let mut forest = RandomForest {
            config: config.clone(),
            n_features,
            importances: Vec::new(),
            trees,
            in_bag,
            oob_score: None,
        };
        forest.importances = forest.compute_importances();
        if config.compute_oob {
            forest.oob_score = forest.oob_accuracy(data);
        }
        Ok(forest)
    }

    fn check_width(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::WidthMismatch { expected: self.n_features, found: row.len() });
        }
        Ok(())
    }

    /// Mean over trees of the leaf positive fraction.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        self.check_width(row)?;
        Ok(self.trees.iter().map(|t| t.predict_proba(row)).sum::<f64>() / self.trees.len() as f64)
    }

    /// `(class, positive probability)`; a probability of exactly 0.5 counts
    /// as positive.
    pub fn predict(&self, row: &[f64]) -> Result<(bool, f64)> {
        let p = self.predict_proba(row)?;
        Ok((p >= 0.5, p))
    }

    pub fn predict_batch(&self, x: &Matrix) -> Result<Vec<bool>> {
        if x.n_cols() != self.n_features {
            return Err(Error::WidthMismatch { expected: self.n_features, found: x.n_cols() });
        }
        Ok(par::map_range(x.n_rows(), |i| {
            let row = x.row(i);
            self.trees.iter().map(|t| t.predict_proba(row)).sum::<f64>() / self.trees.len() as f64 >= 0.5
        }))
    }

    /// Per-tree positive fractions for every row of `x`, indexed `[tree][row]`.
    pub fn tree_probas(&self, x: &Matrix) -> Vec<Vec<f64>> {
        par::map_slice(&self.trees, |t| x.rows().map(|r| t.predict_proba(r)).collect())
    }

    pub fn accuracy(&self, data: &BinaryData) -> Result<f64> {
        let pred = self.predict_batch(&data.x)?;
        let hits = pred.iter().zip(&data.y).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / data.len().max(1) as f64)
    }

    /// Accuracy of the majority vote of trees whose bootstrap left the row
    /// out (ties count as positive). Rows with no such tree are skipped;
    /// `None` when every row was in every bootstrap.
    pub fn oob_accuracy(&self, data: &BinaryData) -> Option<f64> {
        if self.in_bag.is_empty() {
            return None;
        }
        let votes = par::map_range(data.len(), |i| {
            let row = data.x.row(i);
            let (mut pos, mut total) = (0usize, 0usize);
            for (t, tree) in self.trees.iter().enumerate() {
                if self.in_bag[t][i] == 0 {
                    total += 1;
                    pos += (tree.predict_proba(row) >= 0.5) as usize;
                }
            }
            (total > 0).then(|| (2 * pos >= total) == data.y[i])
        });
        let scored: Vec<bool> = votes.into_iter().flatten().collect();
        (!scored.is_empty()).then(|| scored.iter().filter(|&&c| c).count() as f64 / scored.len() as f64)
    }

    fn compute_importances(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.n_features];
        for t in &self.trees {
            for (a, v) in total.iter_mut().zip(t.importances(self.n_features)) {
                *a += v;
            }
        }
        let n = self.trees.len() as f64;
        total.iter_mut().for_each(|v| *v /= n);
        let sum: f64 = total.iter().sum();
        if sum > 0.0 {
            total.iter_mut().for_each(|v| *v /= sum);
        }
        total
    }

    /// `(feature index, importance, 1-based rank)`, most important first;
    /// ties keep column order.
    pub fn ranked_importances(&self) -> Vec<(usize, f64, usize)> {
        let mut order: Vec<usize> = (0..self.n_features).collect();
        order.sort_by(|&a, &b| self.importances[b].total_cmp(&self.importances[a]).then(a.cmp(&b)));
        order.into_iter().enumerate().map(|(rank, j)| (j, self.importances[j], rank + 1)).collect()
    }
}
