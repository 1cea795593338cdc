use serde::{Deserialize, Serialize};

use super::{Criterion, ForestConfig, RandomForest};
use crate::data::BinaryData;
use crate::error::{Error, Result};
use crate::eval::{stratified_folds, ConfusionMatrix};
use crate::par;
use crate::resample::ResampleMethod;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSearchSpace {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub criterion: Vec<Criterion>,
}

impl Default for GridSearchSpace {
    fn default() -> Self {
        GridSearchSpace {
            n_estimators: vec![10, 50, 100, 200, 500],
            max_depth: vec![5, 6, 7, 8, 9, 10, 20, 50],
            criterion: vec![Criterion::Gini, Criterion::Entropy],
        }
    }
}

impl GridSearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators.is_empty() || self.max_depth.is_empty() || self.criterion.is_empty() {
            return Err(Error::InvalidConfig("grid search axes must be non-empty".into()));
        }
        if self.n_estimators.contains(&0) || self.max_depth.contains(&0) {
            return Err(Error::InvalidConfig("grid values must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.n_estimators.len() * self.max_depth.len() * self.criterion.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub criterion: Criterion,
    pub mean_balanced_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub best: ForestConfig,
    pub points: Vec<GridPoint>,
}

/// Cross-validated grid search maximizing mean balanced accuracy. Training
/// folds are resampled with `method`; evaluation folds never are. Ties go to
/// fewer trees, then shallower trees, then the earlier criterion.
///
/// One forest of the largest size is grown per `(criterion, depth, fold)`;
/// smaller sizes are scored on its leading trees, which are exactly the
/// forests of that size.
pub fn grid_search(
    data: &BinaryData,
    space: &GridSearchSpace,
    base: &ForestConfig,
    method: ResampleMethod,
    folds: usize,
) -> Result<GridSearchResult> {
    space.validate()?;
    base.validate()?;
    let grid_seed = seed::derive(base.seed, "grid", &[]);
    let keys: Vec<u64> = (0..data.len())
        .map(|i| seed::derive(grid_seed, "fold-key", &[data.origin[i].unwrap_or(i) as u64]))
        .collect();
    let fold_sets = stratified_folds(&data.y, &keys, folds)?;
    let max_trees = *space.n_estimators.iter().max().expect("validated");

    let mut cells = Vec::new();
    for (ci, &criterion) in space.criterion.iter().enumerate() {
        for (di, &max_depth) in space.max_depth.iter().enumerate() {
            for f in 0..folds {
                cells.push((ci, di, criterion, max_depth, f));
            }
        }
    }

    let scores = par::try_map_range(cells.len(), |c| -> Result<Vec<f64>> {
        let (_, _, criterion, max_depth, f) = cells[c];
        let test = &fold_sets[f];
        let train: Vec<usize> = (0..folds).filter(|&g| g != f).flat_map(|g| fold_sets[g].iter().copied()).collect();
        let train = method.apply(&data.select(&train), seed::derive(grid_seed, "resample", &[f as u64]))?;
        let cfg = ForestConfig {
            n_estimators: max_trees,
            max_depth,
            criterion,
            compute_oob: false,
            seed: seed::derive(grid_seed, "forest", &[f as u64]),
            ..base.clone()
        };
        let forest = RandomForest::fit(&train, &cfg)?;
        let test = data.select(test);
        let per_tree = forest.tree_probas(&test.x);
        Ok(space
            .n_estimators
            .iter()
            .map(|&n| {
                let pred: Vec<bool> = (0..test.len())
                    .map(|i| per_tree[..n].iter().map(|t| t[i]).sum::<f64>() / n as f64 >= 0.5)
                    .collect();
                ConfusionMatrix::from_predictions(&test.y, &pred).balanced_accuracy()
            })
            .collect())
    })?;

    let mut points = Vec::with_capacity(space.len());
    for (ci, &criterion) in space.criterion.iter().enumerate() {
        for (di, &max_depth) in space.max_depth.iter().enumerate() {
            for (ni, &n_estimators) in space.n_estimators.iter().enumerate() {
                let sum: f64 = cells
                    .iter()
                    .zip(&scores)
                    .filter(|(cell, _)| cell.0 == ci && cell.1 == di)
                    .map(|(_, s)| s[ni])
                    .sum();
                points.push(GridPoint {
                    n_estimators,
                    max_depth,
                    criterion,
                    mean_balanced_accuracy: sum / folds as f64,
                });
            }
        }
    }

    let crit_rank = |c: Criterion| space.criterion.iter().position(|&x| x == c).unwrap();
    let mut order: Vec<&GridPoint> = points.iter().collect();
    order.sort_by_key(|p| (p.n_estimators, p.max_depth, crit_rank(p.criterion)));
    let mut best = order[0];
    for p in &order[1..] {
        if p.mean_balanced_accuracy > best.mean_balanced_accuracy + 1e-12 {
            best = p;
        }
    }
    let best = ForestConfig {
        n_estimators: best.n_estimators,
        max_depth: best.max_depth,
        criterion: best.criterion,
        ..base.clone()
    };
    Ok(GridSearchResult { best, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;
    use crate::forest::MaxFeatures;

    #[test]
    fn single_point_space() {
        let rows: Vec<[f64; 2]> = (0..60).map(|i| [i as f64, (i % 4) as f64]).collect();
        let y: Vec<bool> = (0..60).map(|i| i >= 40).collect();
        let d = BinaryData::new(Matrix::from_rows(2, &rows).unwrap(), y).unwrap();
        let space = GridSearchSpace { n_estimators: vec![5], max_depth: vec![3], criterion: vec![Criterion::Entropy] };
        let r = grid_search(&d, &space, &ForestConfig::default(), ResampleMethod::None, 5).unwrap();
        assert_eq!((r.best.n_estimators, r.best.max_depth, r.best.criterion), (5, 3, Criterion::Entropy));
        assert_eq!(r.points.len(), 1);
    }

    fn conjunction() -> BinaryData {
        // positive iff a == 1 and b == 1, plus a noise column
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..400 {
            let (a, b, c) = ((i % 2) as f64, ((i / 2) % 2) as f64, ((i * 37) % 11) as f64);
            rows.push([a, b, c]);
            y.push(a == 1.0 && b == 1.0);
        }
        BinaryData::new(Matrix::from_rows(3, &rows).unwrap(), y).unwrap()
    }

    #[test]
    fn single_tree_needs_depth_two() {
        let space = GridSearchSpace { n_estimators: vec![1], max_depth: vec![1, 2, 3], criterion: vec![Criterion::Gini] };
        let base = ForestConfig { max_features: MaxFeatures::All, seed: 3, ..Default::default() };
        let r = grid_search(&conjunction(), &space, &base, ResampleMethod::None, 5).unwrap();
        assert!(r.points[0].mean_balanced_accuracy < 0.9);
        assert_eq!(r.points[1].mean_balanced_accuracy, 1.0);
        assert_eq!(r.best.max_depth, 2);
    }

    #[test]
    fn ties_prefer_small_models() {
        // averaged stumps already express the conjunction
        let space = GridSearchSpace { n_estimators: vec![10, 5], max_depth: vec![3, 2], criterion: vec![Criterion::Gini] };
        let base = ForestConfig { max_features: MaxFeatures::All, seed: 3, ..Default::default() };
        let r = grid_search(&conjunction(), &space, &base, ResampleMethod::None, 5).unwrap();
        assert!(r.points.iter().all(|p| p.mean_balanced_accuracy == 1.0));
        assert_eq!((r.best.n_estimators, r.best.max_depth), (5, 2));
    }

    #[test]
    fn empty_axis_rejected() {
        let d = BinaryData::new(Matrix::from_rows(1, &[[0.0], [1.0]]).unwrap(), vec![false, true]).unwrap();
        let space = GridSearchSpace { n_estimators: vec![], ..Default::default() };
        assert!(grid_search(&d, &space, &ForestConfig::default(), ResampleMethod::None, 5).is_err());
    }
}
