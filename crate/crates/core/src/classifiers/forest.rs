//! CART classification trees with Gini splits, bagged into a random forest.

use ndarray::{ArrayView1, ArrayView2, Array2};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_input, ClassifierError, ProbabilisticModel, ProbabilityMatrix, Result, Trainer};
use crate::dataset::LabeledDataset;
use crate::rng;
use crate::Scalar;

/// Number of candidate features drawn at each split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(D))`
    Sqrt,
    All,
    Fixed(usize),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Fixed(m) => m,
        };
        m.clamp(1, n_features.max(1))
    }
}

/// How a leaf turns into a class distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafVote {
    /// Class proportions of the training samples in the leaf.
    Proportions,
    /// One-hot on the leaf's majority class (lowest index on ties).
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub vote: LeafVote,
}

impl Default for RfParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            vote: LeafVote::Proportions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode<T> {
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: T, left: usize, right: usize },
    Leaf { counts: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree<T> {
    nodes: Vec<TreeNode<T>>,
}

impl<T: Scalar> DecisionTree<T> {
    /// A stump-free tree that always lands in one leaf.
    pub fn single_leaf(counts: Vec<u32>) -> Self {
        assert!(counts.iter().any(|&c| c > 0), "leaf counts must be nonzero");
        Self { nodes: vec![TreeNode::Leaf { counts }] }
    }

    /// Nodes in construction order; index 0 is the root.
    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[TreeNode<T>], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_counts(&self, row: ArrayView1<T>) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    fn fit(x: ArrayView2<T>, labels: &[usize], n_classes: usize, samples: Vec<usize>, params: &RfParams, seed: u64) -> Self {
        let mut builder = TreeBuilder {
            x,
            labels,
            n_classes,
            params,
            m: params.max_features.resolve(x.ncols()),
            rng: rng::stream(seed, &[]),
            pairs: Vec::with_capacity(samples.len()),
        };
        let mut nodes = vec![TreeNode::Leaf { counts: Vec::new() }];
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((id, samples, depth)) = stack.pop() {
            match builder.best_split(&samples, depth) {
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = samples.into_iter().partition(|&i| x[[i, feature]] <= threshold);
                    let left = nodes.len();
                    let right = left + 1;
                    nodes.push(TreeNode::Leaf { counts: Vec::new() });
                    nodes.push(TreeNode::Leaf { counts: Vec::new() });
                    nodes[id] = TreeNode::Split { feature, threshold, left, right };
                    stack.push((right, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
                None => nodes[id] = TreeNode::Leaf { counts: builder.counts(&samples) },
            }
        }
        Self { nodes }
    }
}

struct TreeBuilder<'a, T> {
    x: ArrayView2<'a, T>,
    labels: &'a [usize],
    n_classes: usize,
    params: &'a RfParams,
    m: usize,
    rng: rng::Rng,
    pairs: Vec<(T, usize)>,
}

impl<T: Scalar> TreeBuilder<'_, T> {
    fn counts(&self, samples: &[usize]) -> Vec<u32> {
        let mut counts = vec![0u32; self.n_classes];
        for &i in samples {
            counts[self.labels[i]] += 1;
        }
        counts
    }

    /// Gini split minimizing weighted child impurity over at least `m`
    /// non-constant candidate features. Ties go to the lowest feature index,
    /// then the lowest threshold.
    fn best_split(&mut self, samples: &[usize], depth: usize) -> Option<(usize, T)> {
        let n = samples.len();
        let min_leaf = self.params.min_leaf.max(1);
        let counts = self.counts(samples);
        if counts.iter().filter(|&&c| c > 0).count() <= 1
            || self.params.max_depth.is_some_and(|d| depth >= d)
            || n < 2 * min_leaf
        {
            return None;
        }
        let total_counts: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();

        let mut features: Vec<usize> = (0..self.x.ncols()).collect();
        features.shuffle(&mut self.rng);
        let mut visited = 0;
        // (score, feature, threshold); score = Σ l²/nl + Σ r²/nr, larger is purer
        let mut best: Option<(f64, usize, T)> = None;
        for f in features {
            if visited >= self.m {
                break;
            }
            self.pairs.clear();
            self.pairs.extend(samples.iter().map(|&i| (self.x[[i, f]], self.labels[i])));
            self.pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
            if self.pairs[0].0 == self.pairs[n - 1].0 {
                continue;
            }
            visited += 1;

            let mut left = vec![0f64; self.n_classes];
            let mut right = total_counts.clone();
            let mut left_sq = 0.0;
            let mut right_sq: f64 = right.iter().map(|c| c * c).sum();
            for i in 0..n - 1 {
                let c = self.pairs[i].1;
                left_sq += 2.0 * left[c] + 1.0;
                left[c] += 1.0;
                right_sq -= 2.0 * right[c] - 1.0;
                right[c] -= 1.0;
                let nl = i + 1;
                let nr = n - nl;
                let (v, next) = (self.pairs[i].0, self.pairs[i + 1].0);
                if v == next || nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let score = left_sq / nl as f64 + right_sq / nr as f64;
                let mut threshold = (v + next) / T::lit(2.0);
                if threshold >= next {
                    threshold = v;
                }
                let better = match best {
                    None => true,
                    Some((s, bf, bt)) => score > s || (score == s && (f < bf || (f == bf && threshold < bt))),
                };
                if better {
                    best = Some((score, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel<T> {
    trees: Vec<DecisionTree<T>>,
    tree_seeds: Vec<u64>,
    n_classes: usize,
    n_features: usize,
    features_per_split: usize,
    vote: LeafVote,
}

impl<T: Scalar> RfModel<T> {
    /// Assembles a forest from existing trees.
    pub fn from_trees(trees: Vec<DecisionTree<T>>, n_classes: usize, n_features: usize, vote: LeafVote) -> Self {
        assert!(!trees.is_empty(), "a forest needs at least one tree");
        let n = trees.len();
        Self { trees, tree_seeds: vec![0; n], n_classes, n_features, features_per_split: n_features, vote }
    }

    pub fn trees(&self) -> &[DecisionTree<T>] {
        &self.trees
    }

    pub fn tree_seeds(&self) -> &[u64] {
        &self.tree_seeds
    }

    pub fn features_per_split(&self) -> usize {
        self.features_per_split
    }
}

impl<T: Scalar> ProbabilisticModel<T> for RfModel<T> {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, x: ArrayView2<T>) -> Result<ProbabilityMatrix<T>> {
        if x.ncols() != self.n_features {
            return Err(ClassifierError::DimensionMismatch { expected: self.n_features, got: x.ncols() });
        }
        let k = self.n_classes;
        let n_trees = T::from_usize_lossy(self.trees.len());
        let mut out = Array2::<T>::zeros((x.nrows(), k));
        for (row, mut acc) in x.outer_iter().zip(out.outer_iter_mut()) {
            for tree in &self.trees {
                let counts = tree.leaf_counts(row);
                match self.vote {
                    LeafVote::Proportions => {
                        let total = T::from_usize_lossy(counts.iter().map(|&c| c as usize).sum());
                        for c in 0..k {
                            acc[c] += T::from_u32(counts[c]).expect("count") / total;
                        }
                    }
                    LeafVote::Hard => {
                        let winner = (0..k).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
                        acc[winner] += T::one();
                    }
                }
            }
            acc.mapv_inplace(|v| v / n_trees);
        }
        ProbabilityMatrix::new(out)
    }
}

impl<T: Scalar> Trainer<T> for RfParams {
    type Model = RfModel<T>;

    /// Trees are trained in parallel; tree `t` uses the stream `(seed, t)`, so
    /// the forest does not depend on scheduling.
    fn fit(&self, x: ArrayView2<T>, labels: &[usize], n_classes: usize, seed: u64) -> Result<RfModel<T>> {
        check_training_input(&x, labels, n_classes)?;
        if self.n_trees == 0 {
            return Err(ClassifierError::DegenerateInput("forest needs at least one tree".into()));
        }
        let n = labels.len();
        let tree_seeds: Vec<u64> = (0..self.n_trees).map(|t| rng::derive_seed(seed, &[t as u64])).collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&s| {
                let samples = if self.bootstrap {
                    let mut r = rng::stream(s, &[rng::hash_str("bootstrap")]);
                    (0..n).map(|_| r.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::fit(x, labels, n_classes, samples, self, s)
            })
            .collect();
        Ok(RfModel {
            trees,
            tree_seeds,
            n_classes,
            n_features: x.ncols(),
            features_per_split: self.max_features.resolve(x.ncols()),
            vote: self.vote,
        })
    }
}

pub fn fit_random_forest<T: Scalar>(ds: &LabeledDataset<T>, params: &RfParams, seed: u64) -> Result<RfModel<T>> {
    params.fit_dataset(ds, seed)
}

pub fn predict_proba_rf<T: Scalar>(model: &RfModel<T>, x: ArrayView2<T>) -> Result<ProbabilityMatrix<T>> {
    model.predict_proba(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn blobs(n_per: usize, seed: u64) -> LabeledDataset<f64> {
        let mut r = rng::stream(seed, &[]);
        let centers = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)];
        let mut x = Array2::zeros((3 * n_per, 2));
        let mut labels = Vec::new();
        for (c, &(cx, cy)) in centers.iter().enumerate() {
            for i in 0..n_per {
                let row = c * n_per + i;
                x[[row, 0]] = cx + r.random_range(-1.0..1.0);
                x[[row, 1]] = cy + r.random_range(-1.0..1.0);
                labels.push(c);
            }
        }
        LabeledDataset::new(x, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    fn traverse(tree: &DecisionTree<f64>, row: ArrayView1<f64>) -> usize {
        // independent walk over the public node list
        let nodes = tree.nodes();
        let mut i = 0;
        loop {
            match &nodes[i] {
                TreeNode::Leaf { counts } => {
                    let nonzero: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
                    assert_eq!(nonzero.len(), 1, "leaf not pure: {counts:?}");
                    return nonzero[0];
                }
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left } else { *right }
                }
            }
        }
    }

    #[test]
    fn single_unbagged_tree_memorizes_training_set() {
        let ds = blobs(30, 4);
        let params = RfParams { n_trees: 1, bootstrap: false, max_features: MaxFeatures::All, ..Default::default() };
        let model = fit_random_forest(&ds, &params, 1).unwrap();
        let p = model.predict_proba(ds.features().view()).unwrap();
        for (i, row) in ds.features().outer_iter().enumerate() {
            let leaf_class = traverse(&model.trees()[0], row);
            assert_eq!(leaf_class, ds.labels()[i]);
            assert_eq!(p.values()[[i, leaf_class]], 1.0);
        }
    }

    #[test]
    fn unbagged_sqrt_forest_fits_separable_xor() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0], [0.1, 0.1], [0.9, 0.9], [0.1, 0.9], [0.9, 0.1]];
        let labels = vec![0, 0, 1, 1, 0, 0, 1, 1];
        let ds = LabeledDataset::new(x, labels.clone(), vec!["a".into(), "b".into()]).unwrap();
        let params = RfParams { n_trees: 5, bootstrap: false, ..Default::default() };
        let model = fit_random_forest(&ds, &params, 3).unwrap();
        let p = model.predict_proba(ds.features().view()).unwrap();
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(p.values()[[i, l]], 1.0);
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let ds = blobs(20, 1);
        let params = RfParams { n_trees: 10, ..Default::default() };
        let a = fit_random_forest(&ds, &params, 77).unwrap();
        let b = fit_random_forest(&ds, &params, 77).unwrap();
        assert_eq!(a, b);
        let c = fit_random_forest(&ds, &params, 78).unwrap();
        assert_ne!(a.trees(), c.trees());
    }

    #[test]
    fn min_leaf_of_n_gives_prior_stumps() {
        let ds = blobs(10, 2);
        let params = RfParams { n_trees: 3, bootstrap: false, min_leaf: ds.n_samples(), ..Default::default() };
        let model = fit_random_forest(&ds, &params, 0).unwrap();
        for tree in model.trees() {
            assert_eq!(tree.nodes().len(), 1);
        }
        let p = model.predict_proba(array![[100.0, -3.0]].view()).unwrap();
        for c in 0..3 {
            assert!((p.values()[[0, c]] - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn max_depth_is_respected() {
        let ds = blobs(30, 5);
        let params = RfParams { n_trees: 4, max_depth: Some(2), ..Default::default() };
        let model = fit_random_forest(&ds, &params, 0).unwrap();
        assert!(model.trees().iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn identical_leaf_forest_arithmetic() {
        let trees = vec![DecisionTree::single_leaf(vec![3, 1]); 4];
        let model = RfModel::<f64>::from_trees(trees.clone(), 2, 1, LeafVote::Proportions);
        let p = model.predict_proba(array![[0.0], [5.0]].view()).unwrap();
        for row in p.values().outer_iter() {
            assert_eq!(row.to_vec(), vec![0.75, 0.25]);
        }
        let mut more = trees;
        more.push(more[0].clone());
        let model2 = RfModel::<f64>::from_trees(more, 2, 1, LeafVote::Proportions);
        assert_eq!(model2.predict_proba(array![[1.0]].view()).unwrap().values().row(0).to_vec(), vec![0.75, 0.25]);
        let hard = RfModel::<f64>::from_trees(vec![DecisionTree::single_leaf(vec![3, 1])], 2, 1, LeafVote::Hard);
        assert_eq!(hard.predict_proba(array![[1.0]].view()).unwrap().values().row(0).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn duplicated_tree_keeps_predictions() {
        let ds = blobs(15, 9);
        let model = fit_random_forest(&ds, &RfParams { n_trees: 1, ..Default::default() }, 4).unwrap();
        let doubled = RfModel::from_trees(vec![model.trees()[0].clone(); 2], 3, 2, LeafVote::Proportions);
        let q = array![[0.5, 0.5], [3.0, 1.0], [2.0, 2.0]];
        assert_eq!(model.predict_proba(q.view()).unwrap(), doubled.predict_proba(q.view()).unwrap());
    }

    #[test]
    fn rows_are_stochastic_and_dimension_checked() {
        let ds = blobs(20, 3);
        let model = fit_random_forest(&ds, &RfParams { n_trees: 15, ..Default::default() }, 0).unwrap();
        let q = Array2::from_shape_fn((30, 2), |(i, j)| (i as f64 - 15.0) * (j as f64 + 0.3));
        for row in model.predict_proba(q.view()).unwrap().values().outer_iter() {
            assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        assert!(matches!(model.predict_proba(array![[1.0]].view()), Err(ClassifierError::DimensionMismatch { .. })));
        assert_eq!(model.features_per_split(), 2);
    }

    #[test]
    fn sqrt_rule() {
        assert_eq!(MaxFeatures::Sqrt.resolve(21), 5);
        assert_eq!(MaxFeatures::Sqrt.resolve(16), 4);
        assert_eq!(MaxFeatures::Fixed(50).resolve(3), 3);
    }
}
