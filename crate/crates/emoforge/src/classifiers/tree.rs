//! CART-style decision tree minimizing Gini impurity.
//!
//! Candidate thresholds are midpoints between consecutive distinct values
//! of each feature present at a node, with absent sparse entries treated as
//! value 0. A node splits only if the best candidate strictly reduces the
//! weighted impurity; gain ties resolve to the lowest feature index, then
//! the lowest threshold, so refitting on the same data rebuilds the same
//! tree.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{sorted_classes, validate_training_set, ClassifierError};
use crate::corpus::EmotionLabel;
use crate::vectorize::SparseVector;

/// Minimum gain for a split to count as a strict impurity reduction;
/// guards against accepting float noise on mathematically zero gains.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        histogram: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
    classes: Vec<EmotionLabel>,
    dim: usize,
    params: TreeParams,
}

impl TreeModel {
    pub fn classes(&self) -> &[EmotionLabel] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Longest root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        let mut max = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((idx, d)) = stack.pop() {
            match &self.nodes[idx] {
                Node::Leaf { .. } => max = max.max(d),
                Node::Split { left, right, .. } => {
                    stack.push((*left, d + 1));
                    stack.push((*right, d + 1));
                }
            }
        }
        max
    }

    pub fn predict(&self, x: &SparseVector) -> Result<EmotionLabel, ClassifierError> {
        tree_predict(self, x)
    }

    pub fn predict_batch(
        &self,
        xs: &[SparseVector],
    ) -> Result<Vec<EmotionLabel>, ClassifierError> {
        xs.iter().map(|x| tree_predict(self, x)).collect()
    }
}

fn gini(hist: &[u64], n: usize) -> f64 {
    let n = n as f64;
    1.0 - hist
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum::<f64>()
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Scans every feature present at the node (plus its implicit zeros) for
/// the candidate threshold with the largest Gini gain that respects
/// `min_samples_leaf`.
fn choose_split(
    x: &[SparseVector],
    class_of: &[u32],
    samples: &[u32],
    node_hist: &[u64],
    params: &TreeParams,
) -> Option<BestSplit> {
    let n = samples.len();
    let n_classes = node_hist.len();
    let parent_gini = gini(node_hist, n);

    let mut per_feature: HashMap<usize, Vec<(f64, u32)>> = HashMap::new();
    for &s in samples {
        for &(f, w) in x[s as usize].entries() {
            per_feature.entry(f).or_default().push((w, class_of[s as usize]));
        }
    }
    let mut features: Vec<usize> = per_feature.keys().copied().collect();
    features.sort_unstable();

    let mut best: Option<BestSplit> = None;
    for f in features {
        let mut list = per_feature.remove(&f).expect("key from map");
        list.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

        // group equal values: (value, histogram, count)
        let mut groups: Vec<(f64, Vec<u64>, usize)> = Vec::new();
        let mut nnz_hist = vec![0u64; n_classes];
        for (value, class) in list {
            nnz_hist[class as usize] += 1;
            match groups.last_mut() {
                Some(g) if g.0 == value => {
                    g.1[class as usize] += 1;
                    g.2 += 1;
                }
                _ => {
                    let mut h = vec![0u64; n_classes];
                    h[class as usize] += 1;
                    groups.push((value, h, 1));
                }
            }
        }
        let zero_count = n - groups.iter().map(|g| g.2).sum::<usize>();
        if zero_count > 0 {
            let zero_hist: Vec<u64> = node_hist
                .iter()
                .zip(&nnz_hist)
                .map(|(&total, &nnz)| total - nnz)
                .collect();
            let pos = groups.partition_point(|g| g.0 < 0.0);
            groups.insert(pos, (0.0, zero_hist, zero_count));
        }
        if groups.len() < 2 {
            continue;
        }

        let mut left_hist = vec![0u64; n_classes];
        let mut left_n = 0usize;
        for g in 0..groups.len() - 1 {
            for (acc, &c) in left_hist.iter_mut().zip(&groups[g].1) {
                *acc += c;
            }
            left_n += groups[g].2;
            let right_n = n - left_n;
            if left_n < params.min_samples_leaf || right_n < params.min_samples_leaf {
                continue;
            }
            let right_hist: Vec<u64> = node_hist
                .iter()
                .zip(&left_hist)
                .map(|(&total, &l)| total - l)
                .collect();
            let weighted = (left_n as f64 / n as f64) * gini(&left_hist, left_n)
                + (right_n as f64 / n as f64) * gini(&right_hist, right_n);
            let gain = parent_gini - weighted;
            // strict > keeps the first best: lowest feature, lowest threshold
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(BestSplit {
                    gain,
                    feature: f,
                    threshold: (groups[g].0 + groups[g + 1].0) / 2.0,
                });
            }
        }
    }
    best.filter(|b| b.gain > GAIN_EPS)
}

/// Grows the tree with an explicit work stack (no recursion, so training
/// set size never threatens the thread stack).
pub fn tree_fit(
    x: &[SparseVector],
    y: &[EmotionLabel],
    params: TreeParams,
) -> Result<TreeModel, ClassifierError> {
    let dim = validate_training_set(x, y)?;
    if params.min_samples_split < 2 {
        return Err(ClassifierError::InvalidParams {
            msg: format!("min_samples_split must be >= 2, got {}", params.min_samples_split),
        });
    }
    if params.min_samples_leaf < 1 {
        return Err(ClassifierError::InvalidParams {
            msg: "min_samples_leaf must be >= 1".to_string(),
        });
    }

    let classes = sorted_classes(y);
    let class_of: Vec<u32> = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label seen in fit") as u32)
        .collect();

    let mut nodes: Vec<Node> = Vec::new();
    // (samples, depth, parent slot to patch: (node index, is_right_child))
    let mut work: Vec<(Vec<u32>, usize, Option<(usize, bool)>)> =
        vec![((0..x.len() as u32).collect(), 0, None)];
    while let Some((samples, depth, parent)) = work.pop() {
        let mut hist = vec![0u64; classes.len()];
        for &s in &samples {
            hist[class_of[s as usize] as usize] += 1;
        }
        let is_pure = hist.iter().filter(|&&c| c > 0).count() == 1;
        let depth_capped = params.max_depth.is_some_and(|md| depth >= md);
        let splittable =
            !is_pure && !depth_capped && samples.len() >= params.min_samples_split;

        let split = if splittable {
            choose_split(x, &class_of, &samples, &hist, &params)
        } else {
            None
        };

        let idx = nodes.len();
        match split {
            Some(s) => {
                let (left, right): (Vec<u32>, Vec<u32>) = samples
                    .iter()
                    .partition(|&&i| x[i as usize].get(s.feature) <= s.threshold);
                nodes.push(Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: 0,
                    right: 0,
                });
                // right pushed first so the left child is grown (and
                // numbered) before it
                work.push((right, depth + 1, Some((idx, true))));
                work.push((left, depth + 1, Some((idx, false))));
            }
            None => {
                let majority = hist
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
                    .map(|(c, _)| c)
                    .expect("non-empty histogram");
                nodes.push(Node::Leaf {
                    class: majority,
                    histogram: hist,
                });
            }
        }
        if let Some((p, is_right)) = parent {
            match &mut nodes[p] {
                Node::Split { left, right, .. } => {
                    if is_right {
                        *right = idx;
                    } else {
                        *left = idx;
                    }
                }
                Node::Leaf { .. } => unreachable!("parent is always a split node"),
            }
        }
    }

    Ok(TreeModel {
        nodes,
        classes,
        dim,
        params,
    })
}

/// Routes the vector down the tree: `x[feature] <= threshold` goes left.
pub fn tree_predict(model: &TreeModel, x: &SparseVector) -> Result<EmotionLabel, ClassifierError> {
    if x.dim() != model.dim {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dim,
            got: x.dim(),
        });
    }
    let mut idx = 0;
    loop {
        match &model.nodes[idx] {
            Node::Leaf { class, .. } => return Ok(model.classes[*class].clone()),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                idx = if x.get(*feature) <= *threshold { *left } else { *right };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn label(s: &str) -> EmotionLabel {
        EmotionLabel::new(s).unwrap()
    }

    fn sv1(v: f64) -> SparseVector {
        let entries = if v == 0.0 { vec![] } else { vec![(0, v)] };
        SparseVector::from_entries(1, entries).unwrap()
    }

    fn labels(names: &[&str]) -> Vec<EmotionLabel> {
        names.iter().map(|s| label(s)).collect()
    }

    #[test]
    fn pure_training_set_is_single_leaf() {
        let x = vec![sv1(1.0), sv1(2.0), sv1(3.0)];
        let y = labels(&["a", "a", "a"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        assert_eq!(model.n_nodes(), 1);
        assert_eq!(model.depth(), 0);
        assert_eq!(model.predict(&sv1(99.0)).unwrap(), label("a"));
    }

    #[test]
    fn one_dimensional_separable_split() {
        let x = vec![sv1(1.0), sv1(2.0), sv1(3.0), sv1(4.0)];
        let y = labels(&["a", "a", "b", "b"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        assert_eq!(model.n_nodes(), 3);
        match &model.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert!((threshold - 2.5).abs() < 1e-12, "midpoint of 2 and 3");
            }
            Node::Leaf { .. } => panic!("root should split"),
        }
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(model.predict(xi).unwrap(), *yi);
        }
    }

    #[test]
    fn implicit_zeros_are_candidate_values() {
        // one document has no explicit entry; the split midpoint must be
        // between 0 and 1
        let x = vec![sv1(0.0), sv1(1.0)];
        let y = labels(&["a", "b"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        match &model.nodes[0] {
            Node::Split { threshold, .. } => assert!((threshold - 0.5).abs() < 1e-12),
            Node::Leaf { .. } => panic!("root should split"),
        }
        assert_eq!(model.predict(&sv1(0.2)).unwrap(), label("a"));
        assert_eq!(model.predict(&sv1(0.9)).unwrap(), label("b"));
    }

    #[test]
    fn conflicting_duplicate_vectors_majority_leaf() {
        let x = vec![sv1(1.0), sv1(1.0), sv1(1.0)];
        let y = labels(&["b", "a", "b"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        assert_eq!(model.n_nodes(), 1);
        assert_eq!(model.predict(&sv1(1.0)).unwrap(), label("b"));
    }

    #[test]
    fn conflicting_duplicates_tie_goes_to_lexicographic_smaller() {
        let x = vec![sv1(1.0), sv1(1.0)];
        let y = labels(&["b", "a"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        assert_eq!(model.predict(&sv1(1.0)).unwrap(), label("a"));
    }

    #[test]
    fn zero_gain_everywhere_stops_splitting() {
        // XOR-like symmetry: every candidate split leaves both children at
        // the parent's impurity, so no split strictly improves and the
        // root stays a (tied) leaf
        let mk = |a: f64, b: f64| {
            let mut e = vec![];
            if a != 0.0 {
                e.push((0, a));
            }
            if b != 0.0 {
                e.push((1, b));
            }
            SparseVector::from_entries(2, e).unwrap()
        };
        let x = vec![mk(0.0, 0.0), mk(0.0, 1.0), mk(1.0, 0.0), mk(1.0, 1.0)];
        let y = labels(&["a", "b", "b", "a"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        assert_eq!(model.n_nodes(), 1);
        assert_eq!(model.predict(&mk(0.0, 1.0)).unwrap(), label("a"));
    }

    #[test]
    fn two_level_tree_with_threshold_tie_break() {
        // labels a a b b a a over values 1..6: thresholds 2.5 and 4.5 give
        // equal best gain; the lower threshold must win at the root
        let x: Vec<SparseVector> = (1..=6).map(|v| sv1(v as f64)).collect();
        let y = labels(&["a", "a", "b", "b", "a", "a"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        match &model.nodes[0] {
            Node::Split { threshold, .. } => assert!((threshold - 2.5).abs() < 1e-12),
            Node::Leaf { .. } => panic!("root should split"),
        }
        assert_eq!(model.depth(), 2);
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(model.predict(xi).unwrap(), *yi);
        }
    }

    #[test]
    fn duplicated_column_picks_lower_feature_index() {
        let mk = |v: f64| {
            SparseVector::from_entries(2, vec![(0, v), (1, v)]).unwrap()
        };
        let x = vec![mk(1.0), mk(2.0), mk(3.0), mk(4.0)];
        let y = labels(&["a", "a", "b", "b"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        match &model.nodes[0] {
            Node::Split { feature, .. } => assert_eq!(*feature, 0),
            Node::Leaf { .. } => panic!("root should split"),
        }
    }

    #[test]
    fn min_samples_leaf_blocks_unbalanced_splits() {
        let x = vec![sv1(1.0), sv1(2.0), sv1(3.0)];
        let y = labels(&["a", "b", "b"]);
        let strict = TreeParams { min_samples_leaf: 2, ..TreeParams::default() };
        let model = tree_fit(&x, &y, strict).unwrap();
        assert_eq!(model.n_nodes(), 1, "no split can give both sides 2 samples");
        let relaxed = tree_fit(&x, &y, TreeParams::default()).unwrap();
        assert!(relaxed.n_nodes() > 1);
    }

    #[test]
    fn min_samples_split_blocks_small_nodes() {
        let x = vec![sv1(1.0), sv1(2.0)];
        let y = labels(&["a", "b"]);
        let params = TreeParams { min_samples_split: 3, ..TreeParams::default() };
        let model = tree_fit(&x, &y, params).unwrap();
        assert_eq!(model.n_nodes(), 1);
    }

    #[test]
    fn max_depth_limits_growth() {
        let x: Vec<SparseVector> = (1..=6).map(|v| sv1(v as f64)).collect();
        let y = labels(&["a", "a", "b", "b", "a", "a"]);
        let capped = TreeParams { max_depth: Some(1), ..TreeParams::default() };
        let model = tree_fit(&x, &y, capped).unwrap();
        assert!(model.depth() <= 1);
        let stump = TreeParams { max_depth: Some(0), ..TreeParams::default() };
        let model = tree_fit(&x, &y, stump).unwrap();
        assert_eq!(model.n_nodes(), 1);
    }

    #[test]
    fn perfect_training_accuracy_on_generic_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let names = ["a", "b", "c"];
        for _ in 0..10 {
            let n = rng.random_range(10..50);
            let dim = 4;
            let x: Vec<SparseVector> = (0..n)
                .map(|_| {
                    let entries: Vec<(usize, f64)> = (0..dim)
                        .filter_map(|i| {
                            if rng.random_range(0.0..1.0) < 0.7 {
                                Some((i, rng.random_range(0.0001..10.0)))
                            } else {
                                None
                            }
                        })
                        .collect();
                    SparseVector::from_entries(dim, entries).unwrap()
                })
                .collect();
            let y: Vec<EmotionLabel> = (0..n)
                .map(|_| label(names[rng.random_range(0..names.len())]))
                .collect();
            // continuous random values make duplicate rows (the only
            // obstacle to a perfect fit) vanishingly unlikely
            let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
            let predictions = model.predict_batch(&x).unwrap();
            assert_eq!(predictions, y);
        }
    }

    #[test]
    fn parameter_validation_and_dim_checks() {
        let x = vec![sv1(1.0), sv1(2.0)];
        let y = labels(&["a", "b"]);
        assert!(matches!(
            tree_fit(&x, &y, TreeParams { min_samples_split: 1, ..TreeParams::default() })
                .unwrap_err(),
            ClassifierError::InvalidParams { .. }
        ));
        assert!(matches!(
            tree_fit(&x, &y, TreeParams { min_samples_leaf: 0, ..TreeParams::default() })
                .unwrap_err(),
            ClassifierError::InvalidParams { .. }
        ));
        assert_eq!(
            tree_fit(&[], &[], TreeParams::default()).unwrap_err(),
            ClassifierError::EmptyTrainingSet
        );
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        assert!(matches!(
            model.predict(&SparseVector::zeros(7)).unwrap_err(),
            ClassifierError::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn serde_round_trip_preserves_predictions() {
        let x: Vec<SparseVector> = (1..=6).map(|v| sv1(v as f64)).collect();
        let y = labels(&["a", "a", "b", "b", "a", "a"]);
        let model = tree_fit(&x, &y, TreeParams::default()).unwrap();
        let back: TreeModel = serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(back, model);
        for xi in &x {
            assert_eq!(back.predict(xi).unwrap(), model.predict(xi).unwrap());
        }
    }
}
