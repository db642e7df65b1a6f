//! One-vs-one multiclass reduction over binary SVMs.
//!
//! One binary machine is trained per unordered class pair (a, b) with a < b
//! alphabetically; the smaller class plays +1. Prediction tallies votes
//! over all machines; vote ties are broken by the larger total |decision
//! value| accumulated over the tied classes' machines, then alphabetically.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::smo::{smo_train, BinarySvmModel, SmoParams};
use super::{Kernel, SvmError};
use crate::corpus::EmotionLabel;
use crate::vectorize::SparseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseModel {
    /// Class mapped to +1 (the alphabetically smaller one).
    pub positive: EmotionLabel,
    /// Class mapped to -1.
    pub negative: EmotionLabel,
    pub model: BinarySvmModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvmModel {
    classes: Vec<EmotionLabel>,
    dim: usize,
    pairs: Vec<PairwiseModel>,
}

impl MulticlassSvmModel {
    pub fn classes(&self) -> &[EmotionLabel] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[PairwiseModel] {
        &self.pairs
    }

    pub fn predict(&self, x: &SparseVector) -> Result<EmotionLabel, SvmError> {
        ovo_predict(self, x)
    }

    pub fn predict_batch(&self, xs: &[SparseVector]) -> Result<Vec<EmotionLabel>, SvmError> {
        xs.par_iter().map(|x| ovo_predict(self, x)).collect()
    }
}

/// Decorrelates per-pair shuffle seeds from the master seed.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Trains one binary machine per class pair, in parallel. `classes` may
/// pin the label inventory explicitly (it must cover every observed label
/// and every listed class must have at least one example); when `None` the
/// observed labels are used.
pub fn ovo_fit(
    x: &[SparseVector],
    y: &[EmotionLabel],
    classes: Option<Vec<EmotionLabel>>,
    kernel: Kernel,
    params: &SmoParams,
) -> Result<MulticlassSvmModel, SvmError> {
    if x.len() != y.len() {
        return Err(SvmError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.is_empty() {
        return Err(SvmError::TooFewPoints { got: 0 });
    }
    let dim = x[0].dim();
    for v in x {
        if v.dim() != dim {
            return Err(SvmError::DimensionMismatch { expected: dim, got: v.dim() });
        }
    }
    kernel.validate()?;

    let observed: BTreeSet<&EmotionLabel> = y.iter().collect();
    let classes: Vec<EmotionLabel> = match classes {
        Some(list) => {
            let set: BTreeSet<EmotionLabel> = list.into_iter().collect();
            for label in &observed {
                if !set.contains(label) {
                    return Err(SvmError::UnknownClass { label: label.to_string() });
                }
            }
            for label in &set {
                if !observed.contains(label) {
                    return Err(SvmError::EmptyClass { label: label.to_string() });
                }
            }
            set.into_iter().collect()
        }
        None => observed.into_iter().cloned().collect(),
    };
    if classes.len() < 2 {
        return Err(SvmError::TooFewClasses { got: classes.len() });
    }

    let mut specs = Vec::new();
    for a in 0..classes.len() {
        for b in a + 1..classes.len() {
            specs.push((specs.len(), a, b));
        }
    }
    let pairs: Vec<PairwiseModel> = specs
        .par_iter()
        .map(|&(pair_idx, a, b)| {
            let (pos, neg) = (&classes[a], &classes[b]);
            let mut px = Vec::new();
            let mut py = Vec::new();
            for (xi, yi) in x.iter().zip(y) {
                if yi == pos {
                    px.push(xi.clone());
                    py.push(1.0);
                } else if yi == neg {
                    px.push(xi.clone());
                    py.push(-1.0);
                }
            }
            let pair_params = SmoParams {
                seed: splitmix64(params.seed.wrapping_add(pair_idx as u64 + 1)),
                ..*params
            };
            let model = smo_train(&px, &py, kernel, &pair_params)?;
            Ok(PairwiseModel { positive: pos.clone(), negative: neg.clone(), model })
        })
        .collect::<Result<_, SvmError>>()?;

    Ok(MulticlassSvmModel { classes, dim, pairs })
}

/// Majority vote over the pairwise machines; f(x) >= 0 votes for the
/// positive (alphabetically smaller) class of the pair.
pub fn ovo_predict(
    model: &MulticlassSvmModel,
    x: &SparseVector,
) -> Result<EmotionLabel, SvmError> {
    if x.dim() != model.dim {
        return Err(SvmError::DimensionMismatch { expected: model.dim, got: x.dim() });
    }
    let mut votes = vec![0usize; model.classes.len()];
    let mut decisions = Vec::with_capacity(model.pairs.len());
    let class_idx = |label: &EmotionLabel| {
        model
            .classes
            .binary_search(label)
            .expect("pair labels come from the class list")
    };
    for pair in &model.pairs {
        let f = pair.model.decision(x)?;
        let winner = if f >= 0.0 { &pair.positive } else { &pair.negative };
        votes[class_idx(winner)] += 1;
        decisions.push(f);
    }

    let top = *votes.iter().max().expect("at least one pair");
    let tied: Vec<usize> = (0..votes.len()).filter(|&c| votes[c] == top).collect();
    if tied.len() == 1 {
        return Ok(model.classes[tied[0]].clone());
    }
    // accumulate |f| per tied class over pairs whose both ends are tied,
    // so irrelevant machines can't sway the runoff
    let tied_set: BTreeSet<usize> = tied.iter().copied().collect();
    let mut strength = vec![0.0f64; model.classes.len()];
    for (pair, &f) in model.pairs.iter().zip(&decisions) {
        let (p, n) = (class_idx(&pair.positive), class_idx(&pair.negative));
        if tied_set.contains(&p) && tied_set.contains(&n) {
            strength[p] += f.abs();
            strength[n] += f.abs();
        }
    }
    let best = tied
        .iter()
        .copied()
        .max_by(|&a, &b| {
            strength[a]
                .partial_cmp(&strength[b])
                .expect("|f| sums are finite")
                .then(b.cmp(&a)) // prefer the lower class index on equal strength
        })
        .expect("tie set is non-empty");
    Ok(model.classes[best].clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(dim: usize, entries: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_entries(dim, entries.to_vec()).unwrap()
    }

    fn label(s: &str) -> EmotionLabel {
        EmotionLabel::new(s).unwrap()
    }

    /// A machine with no support vectors evaluates to a constant bias —
    /// handy for scripting exact vote/strength scenarios.
    fn bias_only(pos: &str, neg: &str, bias: f64) -> PairwiseModel {
        PairwiseModel {
            positive: label(pos),
            negative: label(neg),
            model: BinarySvmModel {
                kernel: Kernel::Linear,
                c: 1.0,
                dim: 1,
                support_vectors: vec![],
                coefficients: vec![],
                support_indices: vec![],
                bias,
                sweeps: 1,
            },
        }
    }

    fn scripted(pairs: Vec<PairwiseModel>) -> MulticlassSvmModel {
        let mut classes: BTreeSet<EmotionLabel> = BTreeSet::new();
        for p in &pairs {
            classes.insert(p.positive.clone());
            classes.insert(p.negative.clone());
        }
        MulticlassSvmModel { classes: classes.into_iter().collect(), dim: 1, pairs }
    }

    #[test]
    fn three_separable_clusters_are_learned() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (center, name) in [(0.0, "angry"), (5.0, "happy"), (10.0, "sad")] {
            for off in [-0.2, 0.0, 0.2] {
                x.push(sv(1, &[(0, center + off)]));
                y.push(label(name));
            }
        }
        let model = ovo_fit(
            &x,
            &y,
            None,
            Kernel::Rbf { gamma: 0.5 },
            &SmoParams { c: 10.0, ..SmoParams::default() },
        )
        .unwrap();
        assert_eq!(model.classes(), &[label("angry"), label("happy"), label("sad")]);
        assert_eq!(model.pairs().len(), 3);
        let preds = model.predict_batch(&x).unwrap();
        assert_eq!(preds, y);
        // probe points well inside each cluster
        assert_eq!(model.predict(&sv(1, &[(0, 0.1)])).unwrap(), label("angry"));
        assert_eq!(model.predict(&sv(1, &[(0, 5.1)])).unwrap(), label("happy"));
        assert_eq!(model.predict(&sv(1, &[(0, 9.9)])).unwrap(), label("sad"));
    }

    #[test]
    fn vote_tie_resolved_by_decision_strength() {
        // pairs (a,b): f=+0.3 votes a; (a,c): f=-0.2 votes c; (b,c): f=+0.4
        // votes b — all tied at one vote. |f| sums: a=0.5, b=0.7, c=0.6.
        let model = scripted(vec![
            bias_only("a", "b", 0.3),
            bias_only("a", "c", -0.2),
            bias_only("b", "c", 0.4),
        ]);
        assert_eq!(model.predict(&sv(1, &[])).unwrap(), label("b"));
    }

    #[test]
    fn full_tie_falls_back_to_alphabetical() {
        let model = scripted(vec![
            bias_only("a", "b", 0.5),
            bias_only("a", "c", -0.5),
            bias_only("b", "c", 0.5),
        ]);
        // one vote each, |f| sums all equal (1.0): alphabetical -> a
        assert_eq!(model.predict(&sv(1, &[])).unwrap(), label("a"));
    }

    #[test]
    fn zero_decision_votes_for_positive_class() {
        let model = scripted(vec![bias_only("x", "z", 0.0)]);
        assert_eq!(model.predict(&sv(1, &[])).unwrap(), label("x"));
    }

    #[test]
    fn runoff_ignores_pairs_outside_the_tie() {
        // b and c tie at 2 votes; a is eliminated with 0. The (a,*) machines
        // carry huge |f| but must not count toward the runoff.
        let model = scripted(vec![
            bias_only("a", "b", -9.0), // votes b
            bias_only("a", "c", -9.0), // votes c
            bias_only("b", "c", 0.1),  // votes b
            bias_only("b", "d", -0.2), // votes d
            bias_only("c", "d", 0.3),  // votes c
        ]);
        // votes: a=0, b=2, c=2, d=1; runoff over (b,c) only: both 0.1,
        // equal -> alphabetical -> b
        assert_eq!(model.predict(&sv(1, &[])).unwrap(), label("b"));
    }

    #[test]
    fn explicit_inventory_is_validated() {
        let x = vec![sv(1, &[(0, 0.0)]), sv(1, &[(0, 1.0)])];
        let y = vec![label("p"), label("q")];
        let err = ovo_fit(
            &x,
            &y,
            Some(vec![label("p")]),
            Kernel::Linear,
            &SmoParams::default(),
        )
        .unwrap_err();
        assert_eq!(err, SvmError::UnknownClass { label: "q".into() });
        let err = ovo_fit(
            &x,
            &y,
            Some(vec![label("p"), label("q"), label("r")]),
            Kernel::Linear,
            &SmoParams::default(),
        )
        .unwrap_err();
        assert_eq!(err, SvmError::EmptyClass { label: "r".into() });
        let err = ovo_fit(&x, &[label("p"), label("p")], None, Kernel::Linear, &SmoParams::default())
            .unwrap_err();
        assert_eq!(err, SvmError::TooFewClasses { got: 1 });
    }

    #[test]
    fn same_seed_reproduces_identical_multiclass_model() {
        let x: Vec<SparseVector> = (0..12)
            .map(|i| sv(2, &[(0, f64::from(i)), (1, f64::from(i % 4))]))
            .collect();
        let y: Vec<EmotionLabel> = (0..12)
            .map(|i| label(["u", "v", "w"][(i / 4) as usize]))
            .collect();
        let params = SmoParams { c: 5.0, seed: 11, ..SmoParams::default() };
        let kernel = Kernel::Rbf { gamma: 0.3 };
        let a = ovo_fit(&x, &y, None, kernel, &params).unwrap();
        let b = ovo_fit(&x, &y, None, kernel, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn serde_round_trip() {
        let x = vec![
            sv(1, &[(0, 0.0)]),
            sv(1, &[(0, 0.5)]),
            sv(1, &[(0, 5.0)]),
            sv(1, &[(0, 5.5)]),
        ];
        let y = vec![label("m"), label("m"), label("n"), label("n")];
        let model = ovo_fit(&x, &y, None, Kernel::Linear, &SmoParams::default()).unwrap();
        let back: MulticlassSvmModel =
            serde_json::from_str(&serde_json::to_string(&model).unwrap()).unwrap();
        assert_eq!(back, model);
        for xi in &x {
            assert_eq!(back.predict(xi).unwrap(), model.predict(xi).unwrap());
        }
    }
}
