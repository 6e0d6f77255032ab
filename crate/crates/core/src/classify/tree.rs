//! Binary CART trees with Gini impurity, grown best-first.
//!
//! Split search walks presorted columns, so one [`TreeGrower`] can grow many
//! trees over the same matrix (boosting rounds, bags) with different sample
//! weights. Samples with zero weight are ignored entirely.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::ArrayView2;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeOptions {
    /// Upper bound on internal (split) nodes.
    pub max_splits: usize,
    /// Features drawn at random for every split; `None` searches all of them.
    pub max_features: Option<usize>,
}

impl TreeOptions {
    pub fn with_splits(max_splits: usize) -> Self {
        Self {
            max_splits,
            max_features: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        /// Weighted fraction of class 1 among the training samples reaching the leaf.
        defect_fraction: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_features: usize,
}

impl DecisionTree {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.len() - self.n_splits()
    }

    /// Leaf defect fraction minus one half.
    pub fn score(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { defect_fraction } => return defect_fraction - 0.5,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.score(x) > 0.0)
    }
}

/// Presorted view of a feature matrix.
pub struct TreeGrower<'a> {
    x: ArrayView2<'a, f64>,
    /// Per feature: sample indices in ascending value order.
    order: Vec<Vec<u32>>,
    /// Per feature: the values in the same order.
    sorted: Vec<Vec<f64>>,
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Pending {
    gain: f64,
    node: usize,
    feature: usize,
    threshold: f64,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Largest gain first; among equal gains the older node.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.node.cmp(&self.node))
    }
}

fn gini(w0: f64, w1: f64) -> f64 {
    let w = w0 + w1;
    if w <= 0.0 {
        0.0
    } else {
        w - (w0 * w0 + w1 * w1) / w
    }
}

impl<'a> TreeGrower<'a> {
    pub fn new(x: ArrayView2<'a, f64>) -> Self {
        let n = x.nrows();
        let mut order = Vec::with_capacity(x.ncols());
        let mut sorted = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            sorted.push(idx.iter().map(|&i| col[i as usize]).collect());
            order.push(idx);
        }
        Self { x, order, sorted }
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Grows one tree. `weights` must be non-negative; zero-weight samples are
    /// left out. The RNG is only consulted when `max_features` is set.
    pub fn grow<R: Rng>(
        &self,
        labels: &[u8],
        weights: &[f64],
        opts: TreeOptions,
        rng: &mut R,
    ) -> DecisionTree {
        let n = self.n_samples();
        debug_assert_eq!(labels.len(), n);
        debug_assert_eq!(weights.len(), n);
        let mut node_of: Vec<u32> = weights
            .iter()
            .map(|&w| if w > 0.0 { 0 } else { NONE })
            .collect();
        let mut totals = vec![[0.0f64; 2]];
        for i in 0..n {
            if node_of[i] != NONE {
                totals[0][labels[i] as usize] += weights[i];
            }
        }
        let mut nodes = vec![Node::Leaf {
            defect_fraction: fraction(totals[0]),
        }];
        let mut heap = BinaryHeap::new();
        let mut splits = 0;

        let subsample = opts
            .max_features
            .filter(|&m| m < self.n_features())
            .map(|m| m.max(1));
        let queue = |heap: &mut BinaryHeap<Pending>,
                         node_ids: &[usize],
                         totals: &[[f64; 2]],
                         node_of: &[u32],
                         rng: &mut R| {
            let impure: Vec<usize> = node_ids
                .iter()
                .copied()
                .filter(|&id| totals[id][0] > 0.0 && totals[id][1] > 0.0)
                .collect();
            if impure.is_empty() {
                return;
            }
            match subsample {
                None => {
                    let features: Vec<usize> = (0..self.n_features()).collect();
                    let best = self.best_splits(&impure, &features, totals, node_of, labels, weights);
                    for (id, cand) in impure.iter().zip(best) {
                        if let Some(c) = cand {
                            heap.push(Pending {
                                gain: c.gain,
                                node: *id,
                                feature: c.feature,
                                threshold: c.threshold,
                            });
                        }
                    }
                }
                Some(m) => {
                    for &id in &impure {
                        let mut features = index::sample(rng, self.n_features(), m).into_vec();
                        features.sort_unstable();
                        let best = self.best_splits(&[id], &features, totals, node_of, labels, weights);
                        if let Some(c) = best[0] {
                            heap.push(Pending {
                                gain: c.gain,
                                node: id,
                                feature: c.feature,
                                threshold: c.threshold,
                            });
                        }
                    }
                }
            }
        };

        queue(&mut heap, &[0], &totals, &node_of, rng);
        while splits < opts.max_splits {
            let Some(p) = heap.pop() else { break };
            let (left, right) = (nodes.len(), nodes.len() + 1);
            totals.push([0.0; 2]);
            totals.push([0.0; 2]);
            let col = self.x.column(p.feature);
            for i in 0..n {
                if node_of[i] as usize == p.node && node_of[i] != NONE {
                    let child = if col[i] <= p.threshold { left } else { right };
                    node_of[i] = child as u32;
                    totals[child][labels[i] as usize] += weights[i];
                }
            }
            nodes[p.node] = Node::Split {
                feature: p.feature,
                threshold: p.threshold,
                left,
                right,
            };
            nodes.push(Node::Leaf {
                defect_fraction: fraction(totals[left]),
            });
            nodes.push(Node::Leaf {
                defect_fraction: fraction(totals[right]),
            });
            splits += 1;
            queue(&mut heap, &[left, right], &totals, &node_of, rng);
        }
        DecisionTree {
            nodes,
            n_features: self.n_features(),
        }
    }

    /// Best split per target node over the given features, in one pass per
    /// feature. Zero-gain splits are admissible so that XOR-like structure can
    /// still be carved up.
    fn best_splits(
        &self,
        targets: &[usize],
        features: &[usize],
        totals: &[[f64; 2]],
        node_of: &[u32],
        labels: &[u8],
        weights: &[f64],
    ) -> Vec<Option<Candidate>> {
        let k = targets.len();
        let mut best: Vec<Option<Candidate>> = vec![None; k];
        let parent: Vec<f64> = targets.iter().map(|&t| gini(totals[t][0], totals[t][1])).collect();
        let slot = |nd: u32| targets.iter().position(|&t| t as u32 == nd);
        let mut left = vec![[0.0f64; 2]; k];
        let mut prev: Vec<Option<f64>> = vec![None; k];
        for &f in features {
            left.iter_mut().for_each(|l| *l = [0.0; 2]);
            prev.iter_mut().for_each(|p| *p = None);
            for (&i, &v) in self.order[f].iter().zip(&self.sorted[f]) {
                let nd = node_of[i as usize];
                if nd == NONE {
                    continue;
                }
                let Some(s) = slot(nd) else { continue };
                if let Some(pv) = prev[s] {
                    if v > pv {
                        let t = totals[targets[s]];
                        let l = left[s];
                        let gain = parent[s] - gini(l[0], l[1]) - gini(t[0] - l[0], t[1] - l[1]);
                        if best[s].is_none_or(|b| gain > b.gain) {
                            let mut threshold = pv + (v - pv) / 2.0;
                            if threshold >= v {
                                threshold = pv;
                            }
                            best[s] = Some(Candidate {
                                gain,
                                feature: f,
                                threshold,
                            });
                        }
                    }
                }
                left[s][labels[i as usize] as usize] += weights[i as usize];
                prev[s] = Some(v);
            }
        }
        best
    }
}

fn fraction(t: [f64; 2]) -> f64 {
    let w = t[0] + t[1];
    if w > 0.0 {
        t[1] / w
    } else {
        0.0
    }
}

/// Unweighted tree over a whole matrix.
pub fn fit_tree(x: ArrayView2<'_, f64>, labels: &[u8], opts: TreeOptions, seed: u64) -> DecisionTree {
    use rand::SeedableRng;
    let grower = TreeGrower::new(x);
    let weights = vec![1.0; labels.len()];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    grower.grow(labels, &weights, opts, &mut rng)
}
