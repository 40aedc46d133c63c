//! Bagged CART regression trees used as the BO surrogate.

use rand::Rng;

#[derive(Clone, Debug)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Clone, Debug)]
pub struct RegressionTree {
    root: Node,
}

fn mean(ys: &[f64]) -> f64 {
    ys.iter().sum::<f64>() / ys.len() as f64
}

impl RegressionTree {
    /// Greedy variance-reduction splits on midpoints of distinct values.
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], max_depth: usize) -> Self {
        let idx: Vec<usize> = (0..ys.len()).collect();
        Self {
            root: Self::grow(xs, ys, idx, max_depth),
        }
    }

    fn grow(xs: &[Vec<f64>], ys: &[f64], idx: Vec<usize>, depth: usize) -> Node {
        let vals: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
        let leaf = Node::Leaf(mean(&vals));
        if depth == 0 || idx.len() < 2 || vals.iter().all(|&v| v == vals[0]) {
            return leaf;
        }
        let total: f64 = vals.iter().sum();
        let n = idx.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..xs[idx[0]].len() {
            let mut order = idx.clone();
            order.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]));
            let mut left_sum = 0.0;
            for k in 0..order.len() - 1 {
                left_sum += ys[order[k]];
                let (lo, hi) = (xs[order[k]][f], xs[order[k + 1]][f]);
                if lo == hi {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = n - nl;
                let right_sum = total - left_sum;
                // Maximizing this is minimizing the children's summed squared error.
                let score = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, f, 0.5 * (lo + hi)));
                }
            }
        }
        let Some((score, feature, threshold)) = best else {
            return leaf;
        };
        if score <= total * total / n {
            return leaf;
        }
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| xs[i][feature] <= threshold);
        Node::Split {
            feature,
            threshold,
            left: Box::new(Self::grow(xs, ys, l, depth - 1)),
            right: Box::new(Self::grow(xs, ys, r, depth - 1)),
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    /// Each tree sees a bootstrap resample of the data.
    pub fn fit<R: Rng + ?Sized>(xs: &[Vec<f64>], ys: &[f64], trees: usize, max_depth: usize, rng: &mut R) -> Self {
        let n = ys.len();
        let trees = (0..trees)
            .map(|_| {
                let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let bx: Vec<Vec<f64>> = pick.iter().map(|&i| xs[i].clone()).collect();
                let by: Vec<f64> = pick.iter().map(|&i| ys[i]).collect();
                RegressionTree::fit(&bx, &by, max_depth)
            })
            .collect();
        Self { trees }
    }

    /// Mean and standard deviation of the per-tree predictions.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let p: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let m = mean(&p);
        let var = p.iter().map(|v| (v - m).powi(2)).sum::<f64>() / p.len() as f64;
        (m, var.sqrt())
    }
}
