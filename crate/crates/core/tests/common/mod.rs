//! Reference implementations shared by the integration tests. None of these
//! call into the library's hierarchy or optimizer code.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};

use num::rational::BigRational;
use num::{FromPrimitive, One};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random tree as `(parent, child)` edges with scrambled ids and edge order.
///
/// Depth at most `max_depth`, at most `max_leaves` leaves, at least one edge.
pub fn random_tree<R: Rng>(rng: &mut R, max_depth: usize, max_leaves: usize) -> Vec<(u32, u32)> {
    let expand_p = rng.random_range(0.3..0.95);
    let mut depth = vec![0usize];
    let mut local_edges = Vec::new();
    let mut queue = VecDeque::from([0usize]);
    let mut leaves = 1usize;
    while let Some(n) = queue.pop_front() {
        if depth[n] >= max_depth || (n != 0 && !rng.random_bool(expand_p)) {
            continue;
        }
        let room = max_leaves + 1 - leaves;
        let k = rng.random_range(1..=4).min(room);
        leaves += k - 1;
        for _ in 0..k {
            let c = depth.len();
            depth.push(depth[n] + 1);
            local_edges.push((n, c));
            queue.push_back(c);
        }
    }
    let mut ids: Vec<u32> = (0..(3 * depth.len()) as u32).collect();
    ids.shuffle(rng);
    let mut edges: Vec<(u32, u32)> = local_edges.iter().map(|&(p, c)| (ids[p], ids[c])).collect();
    edges.shuffle(rng);
    edges
}

/// Children lists in order of first appearance in `edges`.
pub fn children_of(edges: &[(u32, u32)]) -> BTreeMap<u32, Vec<u32>> {
    let mut out: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(p, c) in edges {
        out.entry(p).or_default().push(c);
    }
    out
}

pub fn root_of(edges: &[(u32, u32)]) -> u32 {
    let parent: HashMap<u32, u32> = edges.iter().map(|&(p, c)| (c, p)).collect();
    let mut n = edges[0].0;
    while let Some(&p) = parent.get(&n) {
        n = p;
    }
    n
}

/// Every leaf with the non-root nodes on its root-to-leaf path.
pub fn leaf_paths(edges: &[(u32, u32)]) -> Vec<(u32, Vec<u32>)> {
    let children = children_of(edges);
    let mut out = Vec::new();
    let mut stack = vec![(root_of(edges), Vec::new())];
    while let Some((n, path)) = stack.pop() {
        match children.get(&n) {
            None => out.push((n, path)),
            Some(cs) => {
                for &c in cs {
                    let mut p = path.clone();
                    p.push(c);
                    stack.push((c, p));
                }
            }
        }
    }
    out
}

/// Leaves ranked by exact path-probability product, best first, ties to the
/// smaller id.
pub fn exact_path_ranking(edges: &[(u32, u32)], prob: &HashMap<u32, f64>) -> Vec<(u32, BigRational)> {
    let mut scored: Vec<(u32, BigRational)> = leaf_paths(edges)
        .into_iter()
        .map(|(leaf, path)| {
            let mut product = BigRational::one();
            for n in path {
                product *= BigRational::from_f64(prob[&n]).expect("finite probability");
            }
            (leaf, product)
        })
        .collect();
    scored.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
}

/// Greedy descent picking the most probable child, first child on ties.
pub fn greedy_replay(edges: &[(u32, u32)], prob: &HashMap<u32, f64>) -> u32 {
    let children = children_of(edges);
    let mut n = root_of(edges);
    while let Some(cs) = children.get(&n) {
        let mut best = cs[0];
        for &c in &cs[1..] {
            if prob[&c] > prob[&best] {
                best = c;
            }
        }
        n = best;
    }
    n
}

/// Edge count of the shortest path between `a` and `b`, by breadth-first search.
pub fn bfs_distance(edges: &[(u32, u32)], a: u32, b: u32) -> usize {
    let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(p, c) in edges {
        adj.entry(p).or_default().push(c);
        adj.entry(c).or_default().push(p);
    }
    let mut dist = HashMap::from([(a, 0usize)]);
    let mut queue = VecDeque::from([a]);
    while let Some(n) = queue.pop_front() {
        if n == b {
            return dist[&n];
        }
        for &m in &adj[&n] {
            if !dist.contains_key(&m) {
                dist.insert(m, dist[&n] + 1);
                queue.push_back(m);
            }
        }
    }
    panic!("{a} and {b} are not connected");
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigma(t: f64) -> f64 {
    0.5 * (1.0 + (0.5 * t).tanh())
}

/// `½‖w‖² + C Σ log(1 + exp(-y (w·x + b)))` over dense rows; `theta = [w, b]`.
pub fn dense_objective(x: &[Vec<f64>], y: &[f64], c: f64, theta: &[f64]) -> f64 {
    let d = theta.len() - 1;
    let reg: f64 = theta[..d].iter().map(|w| 0.5 * w * w).sum();
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let z: f64 = row.iter().zip(theta).map(|(a, w)| a * w).sum::<f64>() + theta[d];
            softplus(-yi * z)
        })
        .sum();
    reg + c * loss
}

fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut out = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * out[k]).sum();
        out[row] = (rhs[row] - s) / a[row][row];
    }
    out
}

/// Full-Hessian damped Newton on [`dense_objective`]. Returns the minimizer.
pub fn reference_minimize(x: &[Vec<f64>], y: &[f64], c: f64) -> Vec<f64> {
    let d = x[0].len();
    let mut theta = vec![0.0; d + 1];
    for _ in 0..500 {
        let mut grad = theta.clone();
        grad[d] = 0.0;
        let mut hess = vec![vec![0.0; d + 1]; d + 1];
        for i in 0..d {
            hess[i][i] = 1.0;
        }
        for (row, &yi) in x.iter().zip(y) {
            let mut xt = row.clone();
            xt.push(1.0);
            let z: f64 = xt.iter().zip(&theta).map(|(a, w)| a * w).sum();
            let g = -yi * sigma(-yi * z);
            let h = sigma(z) * sigma(-z);
            for i in 0..=d {
                grad[i] += c * g * xt[i];
                for j in 0..=d {
                    hess[i][j] += c * h * xt[i] * xt[j];
                }
            }
        }
        if grad.iter().all(|g| g.abs() < 1e-12) {
            break;
        }
        let step = solve(hess, grad.iter().map(|g| -g).collect());
        let f0 = dense_objective(x, y, c, &theta);
        let slope: f64 = step.iter().zip(&grad).map(|(s, g)| s * g).sum();
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(w, s)| w + t * s).collect();
            if dense_objective(x, y, c, &cand) <= f0 + 1e-4 * t * slope || t < 1e-12 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
        if t < 1e-12 {
            break;
        }
    }
    theta
}
