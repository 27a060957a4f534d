#![allow(dead_code)]

use std::collections::HashSet;

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gaugenet::graph::GaugeGraph;
use gaugenet::removal::GaugeStatus;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ids(p: usize) -> Vec<String> {
    (0..p).map(|i| format!("G{i:02}")).collect()
}

/// Sample covariance of `m` standard normal-ish draws plus a small ridge.
pub fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> Array2<f64> {
    let m = p + 5 + rng.random_range(0..20);
    let x = Array2::from_shape_fn((m, p), |_| rng.random::<f64>() * 2.0 - 1.0);
    let mut s = x.t().dot(&x) / m as f64;
    for i in 0..p {
        s[[i, i]] += 0.05;
    }
    s
}

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

pub fn na_inverse(a: &Array2<f64>) -> Array2<f64> {
    from_na(&to_na(a).try_inverse().expect("invertible"))
}

pub fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn edge_set(g: &GaugeGraph) -> HashSet<(usize, usize)> {
    g.edges().collect()
}

pub fn f1(found: &HashSet<(usize, usize)>, truth: &HashSet<(usize, usize)>) -> f64 {
    let tp = found.intersection(truth).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / found.len() as f64;
    let recall = tp / truth.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// O(n²) dominance check. A point survives when nothing dominates it and
/// no earlier point has the identical pair. Result ordered by edges.
pub fn brute_force_front(points: &[(usize, f64)]) -> Vec<usize> {
    let mut keep = Vec::new();
    for (i, &(ei, xi)) in points.iter().enumerate() {
        let dominated = points
            .iter()
            .any(|&(ej, xj)| ej <= ei && xj <= xi && (ej < ei || xj < xi));
        let duplicate = points[..i].iter().any(|&(ej, xj)| ej == ei && xj == xi);
        if !dominated && !duplicate {
            keep.push(i);
        }
    }
    keep.sort_by_key(|&i| points[i].0);
    keep
}

/// Step-by-step removal trace on an adjacency matrix: pick the unlocked,
/// non-isolated, not yet removed gauge with the largest NSE (lowest index
/// on ties), remove it and lock its neighbours.
pub fn rg_trace(adj: &[Vec<bool>], nse: &[f64]) -> (Vec<(usize, Vec<usize>)>, Vec<GaugeStatus>) {
    let p = adj.len();
    let mut removed = vec![false; p];
    let mut locked = vec![false; p];
    let isolated: Vec<bool> = adj.iter().map(|row| !row.iter().any(|&b| b)).collect();
    let mut queue = Vec::new();
    loop {
        let mut pick: Option<usize> = None;
        for j in 0..p {
            if removed[j] || locked[j] || isolated[j] {
                continue;
            }
            pick = match pick {
                Some(b) if nse[b] >= nse[j] => Some(b),
                _ => Some(j),
            };
        }
        let Some(r) = pick else { break };
        removed[r] = true;
        let donors: Vec<usize> = (0..p).filter(|&k| adj[r][k]).collect();
        for &d in &donors {
            locked[d] = true;
        }
        queue.push((r, donors));
    }
    let status = (0..p)
        .map(|j| {
            if removed[j] {
                GaugeStatus::Removed
            } else if isolated[j] {
                GaugeStatus::Isolated
            } else {
                assert!(locked[j], "trace left gauge {j} undecided");
                GaugeStatus::NeighborOfRemoved
            }
        })
        .collect();
    (queue, status)
}

fn edge_index(p: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            e.push((i, j));
        }
    }
    e
}

fn permutations(p: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..p).collect();
    fn rec(k: usize, perm: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == perm.len() {
            out.push(perm.clone());
            return;
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            rec(k + 1, perm, out);
            perm.swap(k, i);
        }
    }
    rec(0, &mut perm, &mut out);
    out
}

/// One representative edge list per isomorphism class of connected
/// graphs on `p` vertices.
pub fn connected_graphs(p: usize) -> Vec<Vec<(usize, usize)>> {
    let edges = edge_index(p);
    let m = edges.len();
    let pos = |i: usize, j: usize| {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        edges.iter().position(|&e| e == (a, b)).unwrap()
    };
    let maps: Vec<Vec<u32>> = permutations(p)
        .iter()
        .map(|pi| edges.iter().map(|&(i, j)| 1u32 << pos(pi[i], pi[j])).collect())
        .collect();
    let canon = |mask: u32| {
        maps.iter()
            .map(|map| {
                let mut out = 0u32;
                let mut bits = mask;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    out |= map[b];
                    bits &= bits - 1;
                }
                out
            })
            .min()
            .unwrap()
    };
    let mut all: HashSet<u32> = HashSet::new();
    let mut level: HashSet<u32> = [0u32].into_iter().collect();
    all.insert(0);
    for _ in 0..m {
        let mut next = HashSet::new();
        for &g in &level {
            for b in 0..m {
                if g & (1 << b) == 0 {
                    let c = canon(g | (1 << b));
                    if all.insert(c) {
                        next.insert(c);
                    }
                }
            }
        }
        level = next;
    }
    let mut out: Vec<Vec<(usize, usize)>> = all
        .into_iter()
        .map(|mask| (0..m).filter(|b| mask & (1 << b) != 0).map(|b| edges[b]).collect::<Vec<_>>())
        .filter(|el| is_connected(p, el))
        .collect();
    out.sort();
    out
}

pub fn is_connected(p: usize, edges: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; p];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(i, j) in edges {
            let w = if i == v {
                j
            } else if j == v {
                i
            } else {
                continue;
            };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

pub fn adjacency(p: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; p]; p];
    for &(i, j) in edges {
        a[i][j] = true;
        a[j][i] = true;
    }
    a
}
