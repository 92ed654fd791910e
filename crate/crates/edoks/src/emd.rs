//! Earth Mover's Distance between two signatures via the transportation
//! simplex.
//!
//! The solver starts from a northwest-corner basic solution and pivots with
//! Bland's rule, which rules out cycling even on degenerate bases. Unequal
//! total weights are handled by a zero-cost slack node, so the optimal flow
//! moves `min(total_x, total_y)` mass and the returned value is the
//! flow-weighted mean ground distance over the real cells.
//!
//! Arguments are canonicalized to a fixed order before solving, so the
//! returned value is exactly symmetric in its inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signature::Signature;

/// Pluggable ground distance between centroids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundDistance {
    /// Sum of absolute component differences (the default).
    #[default]
    L1,
    /// Euclidean distance.
    L2,
}

impl GroundDistance {
    pub fn eval(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch(u.len(), v.len()));
        }
        Ok(match self {
            GroundDistance::L1 => u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum(),
            GroundDistance::L2 => u
                .iter()
                .zip(v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
        })
    }
}

/// L1 ground distance between two equal-length vectors.
pub fn ground_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    GroundDistance::L1.eval(u, v)
}

/// Optimal flows between source clusters (rows) and sink clusters (columns).
#[derive(Debug, Clone)]
pub struct FlowMatrix {
    n: usize,
    m: usize,
    flows: Vec<f64>,
    total_flow: f64,
}

impl FlowMatrix {
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.flows[i * self.m + j]
    }

    pub fn total_flow(&self) -> f64 {
        self.total_flow
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.flows
    }
}

/// EMD value together with the flow that achieves it.
#[derive(Debug, Clone)]
pub struct EmdResult {
    pub value: f64,
    pub flow: FlowMatrix,
}

/// EMD under the default L1 ground distance.
pub fn emd(sx: &Signature, sy: &Signature) -> Result<EmdResult> {
    emd_with(sx, sy, GroundDistance::L1)
}

/// EMD under a chosen ground distance.
pub fn emd_with(sx: &Signature, sy: &Signature, ground: GroundDistance) -> Result<EmdResult> {
    let dim_x = sx.centroids()[0].len();
    let dim_y = sy.centroids()[0].len();
    if dim_x != dim_y {
        return Err(Error::LengthMismatch(dim_x, dim_y));
    }
    // Canonical argument order: solving the same underlying problem for both
    // (x, y) and (y, x) makes the value bitwise symmetric.
    if signature_order(sy, sx) == std::cmp::Ordering::Less {
        let swapped = solve_emd(sy, sx, ground)?;
        let mut flows = vec![0.0; swapped.flow.n * swapped.flow.m];
        let (n, m) = (swapped.flow.m, swapped.flow.n);
        for i in 0..swapped.flow.n {
            for j in 0..swapped.flow.m {
                flows[j * m + i] = swapped.flow.get(i, j);
            }
        }
        return Ok(EmdResult {
            value: swapped.value,
            flow: FlowMatrix {
                n,
                m,
                flows,
                total_flow: swapped.flow.total_flow,
            },
        });
    }
    solve_emd(sx, sy, ground)
}

fn signature_order(a: &Signature, b: &Signature) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    match a.k().cmp(&b.k()) {
        Ordering::Equal => {}
        o => return o,
    }
    for (wa, wb) in a.weights().iter().zip(b.weights()) {
        match wa.total_cmp(wb) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    for (ca, cb) in a.centroids().iter().zip(b.centroids()) {
        for (va, vb) in ca.iter().zip(cb) {
            match va.total_cmp(vb) {
                Ordering::Equal => {}
                o => return o,
            }
        }
    }
    Ordering::Equal
}

fn solve_emd(sx: &Signature, sy: &Signature, ground: GroundDistance) -> Result<EmdResult> {
    let n = sx.k();
    let m = sy.k();
    let mut cost = vec![0.0; n * m];
    for (i, cx) in sx.centroids().iter().enumerate() {
        for (j, cy) in sy.centroids().iter().enumerate() {
            cost[i * m + j] = ground.eval(cx, cy)?;
        }
    }

    let total_x = sx.total_weight();
    let total_y = sy.total_weight();
    let surplus = total_x - total_y;

    // balance with a zero-cost slack row or column
    let (n2, m2) = if surplus > SLACK_EPS {
        (n, m + 1)
    } else if surplus < -SLACK_EPS {
        (n + 1, m)
    } else {
        (n, m)
    };
    let mut supply: Vec<f64> = sx.weights().to_vec();
    let mut demand: Vec<f64> = sy.weights().to_vec();
    let mut cost2 = vec![0.0; n2 * m2];
    for i in 0..n {
        for j in 0..m {
            cost2[i * m2 + j] = cost[i * m + j];
        }
    }
    if m2 > m {
        demand.push(surplus);
    } else if n2 > n {
        supply.push(-surplus);
    }

    let flows2 = transport(&supply, &demand, &cost2, m2)?;

    let mut flows = vec![0.0; n * m];
    let mut work = 0.0;
    let mut moved = 0.0;
    for i in 0..n {
        for j in 0..m {
            let f = flows2[i * m2 + j];
            flows[i * m + j] = f;
            work += f * cost[i * m + j];
            moved += f;
        }
    }
    if moved <= 0.0 {
        return Err(Error::SolverFailure(
            "transportation produced zero total flow".into(),
        ));
    }
    Ok(EmdResult {
        value: work / moved,
        flow: FlowMatrix {
            n,
            m,
            flows,
            total_flow: moved,
        },
    })
}

const SLACK_EPS: f64 = 1e-12;

/// Transportation simplex on a balanced problem. Returns the optimal flow
/// matrix, flattened row-major.
fn transport(supply: &[f64], demand: &[f64], cost: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = supply.len();
    debug_assert_eq!(demand.len(), m);
    debug_assert_eq!(cost.len(), n * m);

    if supply
        .iter()
        .chain(demand)
        .any(|w| !w.is_finite() || *w < 0.0)
    {
        return Err(Error::InvalidParameter(
            "transportation weights must be nonnegative and finite".into(),
        ));
    }

    // northwest-corner initial basis: exactly n + m - 1 cells forming a
    // spanning tree of the bipartite row/column graph
    let mut basis: Vec<(usize, usize, f64)> = Vec::with_capacity(n + m - 1);
    {
        let mut rem_s = supply.to_vec();
        let mut rem_d = demand.to_vec();
        let (mut i, mut j) = (0usize, 0usize);
        loop {
            let f = rem_s[i].min(rem_d[j]);
            basis.push((i, j, f));
            rem_s[i] -= f;
            rem_d[j] -= f;
            if i == n - 1 && j == m - 1 {
                break;
            }
            if rem_s[i] <= 0.0 && i < n - 1 {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let cmax = cost.iter().copied().fold(0.0f64, f64::max);
    let tol = 1e-12 * (1.0 + cmax);
    let max_pivots = 1000 + 100 * (n + m) * (n + m);

    let mut in_basis = vec![false; n * m];
    for &(i, j, _) in &basis {
        in_basis[i * m + j] = true;
    }

    for _pivot in 0..max_pivots {
        // duals from the basis tree: u[i] + v[j] = c[i][j] on basic cells
        let mut u = vec![f64::NAN; n];
        let mut v = vec![f64::NAN; m];
        let mut row_cells: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut col_cells: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (b, &(i, j, _)) in basis.iter().enumerate() {
            row_cells[i].push(b);
            col_cells[j].push(b);
        }
        u[0] = 0.0;
        let mut queue: Vec<(bool, usize)> = vec![(true, 0)];
        while let Some((is_row, idx)) = queue.pop() {
            let cells = if is_row {
                &row_cells[idx]
            } else {
                &col_cells[idx]
            };
            for &b in cells {
                let (i, j, _) = basis[b];
                if is_row && v[j].is_nan() {
                    v[j] = cost[i * m + j] - u[i];
                    queue.push((false, j));
                } else if !is_row && u[i].is_nan() {
                    u[i] = cost[i * m + j] - v[j];
                    queue.push((true, i));
                }
            }
        }
        if u.iter().any(|x| x.is_nan()) || v.iter().any(|x| x.is_nan()) {
            return Err(Error::SolverFailure(
                "basis does not span the transportation graph".into(),
            ));
        }

        // Bland's rule: first cell in row-major order with negative reduced cost
        let mut entering = None;
        'scan: for i in 0..n {
            for j in 0..m {
                if in_basis[i * m + j] {
                    continue;
                }
                if cost[i * m + j] - u[i] - v[j] < -tol {
                    entering = Some((i, j));
                    break 'scan;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            break; // optimal
        };

        // unique path from row ei to column ej through the basis tree
        let path = tree_path(&basis, &row_cells, &col_cells, n, ei, ej)
            .ok_or_else(|| Error::SolverFailure("no cycle found for entering variable".into()))?;

        // entering takes +theta; path cells alternate -,+,-,... from the row end
        let mut theta = f64::INFINITY;
        let mut leaving: Option<usize> = None;
        for (t, &b) in path.iter().enumerate() {
            if t % 2 == 0 {
                let (bi, bj, f) = basis[b];
                let better = f < theta - 1e-15
                    || ((f - theta).abs() <= 1e-15
                        && leaving.is_some_and(|l| {
                            let (li, lj, _) = basis[l];
                            (bi, bj) < (li, lj)
                        }));
                if leaving.is_none() || better {
                    theta = f;
                    leaving = Some(b);
                }
            }
        }
        let leaving = leaving.ok_or_else(|| {
            Error::SolverFailure("degenerate cycle without leaving variable".into())
        })?;

        for (t, &b) in path.iter().enumerate() {
            if t % 2 == 0 {
                basis[b].2 = (basis[b].2 - theta).max(0.0);
            } else {
                basis[b].2 += theta;
            }
        }
        let (li, lj, _) = basis[leaving];
        in_basis[li * m + lj] = false;
        in_basis[ei * m + ej] = true;
        basis[leaving] = (ei, ej, theta);
    }

    // verify optimality was reached rather than the pivot cap
    {
        let mut u = vec![f64::NAN; n];
        let mut v = vec![f64::NAN; m];
        let mut row_cells: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut col_cells: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (b, &(i, j, _)) in basis.iter().enumerate() {
            row_cells[i].push(b);
            col_cells[j].push(b);
        }
        u[0] = 0.0;
        let mut queue: Vec<(bool, usize)> = vec![(true, 0)];
        while let Some((is_row, idx)) = queue.pop() {
            let cells = if is_row {
                &row_cells[idx]
            } else {
                &col_cells[idx]
            };
            for &b in cells {
                let (i, j, _) = basis[b];
                if is_row && v[j].is_nan() {
                    v[j] = cost[i * m + j] - u[i];
                    queue.push((false, j));
                } else if !is_row && u[i].is_nan() {
                    u[i] = cost[i * m + j] - v[j];
                    queue.push((true, i));
                }
            }
        }
        for i in 0..n {
            for j in 0..m {
                if !in_basis[i * m + j] && cost[i * m + j] - u[i] - v[j] < -tol {
                    return Err(Error::SolverFailure(format!(
                        "pivot limit reached with non-optimal basis ({n}x{m} problem)"
                    )));
                }
            }
        }
    }

    let mut flows = vec![0.0; n * m];
    for &(i, j, f) in &basis {
        flows[i * m + j] = f.max(0.0);
    }
    Ok(flows)
}

/// Path of basis-cell indices from row `start_row` to column `end_col`
/// through the spanning tree; edges alternate row/column endpoints.
fn tree_path(
    basis: &[(usize, usize, f64)],
    row_cells: &[Vec<usize>],
    col_cells: &[Vec<usize>],
    n: usize,
    start_row: usize,
    end_col: usize,
) -> Option<Vec<usize>> {
    // nodes: 0..n rows, n..n+m cols; BFS remembering the cell used to arrive
    let m = col_cells.len();
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + m]; // (prev node, cell)
    let mut seen = vec![false; n + m];
    let start = start_row;
    let goal = n + end_col;
    seen[start] = true;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        let (is_row, idx) = if node < n {
            (true, node)
        } else {
            (false, node - n)
        };
        let cells = if is_row {
            &row_cells[idx]
        } else {
            &col_cells[idx]
        };
        for &b in cells {
            let (i, j, _) = basis[b];
            let next = if is_row { n + j } else { i };
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, b));
                queue.push_back(next);
            }
        }
    }
    if !seen[goal] {
        return None;
    }
    let mut path = Vec::new();
    let mut node = goal;
    while node != start {
        let (prev, cell) = parent[node]?;
        path.push(cell);
        node = prev;
    }
    path.reverse();
    Some(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(centroids: Vec<Vec<f64>>, weights: Vec<f64>) -> Signature {
        Signature::new(centroids, weights).unwrap()
    }

    #[test]
    fn ground_distance_basics() {
        assert_eq!(ground_distance(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        let mut e1 = vec![0.0; 24];
        let mut e2 = vec![0.0; 24];
        e1[0] = 1.0;
        e2[1] = 1.0;
        assert_eq!(ground_distance(&e1, &e2).unwrap(), 2.0);
        assert!(ground_distance(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ground_distance_matches_componentwise_sum() {
        let u: [f64; 5] = [0.12, 0.48, 0.03, 0.91, 0.22];
        let v: [f64; 5] = [0.77, 0.1, 0.44, 0.2, 0.35];
        let mut expect = 0.0;
        for k in 0..5 {
            expect += (u[k] - v[k]).abs();
        }
        assert!((ground_distance(&u, &v).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn identical_signatures_have_zero_distance() {
        let s = sig(
            vec![vec![0.2, 0.8], vec![0.9, 0.1], vec![0.4, 0.6]],
            vec![0.5, 0.3, 0.2],
        );
        let r = emd(&s, &s).unwrap();
        assert!(r.value < 1e-12);
        assert!((r.flow.total_flow() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_cluster_pair_is_ground_distance() {
        let a = sig(vec![vec![0.1, 0.9, 0.3]], vec![1.0]);
        let b = sig(vec![vec![0.4, 0.2, 0.6]], vec![1.0]);
        let d = ground_distance(&a.centroids()[0], &b.centroids()[0]).unwrap();
        let r = emd(&a, &b).unwrap();
        assert!((r.value - d).abs() < 1e-12);
        assert!((r.flow.get(0, 0) - 1.0).abs() < 1e-12);
    }

    // Optimum confirmed by exhaustive enumeration of the transportation
    // polytope vertices before this module was written.
    #[test]
    fn two_by_two_hand_case() {
        let a = sig(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.6, 0.4]);
        let b = sig(vec![vec![0.0, 1.0], vec![1.0, 1.0]], vec![0.5, 0.5]);
        let r = emd(&a, &b).unwrap();
        assert!((r.value - 1.1).abs() < 1e-9, "got {}", r.value);
    }

    // Values frozen from the same enumeration oracle.
    #[test]
    fn frozen_random_instances() {
        let a = sig(
            vec![
                vec![0.025, 0.275, 0.223, 0.736],
                vec![0.677, 0.892, 0.087, 0.422],
                vec![0.03, 0.219, 0.505, 0.027],
            ],
            vec![0.5556, 0.3333, 0.1111],
        );
        let b = sig(vec![vec![0.199, 0.65, 0.545, 0.22]], vec![1.0]);
        assert!((emd(&a, &b).unwrap().value - 1.3231175).abs() < 1e-7);

        let a = sig(
            vec![
                vec![0.34, 0.155, 0.957, 0.337],
                vec![0.093, 0.097, 0.847, 0.604],
                vec![0.807, 0.73, 0.536, 0.973],
            ],
            vec![0.3333, 0.5, 0.1667],
        );
        let b = sig(
            vec![
                vec![0.379, 0.552, 0.829, 0.619],
                vec![0.862, 0.577, 0.705, 0.046],
            ],
            vec![0.6667, 0.3333],
        );
        assert!((emd(&a, &b).unwrap().value - 0.9931392).abs() < 1e-7);

        let a = sig(
            vec![
                vec![0.453, 0.834, 0.163, 0.355],
                vec![0.67, 0.702, 0.684, 0.071],
            ],
            vec![0.75, 0.25],
        );
        let b = sig(
            vec![
                vec![0.635, 0.534, 0.245, 0.462],
                vec![0.27, 0.925, 0.688, 0.22],
            ],
            vec![0.6667, 0.3333],
        );
        assert!((emd(&a, &b).unwrap().value - 0.7191579).abs() < 1e-7);
    }

    #[test]
    fn unbalanced_partial_matching() {
        // total 1.0 vs 0.3: only 0.3 mass moves, both sources equally far
        let a = sig(vec![vec![0.0], vec![2.0]], vec![0.5, 0.5]);
        let b = sig(vec![vec![1.0]], vec![0.3]);
        let r = emd(&a, &b).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!((r.flow.total_flow() - 0.3).abs() < 1e-9);
    }

    #[test]
    fn symmetry_is_exact() {
        let a = sig(
            vec![vec![0.11, 0.52, 0.37], vec![0.71, 0.02, 0.27]],
            vec![0.35, 0.65],
        );
        let b = sig(
            vec![
                vec![0.4, 0.3, 0.3],
                vec![0.05, 0.85, 0.1],
                vec![0.6, 0.2, 0.2],
            ],
            vec![0.2, 0.5, 0.3],
        );
        let ab = emd(&a, &b).unwrap();
        let ba = emd(&b, &a).unwrap();
        assert_eq!(ab.value, ba.value);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(ab.flow.get(i, j), ba.flow.get(j, i));
            }
        }
    }

    #[test]
    fn flow_satisfies_marginals_and_recomputes_value() {
        let a = sig(
            vec![vec![0.9, 0.05, 0.05], vec![0.1, 0.8, 0.1]],
            vec![0.7, 0.3],
        );
        let b = sig(
            vec![vec![0.3, 0.3, 0.4], vec![0.25, 0.25, 0.5]],
            vec![0.45, 0.55],
        );
        let r = emd(&a, &b).unwrap();
        for i in 0..2 {
            let row: f64 = (0..2).map(|j| r.flow.get(i, j)).sum();
            assert!(row <= a.weights()[i] + 1e-9);
        }
        for j in 0..2 {
            let col: f64 = (0..2).map(|i| r.flow.get(i, j)).sum();
            assert!(col <= b.weights()[j] + 1e-9);
        }
        assert!((r.flow.total_flow() - 1.0).abs() < 1e-9);

        let mut work = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                work += r.flow.get(i, j)
                    * ground_distance(&a.centroids()[i], &b.centroids()[j]).unwrap();
            }
        }
        assert!((work / r.flow.total_flow() - r.value).abs() < 1e-9);
    }

    #[test]
    fn mismatched_centroid_dims_rejected() {
        let a = sig(vec![vec![0.1, 0.9]], vec![1.0]);
        let b = sig(vec![vec![0.1, 0.4, 0.5]], vec![1.0]);
        assert!(emd(&a, &b).is_err());
    }

    #[test]
    fn l2_ground_distance_option() {
        let a = sig(vec![vec![0.0, 0.0]], vec![1.0]);
        let b = sig(vec![vec![3.0, 4.0]], vec![1.0]);
        let r = emd_with(&a, &b, GroundDistance::L2).unwrap();
        assert!((r.value - 5.0).abs() < 1e-12);
    }
}
