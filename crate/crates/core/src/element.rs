//! Isoparametric quadrilateral elements: shape functions, natural-coordinate
//! derivatives, Gauss rules and Gauss-to-node extrapolation.
//!
//! Local node numbering is counter-clockwise starting at (-1, -1). Serendipity
//! elements append the mid-side nodes of the bottom, right, top and left edges.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Polynomial order of the quadrilateral element family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ElementOrder {
    /// 4-node bilinear (Q4).
    #[default]
    Linear,
    /// 8-node quadratic serendipity (Q8).
    Serendipity,
}

const Q4_NODES: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
const Q8_NODES: [[f64; 2]; 8] = [
    [-1.0, -1.0],
    [1.0, -1.0],
    [1.0, 1.0],
    [-1.0, 1.0],
    [0.0, -1.0],
    [1.0, 0.0],
    [0.0, 1.0],
    [-1.0, 0.0],
];

impl ElementOrder {
    pub fn nodes_per_cell(self) -> usize {
        match self {
            ElementOrder::Linear => 4,
            ElementOrder::Serendipity => 8,
        }
    }

    /// Natural coordinates of the local nodes.
    pub fn reference_nodes(self) -> &'static [[f64; 2]] {
        match self {
            ElementOrder::Linear => &Q4_NODES,
            ElementOrder::Serendipity => &Q8_NODES,
        }
    }

    /// Points per axis of the tensor Gauss rule (2×2 for Q4, 3×3 for Q8).
    pub fn gauss_points_per_axis(self) -> usize {
        match self {
            ElementOrder::Linear => 2,
            ElementOrder::Serendipity => 3,
        }
    }

    pub fn gauss_points_per_cell(self) -> usize {
        let n = self.gauss_points_per_axis();
        n * n
    }
}

impl fmt::Display for ElementOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ElementOrder::Linear => f.write_str("linear"),
            ElementOrder::Serendipity => f.write_str("serendipity"),
        }
    }
}

impl FromStr for ElementOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" | "q4" => Ok(ElementOrder::Linear),
            "serendipity" | "q8" => Ok(ElementOrder::Serendipity),
            other => Err(format!("unknown element order '{other}'")),
        }
    }
}

/// Shape function values at (xi, eta). `out` must hold `nodes_per_cell` entries.
pub fn shape_values(order: ElementOrder, xi: f64, eta: f64, out: &mut [f64]) {
    match order {
        ElementOrder::Linear => {
            for (n, [a, b]) in out.iter_mut().zip(Q4_NODES) {
                *n = 0.25 * (1.0 + a * xi) * (1.0 + b * eta);
            }
        }
        ElementOrder::Serendipity => {
            for (n, [a, b]) in out.iter_mut().zip(Q8_NODES) {
                *n = if a == 0.0 {
                    0.5 * (1.0 - xi * xi) * (1.0 + b * eta)
                } else if b == 0.0 {
                    0.5 * (1.0 + a * xi) * (1.0 - eta * eta)
                } else {
                    0.25 * (1.0 + a * xi) * (1.0 + b * eta) * (a * xi + b * eta - 1.0)
                };
            }
        }
    }
}

/// Shape function derivatives with respect to (xi, eta).
pub fn shape_derivatives(order: ElementOrder, xi: f64, eta: f64, out: &mut [[f64; 2]]) {
    match order {
        ElementOrder::Linear => {
            for (d, [a, b]) in out.iter_mut().zip(Q4_NODES) {
                *d = [0.25 * a * (1.0 + b * eta), 0.25 * b * (1.0 + a * xi)];
            }
        }
        ElementOrder::Serendipity => {
            for (d, [a, b]) in out.iter_mut().zip(Q8_NODES) {
                *d = if a == 0.0 {
                    [-xi * (1.0 + b * eta), 0.5 * b * (1.0 - xi * xi)]
                } else if b == 0.0 {
                    [0.5 * a * (1.0 - eta * eta), -eta * (1.0 + a * xi)]
                } else {
                    [
                        0.25 * a * (1.0 + b * eta) * (2.0 * a * xi + b * eta),
                        0.25 * b * (1.0 + a * xi) * (a * xi + 2.0 * b * eta),
                    ]
                };
            }
        }
    }
}

/// Tensor-product Gauss-Legendre rule on [-1, 1]², xi varying fastest.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

fn gauss_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    match n {
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = 0.6f64.sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => unreachable!("only 2- and 3-point rules are used"),
    }
}

impl GaussRule {
    pub fn for_order(order: ElementOrder) -> Self {
        let (pts, wts) = gauss_1d(order.gauss_points_per_axis());
        let mut points = Vec::with_capacity(pts.len() * pts.len());
        let mut weights = Vec::with_capacity(pts.len() * pts.len());
        for (eta, we) in pts.iter().zip(&wts) {
            for (xi, wx) in pts.iter().zip(&wts) {
                points.push([*xi, *eta]);
                weights.push(wx * we);
            }
        }
        GaussRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Physical shape-function gradients and Jacobian determinant at one point.
///
/// Returns `Err(det)` when the Jacobian determinant is not strictly positive.
pub fn physical_gradients(
    order: ElementOrder,
    coords: &[[f64; 2]],
    xi: f64,
    eta: f64,
    grads: &mut [[f64; 2]],
) -> Result<f64, f64> {
    let n = order.nodes_per_cell();
    let mut dn = [[0.0; 2]; 8];
    shape_derivatives(order, xi, eta, &mut dn[..n]);
    // J = [[dx/dxi, dy/dxi], [dx/deta, dy/deta]]
    let (mut j11, mut j12, mut j21, mut j22) = (0.0, 0.0, 0.0, 0.0);
    for (d, c) in dn[..n].iter().zip(coords) {
        j11 += d[0] * c[0];
        j12 += d[0] * c[1];
        j21 += d[1] * c[0];
        j22 += d[1] * c[1];
    }
    let det = j11 * j22 - j12 * j21;
    if !(det > 0.0) {
        return Err(det);
    }
    let inv = 1.0 / det;
    for (g, d) in grads.iter_mut().zip(&dn[..n]) {
        g[0] = inv * (j22 * d[0] - j12 * d[1]);
        g[1] = inv * (-j21 * d[0] + j11 * d[1]);
    }
    Ok(det)
}

/// Matrix mapping Gauss-point values to local-node values (row per node).
///
/// The Gauss values are interpolated with the tensor Lagrange polynomial
/// through the Gauss points and evaluated at the nodes, which is exact for
/// fields in the span of that polynomial (bilinear for Q4, biquadratic for Q8).
pub fn extrapolation_matrix(order: ElementOrder) -> Vec<Vec<f64>> {
    let (pts, _) = gauss_1d(order.gauss_points_per_axis());
    let lagrange = |k: usize, t: f64| -> f64 {
        pts.iter()
            .enumerate()
            .filter(|&(m, _)| m != k)
            .map(|(_, &pm)| (t - pm) / (pts[k] - pm))
            .product()
    };
    let np = pts.len();
    order
        .reference_nodes()
        .iter()
        .map(|&[xi, eta]| {
            let mut row = Vec::with_capacity(np * np);
            for b in 0..np {
                for a in 0..np {
                    row.push(lagrange(a, xi) * lagrange(b, eta));
                }
            }
            row
        })
        .collect()
}
