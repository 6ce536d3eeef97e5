//! Structured quadrilateral meshes of an axis-aligned rectangle.
//!
//! Corner nodes are numbered row by row (`j * (nx + 1) + i`, x fastest).
//! Serendipity meshes append one mid-side node per unique edge: all
//! horizontal edges (row by row) first, then all vertical edges.

use crate::element::{physical_gradients, ElementOrder, GaussRule};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("cell {cell} has non-positive Jacobian determinant {det:e}")]
    ElementQuality { cell: usize, det: f64 },
}

/// One of the four sides of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeTag {
    Top,
    Bottom,
    Left,
    Right,
}

impl EdgeTag {
    pub const ALL: [EdgeTag; 4] = [EdgeTag::Top, EdgeTag::Bottom, EdgeTag::Left, EdgeTag::Right];

    fn slot(self) -> usize {
        match self {
            EdgeTag::Top => 0,
            EdgeTag::Bottom => 1,
            EdgeTag::Left => 2,
            EdgeTag::Right => 3,
        }
    }

    /// Outward unit normal.
    pub fn outward_normal(self) -> [f64; 2] {
        match self {
            EdgeTag::Top => [0.0, 1.0],
            EdgeTag::Bottom => [0.0, -1.0],
            EdgeTag::Left => [-1.0, 0.0],
            EdgeTag::Right => [1.0, 0.0],
        }
    }

    /// Corners at the start and end of the edge's node sequence.
    pub fn end_corners(self) -> (Corner, Corner) {
        match self {
            EdgeTag::Top => (Corner::TopLeft, Corner::TopRight),
            EdgeTag::Bottom => (Corner::BottomLeft, Corner::BottomRight),
            EdgeTag::Left => (Corner::BottomLeft, Corner::TopLeft),
            EdgeTag::Right => (Corner::BottomRight, Corner::TopRight),
        }
    }
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeTag::Top => "top",
            EdgeTag::Bottom => "bottom",
            EdgeTag::Left => "left",
            EdgeTag::Right => "right",
        })
    }
}

impl FromStr for EdgeTag {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "top" => Ok(EdgeTag::Top),
            "bottom" => Ok(EdgeTag::Bottom),
            "left" => Ok(EdgeTag::Left),
            "right" => Ok(EdgeTag::Right),
            other => Err(MeshError::InvalidArgument(format!("unknown edge tag '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    BottomLeft,
    BottomRight,
    TopRight,
    TopLeft,
}

impl Corner {
    /// The two edges meeting at this corner (horizontal first).
    pub fn edges(self) -> (EdgeTag, EdgeTag) {
        match self {
            Corner::BottomLeft => (EdgeTag::Bottom, EdgeTag::Left),
            Corner::BottomRight => (EdgeTag::Bottom, EdgeTag::Right),
            Corner::TopRight => (EdgeTag::Top, EdgeTag::Right),
            Corner::TopLeft => (EdgeTag::Top, EdgeTag::Left),
        }
    }

    fn is_right(self) -> bool {
        matches!(self, Corner::BottomRight | Corner::TopRight)
    }

    fn is_top(self) -> bool {
        matches!(self, Corner::TopLeft | Corner::TopRight)
    }
}

impl FromStr for Corner {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "bottom-left" => Ok(Corner::BottomLeft),
            "bottom-right" => Ok(Corner::BottomRight),
            "top-right" => Ok(Corner::TopRight),
            "top-left" => Ok(Corner::TopLeft),
            other => Err(MeshError::InvalidArgument(format!("unknown corner '{other}'"))),
        }
    }
}

/// Structured quadrilateral mesh of `[0, width] × [0, height]`.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct Mesh {
    order: ElementOrder,
    nodes: Vec<[f64; 2]>,
    connectivity: Vec<usize>,
    boundary: [Vec<usize>; 4],
    x_ticks: Vec<f64>,
    y_ticks: Vec<f64>,
    spacing_hint: f64,
}

fn check_dims(width: f64, height: f64, nx: usize, ny: usize) -> Result<(), MeshError> {
    if !(width > 0.0 && width.is_finite() && height > 0.0 && height.is_finite()) {
        return Err(MeshError::InvalidArgument(format!(
            "dimensions must be positive, got {width} x {height}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument(format!(
            "cell counts must be at least 1, got {nx} x {ny}"
        )));
    }
    Ok(())
}

/// Tick positions on `[0, length]` with `n` cells whose sizes form a
/// geometric progression of ratio `ratio`, smallest cell at the far end
/// when `fine_at_end` is set.
fn graded_ticks(length: f64, n: usize, ratio: f64, fine_at_end: bool) -> Vec<f64> {
    if ratio == 1.0 {
        return (0..=n).map(|i| i as f64 * length / n as f64).collect();
    }
    let sizes: Vec<f64> = (0..n)
        .map(|i| {
            let p = if fine_at_end { n - 1 - i } else { i };
            ratio.powi(p as i32)
        })
        .collect();
    let total: f64 = sizes.iter().sum();
    let mut ticks = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    ticks.push(0.0);
    for s in &sizes[..n - 1] {
        acc += s;
        ticks.push(acc / total * length);
    }
    ticks.push(length);
    ticks
}

/// Builds an axis-aligned tensor-product grid with `nx × ny` equal cells.
pub fn build_uniform_grid(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    order: ElementOrder,
) -> Result<Mesh, MeshError> {
    check_dims(width, height, nx, ny)?;
    Mesh::from_ticks(graded_ticks(width, nx, 1.0, false), graded_ticks(height, ny, 1.0, false), order)
}

/// Builds a tensor-product grid whose cell sizes shrink geometrically toward
/// `focus` along each axis. `grading_ratio` is the size ratio of neighbouring
/// cells; 1 reproduces [`build_uniform_grid`].
pub fn build_graded_grid(
    width: f64,
    height: f64,
    nx: usize,
    ny: usize,
    grading_ratio: f64,
    focus: Corner,
    order: ElementOrder,
) -> Result<Mesh, MeshError> {
    check_dims(width, height, nx, ny)?;
    if !(grading_ratio >= 1.0 && grading_ratio.is_finite()) {
        return Err(MeshError::InvalidArgument(format!(
            "grading ratio must be >= 1, got {grading_ratio}"
        )));
    }
    let xs = graded_ticks(width, nx, grading_ratio, focus.is_right());
    let ys = graded_ticks(height, ny, grading_ratio, focus.is_top());
    Mesh::from_ticks(xs, ys, order)
}

impl Mesh {
    /// Builds the tensor-product mesh on the given strictly increasing ticks.
    pub fn from_ticks(x_ticks: Vec<f64>, y_ticks: Vec<f64>, order: ElementOrder) -> Result<Mesh, MeshError> {
        if x_ticks.len() < 2 || y_ticks.len() < 2 {
            return Err(MeshError::InvalidArgument("need at least two ticks per axis".into()));
        }
        for t in [&x_ticks, &y_ticks] {
            if t[0] != 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(MeshError::InvalidArgument(
                    "ticks must start at 0 and increase strictly".into(),
                ));
            }
        }
        let nx = x_ticks.len() - 1;
        let ny = y_ticks.len() - 1;
        let corner = |i: usize, j: usize| j * (nx + 1) + i;
        let n_corner = (nx + 1) * (ny + 1);

        let mut nodes = Vec::with_capacity(n_corner);
        for &y in &y_ticks {
            for &x in &x_ticks {
                nodes.push([x, y]);
            }
        }

        let serendipity = order == ElementOrder::Serendipity;
        let h_base = n_corner;
        let v_base = h_base + (ny + 1) * nx;
        let hmid = |i: usize, j: usize| h_base + j * nx + i;
        let vmid = |i: usize, j: usize| v_base + j * (nx + 1) + i;
        if serendipity {
            for j in 0..=ny {
                for i in 0..nx {
                    nodes.push([0.5 * (x_ticks[i] + x_ticks[i + 1]), y_ticks[j]]);
                }
            }
            for j in 0..ny {
                for i in 0..=nx {
                    nodes.push([x_ticks[i], 0.5 * (y_ticks[j] + y_ticks[j + 1])]);
                }
            }
        }

        let npc = order.nodes_per_cell();
        let mut connectivity = Vec::with_capacity(nx * ny * npc);
        for j in 0..ny {
            for i in 0..nx {
                connectivity.extend_from_slice(&[
                    corner(i, j),
                    corner(i + 1, j),
                    corner(i + 1, j + 1),
                    corner(i, j + 1),
                ]);
                if serendipity {
                    connectivity.extend_from_slice(&[
                        hmid(i, j),
                        vmid(i + 1, j),
                        hmid(i, j + 1),
                        vmid(i, j),
                    ]);
                }
            }
        }

        let horizontal = |j: usize| -> Vec<usize> {
            let mut seq = Vec::new();
            for i in 0..=nx {
                seq.push(corner(i, j));
                if serendipity && i < nx {
                    seq.push(hmid(i, j));
                }
            }
            seq
        };
        let vertical = |i: usize| -> Vec<usize> {
            let mut seq = Vec::new();
            for j in 0..=ny {
                seq.push(corner(i, j));
                if serendipity && j < ny {
                    seq.push(vmid(i, j));
                }
            }
            seq
        };
        let boundary = [horizontal(ny), horizontal(0), vertical(0), vertical(nx)];

        let spacing_hint = x_ticks[nx] / nx as f64;
        Ok(Mesh {
            order,
            nodes,
            connectivity,
            boundary,
            x_ticks,
            y_ticks,
            spacing_hint,
        })
    }

    pub fn order(&self) -> ElementOrder {
        self.order
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.connectivity.len() / self.order.nodes_per_cell()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> [f64; 2] {
        self.nodes[index]
    }

    /// Local-to-global node indices of one cell.
    pub fn cell(&self, index: usize) -> &[usize] {
        let npc = self.order.nodes_per_cell();
        &self.connectivity[index * npc..(index + 1) * npc]
    }

    pub fn cells(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.connectivity.chunks_exact(self.order.nodes_per_cell())
    }

    /// Node coordinates of one cell, written into `out`.
    pub fn cell_coords(&self, index: usize, out: &mut [[f64; 2]]) {
        for (o, &n) in out.iter_mut().zip(self.cell(index)) {
            *o = self.nodes[n];
        }
    }

    pub fn width(&self) -> f64 {
        self.x_ticks[self.x_ticks.len() - 1]
    }

    pub fn height(&self) -> f64 {
        self.y_ticks[self.y_ticks.len() - 1]
    }

    pub fn nx(&self) -> usize {
        self.x_ticks.len() - 1
    }

    pub fn ny(&self) -> usize {
        self.y_ticks.len() - 1
    }

    pub fn x_ticks(&self) -> &[f64] {
        &self.x_ticks
    }

    pub fn y_ticks(&self) -> &[f64] {
        &self.y_ticks
    }

    /// Representative element size (width / nx), metres.
    pub fn spacing_hint(&self) -> f64 {
        self.spacing_hint
    }

    /// Ordered node sequence along `tag`, by increasing coordinate.
    pub fn boundary_nodes(&self, tag: EdgeTag) -> &[usize] {
        &self.boundary[tag.slot()]
    }

    /// [`Mesh::boundary_nodes`] keyed by the tag's name.
    pub fn boundary_nodes_named(&self, tag: &str) -> Result<&[usize], MeshError> {
        Ok(self.boundary_nodes(tag.parse()?))
    }

    pub fn corner_node(&self, corner: Corner) -> usize {
        let (nx, ny) = (self.nx(), self.ny());
        let i = if corner.is_right() { nx } else { 0 };
        let j = if corner.is_top() { ny } else { 0 };
        j * (nx + 1) + i
    }

    /// Index of the corner node at (x, y), if one lies within `tol`.
    pub fn find_corner_node(&self, x: f64, y: f64, tol: f64) -> Option<usize> {
        let i = nearest_tick(&self.x_ticks, x, tol)?;
        let j = nearest_tick(&self.y_ticks, y, tol)?;
        Some(j * (self.nx() + 1) + i)
    }

    /// Cell containing (x, y) and the point's natural coordinates in it.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, [f64; 2])> {
        let (i, xi) = locate_on_axis(&self.x_ticks, x)?;
        let (j, eta) = locate_on_axis(&self.y_ticks, y)?;
        Some((j * self.nx() + i, [xi, eta]))
    }

    /// Verifies a positive Jacobian at every Gauss point of every cell.
    pub fn check_jacobians(&self) -> Result<(), MeshError> {
        let rule = GaussRule::for_order(self.order);
        let npc = self.order.nodes_per_cell();
        let mut coords = [[0.0; 2]; 8];
        let mut grads = [[0.0; 2]; 8];
        for c in 0..self.cell_count() {
            self.cell_coords(c, &mut coords[..npc]);
            for p in &rule.points {
                physical_gradients(self.order, &coords[..npc], p[0], p[1], &mut grads[..npc])
                    .map_err(|det| MeshError::ElementQuality { cell: c, det })?;
            }
        }
        Ok(())
    }

    /// Shoelace area of a cell's corner polygon.
    pub fn signed_area(&self, cell: usize) -> f64 {
        let c = &self.cell(cell)[..4];
        (0..4)
            .map(|k| {
                let a = self.nodes[c[k]];
                let b = self.nodes[c[(k + 1) % 4]];
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            * 0.5
    }
}

fn nearest_tick(ticks: &[f64], v: f64, tol: f64) -> Option<usize> {
    let pos = ticks.partition_point(|&t| t < v);
    [pos.saturating_sub(1), pos.min(ticks.len() - 1)]
        .into_iter()
        .find(|&k| (ticks[k] - v).abs() <= tol)
}

fn locate_on_axis(ticks: &[f64], v: f64) -> Option<(usize, f64)> {
    let n = ticks.len() - 1;
    if v < ticks[0] || v > ticks[n] {
        return None;
    }
    let k = ticks.partition_point(|&t| t <= v).clamp(1, n) - 1;
    let (a, b) = (ticks[k], ticks[k + 1]);
    Some((k, (2.0 * (v - a) / (b - a) - 1.0).clamp(-1.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case1_coarse_counts() {
        let m = build_uniform_grid(0.2, 0.4, 10, 20, ElementOrder::Linear).unwrap();
        assert_eq!(m.node_count(), 231);
        assert_eq!(m.cell_count(), 200);
        assert!((m.spacing_hint() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn single_cell() {
        let m = build_uniform_grid(1.0, 1.0, 1, 1, ElementOrder::Linear).unwrap();
        assert_eq!(m.node_count(), 4);
        assert_eq!(m.cell_count(), 1);
        assert_eq!(m.boundary_nodes(EdgeTag::Left).len(), 2);
    }

    #[test]
    fn case1_finest_default_counts() {
        let m = build_uniform_grid(0.2, 0.4, 160, 320, ElementOrder::Linear).unwrap();
        assert_eq!(m.node_count(), 51_681);
        assert_eq!(m.cell_count(), 51_200);
        assert!((m.spacing_hint() - 0.00125).abs() < 1e-15);
    }

    #[test]
    fn serendipity_counts() {
        let (nx, ny) = (3, 5);
        let m = build_uniform_grid(0.3, 0.5, nx, ny, ElementOrder::Serendipity).unwrap();
        let edges = (ny + 1) * nx + ny * (nx + 1);
        assert_eq!(m.node_count(), (nx + 1) * (ny + 1) + edges);
        assert_eq!(m.boundary_nodes(EdgeTag::Top).len(), 2 * nx + 1);
        assert_eq!(m.boundary_nodes(EdgeTag::Right).len(), 2 * ny + 1);
        // mid-side nodes come after every corner node
        assert!(m.cell(0)[4..].iter().all(|&n| n >= (nx + 1) * (ny + 1)));
    }

    #[test]
    fn invalid_arguments() {
        assert!(build_uniform_grid(0.0, 1.0, 1, 1, ElementOrder::Linear).is_err());
        assert!(build_uniform_grid(1.0, -1.0, 1, 1, ElementOrder::Linear).is_err());
        assert!(build_uniform_grid(1.0, 1.0, 0, 1, ElementOrder::Linear).is_err());
        assert!(build_graded_grid(1.0, 1.0, 2, 2, 0.5, Corner::TopRight, ElementOrder::Linear).is_err());
    }

    #[test]
    fn top_edge_and_shared_corner() {
        let m = build_uniform_grid(0.2, 0.4, 10, 20, ElementOrder::Linear).unwrap();
        let top = m.boundary_nodes(EdgeTag::Top);
        assert_eq!(top.len(), 11);
        assert!(top.iter().all(|&n| m.node(n)[1] == 0.4));
        let c = m.corner_node(Corner::TopRight);
        assert_eq!(m.node(c), [0.2, 0.4]);
        assert_eq!(*top.last().unwrap(), c);
        assert_eq!(*m.boundary_nodes(EdgeTag::Right).last().unwrap(), c);
        assert!(matches!(m.boundary_nodes_named("middle"), Err(MeshError::InvalidArgument(_))));
    }

    #[test]
    fn graded_spacing_ratio() {
        let m = build_graded_grid(0.2, 0.4, 4, 4, 2.0, Corner::TopRight, ElementOrder::Linear).unwrap();
        let xs = m.x_ticks();
        let dx: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        // 8:4:2:1 of 0.2 -> 0.2 * [8, 4, 2, 1] / 15
        for (d, r) in dx.iter().zip([8.0, 4.0, 2.0, 1.0]) {
            assert!((d - 0.2 * r / 15.0).abs() < 1e-15);
        }
        assert_eq!(xs[4], 0.2);
        let dy: Vec<f64> = m.y_ticks().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(dy.windows(2).all(|w| w[1] < w[0]));
        m.check_jacobians().unwrap();
    }

    #[test]
    fn unit_grading_equals_uniform() {
        let u = build_uniform_grid(0.2, 0.4, 7, 9, ElementOrder::Serendipity).unwrap();
        let g = build_graded_grid(0.2, 0.4, 7, 9, 1.0, Corner::BottomLeft, ElementOrder::Serendipity).unwrap();
        assert_eq!(u.nodes(), g.nodes());
    }

    #[test]
    fn locate_and_find() {
        let m = build_uniform_grid(0.2, 0.4, 10, 20, ElementOrder::Linear).unwrap();
        assert_eq!(m.find_corner_node(0.04, 0.06, 1e-12), Some(3 * 11 + 2));
        assert_eq!(m.find_corner_node(0.05, 0.06, 1e-12), None);
        let (cell, [xi, eta]) = m.locate(0.05, 0.35).unwrap();
        assert_eq!(cell, 17 * 10 + 2);
        assert!((xi - 0.0).abs() < 1e-12 && (eta - 0.0).abs() < 1e-9);
        assert!(m.locate(0.3, 0.1).is_none());
    }

    #[test]
    fn counter_clockwise_cells() {
        let m = build_graded_grid(1.0, 2.0, 5, 3, 1.5, Corner::BottomLeft, ElementOrder::Serendipity).unwrap();
        assert!((0..m.cell_count()).all(|c| m.signed_area(c) > 0.0));
        m.check_jacobians().unwrap();
    }
}
