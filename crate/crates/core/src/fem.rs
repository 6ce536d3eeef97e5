//! Galerkin discretization of steady-state conduction, −div(k ∇T) = 0, with
//! isoparametric Q4/Q8 elements, symmetric Dirichlet elimination and a sparse
//! SPD solve.

use crate::element::{physical_gradients, shape_values, ElementOrder, GaussRule};
use crate::mesh::{Corner, EdgeTag, Mesh};
use crate::sparse::{solve_cholesky, solve_pcg, CsrMatrix, SolveFailure, SolverKind};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Required relative residual of the reduced system.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("boundary configuration: {0}")]
    Configuration(String),
    #[error("element {cell} is inverted or degenerate (Jacobian determinant {det:e})")]
    ElementQuality { cell: usize, det: f64 },
    #[error("linear solve failed ({reason}); relative residual {residual:e}")]
    NumericalFailure { reason: String, residual: f64 },
}

/// Uniform isotropic thermal conductivity, W/(m·K).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    conductivity: f64,
}

impl Material {
    pub fn new(conductivity: f64) -> Result<Self, FemError> {
        if !(conductivity > 0.0 && conductivity.is_finite()) {
            return Err(FemError::InvalidArgument(format!(
                "conductivity must be positive, got {conductivity}"
            )));
        }
        Ok(Material { conductivity })
    }

    pub fn conductivity(&self) -> f64 {
        self.conductivity
    }
}

impl Default for Material {
    fn default() -> Self {
        Material { conductivity: 1.0 }
    }
}

/// Prescribed temperatures (°C) per edge, adiabatic edges, and the
/// precedence of Dirichlet edges at nodes they share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySpec {
    pub dirichlet: BTreeMap<EdgeTag, f64>,
    pub adiabatic: BTreeSet<EdgeTag>,
    pub corner_rule: Vec<EdgeTag>,
}

impl BoundarySpec {
    pub fn new(
        dirichlet: BTreeMap<EdgeTag, f64>,
        adiabatic: BTreeSet<EdgeTag>,
        corner_rule: Vec<EdgeTag>,
    ) -> Result<Self, FemError> {
        let spec = BoundarySpec { dirichlet, adiabatic, corner_rule };
        spec.validate()?;
        Ok(spec)
    }

    /// Half of the hot-top square: top 20 °C, right and bottom 0 °C, left
    /// adiabatic (symmetry plane). The singular top-right node takes the
    /// top value.
    pub fn case1() -> Self {
        Self::case1_with_rule(vec![EdgeTag::Top, EdgeTag::Bottom, EdgeTag::Right])
    }

    pub fn case1_with_rule(corner_rule: Vec<EdgeTag>) -> Self {
        BoundarySpec {
            dirichlet: BTreeMap::from([(EdgeTag::Top, 20.0), (EdgeTag::Right, 0.0), (EdgeTag::Bottom, 0.0)]),
            adiabatic: BTreeSet::from([EdgeTag::Left]),
            corner_rule,
        }
    }

    /// Top and bottom prescribed, sides adiabatic: a one-dimensional profile.
    pub fn one_dimensional(top: f64, bottom: f64) -> Self {
        BoundarySpec {
            dirichlet: BTreeMap::from([(EdgeTag::Top, top), (EdgeTag::Bottom, bottom)]),
            adiabatic: BTreeSet::from([EdgeTag::Left, EdgeTag::Right]),
            corner_rule: vec![EdgeTag::Top, EdgeTag::Bottom],
        }
    }

    /// Every edge held at the same temperature.
    pub fn uniform(value: f64) -> Self {
        BoundarySpec {
            dirichlet: EdgeTag::ALL.iter().map(|&t| (t, value)).collect(),
            adiabatic: BTreeSet::new(),
            corner_rule: EdgeTag::ALL.to_vec(),
        }
    }

    /// Copy with every Dirichlet value shifted by `offset`.
    pub fn shifted(&self, offset: f64) -> Self {
        let mut out = self.clone();
        out.dirichlet.values_mut().for_each(|v| *v += offset);
        out
    }

    pub fn validate(&self) -> Result<(), FemError> {
        for tag in EdgeTag::ALL {
            match (self.dirichlet.contains_key(&tag), self.adiabatic.contains(&tag)) {
                (false, false) => {
                    return Err(FemError::Configuration(format!("edge '{tag}' has no boundary condition")))
                }
                (true, true) => {
                    return Err(FemError::Configuration(format!("edge '{tag}' is both Dirichlet and adiabatic")))
                }
                _ => {}
            }
        }
        if let Some((tag, v)) = self.dirichlet.iter().find(|(_, v)| !v.is_finite()) {
            return Err(FemError::Configuration(format!("edge '{tag}' has non-finite temperature {v}")));
        }
        let listed: BTreeSet<EdgeTag> = self.corner_rule.iter().copied().collect();
        let dirichlet: BTreeSet<EdgeTag> = self.dirichlet.keys().copied().collect();
        if listed.len() != self.corner_rule.len() || listed != dirichlet {
            return Err(FemError::Configuration(
                "corner rule must list every Dirichlet edge exactly once".into(),
            ));
        }
        Ok(())
    }

    /// Corners where two Dirichlet edges with different values meet.
    pub fn singular_corners(&self) -> Vec<Corner> {
        [Corner::BottomLeft, Corner::BottomRight, Corner::TopRight, Corner::TopLeft]
            .into_iter()
            .filter(|c| {
                let (a, b) = c.edges();
                matches!((self.dirichlet.get(&a), self.dirichlet.get(&b)), (Some(x), Some(y)) if x != y)
            })
            .collect()
    }

    /// Per-node prescribed temperatures on `mesh` after the corner rule.
    pub fn fixed_values(&self, mesh: &Mesh) -> Result<Vec<Option<f64>>, FemError> {
        self.validate()?;
        let mut fixed = vec![None; mesh.node_count()];
        // lowest precedence first so earlier tags overwrite shared nodes
        for tag in self.corner_rule.iter().rev() {
            let value = self.dirichlet[tag];
            for &n in mesh.boundary_nodes(*tag) {
                fixed[n] = Some(value);
            }
        }
        Ok(fixed)
    }
}

/// Element conductivity matrix ∫ k ∇Nᵢ·∇Nⱼ dA by Gauss quadrature.
pub fn element_stiffness(coords: &[[f64; 2]], conductivity: f64, order: ElementOrder) -> Result<DMatrix<f64>, FemError> {
    let n = order.nodes_per_cell();
    if coords.len() != n {
        return Err(FemError::InvalidArgument(format!(
            "{order} element needs {n} coordinates, got {}",
            coords.len()
        )));
    }
    if !(conductivity > 0.0) {
        return Err(FemError::InvalidArgument(format!("conductivity must be positive, got {conductivity}")));
    }
    let mut out = vec![0.0; n * n];
    stiffness_into(coords, conductivity, order, &GaussRule::for_order(order), &mut out).map_err(|det| {
        FemError::ElementQuality { cell: 0, det }
    })?;
    Ok(DMatrix::from_row_slice(n, n, &out))
}

fn stiffness_into(
    coords: &[[f64; 2]],
    k: f64,
    order: ElementOrder,
    rule: &GaussRule,
    out: &mut [f64],
) -> Result<(), f64> {
    let n = order.nodes_per_cell();
    let mut g = [[0.0; 2]; 8];
    out.fill(0.0);
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let det = physical_gradients(order, coords, p[0], p[1], &mut g[..n])?;
        let scale = k * w * det;
        for a in 0..n {
            for b in a..n {
                let v = scale * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                out[a * n + b] += v;
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            out[a * n + b] = out[b * n + a];
        }
    }
    Ok(())
}

fn all_element_matrices(mesh: &Mesh, k: f64) -> Result<Vec<f64>, FemError> {
    let order = mesh.order();
    let n = order.nodes_per_cell();
    let rule = GaussRule::for_order(order);
    let mut blocks = vec![0.0; mesh.cell_count() * n * n];
    blocks
        .par_chunks_mut(n * n)
        .enumerate()
        .try_for_each(|(c, out)| {
            let mut coords = [[0.0; 2]; 8];
            mesh.cell_coords(c, &mut coords[..n]);
            stiffness_into(&coords[..n], k, order, &rule, out).map_err(|det| FemError::ElementQuality { cell: c, det })
        })?;
    Ok(blocks)
}

/// Global conductivity matrix over all nodes, before any boundary condition.
pub fn assemble_global(mesh: &Mesh, material: &Material) -> Result<CsrMatrix, FemError> {
    let n_nodes = mesh.node_count();
    let npc = mesh.order().nodes_per_cell();

    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for cell in mesh.cells() {
        for &a in cell {
            neighbours[a].extend_from_slice(cell);
        }
    }
    let mut row_ptr = Vec::with_capacity(n_nodes + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    for list in neighbours.iter_mut() {
        list.sort_unstable();
        list.dedup();
        col_idx.extend_from_slice(list);
        row_ptr.push(col_idx.len());
    }
    drop(neighbours);

    let blocks = all_element_matrices(mesh, material.conductivity())?;
    let mut values = vec![0.0; col_idx.len()];
    for (cell, block) in mesh.cells().zip(blocks.chunks_exact(npc * npc)) {
        for (a, &ra) in cell.iter().enumerate() {
            let cols = &col_idx[row_ptr[ra]..row_ptr[ra + 1]];
            for (b, &cb) in cell.iter().enumerate() {
                let k = cols.binary_search(&cb).expect("pattern contains every cell pair");
                values[row_ptr[ra] + k] += block[a * npc + b];
            }
        }
    }
    Ok(CsrMatrix::from_parts(n_nodes, row_ptr, col_idx, values))
}

/// Reduced system over the free (non-Dirichlet) nodes.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Free-unknown index → node index.
    pub free_nodes: Vec<usize>,
    /// Node index → free-unknown index.
    pub dof_of_node: Vec<Option<usize>>,
    /// Node index → prescribed temperature.
    pub fixed_values: Vec<Option<f64>>,
    pub solver: SolverKind,
}

impl LinearSystem {
    pub fn free_count(&self) -> usize {
        self.free_nodes.len()
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }
}

/// Assembles and eliminates the Dirichlet data described by `bc`.
pub fn assemble(mesh: &Mesh, material: &Material, bc: &BoundarySpec) -> Result<LinearSystem, FemError> {
    let fixed = bc.fixed_values(mesh)?;
    assemble_with_fixed(mesh, material, fixed)
}

/// Assembles with an explicit per-node prescribed-value list.
pub fn assemble_with_fixed(mesh: &Mesh, material: &Material, fixed_values: Vec<Option<f64>>) -> Result<LinearSystem, FemError> {
    if fixed_values.len() != mesh.node_count() {
        return Err(FemError::InvalidArgument(format!(
            "{} prescribed entries for {} nodes",
            fixed_values.len(),
            mesh.node_count()
        )));
    }
    let global = assemble_global(mesh, material)?;

    let mut dof_of_node = vec![None; mesh.node_count()];
    let mut free_nodes = Vec::new();
    for (node, f) in fixed_values.iter().enumerate() {
        if f.is_none() {
            dof_of_node[node] = Some(free_nodes.len());
            free_nodes.push(node);
        }
    }

    let mut row_ptr = Vec::with_capacity(free_nodes.len() + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    let mut rhs = vec![0.0; free_nodes.len()];
    for (r, &node) in free_nodes.iter().enumerate() {
        let (cols, vals) = global.row(node);
        for (&c, &v) in cols.iter().zip(vals) {
            match (dof_of_node[c], fixed_values[c]) {
                (Some(fc), _) => {
                    col_idx.push(fc);
                    values.push(v);
                }
                (None, Some(t)) => rhs[r] -= v * t,
                (None, None) => unreachable!(),
            }
        }
        row_ptr.push(col_idx.len());
    }

    Ok(LinearSystem {
        matrix: CsrMatrix::from_parts(free_nodes.len(), row_ptr, col_idx, values),
        rhs,
        free_nodes,
        dof_of_node,
        fixed_values,
        solver: SolverKind::default(),
    })
}

/// Nodal temperatures (°C) for one mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureField {
    pub values: Vec<f64>,
    /// Relative residual achieved on the reduced system.
    pub relative_residual: f64,
}

impl TemperatureField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Temperature at (x, y): the nodal value when a corner node sits there,
    /// otherwise interpolated with the containing element's shape functions.
    pub fn value_at(&self, mesh: &Mesh, x: f64, y: f64) -> Option<f64> {
        if let Some(n) = mesh.find_corner_node(x, y, 1e-12) {
            return Some(self.values[n]);
        }
        let (cell, [xi, eta]) = mesh.locate(x, y)?;
        let npc = mesh.order().nodes_per_cell();
        let mut shape = [0.0; 8];
        shape_values(mesh.order(), xi, eta, &mut shape[..npc]);
        Some(mesh.cell(cell).iter().zip(&shape).map(|(&n, s)| s * self.values[n]).sum())
    }
}

/// Solves the reduced system and scatters back to all nodes.
pub fn solve(system: &LinearSystem) -> Result<TemperatureField, FemError> {
    let mut values: Vec<f64> = system.fixed_values.iter().map(|v| v.unwrap_or(0.0)).collect();
    if system.free_count() == 0 {
        return Ok(TemperatureField { values, relative_residual: 0.0 });
    }
    let a = &system.matrix;
    let b = &system.rhs;
    let x = match system.solver {
        SolverKind::Cholesky => {
            let mut x = solve_cholesky(a, b).map_err(|f| failure(f, f64::NAN))?;
            // one refinement step if the direct solve lost accuracy
            if a.relative_residual(&x, b) > SOLVE_TOLERANCE {
                let mut ax = vec![0.0; x.len()];
                a.mul_vec(&x, &mut ax);
                let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
                let dx = solve_cholesky(a, &r).map_err(|f| failure(f, f64::NAN))?;
                x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
            }
            x
        }
        SolverKind::ConjugateGradient => {
            let max_iter = (10 * system.free_count()).max(1000);
            solve_pcg(a, b, SOLVE_TOLERANCE, max_iter).map_err(|f| failure(f, f64::NAN))?.0
        }
    };
    let relative_residual = a.relative_residual(&x, b);
    if !(relative_residual <= SOLVE_TOLERANCE) {
        return Err(FemError::NumericalFailure {
            reason: "residual above tolerance".into(),
            residual: relative_residual,
        });
    }
    for (&node, v) in system.free_nodes.iter().zip(x) {
        values[node] = v;
    }
    Ok(TemperatureField { values, relative_residual })
}

fn failure(f: SolveFailure, residual: f64) -> FemError {
    match f {
        SolveFailure::NotPositiveDefinite => FemError::NumericalFailure {
            reason: "matrix is not positive definite".into(),
            residual,
        },
        SolveFailure::NotConverged { iterations, residual } => FemError::NumericalFailure {
            reason: format!("no convergence after {iterations} iterations"),
            residual,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_graded_grid, build_uniform_grid};

    const UNIT_SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

    #[test]
    fn unit_square_q4_stiffness() {
        // closed-form integrals of bilinear gradients on the unit square
        let k = element_stiffness(&UNIT_SQUARE, 1.0, ElementOrder::Linear).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let expect = match (a + 4 - b) % 4 {
                    0 => 2.0 / 3.0,
                    2 => -1.0 / 3.0,
                    _ => -1.0 / 6.0,
                };
                assert!((k[(a, b)] - expect).abs() < 1e-14, "({a},{b}) = {}", k[(a, b)]);
            }
        }
    }

    #[test]
    fn stiffness_rows_sum_to_zero_and_scale_with_k() {
        let quad = [[0.0, 0.0], [2.0, 0.2], [1.8, 1.5], [0.1, 1.0]];
        let k1 = element_stiffness(&quad, 1.0, ElementOrder::Linear).unwrap();
        let k2 = element_stiffness(&quad, 2.0, ElementOrder::Linear).unwrap();
        for r in 0..4 {
            assert!(k1.row(r).sum().abs() < 1e-12);
        }
        assert_eq!(k2, &k1 * 2.0);
        assert!((k1.clone() - k1.transpose()).abs().max() < 1e-15);

        let mut q8 = quad.to_vec();
        for e in 0..4 {
            let (a, b) = (quad[e], quad[(e + 1) % 4]);
            q8.push([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
        }
        let k8 = element_stiffness(&q8, 1.0, ElementOrder::Serendipity).unwrap();
        for r in 0..8 {
            assert!(k8.row(r).sum().abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_element_is_rejected() {
        let flipped = [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        assert!(matches!(
            element_stiffness(&flipped, 1.0, ElementOrder::Linear),
            Err(FemError::ElementQuality { .. })
        ));
        let collapsed = [[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 0.0]];
        assert!(element_stiffness(&collapsed, 1.0, ElementOrder::Linear).is_err());
    }

    #[test]
    fn global_rows_sum_to_zero() {
        for order in [ElementOrder::Linear, ElementOrder::Serendipity] {
            let m = build_graded_grid(0.2, 0.4, 5, 7, 1.3, Corner::TopRight, order).unwrap();
            let k = assemble_global(&m, &Material::default()).unwrap();
            assert!(k.row_sums().iter().all(|s| s.abs() < 1e-12));
            assert!(k.asymmetry() < 1e-12);
        }
    }

    #[test]
    fn case1_corner_assignment() {
        let m = build_uniform_grid(0.2, 0.4, 10, 20, ElementOrder::Linear).unwrap();
        let sys = assemble(&m, &Material::default(), &BoundarySpec::case1()).unwrap();
        assert_eq!(sys.fixed_values[m.corner_node(Corner::TopRight)], Some(20.0));
        assert_eq!(sys.fixed_values[m.corner_node(Corner::BottomRight)], Some(0.0));
        assert_eq!(sys.fixed_values[m.corner_node(Corner::BottomLeft)], Some(0.0));
        assert_eq!(sys.fixed_values[m.corner_node(Corner::TopLeft)], Some(20.0));
        assert_eq!(BoundarySpec::case1().singular_corners(), vec![Corner::TopRight]);

        let cold_first = BoundarySpec::case1_with_rule(vec![EdgeTag::Right, EdgeTag::Top, EdgeTag::Bottom]);
        let sys = assemble(&m, &Material::default(), &cold_first).unwrap();
        assert_eq!(sys.fixed_values[m.corner_node(Corner::TopRight)], Some(0.0));
    }

    #[test]
    fn all_dirichlet_constant() {
        let m = build_uniform_grid(0.2, 0.4, 4, 8, ElementOrder::Linear).unwrap();
        let sys = assemble(&m, &Material::default(), &BoundarySpec::uniform(7.0)).unwrap();
        assert!(sys.rhs.iter().zip(sys.matrix.row_sums()).all(|(b, s)| (b - 7.0 * s).abs() < 1e-12));
        let t = solve(&sys).unwrap();
        assert!(t.values.iter().all(|v| (v - 7.0).abs() < 1e-12));
    }

    #[test]
    fn single_cell_has_no_unknowns() {
        let m = build_uniform_grid(1.0, 1.0, 1, 1, ElementOrder::Linear).unwrap();
        let sys = assemble(&m, &Material::default(), &BoundarySpec::one_dimensional(20.0, 0.0)).unwrap();
        assert_eq!(sys.free_count(), 0);
        let t = solve(&sys).unwrap();
        assert_eq!(t.values, vec![0.0, 0.0, 20.0, 20.0]);
    }

    #[test]
    fn configuration_errors() {
        let m = build_uniform_grid(1.0, 1.0, 2, 2, ElementOrder::Linear).unwrap();
        let mut bc = BoundarySpec::case1();
        bc.adiabatic.clear();
        assert!(matches!(assemble(&m, &Material::default(), &bc), Err(FemError::Configuration(_))));
        let mut bc = BoundarySpec::case1();
        bc.adiabatic.insert(EdgeTag::Top);
        assert!(matches!(bc.validate(), Err(FemError::Configuration(_))));
        let mut bc = BoundarySpec::case1();
        bc.corner_rule.pop();
        assert!(matches!(bc.validate(), Err(FemError::Configuration(_))));
        assert!(Material::new(0.0).is_err());
    }

    #[test]
    fn one_dimensional_profile() {
        for order in [ElementOrder::Linear, ElementOrder::Serendipity] {
            let m = build_uniform_grid(0.2, 0.4, 4, 8, order).unwrap();
            let sys = assemble(&m, &Material::default(), &BoundarySpec::one_dimensional(20.0, 0.0)).unwrap();
            let t = solve(&sys).unwrap();
            for (node, v) in m.nodes().iter().zip(&t.values) {
                assert!((v - 50.0 * node[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn solver_routes_agree() {
        let m = build_uniform_grid(0.2, 0.4, 10, 20, ElementOrder::Linear).unwrap();
        let sys = assemble(&m, &Material::default(), &BoundarySpec::case1()).unwrap();
        let direct = solve(&sys).unwrap();
        let iterative = solve(&sys.clone().with_solver(SolverKind::ConjugateGradient)).unwrap();
        assert!(direct.relative_residual <= SOLVE_TOLERANCE);
        assert!(iterative.relative_residual <= SOLVE_TOLERANCE);
        for (a, b) in direct.values.iter().zip(&iterative.values) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn value_at_interpolates_between_nodes() {
        let m = build_uniform_grid(0.2, 0.4, 10, 20, ElementOrder::Linear).unwrap();
        let sys = assemble(&m, &Material::default(), &BoundarySpec::one_dimensional(20.0, 0.0)).unwrap();
        let t = solve(&sys).unwrap();
        assert!((t.value_at(&m, 0.05, 0.35).unwrap() - 17.5).abs() < 1e-9);
        assert!(t.value_at(&m, 0.25, 0.1).is_none());
    }
}
