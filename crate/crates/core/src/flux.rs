//! Heat-flux recovery (q = −k ∇T) at Gauss points, extrapolation and
//! averaging to nodes, and trapezoidal boundary heat-flow integration with
//! optional masking of the nodes nearest a singular corner.

use crate::element::{extrapolation_matrix, physical_gradients, GaussRule};
use crate::fem::{BoundarySpec, Material, TemperatureField};
use crate::mesh::{Corner, EdgeTag, Mesh};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("element {cell} is inverted or degenerate (Jacobian determinant {det:e})")]
    ElementQuality { cell: usize, det: f64 },
}

/// Heat-flux vectors in W/m².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxField {
    pub gauss_points_per_cell: usize,
    /// Cell-major, Gauss points in rule order.
    pub gauss_flux: Vec<[f64; 2]>,
    /// Filled by [`average_to_nodes`].
    pub nodal_flux: Option<Vec<[f64; 2]>>,
}

impl FluxField {
    /// Flux at one Gauss point of one cell.
    pub fn at_gauss(&self, cell: usize, point: usize) -> [f64; 2] {
        self.gauss_flux[cell * self.gauss_points_per_cell + point]
    }

    pub fn nodal(&self) -> Option<&[[f64; 2]]> {
        self.nodal_flux.as_deref()
    }
}

/// Evaluates q = −k ∇T at every Gauss point.
pub fn recover_gauss_flux(mesh: &Mesh, field: &TemperatureField, material: &Material) -> Result<FluxField, FluxError> {
    if field.len() != mesh.node_count() {
        return Err(FluxError::InvalidArgument(format!(
            "field has {} values for {} nodes",
            field.len(),
            mesh.node_count()
        )));
    }
    let order = mesh.order();
    let npc = order.nodes_per_cell();
    let rule = GaussRule::for_order(order);
    let ngp = rule.len();
    let k = material.conductivity();
    let mut gauss_flux = vec![[0.0; 2]; mesh.cell_count() * ngp];
    gauss_flux
        .par_chunks_mut(ngp)
        .enumerate()
        .try_for_each(|(c, out)| {
            let mut coords = [[0.0; 2]; 8];
            let mut grads = [[0.0; 2]; 8];
            mesh.cell_coords(c, &mut coords[..npc]);
            let cell = mesh.cell(c);
            for (q, p) in out.iter_mut().zip(&rule.points) {
                physical_gradients(order, &coords[..npc], p[0], p[1], &mut grads[..npc])
                    .map_err(|det| FluxError::ElementQuality { cell: c, det })?;
                let (mut gx, mut gy) = (0.0, 0.0);
                for (g, &n) in grads[..npc].iter().zip(cell) {
                    gx += g[0] * field.values[n];
                    gy += g[1] * field.values[n];
                }
                *q = [-k * gx, -k * gy];
            }
            Ok(())
        })?;
    Ok(FluxField { gauss_points_per_cell: ngp, gauss_flux, nodal_flux: None })
}

/// Extrapolates each cell's Gauss values to its nodes and averages over the
/// cells sharing each node (unweighted).
pub fn average_to_nodes(mesh: &Mesh, mut flux: FluxField) -> Result<FluxField, FluxError> {
    let order = mesh.order();
    let ngp = order.gauss_points_per_cell();
    if flux.gauss_points_per_cell != ngp || flux.gauss_flux.len() != mesh.cell_count() * ngp {
        return Err(FluxError::InvalidArgument("flux field does not belong to this mesh".into()));
    }
    let extrap = extrapolation_matrix(order);
    let mut sum = vec![[0.0; 2]; mesh.node_count()];
    let mut count = vec![0u32; mesh.node_count()];
    for (cell, gauss) in mesh.cells().zip(flux.gauss_flux.chunks_exact(ngp)) {
        for (row, &node) in extrap.iter().zip(cell) {
            let (mut qx, mut qy) = (0.0, 0.0);
            for (w, q) in row.iter().zip(gauss) {
                qx += w * q[0];
                qy += w * q[1];
            }
            sum[node][0] += qx;
            sum[node][1] += qy;
            count[node] += 1;
        }
    }
    let nodal = sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| {
            let c = f64::from(c.max(1));
            [s[0] / c, s[1] / c]
        })
        .collect();
    flux.nodal_flux = Some(nodal);
    Ok(flux)
}

/// Both recovery steps in sequence.
pub fn recover_nodal_flux(mesh: &Mesh, field: &TemperatureField, material: &Material) -> Result<FluxField, FluxError> {
    average_to_nodes(mesh, recover_gauss_flux(mesh, field, material)?)
}

/// One node of a boundary heat-flow integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSample {
    pub node: usize,
    /// Arc length from the start of the edge sequence, metres.
    pub position: f64,
    /// Inward-normal flux density, W/m² (positive = entering the body).
    pub inward_flux: f64,
    /// Trapezoidal weight, metres.
    pub weight: f64,
    pub masked: bool,
}

/// Heat flow per metre of depth through one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryHeatFlow {
    pub tag: EdgeTag,
    /// W/m.
    pub total: f64,
    /// `total` without the masked nodes' contributions, W/m.
    pub masked_total: f64,
    pub mask_count: usize,
    pub per_node: Vec<EdgeSample>,
}

impl BoundaryHeatFlow {
    /// Inward flux density at the node sitting on `corner`, if it ends this edge.
    pub fn corner_flux(&self, corner: Corner) -> Option<f64> {
        let (start, end) = self.tag.end_corners();
        if corner == start {
            self.per_node.first().map(|s| s.inward_flux)
        } else if corner == end {
            self.per_node.last().map(|s| s.inward_flux)
        } else {
            None
        }
    }
}

/// Integrates the inward-normal nodal flux along a Dirichlet edge of `bc`,
/// masking `mask_count` nodes at each end that touches a singular corner.
pub fn boundary_heat_flow(
    mesh: &Mesh,
    flux: &FluxField,
    bc: &BoundarySpec,
    tag: EdgeTag,
    mask_count: usize,
) -> Result<BoundaryHeatFlow, FluxError> {
    if !bc.dirichlet.contains_key(&tag) {
        return Err(FluxError::InvalidArgument(format!("edge '{tag}' is not a Dirichlet edge")));
    }
    boundary_heat_flow_masking(mesh, flux, tag, mask_count, &bc.singular_corners())
}

/// As [`boundary_heat_flow`] with an explicit list of corners to mask at.
pub fn boundary_heat_flow_masking(
    mesh: &Mesh,
    flux: &FluxField,
    tag: EdgeTag,
    mask_count: usize,
    singular: &[Corner],
) -> Result<BoundaryHeatFlow, FluxError> {
    let nodal = flux
        .nodal()
        .ok_or_else(|| FluxError::InvalidArgument("nodal flux has not been computed".into()))?;
    if nodal.len() != mesh.node_count() {
        return Err(FluxError::InvalidArgument("flux field does not belong to this mesh".into()));
    }
    let seq = mesh.boundary_nodes(tag);
    if 2 * mask_count > seq.len() {
        return Err(FluxError::InvalidArgument(format!(
            "cannot mask {mask_count} nodes on an edge of {} nodes",
            seq.len()
        )));
    }
    let axis = match tag {
        EdgeTag::Top | EdgeTag::Bottom => 0,
        EdgeTag::Left | EdgeTag::Right => 1,
    };
    let normal = tag.outward_normal();
    let origin = mesh.node(seq[0])[axis];
    let positions: Vec<f64> = seq.iter().map(|&n| mesh.node(n)[axis] - origin).collect();
    let last = seq.len() - 1;
    let (start_corner, end_corner) = tag.end_corners();
    let mask_start = singular.contains(&start_corner);
    let mask_end = singular.contains(&end_corner);

    let per_node: Vec<EdgeSample> = seq
        .iter()
        .enumerate()
        .map(|(i, &node)| {
            let left = if i > 0 { positions[i] - positions[i - 1] } else { 0.0 };
            let right = if i < last { positions[i + 1] - positions[i] } else { 0.0 };
            let q = nodal[node];
            EdgeSample {
                node,
                position: positions[i],
                inward_flux: -(q[0] * normal[0] + q[1] * normal[1]),
                weight: 0.5 * (left + right),
                masked: (mask_start && i < mask_count) || (mask_end && i + mask_count > last),
            }
        })
        .collect();

    let total: f64 = per_node.iter().map(|s| s.weight * s.inward_flux).sum();
    let dropped: f64 = per_node.iter().filter(|s| s.masked).map(|s| s.weight * s.inward_flux).sum();
    Ok(BoundaryHeatFlow {
        tag,
        total,
        masked_total: total - dropped,
        mask_count,
        per_node,
    })
}
