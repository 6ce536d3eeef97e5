//! Refinement study of the hot-top half-square: solve at each element size,
//! integrate the top-edge heat flow with and without masking of the singular
//! corner, compare temperatures with the series solution and judge the 1 %
//! heat-flow and 0.1 °C temperature criteria.

use crate::analytic::{Case1Exact, ReferencePoint};
use crate::element::ElementOrder;
use crate::fem::{assemble, assemble_with_fixed, solve, BoundarySpec, Material, TemperatureField};
use crate::flux::{boundary_heat_flow, recover_nodal_flux, BoundaryHeatFlow, FluxField};
use crate::mesh::{build_graded_grid, build_uniform_grid, Corner, EdgeTag, Mesh};
use crate::sparse::SolverKind;
use crate::Error;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io;
use std::time::Instant;
use thiserror::Error;

/// Half-domain width (symmetry plane to cold side), metres.
pub const WIDTH: f64 = 0.2;
/// Height (cold bottom to hot top), metres.
pub const HEIGHT: f64 = 0.4;
pub const DEFAULT_H_SEQUENCE: [f64; 5] = [0.02, 0.01, 0.005, 0.0025, 0.00125];
pub const EXTENDED_H_SEQUENCE: [f64; 7] = [0.02, 0.01, 0.005, 0.0025, 0.00125, 0.000625, 0.0003125];
/// Spacing of the reference temperature grid, metres.
pub const REFERENCE_SPACING: f64 = 0.05;

pub const CSV_HEADER: [&str; 8] = [
    "h_cm",
    "nodes",
    "Q_total_W_per_m",
    "Q_masked_W_per_m",
    "q_marginal_W_per_m2",
    "dQ_rel",
    "dQ_masked_rel",
    "max_temp_dev_C",
];

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    InvalidConfig(String),
    #[error("relative difference undefined: finer-mesh heat flow is zero")]
    DivisionDomain,
    #[error("level h = {h} m failed: {source}")]
    LevelFailed {
        h: f64,
        #[source]
        source: Box<Error>,
        partial: Box<ConvergenceReport>,
    },
}

/// Refinement study parameters. Serialized with flat keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Element sizes, metres, strictly decreasing.
    pub h_sequence: Vec<f64>,
    pub element_order: ElementOrder,
    /// Nodes dropped next to the singular corner in the masked total.
    pub mask_count: usize,
    pub corner_rule: Vec<EdgeTag>,
    /// Allowed relative heat-flow change between successive levels.
    pub flux_tolerance: f64,
    /// Allowed temperature deviation from the reference, °C.
    pub temp_tolerance: f64,
    pub conductivity: f64,
    pub solver: SolverKind,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            h_sequence: DEFAULT_H_SEQUENCE.to_vec(),
            element_order: ElementOrder::Linear,
            mask_count: 1,
            corner_rule: BoundarySpec::case1().corner_rule,
            flux_tolerance: 0.01,
            temp_tolerance: 0.1,
            conductivity: 1.0,
            solver: SolverKind::Cholesky,
        }
    }
}

/// Cell count for `length` at element size `h`, if `h` divides it.
pub fn cells_for(length: f64, h: f64) -> Option<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return None;
    }
    let n = length / h;
    let r = n.round();
    ((n - r).abs() <= 1e-9 * r.max(1.0) && r >= 1.0).then_some(r as usize)
}

impl StudyConfig {
    pub fn extended() -> Self {
        StudyConfig { h_sequence: EXTENDED_H_SEQUENCE.to_vec(), ..Default::default() }
    }

    pub fn boundary_spec(&self) -> BoundarySpec {
        BoundarySpec::case1_with_rule(self.corner_rule.clone())
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        let bad = |m: String| Err(StudyError::InvalidConfig(m));
        if self.h_sequence.is_empty() {
            return bad("h_sequence is empty".into());
        }
        if self.h_sequence.windows(2).any(|w| !(w[1] < w[0])) {
            return bad("h_sequence must be strictly decreasing".into());
        }
        for &h in &self.h_sequence {
            let (Some(nx), Some(_)) = (cells_for(WIDTH, h), cells_for(HEIGHT, h)) else {
                return bad(format!("element size {h} m does not divide {WIDTH} m x {HEIGHT} m"));
            };
            let top_nodes = match self.element_order {
                ElementOrder::Linear => nx + 1,
                ElementOrder::Serendipity => 2 * nx + 1,
            };
            if 2 * self.mask_count > top_nodes {
                return bad(format!(
                    "mask_count {} exceeds half of the {top_nodes} top-edge nodes at h = {h} m",
                    self.mask_count
                ));
            }
        }
        if !(self.flux_tolerance > 0.0) || !(self.temp_tolerance > 0.0) {
            return bad("tolerances must be positive".into());
        }
        Material::new(self.conductivity).map_err(|e| StudyError::InvalidConfig(e.to_string()))?;
        self.boundary_spec().validate().map_err(|e| StudyError::InvalidConfig(e.to_string()))?;
        Ok(())
    }
}

/// One refinement level of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Element size, metres.
    pub h: f64,
    pub nodes: usize,
    /// Unmasked top-edge heat flow, W/m.
    pub q_total: f64,
    /// Masked top-edge heat flow, W/m.
    pub q_masked: f64,
    /// Inward flux density at the singular corner node, W/m².
    pub q_marginal: f64,
    pub d_q_rel: Option<f64>,
    pub d_q_masked_rel: Option<f64>,
    /// max |T_FEM − T_exact| over the reference points, °C.
    pub max_temp_dev: f64,
    pub relative_residual: f64,
}

impl ReportRow {
    pub fn h_cm(&self) -> f64 {
        (self.h * 100.0 * 1e9).round() / 1e9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdicts {
    /// Final unmasked successive difference within the flux tolerance.
    pub flux_converged: bool,
    /// Final masked successive difference within the flux tolerance.
    pub masked_flux_converged: bool,
    /// Final level's temperature deviation within the temperature tolerance.
    pub temperature_within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// How successive differences are normalized.
    pub difference_normalization: String,
    pub reference_points: usize,
    /// Seconds per level, in row order. Not reproducible between runs.
    pub wall_clock_s: Vec<f64>,
    /// Max nodal error of a linear-field patch test on a graded mesh of the
    /// study's element order.
    pub patch_test_max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub config: StudyConfig,
    pub rows: Vec<ReportRow>,
    pub verdicts: Verdicts,
    pub metadata: ReportMetadata,
    /// Top-edge flux profile per level (not serialized).
    #[serde(skip)]
    pub profiles: Vec<BoundaryHeatFlow>,
}

#[derive(Serialize)]
struct CsvRow {
    h_cm: f64,
    nodes: usize,
    #[serde(rename = "Q_total_W_per_m")]
    q_total: f64,
    #[serde(rename = "Q_masked_W_per_m")]
    q_masked: f64,
    #[serde(rename = "q_marginal_W_per_m2")]
    q_marginal: f64,
    #[serde(rename = "dQ_rel")]
    d_q_rel: Option<f64>,
    #[serde(rename = "dQ_masked_rel")]
    d_q_masked_rel: Option<f64>,
    #[serde(rename = "max_temp_dev_C")]
    max_temp_dev: f64,
}

impl ConvergenceReport {
    /// Verdicts implied by the rows and tolerances.
    pub fn evaluate_verdicts(&self) -> Verdicts {
        let last = self.rows.last();
        let within = |d: Option<f64>| d.is_some_and(|d| d <= self.config.flux_tolerance);
        Verdicts {
            flux_converged: within(last.and_then(|r| r.d_q_rel)),
            masked_flux_converged: within(last.and_then(|r| r.d_q_masked_rel)),
            temperature_within_tolerance: last.is_some_and(|r| r.max_temp_dev <= self.config.temp_tolerance),
        }
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        if self.rows.is_empty() {
            w.write_record(CSV_HEADER)?;
        }
        for r in &self.rows {
            w.serialize(CsvRow {
                h_cm: r.h_cm(),
                nodes: r.nodes,
                q_total: r.q_total,
                q_masked: r.q_masked,
                q_marginal: r.q_marginal,
                d_q_rel: r.d_q_rel,
                d_q_masked_rel: r.d_q_masked_rel,
                max_temp_dev: r.max_temp_dev,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Per-node top-edge flux for every level.
    pub fn write_profile_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["h_cm", "x_m", "q_inward_W_per_m2", "weight_m", "masked"])?;
        for (row, profile) in self.rows.iter().zip(&self.profiles) {
            for s in &profile.per_node {
                w.write_record(&[
                    row.h_cm().to_string(),
                    s.position.to_string(),
                    s.inward_flux.to_string(),
                    s.weight.to_string(),
                    s.masked.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

/// |fine − coarse| / fine.
pub fn compare_subdivisions(coarse: f64, fine: f64) -> Result<f64, StudyError> {
    if fine == 0.0 {
        return Err(StudyError::DivisionDomain);
    }
    Ok((fine - coarse).abs() / fine.abs())
}

/// Everything computed for one element size.
#[derive(Debug, Clone)]
pub struct Case1Solution {
    pub mesh: Mesh,
    pub bc: BoundarySpec,
    pub field: TemperatureField,
    pub flux: FluxField,
    /// Top-edge heat flow with the configured mask.
    pub heat_flow: BoundaryHeatFlow,
}

impl Case1Solution {
    /// Inward flux density at the singular corner node of the top edge.
    pub fn marginal_flux(&self) -> f64 {
        self.heat_flow.corner_flux(Corner::TopRight).unwrap_or(f64::NAN)
    }

    /// Largest deviation from `reference` at the reference points.
    pub fn max_deviation(&self, reference: &[ReferencePoint]) -> f64 {
        reference
            .iter()
            .map(|p| {
                let fem = self.field.value_at(&self.mesh, p.x, p.y).unwrap_or(f64::NAN);
                (fem - p.temperature).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Meshes, solves and post-processes the half-square at element size `h`.
pub fn solve_case1(h: f64, config: &StudyConfig) -> Result<Case1Solution, Error> {
    let nx = cells_for(WIDTH, h).ok_or_else(|| StudyError::InvalidConfig(format!("{h} m does not divide {WIDTH} m")))?;
    let ny = cells_for(HEIGHT, h).ok_or_else(|| StudyError::InvalidConfig(format!("{h} m does not divide {HEIGHT} m")))?;
    let mesh = build_uniform_grid(WIDTH, HEIGHT, nx, ny, config.element_order)?;
    let material = Material::new(config.conductivity)?;
    let bc = config.boundary_spec();
    let system = assemble(&mesh, &material, &bc)?.with_solver(config.solver);
    let field = solve(&system)?;
    let flux = recover_nodal_flux(&mesh, &field, &material)?;
    let heat_flow = boundary_heat_flow(&mesh, &flux, &bc, EdgeTag::Top, config.mask_count)?;
    Ok(Case1Solution { mesh, bc, field, flux, heat_flow })
}

struct LevelOutcome {
    row: ReportRow,
    seconds: f64,
    profile: BoundaryHeatFlow,
}

fn run_level(h: f64, config: &StudyConfig, reference: &[ReferencePoint]) -> Result<LevelOutcome, Error> {
    let start = Instant::now();
    let sol = solve_case1(h, config)?;
    let row = ReportRow {
        h,
        nodes: sol.mesh.node_count(),
        q_total: sol.heat_flow.total,
        q_masked: sol.heat_flow.masked_total,
        q_marginal: sol.marginal_flux(),
        d_q_rel: None,
        d_q_masked_rel: None,
        max_temp_dev: sol.max_deviation(reference),
        relative_residual: sol.field.relative_residual,
    };
    Ok(LevelOutcome { row, seconds: start.elapsed().as_secs_f64(), profile: sol.heat_flow })
}

fn build_report(config: &StudyConfig, outcomes: Vec<LevelOutcome>, patch_error: f64, reference_points: usize) -> ConvergenceReport {
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut wall_clock_s = Vec::with_capacity(outcomes.len());
    let mut profiles = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        rows.push(o.row);
        wall_clock_s.push(o.seconds);
        profiles.push(o.profile);
    }
    for i in 1..rows.len() {
        let (prev_total, prev_masked) = (rows[i - 1].q_total, rows[i - 1].q_masked);
        rows[i].d_q_rel = compare_subdivisions(prev_total, rows[i].q_total).ok();
        rows[i].d_q_masked_rel = compare_subdivisions(prev_masked, rows[i].q_masked).ok();
    }
    let mut report = ConvergenceReport {
        config: config.clone(),
        rows,
        verdicts: Verdicts { flux_converged: false, masked_flux_converged: false, temperature_within_tolerance: false },
        metadata: ReportMetadata {
            difference_normalization: "finer".into(),
            reference_points,
            wall_clock_s,
            patch_test_max_error: patch_error,
        },
        profiles,
    };
    report.verdicts = report.evaluate_verdicts();
    report
}

/// Runs the refinement study. Levels are independent and may be solved
/// concurrently; rows always come out in `h_sequence` order.
pub fn run_case1(config: &StudyConfig) -> Result<ConvergenceReport, StudyError> {
    config.validate()?;
    let exact = Case1Exact { conductivity: config.conductivity, ..Default::default() };
    let reference = exact
        .reference_grid(REFERENCE_SPACING)
        .map_err(|e| StudyError::InvalidConfig(e.to_string()))?;
    let patch_error = patch_test_error(config.element_order, true).unwrap_or(f64::NAN);

    let results: Vec<Result<LevelOutcome, Error>> = config
        .h_sequence
        .par_iter()
        .map(|&h| run_level(h, config, &reference))
        .collect();

    let mut done = Vec::with_capacity(results.len());
    for (result, &h) in results.into_iter().zip(&config.h_sequence) {
        match result {
            Ok(o) => done.push(o),
            Err(e) => {
                let partial = build_report(config, done, patch_error, reference.len());
                return Err(StudyError::LevelFailed { h, source: Box::new(e), partial: Box::new(partial) });
            }
        }
    }
    Ok(build_report(config, done, patch_error, reference.len()))
}

/// The same study with 8-node serendipity elements.
pub fn serendipity_study(config: &StudyConfig) -> Result<ConvergenceReport, StudyError> {
    run_case1(&StudyConfig { element_order: ElementOrder::Serendipity, ..config.clone() })
}

/// Prescribes T = 1 + 30x − 12y on the boundary of a (graded) mesh and
/// returns the largest interior nodal error.
pub fn patch_test_error(order: ElementOrder, graded: bool) -> Result<f64, Error> {
    let exact = |p: [f64; 2]| 1.0 + 30.0 * p[0] - 12.0 * p[1];
    let mesh = if graded {
        build_graded_grid(WIDTH, HEIGHT, 6, 9, 1.4, Corner::TopRight, order)?
    } else {
        build_uniform_grid(WIDTH, HEIGHT, 6, 9, order)?
    };
    let mut fixed = vec![None; mesh.node_count()];
    for tag in EdgeTag::ALL {
        for &n in mesh.boundary_nodes(tag) {
            fixed[n] = Some(exact(mesh.node(n)));
        }
    }
    let field = solve(&assemble_with_fixed(&mesh, &Material::default(), fixed)?)?;
    Ok(mesh
        .nodes()
        .iter()
        .zip(&field.values)
        .map(|(&p, v)| (v - exact(p)).abs())
        .fold(0.0, f64::max))
}
