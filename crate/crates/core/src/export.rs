//! File writers: legacy ASCII VTK for nodal fields, CSV for nodal fields and
//! reference tables.

use crate::analytic::ReferencePoint;
use crate::fem::TemperatureField;
use crate::mesh::Mesh;
use std::io::{self, Write};

/// Writes corner-node temperatures and nodal flux vectors as a legacy VTK
/// `STRUCTURED_GRID`. Mid-side nodes of serendipity meshes are not part of
/// the structured point set and are omitted.
pub fn write_vtk<W: Write>(
    mut out: W,
    mesh: &Mesh,
    field: &TemperatureField,
    nodal_flux: &[[f64; 2]],
    title: &str,
) -> io::Result<()> {
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let n = (nx + 1) * (ny + 1);
    if field.len() != mesh.node_count() || nodal_flux.len() != mesh.node_count() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "field does not belong to mesh"));
    }
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{title}")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_GRID")?;
    writeln!(out, "DIMENSIONS {} {} 1", nx + 1, ny + 1)?;
    writeln!(out, "POINTS {n} double")?;
    for p in &mesh.nodes()[..n] {
        writeln!(out, "{} {} 0", p[0], p[1])?;
    }
    writeln!(out, "POINT_DATA {n}")?;
    writeln!(out, "SCALARS temperature_C double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for t in &field.values[..n] {
        writeln!(out, "{t}")?;
    }
    writeln!(out, "VECTORS heat_flux_W_per_m2 double")?;
    for q in &nodal_flux[..n] {
        writeln!(out, "{} {} 0", q[0], q[1])?;
    }
    Ok(())
}

/// One CSV row per node: `node,x_m,y_m,T_C,qx_W_per_m2,qy_W_per_m2`.
pub fn write_field_csv<W: Write>(out: W, mesh: &Mesh, field: &TemperatureField, nodal_flux: &[[f64; 2]]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "x_m", "y_m", "T_C", "qx_W_per_m2", "qy_W_per_m2"])?;
    for (i, ((p, t), q)) in mesh.nodes().iter().zip(&field.values).zip(nodal_flux).enumerate() {
        w.write_record(&[
            i.to_string(),
            p[0].to_string(),
            p[1].to_string(),
            t.to_string(),
            q[0].to_string(),
            q[1].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `x_m,y_m,T_C,T_C_rounded`.
pub fn write_reference_csv<W: Write>(out: W, table: &[ReferencePoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x_m", "y_m", "T_C", "T_C_rounded"])?;
    for p in table {
        w.write_record(&[p.x.to_string(), p.y.to_string(), p.temperature.to_string(), format!("{:.1}", p.rounded)])?;
    }
    w.flush()?;
    Ok(())
}
