//! Field, error-table and report writers. All floating point output uses 17
//! significant digits so files round-trip bit-exactly.

use std::io::Write;

use serde_json::{json, Value};

use kfbi::grid::{CartesianGrid, GridField, NodeClassification};

use crate::CliError;

/// Format a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a field as CSV: `x,y,value,inside`, one node per line, row-major.
pub fn write_field_csv(
    field: &GridField,
    grid: &CartesianGrid,
    classification: &NodeClassification,
    path: &str,
) -> Result<(), CliError> {
    let mut out = String::with_capacity(field.values().len() * 60);
    out.push_str("x,y,value,inside\n");
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let inside = u8::from(classification.is_interior(i, j));
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f64(grid.x(i)),
                fmt_f64(grid.y(j)),
                fmt_f64(field.get(i, j)),
                inside
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("writing {path}: {e}")))
}

/// Write a field as legacy ASCII VTK structured points, with exterior nodes
/// masked as NaN.
pub fn write_field_vtk(
    field: &GridField,
    grid: &CartesianGrid,
    classification: &NodeClassification,
    path: &str,
) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str("kfbi solution field\n");
    out.push_str("ASCII\n");
    out.push_str("DATASET STRUCTURED_POINTS\n");
    out.push_str(&format!("DIMENSIONS {} {} 1\n", grid.nx(), grid.ny()));
    out.push_str(&format!(
        "ORIGIN {} {} 0\n",
        fmt_f64(grid.x_lo),
        fmt_f64(grid.y_lo)
    ));
    out.push_str(&format!("SPACING {} {} 1\n", fmt_f64(grid.h), fmt_f64(grid.h)));
    out.push_str(&format!("POINT_DATA {}\n", grid.node_count()));
    out.push_str("SCALARS u double 1\n");
    out.push_str("LOOKUP_TABLE default\n");
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            if classification.is_interior(i, j) {
                out.push_str(&fmt_f64(field.get(i, j)));
            } else {
                out.push_str("nan");
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("writing {path}: {e}")))
}

/// One row of the convergence table.
#[derive(Debug, Clone)]
pub struct ErrorRow {
    pub grid: usize,
    pub h: f64,
    /// None marks a failed solve.
    pub e_inf: Option<f64>,
    pub e_l2: Option<f64>,
    pub order_inf: Option<f64>,
    pub order_l2: Option<f64>,
    pub iters: Option<usize>,
}

/// Render the error table as CSV with the fixed header
/// `grid,h,e_inf,e_l2,order_inf,order_l2,iters`.
pub fn error_table_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from("grid,h,e_inf,e_l2,order_inf,order_l2,iters\n");
    for r in rows {
        let field = |v: &Option<f64>| v.map(fmt_f64).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.grid,
            fmt_f64(r.h),
            r.e_inf.map(fmt_f64).unwrap_or_else(|| "failed".into()),
            r.e_l2.map(fmt_f64).unwrap_or_else(|| "failed".into()),
            field(&r.order_inf),
            field(&r.order_l2),
            r.iters.map(|v| v.to_string()).unwrap_or_default(),
        ));
    }
    out
}

/// Error table rows as JSON for the run report.
pub fn error_table_json(rows: &[ErrorRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "grid": r.grid,
                    "h": r.h,
                    "e_inf": r.e_inf,
                    "e_l2": r.e_l2,
                    "order_inf": r.order_inf,
                    "order_l2": r.order_l2,
                    "iters": r.iters,
                })
            })
            .collect(),
    )
}

/// Dump worker messages as JSON lines: one record per message.
pub fn write_audit(records: &[kfbi::partition::MessageRecord], path: &str) -> Result<(), CliError> {
    let mut out = String::with_capacity(records.len() * 80);
    for r in records {
        let tag = match r.tag {
            kfbi::partition::MessageTag::GhostExchange => "ghost-exchange",
            kfbi::partition::MessageTag::BoundaryGather => "boundary-gather",
            kfbi::partition::MessageTag::BoundaryScatter => "boundary-scatter",
            kfbi::partition::MessageTag::Separator => "separator",
        };
        out.push_str(&format!(
            "{}\n",
            json!({
                "tag": tag,
                "from": r.from,
                "to": r.to,
                "scalars": r.scalars,
                "batches": r.batches,
            })
        ));
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("writing {path}: {e}")))
}

/// Write the JSON run report.
pub fn write_report(report: &Value, path: &str) -> Result<(), CliError> {
    let file =
        std::fs::File::create(path).map_err(|e| CliError::Io(format!("creating {path}: {e}")))?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, report)
        .map_err(|e| CliError::Io(format!("writing {path}: {e}")))?;
    writer
        .write_all(b"\n")
        .map_err(|e| CliError::Io(format!("writing {path}: {e}")))
}
