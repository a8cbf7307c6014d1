use crate::config::ParsedConfig;
use crate::evaluate::{format_number, regions, Evaluation, Variant};
use crate::{header, CliError};
use nfcrb::crb::Bound;
use std::io::Write;

/// Writes every bound of every target under every variant as long-form CSV
/// (`target,bound,variant,value,relerr,error`) preceded by `#` metadata.
pub fn run_eval(config: &ParsedConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let scene = &config.scene;
    let eval = Evaluation::new(scene, true).map_err(|e| CliError::Invalid(e.to_string()))?;
    header(out, "eval", config)?;
    writeln!(out, "# exact: reciprocal Fisher diagonal; full: diagonal of the inverse Fisher matrix")?;
    if let Some(note) = eval.conditioning_note() {
        writeln!(out, "# {note}")?;
    }
    for w in scene.warnings() {
        writeln!(out, "# warning: {w}")?;
    }
    for (q, t) in scene.targets().iter().enumerate() {
        let (rt, rr) = regions(scene, t);
        writeln!(
            out,
            "# target {}: x={} y={} vx={} vy={} region_tx={rt} region_rx={rr}",
            q + 1,
            format_number(t.x),
            format_number(t.y),
            format_number(t.vx),
            format_number(t.vy),
        )?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["target", "bound", "variant", "value", "relerr", "error"])?;
    for q in 0..scene.num_targets() {
        for bound in Bound::ALL {
            for variant in Variant::ALL {
                let c = eval.cell(scene, q, bound, variant);
                w.write_record([
                    (q + 1).to_string(),
                    bound.name().to_string(),
                    variant.name().to_string(),
                    c.value.map(format_number).unwrap_or_default(),
                    c.relerr.map(format_number).unwrap_or_default(),
                    c.error.unwrap_or_default(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
