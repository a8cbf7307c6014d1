use crate::config::ParsedConfig;
use crate::evaluate::{format_number, regions, Evaluation, Variant};
use crate::{header, CliError};
use nfcrb::crb::Bound;
use nfcrb::exec::with_threads;
use nfcrb::{ArrayGeometry, Execution, Scene, Target};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    Range,
    Angle,
    Antennas,
    Snapshots,
    Power,
}

impl SweepVar {
    pub const ALL: [SweepVar; 5] = [SweepVar::Range, SweepVar::Angle, SweepVar::Antennas, SweepVar::Snapshots, SweepVar::Power];

    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Range => "range",
            SweepVar::Angle => "angle",
            SweepVar::Antennas => "antennas",
            SweepVar::Snapshots => "snapshots",
            SweepVar::Power => "power",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            SweepVar::Range => "m",
            SweepVar::Angle => "deg",
            SweepVar::Antennas | SweepVar::Snapshots => "count",
            SweepVar::Power => "W",
        }
    }

    pub fn parse(s: &str) -> Option<SweepVar> {
        SweepVar::ALL.into_iter().find(|v| v.name() == s)
    }

    fn integer(self) -> bool {
        matches!(self, SweepVar::Antennas | SweepVar::Snapshots)
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub grid: Vec<f64>,
    pub bounds: Vec<Bound>,
    pub variants: Vec<Variant>,
    /// Zero-based index of the reported target.
    pub target: usize,
}

/// Parses a comma-separated grid.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            let s = s.trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Invalid(format!("grid value `{s}` is not a finite number")))
        })
        .collect()
}

impl SweepSpec {
    pub fn validate(&self, scene: &Scene) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Invalid(m));
        if self.grid.is_empty() {
            return bad("grid is empty".into());
        }
        let up = self.grid.windows(2).all(|w| w[1] > w[0]);
        let down = self.grid.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return bad("grid must be strictly monotone".into());
        }
        if self.var.integer() && self.grid.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return bad(format!("{} grid must hold positive integers", self.var.name()));
        }
        if self.bounds.is_empty() || self.variants.is_empty() {
            return bad("at least one bound and one variant are required".into());
        }
        if self.target >= scene.num_targets() {
            return bad(format!("target {} does not exist (scene has {})", self.target + 1, scene.num_targets()));
        }
        Ok(())
    }

    fn columns(&self) -> Vec<String> {
        let mut cols = vec![self.var.name().to_string()];
        for b in &self.bounds {
            for v in &self.variants {
                cols.push(format!("{}_{}", b.name(), v.name()));
            }
        }
        for b in &self.bounds {
            for v in self.variants.iter().filter(|v| v.has_relerr()) {
                cols.push(format!("relerr_{}_{}", b.name(), v.name()));
            }
        }
        if self.variants.contains(&Variant::Full) {
            cols.push("cond_full".into());
        }
        cols.extend(["region_tx", "region_rx", "error"].map(String::from));
        cols
    }

    /// The base scene with the sweep variable set to `value`.
    pub fn scene_at(&self, base: &Scene, value: f64) -> nfcrb::Result<Scene> {
        let q = self.target;
        match self.var {
            SweepVar::Range | SweepVar::Angle => {
                let t = base.targets()[q];
                let (range, angle) = (t.x.hypot(t.y), t.x.atan2(t.y));
                let (range, angle) = match self.var {
                    SweepVar::Range => (value, angle),
                    _ => (range, value.to_radians()),
                };
                let mut targets = base.targets().to_vec();
                targets[q] = Target { x: range * angle.sin(), y: range * angle.cos(), ..t };
                base.with_targets(targets)
            }
            SweepVar::Antennas => {
                let n = value as usize;
                let (tx, rx) = (base.tx(), base.rx());
                let tx = ArrayGeometry::ula(n, tx.spacing(), tx.centroid_x())?;
                let rx = ArrayGeometry::ula(n, rx.spacing(), rx.centroid_x())?;
                base.modified(|c| {
                    c.tx = tx;
                    c.rx = rx;
                })
            }
            SweepVar::Snapshots => base.modified(|c| c.snapshots = value as usize),
            SweepVar::Power => base.modified(|c| c.power_w = value),
        }
    }

    fn row(&self, base: &Scene, value: f64) -> Vec<String> {
        let mut row = vec![format_number(value)];
        let width = self.columns().len();
        let evaluated = self.scene_at(base, value).and_then(|s| {
            let e = Evaluation::new(&s, self.variants.contains(&Variant::Full))?;
            Ok((s, e))
        });
        let (scene, eval) = match evaluated {
            Ok(pair) => pair,
            Err(e) => {
                row.resize(width - 1, String::new());
                row.push(e.to_string());
                return row;
            }
        };
        let mut errors = Vec::new();
        let mut relerrs = Vec::new();
        for &b in &self.bounds {
            for &v in &self.variants {
                let c = eval.cell(&scene, self.target, b, v);
                row.push(c.value.map(format_number).unwrap_or_default());
                if v.has_relerr() {
                    relerrs.push(c.relerr.map(format_number).unwrap_or_default());
                }
                if let Some(e) = c.error {
                    if !errors.contains(&e) {
                        errors.push(e);
                    }
                }
            }
        }
        row.extend(relerrs);
        if let Some(full) = &eval.full {
            let cond = full.as_ref().ok().and_then(|r| r.condition_number);
            row.push(cond.map(format_number).unwrap_or_default());
        }
        let (rt, rr) = regions(&scene, &scene.targets()[self.target]);
        row.push(rt);
        row.push(rr);
        row.push(errors.join("; "));
        row
    }
}

/// Evaluates the grid (in parallel when enabled) and writes rows in grid
/// order. `threads` pins the worker count.
pub fn run_sweep(config: &ParsedConfig, spec: &SweepSpec, threads: Option<usize>, out: &mut dyn Write) -> Result<(), CliError> {
    let base = &config.scene;
    spec.validate(base)?;
    let compute = || Execution::Parallel.map(spec.grid.len(), |i| spec.row(base, spec.grid[i]));
    let rows = match threads {
        Some(n) => with_threads(n, compute),
        None => compute(),
    };
    header(out, "sweep", config)?;
    writeln!(
        out,
        "# var={} units={} target={} bounds={} variants={}",
        spec.var.name(),
        spec.var.units(),
        spec.target + 1,
        spec.bounds.iter().map(|b| b.name()).collect::<Vec<_>>().join(","),
        spec.variants.iter().map(|v| v.name()).collect::<Vec<_>>().join(","),
    )?;
    writeln!(out, "# bounds are variances in SI units squared; relerr = |approx - exact| / exact")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(spec.columns())?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
