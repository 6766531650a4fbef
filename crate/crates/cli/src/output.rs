use std::path::Path;

use crate::error::CliError;
use crate::report::RunReport;

/// One CSV artifact: fixed header, `.` decimals, LF line endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file_name: &'static str, header: &[&'static str]) -> Self {
        Table { file_name, header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

/// Report plus CSV artifacts of one command.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: RunReport,
    pub tables: Vec<Table>,
}

impl Outcome {
    /// Writes `report.json` and every table into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        let mut json = self.report.to_json()?;
        json.push('\n');
        std::fs::write(dir.join("report.json"), json)?;
        for t in &self.tables {
            std::fs::write(dir.join(t.file_name), t.to_csv()?)?;
        }
        Ok(())
    }
}

/// Shortest round-trip decimal; `inf`, `-inf` for infinities.
pub fn num(x: impl std::fmt::Display) -> String {
    x.to_string()
}

/// Short human-readable digest of a report.
pub fn render_text(r: &RunReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    if let Some(a) = &r.analyze {
        match a.entropy.value() {
            Some(h) => writeln!(out, "entropy            {h}"),
            None => writeln!(out, "entropy            inf"),
        }
        .ok();
        if let Some(s) = &a.spectrum {
            let ex: Vec<String> = s.exponents().iter().map(|e| e.to_string()).collect();
            writeln!(out, "lyapunov exponents {}", ex.join(" ")).ok();
        }
        if let Some(d) = &a.lyapunov_dimension {
            writeln!(out, "dim_LY             {} (jump: {})", d.value, d.discontinuity_hit).ok();
        }
        if let Some(t) = a.theorem_applicable {
            writeln!(out, "sup norm < 1/2     {t}").ok();
        }
        if let Some(s) = &a.s_infinity {
            writeln!(out, "s_infinity         {}", s.value()).ok();
        }
    }
    if let Some(p) = &r.pressure {
        writeln!(out, "max level          {}", p.max_level).ok();
        writeln!(out, "zero of pressure   {} in [{}, {}] (jump: {})", p.zero.root, p.zero.bracket.0, p.zero.bracket.1, p.zero.jump)
            .ok();
        writeln!(out, "s_infinity         {}", p.s_infinity.value()).ok();
    }
    if let Some(s) = &r.simulate {
        if let Some(t) = s.target {
            writeln!(out, "target min(d, dim_LY) {t}").ok();
        }
        for d in &s.draws {
            let flag = if d.exceptional { "  exceptional" } else { "" };
            writeln!(out, "draw {:>3} {:<6} median {:.4} iqr {:.4}{flag}", d.index, format!("{:?}", d.kind).to_lowercase(), d.median, d.iqr)
                .ok();
        }
        if let Some(pe) = &s.projection_entropy {
            writeln!(out, "projection entropy {} (bin width {})", pe.estimate, pe.width).ok();
        }
        if let Some(f) = &s.feng_bounds {
            writeln!(out, "dimension bounds   [{}, {}]", f.lower, f.upper).ok();
        }
    }
    if let Some(e) = &r.examples {
        for c in &e.checks {
            let status = match (c.passed, c.informational) {
                (true, _) => "pass",
                (false, true) => "info",
                (false, false) => "FAIL",
            };
            writeln!(out, "{status}  {:<13} {:<16} expected {:<36} got {}", c.example, c.check, c.expected, c.observed).ok();
        }
        writeln!(out, "{} failure(s)", e.failures).ok();
    }
    for n in &r.notes {
        writeln!(out, "note: {n}").ok();
    }
    out
}
