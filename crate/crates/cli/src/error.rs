use std::fmt;

use thiserror::Error;

/// A problem with a spec file, located by dotted field path and line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecError {
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl SpecError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        SpecError { field: field.into(), line: None, message: message.into() }
    }

    /// Fills in the line from the source text if it is not known yet.
    pub fn at(mut self, text: &str) -> Self {
        if self.line.is_none() {
            self.line = locate(text, &self.field);
        }
        self
    }
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("spec error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if !self.field.is_empty() {
            write!(f, " in `{}`", self.field)?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for SpecError {}

/// 1-based line of a dotted path such as `maps.map[1].matrix` in TOML text.
fn locate(text: &str, field: &str) -> Option<usize> {
    if field.is_empty() {
        return None;
    }
    let parts: Vec<(&str, Option<usize>)> = field
        .split('.')
        .map(|p| match p.split_once('[') {
            Some((name, rest)) => (name, rest.trim_end_matches(']').parse().ok()),
            None => (p, None),
        })
        .collect();
    let lines: Vec<&str> = text.lines().collect();
    let is_header = |l: &str| l.trim_start().starts_with('[');
    let header_name = |l: &str| l.trim().trim_start_matches('[').split(']').next().unwrap_or("").trim().to_string();
    // Header lines (0-based) of a table, or only the `nth` one of an array of tables.
    let headers = |name: &str, nth: Option<usize>| -> Vec<usize> {
        let all = lines.iter().enumerate().filter(|(_, l)| is_header(l) && header_name(l) == name).map(|(i, _)| i);
        match nth {
            Some(k) => all.skip(k).take(1).collect(),
            None => all.collect(),
        }
    };

    let names: Vec<&str> = parts.iter().map(|p| p.0).collect();
    let (key, nth) = *parts.last()?;
    if let Some(&i) = headers(&names.join("."), nth).first() {
        return Some(i + 1);
    }
    let starts = if parts.len() == 1 {
        vec![0]
    } else {
        headers(&names[..names.len() - 1].join("."), parts[parts.len() - 2].1).into_iter().map(|i| i + 1).collect()
    };
    for &start in &starts {
        for (i, l) in lines.iter().enumerate().skip(start) {
            if is_header(l) {
                break;
            }
            if l.split_once('=').is_some_and(|(k, _)| k.trim() == key) {
                return Some(i + 1);
            }
        }
    }
    // fall back to the enclosing table
    starts.first().copied().filter(|&s| s > 0)
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Spec(#[from] SpecError),
    #[error("{0}")]
    Numerical(#[from] affinedim_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0} example check(s) failed")]
    Regression(usize),
}

impl CliError {
    /// 0 success, 1 i/o, 2 bad spec or input, 3 numerical failure, 4 example regression.
    pub fn exit_code(&self) -> i32 {
        use affinedim_core::Error as E;
        match self {
            CliError::Spec(_) | CliError::Usage(_) => 2,
            CliError::Numerical(e) => match e {
                E::NoCertificate(_)
                | E::NoRoot(_)
                | E::NoSignChange { .. }
                | E::IntegrabilityFailure
                | E::DegenerateFit { .. }
                | E::InsufficientSamples(_)
                | E::TooLarge { .. } => 3,
                _ => 2,
            },
            CliError::Regression(_) => 4,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}
