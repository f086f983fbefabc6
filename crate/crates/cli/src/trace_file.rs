//! Trace CSV files: `#`-prefixed `key: value` metadata lines, a header row,
//! then one row per recorded draw.

use std::path::Path;

use crate::error::{CliError, CliResult};

/// Columns every trace starts with.
pub const CHAIN_COLUMN: &str = "chain";
pub const ITERATION_COLUMN: &str = "iteration";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TraceFile {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

/// A chain id and its rows.
pub type ChainRows = (u64, Vec<Vec<f64>>);

impl TraceFile {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut out = Vec::new();
        for (k, v) in &self.metadata {
            out.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CliError::Runtime(format!("formatting trace: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| fmt_f64(v))).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, String> {
        let mut metadata = Vec::new();
        let mut body = 0;
        for line in bytes.split_inclusive(|&b| b == b'\n') {
            let Some(rest) = line.strip_prefix(b"#") else { break };
            body += line.len();
            let text = String::from_utf8_lossy(rest);
            if let Some((k, v)) = text.trim().split_once(':') {
                metadata.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(&bytes[body..]);
        let columns: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| format!("row {}: {e}", i + 1))?;
            let row = rec
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| format!("row {}: '{c}' is not a number", i + 1)))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Self { metadata, columns, rows })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Input { path: path.into(), source })?;
        Self::parse(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Rows split by the `chain` column, or one chain when it is absent.
    /// The bookkeeping columns are dropped from the result.
    pub fn chains(&self) -> (Vec<String>, Vec<ChainRows>) {
        let chain_at = self.columns.iter().position(|c| c == CHAIN_COLUMN);
        let skip: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| *c == CHAIN_COLUMN || *c == ITERATION_COLUMN)
            .map(|(j, _)| j)
            .collect();
        let names = self.columns.iter().enumerate().filter(|(j, _)| !skip.contains(j)).map(|(_, c)| c.clone()).collect();
        let mut chains: Vec<ChainRows> = Vec::new();
        for row in &self.rows {
            let id = chain_at.map_or(0, |j| row[j] as u64);
            let values: Vec<f64> = row.iter().enumerate().filter(|(j, _)| !skip.contains(j)).map(|(_, v)| *v).collect();
            match chains.iter_mut().find(|(c, _)| *c == id) {
                Some((_, rows)) => rows.push(values),
                None => chains.push((id, vec![values])),
            }
        }
        (names, chains)
    }
}
