//! Numeric CSV tables with a header row.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug)]
pub struct Dataset {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    sha256: String,
}

impl Dataset {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Input { path: path.into(), source })?;
        Self::parse(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let columns: Vec<String> = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
        if columns.is_empty() || columns.iter().any(String::is_empty) {
            return Err("header row has an empty column name".into());
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(format!("duplicate column '{c}'"));
            }
        }
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| e.to_string())?;
            let row = rec
                .iter()
                .zip(&columns)
                .map(|(cell, name)| {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| format!("row {}: column '{name}' holds non-numeric value '{cell}'", i + 1))
                })
                .collect::<Result<Vec<f64>, String>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err("no data rows".into());
        }
        Ok(Self { columns, rows, sha256: hex::encode(Sha256::digest(bytes)) })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn sha256(&self) -> &str {
        &self.sha256
    }

    fn index(&self, name: &str) -> CliResult<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Validation(format!("data has no column '{name}'")))
    }

    pub fn column(&self, name: &str) -> CliResult<DVector<f64>> {
        let j = self.index(name)?;
        Ok(DVector::from_iterator(self.len(), self.rows.iter().map(|r| r[j])))
    }

    pub fn matrix(&self, names: &[String]) -> CliResult<DMatrix<f64>> {
        let idx = names.iter().map(|n| self.index(n)).collect::<CliResult<Vec<_>>>()?;
        Ok(DMatrix::from_fn(self.len(), idx.len(), |i, j| self.rows[i][idx[j]]))
    }

    /// Every column except `excluded`, in file order.
    pub fn remaining(&self, excluded: &[&str]) -> Vec<String> {
        self.columns.iter().filter(|c| !excluded.contains(&c.as_str())).cloned().collect()
    }

    /// 0/1 responses as booleans.
    pub fn binary(&self, name: &str) -> CliResult<Vec<bool>> {
        self.column(name)?
            .iter()
            .map(|&v| match v {
                0.0 => Ok(false),
                1.0 => Ok(true),
                _ => Err(CliError::Validation(format!("column '{name}' must hold 0 or 1, found {v}"))),
            })
            .collect()
    }

    /// Nonnegative integer counts.
    pub fn counts(&self, name: &str) -> CliResult<Vec<u32>> {
        self.column(name)?
            .iter()
            .map(|&v| {
                if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                    Ok(v as u32)
                } else {
                    Err(CliError::Validation(format!("column '{name}' must hold nonnegative integers, found {v}")))
                }
            })
            .collect()
    }
}
