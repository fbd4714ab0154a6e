//! Reading channels and distributions from JSON or CSV files.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::channel::{ChannelMatrix, Distribution, Role};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(untagged)]
enum ChannelFile {
    Wrapped {
        #[serde(rename = "W")]
        w: Vec<Vec<f64>>,
    },
    Bare(Vec<Vec<f64>>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DistributionFile {
    Wrapped { p: Vec<f64> },
    Bare(Vec<f64>),
}

fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            record
                .iter()
                .map(|field| field.parse::<f64>().map_err(|e| Error::Parse(format!("{field:?}: {e}"))))
                .collect()
        })
        .collect()
}

fn looks_like_json(text: &str) -> bool {
    matches!(text.trim_start().chars().next(), Some('{' | '['))
}

/// Parses a channel given as `{"W": [[..]]}`, a bare JSON matrix, or CSV rows.
pub fn parse_channel(text: &str) -> Result<ChannelMatrix> {
    let rows = if looks_like_json(text) {
        match serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))? {
            ChannelFile::Wrapped { w } | ChannelFile::Bare(w) => w,
        }
    } else {
        parse_csv_rows(text)?
    };
    ChannelMatrix::new(&rows)
}

pub fn read_channel(path: &Path) -> Result<ChannelMatrix> {
    parse_channel(&fs::read_to_string(path)?)
}

/// Parses `{"p": [..]}`, a bare JSON array, or a single CSV row.
pub fn parse_distribution(text: &str, role: Role) -> Result<Distribution> {
    let weights = if looks_like_json(text) {
        match serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))? {
            DistributionFile::Wrapped { p } | DistributionFile::Bare(p) => p,
        }
    } else {
        let rows = parse_csv_rows(text)?;
        match rows.as_slice() {
            [row] => row.clone(),
            _ => rows.into_iter().flatten().collect(),
        }
    };
    Distribution::new(weights, role)
}

pub fn read_distribution(path: &Path, role: Role) -> Result<Distribution> {
    parse_distribution(&fs::read_to_string(path)?, role)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_formats_agree() {
        let a = parse_channel(r#"{"W": [[0.9, 0.1], [0.2, 0.8]]}"#).unwrap();
        let b = parse_channel("[[0.9, 0.1], [0.2, 0.8]]").unwrap();
        let c = parse_channel("0.9, 0.1\n0.2,0.8\n").unwrap();
        assert_eq!(a.to_rows(), b.to_rows());
        assert_eq!(a.to_rows(), c.to_rows());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_channel("{\"W\": [[0.5, "), Err(Error::Parse(_))));
        assert!(matches!(parse_channel("0.5,abc\n0.5,0.5"), Err(Error::Parse(_))));
        assert!(matches!(parse_channel("[[0.5, 0.5]]"), Err(Error::NonSquare { .. }) | Err(Error::TooSmall(_))));
    }

    #[test]
    fn distributions() {
        let p = parse_distribution(r#"{"p": [0.25, 0.75]}"#, Role::Input).unwrap();
        assert_eq!(p.weights(), &[0.25, 0.75]);
        let q = parse_distribution("0.5,0.5", Role::Input).unwrap();
        assert_eq!(q.len(), 2);
        assert!(parse_distribution("[0.5, 0.6]", Role::Input).is_err());
    }
}
