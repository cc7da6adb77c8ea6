//! CSV emission, float rendering and run manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::policy::PolicyDescriptor;

/// Renders a float with 9 significant digits, `%.9g` style.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// A CSV table with a fixed header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// UTF-8 CSV with a header row; an empty table is header-only.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }
}

/// Path of the manifest that accompanies a results file.
pub fn manifest_path(result: &Path) -> PathBuf {
    let mut name = result.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    result.with_file_name(name)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Everything needed to reproduce a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub command: String,
    /// Full argument vector; re-running it regenerates every output byte for byte.
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, String>,
    pub model_path: String,
    pub model_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub solver: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub policies: Vec<PolicyDescriptor>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifests always serialize")
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_float(1.536_871_653_340_048_2), "1.53687165");
        assert_eq!(fmt_float(0.5), "0.5");
        assert_eq!(fmt_float(14.0), "14");
        assert_eq!(fmt_float(1e6), "1000000");
        assert_eq!(fmt_float(1e9), "1e+09");
        assert_eq!(fmt_float(6.342e-7), "6.342e-07");
        assert_eq!(fmt_float(-0.000_123_456_789_12), "-0.000123456789");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        assert_eq!(fmt_float(123_456_789.4), "123456789");
        assert_eq!(fmt_float(999_999_999.7), "1e+09");
    }

    #[test]
    fn header_only_table() {
        let t = Table::new(["a", "b"]);
        assert_eq!(t.to_csv(), "a,b\n");
        let mut t = Table::new(["name", "certificate"]);
        t.push(vec!["x".into(), "convex, polished".into()]);
        assert_eq!(t.to_csv(), "name,certificate\nx,\"convex, polished\"\n");
    }

    #[test]
    fn manifest_naming() {
        assert_eq!(
            manifest_path(Path::new("out/sweep.csv")),
            PathBuf::from("out/sweep.csv.manifest.toml")
        );
    }
}
