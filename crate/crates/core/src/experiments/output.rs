//! Output files.
//!
//! * Diagnostics CSV: `#`-prefixed header holding the resolved config, one
//!   column line, then one row per record. Floats use the shortest decimal
//!   string that round-trips.
//! * `CHSNAP1` snapshot: one ASCII line `CHSNAP1 ndim n1 [n2 n3] L1 [L2 L3] t`,
//!   then the φ block and the σ block as little-endian binary64, x fastest.
//! * Summary: one JSON document.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::State;

use super::ExpError;

pub const SNAPSHOT_MAGIC: &str = "CHSNAP1";
pub const TRUNCATION_MARKER: &str = "# TRUNCATED";

fn io_err(path: &Path, e: std::io::Error) -> ExpError {
    ExpError::Io(format!("{}: {e}", path.display()))
}

/// Shortest round-trip decimal form of `x`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writer for any table with a config header.
pub struct CsvWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl CsvWriter {
    pub fn create(path: &Path, title: &str, config_ini: &str, columns: &[&str]) -> Result<CsvWriter, ExpError> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = CsvWriter {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        };
        let mut header = format!("# chlab {title}\n# config begin\n");
        for line in config_ini.lines() {
            header.push_str("# ");
            header.push_str(line);
            header.push('\n');
        }
        header.push_str("# config end\n");
        header.push_str(&columns.join(","));
        header.push('\n');
        w.raw(&header)?;
        Ok(w)
    }

    fn raw(&mut self, s: &str) -> Result<(), ExpError> {
        self.out.write_all(s.as_bytes()).map_err(|e| io_err(&self.path, e))
    }

    pub fn row_f64(&mut self, values: &[f64]) -> Result<(), ExpError> {
        let line = values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",");
        self.raw(&line)?;
        self.raw("\n")
    }

    pub fn record(&mut self, r: &DiagnosticsRecord) -> Result<(), ExpError> {
        let line = format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(r.t),
            fmt_f64(r.phi_mean),
            fmt_f64(r.sigma_mean),
            fmt_f64(r.e),
            fmt_f64(r.f),
            fmt_f64(r.d),
            fmt_f64(r.energy_balance_residual),
            fmt_f64(r.min_phi),
            fmt_f64(r.max_phi),
            fmt_f64(r.delta),
            r.newton_iters,
            fmt_f64(r.htilde_sup)
        );
        self.raw(&line)
    }

    pub fn truncate_marker(&mut self, t: f64) -> Result<(), ExpError> {
        self.raw(&format!("{TRUNCATION_MARKER} at t = {}\n", fmt_f64(t)))
    }

    pub fn finish(mut self) -> Result<(), ExpError> {
        self.out.flush().map_err(|e| io_err(&self.path, e))
    }
}

/// Parsed diagnostics CSV.
#[derive(Clone, Debug, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub truncated: bool,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_csv(path: &Path) -> Result<CsvTable, ExpError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut t = CsvTable::default();
    for (k, line) in text.lines().enumerate() {
        if let Some(h) = line.strip_prefix('#') {
            if line.starts_with(TRUNCATION_MARKER) {
                t.truncated = true;
            }
            t.header.push(h.trim_start().to_string());
        } else if t.columns.is_empty() {
            t.columns = line.split(',').map(str::to_string).collect();
        } else {
            let row = line
                .split(',')
                .map(|v| v.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| ExpError::Io(format!("{}:{}: malformed row", path.display(), k + 1)))?;
            if row.len() != t.columns.len() {
                return Err(ExpError::Io(format!("{}:{}: wrong column count", path.display(), k + 1)));
            }
            t.rows.push(row);
        }
    }
    Ok(t)
}

/// Contents of a `CHSNAP1` file.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub n: Vec<usize>,
    pub lengths: Vec<f64>,
    pub t: f64,
    pub phi: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl Snapshot {
    pub fn from_state(state: &State) -> Snapshot {
        let g = state.phi.grid();
        Snapshot {
            n: g.n_per_axis().to_vec(),
            lengths: g.length_per_axis().to_vec(),
            t: state.t,
            phi: state.phi.values().to_vec(),
            sigma: state.sigma.values().to_vec(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut head = format!("{SNAPSHOT_MAGIC} {}", self.n.len());
        for n in &self.n {
            head.push_str(&format!(" {n}"));
        }
        for l in &self.lengths {
            head.push_str(&format!(" {}", fmt_f64(*l)));
        }
        head.push_str(&format!(" {}\n", fmt_f64(self.t)));
        let mut bytes = head.into_bytes();
        bytes.reserve(8 * (self.phi.len() + self.sigma.len()));
        for v in self.phi.iter().chain(&self.sigma) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Snapshot, ExpError> {
        let corrupt = |m: &str| ExpError::Io(format!("corrupt snapshot: {m}"));
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| corrupt("missing header line"))?;
        let head = std::str::from_utf8(&bytes[..nl]).map_err(|_| corrupt("header is not ASCII"))?;
        let mut parts = head.split(' ');
        if parts.next() != Some(SNAPSHOT_MAGIC) {
            return Err(corrupt("bad magic"));
        }
        let ndim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|d| (1..=3).contains(d))
            .ok_or_else(|| corrupt("bad ndim"))?;
        let n = (0..ndim)
            .map(|_| parts.next().and_then(|s| s.parse::<usize>().ok()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| corrupt("bad sizes"))?;
        let lengths = (0..ndim)
            .map(|_| parts.next().and_then(|s| s.parse::<f64>().ok()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| corrupt("bad lengths"))?;
        let t: f64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| corrupt("bad time"))?;
        if parts.next().is_some() {
            return Err(corrupt("trailing header fields"));
        }
        let count: usize = n.iter().product();
        let body = &bytes[nl + 1..];
        if body.len() != 16 * count {
            return Err(corrupt(&format!("expected {} data bytes, found {}", 16 * count, body.len())));
        }
        let vals: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        let (phi, sigma) = vals.split_at(count);
        Ok(Snapshot {
            n,
            lengths,
            t,
            phi: phi.to_vec(),
            sigma: sigma.to_vec(),
        })
    }
}

pub fn write_snapshot(path: &Path, state: &State) -> Result<(), ExpError> {
    std::fs::write(path, Snapshot::from_state(state).to_bytes()).map_err(|e| io_err(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, ExpError> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io_err(path, e))?;
    Snapshot::from_bytes(&bytes)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExpError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExpError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Grid, ScalarField};

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let g = Grid::new(&[5, 3], &[1.0, 0.3]).unwrap();
        let phi = ScalarField::from_fn(&g, |x| (x[0] * 7.1).sin() / 3.0);
        let sigma = ScalarField::from_fn(&g, |x| x[1] * 1e-300 + 0.1);
        let s = State::new(phi, sigma).unwrap().at_time(0.1 + 0.2);
        let bytes = Snapshot::from_state(&s).to_bytes();
        assert!(bytes.starts_with(b"CHSNAP1 2 5 3 1.0 0.3 0.30000000000000004\n"));
        let back = Snapshot::from_bytes(&bytes).unwrap();
        assert_eq!(back, Snapshot::from_state(&s));
        assert!(Snapshot::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[6] = b'2';
        assert!(Snapshot::from_bytes(&bad).is_err());
    }

    #[test]
    fn shortest_round_trip_floats() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }
}
