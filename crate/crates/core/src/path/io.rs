//! CSV + JSON manifest storage for paths.
//!
//! The CSV carries a `t,value[,value2,...]` header and one breakpoint per row
//! (a linear-mode jump takes two rows at the same time, left limit first).
//! Numbers are written with 17 significant digits, which round-trips doubles
//! exactly. The manifest records the interpolation mode and `x(0-)`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CadlagPath, Interpolation};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathManifest {
    pub mode: Interpolation,
    pub dim: usize,
    /// CSV file name, relative to the manifest.
    pub csv: String,
    pub initial_value: Vec<f64>,
}

/// 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv<T: Scalar, W: Write>(path: &CadlagPath<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "value".to_string()];
    header.extend((2..=path.dim()).map(|c| format!("value{c}")));
    w.write_record(&header)?;
    for (t, v) in path.to_rows() {
        let mut rec = vec![fmt_num(t.as_f64())];
        rec.extend(v.iter().map(|x| fmt_num(x.as_f64())));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: Scalar, R: Read>(
    input: R,
    mode: Interpolation,
    initial: Option<Vec<T>>,
) -> Result<CadlagPath<T>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() < 2 || &header[0] != "t" || &header[1] != "value" {
        return Err(Error::InvalidPath(format!("unexpected CSV header {header:?}")));
    }
    let dim = header.len() - 1;
    let parse = |s: &str| -> Result<T> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|e| Error::InvalidPath(format!("bad number {s:?}: {e}")))?;
        T::from_f64(v).ok_or_else(|| Error::InvalidPath(format!("{v} not representable")))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let t = parse(&rec[0])?;
        let vals = (1..=dim).map(|c| parse(&rec[c])).collect::<Result<Vec<T>>>()?;
        rows.push((t, vals));
    }
    CadlagPath::from_rows(mode, dim, &rows, initial)
}

/// Writes `<stem>.csv` and the `<stem>.json` manifest into `dir`; returns the
/// manifest path.
pub fn write_path<T: Scalar>(path: &CadlagPath<T>, dir: &Path, stem: &str) -> Result<std::path::PathBuf> {
    fs::create_dir_all(dir)?;
    let csv_name = format!("{stem}.csv");
    write_csv(path, fs::File::create(dir.join(&csv_name))?)?;
    let manifest = PathManifest {
        mode: path.mode(),
        dim: path.dim(),
        csv: csv_name,
        initial_value: path.initial().iter().map(|v| v.as_f64()).collect(),
    };
    let mpath = dir.join(format!("{stem}.json"));
    fs::write(&mpath, serde_json::to_string_pretty(&manifest)?)?;
    Ok(mpath)
}

/// Reads a path from its JSON manifest.
pub fn read_path<T: Scalar>(manifest: &Path) -> Result<CadlagPath<T>> {
    let m: PathManifest = serde_json::from_str(&fs::read_to_string(manifest)?)?;
    let dir = manifest.parent().unwrap_or_else(|| Path::new("."));
    let initial = m
        .initial_value
        .iter()
        .map(|v| T::from_f64(*v).ok_or_else(|| Error::InvalidPath("bad initial value".into())))
        .collect::<Result<Vec<T>>>()?;
    let p: CadlagPath<T> = read_csv(fs::File::open(dir.join(&m.csv))?, m.mode, Some(initial))?;
    if p.dim() != m.dim {
        return Err(Error::Dimension {
            expected: m.dim,
            got: p.dim(),
        });
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_text_round_trip_is_byte_exact() {
        let p = CadlagPath::from_rows(
            Interpolation::Linear,
            1,
            &[
                (0.0, vec![1.0]),
                (0.1, vec![1.0 / 3.0]),
                (0.1, vec![std::f64::consts::PI]),
                (0.7, vec![1e-300]),
            ],
            Some(vec![0.9]),
        )
        .unwrap();
        let mut a = Vec::new();
        write_csv(&p, &mut a).unwrap();
        let q: CadlagPath<f64> = read_csv(a.as_slice(), Interpolation::Linear, Some(vec![0.9])).unwrap();
        assert_eq!(p, q);
        let mut b = Vec::new();
        write_csv(&q, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("t,value\n"));
    }

    #[test]
    fn multi_dim_header() {
        let p = CadlagPath::from_parts(Interpolation::Step, 2, vec![0.0], vec![1.0, 2.0], None, None).unwrap();
        let mut a = Vec::new();
        write_csv(&p, &mut a).unwrap();
        assert!(String::from_utf8(a).unwrap().starts_with("t,value,value2\n"));
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = CadlagPath::step(&[(0.0, 1.25), (0.3, 0.5), (0.6, 1.5)])
            .unwrap()
            .with_initial(&[1.1])
            .unwrap();
        let m = write_path(&p, dir.path(), "x").unwrap();
        let q: CadlagPath<f64> = read_path(&m).unwrap();
        assert_eq!(p, q);
    }
}
