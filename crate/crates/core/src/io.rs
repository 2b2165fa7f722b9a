//! Text formats: MRP files, vector/matrix CSV, atomic writes.
//!
//! The MRP format is a flat comma-separated text file:
//!
//! ```text
//! mrp,<num_states>,<gamma>
//! p(0,0),p(0,1),...,p(0,n-1)
//! ...                          (one row per state)
//! r(0),r(1),...,r(n-1)
//! ```
//!
//! Floats are written with 17 significant digits so round-trips are
//! bit-faithful.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mrp::Mrp;

/// 17 significant digits; enough to reconstruct any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::format(format!("bad float {s:?}: {e}")))
}

/// Write via a temporary file in the same directory, then rename, so an
/// interrupted run never leaves a truncated file behind.
pub fn atomic_write(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp~", file_name.to_string_lossy()));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write(&mut w)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_mrp_to(mrp: &Mrp, w: &mut impl Write) -> Result<()> {
    let n = mrp.num_states();
    writeln!(w, "mrp,{n},{}", fmt_f64(mrp.gamma()))?;
    let mut row = Vec::with_capacity(n);
    for i in 0..n {
        row.clear();
        for j in 0..n {
            row.push(fmt_f64(mrp.transition()[(i, j)]));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    let rewards: Vec<String> = mrp.reward().iter().map(|&r| fmt_f64(r)).collect();
    writeln!(w, "{}", rewards.join(","))?;
    Ok(())
}

pub fn write_mrp(mrp: &Mrp, path: &Path) -> Result<()> {
    atomic_write(path, |w| write_mrp_to(mrp, w))
}

pub fn parse_mrp(r: impl Read) -> Result<Mrp> {
    let reader = BufReader::new(r);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("empty MRP file"))??;
    let parts: Vec<&str> = header.trim().split(',').collect();
    if parts.len() != 3 || parts[0] != "mrp" {
        return Err(Error::format(format!("bad MRP header: {header:?}")));
    }
    let n: usize = parts[1]
        .parse()
        .map_err(|_| Error::format(format!("bad state count: {:?}", parts[1])))?;
    let gamma = parse_f64(parts[2])?;

    let mut read_row = |what: &str| -> Result<Vec<f64>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(format!("missing {what} row")))??;
        let vals: Result<Vec<f64>> = line.trim().split(',').map(parse_f64).collect();
        let vals = vals?;
        if vals.len() != n {
            return Err(Error::format(format!(
                "{what} row has {} entries, expected {n}",
                vals.len()
            )));
        }
        Ok(vals)
    };

    let mut transition = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let row = read_row(&format!("transition[{i}]"))?;
        for (j, p) in row.into_iter().enumerate() {
            transition[(i, j)] = p;
        }
    }
    let reward = DVector::from_vec(read_row("reward")?);
    Mrp::new(transition, reward, gamma)
}

pub fn read_mrp(path: &Path) -> Result<Mrp> {
    parse_mrp(File::open(path)?)
}

/// CSV with header `state,value`.
pub fn write_value_csv(values: &[f64], path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "state,value")?;
        for (i, v) in values.iter().enumerate() {
            writeln!(w, "{i},{}", fmt_f64(*v))?;
        }
        Ok(())
    })
}

pub fn read_value_csv(path: &Path) -> Result<Vec<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line.trim() != "state,value" {
                return Err(Error::format(format!("bad value CSV header: {line:?}")));
            }
            continue;
        }
        let (_, val) = line
            .split_once(',')
            .ok_or_else(|| Error::format(format!("bad value CSV line: {line:?}")))?;
        out.push(parse_f64(val)?);
    }
    Ok(out)
}

/// Matrix as `matrix,<n>` header plus one CSV row per matrix row.
pub fn write_matrix_csv(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    atomic_write(path, |w| {
        writeln!(w, "matrix,{}", m.nrows())?;
        let mut row = Vec::with_capacity(m.ncols());
        for i in 0..m.nrows() {
            row.clear();
            for j in 0..m.ncols() {
                row.push(fmt_f64(m[(i, j)]));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format("empty matrix file"))??;
    let n: usize = header
        .trim()
        .strip_prefix("matrix,")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format(format!("bad matrix header: {header:?}")))?;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| Error::format(format!("missing matrix row {i}")))??;
        for (j, cell) in line.trim().split(',').enumerate() {
            if j >= n {
                return Err(Error::format(format!("matrix row {i} too long")));
            }
            m[(i, j)] = parse_f64(cell)?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mrp::two_state_counterexample;

    #[test]
    fn mrp_round_trip_is_bit_faithful() {
        let mrp = two_state_counterexample();
        let mut buf = Vec::new();
        write_mrp_to(&mrp, &mut buf).unwrap();
        let back = parse_mrp(buf.as_slice()).unwrap();
        assert_eq!(mrp, back);
    }

    #[test]
    fn fmt_f64_round_trips_awkward_values() {
        for &x in &[0.1, 1.0 / 3.0, 1e-300, -2.5e17, f64::MIN_POSITIVE, 0.95] {
            assert_eq!(x, fmt_f64(x).parse::<f64>().unwrap());
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_mrp("not an mrp".as_bytes()).is_err());
        assert!(parse_mrp("mrp,2,0.5\n1.0,0.0\n".as_bytes()).is_err());
    }
}
