//! CSV and JSON persistence.
//!
//! Reals are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every `f64` exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::linalg::CMatrix;
use crate::qcore::{outcomes, settings, CountTable, Dimensions, Outcome, ProbTable, Setting, TableKind};
use crate::{Error, Result};

fn header_is(reader: &mut csv::Reader<impl Read>, expect: &[&str]) -> Result<()> {
    let headers = reader.headers()?;
    if headers.iter().map(str::trim).ne(expect.iter().copied()) {
        return Err(Error::parse(format!(
            "expected header {:?}, found {:?}",
            expect.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, what: &str) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::parse(format!("missing column {what}")))?.trim();
    raw.parse()
        .map_err(|_| Error::parse(format!("bad {what} value {raw:?} on line {}", rec.position().map_or(0, |p| p.line()))))
}

/// `setting,outcome,count`, one row per cell in canonical order.
pub fn write_counts<W: Write>(out: W, counts: &CountTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["setting", "outcome", "count"])?;
    let n = counts.dims().n;
    for (a, setting) in settings(n).enumerate() {
        let label = setting.to_string();
        for (s, outcome) in outcomes(n).enumerate() {
            w.write_record([label.as_str(), &outcome.to_string(), &counts.get(a, s).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a count table. Rows may come in any order but every cell must appear
/// exactly once.
pub fn read_counts<R: Read>(input: R) -> Result<CountTable> {
    let mut r = csv::Reader::from_reader(input);
    header_is(&mut r, &["setting", "outcome", "count"])?;
    let mut cells = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let a: Setting = field(&rec, 0, "setting")?;
        let s: Outcome = field(&rec, 1, "outcome")?;
        let c: u64 = field(&rec, 2, "count")?;
        cells.push((a, s, c));
    }
    let n = cells.first().map(|(a, _, _)| a.len()).ok_or_else(|| Error::parse("count file has no rows"))?;
    let dims = Dimensions::new(n)?;
    let mut counts = vec![None; dims.num_settings * dims.num_outcomes];
    for (a, s, c) in cells {
        if a.len() != n || s.len() != n {
            return Err(Error::parse(format!("row {a},{s} does not have {n} qubits")));
        }
        let slot = &mut counts[a.index() * dims.num_outcomes + s.index()];
        if slot.replace(c).is_some() {
            return Err(Error::parse(format!("duplicate row {a},{s}")));
        }
    }
    let counts = counts
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::parse("count file is missing cells"))?;
    CountTable::from_counts(dims, counts)
}

/// `setting,outcome,value`.
pub fn write_probs<W: Write>(out: W, table: &ProbTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["setting", "outcome", "value"])?;
    let n = table.dims().n;
    for (a, setting) in settings(n).enumerate() {
        let label = setting.to_string();
        for (s, outcome) in outcomes(n).enumerate() {
            w.write_record([label.as_str(), &outcome.to_string(), &table.get(a, s).to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_probs<R: Read>(input: R, kind: TableKind) -> Result<ProbTable> {
    let mut r = csv::Reader::from_reader(input);
    header_is(&mut r, &["setting", "outcome", "value"])?;
    let mut cells = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let a: Setting = field(&rec, 0, "setting")?;
        let s: Outcome = field(&rec, 1, "outcome")?;
        let v: f64 = field(&rec, 2, "value")?;
        cells.push((a, s, v));
    }
    let n = cells.first().map(|(a, _, _)| a.len()).ok_or_else(|| Error::parse("table has no rows"))?;
    let dims = Dimensions::new(n)?;
    if cells.len() != dims.num_settings * dims.num_outcomes {
        return Err(Error::parse("probability table is incomplete"));
    }
    let mut values = vec![0.0; cells.len()];
    for (a, s, v) in cells {
        values[a.index() * dims.num_outcomes + s.index()] = v;
    }
    ProbTable::new(dims, kind, values)
}

/// `row,col,re,im` for all `d^2` entries, row-major.
pub fn write_matrix<W: Write>(out: W, m: &CMatrix) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "re", "im"])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            w.write_record([i.to_string(), j.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(input: R) -> Result<CMatrix> {
    let mut r = csv::Reader::from_reader(input);
    header_is(&mut r, &["row", "col", "re", "im"])?;
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let i: usize = field(&rec, 0, "row")?;
        let j: usize = field(&rec, 1, "col")?;
        let re: f64 = field(&rec, 2, "re")?;
        let im: f64 = field(&rec, 3, "im")?;
        entries.push((i, j, Complex64::new(re, im)));
    }
    let d = (entries.len() as f64).sqrt().round() as usize;
    if d == 0 || d * d != entries.len() {
        return Err(Error::parse(format!("{} entries do not form a square matrix", entries.len())));
    }
    let mut m = CMatrix::zeros(d, d);
    let mut seen = vec![false; d * d];
    for (i, j, v) in entries {
        if i >= d || j >= d || std::mem::replace(&mut seen[i * d + j], true) {
            return Err(Error::parse(format!("bad or duplicate entry ({i}, {j})")));
        }
        m[(i, j)] = v;
    }
    Ok(m)
}

pub fn save_counts(path: &Path, counts: &CountTable) -> Result<()> {
    write_counts(File::create(path)?, counts)
}

pub fn load_counts(path: &Path) -> Result<CountTable> {
    read_counts(File::open(path)?)
}

pub fn save_matrix(path: &Path, m: &CMatrix) -> Result<()> {
    write_matrix(File::create(path)?, m)
}

pub fn load_matrix(path: &Path) -> Result<CMatrix> {
    read_matrix(File::open(path)?)
}

pub fn save_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{born_probabilities, simulate_counts, true_state_mixed};
    use proptest::prelude::*;

    #[test]
    fn counts_csv_layout() {
        let rho = true_state_mixed(2, 0).unwrap();
        let counts = simulate_counts(&rho, 1000, 7).unwrap();
        let mut buf = Vec::new();
        write_counts(&mut buf, &counts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "setting,outcome,count");
        assert_eq!(lines.len(), 37);
        assert!(lines[1].starts_with("xx,++,"));
        assert!(lines[36].starts_with("zz,--,"));
        assert_eq!(read_counts(buf.as_slice()).unwrap(), counts);
    }

    #[test]
    fn counts_reject_bad_input() {
        assert!(read_counts("setting,outcome,n\n".as_bytes()).is_err());
        assert!(read_counts("setting,outcome,count\nx,+,3\nx,-,2\ny,+,5\n".as_bytes()).is_err());
        assert!(read_counts("setting,outcome,count\nx,+,3\nx,+,2\n".as_bytes()).is_err());
        assert!(read_counts("setting,outcome,count\nq,+,3\n".as_bytes()).is_err());
        let ok = "setting,outcome,count\nz,-,0\nx,+,3\nx,-,2\ny,+,5\ny,-,0\nz,+,5\n";
        assert_eq!(read_counts(ok.as_bytes()).unwrap().row(2), &[5, 0]);
    }

    #[test]
    fn probs_round_trip() {
        let t = born_probabilities(&true_state_mixed(2, 4).unwrap());
        let mut buf = Vec::new();
        write_probs(&mut buf, &t).unwrap();
        assert_eq!(read_probs(buf.as_slice(), TableKind::Exact).unwrap(), t);
    }

    proptest! {
        #[test]
        fn matrix_csv_round_trips_exactly(vals in proptest::collection::vec((any::<f64>(), any::<f64>()), 16)) {
            prop_assume!(vals.iter().all(|(a, b)| a.is_finite() && b.is_finite()));
            let m = CMatrix::from_iterator(4, 4, vals.iter().map(|&(a, b)| Complex64::new(a, b)));
            let mut buf = Vec::new();
            write_matrix(&mut buf, &m).unwrap();
            prop_assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
        }

        #[test]
        fn count_csv_round_trips(seed in any::<u64>(), m in 1u64..5000) {
            let rho = true_state_mixed(2, seed).unwrap();
            let counts = simulate_counts(&rho, m, seed).unwrap();
            let mut buf = Vec::new();
            write_counts(&mut buf, &counts).unwrap();
            prop_assert_eq!(read_counts(buf.as_slice()).unwrap(), counts);
        }
    }
}
