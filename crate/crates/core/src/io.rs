//! Matrix and tensor files.
//!
//! Matrices: Matrix Market array format (`real general`, column-major
//! entries) and headerless CSV (one row per line). Writers print 17
//! significant digits so values round-trip exactly.
//!
//! Tensors: a little-endian binary layout (`u64` order `d`, `d` `u64`
//! dimensions, then the `f64` entries with the first index fastest) and a
//! CSV layout (a first line of comma-separated dimensions, then one entry per
//! line in the same order).

use std::io::{BufRead, Read, Write};

use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::tt::DenseTensor;

const MM_HEADER: &str = "%%MatrixMarket matrix array real general";

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("not a number: '{}'", s.trim())))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("not a dimension: '{}'", s.trim())))
}

pub fn write_matrix_market(w: &mut impl Write, a: &Matrix) -> Result<()> {
    writeln!(w, "{MM_HEADER}")?;
    writeln!(w, "{} {}", a.rows(), a.cols())?;
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(w, "{:.16e}", a.get(i, j))?;
        }
    }
    Ok(())
}

pub fn read_matrix_market(r: impl BufRead) -> Result<Matrix> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty Matrix Market file".into()))??;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Parse(format!("bad Matrix Market header '{header}'")));
    }
    if fields[2] != "array" || fields[3] != "real" || fields[4] != "general" {
        return Err(Error::Parse(format!(
            "only 'array real general' is supported, got '{} {} {}'",
            fields[2], fields[3], fields[4]
        )));
    }
    let mut body = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        body.push(t.to_string());
    }
    let mut it = body.iter();
    let size = it.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<&str> = size.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(Error::Parse(format!("bad size line '{size}'")));
    }
    let (m, n) = (parse_usize(dims[0])?, parse_usize(dims[1])?);
    let values: Vec<f64> = it.map(|s| parse_f64(s)).collect::<Result<_>>()?;
    if values.len() != m * n {
        return Err(Error::Parse(format!("expected {} entries, found {}", m * n, values.len())));
    }
    let col_major = Matrix::new(n, m, values)?;
    Ok(col_major.transpose())
}

pub fn write_csv(w: &mut impl Write, a: &Matrix) -> Result<()> {
    for i in 0..a.rows() {
        let line: Vec<String> = a.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_csv(r: impl Read) -> Result<Matrix> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        if cols.is_some_and(|c| c != record.len()) {
            return Err(Error::Parse(format!("row {} has {} fields", rows + 1, record.len())));
        }
        cols = Some(record.len());
        for field in record.iter() {
            data.push(parse_f64(field)?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Parse("empty CSV".into()))?;
    Matrix::new(rows, cols, data)
}

pub fn write_tensor_binary(w: &mut impl Write, t: &DenseTensor) -> Result<()> {
    w.write_all(&(t.order() as u64).to_le_bytes())?;
    for &d in t.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_tensor_binary(mut r: impl Read) -> Result<DenseTensor> {
    let d = read_u64(&mut r)?;
    if d == 0 || d > 64 {
        return Err(Error::Parse(format!("implausible tensor order {d}")));
    }
    let dims: Vec<usize> = (0..d)
        .map(|_| read_u64(&mut r).map(|v| v as usize))
        .collect::<Result<_>>()?;
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &x| acc.checked_mul(x))
        .ok_or_else(|| Error::Parse("tensor size overflows".into()))?;
    let mut data = Vec::with_capacity(total.min(1 << 24));
    for _ in 0..total {
        data.push(f64::from_bits(read_u64(&mut r)?));
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Parse(format!("{} trailing bytes", rest.len())));
    }
    DenseTensor::new(dims, data)
}

pub fn write_tensor_csv(w: &mut impl Write, t: &DenseTensor) -> Result<()> {
    let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
    writeln!(w, "{}", dims.join(","))?;
    for v in t.as_slice() {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

pub fn read_tensor_csv(r: impl BufRead) -> Result<DenseTensor> {
    let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let header = lines.next().ok_or_else(|| Error::Parse("empty tensor CSV".into()))??;
    let dims: Vec<usize> = header.split(',').map(parse_usize).collect::<Result<_>>()?;
    let data: Vec<f64> = lines.map(|l| parse_f64(&l?)).collect::<Result<_>>()?;
    DenseTensor::new(dims, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_market_round_trip_is_exact() {
        let a = Matrix::from_fn(3, 2, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0));
        let mut buf = Vec::new();
        write_matrix_market(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(MM_HEADER));
        assert_eq!(read_matrix_market(&buf[..]).unwrap(), a);
    }

    #[test]
    fn matrix_market_skips_comments_and_rejects_coordinate() {
        let text = "%%MatrixMarket matrix array real general\n% note\n2 1\n1.5\n-2\n";
        let a = read_matrix_market(text.as_bytes()).unwrap();
        assert_eq!(a.as_slice(), &[1.5, -2.0]);
        let bad = "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 2\n";
        assert!(matches!(read_matrix_market(bad.as_bytes()), Err(Error::Parse(_))));
        let short = "%%MatrixMarket matrix array real general\n2 2\n1\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
    }

    #[test]
    fn csv_round_trip_and_ragged_rows() {
        let a = Matrix::from_fn(2, 3, |i, j| 1.0 / (1.0 + i as f64 + 7.0 * j as f64));
        let mut buf = Vec::new();
        write_csv(&mut buf, &a).unwrap();
        assert_eq!(read_csv(&buf[..]).unwrap(), a);
        assert!(read_csv("1,2\n3\n".as_bytes()).is_err());
        assert!(read_csv("1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn tensor_formats_round_trip() {
        let t = DenseTensor::from_fn(vec![2, 3, 2], |idx| (idx[0] + 2 * idx[1]) as f64 / 3.0 - idx[2] as f64).unwrap();
        let mut bin = Vec::new();
        write_tensor_binary(&mut bin, &t).unwrap();
        assert_eq!(bin.len(), 8 * (1 + 3 + 12));
        assert_eq!(&bin[..8], &3u64.to_le_bytes());
        assert_eq!(read_tensor_binary(&bin[..]).unwrap(), t);
        assert!(read_tensor_binary(&bin[..bin.len() - 1]).is_err());

        let mut text = Vec::new();
        write_tensor_csv(&mut text, &t).unwrap();
        assert!(String::from_utf8(text.clone()).unwrap().starts_with("2,3,2\n"));
        assert_eq!(read_tensor_csv(&text[..]).unwrap(), t);
    }
}
