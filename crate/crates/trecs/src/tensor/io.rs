//! Text formats for tensors and CP models.
//!
//! `DTNS 1 <K> <n_1> ... <n_K>` on the first line, followed by the entries in
//! layout order (last index fastest), whitespace separated.
//!
//! `CPM 1 <K> <r> <n_1> ... <n_K>` on the first line, then one line with the
//! r weights, then one factor matrix per mode written row-major, one row per
//! line.
//!
//! Scalars are written with 17 significant digits, which round-trips f64
//! bit-stably.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::{DMatrix, DVector};

use super::{CpModel, DenseTensor};
use crate::error::{Error, Result};

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v)
}

pub fn write_dtns<W: Write>(w: &mut W, t: &DenseTensor) -> Result<()> {
    write!(w, "DTNS 1 {}", t.order())?;
    for &n in t.dims() {
        write!(w, " {}", n)?;
    }
    writeln!(w)?;
    write_values(w, t.data(), t.dims().last().copied().unwrap_or(1))?;
    Ok(())
}

fn write_values<W: Write>(w: &mut W, values: &[f64], per_line: usize) -> Result<()> {
    for chunk in values.chunks(per_line.max(1)) {
        let line: Vec<String> = chunk.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_dtns<R: Read>(r: &mut R) -> Result<DenseTensor> {
    let mut tokens = Tokens::new(r)?;
    let t = read_dtns_from(&mut tokens)?;
    tokens.expect_end()?;
    Ok(t)
}

/// Parses one DTNS block from a token stream, leaving trailing tokens.
pub(crate) fn read_dtns_from(tokens: &mut Tokens) -> Result<DenseTensor> {
    tokens.expect("DTNS")?;
    tokens.expect("1")?;
    let order: usize = tokens.parse()?;
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        dims.push(tokens.parse()?);
    }
    let len: usize = dims.iter().product();
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        data.push(tokens.parse::<f64>()?);
    }
    DenseTensor::new(dims, data)
}

pub fn write_cpm<W: Write>(w: &mut W, m: &CpModel) -> Result<()> {
    write!(w, "CPM 1 {} {}", m.order(), m.rank())?;
    for &n in m.dims() {
        write!(w, " {}", n)?;
    }
    writeln!(w)?;
    let weights: Vec<String> = m.weights().iter().map(|&v| fmt_f64(v)).collect();
    writeln!(w, "{}", weights.join(" "))?;
    for k in 0..m.order() {
        let f = m.factor(k);
        for i in 0..f.nrows() {
            let row: Vec<String> = (0..f.ncols()).map(|j| fmt_f64(f[(i, j)])).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_cpm<R: Read>(r: &mut R) -> Result<CpModel> {
    let mut tokens = Tokens::new(r)?;
    let m = read_cpm_from(&mut tokens)?;
    tokens.expect_end()?;
    Ok(m)
}

/// Parses one CPM block from a token stream, leaving trailing tokens.
pub(crate) fn read_cpm_from(tokens: &mut Tokens) -> Result<CpModel> {
    tokens.expect("CPM")?;
    tokens.expect("1")?;
    let order: usize = tokens.parse()?;
    let rank: usize = tokens.parse()?;
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        dims.push(tokens.parse::<usize>()?);
    }
    let mut weights = DVector::zeros(rank);
    for l in 0..rank {
        weights[l] = tokens.parse()?;
    }
    let mut factors = Vec::with_capacity(order);
    for &n in &dims {
        let mut f = DMatrix::zeros(n, rank);
        for i in 0..n {
            for j in 0..rank {
                f[(i, j)] = tokens.parse()?;
            }
        }
        factors.push(f);
    }
    CpModel::new(factors, weights)
}

/// Whitespace tokenizer over a fully buffered reader.
pub(crate) struct Tokens {
    items: Vec<String>,
    pos: usize,
}

impl Tokens {
    pub(crate) fn new<R: Read>(r: &mut R) -> Result<Self> {
        let mut buf = String::new();
        BufReader::new(r).read_to_string(&mut buf)?;
        Ok(Self::from_str(&buf))
    }

    pub(crate) fn from_str(buf: &str) -> Self {
        let items = buf.split_whitespace().map(str::to_owned).collect();
        Self { items, pos: 0 }
    }

    pub(crate) fn next(&mut self) -> Result<&str> {
        let tok = self
            .items
            .get(self.pos)
            .ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
        self.pos += 1;
        Ok(tok)
    }

    pub(crate) fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next()?;
        if got != want {
            return Err(Error::Parse(format!("expected '{}', got '{}'", want, got)));
        }
        Ok(())
    }

    pub(crate) fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let tok = self.next()?;
        tok.parse()
            .map_err(|_| Error::Parse(format!("invalid token '{}'", tok)))
    }

    pub(crate) fn expect_end(&mut self) -> Result<()> {
        if self.pos != self.items.len() {
            return Err(Error::Parse(format!(
                "{} trailing tokens",
                self.items.len() - self.pos
            )));
        }
        Ok(())
    }
}
