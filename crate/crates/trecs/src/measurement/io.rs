//! MSET v1: text serialization of a measurement set, sufficient to re-run
//! recovery without the generating seed.
//!
//! Layout (whitespace separated, shown with line breaks for readability):
//!
//! ```text
//! MSET 1 <K> <n_1> ... <n_K>
//! mode <k>
//!   group <0|1>
//!   weight dense <DTNS block> | weight slice <fixed...>
//!   inner gaussian <m> <nr> <nc> <packed rows...>
//!       | entries <m> <nr> <nc> <r c ...>
//!       | rankone <m> <nr> <nc> <a... b... per measurement>
//!       | sketch <m1> <m2> <nr> <nc> <left rows...> <right rows...>
//!   y <len> <values...>
//! ```

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::{ContractionWeight, InnerOperator, MeasurementGroup, MeasurementSet, ModeGroups, SeparableOperator};
use crate::error::{Error, Result};
use crate::tensor::io::{fmt_f64, read_dtns_from, Tokens};
use crate::tensor::{write_dtns, SliceIndex};

pub fn write_mset<W: Write>(w: &mut W, ms: &MeasurementSet) -> Result<()> {
    ms.validate()?;
    write!(w, "MSET 1 {}", ms.dims.len())?;
    for &n in &ms.dims {
        write!(w, " {}", n)?;
    }
    writeln!(w)?;
    for mode in &ms.modes {
        writeln!(w, "mode {}", mode.mode_pair)?;
        for (gi, g) in mode.groups.iter().enumerate() {
            writeln!(w, "group {}", gi)?;
            match &g.op.weight {
                ContractionWeight::Dense(t) => {
                    writeln!(w, "weight dense")?;
                    write_dtns(w, t)?;
                }
                ContractionWeight::Slice(s) => {
                    write!(w, "weight slice")?;
                    for &f in s.fixed() {
                        write!(w, " {}", f)?;
                    }
                    writeln!(w)?;
                }
            }
            write_inner(w, &g.op.inner)?;
            write!(w, "y {}", g.y.len())?;
            writeln!(w)?;
            let line: Vec<String> = g.y.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

fn write_inner<W: Write>(w: &mut W, inner: &InnerOperator) -> Result<()> {
    match inner {
        InnerOperator::GaussianProjection { nrows, ncols, packed } => {
            writeln!(w, "inner gaussian {} {} {}", packed.nrows(), nrows, ncols)?;
            for i in 0..packed.nrows() {
                let row: Vec<String> = packed.row(i).iter().map(|&v| fmt_f64(v)).collect();
                writeln!(w, "{}", row.join(" "))?;
            }
        }
        InnerOperator::EntrySampling { nrows, ncols, omega } => {
            writeln!(w, "inner entries {} {} {}", omega.len(), nrows, ncols)?;
            for &(r, c) in omega {
                writeln!(w, "{} {}", r, c)?;
            }
        }
        InnerOperator::RankOneProjection { pairs } => {
            let (nr, nc) = inner.domain();
            writeln!(w, "inner rankone {} {} {}", pairs.len(), nr, nc)?;
            for (a, b) in pairs {
                let line: Vec<String> = a.iter().map(|&v| fmt_f64(v)).collect();
                writeln!(w, "{}", line.join(" "))?;
                let line: Vec<String> = b.iter().map(|&v| fmt_f64(v)).collect();
                writeln!(w, "{}", line.join(" "))?;
            }
        }
        InnerOperator::Sketch { left, right } => {
            writeln!(
                w,
                "inner sketch {} {} {} {}",
                left.nrows(),
                right.nrows(),
                left.ncols(),
                right.ncols()
            )?;
            for m in [left, right] {
                for i in 0..m.nrows() {
                    let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
                    writeln!(w, "{}", row.join(" "))?;
                }
            }
        }
    }
    Ok(())
}

pub fn read_mset<R: Read>(r: &mut R) -> Result<MeasurementSet> {
    let mut buf = String::new();
    r.read_to_string(&mut buf)?;
    let mut tokens = Tokens::from_str(&buf);
    tokens.expect("MSET")?;
    tokens.expect("1")?;
    let order: usize = tokens.parse()?;
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        dims.push(tokens.parse::<usize>()?);
    }
    let mut modes = Vec::with_capacity(order.saturating_sub(1));
    for _ in 0..order.saturating_sub(1) {
        tokens.expect("mode")?;
        let mode_pair: usize = tokens.parse()?;
        let mut groups = Vec::with_capacity(2);
        for gi in 0..2usize {
            tokens.expect("group")?;
            let got: usize = tokens.parse()?;
            if got != gi {
                return Err(Error::Parse(format!("expected group {}, got {}", gi, got)));
            }
            tokens.expect("weight")?;
            let weight_kind = tokens.next()?.to_owned();
            let weight = match weight_kind.as_str() {
                "dense" => ContractionWeight::Dense(read_dtns_from(&mut tokens)?),
                "slice" => {
                    let mut fixed = Vec::with_capacity(order - 2);
                    for _ in 0..order - 2 {
                        fixed.push(tokens.parse::<usize>()?);
                    }
                    ContractionWeight::Slice(SliceIndex::new(mode_pair, fixed))
                }
                other => return Err(Error::Parse(format!("unknown weight kind '{}'", other))),
            };
            let inner = read_inner(&mut tokens)?;
            tokens.expect("y")?;
            let len: usize = tokens.parse()?;
            let mut y = DVector::zeros(len);
            for t in 0..len {
                y[t] = tokens.parse()?;
            }
            groups.push(MeasurementGroup {
                op: SeparableOperator {
                    mode_pair,
                    weight,
                    inner,
                },
                y,
            });
        }
        let [g0, g1]: [MeasurementGroup; 2] = groups.try_into().expect("two groups");
        modes.push(ModeGroups {
            mode_pair,
            groups: [g0, g1],
        });
    }
    tokens.expect_end()?;
    let ms = MeasurementSet { dims, modes };
    ms.validate()?;
    Ok(ms)
}

fn read_inner(tokens: &mut Tokens) -> Result<InnerOperator> {
    tokens.expect("inner")?;
    let kind = tokens.next()?.to_owned();
    match kind.as_str() {
        "gaussian" => {
            let m: usize = tokens.parse()?;
            let nrows: usize = tokens.parse()?;
            let ncols: usize = tokens.parse()?;
            let mut packed = DMatrix::zeros(m, nrows * ncols);
            for i in 0..m {
                for c in 0..nrows * ncols {
                    packed[(i, c)] = tokens.parse()?;
                }
            }
            Ok(InnerOperator::GaussianProjection { nrows, ncols, packed })
        }
        "entries" => {
            let m: usize = tokens.parse()?;
            let nrows: usize = tokens.parse()?;
            let ncols: usize = tokens.parse()?;
            let mut omega = Vec::with_capacity(m);
            for _ in 0..m {
                let r: usize = tokens.parse()?;
                let c: usize = tokens.parse()?;
                omega.push((r, c));
            }
            InnerOperator::entry_sampling(nrows, ncols, omega)
        }
        "rankone" => {
            let m: usize = tokens.parse()?;
            let nrows: usize = tokens.parse()?;
            let ncols: usize = tokens.parse()?;
            let mut pairs = Vec::with_capacity(m);
            for _ in 0..m {
                let mut a = DVector::zeros(nrows);
                for i in 0..nrows {
                    a[i] = tokens.parse()?;
                }
                let mut b = DVector::zeros(ncols);
                for i in 0..ncols {
                    b[i] = tokens.parse()?;
                }
                pairs.push((a, b));
            }
            Ok(InnerOperator::RankOneProjection { pairs })
        }
        "sketch" => {
            let m1: usize = tokens.parse()?;
            let m2: usize = tokens.parse()?;
            let nrows: usize = tokens.parse()?;
            let ncols: usize = tokens.parse()?;
            let mut left = DMatrix::zeros(m1, nrows);
            for i in 0..m1 {
                for j in 0..nrows {
                    left[(i, j)] = tokens.parse()?;
                }
            }
            let mut right = DMatrix::zeros(m2, ncols);
            for i in 0..m2 {
                for j in 0..ncols {
                    right[(i, j)] = tokens.parse()?;
                }
            }
            Ok(InnerOperator::Sketch { left, right })
        }
        other => Err(Error::Parse(format!("unknown inner kind '{}'", other))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::MeasurementDesign;
    use crate::tensor::CpModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mset_round_trip_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let dims = [3usize, 4, 5];
        let x = CpModel::random(&dims, 2, &mut rng).unwrap().evaluate().unwrap();
        let ms = MeasurementDesign::gaussian(&dims, 2, Some(&[8, 9]), 4)
            .unwrap()
            .measure(&x)
            .unwrap();
        let mut buf = Vec::new();
        write_mset(&mut buf, &ms).unwrap();
        let back = read_mset(&mut buf.as_slice()).unwrap();
        assert_eq!(back.dims, ms.dims);
        for (a, b) in back.modes.iter().zip(&ms.modes) {
            for (ga, gb) in a.groups.iter().zip(&b.groups) {
                assert_eq!(ga.op, gb.op);
                assert_eq!(ga.y, gb.y);
            }
        }
    }

    #[test]
    fn mset_round_trip_completion() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let dims = [3usize, 4, 5];
        let x = CpModel::random(&dims, 2, &mut rng).unwrap().evaluate().unwrap();
        let ms = MeasurementDesign::slice_sampling(&dims, None, 9, 8)
            .unwrap()
            .measure(&x)
            .unwrap();
        let mut buf = Vec::new();
        write_mset(&mut buf, &ms).unwrap();
        let back = read_mset(&mut buf.as_slice()).unwrap();
        for (a, b) in back.modes.iter().zip(&ms.modes) {
            for (ga, gb) in a.groups.iter().zip(&b.groups) {
                assert_eq!(ga.op, gb.op);
                assert_eq!(ga.y, gb.y);
            }
        }
    }
}
