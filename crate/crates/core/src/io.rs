//! CSV serialization. Floats are written with 17 significant digits so every
//! value round-trips exactly; rows follow the grid's node order.

use std::io::{Read, Write};

use thiserror::Error;

use crate::domain::{Field, Grid};
use crate::nehari::FiberSample;
use crate::parabolic::{BasinRow, TrajectoryRecord};
use crate::scalar::Scalar;
use crate::spectral::SpectrumResult;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("field file has {got} rows, grid has {expected} nodes")]
    RowCount { expected: usize, got: usize },
}

/// `{:.16e}`: 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn axis_names(d: usize) -> &'static [&'static str] {
    if d == 1 {
        &["x"]
    } else {
        &["x", "y"]
    }
}

/// Header `x[,y],in_omega0,value`, one row per node.
pub fn write_field<T: Scalar, W: Write>(grid: &Grid<T>, u: &Field<T>, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = axis_names(grid.dimension()).to_vec();
    header.extend(["in_omega0", "value"]);
    w.write_record(&header)?;
    for i in 0..grid.len() {
        let mut row: Vec<String> = grid.coord(i).iter().map(|c| fmt_float(c.as_f64())).collect();
        row.push(if grid.in_omega0(i) { "1" } else { "0" }.to_string());
        row.push(fmt_float(u[i].as_f64()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_field`], checking node coordinates.
pub fn read_field<T: Scalar, R: Read>(grid: &Grid<T>, input: R) -> Result<Field<T>, IoError> {
    let mut r = csv::Reader::from_reader(input);
    let d = grid.dimension();
    let mut values = Vec::with_capacity(grid.len());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != d + 2 {
            return Err(IoError::Malformed { row, message: format!("expected {} columns", d + 2) });
        }
        if row >= grid.len() {
            return Err(IoError::RowCount { expected: grid.len(), got: row + 1 });
        }
        let parse = |k: usize| -> Result<f64, IoError> {
            rec[k].trim().parse::<f64>().map_err(|e| IoError::Malformed { row, message: e.to_string() })
        };
        for a in 0..d {
            let x = parse(a)?;
            let h = grid.spacing()[a].as_f64();
            if (x - grid.coord(row)[a].as_f64()).abs() > 1e-9 * h {
                return Err(IoError::Malformed { row, message: format!("coordinate {x} does not match the grid") });
            }
        }
        let v = parse(d + 1)?;
        if !v.is_finite() {
            return Err(IoError::Malformed { row, message: "non-finite value".into() });
        }
        values.push(T::lit(v));
    }
    if values.len() != grid.len() {
        return Err(IoError::RowCount { expected: grid.len(), got: values.len() });
    }
    Field::new(grid, values).map_err(|e| IoError::Malformed { row: 0, message: e.to_string() })
}

/// `index,eigenvalue,residual` with one-based indices.
pub fn write_spectrum<T: Scalar, W: Write>(spec: &SpectrumResult<T>, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "eigenvalue", "residual"])?;
    for (i, p) in spec.pairs().iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_float(p.value.as_f64()), fmt_float(p.residual.as_f64())])?;
    }
    w.flush()?;
    Ok(())
}

/// `step,t,energy,l2,h1,ut_l2,l2_omega0,label`.
pub fn write_trajectory<T: Scalar, W: Write>(rec: &TrajectoryRecord<T>, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "t", "energy", "l2", "h1", "ut_l2", "l2_omega0", "label"])?;
    for s in &rec.samples {
        w.write_record([
            s.step.to_string(),
            fmt_float(s.t.as_f64()),
            fmt_float(s.energy.as_f64()),
            fmt_float(s.l2.as_f64()),
            fmt_float(s.h1.as_f64()),
            fmt_float(s.ut_l2.as_f64()),
            fmt_float(s.l2_omega0.as_f64()),
            s.side.label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `seed,nehari_side,l_class,b_class,classification,final_energy,final_time`.
pub fn write_basin<T: Scalar, W: Write>(rows: &[BasinRow<T>], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seed", "nehari_side", "l_class", "b_class", "classification", "final_energy", "final_time"])?;
    for r in rows {
        w.write_record([
            r.seed_id.to_string(),
            r.initial.nehari_side.label().to_string(),
            r.initial.l_class.map_or("-", |c| c.label()).to_string(),
            r.initial.b_class.map_or("-", |c| c.label()).to_string(),
            r.classification.label(),
            fmt_float(r.final_energy.as_f64()),
            fmt_float(r.final_time.as_f64()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `t,value,slope`.
pub fn write_fiber<T: Scalar, W: Write>(samples: &[FiberSample<T>], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "value", "slope"])?;
    for s in samples {
        w.write_record([fmt_float(s.t.as_f64()), fmt_float(s.value.as_f64()), fmt_float(s.slope.as_f64())])?;
    }
    w.flush()?;
    Ok(())
}

/// `index,s,energy` for a sampled path with uniform parameter spacing.
pub fn write_path_energies<T: Scalar, W: Write>(energies: &[T], out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "s", "energy"])?;
    let last = energies.len().saturating_sub(1).max(1) as f64;
    for (i, e) in energies.iter().enumerate() {
        w.write_record([i.to_string(), fmt_float(i as f64 / last), fmt_float(e.as_f64())])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_grid, DomainSpec};

    #[test]
    fn field_roundtrip_is_exact() {
        let g = build_grid(&DomainSpec::rectangle((1.0_f64, 2.0), (4, 5), (0.3, 0.6), (0.5, 1.5))).unwrap();
        let u = Field::from_fn(&g, |x| (x[0] * 3.1).sin() / 7.0 + x[1].exp());
        let mut buf = Vec::new();
        write_field(&g, &u, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,y,in_omega0,value\n"));
        assert_eq!(text.lines().count(), g.len() + 1);
        let back = read_field(&g, buf.as_slice()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn malformed_fields_rejected() {
        let g = build_grid(&DomainSpec::interval(1.0_f64, 3, (0.4, 0.6))).unwrap();
        let short = "x,in_omega0,value\n2.5e-1,0,1.0\n";
        assert!(matches!(read_field(&g, short.as_bytes()), Err(IoError::RowCount { .. })));
        let shifted = "x,in_omega0,value\n2.6e-1,0,1\n5e-1,1,1\n7.5e-1,0,1\n";
        assert!(matches!(read_field(&g, shifted.as_bytes()), Err(IoError::Malformed { row: 0, .. })));
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
