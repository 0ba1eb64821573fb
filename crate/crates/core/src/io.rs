//! CSV and binary grid dumps.
//!
//! Binary layout, little-endian:
//! `b"AHGRID01"`, u32 n_sigma, u32 n_theta, u32 n_components, u32 reserved,
//! f64 sigma_min, f64 sigma_max, f64 theta_extent, then n_components blocks of
//! n_sigma * n_theta f64 values, each row-major in (sigma, theta).

use std::io::{Read, Write};

use crate::chart::AnnulusChart;
use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const MAGIC: &[u8; 8] = b"AHGRID01";

/// Rows `sigma,theta,<names...>`.
pub fn write_csv<W: Write>(out: &mut W, chart: &AnnulusChart, names: &[&str], fields: &[&ScalarField]) -> Result<()> {
    for f in fields {
        f.check_shape(chart.shape())?;
    }
    write!(out, "sigma,theta")?;
    for n in names {
        write!(out, ",{n}")?;
    }
    writeln!(out)?;
    let g = chart.grid();
    for i in 0..g.n0 {
        for j in 0..g.n1 {
            write!(out, "{:.17e},{:.17e}", g.x(i), g.y(j))?;
            for f in fields {
                write!(out, ",{:.17e}", f.get(i, j))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

pub fn write_binary<W: Write>(out: &mut W, chart: &AnnulusChart, fields: &[&ScalarField]) -> Result<()> {
    for f in fields {
        f.check_shape(chart.shape())?;
    }
    let g = chart.grid();
    out.write_all(MAGIC)?;
    for v in [g.n0 as u32, g.n1 as u32, fields.len() as u32, 0u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    for v in [g.x0, g.x_max(), g.y_extent()] {
        out.write_all(&v.to_le_bytes())?;
    }
    for f in fields {
        for v in f.data() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridDump {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub theta_extent: f64,
    pub fields: Vec<ScalarField>,
}

pub fn read_binary<R: Read>(input: &mut R) -> Result<GridDump> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Config("not a grid dump".into()));
    }
    let mut u = [0u32; 4];
    for v in u.iter_mut() {
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b);
    }
    let read_f64 = |input: &mut R| -> Result<f64> {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let sigma_min = read_f64(input)?;
    let sigma_max = read_f64(input)?;
    let theta_extent = read_f64(input)?;
    let (n0, n1) = (u[0] as usize, u[1] as usize);
    let mut fields = Vec::with_capacity(u[2] as usize);
    for _ in 0..u[2] {
        let mut data = Vec::with_capacity(n0 * n1);
        for _ in 0..n0 * n1 {
            data.push(read_f64(input)?);
        }
        fields.push(ScalarField::from_vec(n0, n1, data)?);
    }
    Ok(GridDump {
        sigma_min,
        sigma_max,
        theta_extent,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{build_chart, MetricSpec, Topology};

    #[test]
    fn binary_round_trip() {
        let c = build_chart(2.0, 16, 20, MetricSpec::Flat, Topology::AnnulusInDisk).unwrap();
        let u = c.field(|x, y| x * y.sin());
        let mut buf = Vec::new();
        write_binary(&mut buf, &c, &[&u, c.mu()]).unwrap();
        assert_eq!(buf.len(), 8 + 16 + 24 + 2 * 8 * 16 * 20);
        let d = read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(d.fields[0], u);
        assert_eq!(d.sigma_max, 2f64.ln());
    }

    #[test]
    fn csv_header_and_rows() {
        let c = build_chart(2.0, 16, 16, MetricSpec::Flat, Topology::AnnulusInDisk).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &c, &["mu"], &[c.mu()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sigma,theta,mu\n"));
        assert_eq!(text.lines().count(), 1 + 256);
    }
}
