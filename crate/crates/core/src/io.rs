//! CSV and binary serialization of orbits, grids, Green data, spectra and
//! cone reports.
//!
//! Floats are written with 17 significant digits so that they round-trip.
//! The binary grid table is a header `(n: u64, N_g: u64, kind: u8)`
//! followed by the values as row-major little-endian `f64`.

use std::io::{Read, Write};

use thiserror::Error;

use crate::geometry::{ConeReport, ConeSample};
use crate::green::{GreenData, SpectrumReport};
use crate::variational::{Configuration, OrbitSegment};
use crate::weak_kam::{Kind, SubactionGrid};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, IoError>;

/// `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn floats<'a>(it: impl IntoIterator<Item = &'a f64> + 'a) -> impl Iterator<Item = String> + 'a {
    it.into_iter().map(|&v| fmt_f64(v))
}

fn names(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

/// One row per point: `index, q…`.
pub fn write_configuration_csv<W: Write>(w: W, config: &Configuration) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let n = config.n();
    out.write_record(std::iter::once("index".to_string()).chain(names("q", n)))?;
    for (i, p) in config.points.iter().enumerate() {
        out.write_record(std::iter::once(i.to_string()).chain(floats(p.iter())))?;
    }
    out.flush()?;
    Ok(())
}

/// One row per orbit point: `index, q…, p…`.
pub fn write_orbit_csv<W: Write>(w: W, orbit: &OrbitSegment) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let n = orbit.n();
    out.write_record(
        std::iter::once("index".to_string())
            .chain(names("q", n))
            .chain(names("p", n)),
    )?;
    for (i, x) in orbit.points.iter().enumerate() {
        out.write_record(
            std::iter::once(i.to_string())
                .chain(floats(x.q.iter()))
                .chain(floats(x.p.iter())),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One row per node: coordinates, then the value.
pub fn write_grid_csv<W: Write>(w: W, grid: &SubactionGrid) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(names("x", grid.n).chain(std::iter::once("value".to_string())))?;
    for i in 0..grid.len() {
        let node = grid.node(i);
        out.write_record(floats(node.iter()).chain(std::iter::once(fmt_f64(grid.values[i]))))?;
    }
    out.flush()?;
    Ok(())
}

fn kind_byte(k: Kind) -> u8 {
    match k {
        Kind::Backward => 0,
        Kind::Forward => 1,
    }
}

pub fn write_grid_binary<W: Write>(mut w: W, grid: &SubactionGrid) -> Result<()> {
    w.write_all(&(grid.n as u64).to_le_bytes())?;
    w.write_all(&(grid.resolution as u64).to_le_bytes())?;
    w.write_all(&[kind_byte(grid.kind)])?;
    for v in &grid.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_grid_binary`]. Convergence metadata is not stored and
/// comes back as zero.
pub fn read_grid_binary<R: Read>(mut r: R) -> Result<SubactionGrid> {
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let resolution = u64::from_le_bytes(b8) as usize;
    let mut kb = [0u8; 1];
    r.read_exact(&mut kb)?;
    let kind = match kb[0] {
        0 => Kind::Backward,
        1 => Kind::Forward,
        k => return Err(IoError::Format(format!("unknown grid kind {k}"))),
    };
    if n == 0 || n > 8 || resolution == 0 {
        return Err(IoError::Format(format!("bad grid header n={n} N_g={resolution}")));
    }
    let len = resolution
        .checked_pow(n as u32)
        .ok_or_else(|| IoError::Format("grid too large".into()))?;
    let mut grid = SubactionGrid::zeros(n, resolution, kind);
    for v in grid.values.iter_mut().take(len) {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(IoError::Format("trailing bytes after grid".into()));
    }
    Ok(grid)
}

/// One row per base point: position, `p_dim`, `q₊`, then the entries of
/// `s₋` and `s₊` row-major.
pub fn write_green_csv<W: Write>(w: W, greens: &[GreenData]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = greens.first() else {
        out.flush()?;
        return Ok(());
    };
    let n = first.s_minus.nrows();
    let entry_names = |prefix: &'static str| (0..n * n).map(move |k| format!("{prefix}_{}_{}", k / n, k % n));
    out.write_record(
        ["index".to_string()]
            .into_iter()
            .chain(names("q", n))
            .chain(names("p", n))
            .chain(["p_dim", "q_plus", "extrapolated"].map(String::from))
            .chain(entry_names("s_minus"))
            .chain(entry_names("s_plus")),
    )?;
    for g in greens {
        let rowmajor =
            |m: &nalgebra::DMatrix<f64>| -> Vec<String> { (0..n * n).map(|k| fmt_f64(m[(k / n, k % n)])).collect() };
        out.write_record(
            [g.index.to_string()]
                .into_iter()
                .chain(floats(g.base.q.iter()))
                .chain(floats(g.base.p.iter()))
                .chain([
                    g.p_dim.to_string(),
                    g.q_plus_val.map(fmt_f64).unwrap_or_default(),
                    g.extrapolated.to_string(),
                ])
                .chain(rowmajor(&g.s_minus))
                .chain(rowmajor(&g.s_plus)),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One row per exponent, descending.
pub fn write_spectrum_csv<W: Write>(w: W, spectrum: &SpectrumReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["rank", "exponent"])?;
    for (i, v) in spectrum.exponents.iter().enumerate() {
        out.write_record([i.to_string(), fmt_f64(*v)])?;
    }
    out.flush()?;
    Ok(())
}

/// One row per cone direction: base point, direction, weight, outcome.
pub fn write_cone_csv<W: Write>(w: W, report: &ConeReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = report.entries.first() else {
        out.write_record(["base_index"])?;
        out.flush()?;
        return Ok(());
    };
    let dim = first.direction.len();
    out.write_record(
        ["base_index".to_string()]
            .into_iter()
            .chain(names("base", dim))
            .chain(names("v", dim))
            .chain(["weight", "pass", "margin"].map(String::from)),
    )?;
    for e in &report.entries {
        out.write_record(
            [e.base_index.to_string()]
                .into_iter()
                .chain(floats(e.base.iter()))
                .chain(floats(e.direction.iter()))
                .chain([e.weight.to_string(), e.pass.to_string(), fmt_f64(e.margin)]),
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One row per clustered direction of each cone: base point, direction,
/// number of sample pairs behind it.
pub fn write_cone_samples_csv<W: Write>(w: W, cones: &[ConeSample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = cones.first() else {
        out.write_record(["base_index"])?;
        out.flush()?;
        return Ok(());
    };
    let dim = first.base.to_vector().len();
    out.write_record(
        ["base_index".to_string()]
            .into_iter()
            .chain(names("base", dim))
            .chain(names("v", dim))
            .chain(["weight".to_string()]),
    )?;
    for (i, c) in cones.iter().enumerate() {
        let base = c.base.to_vector();
        for (d, w) in c.directions.iter().zip(&c.weights) {
            out.write_record(
                [i.to_string()]
                    .into_iter()
                    .chain(floats(base.iter()))
                    .chain(floats(d.iter()))
                    .chain([w.to_string()]),
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn grid_binary_round_trip() {
        let g = SubactionGrid::from_fn(2, 5, Kind::Forward, |x| x[0] * 3.0 - x[1].sin());
        let mut buf = Vec::new();
        write_grid_binary(&mut buf, &g).unwrap();
        assert_eq!(buf.len(), 17 + 8 * 25);
        let back = read_grid_binary(&buf[..]).unwrap();
        assert_eq!(back.values, g.values);
        assert_eq!(back.kind, Kind::Forward);
        assert!(read_grid_binary(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn grid_csv_has_header_and_rows() {
        let g = SubactionGrid::from_fn(1, 4, Kind::Backward, |x| x[0]);
        let mut buf = Vec::new();
        write_grid_csv(&mut buf, &g).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x0,value");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[2], "2.5000000000000000e-1,2.5000000000000000e-1");
    }
}
