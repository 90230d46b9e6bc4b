//! The BFG1 text format.
//!
//! ```text
//! bfg1
//! coords cartesian
//! origin 0 0 0
//! spacing 0.1 0.1 0.1
//! dims 11 11 11
//! kind vector
//! <one node per line, x fastest, components separated by spaces>
//! ```
//!
//! Values are written with 17 significant digits so a write/read cycle is
//! lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{CoordSystem, Grid, GridError, Result, ScalarField, VectorField};

#[derive(Clone, Debug, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl FieldData {
    pub fn grid(&self) -> &Grid {
        match self {
            FieldData::Scalar(f) => &f.grid,
            FieldData::Vector(u) => &u.grid,
        }
    }
}

fn write_header<W: Write>(w: &mut W, grid: &Grid, kind: &str) -> std::io::Result<()> {
    let o = grid.origin();
    let h = grid.spacing();
    let d = grid.dims();
    writeln!(w, "bfg1")?;
    writeln!(w, "coords {}", grid.coords().keyword())?;
    writeln!(w, "origin {:.16e} {:.16e} {:.16e}", o[0], o[1], o[2])?;
    writeln!(w, "spacing {:.16e} {:.16e} {:.16e}", h[0], h[1], h[2])?;
    writeln!(w, "dims {} {} {}", d[0], d[1], d[2])?;
    writeln!(w, "kind {kind}")
}

pub fn write_scalar<W: Write>(w: W, f: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(w);
    write_header(&mut w, &f.grid, "scalar")?;
    for v in &f.values {
        writeln!(w, "{v:.16e}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vector<W: Write>(w: W, u: &VectorField) -> Result<()> {
    let mut w = BufWriter::new(w);
    write_header(&mut w, &u.grid, "vector")?;
    for v in &u.values {
        writeln!(w, "{:.16e} {:.16e} {:.16e}", v[0], v[1], v[2])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_scalar(path: impl AsRef<Path>, f: &ScalarField) -> Result<()> {
    write_scalar(File::create(path)?, f)
}

pub fn save_vector(path: impl AsRef<Path>, u: &VectorField) -> Result<()> {
    write_vector(File::create(path)?, u)
}

pub fn load(path: impl AsRef<Path>) -> Result<FieldData> {
    read(File::open(path)?)
}

fn format_err(line: usize, message: impl Into<String>) -> GridError {
    GridError::Format { line, message: message.into() }
}

fn numbers<const N: usize>(line_no: usize, text: &str, keyword: &str) -> Result<[f64; N]> {
    let rest = text
        .strip_prefix(keyword)
        .ok_or_else(|| format_err(line_no, format!("expected `{keyword}`")))?;
    let parts: Vec<&str> = rest.split_whitespace().collect();
    if parts.len() != N {
        return Err(format_err(line_no, format!("`{keyword}` needs {N} values, found {}", parts.len())));
    }
    let mut out = [0.0; N];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = p.parse().map_err(|_| format_err(line_no, format!("bad number `{p}`")))?;
    }
    Ok(out)
}

pub fn read<R: Read>(r: R) -> Result<FieldData> {
    let mut lines = BufReader::new(r).lines().enumerate().filter_map(|(i, l)| match l {
        Ok(l) if l.trim().is_empty() => None,
        other => Some((i + 1, other)),
    });
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l.trim().to_string())),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(format_err(0, format!("unexpected end of file, expected {what}"))),
        }
    };

    let (n, magic) = next("`bfg1`")?;
    if magic != "bfg1" {
        return Err(format_err(n, "missing `bfg1` magic line"));
    }
    let (n, coords) = next("`coords`")?;
    let coords = coords
        .strip_prefix("coords")
        .map(str::trim)
        .and_then(CoordSystem::from_keyword)
        .ok_or_else(|| format_err(n, "expected `coords cartesian|cylindrical_rz`"))?;
    let (n, l) = next("`origin`")?;
    let origin = numbers::<3>(n, &l, "origin")?;
    let (n, l) = next("`spacing`")?;
    let spacing = numbers::<3>(n, &l, "spacing")?;
    let (n, l) = next("`dims`")?;
    let dims_f = numbers::<3>(n, &l, "dims")?;
    if dims_f.iter().any(|d| *d < 1.0 || d.fract() != 0.0) {
        return Err(format_err(n, "dims must be positive integers"));
    }
    let dims = dims_f.map(|d| d as usize);
    let (n, kind) = next("`kind`")?;
    let vector = match kind.strip_prefix("kind").map(str::trim) {
        Some("scalar") => false,
        Some("vector") => true,
        _ => return Err(format_err(n, "expected `kind scalar|vector`")),
    };
    let grid = Grid::new(origin, spacing, dims, coords)?;

    let width = if vector { 3 } else { 1 };
    let mut flat = Vec::with_capacity(grid.len() * width);
    for _ in 0..grid.len() {
        let (n, l) = next("node values")?;
        let before = flat.len();
        for p in l.split_whitespace() {
            let v: f64 = p.parse().map_err(|_| format_err(n, format!("bad number `{p}`")))?;
            if !v.is_finite() {
                return Err(format_err(n, "non-finite value"));
            }
            flat.push(v);
        }
        if flat.len() - before != width {
            return Err(format_err(n, format!("expected {width} values per node")));
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(format_err(n, "trailing data after last node"));
    }
    if vector {
        let values = flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(FieldData::Vector(VectorField { grid, values }))
    } else {
        Ok(FieldData::Scalar(ScalarField { grid, values: flat }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lossless_round_trip() {
        let g = Grid::from_bounds([0.5, 0.0, -1.0], [1.5, 0.3, 1.0], [5, 5, 6], CoordSystem::CylindricalRz).unwrap();
        let u = VectorField::from_fn(&g, |p| [p[0].sin(), 1.0 / 3.0 + p[1], p[2].exp() * 1e-300]);
        let mut buf = Vec::new();
        write_vector(&mut buf, &u).unwrap();
        assert_eq!(read(&buf[..]).unwrap(), FieldData::Vector(u));

        let f = ScalarField::from_fn(&g, |p| (p[0] * p[2]).cos() * 1e17);
        let mut buf = Vec::new();
        write_scalar(&mut buf, &f).unwrap();
        assert_eq!(read(&buf[..]).unwrap(), FieldData::Scalar(f));
    }

    #[test]
    fn rejects_malformed() {
        let bad = "bfg1\ncoords cartesian\norigin 0 0 0\nspacing 1 1 1\ndims 5 1 1\nkind scalar\n1\n2\n3\n4\n";
        assert!(matches!(read(bad.as_bytes()), Err(GridError::Format { .. })));
        let bad = "bfg1\ncoords polar\n";
        assert!(matches!(read(bad.as_bytes()), Err(GridError::Format { line: 2, .. })));
        let bad = "bfg1\ncoords cartesian\norigin 0 0 0\nspacing 1 1 1\ndims 5 1 1\nkind scalar\n1\n2\nnan\n4\n5\n";
        assert!(matches!(read(bad.as_bytes()), Err(GridError::Format { line: 9, .. })));
    }
}
