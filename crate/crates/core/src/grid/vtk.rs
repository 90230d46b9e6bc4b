//! Legacy ASCII VTK export (`STRUCTURED_POINTS`) for external viewers.
//!
//! Cylindrical grids are written in their native `(r, theta, z)` index space;
//! viewers see a box, not the annular sector.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Grid, GridError, Result, ScalarField, VectorField};

pub fn write_vtk<W: Write>(
    w: W,
    title: &str,
    grid: &Grid,
    scalars: &[(&str, &ScalarField)],
    vectors: &[(&str, &VectorField)],
) -> Result<()> {
    for (_, f) in scalars {
        f.grid.same_as(grid)?;
    }
    for (_, u) in vectors {
        u.grid.same_as(grid)?;
    }
    let mut w = BufWriter::new(w);
    let d = grid.dims();
    let o = grid.origin();
    let h = grid.spacing();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", d[0], d[1], d[2])?;
    writeln!(w, "ORIGIN {} {} {}", o[0], o[1], o[2])?;
    writeln!(w, "SPACING {} {} {}", h[0], h[1], h[2])?;
    writeln!(w, "POINT_DATA {}", grid.len())?;
    for (name, f) in scalars {
        writeln!(w, "SCALARS {} double 1", sanitize(name))?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in &f.values {
            writeln!(w, "{v:e}")?;
        }
    }
    for (name, u) in vectors {
        writeln!(w, "VECTORS {} double", sanitize(name))?;
        for v in &u.values {
            writeln!(w, "{:e} {:e} {:e}", v[0], v[1], v[2])?;
        }
    }
    w.flush().map_err(GridError::from)
}

pub fn save_vtk(
    path: impl AsRef<Path>,
    title: &str,
    grid: &Grid,
    scalars: &[(&str, &ScalarField)],
    vectors: &[(&str, &VectorField)],
) -> Result<()> {
    write_vtk(File::create(path)?, title, grid, scalars, vectors)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_counts() {
        let g = Grid::cartesian([0.0; 3], [1.0; 3], [5, 5, 1]).unwrap();
        let f = ScalarField::constant(&g, 2.0);
        let u = VectorField::zeros(&g);
        let mut buf = Vec::new();
        write_vtk(&mut buf, "demo", &g, &[("f", &f)], &[("u field", &u)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\ndemo\nASCII\nDATASET STRUCTURED_POINTS\n"));
        assert!(text.contains("DIMENSIONS 5 5 1"));
        assert!(text.contains("VECTORS u_field double"));
        assert_eq!(text.lines().count(), 8 + 2 + 25 + 1 + 25);
    }
}
