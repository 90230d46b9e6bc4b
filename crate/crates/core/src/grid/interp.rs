//! Trilinear interpolation at off-node points (native coordinates).

use super::{Grid, ScalarField, VectorField};

/// Cell index and fractional offset along each axis, or `None` outside the
/// grid. Unused axes always map to node 0.
pub fn locate(grid: &Grid, p: [f64; 3]) -> Option<[(usize, f64); 3]> {
    let mut out = [(0usize, 0.0); 3];
    for a in 0..3 {
        let n = grid.dims()[a];
        if n == 1 {
            continue;
        }
        let s = (p[a] - grid.origin()[a]) / grid.spacing()[a];
        let slack = 1e-9;
        if !(s >= -slack && s <= (n - 1) as f64 + slack) {
            return None;
        }
        let s = s.clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        out[a] = (i, s - i as f64);
    }
    Some(out)
}

fn corners(grid: &Grid, loc: [(usize, f64); 3]) -> impl Iterator<Item = (usize, f64)> + '_ {
    let dims = grid.dims();
    (0..8).filter_map(move |c| {
        let mut w = 1.0;
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let bit = (c >> a) & 1;
            if dims[a] == 1 {
                if bit == 1 {
                    return None;
                }
                continue;
            }
            let (i, t) = loc[a];
            ijk[a] = i + bit;
            w *= if bit == 1 { t } else { 1.0 - t };
        }
        Some((grid.index(ijk[0], ijk[1], ijk[2]), w))
    })
}

/// Corner nodes and trilinear weights for a point; only the first `len`
/// entries are meaningful.
pub fn corner_weights(grid: &Grid, p: [f64; 3]) -> Option<([(usize, f64); 8], usize)> {
    let loc = locate(grid, p)?;
    let mut out = [(0usize, 0.0); 8];
    let mut len = 0;
    for c in corners(grid, loc) {
        out[len] = c;
        len += 1;
    }
    Some((out, len))
}

pub fn scalar_at(f: &ScalarField, p: [f64; 3]) -> Option<f64> {
    let loc = locate(&f.grid, p)?;
    Some(corners(&f.grid, loc).map(|(i, w)| w * f.values[i]).sum())
}

pub fn vector_at(u: &VectorField, p: [f64; 3]) -> Option<[f64; 3]> {
    let loc = locate(&u.grid, p)?;
    let mut acc = [0.0; 3];
    for (i, w) in corners(&u.grid, loc) {
        for k in 0..3 {
            acc[k] += w * u.values[i][k];
        }
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trilinear_reproduces_affine() {
        let g = Grid::cartesian([0.0; 3], [1.0, 2.0, 3.0], [5, 6, 7]).unwrap();
        let f = ScalarField::from_fn(&g, |p| 1.0 + p[0] - 2.0 * p[1] + 0.25 * p[2]);
        let p = [0.33, 1.71, 2.2];
        let v = scalar_at(&f, p).unwrap();
        assert!((v - (1.0 + 0.33 - 3.42 + 0.55)).abs() < 1e-12);
        assert!(scalar_at(&f, [1.2, 0.0, 0.0]).is_none());
        assert!(scalar_at(&f, [1.0, 2.0, 3.0]).is_some());
    }

    #[test]
    fn flat_axis_is_ignored() {
        let g = Grid::cartesian([0.0; 3], [1.0, 1.0, 0.0], [5, 5, 1]).unwrap();
        let f = ScalarField::from_fn(&g, |p| p[0] * p[1]);
        assert!((scalar_at(&f, [0.5, 0.5, 7.0]).unwrap() - 0.25).abs() < 1e-12);
    }
}
