//! Grid specs and field sources.
//!
//! A field source ending in `.bfg1` is read from that file; anything else is
//! parsed as an expression (three comma-separated ones for vector fields) and
//! sampled on the grid from `--grid`.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use beltrami::grid::io::{load, FieldData};
use beltrami::{parse, CoordSystem, Expr, Grid, ScalarField, VectorField};

fn triple<T: std::str::FromStr>(s: &str, what: &str) -> Result<[T; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("{what}: expected three comma-separated values, got `{s}`");
    }
    let mut out = Vec::with_capacity(3);
    for p in parts {
        out.push(p.parse::<T>().map_err(|_| anyhow!("{what}: cannot parse `{p}`"))?);
    }
    out.try_into().map_err(|_| anyhow!("{what}: expected three values"))
}

fn coords(s: &str) -> Result<CoordSystem> {
    CoordSystem::from_keyword(s.trim()).ok_or_else(|| anyhow!("unknown coordinate system `{s}` (cartesian, cylindrical_rz)"))
}

/// `lo:hi:dims[:coords]`, each of the first three a comma-separated triple, or
/// `origin=..;spacing=..;dims=..;coords=..` (`lo=..;hi=..` instead of
/// origin/spacing also works).
pub fn grid_spec(spec: &str) -> Result<Grid> {
    let g = if spec.contains('=') {
        let (mut origin, mut spacing, mut lo, mut hi, mut dims, mut cs) = (None, None, None, None, None, CoordSystem::Cartesian);
        for item in spec.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("grid spec: expected key=value, got `{item}`"))?;
            match k.trim() {
                "origin" => origin = Some(triple::<f64>(v, "origin")?),
                "spacing" => spacing = Some(triple::<f64>(v, "spacing")?),
                "lo" => lo = Some(triple::<f64>(v, "lo")?),
                "hi" => hi = Some(triple::<f64>(v, "hi")?),
                "dims" => dims = Some(triple::<usize>(v, "dims")?),
                "coords" => cs = coords(v)?,
                other => bail!("grid spec: unknown key `{other}`"),
            }
        }
        let dims = dims.ok_or_else(|| anyhow!("grid spec: `dims` is required"))?;
        match (origin, spacing, lo, hi) {
            (Some(o), Some(h), None, None) => Grid::new(o, h, dims, cs),
            (None, None, Some(lo), Some(hi)) => Grid::from_bounds(lo, hi, dims, cs),
            _ => bail!("grid spec: give either origin and spacing, or lo and hi"),
        }
    } else {
        let parts: Vec<&str> = spec.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            bail!("grid spec `{spec}`: expected lo:hi:dims[:coords]");
        }
        let cs = if parts.len() == 4 { coords(parts[3])? } else { CoordSystem::Cartesian };
        Grid::from_bounds(triple(parts[0], "lo")?, triple(parts[1], "hi")?, triple(parts[2], "dims")?, cs)
    };
    g.with_context(|| format!("grid spec `{spec}`"))
}

pub fn is_file(src: &str) -> bool {
    src.ends_with(".bfg1")
}

pub fn expr(src: &str, what: &str) -> Result<Expr> {
    parse(src).map_err(|e| anyhow!("{what} `{src}`: {e}"))
}

fn load_file(src: &str) -> Result<FieldData> {
    load(Path::new(src)).with_context(|| format!("reading {src}"))
}

fn need_grid<'a>(grid: Option<&'a Grid>, src: &str) -> Result<&'a Grid> {
    grid.ok_or_else(|| anyhow!("`{src}` is an expression; --grid is required"))
}

pub fn scalar(src: &str, grid: Option<&Grid>, what: &str) -> Result<ScalarField> {
    if is_file(src) {
        match load_file(src)? {
            FieldData::Scalar(f) => check_grid(f, grid, src, |f| &f.grid),
            FieldData::Vector(_) => bail!("{what}: {src} holds a vector field, expected a scalar"),
        }
    } else {
        let g = need_grid(grid, src)?;
        ScalarField::from_expr(g, &expr(src, what)?).with_context(|| format!("evaluating {what} `{src}`"))
    }
}

pub fn vector(src: &str, grid: Option<&Grid>, what: &str) -> Result<VectorField> {
    if is_file(src) {
        match load_file(src)? {
            FieldData::Vector(u) => check_grid(u, grid, src, |u| &u.grid),
            FieldData::Scalar(_) => bail!("{what}: {src} holds a scalar field, expected a vector"),
        }
    } else {
        let g = need_grid(grid, src)?;
        let parts: Vec<&str> = src.split(',').collect();
        if parts.len() != 3 {
            bail!("{what}: expected three comma-separated component expressions, got `{src}`");
        }
        let comps: Vec<ScalarField> = parts
            .iter()
            .map(|p| ScalarField::from_expr(g, &expr(p.trim(), what)?).with_context(|| format!("evaluating {what} `{p}`")))
            .collect::<Result<_>>()?;
        let values = (0..g.len()).map(|i| [comps[0].values[i], comps[1].values[i], comps[2].values[i]]).collect();
        Ok(VectorField::new(g.clone(), values)?)
    }
}

fn check_grid<T>(field: T, grid: Option<&Grid>, src: &str, grid_of: impl Fn(&T) -> &Grid) -> Result<T> {
    if let Some(g) = grid {
        if grid_of(&field) != g {
            bail!("{src} does not live on the --grid grid");
        }
    }
    Ok(field)
}

/// The grid every input is sampled on: the first file's grid, else `--grid`.
pub fn common_grid(sources: &[&str], spec: Option<&str>) -> Result<Option<Grid>> {
    let explicit = spec.map(grid_spec).transpose()?;
    if explicit.is_some() {
        return Ok(explicit);
    }
    match sources.iter().find(|s| is_file(s)) {
        Some(src) => Ok(Some(load_file(src)?.grid().clone())),
        None => Ok(None),
    }
}

pub fn pair(s: &str, what: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("{what}: expected two comma-separated numbers, got `{s}`");
    }
    let a = parts[0].parse().map_err(|_| anyhow!("{what}: cannot parse `{}`", parts[0]))?;
    let b = parts[1].parse().map_err(|_| anyhow!("{what}: cannot parse `{}`", parts[1]))?;
    Ok([a, b])
}
