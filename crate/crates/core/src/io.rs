//! Field files: a small CSV format and legacy VTK output.
//!
//! CSV layout:
//!
//! ```text
//! nx,ny,h
//! 65,65,1.5625000000000000e-2
//! <row j = 0: nx comma-separated values>
//! ...
//! <row j = ny-1>
//! ```

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::grid::{DamageField, Grid2, ScalarField};

/// Write nodal values row by row with 17 significant digits.
pub fn write_nodal_csv(mut w: impl Write, grid: &Grid2, values: &[f64]) -> Result<()> {
    if values.len() != grid.n_nodes() {
        return Err(Error::GridMismatch);
    }
    writeln!(w, "nx,ny,h")?;
    writeln!(w, "{},{},{:.16e}", grid.nx, grid.ny, grid.h)?;
    for row in values.chunks(grid.nx) {
        let line: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_field_csv(w: impl Write, u: &ScalarField) -> Result<()> {
    write_nodal_csv(w, &u.grid, u.values())
}

pub fn write_damage_csv(w: impl Write, v: &DamageField) -> Result<()> {
    write_nodal_csv(w, &v.grid, v.values())
}

/// Parse a nodal CSV file into its grid and values.
pub fn read_nodal_csv(r: impl BufRead) -> Result<(Grid2, Vec<f64>)> {
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String> {
        lines.next().ok_or_else(|| Error::Parse(format!("missing {what}")))?.map_err(Error::from)
    };
    let header = next("header")?;
    if header.trim() != "nx,ny,h" {
        return Err(Error::Parse(format!("unexpected header `{}`", header.trim())));
    }
    let dims = next("dimensions")?;
    let parts: Vec<&str> = dims.trim().split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("bad dimension line `{}`", dims.trim())));
    }
    let nx: usize = parts[0].trim().parse().map_err(|_| Error::Parse(format!("bad nx `{}`", parts[0])))?;
    let ny: usize = parts[1].trim().parse().map_err(|_| Error::Parse(format!("bad ny `{}`", parts[1])))?;
    let h: f64 = parts[2].trim().parse().map_err(|_| Error::Parse(format!("bad h `{}`", parts[2])))?;
    if nx < 2 || ny < 2 || !(h > 0.0) {
        return Err(Error::Parse(format!("invalid dimensions {nx}x{ny}, h = {h}")));
    }
    let grid = Grid2::new(nx, ny, (nx - 1) as f64 * h, (ny - 1) as f64 * h)?;
    let mut values = Vec::with_capacity(grid.n_nodes());
    for j in 0..ny {
        let line = next(&format!("row {j}"))?;
        let row: Vec<f64> = line
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad value `{s}` in row {j}"))))
            .collect::<Result<_>>()?;
        if row.len() != nx {
            return Err(Error::Parse(format!("row {j} has {} values, expected {nx}", row.len())));
        }
        values.extend(row);
    }
    Ok((grid, values))
}

pub fn read_field_csv(r: impl BufRead) -> Result<ScalarField> {
    let (grid, values) = read_nodal_csv(r)?;
    ScalarField::new(grid, values)
}

pub fn read_damage_csv(r: impl BufRead) -> Result<DamageField> {
    let (grid, values) = read_nodal_csv(r)?;
    DamageField::new(grid, values)
}

/// Legacy VTK structured-points file with one scalar array per entry.
pub fn write_vtk(mut w: impl Write, grid: &Grid2, title: &str, fields: &[(&str, &[f64])]) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", grid.nx, grid.ny)?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING {:.16e} {:.16e} 1", grid.h, grid.h)?;
    writeln!(w, "POINT_DATA {}", grid.n_nodes())?;
    for (name, vals) in fields {
        if vals.len() != grid.n_nodes() {
            return Err(Error::GridMismatch);
        }
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for x in *vals {
            writeln!(w, "{x:.16e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let g = Grid2::new(5, 4, 1.0, 0.75).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() + y / 7.0).unwrap();
        let mut buf = Vec::new();
        write_field_csv(&mut buf, &u).unwrap();
        let back = read_field_csv(buf.as_slice()).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(matches!(read_field_csv("x\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(read_field_csv("nx,ny,h\n3,3,0.5\n1,2,3\n".as_bytes()), Err(Error::Parse(_))));
        assert!(matches!(
            read_field_csv("nx,ny,h\n3,3,0.5\n1,2\n1,2,3\n1,2,3\n".as_bytes()),
            Err(Error::Parse(_))
        ));
        let bad_damage = "nx,ny,h\n3,3,0.5\n1,2,0\n0,0,0\n0,0,0\n";
        assert!(matches!(read_damage_csv(bad_damage.as_bytes()), Err(Error::DamageOutOfRange { .. })));
    }

    #[test]
    fn vtk_header() {
        let g = Grid2::new(3, 3, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_vtk(&mut buf, &g, "t", &[("u", &[0.0; 9])]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("DIMENSIONS 3 3 1"));
        assert!(s.contains("POINT_DATA 9"));
        assert_eq!(s.lines().count(), 8 + 2 + 9);
    }
}
