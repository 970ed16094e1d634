//! Plain-text and binary exports. Floating-point values are written with
//! 17 significant digits, so every file round-trips exactly.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};
use crate::geometry::{DensityCurve, PointSet};
use crate::grid::GridSpec;
use crate::operator::DiscreteOperator;
use crate::spectral::KernelMatrix;
use crate::symbol::SymbolField;

/// Magic bytes at the start of a binary kernel file.
pub const KERNEL_MAGIC: &[u8; 8] = b"SPBKRN1\0";

/// Formats a float with 17 significant digits.
pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x[,y],a_xx[,a_xy,a_yy]` per node.
pub fn write_symbol_csv<W: Write>(a: &SymbolField, mut w: W) -> Result<()> {
    let grid = a.grid();
    if grid.dim() == 1 {
        writeln!(w, "x,a")?;
    } else {
        writeln!(w, "x,y,a_xx,a_xy,a_yy")?;
    }
    for i in 0..grid.node_count() {
        let x = grid.coords(i);
        let c = a.at(i);
        if grid.dim() == 1 {
            writeln!(w, "{},{}", fmt(x[0]), fmt(c.xx))?;
        } else {
            writeln!(w, "{},{},{},{},{}", fmt(x[0]), fmt(x[1]), fmt(c.xx), fmt(c.xy), fmt(c.yy))?;
        }
    }
    Ok(())
}

/// Coordinate-format sparse export: a `n,n,nnz` header then `row,col,value`.
pub fn write_operator_coo<W: Write>(op: &DiscreteOperator, mut w: W) -> Result<()> {
    let m = op.matrix();
    writeln!(w, "# {} {} {}", m.dim(), m.dim(), m.nnz())?;
    writeln!(w, "row,col,value")?;
    for (i, j, v) in m.triplets() {
        writeln!(w, "{i},{j},{}", fmt(v))?;
    }
    Ok(())
}

/// Dense kernel as CSV, one row per line.
pub fn write_kernel_csv<W: Write>(k: &KernelMatrix, mut w: W) -> Result<()> {
    for i in 0..k.n() {
        let line: Vec<String> = k.row(i).iter().map(|&v| fmt(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Magic, `n` as little-endian u64, then `n²` little-endian f64 in
/// row-major order.
pub fn write_kernel_binary<W: Write>(k: &KernelMatrix, mut w: W) -> Result<()> {
    w.write_all(KERNEL_MAGIC)?;
    w.write_all(&(k.n() as u64).to_le_bytes())?;
    for &v in k.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a file written by [`write_kernel_binary`]: `(n, values)`.
pub fn read_kernel_binary<R: Read>(mut r: R) -> Result<(usize, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != KERNEL_MAGIC {
        return Err(Error::Parse {
            line: 0,
            message: "not a kernel file".into(),
        });
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    let mut values = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok((n, values))
}

/// `x[,y],k` for the kernel diagonal.
pub fn write_diagonal_csv<W: Write>(grid: &GridSpec, diag: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "{}", if grid.dim() == 1 { "x,k" } else { "x,y,k" })?;
    for (i, &v) in diag.iter().enumerate() {
        let x = grid.coords(i);
        if grid.dim() == 1 {
            writeln!(w, "{},{}", fmt(x[0]), fmt(v))?;
        } else {
            writeln!(w, "{},{},{}", fmt(x[0]), fmt(x[1]), fmt(v))?;
        }
    }
    Ok(())
}

fn length_label(grid: &GridSpec) -> String {
    let l: Vec<f64> = (0..grid.dim()).map(|a| grid.length(a)).collect();
    if l.iter().all(|&v| v == l[0]) {
        format!("{}", l[0])
    } else {
        l.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("x")
    }
}

pub fn write_pointset<W: Write>(points: &PointSet, mut w: W) -> Result<()> {
    let grid = points.grid();
    let seed = points.seed().map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(
        w,
        "# specband pointset v1 dim={} L={} seed={}",
        grid.dim(),
        length_label(grid),
        seed
    )?;
    for x in points.coords() {
        if grid.dim() == 1 {
            writeln!(w, "{}", fmt(x[0]))?;
        } else {
            writeln!(w, "{},{}", fmt(x[0]), fmt(x[1]))?;
        }
    }
    Ok(())
}

/// Reads a point-set file onto `grid`. Every point must sit on a node
/// (within `1e-9` of a spacing) and the header must match the grid.
pub fn read_pointset<R: BufRead>(grid: &GridSpec, r: R) -> Result<PointSet> {
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))??;
    let rest = header
        .strip_prefix("# specband pointset v1 ")
        .ok_or_else(|| parse_err(1, "missing pointset header".into()))?;
    let mut seed = None;
    for field in rest.split_whitespace() {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("bad header field `{field}`")))?;
        match key {
            "dim" if value != grid.dim().to_string() => {
                return Err(parse_err(1, format!("dimension {value} does not match the grid")));
            }
            "L" if value != length_label(grid) => {
                return Err(parse_err(1, format!("length {value} does not match the grid")));
            }
            "seed" if value != "none" => {
                seed = Some(value.parse().map_err(|_| parse_err(1, format!("bad seed `{value}`")))?);
            }
            _ => {}
        }
    }
    let mut nodes = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        let line_no = k + 2;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = text
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(line_no, e.to_string()))?;
        if coords.len() != grid.dim() {
            return Err(parse_err(line_no, format!("expected {} coordinates", grid.dim())));
        }
        for (axis, &c) in coords.iter().enumerate() {
            let q = c / grid.spacing(axis);
            if !(c >= 0.0 && c < grid.length(axis)) || (q - q.round()).abs() > 1e-9 {
                return Err(parse_err(line_no, format!("{c} is not a grid node")));
            }
        }
        nodes.push(grid.nearest_node(&coords));
    }
    PointSet::new(grid.clone(), nodes, "file".into(), seed)
}

/// `r,inf,sup` rows.
pub fn write_density_csv<W: Write>(curve: &DensityCurve, mut w: W) -> Result<()> {
    writeln!(w, "r,inf,sup")?;
    for ((r, lo), hi) in curve.radii.iter().zip(&curve.inf).zip(&curve.sup) {
        writeln!(w, "{},{},{}", fmt(*r), fmt(*lo), fmt(*hi))?;
    }
    Ok(())
}

/// A header line followed by rows of numbers.
pub fn write_table_csv<W: Write>(header: &[&str], rows: &[Vec<f64>], mut w: W) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_points, PointGenerator};

    #[test]
    fn pointset_round_trip() {
        let g = GridSpec::one_d(32.0, 256).unwrap();
        let s = generate_points(&PointGenerator::Poisson { rate: 1.0, seed: 11 }, &g, None).unwrap();
        let mut buf = Vec::new();
        write_pointset(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# specband pointset v1 dim=1 L=32 seed=11\n"));
        let back = read_pointset(&g, buf.as_slice()).unwrap();
        assert_eq!(back.nodes(), s.nodes());
        assert_eq!(back.seed(), Some(11));
        let other = GridSpec::one_d(16.0, 128).unwrap();
        assert!(read_pointset(&other, buf.as_slice()).is_err());
        let off = b"# specband pointset v1 dim=1 L=32 seed=none\n0.01\n";
        assert!(read_pointset(&g, &off[..]).is_err());
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 33.0 / 32.0] {
            assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
        }
    }
}
