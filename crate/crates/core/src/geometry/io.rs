//! ASCII OFF triangle meshes and x,y CSV polylines.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Vertices and triangles of a mesh file.
pub type OffMesh = (Vec<[f64; 3]>, Vec<[usize; 3]>);

/// Parses an OFF file; polygonal faces are fan-triangulated.
pub fn parse_off(text: &str) -> Result<OffMesh> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(|l| l.split_whitespace())
        .peekable();
    let bad = |m: &str| Error::MeshFormat(m.to_string());
    if tokens.peek() == Some(&"OFF") {
        tokens.next();
    }
    let mut next_num = |what: &str| -> Result<f64> {
        tokens
            .next()
            .ok_or_else(|| bad(&format!("unexpected end of file reading {what}")))?
            .parse::<f64>()
            .map_err(|_| bad(&format!("malformed number in {what}")))
    };
    let nv = next_num("header")? as usize;
    let nf = next_num("header")? as usize;
    let _ne = next_num("header")?;
    let mut verts = Vec::with_capacity(nv);
    for i in 0..nv {
        let what = format!("vertex {i}");
        verts.push([next_num(&what)?, next_num(&what)?, next_num(&what)?]);
    }
    let mut faces = Vec::with_capacity(nf);
    for i in 0..nf {
        let what = format!("face {i}");
        let k = next_num(&what)? as usize;
        if k < 3 {
            return Err(bad(&format!("face {i} has fewer than 3 vertices")));
        }
        let idx: Vec<usize> = (0..k)
            .map(|_| next_num(&what).map(|v| v as usize))
            .collect::<Result<_>>()?;
        for j in 1..k - 1 {
            faces.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    Ok((verts, faces))
}

pub fn read_off(path: &Path) -> Result<OffMesh> {
    parse_off(&std::fs::read_to_string(path)?)
}

pub fn format_off(verts: &[[f64; 3]], faces: &[[usize; 3]]) -> String {
    let mut s = format!("OFF\n{} {} 0\n", verts.len(), faces.len());
    for v in verts {
        let _ = writeln!(s, "{:e} {:e} {:e}", v[0], v[1], v[2]);
    }
    for f in faces {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

/// Reads `x,y` rows; a non-numeric first row is treated as a header.
pub fn read_polyline_csv(path: &Path) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::InvalidShape(format!("polyline csv: {e}")))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidShape(format!("polyline csv: {e}")))?;
        let parsed: Option<[f64; 2]> =
            (|| Some([rec.get(0)?.parse().ok()?, rec.get(1)?.parse().ok()?]))();
        match parsed {
            Some(p) => out.push(p),
            None if i == 0 => continue,
            None => {
                return Err(Error::InvalidShape(format!(
                    "polyline csv: bad row {}",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn off_round_trip() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let f = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]];
        let (v2, f2) = parse_off(&format_off(&v, &f)).unwrap();
        assert_eq!(v, v2);
        assert_eq!(f, f2);
    }

    #[test]
    fn quads_are_triangulated() {
        let (_, f) = parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n").unwrap();
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn truncated_file_is_an_error() {
        assert!(parse_off("OFF\n3 1 0\n0 0 0\n").is_err());
    }
}
