//! Legacy ASCII VTK unstructured grids.
//!
//! Layout written by [`VtkGrid::to_text`]:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title>
//! ASCII
//! DATASET UNSTRUCTURED_GRID
//! POINTS <n> double          one "x y z" line per node
//! CELLS <m> <9m>             "8 n0 .. n7" per element
//! CELL_TYPES <m>             12 (VTK_HEXAHEDRON) per element
//! CELL_DATA <m>              one SCALARS block per cell field
//! POINT_DATA <n>             one VECTORS block per point field
//! ```
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so a write/read cycle is exact and output is byte-stable. Nodes of a
//! cell are listed bottom face then top face, counter-clockwise, which is the
//! VTK hexahedron convention. In ParaView the optimized structure is obtained
//! with a Threshold (or Iso Volume) filter on `chi` with minimum 0.5.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::scalar::{to_f64, Scalar};

pub const VTK_HEXAHEDRON: u8 = 12;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VtkGrid {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<[usize; 8]>,
    pub cell_types: Vec<u8>,
    pub cell_scalars: Vec<(String, Vec<f64>)>,
    pub point_vectors: Vec<(String, Vec<[f64; 3]>)>,
}

impl VtkGrid {
    /// Geometry of `mesh` without any fields.
    pub fn from_mesh<T: Scalar>(mesh: &Mesh<T>, title: &str) -> Self {
        Self {
            title: title.to_string(),
            points: mesh.nodes.iter().map(|x| x.map(to_f64)).collect(),
            cells: mesh.elements.clone(),
            cell_types: vec![VTK_HEXAHEDRON; mesh.n_elements()],
            cell_scalars: Vec::new(),
            point_vectors: Vec::new(),
        }
    }

    pub fn add_cell_scalar<T: Scalar>(&mut self, name: &str, values: &[T]) -> &mut Self {
        assert_eq!(values.len(), self.cells.len(), "cell field {name}");
        self.cell_scalars
            .push((name.to_string(), values.iter().map(|v| to_f64(*v)).collect()));
        self
    }

    /// Adds a nodal vector field from an interleaved `[x0, y0, z0, x1, ..]` array.
    pub fn add_point_vector<T: Scalar>(&mut self, name: &str, values: &[T]) -> &mut Self {
        assert_eq!(values.len(), 3 * self.points.len(), "point field {name}");
        let v = values
            .chunks_exact(3)
            .map(|c| [to_f64(c[0]), to_f64(c[1]), to_f64(c[2])])
            .collect();
        self.point_vectors.push((name.to_string(), v));
        self
    }

    pub fn cell_scalar(&self, name: &str) -> Option<&[f64]> {
        self.cell_scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn point_vector(&self, name: &str) -> Option<&[[f64; 3]]> {
        self.point_vectors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let title = self.title.replace('\n', " ");
        // fmt::Write on String never fails
        let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
        }
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), 9 * self.cells.len());
        for c in &self.cells {
            s.push('8');
            for n in c {
                let _ = write!(s, " {n}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cell_types.len());
        for t in &self.cell_types {
            let _ = writeln!(s, "{t}");
        }
        if !self.cell_scalars.is_empty() {
            let _ = writeln!(s, "CELL_DATA {}", self.cells.len());
            for (name, v) in &self.cell_scalars {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v {
                    let _ = writeln!(s, "{x}");
                }
            }
        }
        if !self.point_vectors.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.points.len());
            for (name, v) in &self.point_vectors {
                let _ = writeln!(s, "VECTORS {name} double");
                for x in v {
                    let _ = writeln!(s, "{} {} {}", x[0], x[1], x[2]);
                }
            }
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses the subset of the legacy format produced by [`VtkGrid::to_text`].
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if !header.starts_with("# vtk DataFile") {
            return Err(bad("missing '# vtk DataFile' header"));
        }
        let title = lines.next().ok_or_else(|| bad("missing title"))?.to_string();
        let mut tok = Tokens {
            it: lines.flat_map(str::split_whitespace),
        };
        tok.expect("ASCII")?;
        tok.expect("DATASET")?;
        tok.expect("UNSTRUCTURED_GRID")?;
        let mut g = VtkGrid {
            title,
            ..Default::default()
        };
        tok.expect("POINTS")?;
        let n: usize = tok.parse()?;
        tok.next()?;
        for _ in 0..n {
            g.points.push([tok.parse()?, tok.parse()?, tok.parse()?]);
        }
        tok.expect("CELLS")?;
        let m: usize = tok.parse()?;
        let _size: usize = tok.parse()?;
        for _ in 0..m {
            let k: usize = tok.parse()?;
            if k != 8 {
                return Err(bad(&format!("cell with {k} nodes; only hexahedra are supported")));
            }
            let mut c = [0; 8];
            for v in &mut c {
                *v = tok.parse()?;
                if *v >= n {
                    return Err(bad(&format!("node index {v} out of range")));
                }
            }
            g.cells.push(c);
        }
        tok.expect("CELL_TYPES")?;
        let mt: usize = tok.parse()?;
        for _ in 0..mt {
            g.cell_types.push(tok.parse()?);
        }
        let mut section = "";
        while let Some(word) = tok.it.next() {
            match word {
                "CELL_DATA" | "POINT_DATA" => {
                    section = if word == "CELL_DATA" { "cell" } else { "point" };
                    tok.next()?;
                }
                "SCALARS" if section == "cell" => {
                    let name = tok.next()?.to_string();
                    tok.next()?;
                    if tok.next()? != "1" {
                        return Err(bad("only single-component scalars are supported"));
                    }
                    tok.expect("LOOKUP_TABLE")?;
                    tok.next()?;
                    let v = (0..m).map(|_| tok.parse()).collect::<Result<Vec<f64>>>()?;
                    g.cell_scalars.push((name, v));
                }
                "VECTORS" if section == "point" => {
                    let name = tok.next()?.to_string();
                    tok.next()?;
                    let v = (0..n)
                        .map(|_| Ok([tok.parse()?, tok.parse()?, tok.parse()?]))
                        .collect::<Result<Vec<_>>>()?;
                    g.point_vectors.push((name, v));
                }
                other => return Err(bad(&format!("unexpected token '{other}'"))),
            }
        }
        Ok(g)
    }
}

fn bad(msg: &str) -> Error {
    Error::Parse(format!("vtk: {msg}"))
}

struct Tokens<'a, I: Iterator<Item = &'a str>> {
    it: I,
}

impl<'a, I: Iterator<Item = &'a str>> Tokens<'a, I> {
    fn next(&mut self) -> Result<&'a str> {
        self.it.next().ok_or_else(|| bad("unexpected end of file"))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let t = self.next()?;
        if t == word {
            Ok(())
        } else {
            Err(bad(&format!("expected '{word}', found '{t}'")))
        }
    }

    fn parse<V: std::str::FromStr>(&mut self) -> Result<V> {
        let t = self.next()?;
        t.parse().map_err(|_| bad(&format!("cannot parse '{t}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_box_mesh;

    #[test]
    fn uniform_field_round_trips_exactly() {
        let mesh = build_box_mesh([0.3, 0.2, 0.1], 0.1).unwrap();
        let chi = vec![0.1 + 0.2; mesh.n_elements()];
        let u: Vec<f64> = (0..3 * mesh.n_nodes()).map(|i| (i as f64).sin() * 1e-3).collect();
        let mut g = VtkGrid::from_mesh(&mesh, "round trip");
        g.add_cell_scalar("chi", &chi).add_point_vector("displacement", &u);
        let back = VtkGrid::parse(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(back.cell_scalar("chi").unwrap().iter().all(|&c| c == 0.1 + 0.2));
    }

    #[test]
    fn every_cell_is_a_hexahedron() {
        let mesh = build_box_mesh([0.2, 0.1, 0.1], 0.1).unwrap();
        let text = VtkGrid::from_mesh(&mesh, "t").to_text();
        let g = VtkGrid::parse(&text).unwrap();
        assert_eq!(g.cell_types, vec![VTK_HEXAHEDRON; 2]);
        assert!(text.contains("CELL_TYPES 2\n12\n12\n"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mesh = build_box_mesh([0.1, 0.1, 0.1], 0.1).unwrap();
        let text = VtkGrid::from_mesh(&mesh, "t").to_text();
        assert!(VtkGrid::parse(&text[..text.len() / 2]).is_err());
        assert!(VtkGrid::parse("hello").is_err());
    }
}
