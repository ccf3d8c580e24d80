//! Benchmark boundary value problems.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fem::LoadCase;
use crate::mesh::{build_box_mesh, Mesh};
use crate::scalar::{lit, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Quasi-2D beam clamped at both ends, pushed down at midspan.
    ClampedBeam,
    /// Quasi-2D simply supported beam, pushed down at midspan.
    Mbb,
    /// 3D block held at the corners of one face, pushed down at the bottom
    /// edge of the opposite face.
    Cantilever3d,
    /// Single integration point; used by the material-point driver only.
    MaterialPoint,
}

/// Table defaults of a preset.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PresetDefaults {
    /// Design space (mm); the quasi-2D thickness equals one element.
    pub dims: [f64; 3],
    pub e_size: f64,
    pub u_star: f64,
    pub v0: f64,
    pub elements: usize,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::ClampedBeam,
        Preset::Mbb,
        Preset::Cantilever3d,
        Preset::MaterialPoint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::ClampedBeam => "clamped_beam",
            Preset::Mbb => "mbb",
            Preset::Cantilever3d => "cantilever3d",
            Preset::MaterialPoint => "material_point",
        }
    }

    pub fn defaults(self) -> PresetDefaults {
        match self {
            Preset::ClampedBeam => PresetDefaults {
                dims: [2.0, 1.0, 0.02],
                e_size: 0.02,
                u_star: 0.05,
                v0: 0.5,
                elements: 5000,
            },
            Preset::Mbb => PresetDefaults {
                dims: [3.0, 1.0, 0.025],
                e_size: 0.025,
                u_star: 0.02,
                v0: 0.5,
                elements: 4800,
            },
            Preset::Cantilever3d => PresetDefaults {
                dims: [1.5, 1.0, 1.0],
                e_size: 1.0 / 26.0,
                u_star: 0.06,
                v0: 0.15,
                elements: 26364,
            },
            Preset::MaterialPoint => PresetDefaults {
                dims: [1.0, 1.0, 1.0],
                e_size: 1.0,
                u_star: 0.0,
                v0: 1.0,
                elements: 1,
            },
        }
    }

    /// Design-space dimensions for element size `e_size`. In-plane sizes are
    /// fixed; the quasi-2D thickness follows the element size.
    pub fn dims<T: Scalar>(self, e_size: T) -> [T; 3] {
        let d = self.defaults().dims;
        match self {
            Preset::ClampedBeam | Preset::Mbb => [lit(d[0]), lit(d[1]), e_size],
            _ => d.map(lit),
        }
    }

    /// Mesh and boundary data with load magnitude `u_star` (mm, applied downwards).
    pub fn build<T: Scalar>(self, e_size: T, u_star: T) -> Result<(Mesh<T>, LoadCase<T>)> {
        let dims = self.dims(e_size);
        let mesh = build_box_mesh(dims, e_size)?;
        let tol = e_size * lit(1e-6);
        let near = |a: T, b: T| (a - b).abs() <= tol;
        let within = |a: T, c: T, half: T| (a - c).abs() <= half + tol;
        let [lx, ly, lz] = dims;
        let half = lit::<T>(0.5);
        let mut load = LoadCase::new();
        match self {
            Preset::ClampedBeam => {
                let ends = mesh.nodes_where(|x| near(x[0], T::zero()) || near(x[0], lx));
                let top = mesh.nodes_where(|x| near(x[1], ly) && within(x[0], lx * half, e_size));
                load.fix(&ends, &[0, 1, 2]).prescribe(&top, 1, -u_star);
            }
            Preset::Mbb => {
                let left = mesh.nodes_where(|x| near(x[0], T::zero()) && near(x[1], T::zero()));
                let right = mesh.nodes_where(|x| near(x[0], lx) && near(x[1], T::zero()));
                let top = mesh.nodes_where(|x| near(x[1], ly) && within(x[0], lx * half, e_size));
                load.fix(&left, &[0, 1, 2])
                    .fix(&right, &[1, 2])
                    .prescribe(&top, 1, -u_star);
            }
            Preset::Cantilever3d => {
                let corners = mesh.nodes_where(|x| {
                    near(x[0], T::zero())
                        && (near(x[1], T::zero()) || near(x[1], ly))
                        && (near(x[2], T::zero()) || near(x[2], lz))
                });
                let tip = mesh.nodes_where(|x| {
                    near(x[0], lx) && near(x[2], T::zero()) && within(x[1], ly * half, e_size)
                });
                load.fix(&corners, &[0, 1, 2]).prescribe(&tip, 2, -u_star);
            }
            Preset::MaterialPoint => {
                return Err(Error::Config(
                    "bvp: material_point has no finite element model; use the matpoint command".into(),
                ))
            }
        }
        Ok((mesh, load))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "clamped_beam" => Ok(Preset::ClampedBeam),
            "mbb" => Ok(Preset::Mbb),
            "cantilever3d" => Ok(Preset::Cantilever3d),
            "material_point" => Ok(Preset::MaterialPoint),
            other => Err(Error::Config(format!(
                "bvp: unknown preset '{other}' (expected clamped_beam|mbb|cantilever3d|material_point)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_counts_match_table() {
        for p in [Preset::ClampedBeam, Preset::Mbb, Preset::Cantilever3d] {
            let d = p.defaults();
            let (mesh, load) = p.build(d.e_size, d.u_star).unwrap();
            assert_eq!(mesh.n_elements(), d.elements, "{p}");
            assert!(!load.prescribed.is_empty());
        }
    }

    #[test]
    fn load_patches() {
        let (mesh, load) = Preset::ClampedBeam.build(0.02, 0.05).unwrap();
        let loaded: Vec<_> = load.prescribed.iter().filter(|p| p.value != 0.0).collect();
        // three node columns (x = 0.98, 1.0, 1.02), two z layers
        assert_eq!(loaded.len(), 6);
        assert!(loaded.iter().all(|p| p.dir == 1 && p.value == -0.05));
        assert!(loaded.iter().all(|p| (mesh.nodes[p.node][1] - 1.0_f64).abs() < 1e-12));
        let (_, c) = Preset::Cantilever3d.build(1.0 / 26.0, 0.06).unwrap();
        assert_eq!(c.prescribed.iter().filter(|p| p.value == 0.0).count(), 12);
        assert_eq!(c.prescribed.iter().filter(|p| p.value != 0.0).count(), 3);
    }

    #[test]
    fn names_round_trip() {
        for p in Preset::ALL {
            assert_eq!(p.as_str().parse::<Preset>().unwrap(), p);
        }
        assert!("bridge".parse::<Preset>().is_err());
    }
}
