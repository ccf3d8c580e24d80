//! Structured hexahedral meshes, trilinear shape functions and quadrature.

use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Scalar};

/// Local corner coordinates of the reference hexahedron, in VTK/Abaqus order.
pub const HEX_CORNERS: [[i8; 3]; 8] = [
    [-1, -1, -1],
    [1, -1, -1],
    [1, 1, -1],
    [-1, 1, -1],
    [-1, -1, 1],
    [1, -1, 1],
    [1, 1, 1],
    [-1, 1, 1],
];

/// Tensor-product Gauss rule on the reference cube `[-1, 1]³`.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    pub points: [[T; 3]; 8],
    pub weights: [T; 8],
}

impl<T: Scalar> QuadratureRule<T> {
    /// 2×2×2 Gauss–Legendre rule.
    pub fn gauss2() -> Self {
        let g = lit::<T>(1.0 / 3.0_f64.sqrt());
        let points = HEX_CORNERS.map(|c| c.map(|s| g * lit::<T>(f64::from(s))));
        Self {
            points,
            weights: [T::one(); 8],
        }
    }
}

/// Trilinear shape function values at a local point.
pub fn shape_values<T: Scalar>(xi: [T; 3]) -> [T; 8] {
    let eighth = lit::<T>(0.125);
    HEX_CORNERS.map(|c| {
        let f = |k: usize| T::one() + xi[k] * lit::<T>(f64::from(c[k]));
        eighth * f(0) * f(1) * f(2)
    })
}

/// Derivatives of the trilinear shape functions w.r.t. local coordinates.
pub fn shape_local_gradients<T: Scalar>(xi: [T; 3]) -> [[T; 3]; 8] {
    let eighth = lit::<T>(0.125);
    HEX_CORNERS.map(|c| {
        let s = c.map(|v| lit::<T>(f64::from(v)));
        let f = |k: usize| T::one() + xi[k] * s[k];
        [
            eighth * s[0] * f(1) * f(2),
            eighth * f(0) * s[1] * f(2),
            eighth * f(0) * f(1) * s[2],
        ]
    })
}

/// Axis-aligned structured grid of cubic trilinear hexahedra.
///
/// Nodes and elements are numbered lexicographically with x fastest.
#[derive(Clone, Debug)]
pub struct Mesh<T> {
    pub nodes: Vec<[T; 3]>,
    pub elements: Vec<[usize; 8]>,
    pub elem_size: T,
    /// Element counts per axis.
    pub counts: [usize; 3],
    pub dims: [T; 3],
    /// Face-adjacent elements of each element.
    pub neighbors: Vec<Vec<usize>>,
    /// Total design volume Ω.
    pub volume: T,
}

/// Builds the structured box mesh `[0, dims.x] × [0, dims.y] × [0, dims.z]`.
pub fn build_box_mesh<T: Scalar>(dims: [T; 3], e_size: T) -> Result<Mesh<T>> {
    if !(e_size > T::zero()) {
        return Err(Error::InvalidMesh(format!(
            "element size must be positive, got {e_size}"
        )));
    }
    let mut counts = [0usize; 3];
    for (k, axis) in ['x', 'y', 'z'].into_iter().enumerate() {
        let d = to_f64(dims[k]);
        let e = to_f64(e_size);
        let ratio = d / e;
        let n = ratio.round();
        let tol = if std::mem::size_of::<T>() == 4 { 1e-4 } else { 1e-9 };
        if !(d > 0.0) || n < 1.0 || (ratio - n).abs() > tol * n.max(1.0) {
            return Err(Error::NonDivisibleDimension {
                axis,
                dim: d,
                e_size: e,
            });
        }
        counts[k] = n as usize;
    }
    let [nx, ny, nz] = counts;
    let (px, py) = (nx + 1, ny + 1);
    let node_id = |i: usize, j: usize, k: usize| i + px * (j + py * k);

    let mut nodes = Vec::with_capacity(px * py * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let c = |n: usize| e_size * lit::<T>(n as f64);
                nodes.push([c(i), c(j), c(k)]);
            }
        }
    }

    let n_el = nx * ny * nz;
    let mut elements = Vec::with_capacity(n_el);
    let mut neighbors = Vec::with_capacity(n_el);
    let elem_id = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                elements.push([
                    node_id(i, j, k),
                    node_id(i + 1, j, k),
                    node_id(i + 1, j + 1, k),
                    node_id(i, j + 1, k),
                    node_id(i, j, k + 1),
                    node_id(i + 1, j, k + 1),
                    node_id(i + 1, j + 1, k + 1),
                    node_id(i, j + 1, k + 1),
                ]);
                let mut nb = Vec::with_capacity(6);
                if i > 0 {
                    nb.push(elem_id(i - 1, j, k));
                }
                if i + 1 < nx {
                    nb.push(elem_id(i + 1, j, k));
                }
                if j > 0 {
                    nb.push(elem_id(i, j - 1, k));
                }
                if j + 1 < ny {
                    nb.push(elem_id(i, j + 1, k));
                }
                if k > 0 {
                    nb.push(elem_id(i, j, k - 1));
                }
                if k + 1 < nz {
                    nb.push(elem_id(i, j, k + 1));
                }
                neighbors.push(nb);
            }
        }
    }

    Ok(Mesh {
        nodes,
        elements,
        elem_size: e_size,
        counts,
        dims,
        neighbors,
        volume: dims[0] * dims[1] * dims[2],
    })
}

impl<T: Scalar> Mesh<T> {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Number of nodes per axis.
    pub fn node_counts(&self) -> [usize; 3] {
        self.counts.map(|c| c + 1)
    }

    pub fn element_volume(&self, _elem: usize) -> T {
        self.elem_size * self.elem_size * self.elem_size
    }

    pub fn element_center(&self, elem: usize) -> [T; 3] {
        let eighth = lit::<T>(0.125);
        let mut c = [T::zero(); 3];
        for &n in &self.elements[elem] {
            for k in 0..3 {
                c[k] += self.nodes[n][k] * eighth;
            }
        }
        c
    }

    /// Grid indices `(i, j, k)` of an element.
    pub fn element_grid_index(&self, elem: usize) -> [usize; 3] {
        let [nx, ny, _] = self.counts;
        [elem % nx, (elem / nx) % ny, elem / (nx * ny)]
    }

    /// Nodes whose coordinates satisfy `pred`, in ascending id order.
    pub fn nodes_where(&self, mut pred: impl FnMut(&[T; 3]) -> bool) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, x)| pred(x))
            .map(|(i, _)| i)
            .collect()
    }

    /// Physical shape-function gradients of `elem` at local point `xi` (1/mm),
    /// together with the Jacobian determinant.
    pub fn shape_gradients_at(&self, elem: usize, xi: [T; 3]) -> ([[T; 3]; 8], T) {
        let local = shape_local_gradients(xi);
        let conn = &self.elements[elem];
        // J_ij = Σ_a x_a,i dN_a/dξ_j
        let mut jac = [[T::zero(); 3]; 3];
        for (a, g) in local.iter().enumerate() {
            let x = self.nodes[conn[a]];
            for i in 0..3 {
                for j in 0..3 {
                    jac[i][j] += x[i] * g[j];
                }
            }
        }
        let (inv, det) = invert3(&jac);
        // ∇N_a = J^{-T} ∇_ξ N_a
        let grads = local.map(|g| {
            let mut out = [T::zero(); 3];
            for (i, o) in out.iter_mut().enumerate() {
                for j in 0..3 {
                    *o += inv[j][i] * g[j];
                }
            }
            out
        });
        (grads, det)
    }

    /// Physical shape-function gradients at quadrature point `qp` of the 2×2×2 rule.
    pub fn shape_gradients(&self, elem: usize, qp: usize) -> [[T; 3]; 8] {
        let rule = QuadratureRule::<T>::gauss2();
        self.shape_gradients_at(elem, rule.points[qp]).0
    }

    /// Checks the structural invariants; used by tests and after deserialization.
    pub fn validate(&self) -> Result<()> {
        for (e, conn) in self.elements.iter().enumerate() {
            let mut sorted = *conn;
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("element {e} repeats a node")));
            }
            if conn.iter().any(|&n| n >= self.nodes.len()) {
                return Err(Error::InvalidMesh(format!("element {e} references a missing node")));
            }
        }
        for (a, nb) in self.neighbors.iter().enumerate() {
            if nb.len() > 6 {
                return Err(Error::InvalidMesh(format!("element {a} has {} neighbours", nb.len())));
            }
            for &b in nb {
                if !self.neighbors[b].contains(&a) {
                    return Err(Error::InvalidMesh(format!(
                        "neighbour relation {a} -> {b} is not symmetric"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn invert3<T: Scalar>(m: &[[T; 3]; 3]) -> ([[T; 3]; 3], T) {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let inv_det = T::one() / det;
    let inv = [
        [
            c00 * inv_det,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det,
        ],
        [
            c01 * inv_det,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det,
        ],
        [
            c02 * inv_det,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det,
        ],
    ];
    (inv, det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_has_no_neighbours() {
        let m = build_box_mesh([0.1, 0.1, 0.1], 0.1).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert!(m.neighbors[0].is_empty());
        assert_eq!(m.n_nodes(), 8);
    }

    #[test]
    fn row_of_three() {
        let m = build_box_mesh([0.3, 0.1, 0.1], 0.1).unwrap();
        assert_eq!(m.n_elements(), 3);
        assert_eq!(m.neighbors[0], vec![1]);
        assert_eq!(m.neighbors[1], vec![0, 2]);
        assert_eq!(m.neighbors[2], vec![1]);
    }

    #[test]
    fn clamped_beam_box_has_5000_elements() {
        let m = build_box_mesh([2.0, 1.0, 0.02], 0.02).unwrap();
        assert_eq!(m.n_elements(), 5000);
        m.validate().unwrap();
    }

    #[test]
    fn non_divisible_axis_is_named() {
        let err = build_box_mesh([0.3, 0.15, 0.1], 0.1).unwrap_err();
        match err {
            Error::NonDivisibleDimension { axis, .. } => assert_eq!(axis, 'y'),
            other => panic!("unexpected {other}"),
        }
        assert!(err.to_string().contains("y axis"));
    }

    #[test]
    fn interior_element_has_six_neighbours() {
        let m = build_box_mesh([0.3, 0.3, 0.3], 0.1).unwrap();
        assert_eq!(m.neighbors[13].len(), 6);
        let total: usize = m.neighbors.iter().map(Vec::len).sum();
        // 3 axes × 2 interior faces per line × 9 lines, counted from both sides
        assert_eq!(total, 2 * 3 * 2 * 9);
    }

    #[test]
    fn center_gradient_of_origin_node() {
        let m = build_box_mesh([1.0_f64, 1.0, 1.0], 1.0).unwrap();
        let (g, det) = m.shape_gradients_at(0, [0.0; 3]);
        assert_eq!(g[0], [-0.25, -0.25, -0.25]);
        assert!((det - 0.125).abs() < 1e-15);
        let m2 = build_box_mesh([0.5, 0.5, 0.5], 0.5).unwrap();
        let (g2, _) = m2.shape_gradients_at(0, [0.0; 3]);
        assert_eq!(g2[0], [-0.5, -0.5, -0.5]);
    }

    #[test]
    fn gradient_rows_sum_to_zero() {
        let m = build_box_mesh([0.2, 0.1, 0.1], 0.1).unwrap();
        for qp in 0..8 {
            let g = m.shape_gradients(1, qp);
            for d in 0..3 {
                let s: f64 = g.iter().map(|r| r[d]).sum();
                assert!(s.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_weights_sum_to_reference_volume() {
        let q = QuadratureRule::<f64>::gauss2();
        assert_eq!(q.weights.iter().sum::<f64>(), 8.0);
        // Exact for the trilinear x*y*z monomial's square in each direction up to cubic.
        let integral: f64 = q
            .points
            .iter()
            .zip(q.weights)
            .map(|(p, w)| w * p[0] * p[0] * p[1] * p[1])
            .sum();
        assert!((integral - 8.0 / 9.0).abs() < 1e-14);
    }

    #[test]
    fn partition_of_unity() {
        let v = shape_values([0.3, -0.7, 0.1]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
