//! Metrics on thresholded density fields.

use crate::mesh::Mesh;
use crate::scalar::{lit, Scalar};

/// Default threshold separating material from void.
pub const SOLID_THRESHOLD: f64 = 0.5;

/// Fraction of the elements with centroid in `x ∈ [x0, x1]` whose density is
/// below `threshold`.
pub fn void_fraction_in_band<T: Scalar>(mesh: &Mesh<T>, chi: &[T], threshold: T, x0: T, x1: T) -> T {
    let mut total = 0usize;
    let mut void = 0usize;
    for e in 0..mesh.n_elements() {
        let x = mesh.element_center(e)[0];
        if x >= x0 && x <= x1 {
            total += 1;
            if chi[e] < threshold {
                void += 1;
            }
        }
    }
    if total == 0 {
        T::zero()
    } else {
        lit::<T>(void as f64) / lit(total as f64)
    }
}

/// Void fraction of the middle third along x.
pub fn central_void_fraction<T: Scalar>(mesh: &Mesh<T>, chi: &[T], threshold: T) -> T {
    let lx = mesh.dims[0];
    let third = lx / lit(3.0);
    void_fraction_in_band(mesh, chi, threshold, third, lx - third)
}

/// Face-connected components of the elements with `chi >= threshold`.
#[derive(Clone, Debug, PartialEq)]
pub struct Components {
    /// Component index per element, `None` for void elements.
    pub label: Vec<Option<usize>>,
    /// Element count per component.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn largest(&self) -> Option<usize> {
        (0..self.sizes.len()).max_by_key(|&c| self.sizes[c])
    }

    /// Components containing at least one element that touches a node of `nodes`.
    pub fn touching<T>(&self, mesh: &Mesh<T>, nodes: &[usize]) -> Vec<usize> {
        let mut mark = vec![false; mesh.nodes.len()];
        for &n in nodes {
            mark[n] = true;
        }
        let mut out: Vec<usize> = mesh
            .elements
            .iter()
            .enumerate()
            .filter(|(_, el)| el.iter().any(|&n| mark[n]))
            .filter_map(|(e, _)| self.label[e])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn solid_components<T: Scalar>(mesh: &Mesh<T>, chi: &[T], threshold: T) -> Components {
    let n = mesh.n_elements();
    let mut label = vec![None; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for seed in 0..n {
        if label[seed].is_some() || chi[seed] < threshold {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        label[seed] = Some(id);
        stack.push(seed);
        while let Some(e) = stack.pop() {
            size += 1;
            for &nb in &mesh.neighbors[e] {
                if label[nb].is_none() && chi[nb] >= threshold {
                    label[nb] = Some(id);
                    stack.push(nb);
                }
            }
        }
        sizes.push(size);
    }
    Components { label, sizes }
}
