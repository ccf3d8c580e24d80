//! Small-strain finite elements on the structured hexahedral mesh: element
//! kernels, Dirichlet bookkeeping, assembly and the displacement solve for
//! frozen plastic strains and densities.

mod band;
mod pcg;

pub use band::{BandCholesky, BandMatrix};
pub use pcg::{pcg, PcgStats};

use crate::error::{Error, Result};
use crate::material::{stress, PointState, StiffnessTensor};
use crate::mesh::{Mesh, QuadratureRule};
use crate::scalar::{lit, to_f64, Scalar};
use crate::tensor::{SymTensor2, Tensor4};

pub const ELEMENT_DOFS: usize = 24;
pub const QUADRATURE_POINTS: usize = 8;

pub type ElementMatrix<T> = [[T; ELEMENT_DOFS]; ELEMENT_DOFS];

/// Density and per-quadrature-point plastic strains of one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementState<T> {
    pub chi: T,
    pub eps_p: [SymTensor2<T>; QUADRATURE_POINTS],
}

impl<T: Scalar> ElementState<T> {
    pub fn new(chi: T) -> Self {
        Self {
            chi,
            eps_p: [SymTensor2::zero(); QUADRATURE_POINTS],
        }
    }

    pub fn point(&self, qp: usize, eps: SymTensor2<T>) -> PointState<T> {
        PointState::new(eps, self.eps_p[qp], self.chi)
    }
}

/// Quadrature data shared by every element of a structured mesh. All elements
/// are congruent cubes, so one copy serves the whole mesh.
#[derive(Clone, Debug)]
pub struct ElementKernel<T> {
    /// Strain-displacement matrix per quadrature point (Mandel rows).
    pub b: [[[T; ELEMENT_DOFS]; 6]; QUADRATURE_POINTS],
    /// Quadrature weight times Jacobian determinant (mm³).
    pub dv: [T; QUADRATURE_POINTS],
    /// `∫ Bᵀ 𝔼₀ B dV` of a full-material element.
    pub ke0: ElementMatrix<T>,
}

impl<T: Scalar> ElementKernel<T> {
    pub fn new(mesh: &Mesh<T>, stiff: &StiffnessTensor<T>) -> Self {
        let rule = QuadratureRule::<T>::gauss2();
        let r = lit::<T>(std::f64::consts::FRAC_1_SQRT_2);
        let mut b = [[[T::zero(); ELEMENT_DOFS]; 6]; QUADRATURE_POINTS];
        let mut dv = [T::zero(); QUADRATURE_POINTS];
        for qp in 0..QUADRATURE_POINTS {
            let (grads, det) = mesh.shape_gradients_at(0, rule.points[qp]);
            dv[qp] = rule.weights[qp] * det;
            let bq = &mut b[qp];
            for (a, g) in grads.iter().enumerate() {
                let (x, y, z) = (3 * a, 3 * a + 1, 3 * a + 2);
                bq[0][x] = g[0];
                bq[1][y] = g[1];
                bq[2][z] = g[2];
                bq[3][y] = r * g[2];
                bq[3][z] = r * g[1];
                bq[4][x] = r * g[2];
                bq[4][z] = r * g[0];
                bq[5][x] = r * g[1];
                bq[5][y] = r * g[0];
            }
        }
        let mut kernel = Self {
            b,
            dv,
            ke0: [[T::zero(); ELEMENT_DOFS]; ELEMENT_DOFS],
        };
        kernel.ke0 = kernel.element_matrix(|_| stiff.tensor);
        kernel
    }

    /// Strain `B u_e` at a quadrature point.
    pub fn strain(&self, qp: usize, ue: &[T; ELEMENT_DOFS]) -> SymTensor2<T> {
        let mut e = SymTensor2::zero();
        for (i, row) in self.b[qp].iter().enumerate() {
            e[i] = row.iter().zip(ue).map(|(b, u)| *b * *u).sum();
        }
        e
    }

    /// `fe += dV Bᵀ σ`.
    pub fn add_internal_force(&self, qp: usize, sigma: &SymTensor2<T>, fe: &mut [T; ELEMENT_DOFS]) {
        for (i, row) in self.b[qp].iter().enumerate() {
            let s = sigma[i] * self.dv[qp];
            for (f, b) in fe.iter_mut().zip(row) {
                *f += *b * s;
            }
        }
    }

    /// `Σ_qp dV Bᵀ D_qp B`.
    pub fn element_matrix(&self, d: impl Fn(usize) -> Tensor4<T>) -> ElementMatrix<T> {
        let mut k = [[T::zero(); ELEMENT_DOFS]; ELEMENT_DOFS];
        for qp in 0..QUADRATURE_POINTS {
            let dq = d(qp);
            let b = &self.b[qp];
            // DB, 6 × 24
            let mut db = [[T::zero(); ELEMENT_DOFS]; 6];
            for i in 0..6 {
                for j in 0..6 {
                    let dij = dq.0[i][j] * self.dv[qp];
                    if dij != T::zero() {
                        for c in 0..ELEMENT_DOFS {
                            db[i][c] += dij * b[j][c];
                        }
                    }
                }
            }
            for r in 0..ELEMENT_DOFS {
                for i in 0..6 {
                    let bir = b[i][r];
                    if bir != T::zero() {
                        for c in 0..ELEMENT_DOFS {
                            k[r][c] += bir * db[i][c];
                        }
                    }
                }
            }
        }
        k
    }
}

/// One prescribed displacement component (mm).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrescribedDof<T> {
    pub node: usize,
    pub dir: usize,
    pub value: T,
}

impl<T> PrescribedDof<T> {
    pub fn dof(&self) -> usize {
        3 * self.node + self.dir
    }
}

/// Dirichlet data plus optional nodal forces (N).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LoadCase<T> {
    pub prescribed: Vec<PrescribedDof<T>>,
    pub nodal_forces: Vec<(usize, T)>,
}

impl<T: Scalar> LoadCase<T> {
    pub fn new() -> Self {
        Self {
            prescribed: Vec::new(),
            nodal_forces: Vec::new(),
        }
    }

    /// Prescribes `value` in direction `dir` at every node of `nodes`.
    pub fn prescribe(&mut self, nodes: &[usize], dir: usize, value: T) -> &mut Self {
        for &node in nodes {
            self.prescribed.push(PrescribedDof { node, dir, value });
        }
        self
    }

    pub fn fix(&mut self, nodes: &[usize], dirs: &[usize]) -> &mut Self {
        for &d in dirs {
            self.prescribe(nodes, d, T::zero());
        }
        self
    }

    /// Same constraints with all prescribed values multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            prescribed: self
                .prescribed
                .iter()
                .map(|p| PrescribedDof {
                    value: p.value * factor,
                    ..*p
                })
                .collect(),
            nodal_forces: self.nodal_forces.iter().map(|&(d, f)| (d, f * factor)).collect(),
        }
    }

    /// Removes exact duplicates and rejects contradictory or dangling entries.
    pub fn normalized(&self, n_nodes: usize) -> Result<Self> {
        if self.prescribed.is_empty() {
            return Err(Error::Fem("load case has no prescribed displacements".into()));
        }
        let mut p = self.prescribed.clone();
        for q in &p {
            if q.node >= n_nodes || q.dir > 2 {
                return Err(Error::Fem(format!(
                    "prescribed dof (node {}, dir {}) outside the mesh",
                    q.node, q.dir
                )));
            }
        }
        p.sort_by_key(|q| q.dof());
        let mut out: Vec<PrescribedDof<T>> = Vec::with_capacity(p.len());
        for q in p {
            match out.last() {
                Some(last) if last.dof() == q.dof() => {
                    if last.value != q.value {
                        return Err(Error::Fem(format!(
                            "node {} dir {} prescribed twice with different values",
                            q.node, q.dir
                        )));
                    }
                }
                _ => out.push(q),
            }
        }
        Ok(Self {
            prescribed: out,
            nodal_forces: self.nodal_forces.clone(),
        })
    }
}

const NONE: usize = usize::MAX;

/// Equation numbering of the free dofs. Prescribed dofs are eliminated; free
/// dofs are numbered in a node order that runs fastest along the axis with
/// the fewest nodes, which keeps the matrix bandwidth small.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub n_dofs: usize,
    /// Equation of each global dof, `None` when prescribed.
    eq: Vec<usize>,
    /// Global dof of each equation.
    pub free: Vec<usize>,
    /// Global dofs with prescribed values, ascending.
    pub prescribed: Vec<usize>,
    pub bandwidth: usize,
}

impl DofMap {
    pub fn new<T: Scalar>(mesh: &Mesh<T>, load: &LoadCase<T>) -> Self {
        let n_dofs = 3 * mesh.n_nodes();
        let mut is_fixed = vec![false; n_dofs];
        for p in &load.prescribed {
            is_fixed[p.dof()] = true;
        }
        let [px, py, pz] = mesh.node_counts();
        let counts = [px, py, pz];
        let mut axes = [0usize, 1, 2];
        axes.sort_by_key(|&a| counts[a]);
        let mut order: Vec<usize> = (0..mesh.n_nodes()).collect();
        let key = |n: usize| {
            let g = [n % px, (n / px) % py, n / (px * py)];
            g[axes[0]] + counts[axes[0]] * (g[axes[1]] + counts[axes[1]] * g[axes[2]])
        };
        order.sort_by_key(|&n| key(n));

        let mut eq = vec![NONE; n_dofs];
        let mut free = Vec::with_capacity(n_dofs);
        for n in order {
            for d in 0..3 {
                let dof = 3 * n + d;
                if !is_fixed[dof] {
                    eq[dof] = free.len();
                    free.push(dof);
                }
            }
        }
        let prescribed = (0..n_dofs).filter(|&d| is_fixed[d]).collect();
        let mut map = Self {
            n_dofs,
            eq,
            free,
            prescribed,
            bandwidth: 0,
        };
        let mut bw = 0;
        for e in 0..mesh.n_elements() {
            let eqs = map.element_equations(mesh, e);
            let live = eqs.iter().copied().filter(|&q| q != NONE);
            let (lo, hi) = live.fold((NONE, 0), |(lo, hi), q| (lo.min(q), hi.max(q)));
            if lo != NONE {
                bw = bw.max(hi - lo);
            }
        }
        map.bandwidth = bw;
        map
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn equation(&self, dof: usize) -> Option<usize> {
        match self.eq[dof] {
            NONE => None,
            q => Some(q),
        }
    }

    fn element_equations<T: Scalar>(&self, mesh: &Mesh<T>, e: usize) -> [usize; ELEMENT_DOFS] {
        let dofs = element_dofs(mesh, e);
        dofs.map(|d| self.eq[d])
    }

    /// Restriction of a global vector to the free dofs.
    pub fn restrict<T: Scalar>(&self, global: &[T]) -> Vec<T> {
        self.free.iter().map(|&d| global[d]).collect()
    }
}

/// Global dof ids of an element, node-major.
pub fn element_dofs<T: Scalar>(mesh: &Mesh<T>, e: usize) -> [usize; ELEMENT_DOFS] {
    let conn = &mesh.elements[e];
    std::array::from_fn(|k| 3 * conn[k / 3] + k % 3)
}

fn gather<T: Scalar>(u: &[T], dofs: &[usize; ELEMENT_DOFS]) -> [T; ELEMENT_DOFS] {
    dofs.map(|d| u[d])
}

/// Compressed sparse row matrix over all dofs.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Sparsity of the nodal coupling graph (nodes sharing an element).
    fn with_mesh_pattern(mesh: &Mesh<T>) -> Self {
        let nn = mesh.n_nodes();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nn];
        for conn in &mesh.elements {
            for &a in conn {
                adj[a].extend_from_slice(conn);
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
            for _ in 0..3 {
                for &m in list.iter() {
                    cols.extend_from_slice(&[3 * m, 3 * m + 1, 3 * m + 2]);
                }
                row_ptr.push(cols.len());
            }
        }
        let vals = vec![T::zero(); cols.len()];
        Self {
            n: 3 * nn,
            row_ptr,
            cols,
            vals,
        }
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.position(i, j).map_or(T::zero(), |k| self.vals[k])
    }

    fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.position(i, j).expect("entry inside the mesh sparsity pattern");
        self.vals[k] += v;
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    /// `max |A_ij − A_ji| / max |A_ij|`.
    pub fn relative_asymmetry(&self) -> T {
        let mut amax = T::zero();
        let mut dmax = T::zero();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                amax = amax.max(self.vals[k].abs());
                dmax = dmax.max((self.vals[k] - self.get(j, i)).abs());
            }
        }
        if amax > T::zero() {
            dmax / amax
        } else {
            T::zero()
        }
    }
}

/// Residual `f_ext − f_int` and tangent over all dofs, with the equation map
/// used to eliminate the prescribed dofs.
#[derive(Clone, Debug)]
pub struct GlobalSystem<T> {
    pub residual: Vec<T>,
    pub tangent: CsrMatrix<T>,
    pub dof_map: DofMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverKind {
    /// Direct when the band fits [`SolveOptions::direct_limit`], else PCG.
    Auto,
    Direct,
    Pcg,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions<T> {
    pub solver: SolverKind,
    /// Relative residual of the iterative solver.
    pub pcg_tol: T,
    pub pcg_max_iter: usize,
    /// Newton stops when `‖r_free‖∞ ≤ tol · ‖f_int‖∞`.
    pub newton_tol: T,
    pub max_newton: usize,
    /// Largest band storage `n · (bw + 1)` accepted for the direct solver.
    pub direct_limit: usize,
}

impl<T: Scalar> Default for SolveOptions<T> {
    fn default() -> Self {
        Self {
            solver: SolverKind::Auto,
            pcg_tol: lit(1e-10),
            pcg_max_iter: 50_000,
            newton_tol: lit(1e-8),
            max_newton: 5,
            direct_limit: 30_000_000,
        }
    }
}

enum Factor<T> {
    Direct(BandCholesky<T>),
    Pcg {
        elem_scale: Vec<T>,
        diag: Vec<T>,
        tol: T,
        max_iter: usize,
    },
}

/// Factorized (or preconditioned) stiffness of the free dofs for one density field.
pub struct StiffnessSolver<T> {
    factor: Factor<T>,
}

impl<T: Scalar> StiffnessSolver<T> {
    pub fn is_direct(&self) -> bool {
        matches!(self.factor, Factor::Direct(_))
    }
}

/// Result of a displacement solve.
#[derive(Clone, Debug)]
pub struct Displacements<T> {
    pub u: Vec<T>,
    /// Internal forces over all dofs at `u`.
    pub f_int: Vec<T>,
    pub newton_iterations: usize,
    /// Final `‖r_free‖∞` (N).
    pub residual: T,
    pub pcg_iterations: usize,
}

/// Mesh, element kernel, elasticity and boundary data of one problem.
#[derive(Clone, Debug)]
pub struct FemModel<T> {
    pub mesh: Mesh<T>,
    pub kernel: ElementKernel<T>,
    pub stiff: StiffnessTensor<T>,
    pub load: LoadCase<T>,
    pub dofs: DofMap,
}

impl<T: Scalar> FemModel<T> {
    pub fn new(mesh: Mesh<T>, stiff: StiffnessTensor<T>, load: &LoadCase<T>) -> Result<Self> {
        let load = load.normalized(mesh.n_nodes())?;
        let kernel = ElementKernel::new(&mesh, &stiff);
        let dofs = DofMap::new(&mesh, &load);
        Ok(Self {
            mesh,
            kernel,
            stiff,
            load,
            dofs,
        })
    }

    /// Same model with prescribed values scaled by `factor`.
    pub fn with_load_factor(&self, factor: T) -> Self {
        Self {
            load: self.load.scaled(factor),
            ..self.clone()
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.n_dofs
    }

    /// Displacement vector carrying the prescribed values and zero elsewhere.
    pub fn lifted(&self) -> Vec<T> {
        let mut u = vec![T::zero(); self.n_dofs()];
        for p in &self.load.prescribed {
            u[p.dof()] = p.value;
        }
        u
    }

    pub fn external_forces(&self) -> Vec<T> {
        let mut f = vec![T::zero(); self.n_dofs()];
        for &(d, v) in &self.load.nodal_forces {
            f[d] += v;
        }
        f
    }

    /// Strains at the eight quadrature points of element `e`.
    pub fn element_strains(&self, u: &[T], e: usize) -> [SymTensor2<T>; QUADRATURE_POINTS] {
        let ue = gather(u, &element_dofs(&self.mesh, e));
        std::array::from_fn(|qp| self.kernel.strain(qp, &ue))
    }

    /// Internal forces for an arbitrary stress callback `(element, qp, ε) → σ`.
    pub fn internal_forces_with(
        &self,
        u: &[T],
        mut sigma: impl FnMut(usize, usize, &SymTensor2<T>) -> SymTensor2<T>,
    ) -> Vec<T> {
        let mut f = vec![T::zero(); self.n_dofs()];
        for e in 0..self.mesh.n_elements() {
            let dofs = element_dofs(&self.mesh, e);
            let ue = gather(u, &dofs);
            let mut fe = [T::zero(); ELEMENT_DOFS];
            for qp in 0..QUADRATURE_POINTS {
                let eps = self.kernel.strain(qp, &ue);
                let s = sigma(e, qp, &eps);
                self.kernel.add_internal_force(qp, &s, &mut fe);
            }
            for (d, v) in dofs.iter().zip(fe) {
                f[*d] += v;
            }
        }
        f
    }

    /// Internal forces `∫ Bᵀ χ³ 𝔼₀ (ε − ε^p) dV`.
    pub fn internal_forces(&self, states: &[ElementState<T>], u: &[T]) -> Vec<T> {
        self.internal_forces_with(u, |e, qp, eps| stress(&states[e].point(qp, *eps), &self.stiff))
    }

    /// Assembles residual and tangent at displacement `u`.
    pub fn assemble(&self, states: &[ElementState<T>], u: &[T]) -> GlobalSystem<T> {
        let f_int = self.internal_forces(states, u);
        let residual = self
            .external_forces()
            .iter()
            .zip(&f_int)
            .map(|(a, b)| *a - *b)
            .collect();
        let mut k = CsrMatrix::with_mesh_pattern(&self.mesh);
        for (e, st) in states.iter().enumerate() {
            let c3 = st.chi * st.chi * st.chi;
            let dofs = element_dofs(&self.mesh, e);
            for (a, &ra) in dofs.iter().enumerate() {
                for (b, &cb) in dofs.iter().enumerate() {
                    k.add(ra, cb, c3 * self.kernel.ke0[a][b]);
                }
            }
        }
        GlobalSystem {
            residual,
            tangent: k,
            dof_map: self.dofs.clone(),
        }
    }

    fn use_direct(&self, opts: &SolveOptions<T>) -> bool {
        match opts.solver {
            SolverKind::Direct => true,
            SolverKind::Pcg => false,
            SolverKind::Auto => {
                self.dofs.n_free().saturating_mul(self.dofs.bandwidth + 1) <= opts.direct_limit
            }
        }
    }

    /// Factorizes the free-dof stiffness for element densities `chi`.
    pub fn factorize(&self, chi: &[T], opts: &SolveOptions<T>) -> Result<StiffnessSolver<T>> {
        let scale: Vec<T> = chi.iter().map(|c| *c * *c * *c).collect();
        if self.use_direct(opts) {
            let ke0 = &self.kernel.ke0;
            self.factorize_elements(|e, k| {
                for (r, row) in k.iter_mut().enumerate() {
                    for (c, v) in row.iter_mut().enumerate() {
                        *v = scale[e] * ke0[r][c];
                    }
                }
            })
        } else {
            let mut diag = vec![T::zero(); self.dofs.n_free()];
            for (e, s) in scale.iter().enumerate() {
                let eqs = self.dofs.element_equations(&self.mesh, e);
                for (a, &q) in eqs.iter().enumerate() {
                    if q != NONE {
                        diag[q] += *s * self.kernel.ke0[a][a];
                    }
                }
            }
            Ok(StiffnessSolver {
                factor: Factor::Pcg {
                    elem_scale: scale,
                    diag,
                    tol: opts.pcg_tol,
                    max_iter: opts.pcg_max_iter,
                },
            })
        }
    }

    /// Direct factorization of an arbitrary set of element matrices, filled by
    /// `fill(element, matrix)`.
    pub fn factorize_elements(
        &self,
        mut fill: impl FnMut(usize, &mut ElementMatrix<T>),
    ) -> Result<StiffnessSolver<T>> {
        let mut band = BandMatrix::zeros(self.dofs.n_free(), self.dofs.bandwidth);
        let mut k = [[T::zero(); ELEMENT_DOFS]; ELEMENT_DOFS];
        for e in 0..self.mesh.n_elements() {
            fill(e, &mut k);
            let eqs = self.dofs.element_equations(&self.mesh, e);
            for (a, &qa) in eqs.iter().enumerate() {
                if qa == NONE {
                    continue;
                }
                for (b, &qb) in eqs.iter().enumerate() {
                    if qb != NONE && qb <= qa {
                        band.add(qa, qb, k[a][b]);
                    }
                }
            }
        }
        Ok(StiffnessSolver {
            factor: Factor::Direct(band.factorize()?),
        })
    }

    /// `K_ff x` for the matrix-free operator with element scales `scale`.
    fn apply_scaled(&self, scale: &[T], x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
        let ke0 = &self.kernel.ke0;
        for (e, s) in scale.iter().enumerate() {
            let eqs = self.dofs.element_equations(&self.mesh, e);
            let xe = eqs.map(|q| if q == NONE { T::zero() } else { x[q] });
            for (a, &qa) in eqs.iter().enumerate() {
                if qa == NONE {
                    continue;
                }
                let row = &ke0[a];
                let v: T = row.iter().zip(&xe).map(|(k, x)| *k * *x).sum();
                y[qa] += *s * v;
            }
        }
    }

    /// Solves `K_ff x = rhs` on the free dofs.
    pub fn solve_free(
        &self,
        solver: &StiffnessSolver<T>,
        rhs: &[T],
        guess: Option<&[T]>,
    ) -> Result<(Vec<T>, usize)> {
        match &solver.factor {
            Factor::Direct(f) => Ok((f.solve(rhs), 0)),
            Factor::Pcg {
                elem_scale,
                diag,
                tol,
                max_iter,
            } => {
                let mut x = guess.map_or_else(|| vec![T::zero(); rhs.len()], <[T]>::to_vec);
                let st = pcg(
                    |v, out| self.apply_scaled(elem_scale, v, out),
                    diag,
                    rhs,
                    &mut x,
                    *tol,
                    *max_iter,
                );
                if !st.converged {
                    return Err(Error::Fem(format!(
                        "conjugate gradients stalled after {} iterations (relative residual {:e})",
                        st.iterations, st.relative_residual
                    )));
                }
                Ok((x, st.iterations))
            }
        }
    }

    /// Displacements for frozen `(ε^p, χ)`: Newton iterations on
    /// `r(u) = f_ext − f_int(u)` starting from the lifted Dirichlet values.
    /// The problem is affine in `u`, so one iteration reaches the tolerance.
    pub fn solve_displacements(
        &self,
        states: &[ElementState<T>],
        solver: &StiffnessSolver<T>,
        opts: &SolveOptions<T>,
    ) -> Result<Displacements<T>> {
        let mut u = self.lifted();
        let f_ext = self.external_forces();
        let mut newton_iterations = 0;
        let mut pcg_iterations = 0;
        loop {
            let f_int = self.internal_forces(states, &u);
            let r: Vec<T> = self
                .dofs
                .free
                .iter()
                .map(|&d| f_ext[d] - f_int[d])
                .collect();
            let rmax = r.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let fmax = f_int.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let converged = rmax <= opts.newton_tol * fmax || rmax == T::zero();
            if converged || newton_iterations == opts.max_newton {
                if !converged {
                    return Err(Error::Fem(format!(
                        "displacement Newton did not converge: ‖r‖∞ = {:e} after {newton_iterations} iterations",
                        to_f64(rmax)
                    )));
                }
                return Ok(Displacements {
                    u,
                    f_int,
                    newton_iterations,
                    residual: rmax,
                    pcg_iterations,
                });
            }
            let (du, its) = self.solve_free(solver, &r, None)?;
            pcg_iterations += its;
            for (q, &d) in self.dofs.free.iter().enumerate() {
                u[d] += du[q];
            }
            newton_iterations += 1;
        }
    }

    /// Reaction forces `f_int` at the prescribed dofs, in the order of
    /// `load.prescribed`.
    pub fn reactions(&self, f_int: &[T]) -> Vec<T> {
        self.load.prescribed.iter().map(|p| f_int[p.dof()]).collect()
    }

    /// Prescribed values in the order of `load.prescribed`.
    pub fn prescribed_values(&self) -> Vec<T> {
        self.load.prescribed.iter().map(|p| p.value).collect()
    }

    /// Sum of internal forces per direction over all dofs.
    pub fn force_balance(f_int: &[T]) -> [T; 3] {
        let mut s = [T::zero(); 3];
        for (d, v) in f_int.iter().enumerate() {
            s[d % 3] += *v;
        }
        s
    }
}

/// Stiffness measure `S = (f · û) / (û · û)` (N/mm): the secant stiffness of
/// the structure along the prescribed displacement pattern. Grows with the
/// reaction forces, so a stiffer structure has a larger `S`.
pub fn stiffness_metric<T: Scalar>(reactions: &[T], u_hat: &[T]) -> Result<T> {
    let work: T = reactions.iter().zip(u_hat).map(|(f, u)| *f * *u).sum();
    let uu: T = u_hat.iter().map(|u| *u * *u).sum();
    if work == T::zero() || uu == T::zero() || !work.is_finite() {
        return Err(Error::DegenerateLoad);
    }
    Ok(work / uu)
}

/// External work `1 / (f · û)` (1/(N·mm)), the reciprocal form of the metric.
pub fn inverse_work<T: Scalar>(reactions: &[T], u_hat: &[T]) -> Result<T> {
    let work: T = reactions.iter().zip(u_hat).map(|(f, u)| *f * *u).sum();
    if work == T::zero() || !work.is_finite() {
        return Err(Error::DegenerateLoad);
    }
    Ok(T::one() / work)
}
