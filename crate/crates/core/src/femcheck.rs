//! Fixed-density structural comparison of the surrogate model with the
//! classic return mapping.
//!
//! Both models solve the nonlinear equilibrium `f_int(u) = f_ext` by Newton's
//! method with consistent tangents while the prescribed displacements are
//! ramped up in equal increments. The classic model commits its history at
//! the end of every increment; the surrogate has none, so its final field
//! does not depend on the increments.

use crate::analysis::SOLID_THRESHOLD;
use crate::error::{Error, Result};
use crate::fem::{FemModel, QUADRATURE_POINTS};
use crate::material::{
    classic_return, elasticity_tensor, stress, surrogate_stress_tangent, update_plastic_strains,
    MaterialParams, PlasticityKind, PointState, UpdateOptions,
};
use crate::optimizer::{run, Problem, RunConfig, RunStatus};
use crate::presets::Preset;
use crate::scalar::{lit, to_f64, Scalar};
use crate::tensor::{SymTensor2, Tensor4};

#[derive(Clone, Copy, Debug)]
pub struct FemCheckOptions<T> {
    pub increments: usize,
    /// Newton stops when `‖r_free‖∞ ≤ tol · ‖f_int‖∞`.
    pub tol: T,
    pub max_newton: usize,
    /// Fraction of the elastic tangent added to the Newton matrix. Perfect
    /// plasticity has no stiffness along the flow direction, which makes the
    /// assembled matrix singular in plastic (mostly void) regions; the
    /// residual is unchanged, so the converged solution is too.
    pub stabilization: T,
    /// Step halvings tried when a Newton step increases the residual.
    pub max_backtracks: usize,
}

impl<T: Scalar> Default for FemCheckOptions<T> {
    fn default() -> Self {
        Self {
            increments: 20,
            tol: lit(1e-6),
            max_newton: 40,
            stabilization: lit(1e-6),
            max_backtracks: 8,
        }
    }
}

/// Converged state of one model.
#[derive(Clone, Debug)]
pub struct StructuralSolution<T> {
    pub u: Vec<T>,
    /// Plastic strain per element and quadrature point.
    pub eps_p: Vec<[SymTensor2<T>; QUADRATURE_POINTS]>,
    /// Newton iterations per increment.
    pub newton_iterations: Vec<usize>,
}

/// Per-point constitutive response used during assembly.
trait PointModel<T: Scalar> {
    /// Stress and tangent at strain `eps` of point `(e, qp)` from the committed state.
    fn respond(&self, e: usize, qp: usize, eps: &SymTensor2<T>, chi: T) -> (SymTensor2<T>, Tensor4<T>, SymTensor2<T>);
    /// Accepts the plastic strains of a converged increment.
    fn commit(&mut self, e: usize, qp: usize, eps: &SymTensor2<T>, chi: T);
    fn eps_p(&self, e: usize, qp: usize) -> SymTensor2<T>;
}

struct Surrogate<'a, T> {
    model: &'a FemModel<T>,
    params: &'a MaterialParams<T>,
    opts: UpdateOptions<T>,
    eps_p: Vec<[SymTensor2<T>; QUADRATURE_POINTS]>,
}

impl<T: Scalar> PointModel<T> for Surrogate<'_, T> {
    fn respond(&self, _e: usize, _qp: usize, eps: &SymTensor2<T>, chi: T) -> (SymTensor2<T>, Tensor4<T>, SymTensor2<T>) {
        let stiff = &self.model.stiff;
        let up = update_plastic_strains(&SymTensor2::zero(), eps, chi, stiff, self.params, &self.opts);
        let st = PointState::new(*eps, up.eps_p, chi);
        (stress(&st, stiff), surrogate_stress_tangent(&st, stiff, self.params), up.eps_p)
    }

    fn commit(&mut self, e: usize, qp: usize, eps: &SymTensor2<T>, chi: T) {
        self.eps_p[e][qp] = self.respond(e, qp, eps, chi).2;
    }

    fn eps_p(&self, e: usize, qp: usize) -> SymTensor2<T> {
        self.eps_p[e][qp]
    }
}

struct Classic<'a, T> {
    model: &'a FemModel<T>,
    params: &'a MaterialParams<T>,
    eps_p: Vec<[SymTensor2<T>; QUADRATURE_POINTS]>,
    alpha: Vec<[T; QUADRATURE_POINTS]>,
}

impl<T: Scalar> PointModel<T> for Classic<'_, T> {
    fn respond(&self, e: usize, qp: usize, eps: &SymTensor2<T>, chi: T) -> (SymTensor2<T>, Tensor4<T>, SymTensor2<T>) {
        let r = classic_return(&self.eps_p[e][qp], self.alpha[e][qp], eps, chi, &self.model.stiff, self.params);
        (r.stress, r.tangent, r.eps_p)
    }

    fn commit(&mut self, e: usize, qp: usize, eps: &SymTensor2<T>, chi: T) {
        let r = classic_return(&self.eps_p[e][qp], self.alpha[e][qp], eps, chi, &self.model.stiff, self.params);
        self.eps_p[e][qp] = r.eps_p;
        self.alpha[e][qp] = r.alpha;
    }

    fn eps_p(&self, e: usize, qp: usize) -> SymTensor2<T> {
        self.eps_p[e][qp]
    }
}

fn solve_incremental<T: Scalar, M: PointModel<T>>(
    fem: &FemModel<T>,
    chi: &[T],
    pm: &mut M,
    opts: &FemCheckOptions<T>,
) -> Result<StructuralSolution<T>> {
    let n_el = fem.mesh.n_elements();
    let mut u = vec![T::zero(); fem.n_dofs()];
    let f_ext = fem.external_forces();
    let mut newton_iterations = Vec::with_capacity(opts.increments);
    for inc in 1..=opts.increments {
        let factor = lit::<T>(inc as f64) / lit(opts.increments as f64);
        for p in &fem.load.prescribed {
            u[p.dof()] = p.value * factor;
        }
        let mut it = 0;
        let mut f_int = fem.internal_forces_with(&u, |e, qp, eps| pm.respond(e, qp, eps, chi[e]).0);
        loop {
            let r: Vec<T> = fem.dofs.free.iter().map(|&d| f_ext[d] * factor - f_int[d]).collect();
            let rmax = r.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let fmax = f_int.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            if rmax <= opts.tol * fmax || rmax == T::zero() {
                break;
            }
            if it == opts.max_newton {
                return Err(Error::Fem(format!(
                    "structural Newton did not converge in increment {inc}: ‖r‖∞ = {:e}",
                    to_f64(rmax)
                )));
            }
            let solver = fem.factorize_elements(|e, k| {
                let strains = fem.element_strains(&u, e);
                let elastic = fem.stiff.tensor.scale(opts.stabilization * chi[e] * chi[e] * chi[e]);
                let d: Vec<Tensor4<T>> = (0..QUADRATURE_POINTS)
                    .map(|qp| pm.respond(e, qp, &strains[qp], chi[e]).1 + elastic)
                    .collect();
                *k = fem.kernel.element_matrix(|qp| d[qp]);
            })?;
            let (du, _) = fem.solve_free(&solver, &r, None)?;
            // Backtracking on ‖r‖₂ guards against overshooting along nearly
            // stress-free plastic modes.
            let norm0 = norm2(&r);
            let mut alpha = T::one();
            let base = u.clone();
            for attempt in 0..opts.max_backtracks.max(1) {
                for (q, &d) in fem.dofs.free.iter().enumerate() {
                    u[d] = base[d] + alpha * du[q];
                }
                f_int = fem.internal_forces_with(&u, |e, qp, eps| pm.respond(e, qp, eps, chi[e]).0);
                let trial: Vec<T> = fem.dofs.free.iter().map(|&d| f_ext[d] * factor - f_int[d]).collect();
                if norm2(&trial) < norm0 || attempt + 1 == opts.max_backtracks {
                    break;
                }
                alpha = alpha * lit(0.5);
            }
            it += 1;
        }
        newton_iterations.push(it);
        for e in 0..n_el {
            let strains = fem.element_strains(&u, e);
            for (qp, eps) in strains.iter().enumerate() {
                pm.commit(e, qp, eps, chi[e]);
            }
        }
    }
    let eps_p = (0..n_el)
        .map(|e| std::array::from_fn(|qp| pm.eps_p(e, qp)))
        .collect();
    Ok(StructuralSolution {
        u,
        eps_p,
        newton_iterations,
    })
}

fn norm2<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

/// Surrogate solution for fixed densities `chi`. The trial-stress gate is off.
pub fn solve_surrogate_structure<T: Scalar>(
    fem: &FemModel<T>,
    chi: &[T],
    params: &MaterialParams<T>,
    opts: &FemCheckOptions<T>,
) -> Result<StructuralSolution<T>> {
    let mut pm = Surrogate {
        model: fem,
        params,
        opts: UpdateOptions {
            gate: T::zero(),
            ..UpdateOptions::default()
        },
        eps_p: vec![[SymTensor2::zero(); QUADRATURE_POINTS]; fem.mesh.n_elements()],
    };
    solve_incremental(fem, chi, &mut pm, opts)
}

pub fn solve_classic_structure<T: Scalar>(
    fem: &FemModel<T>,
    chi: &[T],
    params: &MaterialParams<T>,
    opts: &FemCheckOptions<T>,
) -> Result<StructuralSolution<T>> {
    let n = fem.mesh.n_elements();
    let mut pm = Classic {
        model: fem,
        params,
        eps_p: vec![[SymTensor2::zero(); QUADRATURE_POINTS]; n],
        alpha: vec![[T::zero(); QUADRATURE_POINTS]; n],
    };
    solve_incremental(fem, chi, &mut pm, opts)
}

/// Field deviation between two plastic-strain fields over the elements
/// selected by `mask`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldDeviation {
    /// `max ‖a − b‖ / max ‖b‖`.
    pub max_relative: f64,
    pub max_abs: f64,
    /// `max ‖b‖` over the selection.
    pub reference_max: f64,
    /// `max |‖a‖ − ‖b‖| / max ‖b‖`: deviation of the equivalent plastic strain field.
    pub norm_max_relative: f64,
    pub points: usize,
}

pub fn field_deviation<T: Scalar>(
    a: &[[SymTensor2<T>; QUADRATURE_POINTS]],
    b: &[[SymTensor2<T>; QUADRATURE_POINTS]],
    mask: impl Fn(usize) -> bool,
) -> FieldDeviation {
    let mut max_abs = 0.0f64;
    let mut norm_abs = 0.0f64;
    let mut reference_max = 0.0f64;
    let mut points = 0;
    for e in (0..a.len()).filter(|&e| mask(e)) {
        for qp in 0..QUADRATURE_POINTS {
            max_abs = max_abs.max(to_f64((a[e][qp] - b[e][qp]).norm()));
            norm_abs = norm_abs.max(to_f64((a[e][qp].norm() - b[e][qp].norm()).abs()));
            reference_max = reference_max.max(to_f64(b[e][qp].norm()));
            points += 1;
        }
    }
    let rel = |x: f64| if reference_max > 0.0 { x / reference_max } else { 0.0 };
    FieldDeviation {
        max_relative: rel(max_abs),
        norm_max_relative: rel(norm_abs),
        max_abs,
        reference_max,
        points,
    }
}

/// Element size of the reduced-resolution comparison for each preset.
pub fn default_element_size(bvp: Preset) -> f64 {
    match bvp {
        Preset::ClampedBeam => 0.04,
        Preset::Mbb => 0.05,
        Preset::Cantilever3d | Preset::MaterialPoint => 0.1,
    }
}

/// Setup of a fixed-structure comparison: the density field comes from a
/// one-loop ideal-plastic optimization of the preset at element size `e_size`,
/// then both models are loaded on that structure with `law`.
#[derive(Clone, Debug)]
pub struct FemCheckConfig<T> {
    pub bvp: Preset,
    pub law: PlasticityKind,
    pub e_size: T,
    pub design_max_iterations: usize,
    pub options: FemCheckOptions<T>,
}

impl<T: Scalar> FemCheckConfig<T> {
    pub fn new(bvp: Preset, law: PlasticityKind) -> Self {
        Self {
            bvp,
            law,
            e_size: lit(default_element_size(bvp)),
            design_max_iterations: 1000,
            options: FemCheckOptions::default(),
        }
    }

    /// Optimization settings producing the structure.
    pub fn design_config(&self) -> RunConfig<T> {
        let mut cfg = RunConfig::preset(self.bvp, PlasticityKind::Ideal);
        cfg.e_size = self.e_size;
        cfg.beta = lit::<T>(2.0) * self.e_size * self.e_size;
        cfg.max_iterations = self.design_max_iterations;
        cfg
    }
}

#[derive(Clone, Debug)]
pub struct FemCheckReport<T> {
    pub elements: usize,
    pub design_iterations: usize,
    pub design_status: RunStatus,
    pub chi: Vec<T>,
    /// Deviation over elements with `χ ≥ 0.5`.
    pub structure: FieldDeviation,
    /// Deviation over all elements.
    pub all: FieldDeviation,
    pub surrogate: StructuralSolution<T>,
    pub classic: StructuralSolution<T>,
}

pub fn run_femcheck<T: Scalar>(cfg: &FemCheckConfig<T>) -> Result<FemCheckReport<T>> {
    let design_cfg = cfg.design_config();
    let problem = Problem::from_config(&design_cfg)?;
    let design = run(&problem, &mut ())?;
    let chi = design.state.density.chi;
    let params = MaterialParams::steel(cfg.law);
    let fem = FemModel::new(
        problem.model.mesh.clone(),
        elasticity_tensor(&params),
        &problem.model.load,
    )?;
    let surrogate = solve_surrogate_structure(&fem, &chi, &params, &cfg.options)?;
    let classic = solve_classic_structure(&fem, &chi, &params, &cfg.options)?;
    let solid = lit::<T>(SOLID_THRESHOLD);
    Ok(FemCheckReport {
        elements: fem.mesh.n_elements(),
        design_iterations: design.history.len(),
        design_status: design.status,
        structure: field_deviation(&surrogate.eps_p, &classic.eps_p, |e| chi[e] >= solid),
        all: field_deviation(&surrogate.eps_p, &classic.eps_p, |_| true),
        chi,
        surrogate,
        classic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::LoadCase;
    use crate::mesh::build_box_mesh;

    /// Box with the displacement `u = γ ε̂ x` prescribed on its whole surface:
    /// the strain is homogeneous, so every point follows the same proportional path.
    fn strain_driven(gamma: f64) -> (FemModel<f64>, MaterialParams<f64>) {
        let p = MaterialParams::steel(PlasticityKind::Linear);
        let mesh = build_box_mesh([0.3, 0.3, 0.3], 0.1).unwrap();
        let dir = crate::matpoint::path_direction(p.nu).to_matrix();
        let surface = mesh.nodes_where(|x| x.iter().any(|&c| c < 1e-9 || c > 0.3 - 1e-9));
        let mut load = LoadCase::new();
        for n in surface {
            let x = mesh.nodes[n];
            for i in 0..3 {
                let v = (0..3).map(|j| dir[i][j] * x[j]).sum::<f64>() * gamma;
                load.prescribe(&[n], i, v);
            }
        }
        (FemModel::new(mesh, elasticity_tensor(&p), &load).unwrap(), p)
    }

    #[test]
    fn proportional_loading_matches_classic() {
        let (fem, p) = strain_driven(0.004);
        let chi = vec![0.9; fem.mesh.n_elements()];
        let o = FemCheckOptions {
            tol: 1e-10,
            ..FemCheckOptions::default()
        };
        let s = solve_surrogate_structure(&fem, &chi, &p, &o).unwrap();
        let c = solve_classic_structure(&fem, &chi, &p, &o).unwrap();
        let d = field_deviation(&s.eps_p, &c.eps_p, |_| true);
        assert!(d.reference_max > 1e-3, "{d:?}");
        assert!(d.max_relative < 1e-8, "{d:?}");
        assert!(s.newton_iterations.iter().all(|&n| n <= 10));
    }

    #[test]
    fn elastic_range_has_no_plastic_strain() {
        let (fem, p) = strain_driven(1e-5);
        let chi = vec![1.0; fem.mesh.n_elements()];
        let s = solve_surrogate_structure(&fem, &chi, &p, &FemCheckOptions::default()).unwrap();
        assert!(s.eps_p.iter().flatten().all(|e| *e == SymTensor2::zero()));
    }
}
