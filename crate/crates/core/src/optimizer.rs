//! Staggered optimization loop: displacement solve and plastic-strain update
//! (repeated `loops` times with the density frozen), then one density step.

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::density::{driving_force, update_density, DensityField, DensityParams};
use crate::error::{Error, Result};
use crate::fem::{stiffness_metric, ElementState, FemModel, SolveOptions, SolverKind, QUADRATURE_POINTS};
use crate::material::{
    elasticity_tensor, free_energy0, update_plastic_strains, MaterialParams, PlasticBranch,
    PlasticityKind, UpdateOptions,
};
use crate::presets::Preset;
use crate::scalar::{lit, to_f64, Scalar};

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig<T> {
    pub bvp: Preset,
    pub plasticity: PlasticityKind,
    pub material: MaterialParams<T>,
    /// FEM + plastic-strain passes per optimization iteration.
    pub loops: usize,
    pub v0: T,
    /// Viscosity η (s).
    pub eta: T,
    /// Regularization β (mm²).
    pub beta: T,
    /// Element edge length (mm).
    pub e_size: T,
    /// Magnitude of the prescribed load displacement (mm).
    pub u_star: T,
    pub max_iterations: usize,
    pub chi_min: T,
    /// Local Newton tolerance on max |s̃| (MPa).
    pub newton_tol: T,
    /// Trial-stress gate `|Φ_σ|/r`; zero disables it.
    pub gate: T,
    pub conv_first: T,
    pub conv_next: T,
    /// Field snapshots every this many iterations (0: final only).
    pub snapshot_every: usize,
    pub solver: SolverKind,
    /// Relative residual of the iterative linear solver.
    pub linear_tol: T,
    pub out: Option<PathBuf>,
}

impl<T: Scalar> RunConfig<T> {
    /// Defaults of a benchmark preset with β = 2 e².
    pub fn preset(bvp: Preset, plasticity: PlasticityKind) -> Self {
        let d = bvp.defaults();
        let e_size = lit::<T>(d.e_size);
        Self {
            bvp,
            plasticity,
            material: MaterialParams::steel(plasticity),
            loops: 1,
            v0: lit(d.v0),
            eta: lit(15.0),
            beta: lit::<T>(2.0) * e_size * e_size,
            e_size,
            u_star: lit(d.u_star),
            max_iterations: 1000,
            chi_min: lit(0.001),
            newton_tol: lit(1e-8),
            gate: lit(0.01),
            conv_first: lit(1e-5),
            conv_next: lit(1e-4),
            snapshot_every: 10,
            solver: SolverKind::Auto,
            linear_tol: lit(1e-10),
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.loops) {
            return Err(Error::Config(format!("loops: must lie in 1..=5, got {}", self.loops)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iters: must be at least 1".into()));
        }
        if !(self.e_size > T::zero()) {
            return Err(Error::Config(format!("esize_mm: must be positive, got {}", self.e_size)));
        }
        if !(self.newton_tol > T::zero()) {
            return Err(Error::Config("newton_tol: must be positive".into()));
        }
        if !(self.gate >= T::zero()) {
            return Err(Error::Config("gate: must be non-negative".into()));
        }
        if !(self.conv_first > T::zero() && self.conv_next >= self.conv_first) {
            return Err(Error::Config("convergence thresholds: need 0 < first <= next".into()));
        }
        self.material.validate()?;
        self.density_params().validate()
    }

    pub fn density_params(&self) -> DensityParams<T> {
        DensityParams {
            chi_min: self.chi_min,
            v0: self.v0,
            beta: self.beta,
            eta: self.eta,
            dt: T::one(),
        }
    }

    pub fn update_options(&self) -> UpdateOptions<T> {
        let mut o = UpdateOptions::default();
        o.newton.tol = self.newton_tol;
        o.gate = self.gate;
        o
    }

    pub fn solve_options(&self) -> SolveOptions<T> {
        SolveOptions {
            solver: self.solver,
            pcg_tol: self.linear_tol,
            ..SolveOptions::default()
        }
    }
}

/// Fixed data of an optimization run.
#[derive(Clone, Debug)]
pub struct Problem<T> {
    pub model: FemModel<T>,
    pub material: MaterialParams<T>,
    pub density: DensityParams<T>,
    pub update: UpdateOptions<T>,
    pub solve: SolveOptions<T>,
    pub loops: usize,
    pub max_iterations: usize,
    pub conv_first: T,
    pub conv_next: T,
}

impl<T: Scalar> Problem<T> {
    pub fn from_config(cfg: &RunConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let (mesh, load) = cfg.bvp.build(cfg.e_size, cfg.u_star)?;
        let stiff = elasticity_tensor(&cfg.material);
        Ok(Self {
            model: FemModel::new(mesh, stiff, &load)?,
            material: cfg.material,
            density: cfg.density_params(),
            update: cfg.update_options(),
            solve: cfg.solve_options(),
            loops: cfg.loops,
            max_iterations: cfg.max_iterations,
            conv_first: cfg.conv_first,
            conv_next: cfg.conv_next,
        })
    }
}

#[derive(Clone, Debug)]
pub struct OptState<T> {
    pub iteration: usize,
    pub density: DensityField<T>,
    /// Density and plastic strains per element; `chi` mirrors `density`.
    pub elements: Vec<ElementState<T>>,
    /// Nodal displacements of the last solve.
    pub u: Vec<T>,
    /// Element-averaged Ψ₀ of the last solve (MPa).
    pub psi0: Vec<T>,
    /// Volume multiplier of the last density step.
    pub lambda: T,
}

impl<T: Scalar> OptState<T> {
    /// `χ = v0`, `ε^p = 0`, `u = 0`.
    pub fn initial(problem: &Problem<T>) -> Self {
        let n = problem.model.mesh.n_elements();
        let density = DensityField::uniform(n, problem.density);
        Self {
            iteration: 0,
            elements: density.chi.iter().map(|c| ElementState::new(*c)).collect(),
            density,
            u: vec![T::zero(); problem.model.n_dofs()],
            psi0: vec![T::zero(); n],
            lambda: T::zero(),
        }
    }

    /// Largest Frobenius norm of ε^p over all integration points.
    pub fn max_plastic_strain(&self) -> T {
        self.elements
            .iter()
            .flat_map(|e| e.eps_p.iter())
            .fold(T::zero(), |m, x| m.max(x.norm()))
    }

    /// Element-averaged von Mises equivalent plastic strain.
    pub fn plastic_von_mises(&self) -> Vec<T> {
        let w = lit::<T>(1.0 / QUADRATURE_POINTS as f64);
        self.elements
            .iter()
            .map(|e| e.eps_p.iter().map(|x| x.von_mises_strain()).sum::<T>() * w)
            .collect()
    }
}

/// One row of the convergence history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Stiffness of the structure before the density step (N/mm).
    pub stiffness: f64,
    pub volume_error: f64,
    pub max_trace_eps_p: f64,
    pub max_eps_p: f64,
    pub plastic_points: usize,
    pub retained_points: usize,
    pub max_newton_iterations: usize,
    pub newton_failures: usize,
    pub lambda: f64,
    pub wall_time_s: f64,
}

pub type History = Vec<IterationRecord>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convergence {
    Continue,
    /// Criterion met at this iteration.
    Converged(usize),
}

/// Relative stiffness change below `first` once, followed by three
/// consecutive changes below `next`. A violation restarts the search.
pub fn check_convergence(history: &[IterationRecord], first: f64, next: f64) -> Convergence {
    let mut streak: Option<usize> = None;
    for k in 1..history.len() {
        let s = history[k].stiffness;
        let rel = ((s - history[k - 1].stiffness) / s).abs();
        streak = match streak {
            None if rel < first => Some(0),
            None => None,
            Some(c) if rel < next => {
                if c + 1 == 3 {
                    return Convergence::Converged(history[k].iteration);
                }
                Some(c + 1)
            }
            Some(_) => None,
        };
    }
    Convergence::Continue
}

#[derive(Clone, Copy, Debug, Default)]
struct PlasticStats {
    plastic: usize,
    retained: usize,
    max_newton: usize,
    failures: usize,
}

/// Recomputes ε^p at every integration point for displacement `u`.
fn update_all_plastic<T: Scalar>(problem: &Problem<T>, state: &mut OptState<T>) -> PlasticStats {
    let mut st = PlasticStats::default();
    let model = &problem.model;
    for e in 0..state.elements.len() {
        let strains = model.element_strains(&state.u, e);
        let el = &mut state.elements[e];
        for (qp, eps) in strains.iter().enumerate() {
            let up = update_plastic_strains(&el.eps_p[qp], eps, el.chi, &model.stiff, &problem.material, &problem.update);
            match up.branch {
                PlasticBranch::Elastic => {}
                PlasticBranch::Retained => {
                    st.plastic += 1;
                    st.retained += 1;
                }
                PlasticBranch::Newton { iterations } => {
                    st.plastic += 1;
                    st.max_newton = st.max_newton.max(iterations);
                }
                PlasticBranch::Failed => {
                    st.plastic += 1;
                    st.failures += 1;
                }
            }
            el.eps_p[qp] = up.eps_p;
        }
    }
    st
}

/// Element averages of Ψ₀(ε, ε^p) for the current `u` and stored ε^p.
fn element_energies<T: Scalar>(problem: &Problem<T>, state: &OptState<T>) -> Vec<T> {
    let model = &problem.model;
    let w = lit::<T>(1.0 / QUADRATURE_POINTS as f64);
    (0..state.elements.len())
        .map(|e| {
            let el = &state.elements[e];
            model
                .element_strains(&state.u, e)
                .iter()
                .enumerate()
                .map(|(qp, eps)| free_energy0(&el.point(qp, *eps), &model.stiff))
                .sum::<T>()
                * w
        })
        .collect()
}

/// One optimization iteration. Returns the history record.
pub fn iterate<T: Scalar>(problem: &Problem<T>, state: &mut OptState<T>) -> Result<IterationRecord> {
    let start = Instant::now();
    let model = &problem.model;
    let chi = state.density.chi.clone();
    let solver = model.factorize(&chi, &problem.solve)?;
    let mut stats = PlasticStats::default();
    let mut stiffness = T::zero();
    for _ in 0..problem.loops {
        let sol = model.solve_displacements(&state.elements, &solver, &problem.solve)?;
        state.u = sol.u;
        stiffness = stiffness_metric(&model.reactions(&sol.f_int), &model.prescribed_values())?;
        // Ψ₀(ε_{n+1}, ε^p_n, χ_n): energies use the plastic strains of this solve.
        state.psi0 = element_energies(problem, state);
        let s = update_all_plastic(problem, state);
        stats.plastic = s.plastic;
        stats.retained = s.retained;
        stats.max_newton = stats.max_newton.max(s.max_newton);
        stats.failures += s.failures;
    }
    let force = driving_force(&chi, &state.psi0, problem.density.chi_min);
    let step = update_density(&state.density, &force.p_bar, &model.mesh)?;
    state.density = step.field;
    state.lambda = step.lambda;
    for (el, c) in state.elements.iter_mut().zip(&state.density.chi) {
        el.chi = *c;
    }
    state.iteration += 1;

    let max_tr = state
        .elements
        .iter()
        .flat_map(|e| e.eps_p.iter())
        .fold(T::zero(), |m, x| m.max(x.trace().abs()));
    Ok(IterationRecord {
        iteration: state.iteration,
        stiffness: to_f64(stiffness),
        volume_error: to_f64(state.density.volume_error(&model.mesh)),
        max_trace_eps_p: to_f64(max_tr),
        max_eps_p: to_f64(state.max_plastic_strain()),
        plastic_points: stats.plastic,
        retained_points: stats.retained,
        max_newton_iterations: stats.max_newton,
        newton_failures: stats.failures,
        lambda: to_f64(step.lambda),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged { iteration: usize },
    MaxIterations,
}

#[derive(Clone, Debug)]
pub struct RunOutcome<T> {
    pub state: OptState<T>,
    pub history: History,
    pub status: RunStatus,
}

/// Hook called after every iteration, e.g. to stream logs and snapshots.
pub trait Observer<T> {
    fn on_iteration(&mut self, _problem: &Problem<T>, _state: &OptState<T>, _record: &IterationRecord) -> Result<()> {
        Ok(())
    }
}

impl<T> Observer<T> for () {}

/// Iterates until the stiffness criterion holds or the budget is spent.
pub fn run<T: Scalar>(problem: &Problem<T>, observer: &mut dyn Observer<T>) -> Result<RunOutcome<T>> {
    let mut state = OptState::initial(problem);
    let mut history = History::new();
    let (first, next) = (to_f64(problem.conv_first), to_f64(problem.conv_next));
    while state.iteration < problem.max_iterations {
        let it = state.iteration + 1;
        let rec = iterate(problem, &mut state).map_err(|e| Error::AtIteration {
            iteration: it,
            source: Box::new(e),
        })?;
        observer.on_iteration(problem, &state, &rec)?;
        history.push(rec);
        if let Convergence::Converged(iteration) = check_convergence(&history, first, next) {
            return Ok(RunOutcome {
                state,
                history,
                status: RunStatus::Converged { iteration },
            });
        }
    }
    Ok(RunOutcome {
        state,
        history,
        status: RunStatus::MaxIterations,
    })
}
