//! Adaptive space-time driver.
//!
//! Every step starts from the previous mesh and step length, solves the
//! slab, evaluates the estimators and refines in time (halving `k`) and in
//! space (bisecting elements) until both indicators are below their
//! thresholds. The indicators are divided by the accumulated growth factor
//! `θ̃`, so the tolerances relax as the solution approaches blow-up. A step
//! whose bound condition has no root ends the run.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::bound::{delta_root, theta, BoundState, SlabBoundData};
use crate::dg::{solve_slab, PicardOptions, SlabSolution};
use crate::error::{Error, Result};
use crate::fem::{energy_projection, sample_points, FemSpace, SpatialField};
use crate::mesh::{CellId, Mesh1D, MeshDelta};
use crate::problems::ProblemDef;
use crate::reconstruct::{EstimatorSample, LeftTrace, Reconstruction};
use crate::scalar::{cst, from_usize, to_f64, Real};
use crate::time_basis::IntervalMap;

/// Driver parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptConfig<T> {
    pub ttol: T,
    pub stol_plus: T,
    /// Coarsening threshold; `0.1·2^{-p}·stol_plus` when absent.
    pub stol_minus: Option<T>,
    pub p: usize,
    pub r0: usize,
    pub k0: T,
    /// Slope of the hp degree rule; fixed degree `r0` when absent.
    pub sigma: Option<T>,
    pub max_steps: usize,
    /// Stop at this time instead of running to blow-up.
    pub t_final: Option<T>,
    pub c_inf: T,
    pub n_root: usize,
    pub picard: PicardOptions<T>,
    /// Cap on mesh-changing cycles per step.
    pub max_cycles: usize,
    pub max_dofs: usize,
    /// Smallest admissible step as a fraction of `k0`.
    pub k_min_factor: T,
}

impl<T: Real> Default for AdaptConfig<T> {
    fn default() -> Self {
        Self {
            ttol: cst(1e-5),
            stol_plus: cst(1e-5),
            stol_minus: None,
            p: 2,
            r0: 1,
            k0: cst(0.01),
            sigma: None,
            max_steps: 100_000,
            t_final: None,
            c_inf: T::one(),
            n_root: Mesh1D::<T>::DEFAULT_ROOTS,
            picard: PicardOptions::default(),
            max_cycles: 20,
            max_dofs: 10_000_000,
            k_min_factor: cst(1e-14),
        }
    }
}

impl<T: Real> AdaptConfig<T> {
    pub fn stol_minus(&self) -> T {
        self.stol_minus
            .unwrap_or_else(|| cst::<T>(0.1) * cst::<T>(2.0).powi(-(self.p as i32)) * self.stol_plus)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.ttol) || !pos(self.stol_plus) || !pos(self.k0) || !pos(self.c_inf) {
            return Err(Error::Config("ttol, stol, k0 and c_inf must be positive".into()));
        }
        if !(self.stol_minus() > T::zero() && self.stol_minus() < self.stol_plus) {
            return Err(Error::Config("need 0 < stol_minus < stol_plus".into()));
        }
        if self.p == 0 {
            return Err(Error::InvalidDegree(0));
        }
        if self.sigma.is_some_and(|s| !(s >= T::zero())) {
            return Err(Error::Config("sigma must be non-negative".into()));
        }
        Ok(())
    }
}

/// `r = max(0, ⌈r0 + σ ln(k/k0)⌉)`.
pub fn hp_degree<T: Real>(k: T, k0: T, r0: usize, sigma: T) -> usize {
    let v = (from_usize::<T>(r0) + sigma * (k / k0).ln()).ceil();
    if v > T::zero() {
        v.to_usize().unwrap_or(r0)
    } else {
        0
    }
}

fn degree_for<T: Real>(k: T, cfg: &AdaptConfig<T>) -> usize {
    cfg.sigma.map_or(cfg.r0, |s| hp_degree(k, cfg.k0, cfg.r0, s))
}

/// Two-point blow-up time extrapolation assuming `‖u‖ ≈ C/(T - t)`.
pub fn blowup_time<T: Real>((t0, n0): (T, T), (t1, n1): (T, T)) -> Option<T> {
    (n1 > n0).then(|| (t1 * n1 - t0 * n0) / (n1 - n0))
}

/// Rate estimate `γ` for a pair of history points against `t_inf`.
pub fn blowup_rate<T: Real>((t0, n0): (T, T), (t1, n1): (T, T), t_inf: T) -> Option<T> {
    (n1 > n0 && t_inf > t1).then(|| (n1.ln() - n0.ln()) / ((t_inf - t0).ln() - (t_inf - t1).ln()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Blowup<T> {
    pub t_inf: T,
    /// `γ` for each consecutive history pair, against `t_inf`.
    pub gamma: Vec<Option<T>>,
}

impl<T: Real> Blowup<T> {
    /// Last informative rate: the final pair defines `t_inf` and gives 1
    /// identically, so the pair before it is reported.
    pub fn last_gamma(&self) -> Option<T> {
        let n = self.gamma.len();
        (n >= 2).then(|| self.gamma[n - 2]).flatten()
    }
}

/// Extrapolated blow-up time from the last two history points and the rate
/// series against it.
pub fn blowup_extrapolate<T: Real>(history: &[(T, T)]) -> Option<Blowup<T>> {
    let n = history.len();
    if n < 2 {
        return None;
    }
    let t_inf = blowup_time(history[n - 2], history[n - 1])?;
    let gamma = history.windows(2).map(|w| blowup_rate(w[0], w[1], t_inf)).collect();
    Some(Blowup { t_inf, gamma })
}

/// Refinement indicators of one trial slab.
#[derive(Clone, Debug, PartialEq)]
pub struct StepIndicators<T> {
    pub ref_time: T,
    /// One value per leaf of the slab mesh, in leaf order.
    pub ref_space: Vec<T>,
}

impl<T: Real> StepIndicators<T> {
    pub fn max_space(&self) -> T {
        self.ref_space.iter().fold(T::zero(), |a, &b| a.max(b))
    }
}

/// `ref_time = η_time/θ̃` and `ref_space|_K = max_{Ǩ ⊂ K} Λ_Ǩ/(θ̃ k)` with
/// `Λ_Ǩ = ∫ 𝔏(‖Ũ‖, ‖Ũ‖ + η) η|_Ǩ + ∫ η̇|_Ǩ`.
pub fn indicators<T: Real>(
    est: &EstimatorSample<T>,
    mesh: &Mesh1D<T>,
    problem: &ProblemDef<T>,
    theta_tilde: T,
    k: T,
) -> Result<StepIndicators<T>> {
    let mut ref_space = vec![T::zero(); mesh.len()];
    for (c, cell) in est.union_mesh.elements().enumerate() {
        let leaf = mesh.containing(cell.id).ok_or(Error::MeshMismatch)?;
        let mut lambda = T::zero();
        for q in 0..est.times.len() {
            let u = est.u_rec_norm[q];
            let l = problem.lipschitz.eval(est.times[q], u, u + est.eta_space[q]);
            lambda += est.weights[q] * (l * est.local_space[q][c] + est.local_space_dt[q][c]);
        }
        ref_space[leaf] = ref_space[leaf].max(lambda / (theta_tilde * k));
    }
    Ok(StepIndicators { ref_time: est.eta_time / theta_tilde, ref_space })
}

/// Greedy refinement of `mesh` until `sup |u0 - π₁u0| ≤ tol`; returns the
/// mesh and the projection.
pub fn resolve_initial<T: Real>(
    problem: &ProblemDef<T>,
    mut mesh: Mesh1D<T>,
    p: usize,
    tol: T,
    max_dofs: usize,
) -> Result<(Mesh1D<T>, SpatialField<T>)> {
    let pts = sample_points::<T>(p + 3);
    loop {
        let space = Arc::new(FemSpace::new(mesh.clone(), p)?);
        if space.n_dofs() > max_dofs {
            return Err(Error::RefinementBudget { dofs: space.n_dofs() });
        }
        let pi1 = energy_projection(space.clone(), problem.u0.as_ref(), problem.u0_dd.as_ref())?;
        let mut flagged = BTreeSet::new();
        let mut buf = Vec::new();
        for e in 0..space.n_elements() {
            let poly = pi1.modal(e);
            let err = pts
                .iter()
                .map(|&xi| {
                    let x = poly.element.to_physical(xi);
                    ((problem.u0)(x) - poly.eval_derivs_with(x, &mut buf)[0]).abs()
                })
                .fold(T::zero(), T::max);
            if err > tol {
                flagged.insert(poly.element.id);
            }
        }
        if flagged.is_empty() {
            return Ok((mesh, pi1));
        }
        mesh = mesh.refine(flagged)?;
    }
}

/// Why a run stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    FinalTime,
    MaxSteps,
    /// The bound condition has no root: the estimate cannot be continued.
    NoRoot,
    StepUnderflow,
    CycleLimit,
    RefinementBudget,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FinalTime => "final_time",
            Self::MaxSteps => "max_steps",
            Self::NoRoot => "no_root",
            Self::StepUnderflow => "time_step_underflow",
            Self::CycleLimit => "cycle_limit",
            Self::RefinementBudget => "refinement_budget",
        }
    }
}

/// One accepted step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord<T> {
    pub m: usize,
    pub t: T,
    pub k: T,
    pub r: usize,
    pub n_dofs: usize,
    /// `‖U(t_m^-)‖`.
    pub u_norm: T,
    pub eta_time: T,
    pub int_eta_space: T,
    pub int_eta_space_dt: T,
    pub bound: BoundState<T>,
    pub ref_time: T,
    pub ref_space_max: T,
    /// Trial solves spent on this step.
    pub solves: usize,
    pub picard_iterations: usize,
}

/// Column names of [`StepRecord::csv_row`].
pub const CSV_HEADER: &str =
    "m,t_m,k_m,r_m,n_dofs,u_norm,eta_time,int_eta_space,int_eta_space_dt,psi,theta,theta_tilde,delta,bound_rec";

impl<T: Real> StepRecord<T> {
    pub fn csv_row(&self) -> String {
        let b = &self.bound;
        let delta = b.delta.map_or(String::new(), |d| format!("{d:?}"));
        format!(
            "{},{:?},{:?},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{},{:?}",
            self.m,
            self.t,
            self.k,
            self.r,
            self.n_dofs,
            self.u_norm,
            self.eta_time,
            self.int_eta_space,
            self.int_eta_space_dt,
            b.psi,
            b.theta,
            b.theta_tilde,
            delta,
            b.bound_reconstructed
        )
    }
}

/// What an observer sees after each accepted step.
pub struct StepView<'a, T> {
    pub record: &'a StepRecord<T>,
    pub slab: &'a SlabSolution<T>,
    pub prev_slab: Option<&'a SlabSolution<T>>,
    pub estimators: &'a EstimatorSample<T>,
    pub indicators: &'a StepIndicators<T>,
    pub u_minus: &'a SpatialField<T>,
}

#[derive(Clone, Debug)]
pub struct RunResult<T> {
    pub records: Vec<StepRecord<T>>,
    pub termination: Termination,
    pub initial_mesh: Mesh1D<T>,
    pub final_mesh: Mesh1D<T>,
    /// `U(t_N^-)`.
    pub final_field: SpatialField<T>,
    pub blowup: Option<Blowup<T>>,
}

impl<T: Real> RunResult<T> {
    pub fn t_final(&self) -> T {
        self.records.last().map_or(T::zero(), |r| r.t)
    }

    pub fn u_norm_final(&self) -> T {
        self.records.last().map_or(T::zero(), |r| r.u_norm)
    }

    /// Sum over steps of `(r_m + 1)·n_dofs`.
    pub fn space_time_dofs(&self) -> usize {
        self.records.iter().map(|r| (r.r + 1) * r.n_dofs).sum()
    }

    /// Sum over steps of `r_m + 1`.
    pub fn temporal_dofs(&self) -> usize {
        self.records.iter().map(|r| r.r + 1).sum()
    }
}

/// Outcome of one call to [`Driver::step`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Accepted,
    Terminated(Termination),
}

/// Sequential adaptive driver.
pub struct Driver<'p, T> {
    problem: &'p ProblemDef<T>,
    cfg: AdaptConfig<T>,
    t: T,
    k: T,
    mesh: Mesh1D<T>,
    initial_mesh: Mesh1D<T>,
    u_minus: SpatialField<T>,
    prev_slab: Option<SlabSolution<T>>,
    bound: BoundState<T>,
    records: Vec<StepRecord<T>>,
}

struct Trial<T> {
    slab: SlabSolution<T>,
    est: EstimatorSample<T>,
    ind: StepIndicators<T>,
}

impl<'p, T: Real> Driver<'p, T> {
    /// Sets up the initial mesh by resolving `u0` to `stol_minus`.
    pub fn new(problem: &'p ProblemDef<T>, cfg: AdaptConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let mesh = Mesh1D::uniform(problem.a, problem.b, cfg.n_root)?;
        let (mesh, pi1) = resolve_initial(problem, mesh, cfg.p, cfg.stol_minus(), cfg.max_dofs)?;
        Ok(Self {
            problem,
            t: T::zero(),
            k: cfg.k0,
            initial_mesh: mesh.clone(),
            mesh,
            u_minus: pi1,
            prev_slab: None,
            bound: BoundState::initial(),
            records: Vec::new(),
            cfg,
        })
    }

    pub fn mesh(&self) -> &Mesh1D<T> {
        &self.mesh
    }

    pub fn time(&self) -> T {
        self.t
    }

    pub fn records(&self) -> &[StepRecord<T>] {
        &self.records
    }

    fn trial(&self, mesh: &Mesh1D<T>, k: T, r: usize) -> Result<Option<Trial<T>>> {
        let space = Arc::new(FemSpace::new(mesh.clone(), self.cfg.p)?);
        let prev = if self.records.is_empty() {
            energy_projection(space.clone(), self.problem.u0.as_ref(), self.problem.u0_dd.as_ref())?
        } else {
            self.u_minus.clone()
        };
        let map = IntervalMap::new(self.t, self.t + k)?;
        let slab = solve_slab(self.problem, &prev, space, map, r, self.cfg.picard)?;
        if !slab.report.converged {
            return Ok(None);
        }
        let left = self.prev_slab.as_ref().map_or(LeftTrace::Initial, LeftTrace::Slab);
        let est = Reconstruction::new(&slab, self.problem, left)?.estimators()?;
        // Tentative growth factor of this step.
        let data = SlabBoundData::from_sample(k, &est);
        let l = &self.problem.lipschitz;
        let psi = self.bound.next_psi(&data, l, self.cfg.c_inf);
        let theta_tilde = match delta_root(psi, &data, l, self.cfg.c_inf) {
            Some(d) => self.bound.theta_tilde * theta(d, psi, &data, l, self.cfg.c_inf),
            None => self.bound.theta_tilde,
        };
        let ind = indicators(&est, mesh, self.problem, theta_tilde, k)?;
        Ok(Some(Trial { slab, est, ind }))
    }

    fn halve(&self, k: T, r: usize) -> (T, usize) {
        let half = k * cst(0.5);
        let r_half = degree_for(half, &self.cfg);
        if r_half != r {
            let quarter = k * cst(0.25);
            (quarter, degree_for(quarter, &self.cfg))
        } else {
            (half, r)
        }
    }

    /// Performs one adaptive step.
    pub fn step(&mut self, observer: &mut dyn FnMut(&StepView<'_, T>)) -> Result<StepOutcome> {
        if self.records.len() >= self.cfg.max_steps {
            return Ok(StepOutcome::Terminated(Termination::MaxSteps));
        }
        if let Some(tf) = self.cfg.t_final {
            if self.t >= tf * (T::one() - cst(1e-14)) {
                return Ok(StepOutcome::Terminated(Termination::FinalTime));
            }
            self.k = self.k.min(tf - self.t);
        }
        let k_min = self.cfg.k0 * self.cfg.k_min_factor;
        let mut k = self.k;
        let mut r = degree_for(k, &self.cfg);
        let mut mesh = self.mesh.clone();
        let first_step = self.records.is_empty();
        let mut mesh_cycles = 0;
        let mut solves = 0;
        let mut picard_iterations = 0;
        let trial = loop {
            if k < k_min {
                return Ok(StepOutcome::Terminated(Termination::StepUnderflow));
            }
            solves += 1;
            let Some(trial) = self.trial(&mesh, k, r)? else {
                (k, r) = self.halve(k, r);
                continue;
            };
            picard_iterations += trial.slab.report.iterations;
            let time_bad = trial.ind.ref_time > self.cfg.ttol;
            let mut delta = MeshDelta::default();
            let leaves = mesh.leaves();
            for (i, &v) in trial.ind.ref_space.iter().enumerate() {
                if v > self.cfg.stol_plus {
                    delta.refine.insert(leaves[i]);
                } else if solves == 1 && !first_step && v < self.cfg.stol_minus() {
                    delta.coarsen.insert(leaves[i]);
                }
            }
            if !time_bad && delta.refine.is_empty() {
                let coarse = if delta.coarsen.is_empty() { mesh.clone() } else { mesh.apply_delta(&delta)? };
                if coarse == mesh {
                    break trial;
                }
                mesh = coarse;
                continue;
            }
            if time_bad {
                (k, r) = self.halve(k, r);
            }
            if !delta.refine.is_empty() {
                mesh_cycles += 1;
                if mesh_cycles > self.cfg.max_cycles {
                    return Ok(StepOutcome::Terminated(Termination::CycleLimit));
                }
                mesh = match mesh.apply_delta(&delta) {
                    Ok(m) => m,
                    Err(Error::LevelOverflow(_)) => return Ok(StepOutcome::Terminated(Termination::RefinementBudget)),
                    Err(e) => return Err(e),
                };
                if self.cfg.p * mesh.len() > self.cfg.max_dofs {
                    return Ok(StepOutcome::Terminated(Termination::RefinementBudget));
                }
            }
        };

        let data = SlabBoundData::from_sample(k, &trial.est);
        let bound = match self.bound.advance(&data, &self.problem.lipschitz, self.cfg.c_inf) {
            Ok(b) => b,
            Err(_) => return Ok(StepOutcome::Terminated(Termination::NoRoot)),
        };
        let u_minus = trial.slab.trace_minus();
        let record = StepRecord {
            m: self.records.len() + 1,
            t: trial.slab.map().t_end,
            k,
            r,
            n_dofs: trial.slab.space.n_dofs(),
            u_norm: u_minus.sup_norm(),
            eta_time: trial.est.eta_time,
            int_eta_space: trial.est.int_eta_space(),
            int_eta_space_dt: trial.est.int_eta_space_dt(),
            bound,
            ref_time: trial.ind.ref_time,
            ref_space_max: trial.ind.max_space(),
            solves,
            picard_iterations,
        };
        observer(&StepView {
            record: &record,
            slab: &trial.slab,
            prev_slab: self.prev_slab.as_ref(),
            estimators: &trial.est,
            indicators: &trial.ind,
            u_minus: &u_minus,
        });
        self.t = record.t;
        self.k = k;
        self.mesh = mesh;
        self.u_minus = u_minus;
        self.bound = bound;
        self.prev_slab = Some(trial.slab);
        self.records.push(record);
        Ok(StepOutcome::Accepted)
    }

    /// Steps until termination.
    pub fn run(mut self, observer: &mut dyn FnMut(&StepView<'_, T>)) -> Result<RunResult<T>> {
        let termination = loop {
            match self.step(observer)? {
                StepOutcome::Accepted => {}
                StepOutcome::Terminated(t) => break t,
            }
        };
        let history: Vec<(T, T)> = self.records.iter().map(|r| (r.t, r.u_norm)).collect();
        Ok(RunResult {
            blowup: blowup_extrapolate(&history),
            records: self.records,
            termination,
            initial_mesh: self.initial_mesh,
            final_mesh: self.mesh,
            final_field: self.u_minus,
        })
    }
}

/// Runs the driver to termination without an observer.
pub fn run<T: Real>(problem: &ProblemDef<T>, cfg: AdaptConfig<T>) -> Result<RunResult<T>> {
    Driver::new(problem, cfg)?.run(&mut |_| {})
}

/// `N t_N u_norm T_inf gamma reason` summary as `key = value` lines.
pub fn summary_text<T: Real>(res: &RunResult<T>, wall_seconds: f64) -> String {
    let fmt = |v: Option<T>| v.map_or("none".to_string(), |v| format!("{:?}", to_f64(v)));
    let blow = res.blowup.as_ref();
    format!(
        "N = {}\nt_N = {:?}\nu_norm = {:?}\nT_inf = {}\ngamma = {}\ntermination = {}\nwall_time = {:?}\nspace_time_dofs = {}\n",
        res.records.len(),
        to_f64(res.t_final()),
        to_f64(res.u_norm_final()),
        fmt(blow.map(|b| b.t_inf)),
        fmt(blow.and_then(|b| b.last_gamma())),
        res.termination.as_str(),
        wall_seconds,
        res.space_time_dofs()
    )
}

/// Leaf ids of a mesh as a set (for tests and diagnostics).
pub fn leaf_set<T: Real>(mesh: &Mesh1D<T>) -> BTreeSet<CellId> {
    mesh.leaves().iter().copied().collect()
}
