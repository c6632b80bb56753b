//! Time integration of the mild-solution integral equation
//! u(t) = e^{-tL} phi + int_0^t e^{-(t-s)L} f(u(s)) ds
//! by exponential product integration, plus the monotone Picard recursion
//! over the whole time grid, with blowup detection and norm caching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{forward_transform, Field, GridSpec};
use crate::nonlin::{evaluate, NonlinearitySpec};
use crate::orlicz::{luxemburg_norm, OrliczParams};
use crate::semigroup::{apply_semigroup, DiffusionSpec};

/// One Cauchy problem instance: grid, operator, nonlinearity, and data.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: GridSpec,
    pub diffusion: DiffusionSpec,
    pub nonlin: NonlinearitySpec,
    pub initial: Field,
}

impl ProblemSpec {
    pub fn new(
        grid: GridSpec,
        diffusion: DiffusionSpec,
        nonlin: NonlinearitySpec,
        initial: Field,
    ) -> Result<Self> {
        if diffusion.dimension() != grid.dimension() || nonlin.dimension != grid.dimension() {
            return Err(Error::InvalidParameter(
                "grid, diffusion, and nonlinearity dimensions must agree".into(),
            ));
        }
        if initial.grid_spec() != &grid {
            return Err(Error::InvalidGrid("initial data lives on a different grid".into()));
        }
        if !nonlin.signed_mode {
            let floor = -1e-12 * initial.max_abs();
            if initial.values().iter().any(|&v| v < floor) {
                return Err(Error::InvalidParameter(
                    "initial data must be nonnegative for non-even r".into(),
                ));
            }
        }
        Ok(Self { grid, diffusion, nonlin, initial })
    }
}

/// Strictly increasing positive output times: a short linear ramp to t0
/// resolves the initial transient, then geometric spacing t_j = t0 rho^j
/// covers the decades that decay fitting needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t_points: Vec<f64>,
    substeps: usize,
}

impl TimeGrid {
    pub fn from_points(t_points: Vec<f64>, substeps: usize) -> Result<Self> {
        if t_points.is_empty() || t_points[0] <= 0.0 {
            return Err(Error::InvalidParameter("time grid must start after 0".into()));
        }
        if t_points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
        }
        if substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be at least 1".into()));
        }
        Ok(Self { t_points, substeps })
    }

    /// Linear ramp of `ramp_steps` steps up to t0, then geometric with
    /// ratio rho out to at least t_final.
    pub fn ramp_geometric(
        t0: f64,
        ramp_steps: usize,
        rho: f64,
        t_final: f64,
        substeps: usize,
    ) -> Result<Self> {
        if !(t0 > 0.0 && t_final > t0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < t0 < t_final, got t0={t0}, t_final={t_final}"
            )));
        }
        if !(rho > 1.0 && rho <= 2.0) {
            return Err(Error::InvalidParameter(format!("ratio rho = {rho} not in (1, 2]")));
        }
        if ramp_steps == 0 {
            return Err(Error::InvalidParameter("ramp needs at least one step".into()));
        }
        let mut pts = Vec::new();
        for j in 1..=ramp_steps {
            pts.push(t0 * j as f64 / ramp_steps as f64);
        }
        let mut t = t0;
        while t < t_final * (1.0 - 1e-12) {
            t *= rho;
            pts.push(t.min(t_final));
        }
        Self::from_points(pts, substeps)
    }

    pub fn points(&self) -> &[f64] {
        &self.t_points
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }
}

/// Solution strategy for [`integrate`] vs [`picard_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    TimeMarch,
    GlobalPicard,
}

/// Tolerances and toggles for a solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub mode: SolverMode,
    /// Sup-over-time L^inf convergence threshold for the Picard recursion.
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Blowup when u^r exceeds this anywhere (e^700 is the f64 ceiling).
    pub blowup_threshold: f64,
    /// Largest admissible fraction of |u|-mass near the box boundary at the
    /// final time; a violation means the box is too small.
    pub boundary_mass_tol: f64,
    /// When false, f is dropped and the run is the pure semigroup (the
    /// linear oracle used for validation).
    pub nonlinearity_enabled: bool,
    /// L^q norms cached per output time.
    pub norm_qs: Vec<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: SolverMode::TimeMarch,
            picard_tol: 1e-10,
            picard_max_iter: 200,
            blowup_threshold: 700.0,
            boundary_mass_tol: 1e-8,
            nonlinearity_enabled: true,
            norm_qs: vec![1.0, 2.0, 4.0, f64::INFINITY],
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0 && self.blowup_threshold > 0.0 && self.boundary_mass_tol > 0.0)
        {
            return Err(Error::InvalidParameter("solver tolerances must be positive".into()));
        }
        if self.picard_max_iter == 0 {
            return Err(Error::InvalidParameter("picard_max_iter must be at least 1".into()));
        }
        if self.norm_qs.iter().any(|&q| q < 1.0) {
            return Err(Error::InvalidParameter("norm q values must be >= 1".into()));
        }
        Ok(())
    }
}

/// Time-stamped solution states with cached norms and mass.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Field>,
    /// norm_qs[i] is the q-index of norms[*][i].
    pub norm_qs: Vec<f64>,
    /// norms[j][i] = L^{norm_qs[i]} norm at times[j].
    pub norms: Vec<Vec<f64>>,
    /// exp L^r Luxemburg norm at each time (r from the nonlinearity).
    pub orlicz_norms: Vec<f64>,
    /// Integral of u over the box at each time.
    pub mass_series: Vec<f64>,
    pub blowup_time: Option<f64>,
    /// Boundary-mass fraction of the final stored state.
    pub final_boundary_fraction: f64,
    /// Largest observed fraction of spectral energy in the top third of the
    /// frequency band (aliasing monitor; warn above 1e-8).
    pub max_aliasing_fraction: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &Field {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Column of cached L^q norms for a q requested in the config.
    pub fn norm_column(&self, q: f64) -> Result<Vec<f64>> {
        let i = self
            .norm_qs
            .iter()
            .position(|&c| c == q || (c.is_infinite() && q.is_infinite()))
            .ok_or_else(|| Error::InvalidParameter(format!("q = {q} was not cached")))?;
        Ok(self.norms.iter().map(|row| row[i]).collect())
    }

    /// Index of the stored time closest to t, requiring an exact-ish hit.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| Error::InvalidParameter(format!("t = {t} is not a grid time")))
    }
}

/// Fraction of spectral energy in the top third of the frequency band.
fn aliasing_fraction(f: &Field) -> Result<f64> {
    let sf = forward_transform(f)?;
    let grid = *f.grid_spec();
    let npts = grid.points_per_axis() as i64;
    let cutoff = npts / 3; // |k| > N/3 counts as the top band
    let mut top = 0.0f64;
    let mut total = 0.0f64;
    for (idx, c) in sf.coeffs().iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        let ax = grid.axis_indices(idx);
        let high =
            (0..grid.dimension()).any(|a| grid.signed_mode(ax[a]).abs() > cutoff);
        if high {
            top += e;
        }
    }
    Ok(if total == 0.0 { 0.0 } else { top / total })
}

fn blowup_guard(u: &Field, spec: &ProblemSpec, cfg: &SolverConfig, t: f64) -> Result<()> {
    let cap = cfg.blowup_threshold.powf(1.0 / spec.nonlin.r);
    let sup = u.max_abs();
    if sup > cap || !u.is_finite() {
        return Err(Error::Blowup { time: t, max_abs: sup });
    }
    Ok(())
}

fn eval_f(u: &Field, spec: &ProblemSpec, t: f64) -> Result<Field> {
    match evaluate(u, &spec.nonlin) {
        Ok(f) => Ok(f),
        Err(Error::Blowup { max_abs, .. }) => Err(Error::Blowup { time: t, max_abs }),
        Err(e) => Err(e),
    }
}

/// One output interval of the mild equation by exponential midpoint product
/// integration over `substeps` panels. On each panel [a, b] with width d:
///   A = e^{-(d/2)L} u,  B = e^{-(d/2)L} f(u),
///   mid = A + (d/2) B          (midpoint predictor),
///   u_next = e^{-(d/2)L} (A + d f(mid)).
/// The panel touching s = 0 instead freezes f at the right endpoint, since
/// e^{-sL} phi need not be smooth in s at 0 for rough data.
pub fn duhamel_step(
    u0: &Field,
    t0: f64,
    t1: f64,
    spec: &ProblemSpec,
    substeps: usize,
    cfg: &SolverConfig,
) -> Result<Field> {
    if !(t1 > t0 && t0 >= 0.0) {
        return Err(Error::InvalidParameter(format!("need t1 > t0 >= 0, got [{t0}, {t1}]")));
    }
    if substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be at least 1".into()));
    }
    let mut u = u0.clone();
    let d = (t1 - t0) / substeps as f64;
    for k in 0..substeps {
        let a = t0 + k as f64 * d;
        if !cfg.nonlinearity_enabled {
            u = apply_semigroup(&u, d, &spec.diffusion)?;
            continue;
        }
        if a == 0.0 {
            // right-endpoint rule on the first panel
            let prop = apply_semigroup(&u, d, &spec.diffusion)?;
            blowup_guard(&prop, spec, cfg, a + d)?;
            let fr = eval_f(&prop, spec, a + d)?;
            u = prop.axpy(d, &fr)?;
        } else {
            blowup_guard(&u, spec, cfg, a)?;
            let fu = eval_f(&u, spec, a)?;
            let a_half = apply_semigroup(&u, d / 2.0, &spec.diffusion)?;
            let b_half = apply_semigroup(&fu, d / 2.0, &spec.diffusion)?;
            let mid = a_half.axpy(d / 2.0, &b_half)?;
            blowup_guard(&mid, spec, cfg, a + d / 2.0)?;
            let fmid = eval_f(&mid, spec, a + d / 2.0)?;
            u = apply_semigroup(&a_half.axpy(d, &fmid)?, d / 2.0, &spec.diffusion)?;
        }
        blowup_guard(&u, spec, cfg, a + d)?;
    }
    Ok(u)
}

fn cache_norms(
    u: &Field,
    spec: &ProblemSpec,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64, f64)> {
    let row = cfg
        .norm_qs
        .iter()
        .map(|&q| u.lp_norm(q))
        .collect::<Result<Vec<f64>>>()?;
    let op = OrliczParams::new(spec.nonlin.r)?;
    let lux = luxemburg_norm(u, &op)?;
    Ok((row, lux, u.mass()))
}

/// March [`duhamel_step`] across the time grid, caching norms and mass.
/// Blowup is a legal terminal state recorded on the trajectory; a
/// boundary-mass violation at the final time is a configuration error.
pub fn integrate(spec: &ProblemSpec, tg: &TimeGrid, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut times = vec![0.0];
    let mut states = vec![spec.initial.clone()];
    let (row, lux, mass) = cache_norms(&spec.initial, spec, cfg)?;
    let mut norms = vec![row];
    let mut orlicz_norms = vec![lux];
    let mut mass_series = vec![mass];
    let mut blowup_time = None;
    let mut max_alias = aliasing_fraction(&spec.initial)?;

    let mut t_prev = 0.0;
    let mut u = spec.initial.clone();
    for &t in tg.points() {
        match duhamel_step(&u, t_prev, t, spec, tg.substeps(), cfg) {
            Ok(next) => {
                u = next;
                let (row, lux, mass) = cache_norms(&u, spec, cfg)?;
                times.push(t);
                states.push(u.clone());
                norms.push(row);
                orlicz_norms.push(lux);
                mass_series.push(mass);
                max_alias = max_alias.max(aliasing_fraction(&u)?);
                t_prev = t;
            }
            Err(Error::Blowup { time, .. }) => {
                blowup_time = Some(time);
                break;
            }
            Err(e) => return Err(e),
        }
    }

    let final_boundary_fraction = states.last().unwrap().boundary_mass_fraction();
    if blowup_time.is_none() && final_boundary_fraction > cfg.boundary_mass_tol {
        return Err(Error::BoundaryMass {
            fraction: final_boundary_fraction,
            tol: cfg.boundary_mass_tol,
        });
    }
    Ok(Trajectory {
        times,
        states,
        norm_qs: cfg.norm_qs.clone(),
        norms,
        orlicz_norms,
        mass_series,
        blowup_time,
        final_boundary_fraction,
        max_aliasing_fraction: max_alias,
    })
}

/// Result of the global Picard recursion: the fixed-point trajectory plus
/// the per-iterate convergence history.
#[derive(Debug, Clone)]
pub struct PicardResult {
    pub trajectory: Trajectory,
    /// sup over grid times of ||v_{j+1} - v_j||_inf, one entry per iterate.
    pub gaps: Vec<f64>,
    /// Most negative pointwise increment seen per iterate (monotonicity
    /// check: the recursion should be nondecreasing, so these stay above
    /// a small negative round-off floor).
    pub min_increment: Vec<f64>,
}

/// The monotone recursion v_0(t) = e^{-tL} phi,
/// v_{j+1}(t) = v_0(t) + int_0^t e^{-(t-s)L} f(v_j(s)) ds, iterated over the
/// whole grid until the sup-over-time gap drops below picard_tol.
///
/// The Duhamel integral of iterate j is accumulated left to right with the
/// same midpoint product quadrature as the marching scheme, using the
/// semigroup identity I(t_i) = e^{-d L} I(t_{i-1}) + (new panel), so each
/// sweep costs O(grid points) semigroup applications.
pub fn picard_solve(spec: &ProblemSpec, tg: &TimeGrid, cfg: &SolverConfig) -> Result<PicardResult> {
    cfg.validate()?;
    if !spec.nonlin.signed_mode {
        let floor = -1e-12 * spec.initial.max_abs();
        if spec.initial.values().iter().any(|&v| v < floor) {
            return Err(Error::InvalidParameter("Picard recursion needs phi >= 0".into()));
        }
    }
    let times: Vec<f64> = std::iter::once(0.0).chain(tg.points().iter().copied()).collect();
    let m = times.len();

    // v0(t_i) marched with the exact semigroup
    let mut v0 = Vec::with_capacity(m);
    v0.push(spec.initial.clone());
    for i in 1..m {
        let prev = &v0[i - 1];
        v0.push(apply_semigroup(prev, times[i] - times[i - 1], &spec.diffusion)?);
    }

    let mut v = v0.clone();
    let mut gaps = Vec::new();
    let mut min_increment = Vec::new();
    let mut converged = false;
    for _iter in 0..cfg.picard_max_iter {
        // one sweep: accumulate I(t_i) and form v_next = v0 + I
        let mut integral = Field::zeros(spec.grid);
        let mut v_next = Vec::with_capacity(m);
        v_next.push(spec.initial.clone());
        for i in 1..m {
            let d = times[i] - times[i - 1];
            blowup_guard(&v[i], spec, cfg, times[i])?;
            if i == 1 {
                // first panel touches s = 0: right-endpoint rule
                let f1 = eval_f(&v[1], spec, times[1])?;
                integral = f1.scale(d);
            } else {
                let mid = v[i - 1].axpy(1.0, &v[i])?.scale(0.5);
                let fmid = eval_f(&mid, spec, 0.5 * (times[i - 1] + times[i]))?;
                let half = apply_semigroup(&integral, d / 2.0, &spec.diffusion)?;
                integral =
                    apply_semigroup(&half.axpy(d, &fmid)?, d / 2.0, &spec.diffusion)?;
            }
            v_next.push(v0[i].axpy(1.0, &integral)?);
        }
        let mut gap = 0.0f64;
        let mut min_inc = 0.0f64;
        for i in 0..m {
            for (a, b) in v_next[i].values().iter().zip(v[i].values()) {
                let inc = a - b;
                gap = gap.max(inc.abs());
                min_inc = min_inc.min(inc);
            }
        }
        gaps.push(gap);
        min_increment.push(min_inc);
        v = v_next;
        if gap < cfg.picard_tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iters: cfg.picard_max_iter,
            gap: *gaps.last().unwrap_or(&f64::NAN),
        });
    }

    let mut norms = Vec::with_capacity(m);
    let mut orlicz_norms = Vec::with_capacity(m);
    let mut mass_series = Vec::with_capacity(m);
    let mut max_alias = 0.0f64;
    for state in &v {
        let (row, lux, mass) = cache_norms(state, spec, cfg)?;
        norms.push(row);
        orlicz_norms.push(lux);
        mass_series.push(mass);
        max_alias = max_alias.max(aliasing_fraction(state)?);
    }
    let final_boundary_fraction = v.last().unwrap().boundary_mass_fraction();
    if final_boundary_fraction > cfg.boundary_mass_tol {
        return Err(Error::BoundaryMass {
            fraction: final_boundary_fraction,
            tol: cfg.boundary_mass_tol,
        });
    }
    Ok(PicardResult {
        trajectory: Trajectory {
            times,
            states: v,
            norm_qs: cfg.norm_qs.clone(),
            norms,
            orlicz_norms,
            mass_series,
            blowup_time: None,
            final_boundary_fraction,
            max_aliasing_fraction: max_alias,
        },
        gaps,
        min_increment,
    })
}

/// Restart device: a new problem whose initial datum is the trajectory state
/// at a stored grid time (no interpolation).
pub fn shifted_restart(traj: &Trajectory, spec: &ProblemSpec, t_shift: f64) -> Result<ProblemSpec> {
    let idx = traj.time_index(t_shift)?;
    ProblemSpec::new(spec.grid, spec.diffusion, spec.nonlin, traj.states[idx].clone())
}
