//! Quantitative verification layer: fitted decay exponents against the
//! theoretical rates, mass convergence m(t) -> m*, heat-kernel asymptotic
//! profile errors, the dilation family of initial data, and the
//! supercritical blowup probe.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{dilate, inverse_transform, Field, SpectralField};
use crate::semigroup::DiffusionSpec;
use crate::solver::{integrate, ProblemSpec, SolverConfig, TimeGrid, Trajectory};
use num_complex::Complex64;

/// Theoretical decay exponent (n/theta)(1/p* - 1/q), with 1/inf = 0.
pub fn theoretical_exponent(n: usize, theta: f64, p_star: f64, q: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 2.0) {
        return Err(Error::InvalidParameter(format!("theta {theta} not in (0, 2]")));
    }
    if !(p_star >= 1.0 && q >= p_star) {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= p_star <= q, got p_star={p_star}, q={q}"
        )));
    }
    let inv_p = 1.0 / p_star;
    let inv_q = if q.is_infinite() { 0.0 } else { 1.0 / q };
    Ok((n as f64 / theta) * (inv_p - inv_q))
}

/// The exponent bookkeeping attached to an initial datum in L^p:
/// p* drives the decay rate; p1 and p2 are the auxiliary indices used by
/// the fixed-point estimates, exposed for diagnostic output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSelection {
    pub p_star: f64,
    pub p1: f64,
    pub p2: f64,
}

/// p* = max{p, rn/(n + r theta)} together with p1 = max{rn/(n+r theta), 1}
/// and p2 = max{p* n/(n + r theta), 1}.
pub fn exponent_selector(p: f64, n: usize, theta: f64, r: f64) -> Result<ExponentSelection> {
    if !(r > 1.0 && theta > 0.0 && theta <= 2.0) {
        return Err(Error::InvalidParameter(format!("bad (r, theta) = ({r}, {theta})")));
    }
    if !(p >= 1.0 && p <= r) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [1, r] = [1, {r}]")));
    }
    let nf = n as f64;
    let crit = r * nf / (nf + r * theta);
    let p_star = p.max(crit);
    Ok(ExponentSelection {
        p_star,
        p1: crit.max(1.0),
        p2: (p_star * nf / (nf + r * theta)).max(1.0),
    })
}

/// Fitted decay rate of one norm column against its theoretical exponent.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub q: f64,
    pub fitted_exponent: f64,
    pub theoretical_exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub fit_window: (f64, f64),
    pub points_used: usize,
}

/// Ordinary least squares of log y against log t inside the window.
/// Returns (slope, intercept, R^2, points used).
pub fn fit_loglog(ts: &[f64], ys: &[f64], window: (f64, f64)) -> Result<(f64, f64, f64, usize)> {
    if window.0 <= 0.0 || window.1 <= window.0 {
        return Err(Error::InvalidParameter(format!("bad fit window {window:?}")));
    }
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (&t, &y) in ts.iter().zip(ys) {
        if t >= window.0 && t <= window.1 {
            if !(y > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "nonpositive norm {y} at t = {t} inside the fit window"
                )));
            }
            xs.push(t.ln());
            zs.push(y.ln());
        }
    }
    let m = xs.len();
    if m < 8 {
        return Err(Error::InvalidParameter(format!(
            "only {m} points inside the fit window; need at least 8"
        )));
    }
    let mf = m as f64;
    let mean_x = xs.iter().sum::<f64>() / mf;
    let mean_z = zs.iter().sum::<f64>() / mf;
    let mut sxx = 0.0;
    let mut sxz = 0.0;
    let mut szz = 0.0;
    for i in 0..m {
        let dx = xs[i] - mean_x;
        let dz = zs[i] - mean_z;
        sxx += dx * dx;
        sxz += dx * dz;
        szz += dz * dz;
    }
    let slope = sxz / sxx;
    let intercept = mean_z - slope * mean_x;
    let r2 = if szz == 0.0 { 1.0 } else { (sxz * sxz) / (sxx * szz) };
    Ok((slope, intercept, r2, m))
}

/// Fit the decay rate of the cached L^q norms over the window; the fitted
/// exponent is minus the log-log slope. `p_star` feeds the theoretical
/// column (it depends on the data class, which the trajectory cannot know).
pub fn fit_decay(
    traj: &Trajectory,
    q: f64,
    window: (f64, f64),
    n: usize,
    theta: f64,
    p_star: f64,
) -> Result<DecayReport> {
    let ys = traj.norm_column(q)?;
    let (slope, intercept, r2, m) = fit_loglog(&traj.times, &ys, window)?;
    Ok(DecayReport {
        q,
        fitted_exponent: -slope,
        theoretical_exponent: theoretical_exponent(n, theta, p_star, q)?,
        intercept,
        r_squared: r2,
        fit_window: window,
        points_used: m,
    })
}

/// Default fit window [T/100, T]: late times isolate the asymptotic regime.
pub fn default_fit_window(t_final: f64) -> (f64, f64) {
    (t_final / 100.0, t_final)
}

/// Mass convergence and heat-kernel profile diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    /// Richardson-corrected limit 2 m(T) - m(T/2), assuming an O(1/t) tail.
    pub m_star_estimate: f64,
    /// Uncorrected m at the final time, reported alongside.
    pub m_final_raw: f64,
    /// m* - m(t) per stored time.
    pub mass_tail: Vec<f64>,
    /// For each requested q: rescaled errors
    /// t^{(n/theta)(1 - 1/q)} ||u(t) - m* G_theta(t+1, .)||_q per time.
    pub profile_qs: Vec<f64>,
    pub profile_errors: Vec<Vec<f64>>,
    pub times: Vec<f64>,
}

/// The periodization of G_theta(t, .) on the grid, built in Fourier space:
/// its DFT coefficients are exactly e^{-t |xi_k|^theta} / (2L)^n.
pub fn periodic_kernel(grid: &crate::grid::GridSpec, t: f64, d: &DiffusionSpec) -> Result<Field> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("kernel time {t} must be positive")));
    }
    let vol = grid.box_volume();
    let half = d.theta() / 2.0;
    let coeffs = (0..grid.len())
        .map(|idx| {
            let xi2 = grid.freq_sq(idx);
            let mult = if xi2 > 0.0 { (-t * xi2.powf(half)).exp() } else { 1.0 };
            // (-1)^k phase per axis centers the kernel at x = 0 (index N/2)
            // rather than at the first sample x = -L
            let ax = grid.axis_indices(idx);
            let ksum: i64 = (0..grid.dimension()).map(|a| grid.signed_mode(ax[a])).sum();
            let sign = if ksum.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            Complex64::new(sign * mult / vol, 0.0)
        })
        .collect();
    inverse_transform(&SpectralField::from_coeffs(*grid, coeffs)?)
}

/// Mass limit m*, tail m* - m(t), and rescaled profile errors against
/// m* G_theta(t+1). Rejects blowup trajectories.
pub fn mass_asymptotics(
    traj: &Trajectory,
    spec: &ProblemSpec,
    profile_qs: &[f64],
) -> Result<AsymptoticsReport> {
    if traj.blowup_time.is_some() {
        return Err(Error::InvalidParameter(
            "mass asymptotics are undefined for a blowup trajectory".into(),
        ));
    }
    let t_final = *traj.times.last().unwrap();
    let m_final = *traj.mass_series.last().unwrap();
    // nearest stored time to T/2 for the Richardson correction
    let half_idx = traj
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 - t_final / 2.0).abs().partial_cmp(&(b.1 - t_final / 2.0).abs()).unwrap()
        })
        .map(|(i, _)| i)
        .unwrap();
    let t_half = traj.times[half_idx];
    let m_half = traj.mass_series[half_idx];
    // with m(t) = m* - c/t:  m* = (T m(T) - T/2 m(T/2)) / (T - T/2); for an
    // exact half-time sample this reduces to 2 m(T) - m(T/2)
    let m_star = if t_final > t_half {
        (t_final * m_final - t_half * m_half) / (t_final - t_half)
    } else {
        m_final
    };
    let mass_tail = traj.mass_series.iter().map(|&m| m_star - m).collect();

    let n = spec.grid.dimension();
    let theta = spec.diffusion.theta();
    let mut profile_errors = Vec::with_capacity(profile_qs.len());
    for &q in profile_qs {
        let mut col = Vec::with_capacity(traj.times.len());
        for (j, &t) in traj.times.iter().enumerate() {
            let kernel = periodic_kernel(&spec.grid, t + 1.0, &spec.diffusion)?;
            let diff = traj.states[j].axpy(-m_star, &kernel)?;
            let weight = theoretical_exponent(n, theta, 1.0, q)?;
            col.push(t.powf(weight) * diff.lp_norm(q)?);
        }
        profile_errors.push(col);
    }
    Ok(AsymptoticsReport {
        m_star_estimate: m_star,
        m_final_raw: m_final,
        mass_tail,
        profile_qs: profile_qs.to_vec(),
        profile_errors,
        times: traj.times.clone(),
    })
}

/// phi_lambda(x) = lambda^{n/p} phi(lambda x) on the same grid.
pub fn dilation_family(phi: &Field, lambda: f64, p: f64) -> Result<Field> {
    dilate(phi, lambda, p)
}

/// Outcome of one supercritical (r > 2) integration attempt.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub r_super: f64,
    pub blowup_time: Option<f64>,
    /// max over time of ||u(t)||_inf / ||phi||_inf.
    pub max_growth_factor: f64,
    pub final_time_reached: f64,
}

/// Run the solver on phi with the supercritical exponent r_super > 2 and
/// theta = 2, reporting blowup or the largest sup-norm growth. A non-blowup
/// outcome is a legal result: the theory guarantees only the existence of
/// bad data, not that any particular datum blows up.
pub fn supercritical_probe(
    phi: &Field,
    r_super: f64,
    tg: &TimeGrid,
    cfg: &SolverConfig,
) -> Result<ProbeReport> {
    if !(r_super > 2.0) {
        return Err(Error::InvalidParameter(format!("probe needs r > 2, got {r_super}")));
    }
    let grid = *phi.grid_spec();
    let d = DiffusionSpec::new(2.0, grid.dimension())?;
    let nl = crate::nonlin::NonlinearitySpec::new(r_super, 2.0, grid.dimension())?;
    let spec = ProblemSpec::new(grid, d, nl, phi.clone())?;
    let traj = integrate(&spec, tg, cfg)?;
    let phi_sup = phi.max_abs().max(1e-300);
    let max_growth = traj
        .norm_column(f64::INFINITY)?
        .iter()
        .fold(0.0f64, |m, &v| m.max(v / phi_sup));
    Ok(ProbeReport {
        r_super,
        blowup_time: traj.blowup_time,
        max_growth_factor: max_growth,
        final_time_reached: *traj.times.last().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::nonlin::NonlinearitySpec;
    use crate::orlicz::{luxemburg_norm, OrliczParams};
    use crate::solver::SolverMode;

    #[test]
    fn theoretical_exponent_values() {
        assert_eq!(theoretical_exponent(1, 2.0, 2.0, f64::INFINITY).unwrap(), 0.25);
        assert_eq!(theoretical_exponent(1, 2.0, 1.0, f64::INFINITY).unwrap(), 0.5);
        assert_eq!(theoretical_exponent(2, 2.0, 3.0, 3.0).unwrap(), 0.0);
        assert!(theoretical_exponent(1, 2.0, 3.0, 2.0).is_err());
        // antitone in p_star, monotone in q
        let mut prev = f64::INFINITY;
        for p in [1.0, 1.5, 2.0, 3.0] {
            let e = theoretical_exponent(1, 2.0, p, 4.0).unwrap();
            assert!(e <= prev);
            prev = e;
        }
        let mut prev = -1.0;
        for q in [1.0, 2.0, 4.0, f64::INFINITY] {
            let e = theoretical_exponent(1, 2.0, 1.0, q).unwrap();
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn exponent_selector_cases() {
        // n=1, p=1: critical index 2/5 < 1, so p* = p
        let s = exponent_selector(1.0, 1, 2.0, 2.0).unwrap();
        assert_eq!(s.p_star, 1.0);
        assert_eq!(s.p1, 1.0);
        assert_eq!(s.p2, 1.0);
        // n=8: critical index 16/12 = 4/3 > 1
        let s = exponent_selector(1.0, 8, 2.0, 2.0).unwrap();
        assert!((s.p_star - 4.0 / 3.0).abs() < 1e-15);
        // p = r
        let s = exponent_selector(2.0, 1, 2.0, 2.0).unwrap();
        assert_eq!(s.p_star, 2.0);
        assert!(exponent_selector(0.5, 1, 2.0, 2.0).is_err());
        assert!(exponent_selector(2.5, 1, 2.0, 2.0).is_err());
        // continuity at the critical index: approach p = rn/(n+r theta)
        let crit = 16.0 / 12.0;
        let below = exponent_selector(crit - 1e-9, 8, 2.0, 2.0).unwrap();
        let above = exponent_selector(crit + 1e-9, 8, 2.0, 2.0).unwrap();
        assert!((below.p_star - above.p_star).abs() < 1e-8);
    }

    #[test]
    fn fit_recovers_pure_power_laws() {
        let ts: Vec<f64> = (1..200).map(|i| 0.5 * 1.1f64.powi(i)).collect();
        for alpha in [0.25, 0.5, 1.0, 2.5] {
            let ys: Vec<f64> = ts.iter().map(|t| 3.7 * t.powf(-alpha)).collect();
            let (slope, intercept, r2, _) = fit_loglog(&ts, &ys, (1.0, 1e4)).unwrap();
            assert!((slope + alpha).abs() < 1e-10, "alpha {alpha}: slope {slope}");
            assert!((intercept - 3.7f64.ln()).abs() < 1e-10);
            assert!((r2 - 1.0).abs() < 1e-12);
        }
        // constant series: slope 0
        let ys = vec![2.0; ts.len()];
        let (slope, _, _, _) = fit_loglog(&ts, &ys, (1.0, 1e4)).unwrap();
        assert!(slope.abs() < 1e-14);
        // too few points
        assert!(fit_loglog(&ts[..5], &ys[..5], (1.0, 1e4)).is_err());
    }

    fn linear_l1_run() -> (ProblemSpec, Trajectory) {
        let g = make_grid(1, 4096, 512.0).unwrap();
        let d = DiffusionSpec::new(2.0, 1).unwrap();
        let nl = NonlinearitySpec::new(2.0, 2.0, 1).unwrap();
        let phi = Field::from_fn(g, |x| (-x[0] * x[0]).exp()).unwrap();
        let spec = ProblemSpec::new(g, d, nl, phi).unwrap();
        let tg = TimeGrid::ramp_geometric(1.0, 4, 1.25, 500.0, 1).unwrap();
        let cfg = SolverConfig { nonlinearity_enabled: false, ..Default::default() };
        let traj = integrate(&spec, &tg, &cfg).unwrap();
        (spec, traj)
    }

    #[test]
    fn linear_decay_and_profile() {
        let (spec, traj) = linear_l1_run();
        let rep = fit_decay(&traj, f64::INFINITY, (5.0, 500.0), 1, 2.0, 1.0).unwrap();
        assert!((rep.fitted_exponent - 0.5).abs() < 0.02, "fitted {}", rep.fitted_exponent);
        assert!(rep.r_squared > 0.999);
        assert_eq!(rep.theoretical_exponent, 0.5);

        // m* = integral of phi for the linear flow, and the rescaled profile
        // error decreases over the final decade
        let asym = mass_asymptotics(&traj, &spec, &[1.0, f64::INFINITY]).unwrap();
        let phi_mass = spec.initial.mass();
        assert!((asym.m_star_estimate - phi_mass).abs() < 1e-10 * phi_mass);
        let t_final = *traj.times.last().unwrap();
        for col in &asym.profile_errors {
            let last_decade: Vec<f64> = traj
                .times
                .iter()
                .zip(col)
                .filter(|(t, _)| **t >= t_final / 10.0)
                .map(|(_, e)| *e)
                .collect();
            assert!(last_decade.len() >= 3);
            for w in last_decade.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "profile error not decreasing: {w:?}");
            }
        }
    }

    #[test]
    fn periodic_kernel_matches_closed_form() {
        let g = make_grid(1, 1024, 32.0).unwrap();
        let d = DiffusionSpec::new(2.0, 1).unwrap();
        let k = periodic_kernel(&g, 1.0, &d).unwrap();
        let mut err = 0.0f64;
        for idx in 0..g.len() {
            let x = g.coordinate(idx);
            let expect = crate::semigroup::gaussian_kernel(1.0, &[x]).unwrap();
            err = err.max((k.values()[idx] - expect).abs());
        }
        assert!(err < 1e-8, "kernel periodization error {err}");
        assert!((k.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dilation_family_norms() {
        let g = make_grid(1, 1024, 64.0).unwrap();
        let phi = Field::from_fn(g, |x| (-x[0] * x[0]).exp()).unwrap();
        let op = OrliczParams::new(2.0).unwrap();
        let p = 2.0;
        let base_lp = phi.lp_norm(p).unwrap();
        let mut prev_lux = f64::INFINITY;
        for lambda in [1.0, 0.5, 0.25, 0.125] {
            let fl = dilation_family(&phi, lambda, p).unwrap();
            let lp = fl.lp_norm(p).unwrap();
            assert!((lp - base_lp).abs() < 0.01 * base_lp, "lambda={lambda}: {lp} vs {base_lp}");
            let lux = luxemburg_norm(&fl, &op).unwrap();
            assert!(lux < prev_lux * (1.0 + 1e-12), "Orlicz norm not decreasing at {lambda}");
            prev_lux = lux;
        }
    }

    #[test]
    fn supercritical_probe_bounded_small_data() {
        let g = make_grid(1, 256, 32.0).unwrap();
        let phi = Field::from_fn(g, |x| 0.05 * (-x[0] * x[0]).exp()).unwrap();
        let tg = TimeGrid::ramp_geometric(0.01, 8, 1.3, 1.0, 2).unwrap();
        let cfg = SolverConfig { mode: SolverMode::TimeMarch, ..Default::default() };
        let rep = supercritical_probe(&phi, 3.0, &tg, &cfg).unwrap();
        assert!(rep.blowup_time.is_none(), "tiny smooth data must not blow up");
        assert!(rep.max_growth_factor <= 1.5);
        assert!(supercritical_probe(&phi, 2.0, &tg, &cfg).is_err());
    }
}
