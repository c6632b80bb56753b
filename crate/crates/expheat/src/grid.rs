//! Periodic-box discretization of R^n (n in {1,2,3}) and the transform pair
//! between real-space samples and Fourier coefficients.
//!
//! The box is [-L, L)^n with N samples per axis, x_i = -L + i*h, h = 2L/N.
//! Frequencies follow xi_k = pi*k/L for k in [-N/2, N/2), so that the
//! theta = 2 multiplier exp(-t*xi^2) reproduces the continuum heat kernel.
//! The forward transform carries the 1/N^n normalization.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Default allocation cap when `EXPHEAT_MEM_BUDGET_MB` is not set.
pub const DEFAULT_MEM_BUDGET_MB: usize = 2048;
/// Environment variable capping grid allocation, in megabytes.
pub const MEM_BUDGET_ENV: &str = "EXPHEAT_MEM_BUDGET_MB";

fn mem_budget_mb() -> usize {
    std::env::var(MEM_BUDGET_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(DEFAULT_MEM_BUDGET_MB)
}

/// Uniform periodic grid on [-L, L)^n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dimension: usize,
    points_per_axis: usize,
    half_width: f64,
}

/// Constructor entry point matching the `(n, N, L)` signature used throughout.
pub fn make_grid(n: usize, points: usize, half_width: f64) -> Result<GridSpec> {
    GridSpec::new(n, points, half_width)
}

impl GridSpec {
    pub fn new(n: usize, points: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not in {{1,2,3}}")));
        }
        if points < 16 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points} must be a power of two >= 16"
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive")));
        }
        let total = points.checked_pow(n as u32).ok_or_else(|| {
            Error::InvalidGrid("sample count overflows usize".into())
        })?;
        // complex working buffer is the largest allocation per field
        let needed_mb = total * std::mem::size_of::<Complex64>() / (1024 * 1024);
        let budget_mb = mem_budget_mb();
        if needed_mb > budget_mb {
            return Err(Error::MemoryBudget { needed_mb, budget_mb });
        }
        Ok(Self { dimension: n, points_per_axis: points, half_width })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Grid spacing h = 2L/N.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Total sample count N^n.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume h^n.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dimension as i32)
    }

    /// Box volume (2L)^n.
    pub fn box_volume(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dimension as i32)
    }

    /// Coordinate of sample index i along one axis: x_i = -L + i*h.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Per-axis sample indices of a row-major linear index.
    pub fn axis_indices(&self, mut idx: usize) -> [usize; 3] {
        let n = self.points_per_axis;
        let mut out = [0usize; 3];
        for a in (0..self.dimension).rev() {
            out[a] = idx % n;
            idx /= n;
        }
        out
    }

    /// Row-major linear index of per-axis sample indices.
    pub fn linear_index(&self, axes: &[usize]) -> usize {
        let mut idx = 0usize;
        for a in 0..self.dimension {
            idx = idx * self.points_per_axis + axes[a];
        }
        idx
    }

    /// Coordinates of a linear index (unused axes are 0).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let ax = self.axis_indices(idx);
        let mut x = [0.0f64; 3];
        for a in 0..self.dimension {
            x[a] = self.coordinate(ax[a]);
        }
        x
    }

    /// Signed frequency index for an axis sample index: k in [-N/2, N/2).
    pub fn signed_mode(&self, i: usize) -> i64 {
        let n = self.points_per_axis as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// |xi|^2 for the mode at a linear index, with xi_k = pi*k/L per axis.
    pub fn freq_sq(&self, idx: usize) -> f64 {
        let ax = self.axis_indices(idx);
        let base = std::f64::consts::PI / self.half_width;
        let mut s = 0.0;
        for a in 0..self.dimension {
            let xi = base * self.signed_mode(ax[a]) as f64;
            s += xi * xi;
        }
        s
    }
}

/// Real-space samples of a function on the grid, row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid sample count {}",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("field construction".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Sample a function of the coordinates.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = grid.dimension();
        let values = (0..grid.len())
            .map(|idx| {
                let p = grid.point(idx);
                f(&p[..n])
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        self.grid_spec()
    }

    pub fn grid_spec(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// self + c * other (grids must match).
    pub fn axpy(&self, c: f64, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("mismatched grids in axpy".into()));
        }
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| a + c * b)
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Integral of the samples over the box: sum(values) * h^n.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// L^q grid-quadrature norm; q = infinity gives the max over samples.
    pub fn lp_norm(&self, q: f64) -> Result<f64> {
        lp_norm(self, q)
    }

    /// Fraction of |.|-mass lying within distance L/2 of the box boundary,
    /// i.e. on cells with max-axis coordinate |x| > L/2. Diagnoses periodic
    /// wraparound: it must stay tiny for the box truncation to be faithful.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let half = self.grid.half_width() / 2.0;
        let mut total = 0.0;
        let mut near = 0.0;
        let n = self.grid.dimension();
        for (idx, &v) in self.values.iter().enumerate() {
            let a = v.abs();
            total += a;
            let p = self.grid.point(idx);
            if p[..n].iter().any(|x| x.abs() > half) {
                near += a;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            near / total
        }
    }
}

/// `L^q` norm of a field: (sum |v|^q h^n)^(1/q), or max |v| for q = infinity.
pub fn lp_norm(f: &Field, q: f64) -> Result<f64> {
    if q.is_infinite() && q > 0.0 {
        return Ok(f.max_abs());
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("lp_norm requires q >= 1 or q = inf, got {q}")));
    }
    let hn = f.grid_spec().cell_volume();
    // factor out the max to avoid overflow for large q
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = f.values().iter().map(|&v| (v.abs() / m).powf(q)).sum();
    Ok(m * (s * hn).powf(1.0 / q))
}

/// Normalization convention tag for spectral coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Forward transform carries the 1/N^n factor.
    ForwardScaled,
}

/// Fourier-coefficient representation of a [`Field`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: GridSpec,
    coeffs: Vec<Complex64>,
    normalization: Normalization,
}

impl SpectralField {
    pub fn from_coeffs(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidGrid("coefficient count does not match grid".into()));
        }
        Ok(Self { grid, coeffs, normalization: Normalization::ForwardScaled })
    }

    pub fn grid_spec(&self) -> &GridSpec {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }
}

// FFT plans are cached per (size, direction); rustfft plans are Sync.
static PLAN_CACHE: Lazy<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLAN_CACHE.lock().unwrap();
    cache
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

fn fft_all_axes(data: &mut [Complex64], dims: usize, n: usize, forward: bool) {
    let fft = plan(n, forward);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dims {
        let stride = n.pow((dims - 1 - axis) as u32);
        let lines = data.len() / n;
        for j in 0..lines {
            let base = (j / stride) * stride * n + (j % stride);
            if stride == 1 {
                fft.process(&mut data[base..base + n]);
            } else {
                for i in 0..n {
                    line[i] = data[base + i * stride];
                }
                fft.process(&mut line);
                for i in 0..n {
                    data[base + i * stride] = line[i];
                }
            }
        }
    }
}

/// Discrete Fourier transform; coefficients carry the 1/N^n normalization.
pub fn forward_transform(f: &Field) -> Result<SpectralField> {
    if !f.is_finite() {
        return Err(Error::NonFinite("forward transform input".into()));
    }
    let grid = *f.grid_spec();
    let mut data: Vec<Complex64> =
        f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_all_axes(&mut data, grid.dimension(), grid.points_per_axis(), true);
    let scale = 1.0 / grid.len() as f64;
    for c in &mut data {
        *c *= scale;
    }
    SpectralField::from_coeffs(grid, data)
}

/// Exact inverse of [`forward_transform`] up to round-off. The imaginary
/// residue must stay below 1e-10 of the real max-norm; larger residue
/// signals a corrupted (non-Hermitian) spectrum.
pub fn inverse_transform(sf: &SpectralField) -> Result<Field> {
    let grid = *sf.grid_spec();
    let mut data = sf.coeffs().to_vec();
    fft_all_axes(&mut data, grid.dimension(), grid.points_per_axis(), false);
    let max_re = data.iter().fold(0.0f64, |m, c| m.max(c.re.abs()));
    let max_im = data.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
    if max_im > 1e-10 * max_re.max(1.0) {
        return Err(Error::SpectrumCorrupt { residue: max_im });
    }
    let values = data.iter().map(|c| c.re).collect();
    Field::from_values(grid, values)
}

/// Dilation phi_lambda(x) = lambda^(n/p) phi(lambda*x), resampled on the grid.
///
/// Dyadic lambda < 1 uses spectral zero-padding (band-limited upsampling by
/// 1/lambda); integer dyadic lambda >= 2 uses index remapping. Other lambda
/// fall back to direct trigonometric interpolation (1-d only). The L^p norm
/// of the result matches the input up to resampling error.
pub fn dilate(f: &Field, lambda: f64, p: f64) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation lambda {lambda} must be positive")));
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("dilation p {p} must be >= 1")));
    }
    let grid = *f.grid_spec();
    let n = grid.dimension();
    let amp = lambda.powf(n as f64 / p);
    if (lambda - 1.0).abs() < 1e-15 {
        return Ok(f.clone());
    }
    // support check for expansions: the support stretches by 1/lambda
    if lambda < 1.0 {
        let mut supp: f64 = 0.0;
        let thresh = 1e-12 * f.max_abs();
        for (idx, &v) in f.values().iter().enumerate() {
            if v.abs() > thresh {
                let pt = grid.point(idx);
                for x in &pt[..n] {
                    supp = supp.max(x.abs());
                }
            }
        }
        if supp / lambda >= grid.half_width() {
            return Err(Error::InvalidParameter(format!(
                "dilated support {:.3} exceeds the box half width {:.3}",
                supp / lambda,
                grid.half_width()
            )));
        }
    }
    let inv = 1.0 / lambda;
    let npts = grid.points_per_axis();
    if inv > 1.0 && inv.fract() == 0.0 && (inv as usize).is_power_of_two() {
        // upsample each axis by 1/lambda via spectral zero padding, then
        // pick the coarse samples at lambda * x_j
        let k = inv as usize;
        let fine_n = npts * k;
        let fine_total = fine_n.pow(n as u32);
        let spec = forward_transform(f)?;
        let mut fine = vec![Complex64::new(0.0, 0.0); fine_total];
        for (idx, &c) in spec.coeffs().iter().enumerate() {
            let ax = grid.axis_indices(idx);
            let mut fidx = 0usize;
            for a in 0..n {
                let m = grid.signed_mode(ax[a]);
                let fi = if m >= 0 { m as usize } else { (fine_n as i64 + m) as usize };
                fidx = fidx * fine_n + fi;
            }
            fine[fidx] = c;
        }
        fft_all_axes(&mut fine, n, fine_n, false);
        let offset = (k - 1) * npts / 2;
        let values = (0..grid.len())
            .map(|idx| {
                let ax = grid.axis_indices(idx);
                let mut fidx = 0usize;
                for a in 0..n {
                    fidx = fidx * fine_n + (offset + ax[a]);
                }
                amp * fine[fidx].re
            })
            .collect();
        Field::from_values(grid, values)
    } else if lambda > 1.0 && lambda.fract() == 0.0 && (lambda as usize).is_power_of_two() {
        // contraction by an integer dyadic factor: pure index remapping
        let k = lambda as usize;
        let values = (0..grid.len())
            .map(|idx| {
                let ax = grid.axis_indices(idx);
                let mut src = [0usize; 3];
                for a in 0..n {
                    let j = ax[a] as i64 - (npts / 2) as i64;
                    let m = (npts / 2) as i64 + k as i64 * j;
                    if m < 0 || m >= npts as i64 {
                        return 0.0;
                    }
                    src[a] = m as usize;
                }
                amp * f.values()[grid.linear_index(&src[..n])]
            })
            .collect();
        Field::from_values(grid, values)
    } else {
        if n != 1 {
            return Err(Error::InvalidParameter(
                "non-dyadic dilation is only supported in one dimension".into(),
            ));
        }
        // direct evaluation of the trigonometric interpolant at lambda * x_j
        let spec = forward_transform(f)?;
        let base = std::f64::consts::PI / grid.half_width();
        let values = (0..npts)
            .map(|j| {
                let y = lambda * grid.coordinate(j);
                let mut acc = Complex64::new(0.0, 0.0);
                for (ki, &c) in spec.coeffs().iter().enumerate() {
                    let xi = base * grid.signed_mode(ki) as f64;
                    acc += c * Complex64::new(0.0, xi * y).exp();
                }
                amp * acc.re
            })
            .collect();
        Field::from_values(grid, values)
    }
}
