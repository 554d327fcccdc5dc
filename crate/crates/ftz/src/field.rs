//! Uniform-grid symbols and FFT-based transforms.
//!
//! A [`ScalarField`] holds complex samples of a function on the square
//! `[-L/2, L/2)²`, either in the space domain or on the dual frequency
//! lattice. The Fourier convention is `𝓕f(ξ) = ∫ f(w) e^{-2πi ξ·w} dv(w)`,
//! so the heat kernel `γ_t(z) = (tπ)^{-1} e^{-|z|²/t}` transforms to
//! `a_t(ξ) = e^{-π²t|ξ|²}` and the heat semigroup becomes a pure spectral
//! multiplier. Forward transforms carry a `spacing²` factor so sampled
//! transforms approximate the continuum integrals directly.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::error::{Error, Result};

/// Square periodic sampling lattice over ℂ ≅ ℝ².
///
/// `points` samples per axis at `spacing = extent/points`; sample `(i, j)`
/// sits at `(-L/2 + i·h, -L/2 + j·h)`. The dual lattice has spacing
/// `1/extent` and the same number of points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    extent: f64,
    points: usize,
}

impl Grid {
    /// Build a grid; `points` must be a power of two with `points >= 8` and
    /// `extent` strictly positive.
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive and finite, got {extent}"
            )));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points must be a power of two >= 8, got {points}"
            )));
        }
        Ok(Grid { extent, points })
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.points as f64
    }

    pub fn frequency_spacing(&self) -> f64 {
        1.0 / self.extent
    }

    /// Spatial coordinate of sample index `i` along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.extent + i as f64 * self.spacing()
    }

    /// Frequency coordinate of sample index `i` along one axis.
    pub fn freq_coord(&self, i: usize) -> f64 {
        (i as f64 - self.points as f64 / 2.0) * self.frequency_spacing()
    }

    /// Half side length of the frequency box, `points/(2·extent)`.
    pub fn freq_half_extent(&self) -> f64 {
        self.points as f64 / (2.0 * self.extent)
    }

    /// Index of the spatial node at coordinate `x`, if `x` lies on the lattice.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let h = self.spacing();
        let r = (x + 0.5 * self.extent) / h;
        let k = r.round();
        if (r - k).abs() > 1e-9 {
            return None;
        }
        let m = self.points as i64;
        Some((k as i64).rem_euclid(m) as usize)
    }
}

/// Which lattice the samples live on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Space,
    Frequency,
}

/// Complex samples of a symbol (or of its spectrum) on a [`Grid`].
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    domain: Domain,
    samples: Array2<Complex64>,
}

impl ScalarField {
    pub fn from_samples(grid: Grid, domain: Domain, samples: Array2<Complex64>) -> Result<Self> {
        let m = grid.points();
        if samples.dim() != (m, m) {
            return Err(Error::GridMismatch(format!(
                "samples are {:?}, grid wants {}x{}",
                samples.dim(),
                m,
                m
            )));
        }
        let f = ScalarField {
            grid,
            domain,
            samples,
        };
        f.check_finite()?;
        Ok(f)
    }

    /// Evaluate `f(x, y)` (or `f(ξ₁, ξ₂)` in the frequency domain) at every node.
    pub fn from_fn(
        grid: Grid,
        domain: Domain,
        mut f: impl FnMut(f64, f64) -> Complex64,
    ) -> Result<Self> {
        let m = grid.points();
        let coord = |i: usize| match domain {
            Domain::Space => grid.coord(i),
            Domain::Frequency => grid.freq_coord(i),
        };
        let samples = Array2::from_shape_fn((m, m), |(i, j)| f(coord(i), coord(j)));
        Self::from_samples(grid, domain, samples)
    }

    pub fn zeros(grid: Grid, domain: Domain) -> Self {
        let m = grid.points();
        ScalarField {
            grid,
            domain,
            samples: Array2::zeros((m, m)),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn samples(&self) -> &Array2<Complex64> {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.samples
    }

    fn check_finite(&self) -> Result<()> {
        if self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("field contains a non-finite sample".into()))
        }
    }

    fn check_compatible(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        if self.domain != other.domain {
            return Err(Error::DomainMismatch(
                "fields live in different domains".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_compatible(other)?;
        Ok(ScalarField {
            grid: self.grid,
            domain: self.domain,
            samples: &self.samples + &other.samples,
        })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_compatible(other)?;
        Ok(ScalarField {
            grid: self.grid,
            domain: self.domain,
            samples: &self.samples - &other.samples,
        })
    }

    pub fn mul_pointwise(&self, other: &ScalarField) -> Result<ScalarField> {
        self.check_compatible(other)?;
        Ok(ScalarField {
            grid: self.grid,
            domain: self.domain,
            samples: &self.samples * &other.samples,
        })
    }

    pub fn scale(&self, c: Complex64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            domain: self.domain,
            samples: self.samples.mapv(|z| z * c),
        }
    }

    /// Pointwise modulus, stored as a real-valued complex field.
    pub fn abs(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            domain: self.domain,
            samples: self.samples.mapv(|z| Complex64::new(z.norm(), 0.0)),
        }
    }

    /// Samples of `f(-z)`; index 0 (coordinate `-L/2`) is its own mirror image.
    pub fn reflect(&self) -> ScalarField {
        let m = self.grid.points();
        let samples = Array2::from_shape_fn((m, m), |(i, j)| {
            self.samples[((m - i) % m, (m - j) % m)]
        });
        ScalarField {
            grid: self.grid,
            domain: self.domain,
            samples,
        }
    }

    /// `max |f|` over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// `(Δ² Σ |f|^p)^{1/p}` with the lattice measure of the field's own domain.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidParameter(format!("Lp norm needs p >= 1, got {p}")));
        }
        let step = match self.domain {
            Domain::Space => self.grid.spacing(),
            Domain::Frequency => self.grid.frequency_spacing(),
        };
        let sum: f64 = self.samples.iter().map(|z| z.norm().powf(p)).sum();
        Ok((step * step * sum).powf(1.0 / p))
    }
}

/// Norm selector for [`field_norm`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    Sup,
    Lp(f64),
}

pub fn field_norm(f: &ScalarField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Sup => Ok(f.sup_norm()),
        NormKind::Lp(p) => f.lp_norm(p),
    }
}

/// Positive heat time. `|z|²/t` must stay dimensionless, so `t` carries
/// units of area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatParam(f64);

impl HeatParam {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(HeatParam(t))
        } else {
            Err(Error::InvalidParameter(format!("heat time must be > 0, got {t}")))
        }
    }

    pub fn t(&self) -> f64 {
        self.0
    }
}

/// Declarative description of a test symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    /// g ≡ 1.
    Constant,
    /// g(z) = e^{-c|z|²}, c > 0.
    Gaussian { c: f64 },
    /// g(z) = e^{2πi z·λ} e^{-c|z|²}.
    ModulatedGaussian { lambda: [f64; 2], c: f64 },
    /// g(z) = e^{2πi z·x}, the modulation character b_x.
    PlaneWave { x: [f64; 2] },
    /// g(z) = |z|^{2m} e^{-c|z|²}.
    RadialPolynomialGaussian { m: u32, c: f64 },
    /// Samples ingested from a CSV grid file.
    GridFile { path: PathBuf },
}

impl SymbolSpec {
    pub fn validate(&self) -> Result<()> {
        let check_c = |c: f64| {
            if c.is_finite() && c > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "gaussian decay rate must be > 0, got {c}"
                )))
            }
        };
        match self {
            SymbolSpec::Constant => Ok(()),
            SymbolSpec::Gaussian { c } => check_c(*c),
            SymbolSpec::ModulatedGaussian { lambda, c } => {
                if !(lambda[0].is_finite() && lambda[1].is_finite()) {
                    return Err(Error::InvalidParameter("modulation frequency not finite".into()));
                }
                check_c(*c)
            }
            SymbolSpec::PlaneWave { x } => {
                if x[0].is_finite() && x[1].is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("plane wave frequency not finite".into()))
                }
            }
            SymbolSpec::RadialPolynomialGaussian { c, .. } => check_c(*c),
            SymbolSpec::GridFile { .. } => Ok(()),
        }
    }

    /// Pointwise evaluation; `None` for [`SymbolSpec::GridFile`], which only
    /// exists as samples.
    pub fn evaluate(&self, x: f64, y: f64) -> Option<Complex64> {
        let r2 = x * x + y * y;
        match self {
            SymbolSpec::Constant => Some(Complex64::new(1.0, 0.0)),
            SymbolSpec::Gaussian { c } => Some(Complex64::new((-c * r2).exp(), 0.0)),
            SymbolSpec::ModulatedGaussian { lambda, c } => {
                let phase = 2.0 * PI * (x * lambda[0] + y * lambda[1]);
                Some(Complex64::from_polar((-c * r2).exp(), phase))
            }
            SymbolSpec::PlaneWave { x: freq } => {
                let phase = 2.0 * PI * (x * freq[0] + y * freq[1]);
                Some(Complex64::from_polar(1.0, phase))
            }
            SymbolSpec::RadialPolynomialGaussian { m, c } => {
                Some(Complex64::new(r2.powi(*m as i32) * (-c * r2).exp(), 0.0))
            }
            SymbolSpec::GridFile { .. } => None,
        }
    }

    /// Human-readable label used in reports.
    pub fn label(&self) -> String {
        match self {
            SymbolSpec::Constant => "constant".into(),
            SymbolSpec::Gaussian { c } => format!("gaussian(c={c})"),
            SymbolSpec::ModulatedGaussian { lambda, c } => {
                format!("modulated_gaussian(lambda=({},{}), c={c})", lambda[0], lambda[1])
            }
            SymbolSpec::PlaneWave { x } => format!("plane_wave(x=({},{}))", x[0], x[1]),
            SymbolSpec::RadialPolynomialGaussian { m, c } => {
                format!("radial_polynomial_gaussian(m={m}, c={c})")
            }
            SymbolSpec::GridFile { path } => format!("grid_file({})", path.display()),
        }
    }

    /// Sample the symbol on `grid`; `GridFile` reads the CSV ingestion format
    /// of the experiment runner and requires a matching header.
    pub fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        self.validate()?;
        match self {
            SymbolSpec::GridFile { path } => crate::cli::ingest_symbol_csv(path, grid),
            _ => ScalarField::from_fn(*grid, Domain::Space, |x, y| {
                self.evaluate(x, y).expect("analytic symbol")
            }),
        }
    }
}

/// Sample a symbol specification on a grid.
pub fn sample_symbol(spec: &SymbolSpec, grid: &Grid) -> Result<ScalarField> {
    spec.sample(grid)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FourierDirection {
    Forward,
    Inverse,
}

/// Rotate both axes by half a period; for even `points` this maps the
/// DFT-natural ordering to the centered ordering and back.
fn half_shift(src: &Array2<Complex64>) -> Array2<Complex64> {
    let m = src.nrows();
    let half = m / 2;
    Array2::from_shape_fn((m, m), |(i, j)| src[((i + half) % m, (j + half) % m)])
}

fn fft2(buf: &mut Array2<Complex64>, inverse: bool) {
    let m = buf.nrows();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for mut row in buf.rows_mut() {
        fft.process_with_scratch(row.as_slice_mut().expect("contiguous row"), &mut scratch);
    }
    let mut t = Array2::from_shape_fn((m, m), |(i, j)| buf[(j, i)]);
    for mut row in t.rows_mut() {
        fft.process_with_scratch(row.as_slice_mut().expect("contiguous row"), &mut scratch);
    }
    buf.assign(&t.t());
}

/// Discrete approximation of the continuum Fourier transform with the
/// `e^{-2πi z·w}` convention.
///
/// Forward maps space → frequency with a `spacing²` factor so the output
/// approximates `∫ f(w) e^{-2πi ξ·w} dv(w)`; inverse is its exact discrete
/// inverse. Applying a direction to a field already in the target domain is
/// a misuse error.
pub fn fourier(f: &ScalarField, direction: FourierDirection) -> Result<ScalarField> {
    match (f.domain(), direction) {
        (Domain::Space, FourierDirection::Forward) => {}
        (Domain::Frequency, FourierDirection::Inverse) => {}
        (d, _) => {
            return Err(Error::DomainMismatch(format!(
                "cannot apply {direction:?} transform to a {d:?}-domain field"
            )))
        }
    }
    let grid = f.grid();
    let m = grid.points() as f64;
    let h = grid.spacing();
    let mut buf = half_shift(f.samples());
    let inverse = direction == FourierDirection::Inverse;
    fft2(&mut buf, inverse);
    let mut out = half_shift(&buf);
    let scale = if inverse { 1.0 / (h * h * m * m) } else { h * h };
    out.mapv_inplace(|z| z * scale);
    let domain = if inverse { Domain::Space } else { Domain::Frequency };
    ScalarField::from_samples(grid, domain, out)
}

/// `𝓕^{-1}` applied to a space-domain function, as a frequency field.
/// Uses `𝓕^{-1}g(ξ) = 𝓕g(-ξ)`.
pub fn inverse_spectrum(f: &ScalarField) -> Result<ScalarField> {
    Ok(fourier(f, FourierDirection::Forward)?.reflect())
}

/// `𝓕^{-1}(𝓗_t f)` in one spectral pass: `𝓕^{-1}f · a_t` pointwise. Going
/// through the heat-transformed field instead would spread round-trip noise
/// into the exponentially damped tail, which the window multipliers
/// `ψ_x a_t^{-1}` then amplify without bound; the fused product keeps the
/// damping and its inverse cancelling exactly.
pub fn heated_inverse_spectrum(f: &ScalarField, t: HeatParam) -> Result<ScalarField> {
    inverse_spectrum(f)?.mul_pointwise(&heat_multiplier(&f.grid(), t.t()))
}

/// `𝓕(𝓗_t f)` in one spectral pass: `𝓕f · a_t` pointwise.
pub fn heated_spectrum(f: &ScalarField, t: HeatParam) -> Result<ScalarField> {
    fourier(f, FourierDirection::Forward)?.mul_pointwise(&heat_multiplier(&f.grid(), t.t()))
}

/// `𝓕` applied to a frequency-domain function, as a space field.
/// Uses `𝓕S(z) = 𝓕^{-1}S(-z)`.
pub fn spectrum_to_space(s: &ScalarField) -> Result<ScalarField> {
    Ok(fourier(s, FourierDirection::Inverse)?.reflect())
}

/// Periodic FFT convolution scaled by `spacing²` to approximate
/// `∫ f(z-w) h(w) dv(w)`.
pub fn convolve(f: &ScalarField, h: &ScalarField) -> Result<ScalarField> {
    if f.domain() != Domain::Space || h.domain() != Domain::Space {
        return Err(Error::DomainMismatch("convolution needs space-domain fields".into()));
    }
    f.check_compatible(h)?;
    let ff = fourier(f, FourierDirection::Forward)?;
    let fh = fourier(h, FourierDirection::Forward)?;
    fourier(&ff.mul_pointwise(&fh)?, FourierDirection::Inverse)
}

/// Heat kernel spectrum `a_t(ξ) = e^{-π²t|ξ|²}` on the grid's frequency lattice.
pub(crate) fn heat_multiplier(grid: &Grid, t: f64) -> ScalarField {
    ScalarField::from_fn(*grid, Domain::Frequency, |u, v| {
        Complex64::new((-PI * PI * t * (u * u + v * v)).exp(), 0.0)
    })
    .expect("heat multiplier is finite")
}

/// Heat transform `𝓗_t f = f ∗ γ_t`, computed spectrally: forward transform,
/// multiply by `a_t`, inverse transform.
pub fn heat_transform(f: &ScalarField, t: HeatParam) -> Result<ScalarField> {
    if f.domain() != Domain::Space {
        return Err(Error::DomainMismatch("heat transform needs a space-domain field".into()));
    }
    let spectrum = fourier(f, FourierDirection::Forward)?;
    let damped = spectrum.mul_pointwise(&heat_multiplier(&f.grid(), t.t()))?;
    fourier(&damped, FourierDirection::Inverse)
}

/// Mixed partial `∂^a_{Re} ∂^b_{Im}` via the spectral multiplier
/// `(2πiξ₁)^a (2πiξ₂)^b`. The order cap `a + b <= 3` matches the derivative
/// range the bounds need in one complex dimension.
pub fn spectral_derivative(f: &ScalarField, a: u32, b: u32) -> Result<ScalarField> {
    if f.domain() != Domain::Space {
        return Err(Error::DomainMismatch("derivative needs a space-domain field".into()));
    }
    if a + b > 3 {
        return Err(Error::Precondition(format!(
            "derivative order a+b must be <= 3, got {a}+{b}"
        )));
    }
    if a == 0 && b == 0 {
        return Ok(f.clone());
    }
    let mut spectrum = fourier(f, FourierDirection::Forward)?;
    let grid = f.grid();
    let m = grid.points();
    for ((i, j), z) in spectrum.samples_mut().indexed_iter_mut() {
        let _ = m;
        let xi1 = Complex64::new(0.0, 2.0 * PI * grid.freq_coord(i));
        let xi2 = Complex64::new(0.0, 2.0 * PI * grid.freq_coord(j));
        *z *= xi1.powu(a) * xi2.powu(b);
    }
    fourier(&spectrum, FourierDirection::Inverse)
}

/// `b_x · (τ_y f)`: exact lattice translation by `y` followed by modulation
/// with `e^{2πi w·x}`. Either vector may be zero.
pub fn translate_modulate(f: &ScalarField, y: [f64; 2], x: [f64; 2]) -> Result<ScalarField> {
    if f.domain() != Domain::Space {
        return Err(Error::DomainMismatch("translation needs a space-domain field".into()));
    }
    let grid = f.grid();
    let h = grid.spacing();
    let m = grid.points() as i64;
    let mut shift = [0i64; 2];
    for (k, yk) in y.iter().enumerate() {
        let r = yk / h;
        let n = r.round();
        if (r - n).abs() > 1e-9 {
            return Err(Error::Precondition(format!(
                "translation component {yk} is not an integer multiple of the grid spacing {h}"
            )));
        }
        shift[k] = n as i64;
    }
    let src = f.samples();
    let samples = Array2::from_shape_fn((m as usize, m as usize), |(i, j)| {
        let si = (i as i64 - shift[0]).rem_euclid(m) as usize;
        let sj = (j as i64 - shift[1]).rem_euclid(m) as usize;
        let p1 = grid.coord(i);
        let p2 = grid.coord(j);
        let phase = 2.0 * PI * (p1 * x[0] + p2 * x[1]);
        src[(si, sj)] * Complex64::from_polar(1.0, phase)
    });
    ScalarField::from_samples(grid, Domain::Space, samples)
}

/// Heat kernel `γ_t` sampled on the grid (handy for convolution cross-checks).
pub fn heat_kernel(grid: &Grid, t: f64) -> Result<ScalarField> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(format!("heat time must be > 0, got {t}")));
    }
    ScalarField::from_fn(*grid, Domain::Space, |x, y| {
        Complex64::new((1.0 / (t * PI)) * (-(x * x + y * y) / t).exp(), 0.0)
    })
}

pub(crate) fn max_abs_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples().iter())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}
