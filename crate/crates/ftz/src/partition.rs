//! Smooth partition of unity on the frequency lattice and the band-limited
//! symbol pieces.
//!
//! The bump is a product of 1D exponential-glue steps: it is exactly 1 on
//! the closed unit half-cube `Q₀ = [-1/2, 1/2]²`, exactly 0 outside
//! `2Q₀ = (-1, 1)²`, and C^∞ in between. Translates over ℤ² are normalized
//! pointwise by the (finite, at most 9-term) sum of overlapping bumps, so
//! the windows ψ_x sum to 1 everywhere.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{
    heated_inverse_spectrum, inverse_spectrum, spectrum_to_space, Domain, Grid, HeatParam,
    ScalarField,
};

/// C^∞ monotone step: 0 for `u <= 0`, 1 for `u >= 1`,
/// `h(u)/(h(u)+h(1-u))` with `h(u) = e^{-1/u}` in between.
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / u).exp();
        let b = (-1.0 / (1.0 - u)).exp();
        a / (a + b)
    }
}

fn bump_1d(t: f64) -> f64 {
    smooth_step(2.0 * (1.0 - t.abs()))
}

/// Product bump `φ(ξ, η)`: 1 on `[-1/2, 1/2]²`, 0 outside `(-1, 1)²`.
pub fn bump(xi: f64, eta: f64) -> f64 {
    bump_1d(xi) * bump_1d(eta)
}

/// Normalized window value `ψ_x(ξ) = φ(ξ-x) / Σ_y φ(ξ-y)`; the denominator
/// runs over the lattice neighbors whose translated bumps meet `ξ` and is
/// at least 1 because the bump is 1 on the cell of the nearest lattice point.
pub fn window_value(x: [i64; 2], xi: f64, eta: f64) -> f64 {
    let num = bump(xi - x[0] as f64, eta - x[1] as f64);
    if num == 0.0 {
        return 0.0;
    }
    let mut den = 0.0;
    let (f0, f1) = (xi.floor() as i64, eta.floor() as i64);
    for y0 in (f0 - 1)..=(f0 + 2) {
        for y1 in (f1 - 1)..=(f1 + 2) {
            den += bump(xi - y0 as f64, eta - y1 as f64);
        }
    }
    num / den
}

/// A window ψ_x sampled on a grid's frequency lattice; the values vanish
/// exactly outside the support box `(x₁-1, x₁+1] × (x₂-1, x₂+1]`.
#[derive(Clone, Debug)]
pub struct PartitionWindow {
    index: [i64; 2],
    field: ScalarField,
}

impl PartitionWindow {
    pub fn index(&self) -> [i64; 2] {
        self.index
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }
}

fn check_box_coverage(x: [i64; 2], grid: &Grid) -> Result<()> {
    let half = grid.freq_half_extent();
    let reach = x.iter().map(|v| v.abs()).max().unwrap() as f64 + 1.0;
    if reach > half {
        return Err(Error::Precondition(format!(
            "frequency box |ξ|∞ <= {reach} exceeds the grid's frequency half-extent {half}"
        )));
    }
    Ok(())
}

/// Sample ψ_x on the grid's frequency lattice.
pub fn window(x: [i64; 2], grid: &Grid) -> Result<PartitionWindow> {
    check_box_coverage(x, grid)?;
    let field = ScalarField::from_fn(*grid, Domain::Frequency, |u, v| {
        Complex64::new(window_value(x, u, v), 0.0)
    })?;
    Ok(PartitionWindow { index: x, field })
}

/// `ψ_x · a_s^{-1}` on the frequency lattice, with the growing factor
/// `e^{+π²s|ξ|²}` evaluated only inside the support box and exact zero
/// outside, so the product never overflows.
pub fn frequency_multiplier(x: [i64; 2], s: f64, grid: &Grid) -> Result<ScalarField> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("multiplier time must be > 0, got {s}")));
    }
    check_box_coverage(x, grid)?;
    ScalarField::from_fn(*grid, Domain::Frequency, |u, v| {
        let psi = window_value(x, u, v);
        if psi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(psi * (PI * PI * s * (u * u + v * v)).exp(), 0.0)
        }
    })
}

/// The band-limited piece `g_x = 𝓕[ 𝓕^{-1}(𝓗_{1/(2α)}g) · ψ_x · a_{1/(2α)}^{-1} ]`,
/// whose inverse spectrum is supported in `2Q₀ + x`.
pub fn symbol_piece(g: &ScalarField, x: [i64; 2], alpha: f64) -> Result<ScalarField> {
    if g.domain() != Domain::Space {
        return Err(Error::DomainMismatch("symbol pieces need a space-domain field".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    let t = 1.0 / (2.0 * alpha);
    let spectrum = heated_inverse_spectrum(g, HeatParam::new(t)?)?;
    let mult = frequency_multiplier(x, t, &g.grid())?;
    let masked = spectrum.mul_pointwise(&mult)?;
    spectrum_to_space(&masked)
}

/// Inverse spectrum of a piece (for support checks): `𝓕^{-1}(g_x)` on the
/// frequency lattice.
pub fn piece_spectrum(gx: &ScalarField) -> Result<ScalarField> {
    inverse_spectrum(gx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{max_abs_diff, SymbolSpec};
    use approx::assert_abs_diff_eq;

    fn std_grid() -> Grid {
        Grid::new(16.0, 256).unwrap()
    }

    #[test]
    fn smooth_step_reference_values() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert_abs_diff_eq!(smooth_step(0.5), 0.5, epsilon = 1e-15);
        // symmetry s(u) + s(1-u) = 1
        for u in [0.1, 0.3, 0.7] {
            assert_abs_diff_eq!(smooth_step(u) + smooth_step(1.0 - u), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn bump_reference_values() {
        assert_eq!(bump(0.0, 0.0), 1.0);
        assert_eq!(bump(1.2, 0.0), 0.0);
        assert_abs_diff_eq!(bump(0.75, 0.0), 0.5, epsilon = 1e-15);
        assert_eq!(bump(0.25, -0.4), 1.0);
    }

    #[test]
    fn window_is_one_deep_inside_its_cell() {
        let grid = std_grid();
        let w = window([0, 0], &grid).unwrap();
        let i = grid.points() / 2; // ξ = 0
        assert_abs_diff_eq!(w.field().samples()[(i, i)].re, 1.0, epsilon = 1e-15);
        // outside the support box the samples vanish exactly
        let far = grid.points() / 2 + 40; // ξ = 2.5
        assert_eq!(w.field().samples()[(far, i)].re, 0.0);
    }

    #[test]
    fn windows_sum_to_one() {
        let grid = std_grid();
        let windows: Vec<PartitionWindow> = (-3..=3)
            .flat_map(|a| (-3..=3).map(move |b| window([a, b], &grid).unwrap()))
            .collect();
        let m = grid.points();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let (u, v) = (grid.freq_coord(i), grid.freq_coord(j));
                if u.abs() <= 2.5 && v.abs() <= 2.5 {
                    let s: f64 = windows.iter().map(|w| w.field().samples()[(i, j)].re).sum();
                    worst = worst.max((s - 1.0).abs());
                }
            }
        }
        assert!(worst <= 1e-12, "partition defect {worst}");
    }

    #[test]
    fn windows_are_translates() {
        let grid = std_grid();
        let w0 = window([0, 0], &grid).unwrap();
        let w1 = window([1, -2], &grid).unwrap();
        let shift0 = (1.0 / grid.frequency_spacing()) as usize;
        let m = grid.points();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let si = i as i64 - shift0 as i64;
                let sj = j as i64 + 2 * shift0 as i64;
                if si >= 0 && (si as usize) < m && sj >= 0 && (sj as usize) < m {
                    worst = worst.max(
                        (w1.field().samples()[(i, j)]
                            - w0.field().samples()[(si as usize, sj as usize)])
                        .norm(),
                    );
                }
            }
        }
        assert_eq!(worst, 0.0, "windows must be exact lattice translates");
    }

    #[test]
    fn window_values_stay_in_unit_interval() {
        let grid = std_grid();
        for x in [[0i64, 0i64], [2, -1]] {
            let w = window(x, &grid).unwrap();
            for z in w.field().samples().iter() {
                assert!(z.re >= 0.0 && z.re <= 1.0 + 1e-15 && z.im == 0.0);
            }
        }
    }

    #[test]
    fn multiplier_reference_values() {
        let grid = std_grid();
        let m0 = frequency_multiplier([0, 0], 0.5, &grid).unwrap();
        let mid = grid.points() / 2;
        assert_abs_diff_eq!(m0.samples()[(mid, mid)].re, 1.0, epsilon = 1e-15);
        // exact zero outside the support box
        let far = mid + 32; // ξ₁ = 2
        assert_eq!(m0.samples()[(far, mid)].re, 0.0);

        let m1 = frequency_multiplier([1, 0], 0.5, &grid).unwrap();
        let at1 = grid.points() / 2 + 16; // ξ = (1, 0)
        let want = (PI * PI * 0.5).exp(); // ψ value is 1 there
        assert_abs_diff_eq!(m1.samples()[(at1, mid)].re, want, epsilon = 1e-10 * want);
    }

    #[test]
    fn multiplier_rejects_uncovered_box() {
        let grid = Grid::new(16.0, 256).unwrap(); // frequency half-extent 8
        assert!(frequency_multiplier([8, 0], 0.5, &grid).is_err());
    }

    #[test]
    fn piece_of_constant_is_constant_or_zero() {
        let grid = std_grid();
        let one = SymbolSpec::Constant.sample(&grid).unwrap();
        let g0 = symbol_piece(&one, [0, 0], 1.0).unwrap();
        assert!(max_abs_diff(&g0, &one) <= 1e-10);
        for x in [[1i64, 0i64], [0, 1], [-2, 3]] {
            let gx = symbol_piece(&one, x, 1.0).unwrap();
            assert!(gx.sup_norm() <= 1e-10, "piece {x:?} should vanish");
        }
    }

    #[test]
    fn pieces_reconstruct_the_gaussian() {
        let grid = std_grid();
        let g = SymbolSpec::Gaussian { c: 1.0 }.sample(&grid).unwrap();
        let mut sum = ScalarField::zeros(grid, Domain::Space);
        for a in -3..=3 {
            for b in -3..=3 {
                sum = sum.add(&symbol_piece(&g, [a, b], 1.0).unwrap()).unwrap();
            }
        }
        let err = max_abs_diff(&sum, &g);
        assert!(err <= 1e-8 * g.sup_norm(), "reconstruction error {err}");
    }

    #[test]
    fn piece_spectrum_is_compactly_supported() {
        let grid = std_grid();
        let g = SymbolSpec::Gaussian { c: 1.0 }.sample(&grid).unwrap();
        let x = [1i64, -1i64];
        let gx = symbol_piece(&g, x, 1.0).unwrap();
        let spec = piece_spectrum(&gx).unwrap();
        let m = grid.points();
        let mut outside = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let (u, v) = (grid.freq_coord(i), grid.freq_coord(j));
                if (u - x[0] as f64).abs() >= 1.0 || (v - x[1] as f64).abs() >= 1.0 {
                    outside = outside.max(spec.samples()[(i, j)].norm());
                }
            }
        }
        assert!(outside <= 1e-13, "spectral leakage {outside}");
    }
}
