//! Decomposition of a Toeplitz operator into band-limited pieces.
//!
//! `decompose` builds `T_g` and every `T_{g_x}` over the lattice box
//! `|x|∞ <= R` on one shared grid-quadrature engine, so the partial-sum
//! residuals `‖T_g − Σ_{|x|∞<=r} T_{g_x}‖` track the genuine spectral tail
//! instead of mixing assembly routes. The module also measures the
//! per-piece tail weights, reproduces each piece from the weighted integral
//! of translated heat-transform Toeplitz operators, and checks the Weyl
//! conjugation identity that recentres a piece's spectrum.

use ndarray::s;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::heat_derivative_sup_sum;
use crate::error::{Error, Result};
use crate::field::{
    heat_transform, heated_inverse_spectrum, heated_spectrum, spectrum_to_space, Domain, Grid,
    HeatParam, ScalarField, SymbolSpec,
};
use crate::fock::{
    displacement_matrix, operator_norm, operator_norm_view, FockBasis, OperatorMatrix,
    QuadratureEngine, QuadratureSpec,
};
use crate::partition::frequency_multiplier;

/// Per-piece measurements recorded by [`decompose`].
#[derive(Clone, Debug, Serialize)]
pub struct PieceRecord {
    pub index: [i64; 2],
    pub sup_abs: f64,
    pub op_norm: f64,
    pub tail_weight: f64,
}

/// Everything [`decompose`] measures: the pieces, the operator-norm
/// residuals of the partial sums ordered by increasing `|x|∞`, and the
/// field-level reconstruction residual.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionReport {
    pub alpha: f64,
    pub dimension: usize,
    pub radius: u32,
    pub pieces: Vec<PieceRecord>,
    /// `‖T_g − Σ_{|x|∞<=r} T_{g_x}‖` for `r = 0..=radius`.
    pub residuals: Vec<f64>,
    /// `sup |g − Σ g_x|` over the grid.
    pub field_residual: f64,
}

/// Lattice points of the box `|x|∞ <= radius`, ordered by increasing
/// `|x|∞` with lexicographic ties, so partial sums are deterministic.
pub(crate) fn lattice_box(radius: u32) -> Vec<[i64; 2]> {
    let r = radius as i64;
    let mut pts: Vec<[i64; 2]> = (-r..=r)
        .flat_map(|a| (-r..=r).map(move |b| [a, b]))
        .collect();
    pts.sort_by_key(|p| (p[0].abs().max(p[1].abs()), p[0], p[1]));
    pts
}

fn tail_denominator(x: [i64; 2]) -> f64 {
    let s = 1.0 + x[0].abs() as f64 + x[1].abs() as f64;
    s * s * s
}

/// Decompose `T_g` into `{T_{g_x}}` over `|x|∞ <= radius` and measure the
/// partial-sum residuals and tail weights.
pub fn decompose(
    spec: &SymbolSpec,
    alpha: f64,
    radius: u32,
    basis: &FockBasis,
    grid: &Grid,
) -> Result<DecompositionReport> {
    if grid.freq_half_extent() < radius as f64 + 1.0 {
        return Err(Error::Precondition(format!(
            "grid frequency half-extent {} does not cover |ξ|∞ <= {}",
            grid.freq_half_extent(),
            radius + 1
        )));
    }
    let g = spec.sample(grid)?;
    let engine = QuadratureEngine::new(basis, &QuadratureSpec::Grid(*grid))?;
    let t_g = engine.assemble_field(&g)?;

    let numerator = heat_derivative_sup_sum(&g, alpha)?;
    let order = lattice_box(radius);

    let pieces: Vec<(ScalarField, OperatorMatrix)> = order
        .par_iter()
        .map(|&x| {
            let gx = crate::partition::symbol_piece(&g, x, alpha)?;
            let t = engine.assemble_field(&gx)?;
            Ok((gx, t))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(order.len());
    let mut residuals = Vec::with_capacity(radius as usize + 1);
    let mut partial = OperatorMatrix::zeros(*basis);
    let mut field_sum = ScalarField::zeros(*grid, Domain::Space);
    let mut cursor = 0usize;
    for r in 0..=radius {
        while cursor < order.len() {
            let x = order[cursor];
            if x[0].abs().max(x[1].abs()) > r as i64 {
                break;
            }
            let (gx, t) = &pieces[cursor];
            partial.axpy(Complex64::new(1.0, 0.0), t)?;
            field_sum = field_sum.add(gx)?;
            records.push(PieceRecord {
                index: x,
                sup_abs: gx.sup_norm(),
                op_norm: operator_norm(t),
                tail_weight: numerator / tail_denominator(x),
            });
            cursor += 1;
        }
        residuals.push(operator_norm(&t_g.sub(&partial)?));
    }
    let field_residual = crate::field::max_abs_diff(&g, &field_sum);

    Ok(DecompositionReport {
        alpha,
        dimension: basis.dimension(),
        radius,
        pieces: records,
        residuals,
        field_residual,
    })
}

/// The constant-free right-hand side of the piece-norm tail bound:
/// `Σ_{a+b<=3} ‖𝓗_{2/α}(|J^{a,b}g|)‖_∞ / (1 + |x₁| + |x₂|)³`.
pub fn piece_tail_estimate(
    spec: &SymbolSpec,
    x: [i64; 2],
    alpha: f64,
    grid: &Grid,
) -> Result<f64> {
    let g = spec.sample(grid)?;
    Ok(heat_derivative_sup_sum(&g, alpha)? / tail_denominator(x))
}

/// Reproduce `T_{g_x}` as the trapezoidal quadrature of
/// `𝓕(ψ_x a_{1/(2α)+t}^{-1})(y) · T_{τ_y 𝓗_{1/(2α)+t} g}` over the box
/// `|y|∞ <= quad_radius`, every translated-symbol Toeplitz matrix built by
/// Gauss–Hermite quadrature with exact trigonometric evaluation of the
/// band-limited translate at the nodes.
#[allow(clippy::too_many_arguments)]
pub fn integral_representation(
    spec: &SymbolSpec,
    x: [i64; 2],
    t: f64,
    alpha: f64,
    basis: &FockBasis,
    grid: &Grid,
    quad_radius: f64,
    quad_step: f64,
) -> Result<OperatorMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("representation time must be >= 0, got {t}")));
    }
    if !(quad_radius > 0.0 && quad_step > 0.0) {
        return Err(Error::InvalidParameter("quadrature box and step must be positive".into()));
    }
    let h = grid.spacing();
    let step_ratio = quad_step / h;
    if (step_ratio - step_ratio.round()).abs() > 1e-9 || step_ratio.round() < 1.0 {
        return Err(Error::Precondition(format!(
            "quad_step {quad_step} must be an integer multiple of the grid spacing {h}"
        )));
    }
    let s = 1.0 / (2.0 * alpha) + t;
    let g = spec.sample(grid)?;

    // weight field W(y) = 𝓕(ψ_x a_s^{-1})(y)
    let mult = frequency_multiplier(x, s, grid)?;
    let weight = spectrum_to_space(&mult)?;

    // Schwartz decay check: |W| mass outside the quadrature box
    let m = grid.points();
    let mut total = 0.0f64;
    let mut inside = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let v = weight.samples()[(i, j)].norm() * h * h;
            total += v;
            if grid.coord(i).abs() <= quad_radius + 1e-12 && grid.coord(j).abs() <= quad_radius + 1e-12 {
                inside += v;
            }
        }
    }
    if total - inside > 1e-6 * total.max(1.0) {
        return Err(Error::Numerical(format!(
            "weight mass {:.3e} outside the |y|∞ <= {quad_radius} box fails the Schwartz decay check",
            total - inside
        )));
    }

    // Gauss–Hermite engine plus trigonometric evaluation tables for the
    // band-limited heat transform: H(z - y) = Σ_k Ĥ[k] e^{2πi (z-y)·ξ_k} / L².
    let engine = QuadratureEngine::new(basis, &QuadratureSpec::default_for(basis))?;
    let spectrum = heated_spectrum(&g, HeatParam::new(s)?)?;
    let peak = spectrum.sup_norm();
    let (mut i_lo, mut i_hi, mut j_lo, mut j_hi) = (m, 0usize, m, 0usize);
    for ((i, j), z) in spectrum.samples().indexed_iter() {
        if z.norm() > 1e-18 * peak {
            i_lo = i_lo.min(i);
            i_hi = i_hi.max(i);
            j_lo = j_lo.min(j);
            j_hi = j_hi.max(j);
        }
    }
    if i_lo > i_hi {
        return Ok(OperatorMatrix::zeros(*basis));
    }
    let k1: Vec<f64> = (i_lo..=i_hi).map(|i| grid.freq_coord(i)).collect();
    let k2: Vec<f64> = (j_lo..=j_hi).map(|j| grid.freq_coord(j)).collect();
    let cropped = spectrum.samples().slice(s![i_lo..=i_hi, j_lo..=j_hi]).to_owned();

    // distinct node coordinates per axis (tensor Gauss–Hermite layout)
    let nodes = engine.nodes();
    let q = (nodes.len() as f64).sqrt().round() as usize;
    let u: Vec<f64> = (0..q).map(|i| nodes[i * q].0).collect();
    let v: Vec<f64> = (0..q).map(|j| nodes[j].1).collect();
    let tau = 2.0 * std::f64::consts::PI;
    let inv_area = 1.0 / (grid.extent() * grid.extent());
    let e1 = ndarray::Array2::from_shape_fn((q, k1.len()), |(i, a)| {
        Complex64::from_polar(1.0, tau * u[i] * k1[a])
    });
    let e2 = ndarray::Array2::from_shape_fn((q, k2.len()), |(j, b)| {
        Complex64::from_polar(1.0, tau * v[j] * k2[b])
    });

    let steps = (quad_radius / quad_step).floor() as i64;
    let lattice: Vec<(f64, f64)> = (-steps..=steps)
        .flat_map(|a| (-steps..=steps).map(move |b| (a as f64 * quad_step, b as f64 * quad_step)))
        .collect();

    let cell = quad_step * quad_step;
    let terms: Vec<OperatorMatrix> = lattice
        .par_iter()
        .map(|&(y1, y2)| {
            let wi = grid.index_of(y1).expect("lattice-aligned quadrature node");
            let wj = grid.index_of(y2).expect("lattice-aligned quadrature node");
            let coeff = weight.samples()[(wi, wj)] * cell;
            if coeff.norm() < 1e-300 {
                return Ok(OperatorMatrix::zeros(*basis));
            }
            // phase-shift the spectrum by e^{-2πi y·ξ} and evaluate at nodes
            let mut shifted = cropped.clone();
            for ((a, b), z) in shifted.indexed_iter_mut() {
                *z *= Complex64::from_polar(1.0, -tau * (y1 * k1[a] + y2 * k2[b]));
            }
            let g1 = e1.dot(&shifted); // (q × k2)
            let vals_mat = g1.dot(&e2.t()); // (q × q)
            let mut values = Vec::with_capacity(q * q);
            for i in 0..q {
                for j in 0..q {
                    values.push(vals_mat[(i, j)] * inv_area);
                }
            }
            let t_y = engine.assemble_values(&values)?;
            Ok(t_y.scale(coeff))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut acc = OperatorMatrix::zeros(*basis);
    for term in &terms {
        acc.axpy(Complex64::new(1.0, 0.0), term)?;
    }
    Ok(acc)
}

/// Operator-norm residual (restricted to the leading N/2 block) of the Weyl
/// conjugation identity
/// `W_{-iπx/(2α)} T_{g_x} W_{-iπx/(2α)} = T_{(b_x 𝓗_{1/(2α)}g) ∗ 𝓕[a_{1/(2α)}^{-1} ψ₀]}`.
pub fn weyl_conjugation_residual(
    spec: &SymbolSpec,
    x: [i64; 2],
    alpha: f64,
    basis: &FockBasis,
    grid: &Grid,
) -> Result<f64> {
    let g = spec.sample(grid)?;
    let engine = QuadratureEngine::new(basis, &QuadratureSpec::Grid(*grid))?;

    let gx = crate::partition::symbol_piece(&g, x, alpha)?;
    let t_gx = engine.assemble_field(&gx)?;

    // z = -iπ(x₁ + ix₂)/(2α)
    let z = Complex64::new(0.0, -1.0) * Complex64::new(x[0] as f64, x[1] as f64)
        * (std::f64::consts::PI / (2.0 * alpha));
    let w = displacement_matrix(z, basis)?;
    let lhs = w.multiply(&t_gx)?.multiply(&w)?;

    // RHS symbol spectrally: 𝓕^{-1}(b_x · 𝓗g)(ξ) = 𝓕^{-1}(𝓗g)(ξ + x),
    // i.e. the heat-transform spectrum recentred by the lattice shift -x,
    // then windowed at the origin.
    let t_half = 1.0 / (2.0 * alpha);
    let spectrum = heated_inverse_spectrum(&g, HeatParam::new(t_half)?)?;
    let bins_per_unit = 1.0 / grid.frequency_spacing();
    if (bins_per_unit - bins_per_unit.round()).abs() > 1e-9 {
        return Err(Error::Precondition(
            "frequency lattice does not contain the integer shift x".into(),
        ));
    }
    let shift = [
        -(x[0] as f64) * bins_per_unit.round(),
        -(x[1] as f64) * bins_per_unit.round(),
    ];
    let shifted = shift_frequency_samples(&spectrum, [shift[0] as i64, shift[1] as i64])?;
    let mult0 = frequency_multiplier([0, 0], t_half, grid)?;
    let masked = shifted.mul_pointwise(&mult0)?;
    let sigma = spectrum_to_space(&masked)?;
    let rhs = engine.assemble_field(&sigma)?;

    let diff = lhs.sub(&rhs)?;
    let half = basis.dimension() / 2;
    Ok(operator_norm_view(diff.entries().slice(s![..half, ..half])))
}

/// Cyclic shift of a frequency field by whole bins: output(ξ) = input(ξ + k·Δξ).
fn shift_frequency_samples(f: &ScalarField, bins: [i64; 2]) -> Result<ScalarField> {
    if f.domain() != Domain::Frequency {
        return Err(Error::DomainMismatch("bin shift needs a frequency field".into()));
    }
    let m = f.grid().points() as i64;
    let src = f.samples();
    let samples = ndarray::Array2::from_shape_fn((m as usize, m as usize), |(i, j)| {
        let si = (i as i64 - bins[0]).rem_euclid(m) as usize;
        let sj = (j as i64 - bins[1]).rem_euclid(m) as usize;
        src[(si, sj)]
    });
    ScalarField::from_samples(f.grid(), Domain::Frequency, samples)
}

/// Berezin-level decomposition defect: `max_z |𝓗_{1/α}g(z) − Σ_x 𝓗_{1/α}g_x(z)|`
/// over the sample set `|z| <= 2`, step 1/2.
pub fn berezin_level_residual(
    spec: &SymbolSpec,
    alpha: f64,
    radius: u32,
    grid: &Grid,
) -> Result<f64> {
    let g = spec.sample(grid)?;
    let t = HeatParam::new(1.0 / alpha)?;
    let hg = heat_transform(&g, t)?;
    let mut sum = ScalarField::zeros(*grid, Domain::Space);
    for x in lattice_box(radius) {
        let gx = crate::partition::symbol_piece(&g, x, alpha)?;
        sum = sum.add(&heat_transform(&gx, t)?)?;
    }
    let mut worst = 0.0f64;
    for i in -4i32..=4 {
        for j in -4i32..=4 {
            let (zx, zy) = (i as f64 * 0.5, j as f64 * 0.5);
            if zx * zx + zy * zy > 4.0 + 1e-12 {
                continue;
            }
            let gi = grid.index_of(zx).expect("sample point on lattice");
            let gj = grid.index_of(zy).expect("sample point on lattice");
            worst = worst.max((hg.samples()[(gi, gj)] - sum.samples()[(gi, gj)]).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn std_grid() -> Grid {
        Grid::new(16.0, 256).unwrap()
    }

    #[test]
    fn lattice_box_order_is_by_shells() {
        let pts = lattice_box(1);
        assert_eq!(pts[0], [0, 0]);
        assert_eq!(pts.len(), 9);
        assert!(pts[1..].iter().all(|p| p[0].abs().max(p[1].abs()) == 1));
    }

    #[test]
    fn decompose_constant_has_single_piece() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 16).unwrap();
        let rep = decompose(&SymbolSpec::Constant, 1.0, 1, &basis, &grid).unwrap();
        assert!(rep.residuals[0] <= 1e-8, "residual {}", rep.residuals[0]);
        assert!(rep.pieces[0].sup_abs > 0.99);
        for p in &rep.pieces[1..] {
            assert!(p.sup_abs <= 1e-10 && p.op_norm <= 1e-10);
        }
    }

    #[test]
    fn decompose_gaussian_residuals_decrease() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 30).unwrap();
        let rep = decompose(&SymbolSpec::Gaussian { c: 1.0 }, 1.0, 3, &basis, &grid).unwrap();
        assert!(rep.residuals.windows(2).all(|w| w[1] <= w[0]), "{:?}", rep.residuals);
        assert!(rep.residuals[3] <= 1e-3, "final residual {}", rep.residuals[3]);
        assert!(rep.field_residual <= 1e-8);
        assert!(rep.pieces.iter().all(|p| p.tail_weight > 0.0));
    }

    #[test]
    fn decompose_plane_wave_dominant_piece() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 20).unwrap();
        let rep = decompose(&SymbolSpec::PlaneWave { x: [2.0, 0.0] }, 1.0, 3, &basis, &grid).unwrap();
        let best = rep.pieces.iter().max_by(|a, b| a.sup_abs.total_cmp(&b.sup_abs)).unwrap();
        assert_eq!(best.index, [2, 0]);
        for p in &rep.pieces {
            let d = (p.index[0] - 2).abs().max(p.index[1].abs());
            if d >= 2 {
                assert!(p.sup_abs <= 1e-8, "piece {:?} sup {}", p.index, p.sup_abs);
            }
        }
    }

    #[test]
    fn tail_estimate_reference_values() {
        let grid = std_grid();
        let t0 = piece_tail_estimate(&SymbolSpec::Constant, [0, 0], 1.0, &grid).unwrap();
        assert_abs_diff_eq!(t0, 1.0, epsilon = 1e-9);
        let t11 = piece_tail_estimate(&SymbolSpec::Constant, [1, 1], 1.0, &grid).unwrap();
        assert_abs_diff_eq!(t11, 1.0 / 27.0, epsilon = 1e-9);
    }

    #[test]
    fn tail_estimate_dominates_measured_norms() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 24).unwrap();
        let rep = decompose(&SymbolSpec::Gaussian { c: 1.0 }, 1.0, 3, &basis, &grid).unwrap();
        let calib = rep.pieces[0].op_norm / rep.pieces[0].tail_weight;
        for p in &rep.pieces {
            assert!(
                p.op_norm <= 10.0 * calib * p.tail_weight + 1e-12,
                "piece {:?}: {} vs {}",
                p.index,
                p.op_norm,
                10.0 * calib * p.tail_weight
            );
        }
    }

    #[test]
    fn integral_representation_of_constant_is_identity() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 12).unwrap();
        let m = integral_representation(&SymbolSpec::Constant, [0, 0], 0.0, 1.0, &basis, &grid, 4.0, 0.25)
            .unwrap();
        let diff = m.sub(&OperatorMatrix::identity(basis)).unwrap();
        assert!(operator_norm(&diff) <= 1e-6, "defect {}", operator_norm(&diff));
    }

    #[test]
    fn integral_representation_matches_piece() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 20).unwrap();
        let spec = SymbolSpec::Gaussian { c: 1.0 };
        let engine = QuadratureEngine::new(&basis, &QuadratureSpec::Grid(grid)).unwrap();
        let g = spec.sample(&grid).unwrap();
        let g0 = crate::partition::symbol_piece(&g, [0, 0], 1.0).unwrap();
        let t_direct = engine.assemble_field(&g0).unwrap();
        for t in [0.0, 0.5] {
            let m = integral_representation(&spec, [0, 0], t, 1.0, &basis, &grid, 4.0, 0.25).unwrap();
            let defect = operator_norm(&m.sub(&t_direct).unwrap());
            assert!(defect <= 2e-3, "t = {t}: defect {defect}");
        }
    }

    #[test]
    fn integral_representation_rejects_off_lattice_step() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 10).unwrap();
        let r = integral_representation(&SymbolSpec::Constant, [0, 0], 0.0, 1.0, &basis, &grid, 4.0, 0.1);
        assert!(r.is_err());
    }

    #[test]
    fn weyl_residual_vanishes_at_origin() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 24).unwrap();
        let r = weyl_conjugation_residual(&SymbolSpec::Gaussian { c: 1.0 }, [0, 0], 1.0, &basis, &grid)
            .unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }

    #[test]
    fn weyl_residual_small_for_neighbors() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 50).unwrap();
        let r = weyl_conjugation_residual(&SymbolSpec::Gaussian { c: 1.0 }, [1, 0], 1.0, &basis, &grid)
            .unwrap();
        assert!(r <= 1e-4, "residual {r}");
    }

    #[test]
    fn weyl_residual_symmetric_under_quarter_rotation() {
        let grid = std_grid();
        let basis = FockBasis::new(1.0, 40).unwrap();
        let spec = SymbolSpec::Gaussian { c: 1.0 };
        let r10 = weyl_conjugation_residual(&spec, [1, 0], 1.0, &basis, &grid).unwrap();
        let r01 = weyl_conjugation_residual(&spec, [0, 1], 1.0, &basis, &grid).unwrap();
        let (lo, hi) = (r10.min(r01), r10.max(r01));
        assert!(hi <= 2.0 * lo.max(1e-12), "r10 = {r10}, r01 = {r01}");
    }

    #[test]
    fn berezin_level_decomposition_holds() {
        let grid = std_grid();
        let r = berezin_level_residual(&SymbolSpec::Gaussian { c: 1.0 }, 1.0, 3, &grid).unwrap();
        assert!(r <= 1e-6, "berezin-level residual {r}");
    }
}
