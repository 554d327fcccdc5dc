//! Configuration-driven experiment runner.
//!
//! One JSON config file describes the whole experiment (grid, basis, symbol,
//! lattice radius, heat time, Schatten exponents, quadrature, tolerance
//! overrides); each subcommand wires the library modules into a named
//! pipeline, writes a JSON report with every computed quantity and a
//! pass/fail record per assertion, and emits CSV tables for plotting.
//! Reports are deterministic byte-for-byte at a fixed thread count: maps are
//! ordered, floats print in shortest round-trip form, and all parallel
//! reductions run in a fixed order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bounds::{
    bound_chain_report, carleson, kernel_schatten_bound, main_bound, product_schatten_bound,
    schatten_symbol_bound, schur_bound, CarlesonMode, SchattenVariant,
};
use crate::decomp::{berezin_level_residual, decompose, piece_tail_estimate};
use crate::error::{Error, Result};
use crate::field::{
    convolve, fourier, heat_kernel, heat_transform, sample_symbol, spectral_derivative,
    translate_modulate, Domain, FourierDirection, Grid, HeatParam, ScalarField, SymbolSpec,
};
use crate::fock::{
    berezin, displacement_matrix, kernel_coefficients, operator_norm, schatten_norm,
    toeplitz_matrix, FockBasis, OperatorMatrix, QuadratureSpec, SymbolSource,
};
use crate::partition::{bump, frequency_multiplier, smooth_step, symbol_piece, window};

fn default_alpha() -> f64 {
    1.0
}

fn default_radius() -> u32 {
    3
}

fn default_heat_t() -> f64 {
    0.5
}

fn default_p_list() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub extent: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { extent: 16.0, points: 256 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub dimension: usize,
}

impl Default for BasisConfig {
    fn default() -> Self {
        BasisConfig { dimension: 40 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuadratureConfig {
    GaussHermite { order: Option<usize> },
    Grid {},
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig::GaussHermite { order: None }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Override for the cached-matrix filename written by `toeplitz`.
    pub matrix: Option<String>,
}

/// Everything one experiment needs; unknown keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub basis: BasisConfig,
    pub symbol: SymbolSpec,
    #[serde(default = "default_radius")]
    pub lattice_radius: u32,
    #[serde(default = "default_heat_t")]
    pub heat_t: f64,
    #[serde(default = "default_p_list")]
    pub schatten_p: Vec<f64>,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("cannot parse {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be > 0, got {}", self.alpha)));
        }
        Grid::new(self.grid.extent, self.grid.points).map_err(|e| Error::Config(e.to_string()))?;
        FockBasis::new(self.alpha, self.basis.dimension)
            .map_err(|e| Error::Config(e.to_string()))?;
        self.symbol.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(self.heat_t.is_finite() && self.heat_t > 0.0) {
            return Err(Error::Config(format!("heat_t must be > 0, got {}", self.heat_t)));
        }
        for &p in &self.schatten_p {
            if p.is_nan() || p < 1.0 {
                return Err(Error::Config(format!("schatten_p entries must be >= 1, got {p}")));
            }
        }
        if let QuadratureConfig::GaussHermite { order: Some(q) } = self.quadrature {
            if q < 2 * self.basis.dimension {
                return Err(Error::Config(format!(
                    "quadrature order {q} below 2N = {}",
                    2 * self.basis.dimension
                )));
            }
        }
        Ok(())
    }

    pub fn grid_obj(&self) -> Grid {
        Grid::new(self.grid.extent, self.grid.points).expect("validated")
    }

    pub fn basis_obj(&self) -> FockBasis {
        FockBasis::new(self.alpha, self.basis.dimension).expect("validated")
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        match self.quadrature {
            QuadratureConfig::GaussHermite { order: Some(q) } => {
                QuadratureSpec::GaussHermite { order: q }
            }
            QuadratureConfig::GaussHermite { order: None } => {
                QuadratureSpec::default_for(&self.basis_obj())
            }
            QuadratureConfig::Grid {} => QuadratureSpec::Grid(self.grid_obj()),
        }
    }

    fn tol(&self, name: &str, default: f64) -> f64 {
        self.tolerances.get(name).copied().unwrap_or(default)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CommandKind {
    Transform,
    Toeplitz,
    Decompose,
    Bounds,
    Schatten,
    Carleson,
    Selftest,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Transform => "transform",
            CommandKind::Toeplitz => "toeplitz",
            CommandKind::Decompose => "decompose",
            CommandKind::Bounds => "bounds",
            CommandKind::Schatten => "schatten",
            CommandKind::Carleson => "carleson",
            CommandKind::Selftest => "selftest",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct Assertion {
    name: String,
    anchor: String,
    value: f64,
    threshold: f64,
    comparison: String,
    pass: bool,
}

struct ReportBuilder {
    command: String,
    config: serde_json::Value,
    results: serde_json::Map<String, serde_json::Value>,
    assertions: Vec<Assertion>,
    tables: Vec<(String, Vec<String>, Vec<Vec<String>>)>,
}

impl ReportBuilder {
    fn new(command: CommandKind, config: &ExperimentConfig) -> Self {
        ReportBuilder {
            command: command.name().to_string(),
            config: serde_json::to_value(config).expect("config serializes"),
            results: serde_json::Map::new(),
            assertions: Vec::new(),
            tables: Vec::new(),
        }
    }

    fn result(&mut self, key: &str, value: serde_json::Value) {
        self.results.insert(key.to_string(), value);
    }

    fn assert_le(&mut self, name: &str, anchor: &str, value: f64, threshold: f64) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value,
            threshold,
            comparison: "le".to_string(),
            pass: value <= threshold,
        });
    }

    fn assert_ge(&mut self, name: &str, anchor: &str, value: f64, threshold: f64) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value,
            threshold,
            comparison: "ge".to_string(),
            pass: value >= threshold,
        });
    }

    fn assert_true(&mut self, name: &str, anchor: &str, pass: bool) {
        self.assertions.push(Assertion {
            name: name.to_string(),
            anchor: anchor.to_string(),
            value: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
            comparison: "ge".to_string(),
            pass,
        });
    }

    fn table(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) {
        self.tables.push((
            name.to_string(),
            header.iter().map(|s| s.to_string()).collect(),
            rows,
        ));
    }

    fn finish(self, out_dir: &Path) -> Result<RunOutcome> {
        std::fs::create_dir_all(out_dir)?;
        let pass = self.assertions.iter().all(|a| a.pass);
        let report = json!({
            "command": self.command,
            "config": self.config,
            "results": serde_json::Value::Object(self.results),
            "assertions": self.assertions,
            "pass": pass,
        });
        let report_path = out_dir.join(format!("{}_report.json", self.command));
        let mut file = std::fs::File::create(&report_path)?;
        file.write_all(serde_json::to_string_pretty(&report)?.as_bytes())?;
        file.write_all(b"\n")?;
        for (name, header, rows) in &self.tables {
            let path = out_dir.join(format!("{}_{}.csv", self.command, name));
            let mut f = std::fs::File::create(&path)?;
            writeln!(f, "{}", header.join(","))?;
            for row in rows {
                writeln!(f, "{}", row.join(","))?;
            }
        }
        Ok(RunOutcome { pass, report_path })
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub pass: bool,
    pub report_path: PathBuf,
}

/// Run one experiment; writes the JSON report and CSV tables into `out_dir`
/// and returns whether every enabled assertion passed.
pub fn run(command: CommandKind, config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    match command {
        CommandKind::Transform => run_transform(config, out_dir),
        CommandKind::Toeplitz => run_toeplitz(config, out_dir),
        CommandKind::Decompose => run_decompose(config, out_dir),
        CommandKind::Bounds => run_bounds(config, out_dir),
        CommandKind::Schatten => run_schatten(config, out_dir),
        CommandKind::Carleson => run_carleson(config, out_dir),
        CommandKind::Selftest => run_selftest(config, out_dir),
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn run_transform(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let grid = config.grid_obj();
    let g = sample_symbol(&config.symbol, &grid)?;
    let mut rb = ReportBuilder::new(CommandKind::Transform, config);

    let back = fourier(&fourier(&g, FourierDirection::Forward)?, FourierDirection::Inverse)?;
    let roundtrip = crate::field::max_abs_diff(&g, &back) / g.sup_norm().max(1e-300);
    rb.result("fourier_round_trip_rel_error", json!(roundtrip));
    rb.assert_le(
        "fourier_round_trip",
        "fourier_inversion",
        roundtrip,
        config.tol("fourier_round_trip", 1e-12),
    );

    let t = config.heat_t;
    let half = HeatParam::new(0.5 * t)?;
    let twice = heat_transform(&heat_transform(&g, half)?, half)?;
    let once = heat_transform(&g, HeatParam::new(t)?)?;
    let semigroup = crate::field::max_abs_diff(&twice, &once);
    rb.result("heat_semigroup_sup_error", json!(semigroup));
    rb.assert_le(
        "heat_semigroup",
        "heat_semigroup",
        semigroup,
        config.tol("heat_semigroup", 1e-9) * g.sup_norm(),
    );

    let spectral = heat_transform(&g, HeatParam::new(t)?)?;
    let direct = convolve(&g, &heat_kernel(&grid, t)?)?;
    let agree = crate::field::max_abs_diff(&spectral, &direct);
    rb.result("heat_vs_convolution_sup_error", json!(agree));
    rb.assert_le(
        "heat_vs_convolution",
        "heat_kernel_convolution",
        agree,
        config.tol("heat_vs_convolution", 1e-8),
    );

    let spec = fourier(&g, FourierDirection::Forward)?;
    let e_space = g.lp_norm(2.0)?.powi(2);
    let e_freq = spec.lp_norm(2.0)?.powi(2);
    let parseval = (e_space - e_freq).abs() / e_space.max(1e-300);
    rb.result("parseval_rel_error", json!(parseval));
    rb.assert_le("parseval", "plancherel_identity", parseval, config.tol("parseval", 1e-10));

    rb.table(
        "checks",
        &["check", "value"],
        vec![
            vec!["fourier_round_trip_rel_error".into(), fmt(roundtrip)],
            vec!["heat_semigroup_sup_error".into(), fmt(semigroup)],
            vec!["heat_vs_convolution_sup_error".into(), fmt(agree)],
            vec!["parseval_rel_error".into(), fmt(parseval)],
        ],
    );
    rb.finish(out_dir)
}

fn run_toeplitz(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let grid = config.grid_obj();
    let basis = config.basis_obj();
    let quad = config.quadrature_spec();
    let mut rb = ReportBuilder::new(CommandKind::Toeplitz, config);

    let t = toeplitz_matrix(SymbolSource::Spec(&config.symbol), &basis, &quad)?;
    let norm = operator_norm(&t);
    rb.result("operator_norm", json!(norm));

    // Berezin identity against the heat transform on a centered sample set,
    // clipped to the kernel truncation budget.
    let g = sample_symbol(&config.symbol, &grid)?;
    let hg = heat_transform(&g, HeatParam::new(1.0 / config.alpha)?)?;
    let radius = 2.0f64.min((0.45 * basis.dimension() as f64 / config.alpha).sqrt());
    let mut worst = 0.0f64;
    for i in -4i32..=4 {
        for j in -4i32..=4 {
            let z = Complex64::new(i as f64 * 0.5, j as f64 * 0.5);
            if z.norm() > radius {
                continue;
            }
            let (Some(gi), Some(gj)) = (grid.index_of(z.re), grid.index_of(z.im)) else {
                continue;
            };
            let lhs = berezin(&t, z, None)?;
            worst = worst.max((lhs - hg.samples()[(gi, gj)]).norm());
        }
    }
    rb.result("berezin_identity_max_error", json!(worst));
    rb.assert_le(
        "berezin_identity",
        "berezin_heat_identity",
        worst,
        config.tol("berezin_identity", 1e-5),
    );

    if config.symbol == SymbolSpec::Constant {
        let defect = operator_norm(&t.sub(&OperatorMatrix::identity(basis))?);
        rb.result("unit_symbol_defect", json!(defect));
        rb.assert_le("unit_symbol_identity", "unit_symbol_identity", defect, 1e-12);
    }

    let matrix_name = config
        .output
        .matrix
        .clone()
        .unwrap_or_else(|| "toeplitz.ftlz".to_string());
    std::fs::create_dir_all(out_dir)?;
    save_matrix(&t, &out_dir.join(&matrix_name))?;
    rb.result("matrix_file", json!(matrix_name));

    rb.table(
        "summary",
        &["quantity", "value"],
        vec![
            vec!["operator_norm".into(), fmt(norm)],
            vec!["berezin_identity_max_error".into(), fmt(worst)],
        ],
    );
    rb.finish(out_dir)
}

fn run_decompose(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let grid = config.grid_obj();
    let basis = config.basis_obj();
    let mut rb = ReportBuilder::new(CommandKind::Decompose, config);

    let rep = decompose(&config.symbol, config.alpha, config.lattice_radius, &basis, &grid)?;
    rb.result("residuals", json!(rep.residuals));
    rb.result("field_residual", json!(rep.field_residual));

    let last = *rep.residuals.last().expect("at least one residual");
    rb.assert_le(
        "decomposition_residual",
        "toeplitz_decomposition",
        last,
        config.tol("decomposition_residual", 1e-3),
    );
    let monotone = rep.residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    rb.assert_true("residual_monotonicity", "partial_sum_convergence", monotone);

    let calib = rep.pieces[0].op_norm / rep.pieces[0].tail_weight;
    let mut tail_ok = true;
    for p in &rep.pieces {
        if p.op_norm > 10.0 * calib * p.tail_weight + 1e-12 {
            tail_ok = false;
        }
    }
    rb.assert_true("piece_tail_bound", "piece_norm_tail_estimate", tail_ok);

    let blr = berezin_level_residual(&config.symbol, config.alpha, config.lattice_radius, &grid)?;
    rb.result("berezin_level_residual", json!(blr));
    rb.assert_le(
        "berezin_level_decomposition",
        "berezin_level_decomposition",
        blr,
        config.tol("berezin_level_decomposition", 1e-6),
    );

    rb.table(
        "residuals",
        &["r", "residual"],
        rep.residuals
            .iter()
            .enumerate()
            .map(|(r, v)| vec![r.to_string(), fmt(*v)])
            .collect(),
    );
    rb.table(
        "pieces",
        &["x1", "x2", "sup_abs", "op_norm", "tail_weight"],
        rep.pieces
            .iter()
            .map(|p| {
                vec![
                    p.index[0].to_string(),
                    p.index[1].to_string(),
                    fmt(p.sup_abs),
                    fmt(p.op_norm),
                    fmt(p.tail_weight),
                ]
            })
            .collect(),
    );
    rb.finish(out_dir)
}

fn run_bounds(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let grid = config.grid_obj();
    let basis = config.basis_obj();
    let quad = config.quadrature_spec();
    let alpha = config.alpha;
    let mut rb = ReportBuilder::new(CommandKind::Bounds, config);

    let t = toeplitz_matrix(SymbolSource::Spec(&config.symbol), &basis, &quad)?;
    let measured = operator_norm(&t);
    let schur = schur_bound(&config.symbol, alpha, 2.0, 0.25, &grid)?;
    let main = main_bound(&config.symbol, alpha, &grid)?;
    let chain_t = if config.heat_t < 1.0 / (2.0 * alpha) {
        config.heat_t
    } else {
        1.0 / (4.0 * alpha)
    };
    let chain = bound_chain_report(&config.symbol, alpha, chain_t, &grid)?;

    rb.result("measured_operator_norm", json!(measured));
    rb.result("schur_bound", json!(schur));
    rb.result("main_bound", json!(main));
    rb.result("chain", serde_json::to_value(&chain)?);

    rb.assert_le("measured_le_schur", "schur_norm_bound", measured, schur * (1.0 + 1e-9));
    if config.symbol == SymbolSpec::Constant {
        let want = (4.0 * std::f64::consts::PI / alpha).sqrt();
        rb.assert_le(
            "schur_reference",
            "schur_reference_value",
            (schur - want).abs() / want,
            0.01,
        );
    }

    let mut rows = vec![
        vec![
            "schur".to_string(),
            fmt(schur),
            fmt(measured),
            fmt(measured / schur),
        ],
        vec![
            "main".to_string(),
            fmt(main),
            fmt(measured),
            fmt(measured / main),
        ],
    ];
    for (name, v) in &chain.values {
        rows.push(vec![format!("chain_{name}"), fmt(*v), String::new(), String::new()]);
    }
    rb.table("bounds", &["bound_name", "bound_value", "measured", "ratio"], rows);
    rb.finish(out_dir)
}

fn run_schatten(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let grid = config.grid_obj();
    let basis = config.basis_obj();
    let quad = config.quadrature_spec();
    let alpha = config.alpha;
    let mut rb = ReportBuilder::new(CommandKind::Schatten, config);

    let t = toeplitz_matrix(SymbolSource::Spec(&config.symbol), &basis, &quad)?;
    let op = operator_norm(&t);
    rb.result("operator_norm", json!(op));

    // kernel-bound lattices sized to the truncation budget
    let budget = (0.5 * basis.dimension() as f64 / alpha).sqrt();
    let z_extent = 0.69 * budget;
    let w_extent = 0.29 * budget;

    let mut rows = Vec::new();
    let mut per_p = serde_json::Map::new();
    for &p in &config.schatten_p {
        let s = schatten_norm(&t, p)?;
        let plain = schatten_symbol_bound(&config.symbol, p, &grid, SchattenVariant::Plain, alpha)?;
        let deriv =
            schatten_symbol_bound(&config.symbol, p, &grid, SchattenVariant::Derivative, alpha)?;
        let kernel = kernel_schatten_bound(&t, p, w_extent, w_extent / 8.0, z_extent, z_extent / 24.0)?;
        rb.assert_ge(
            &format!("schatten_dominates_operator_norm_p{p}"),
            "schatten_monotonicity",
            s + 1e-12,
            op,
        );
        if (p - 2.0).abs() < 1e-12 {
            let frob = t.frobenius();
            rb.assert_le(
                "hilbert_schmidt_consistency",
                "hilbert_schmidt_norm",
                (s - frob).abs(),
                1e-10 * frob.max(1.0),
            );
        }
        per_p.insert(
            format!("p{p}"),
            json!({
                "schatten_norm": s,
                "plain_bound": plain.value,
                "plain_divergent": plain.divergent,
                "derivative_bound": deriv.value,
                "derivative_divergent": deriv.divergent,
                "kernel_bound": kernel.value,
                "kernel_divergent": kernel.divergent,
            }),
        );
        rows.push(vec![
            fmt(p),
            fmt(s),
            fmt(plain.value),
            plain.divergent.to_string(),
            fmt(deriv.value),
            deriv.divergent.to_string(),
            fmt(kernel.value),
            kernel.divergent.to_string(),
        ]);
    }
    rb.result("per_p", serde_json::Value::Object(per_p));

    // unit-left-factor reduction of the product bound
    let p0 = config.schatten_p.first().copied().unwrap_or(1.0);
    let pb = product_schatten_bound(&SymbolSpec::Constant, &config.symbol, p0, alpha, &grid, 4.0)?;
    let gf = sample_symbol(&config.symbol, &grid)?;
    let mut corollary = 0.0;
    for d in crate::bounds::derivative_fields(&gf, alpha)? {
        corollary += (2.0 * std::f64::consts::PI / alpha).powf(1.0 / p0)
            * d.abs().lp_norm(p0)?;
    }
    rb.result("product_bound_unit_factor", json!(pb.value));
    rb.result("product_bound_corollary_shape", json!(corollary));
    rb.assert_le(
        "product_bound_unit_reduction",
        "product_bound_unit_reduction",
        (pb.value - corollary).abs(),
        config.tol("product_bound_unit_reduction", 1e-8) * corollary.max(1.0),
    );

    rb.table(
        "schatten",
        &[
            "p",
            "schatten_norm",
            "plain_bound",
            "plain_divergent",
            "derivative_bound",
            "derivative_divergent",
            "kernel_bound",
            "kernel_divergent",
        ],
        rows,
    );
    rb.finish(out_dir)
}

fn run_carleson(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let grid = config.grid_obj();
    let alpha = config.alpha;
    let mut rb = ReportBuilder::new(CommandKind::Carleson, config);

    let f = sample_symbol(&config.symbol, &grid)?.abs();
    let ball = carleson(&f, CarlesonMode::Ball { r: 1.0 })?;
    let heat = carleson(&f, CarlesonMode::Heat { alpha })?;
    let ratio = ball / heat.max(1e-300);
    rb.result("ball_r1", json!(ball));
    rb.result("heat", json!(heat));
    rb.result("ratio", json!(ratio));

    rb.assert_ge("carleson_ratio_lower", "carleson_two_sided", ratio, 0.1);
    rb.assert_le("carleson_ratio_upper", "carleson_two_sided", ratio, 10.0);
    if config.symbol == SymbolSpec::Constant {
        rb.assert_le(
            "disc_area",
            "disc_area_reference",
            (ball - std::f64::consts::PI).abs() / std::f64::consts::PI,
            0.02,
        );
        rb.assert_le("unit_heat", "unit_heat_reference", (heat - 1.0).abs(), 1e-10);
    }

    rb.table(
        "carleson",
        &["quantity", "value"],
        vec![
            vec!["ball_r1".into(), fmt(ball)],
            vec!["heat".into(), fmt(heat)],
            vec!["ratio".into(), fmt(ratio)],
        ],
    );
    rb.finish(out_dir)
}

/// One named selftest closure.
pub type SelftestCheck = Box<dyn Fn() -> std::result::Result<(), String>>;

/// The selftest battery: every cheap closed-form identity the modules
/// expose, run end to end. Prints one line per check.
pub fn selftest_checks() -> Vec<(&'static str, SelftestCheck)> {
    type Check = SelftestCheck;
    fn ok(cond: bool, msg: String) -> std::result::Result<(), String> {
        if cond {
            Ok(())
        } else {
            Err(msg)
        }
    }
    let near = |a: f64, b: f64, eps: f64| (a - b).abs() <= eps;

    let mut checks: Vec<(&'static str, Check)> = Vec::new();
    checks.push((
        "grid_spacing",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            ok(
                g.spacing() == 0.0625 && g.frequency_spacing() == 0.0625,
                format!("spacing {} freq {}", g.spacing(), g.frequency_spacing()),
            )
        }),
    ));
    checks.push((
        "grid_rejects_non_power_of_two",
        Box::new(move || ok(Grid::new(16.0, 100).is_err(), "accepted 100 points".into())),
    ));
    checks.push((
        "sample_constant",
        Box::new(move || {
            let g = Grid::new(16.0, 128).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::Constant, &g).map_err(|e| e.to_string())?;
            ok(f.sup_norm() == 1.0 && f.lp_norm(1.0).map_err(|e| e.to_string())? == 256.0,
               "constant field values".into())
        }),
    ));
    checks.push((
        "plane_wave_value",
        Box::new(move || {
            let g = Grid::new(16.0, 128).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::PlaneWave { x: [1.0, 0.0] }, &g)
                .map_err(|e| e.to_string())?;
            let i = g.index_of(0.25).ok_or("0.25 not on lattice")?;
            let j = g.index_of(0.0).ok_or("0 not on lattice")?;
            let v = f.samples()[(i, j)];
            ok(near(v.re, 0.0, 1e-14) && near(v.im, 1.0, 1e-14), format!("value {v}"))
        }),
    ));
    checks.push((
        "fourier_round_trip",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::Gaussian { c: 1.0 }, &g).map_err(|e| e.to_string())?;
            let b = fourier(&fourier(&f, FourierDirection::Forward).map_err(|e| e.to_string())?,
                            FourierDirection::Inverse).map_err(|e| e.to_string())?;
            let err = crate::field::max_abs_diff(&f, &b);
            ok(err <= 1e-12, format!("round trip error {err}"))
        }),
    ));
    checks.push((
        "heat_kernel_total_mass",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let k = heat_kernel(&g, 1.0).map_err(|e| e.to_string())?;
            let spec = fourier(&k, FourierDirection::Forward).map_err(|e| e.to_string())?;
            let mid = g.points() / 2;
            let v = spec.samples()[(mid, mid)].re;
            ok(near(v, 1.0, 1e-10), format!("mass {v}"))
        }),
    ));
    checks.push((
        "convolve_delta_identity",
        Box::new(move || {
            let g = Grid::new(16.0, 128).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::Gaussian { c: 1.0 }, &g).map_err(|e| e.to_string())?;
            let mut d = ScalarField::zeros(g, Domain::Space);
            let i0 = g.index_of(0.0).ok_or("origin off lattice")?;
            let h = g.spacing();
            d.samples_mut()[(i0, i0)] = Complex64::new(1.0 / (h * h), 0.0);
            let out = convolve(&f, &d).map_err(|e| e.to_string())?;
            let err = crate::field::max_abs_diff(&f, &out);
            ok(err <= 1e-12, format!("delta identity error {err}"))
        }),
    ));
    checks.push((
        "heat_fixes_constants",
        Box::new(move || {
            let g = Grid::new(16.0, 128).map_err(|e| e.to_string())?;
            let one = sample_symbol(&SymbolSpec::Constant, &g).map_err(|e| e.to_string())?;
            let out = heat_transform(&one, HeatParam::new(0.7).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let err = crate::field::max_abs_diff(&one, &out);
            ok(err <= 1e-10, format!("error {err}"))
        }),
    ));
    checks.push((
        "derivative_identity_order_zero",
        Box::new(move || {
            let g = Grid::new(16.0, 128).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::Gaussian { c: 1.0 }, &g).map_err(|e| e.to_string())?;
            let d = spectral_derivative(&f, 0, 0).map_err(|e| e.to_string())?;
            ok(crate::field::max_abs_diff(&f, &d) == 0.0, "order-zero derivative".into())
        }),
    ));
    checks.push((
        "derivative_rejects_order_four",
        Box::new(move || {
            let g = Grid::new(16.0, 128).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::Constant, &g).map_err(|e| e.to_string())?;
            ok(spectral_derivative(&f, 2, 2).is_err(), "accepted a+b=4".into())
        }),
    ));
    checks.push((
        "translate_modulate_identity",
        Box::new(move || {
            let g = Grid::new(16.0, 128).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::Gaussian { c: 1.0 }, &g).map_err(|e| e.to_string())?;
            let same = translate_modulate(&f, [0.0, 0.0], [0.0, 0.0]).map_err(|e| e.to_string())?;
            ok(crate::field::max_abs_diff(&f, &same) == 0.0, "identity shift".into())
        }),
    ));
    checks.push((
        "kernel_at_origin",
        Box::new(move || {
            let b = FockBasis::new(1.0, 12).map_err(|e| e.to_string())?;
            let c = kernel_coefficients(Complex64::new(0.0, 0.0), &b).map_err(|e| e.to_string())?;
            ok(
                c[0] == Complex64::new(1.0, 0.0) && c.iter().skip(1).all(|z| z.norm() == 0.0),
                "k_0 = e_0".into(),
            )
        }),
    ));
    checks.push((
        "toeplitz_unit_symbol",
        Box::new(move || {
            let b = FockBasis::new(1.0, 10).map_err(|e| e.to_string())?;
            let t = toeplitz_matrix(
                SymbolSource::Spec(&SymbolSpec::Constant),
                &b,
                &QuadratureSpec::default_for(&b),
            )
            .map_err(|e| e.to_string())?;
            let d = operator_norm(&t.sub(&OperatorMatrix::identity(b)).map_err(|e| e.to_string())?);
            ok(d <= 1e-12, format!("identity defect {d}"))
        }),
    ));
    checks.push((
        "toeplitz_gaussian_diagonal",
        Box::new(move || {
            let b = FockBasis::new(1.0, 10).map_err(|e| e.to_string())?;
            let t = toeplitz_matrix(
                SymbolSource::Spec(&SymbolSpec::Gaussian { c: 1.0 }),
                &b,
                &QuadratureSpec::default_for(&b),
            )
            .map_err(|e| e.to_string())?;
            ok(
                near(t.entries()[(0, 0)].re, 0.5, 1e-12) && near(t.entries()[(3, 3)].re, 0.0625, 1e-12),
                "gaussian diagonal".into(),
            )
        }),
    ));
    checks.push((
        "adjoint_involution",
        Box::new(move || {
            let b = FockBasis::new(1.0, 8).map_err(|e| e.to_string())?;
            let t = toeplitz_matrix(
                SymbolSource::Spec(&SymbolSpec::PlaneWave { x: [0.5, 0.25] }),
                &b,
                &QuadratureSpec::default_for(&b),
            )
            .map_err(|e| e.to_string())?;
            let back = t.adjoint().adjoint();
            ok(t.sub(&back).map_err(|e| e.to_string())?.frobenius() == 0.0, "adjoint".into())
        }),
    ));
    checks.push((
        "displacement_identity",
        Box::new(move || {
            let b = FockBasis::new(1.0, 16).map_err(|e| e.to_string())?;
            let w = displacement_matrix(Complex64::new(0.0, 0.0), &b).map_err(|e| e.to_string())?;
            let d = w.sub(&OperatorMatrix::identity(b)).map_err(|e| e.to_string())?.frobenius();
            ok(d <= 1e-12, format!("W_0 defect {d}"))
        }),
    ));
    checks.push((
        "operator_norm_identity",
        Box::new(move || {
            let b = FockBasis::new(1.0, 10).map_err(|e| e.to_string())?;
            ok(
                near(operator_norm(&OperatorMatrix::identity(b)), 1.0, 1e-12),
                "‖I‖".into(),
            )
        }),
    ));
    checks.push((
        "schatten_identity_trace",
        Box::new(move || {
            let b = FockBasis::new(1.0, 10).map_err(|e| e.to_string())?;
            let s = schatten_norm(&OperatorMatrix::identity(b), 1.0).map_err(|e| e.to_string())?;
            ok(near(s, 10.0, 1e-10), format!("S₁(I) = {s}"))
        }),
    ));
    checks.push((
        "berezin_of_identity",
        Box::new(move || {
            let b = FockBasis::new(1.0, 24).map_err(|e| e.to_string())?;
            let v = berezin(&OperatorMatrix::identity(b), Complex64::new(0.4, -0.2), None)
                .map_err(|e| e.to_string())?;
            ok(near(v.re, 1.0, 1e-12) && near(v.im, 0.0, 1e-12), format!("value {v}"))
        }),
    ));
    checks.push((
        "smooth_step_values",
        Box::new(move || {
            ok(
                smooth_step(-1.0) == 0.0 && smooth_step(2.0) == 1.0 && near(smooth_step(0.5), 0.5, 1e-15),
                "step values".into(),
            )
        }),
    ));
    checks.push((
        "bump_values",
        Box::new(move || {
            ok(
                bump(0.0, 0.0) == 1.0 && bump(1.2, 0.0) == 0.0 && near(bump(0.75, 0.0), 0.5, 1e-15),
                "bump values".into(),
            )
        }),
    ));
    checks.push((
        "partition_of_unity",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let mid = g.points() / 2;
            let mut sum = 0.0;
            for a in -2i64..=2 {
                for b in -2i64..=2 {
                    let w = window([a, b], &g).map_err(|e| e.to_string())?;
                    sum += w.field().samples()[(mid + 8, mid)].re; // ξ = (0.5, 0)
                }
            }
            ok(near(sum, 1.0, 1e-12), format!("Σψ = {sum}"))
        }),
    ));
    checks.push((
        "multiplier_at_origin",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let m = frequency_multiplier([0, 0], 0.5, &g).map_err(|e| e.to_string())?;
            let mid = g.points() / 2;
            let inside = m.samples()[(mid, mid)].re;
            let outside = m.samples()[(mid + 32, mid)].re; // ξ = (2, 0)
            ok(near(inside, 1.0, 1e-14) && outside == 0.0, format!("{inside}, {outside}"))
        }),
    ));
    checks.push((
        "piece_of_constant",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let one = sample_symbol(&SymbolSpec::Constant, &g).map_err(|e| e.to_string())?;
            let g0 = symbol_piece(&one, [0, 0], 1.0).map_err(|e| e.to_string())?;
            let g1 = symbol_piece(&one, [1, 0], 1.0).map_err(|e| e.to_string())?;
            let e0 = crate::field::max_abs_diff(&g0, &one);
            ok(e0 <= 1e-10 && g1.sup_norm() <= 1e-10, format!("{e0}, {}", g1.sup_norm()))
        }),
    ));
    checks.push((
        "decompose_constant",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let b = FockBasis::new(1.0, 8).map_err(|e| e.to_string())?;
            let rep = decompose(&SymbolSpec::Constant, 1.0, 1, &b, &g).map_err(|e| e.to_string())?;
            ok(rep.residuals[0] <= 1e-8, format!("residual {}", rep.residuals[0]))
        }),
    ));
    checks.push((
        "tail_estimate_values",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let t0 = piece_tail_estimate(&SymbolSpec::Constant, [0, 0], 1.0, &g)
                .map_err(|e| e.to_string())?;
            let t11 = piece_tail_estimate(&SymbolSpec::Constant, [1, 1], 1.0, &g)
                .map_err(|e| e.to_string())?;
            ok(
                near(t0, 1.0, 1e-9) && near(t11, 1.0 / 27.0, 1e-9),
                format!("tails {t0}, {t11}"),
            )
        }),
    ));
    checks.push((
        "weyl_residual_at_origin",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let b = FockBasis::new(1.0, 16).map_err(|e| e.to_string())?;
            let r = crate::decomp::weyl_conjugation_residual(
                &SymbolSpec::Gaussian { c: 1.0 },
                [0, 0],
                1.0,
                &b,
                &g,
            )
            .map_err(|e| e.to_string())?;
            ok(r <= 1e-10, format!("residual {r}"))
        }),
    ));
    checks.push((
        "carleson_heat_of_constant",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let one = sample_symbol(&SymbolSpec::Constant, &g).map_err(|e| e.to_string())?;
            let v = carleson(&one, CarlesonMode::Heat { alpha: 1.0 }).map_err(|e| e.to_string())?;
            ok(near(v, 1.0, 1e-10), format!("heat carleson {v}"))
        }),
    ));
    checks.push((
        "main_bound_of_constant",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let v = main_bound(&SymbolSpec::Constant, 1.0, &g).map_err(|e| e.to_string())?;
            ok(near(v, 1.0, 1e-9), format!("main bound {v}"))
        }),
    ));
    checks.push((
        "derivative_bound_flags_constant",
        Box::new(move || {
            let g = Grid::new(16.0, 256).map_err(|e| e.to_string())?;
            let b = schatten_symbol_bound(&SymbolSpec::Constant, 2.0, &g, SchattenVariant::Derivative, 1.0)
                .map_err(|e| e.to_string())?;
            ok(b.divergent, "constant not flagged".into())
        }),
    ));
    checks.push((
        "kernel_bound_flags_identity",
        Box::new(move || {
            let b = FockBasis::new(1.0, 30).map_err(|e| e.to_string())?;
            let kb = kernel_schatten_bound(&OperatorMatrix::identity(b), 1.0, 1.0, 0.25, 2.5, 0.25)
                .map_err(|e| e.to_string())?;
            ok(kb.divergent, "identity not flagged".into())
        }),
    ));
    checks.push((
        "matrix_cache_round_trip",
        Box::new(move || {
            let b = FockBasis::new(1.0, 4).map_err(|e| e.to_string())?;
            let t = OperatorMatrix::identity(b);
            let dir = std::env::temp_dir().join("ftz-selftest");
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let path = dir.join("id.ftlz");
            save_matrix(&t, &path).map_err(|e| e.to_string())?;
            let loaded = load_matrix(&path).map_err(|e| e.to_string())?;
            let equal = loaded.basis() == t.basis()
                && loaded
                    .entries()
                    .iter()
                    .zip(t.entries().iter())
                    .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
            // truncation must be rejected
            let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
            std::fs::write(&path, &bytes[..bytes.len() - 1]).map_err(|e| e.to_string())?;
            let truncated_rejected = load_matrix(&path).is_err();
            ok(equal && truncated_rejected, "cache round trip".into())
        }),
    ));
    checks.push((
        "symbol_csv_round_trip",
        Box::new(move || {
            let g = Grid::new(16.0, 8).map_err(|e| e.to_string())?;
            let f = sample_symbol(&SymbolSpec::Gaussian { c: 1.0 }, &g).map_err(|e| e.to_string())?;
            let dir = std::env::temp_dir().join("ftz-selftest");
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let path = dir.join("sym.csv");
            export_symbol_csv(&f, &path).map_err(|e| e.to_string())?;
            let back = ingest_symbol_csv(&path, &g).map_err(|e| e.to_string())?;
            let diff = crate::field::max_abs_diff(&f, &back);
            let other = Grid::new(8.0, 8).map_err(|e| e.to_string())?;
            let mismatch_rejected = ingest_symbol_csv(&path, &other).is_err();
            ok(diff == 0.0 && mismatch_rejected, format!("csv diff {diff}"))
        }),
    ));
    checks
}

fn run_selftest(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    let mut rb = ReportBuilder::new(CommandKind::Selftest, config);
    let mut rows = Vec::new();
    for (name, check) in selftest_checks() {
        let outcome = check();
        let pass = outcome.is_ok();
        match &outcome {
            Ok(()) => println!("ok   {name}"),
            Err(msg) => println!("FAIL {name}: {msg}"),
        }
        rb.assert_true(name, "closed_form_selftest", pass);
        rows.push(vec![name.to_string(), pass.to_string()]);
    }
    rb.table("checks", &["check", "pass"], rows);
    rb.finish(out_dir)
}

/// Serialize an operator matrix: magic `FTLZ1`, little-endian `u32` N,
/// little-endian `f64` alpha, then N² entries as interleaved `(re, im)`
/// little-endian doubles in row-major order.
pub fn save_matrix(a: &OperatorMatrix, path: &Path) -> Result<()> {
    let n = a.basis().dimension();
    let mut buf = Vec::with_capacity(17 + 16 * n * n);
    buf.extend_from_slice(b"FTLZ1");
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&a.basis().alpha().to_le_bytes());
    for j in 0..n {
        for k in 0..n {
            let z = a.entries()[(j, k)];
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    std::fs::write(path, buf)?;
    Ok(())
}

/// Load a matrix written by [`save_matrix`]; the byte length must be exactly
/// `17 + 16 N²`.
pub fn load_matrix(path: &Path) -> Result<OperatorMatrix> {
    let data = std::fs::read(path)?;
    if data.len() < 17 {
        return Err(Error::Format(format!(
            "{}: too short for a matrix cache header",
            path.display()
        )));
    }
    if &data[..5] != b"FTLZ1" {
        return Err(Error::Format(format!("{}: bad magic bytes", path.display())));
    }
    let n = u32::from_le_bytes(data[5..9].try_into().expect("4 bytes")) as usize;
    let expected = 17 + 16 * n * n;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "{}: expected {expected} bytes for N = {n}, found {}",
            path.display(),
            data.len()
        )));
    }
    let alpha = f64::from_le_bytes(data[9..17].try_into().expect("8 bytes"));
    let basis = FockBasis::new(alpha, n)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut entries = ndarray::Array2::zeros((n, n));
    let mut off = 17;
    for j in 0..n {
        for k in 0..n {
            let re = f64::from_le_bytes(data[off..off + 8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(data[off + 8..off + 16].try_into().expect("8 bytes"));
            entries[(j, k)] = Complex64::new(re, im);
            off += 16;
        }
    }
    OperatorMatrix::from_entries(basis, entries)
}

/// Write a space-domain field in the symbol CSV format: a header line
/// `# extent=<L> points=<M>` followed by M² lines `re,im` in row-major node
/// order, full round-trip precision.
pub fn export_symbol_csv(f: &ScalarField, path: &Path) -> Result<()> {
    if f.domain() != Domain::Space {
        return Err(Error::DomainMismatch("symbol CSV stores space-domain fields".into()));
    }
    let grid = f.grid();
    let mut out = String::new();
    out.push_str(&format!("# extent={} points={}\n", grid.extent(), grid.points()));
    for z in f.samples().iter() {
        out.push_str(&format!("{},{}\n", z.re, z.im));
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn parse_header(line: &str, path: &Path) -> Result<(f64, usize)> {
    let rest = line
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format(format!("{}: missing `# ` header", path.display())))?;
    let mut extent = None;
    let mut points = None;
    for token in rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("extent=") {
            extent = Some(v.parse::<f64>().map_err(|e| {
                Error::Format(format!("{}: bad extent `{v}`: {e}", path.display()))
            })?);
        } else if let Some(v) = token.strip_prefix("points=") {
            points = Some(v.parse::<usize>().map_err(|e| {
                Error::Format(format!("{}: bad points `{v}`: {e}", path.display()))
            })?);
        } else {
            return Err(Error::Format(format!(
                "{}: unexpected header token `{token}`",
                path.display()
            )));
        }
    }
    match (extent, points) {
        (Some(e), Some(p)) => Ok((e, p)),
        _ => Err(Error::Format(format!(
            "{}: header must carry extent= and points=",
            path.display()
        ))),
    }
}

/// Read a symbol CSV against an expected grid; the header must match it.
pub fn ingest_symbol_csv(path: &Path, grid: &Grid) -> Result<ScalarField> {
    let f = load_symbol_csv(path)?;
    if f.grid() != *grid {
        return Err(Error::Format(format!(
            "{}: header grid (extent {}, points {}) does not match expected (extent {}, points {})",
            path.display(),
            f.grid().extent(),
            f.grid().points(),
            grid.extent(),
            grid.points()
        )));
    }
    Ok(f)
}

/// Read a symbol CSV using the grid declared in its own header.
pub fn load_symbol_csv(path: &Path) -> Result<ScalarField> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?;
    let (extent, points) = parse_header(header, path)?;
    let grid =
        Grid::new(extent, points).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let m = grid.points();
    let mut samples = ndarray::Array2::zeros((m, m));
    let mut count = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (re_s, im_s) = line.split_once(',').ok_or_else(|| {
            Error::Format(format!("{}:{}: expected `re,im`", path.display(), lineno + 2))
        })?;
        let re: f64 = re_s.trim().parse().map_err(|e| {
            Error::Format(format!("{}:{}: bad real part: {e}", path.display(), lineno + 2))
        })?;
        let im: f64 = im_s.trim().parse().map_err(|e| {
            Error::Format(format!("{}:{}: bad imaginary part: {e}", path.display(), lineno + 2))
        })?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Format(format!(
                "{}:{}: non-finite sample",
                path.display(),
                lineno + 2
            )));
        }
        if count >= m * m {
            return Err(Error::Format(format!(
                "{}: more than {} samples",
                path.display(),
                m * m
            )));
        }
        samples[(count / m, count % m)] = Complex64::new(re, im);
        count += 1;
    }
    if count != m * m {
        return Err(Error::Format(format!(
            "{}: expected {} samples, found {count}",
            path.display(),
            m * m
        )));
    }
    ScalarField::from_samples(grid, Domain::Space, samples)
}
