use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use singint::{MultiPoly, NewtonPolyhedron};

/// Everything a run depends on. A run is reproducible from this struct
/// alone: every random stream is derived from `seed`, and no stage consults
/// the clock or the environment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Polynomial in the `x1..xN` grammar, e.g. `"x1*x2"` or `"x1^2 + x2^4"`.
    pub poly: String,
    /// Variable count; 0 infers it from the highest index in `poly`.
    pub nvars: usize,
    /// Truncation radius of the kernel cutoff.
    pub radius: f64,
    /// Truncation levels for the multiplier and operator checks.
    pub levels: Vec<i32>,
    /// Master seed; stages draw independent substreams from it.
    pub seed: u64,
    pub sublevel: SublevelConfig,
    pub rects: RectConfig,
    pub pairing: PairingConfig,
    pub operator: OperatorConfig,
    /// Grid resolution per axis for the Riesz cone sups (two variables only).
    pub riesz_grid: usize,
    pub tolerances: Tolerances,
    /// Output directory for reports; created if missing.
    pub outdir: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SublevelConfig {
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub points: usize,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RectConfig {
    /// Number of random dyadic rectangles to compare the two shell
    /// estimators on.
    pub count: usize,
    /// Scales drawn uniformly from `[1, j_max]` per axis.
    pub j_max: i32,
    pub mc_samples: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingConfig {
    pub tol: f64,
    pub max_level: i32,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    pub grid: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|delta_hat - delta0|` bound for the sublevel fit.
    pub sublevel_delta: f64,
    /// `|log_power_hat - (m - 1)|` bound for the sublevel fit.
    pub sublevel_log_power: f64,
    /// Relative disagreement allowed between the two shell estimators.
    pub estimator_agreement: f64,
    /// Relative spread allowed across truncation levels for the multiplier,
    /// Marcinkiewicz and operator checks.
    pub stability: f64,
    /// Bound on the low-frequency linear constant of a dyadic piece.
    pub c_small: f64,
    /// Relative residual allowed when summing pieces against the truncation.
    pub reconstruction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            poly: "x1*x2".into(),
            nvars: 0,
            radius: 0.5,
            levels: vec![6, 8, 10],
            seed: 7,
            sublevel: SublevelConfig::default(),
            rects: RectConfig::default(),
            pairing: PairingConfig::default(),
            operator: OperatorConfig::default(),
            riesz_grid: 48,
            tolerances: Tolerances::default(),
            outdir: "singint-out".into(),
        }
    }
}

impl Default for SublevelConfig {
    fn default() -> Self {
        SublevelConfig {
            eps_lo: 1e-5,
            eps_hi: 1e-2,
            points: 24,
            samples: 200_000,
        }
    }
}

impl Default for RectConfig {
    fn default() -> Self {
        RectConfig {
            count: 8,
            j_max: 8,
            mc_samples: 120_000,
        }
    }
}

impl Default for PairingConfig {
    fn default() -> Self {
        PairingConfig {
            tol: 1e-6,
            max_level: 40,
            nodes: 32,
        }
    }
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            grid: 1024,
            sigma: 0.1,
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            sublevel_delta: 0.05,
            sublevel_log_power: 0.3,
            estimator_agreement: 0.05,
            stability: 0.15,
            c_small: 2.1,
            reconstruction: 1e-9,
        }
    }
}

/// Command-line overrides applied on top of a config file (or the defaults).
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Polynomial, e.g. "x1*x2"
    #[arg(long)]
    pub poly: Option<String>,
    /// Variable count (0 = infer from the polynomial)
    #[arg(long)]
    pub nvars: Option<usize>,
    /// Kernel truncation radius
    #[arg(long)]
    pub radius: Option<f64>,
    /// Comma-separated truncation levels, e.g. 6,8,10
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<i32>>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Samples per epsilon for the sublevel fit
    #[arg(long)]
    pub sublevel_samples: Option<u64>,
    /// Epsilon grid size for the sublevel fit
    #[arg(long)]
    pub sublevel_points: Option<usize>,
    /// Smallest epsilon of the sublevel grid
    #[arg(long)]
    pub eps_lo: Option<f64>,
    /// Largest epsilon of the sublevel grid
    #[arg(long)]
    pub eps_hi: Option<f64>,
    /// Random dyadic rectangles for the estimator comparison
    #[arg(long)]
    pub rect_count: Option<usize>,
    /// Monte Carlo samples per rectangle
    #[arg(long)]
    pub rect_samples: Option<u64>,
    /// FFT grid per axis for the operator check
    #[arg(long)]
    pub operator_grid: Option<usize>,
    /// Convergence tolerance for the distributional pairing
    #[arg(long)]
    pub pairing_tol: Option<f64>,
    /// Output directory for reports
    #[arg(long)]
    pub outdir: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = &o.poly {
            self.poly = v.clone();
        }
        if let Some(v) = o.nvars {
            self.nvars = v;
        }
        if let Some(v) = o.radius {
            self.radius = v;
        }
        if let Some(v) = &o.levels {
            self.levels = v.clone();
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.sublevel_samples {
            self.sublevel.samples = v;
        }
        if let Some(v) = o.sublevel_points {
            self.sublevel.points = v;
        }
        if let Some(v) = o.eps_lo {
            self.sublevel.eps_lo = v;
        }
        if let Some(v) = o.eps_hi {
            self.sublevel.eps_hi = v;
        }
        if let Some(v) = o.rect_count {
            self.rects.count = v;
        }
        if let Some(v) = o.rect_samples {
            self.rects.mc_samples = v;
        }
        if let Some(v) = o.operator_grid {
            self.operator.grid = v;
        }
        if let Some(v) = o.pairing_tol {
            self.pairing.tol = v;
        }
        if let Some(v) = &o.outdir {
            self.outdir = v.clone();
        }
    }

    /// Parses the polynomial and checks every numeric field, so stages can
    /// assume a well-formed config. Violations are usage errors, not check
    /// failures.
    pub fn validate(&self) -> Result<MultiPoly> {
        let b = MultiPoly::parse(&self.poly, self.nvars)
            .with_context(|| format!("polynomial {:?}", self.poly))?;
        // surfaces constant-term and size-cap problems before any stage runs
        NewtonPolyhedron::from_poly(&b).with_context(|| format!("polynomial {:?}", self.poly))?;
        if !(self.radius.is_finite() && self.radius > 0.0) {
            bail!("radius must be positive and finite, got {}", self.radius);
        }
        if self.levels.is_empty() {
            bail!("levels must not be empty");
        }
        if self.levels.iter().any(|&l| !(1..=40).contains(&l)) {
            bail!("levels must lie in 1..=40, got {:?}", self.levels);
        }
        let s = &self.sublevel;
        if !(s.eps_lo > 0.0 && s.eps_lo < s.eps_hi) {
            bail!("sublevel grid needs 0 < eps_lo < eps_hi");
        }
        // 999 not 1e3: 1e-2 / 1e-5 = 999.9999999999999 in floating point
        if s.eps_hi / s.eps_lo < 999.0 {
            bail!("sublevel grid must span at least three decades");
        }
        if s.eps_hi >= 1.0 / std::f64::consts::E {
            bail!("sublevel fit model needs eps_hi < 1/e");
        }
        if s.points < 4 {
            bail!("sublevel grid needs at least 4 points");
        }
        if s.samples < 10_000 {
            bail!("sublevel error bars are meaningless below 10000 samples");
        }
        if self.rects.count == 0 || self.rects.j_max < 1 {
            bail!("rect comparison needs count >= 1 and j_max >= 1");
        }
        if self.rects.mc_samples < 1_000 {
            bail!("rect comparison needs at least 1000 samples");
        }
        if !(self.pairing.tol > 0.0) || self.pairing.nodes < 4 || self.pairing.max_level < 1 {
            bail!("pairing needs tol > 0, nodes >= 4, max_level >= 1");
        }
        if !(8..=8192).contains(&self.operator.grid) {
            bail!("operator grid must lie in 8..=8192");
        }
        if !(self.operator.sigma > 0.0) {
            bail!("operator sigma must be positive");
        }
        if !(16..=1024).contains(&self.riesz_grid) {
            bail!("riesz grid must lie in 16..=1024");
        }
        if self.outdir.is_empty() {
            bail!("outdir must not be empty");
        }
        Ok(b)
    }

    /// Hash of the serialized config; struct fields serialize in declaration
    /// order, so the hash is stable for equal configs.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }
}

pub fn hex(digest: &[u8]) -> String {
    let mut out = String::with_capacity(digest.len() * 2);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}
