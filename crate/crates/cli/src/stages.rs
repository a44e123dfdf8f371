use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use singint::estimate::fourier::{
    multiplier_sup, verify_fourier_decay, xi_grid, DecayOptions, FourierEngine,
};
use singint::estimate::fourier::marcinkiewicz_sup;
use singint::estimate::operator::{apply_operator, OperatorOptions};
use singint::estimate::rects::{
    near_zero_fraction, shell_power_integral_distribution, shell_power_integral_mc,
    DistributionOptions, DyadicRect,
};
use singint::estimate::sublevel::{fit_sublevel_asymptotics, geometric_grid};
use singint::estimate::{CheckResult, EstimateError, VerificationReport};
use singint::hypothesis::{
    check_face_zero_orders, check_nonvanishing, derivative_line_zero_bound, HypothesisConfig,
    HypothesisReport,
};
use singint::kernel::{Kernel, KernelError, PairingOptions};
use singint::quad::{gauss_legendre, OscOptions};
use singint::riesz::{riesz_blowup_check, RieszOptions};
use singint::{Face, MultiPoly, NewtonPolyhedron};

use crate::config::RunConfig;
use crate::manifest::{
    file_entry, resolve_exit, rollup_name, write_json, write_text, Manifest, StageEntry,
    StageStatus,
};

/// Which pipeline prefix a subcommand runs. Every command materializes its
/// dependency stages on disk so the gate below always reads a real report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageSet {
    Analyze,
    Hypotheses,
    Kernel,
    Estimates,
    Run,
}

struct StageOutput {
    name: &'static str,
    status: StageStatus,
    report: Option<String>,
    extra_files: Vec<String>,
    wall_ms: u64,
    json: Option<Value>,
}

// same tag scheme as the library's substreams: FNV-1a of the tag XORed
// into the master seed
fn substream(seed: u64, tag: &str) -> ChaCha8Rng {
    let mut h = 0xcbf29ce484222325u64;
    for b in tag.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    ChaCha8Rng::seed_from_u64(seed ^ h)
}

fn check(name: &str, estimator: &str, budget: u64, seed: u64, measured: f64, target: String, passed: bool) -> CheckResult {
    CheckResult {
        name: name.into(),
        estimator: estimator.into(),
        budget,
        seed,
        measured,
        target,
        passed,
    }
}

/// Minimal view of hypotheses.json used to gate downstream stages; the only
/// cross-stage dataflow is through the serialized reports.
#[derive(Debug, Deserialize)]
struct HypothesisGate {
    violated: bool,
    budget_exhausted: bool,
    pass: bool,
}

fn read_gate(dir: &Path) -> Result<HypothesisGate> {
    let path = dir.join("hypotheses.json");
    let text =
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Invariants read back from newton.json ("p/q" strings parse as rationals).
#[derive(Debug, Deserialize)]
struct NewtonGate {
    delta0: String,
    multiplicity: usize,
}

fn read_newton(dir: &Path) -> Result<(f64, usize)> {
    let path = dir.join("newton.json");
    let text =
        fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let g: NewtonGate =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let delta0: num_rational::BigRational = g
        .delta0
        .parse()
        .with_context(|| format!("delta0 {:?} in {}", g.delta0, path.display()))?;
    Ok((delta0.to_f64().context("delta0 out of f64 range")?, g.multiplicity))
}

pub fn execute(cfg: &RunConfig, set: StageSet) -> Result<i32> {
    let b = cfg.validate()?;
    let dir = Path::new(&cfg.outdir);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let config_value = serde_json::to_value(cfg).expect("config serializes");
    write_json(dir, "config.json", &config_value)?;

    let mut outputs: Vec<StageOutput> = Vec::new();

    outputs.push(timed("analyze", || {
        let (v, s) = run_analyze(&b)?;
        write_json(dir, "newton.json", &v)?;
        Ok((s, Some("newton.json".into()), Vec::new(), Some(v)))
    })?);

    if set != StageSet::Analyze {
        outputs.push(timed("hypotheses", || {
            let (v, s) = run_hypotheses(&b, cfg)?;
            write_json(dir, "hypotheses.json", &v)?;
            Ok((s, Some("hypotheses.json".into()), Vec::new(), Some(v)))
        })?);
    }

    if matches!(set, StageSet::Kernel | StageSet::Run) {
        let gate = read_gate(dir)?;
        outputs.push(timed("verify-kernel", || {
            if gate.violated || !gate.pass {
                return Ok((skip_reason(&gate), None, Vec::new(), None));
            }
            let (v, s) = run_kernel(&b, cfg)?;
            write_json(dir, "kernel.json", &v)?;
            Ok((s, Some("kernel.json".into()), Vec::new(), Some(v)))
        })?);
    }

    if matches!(set, StageSet::Estimates | StageSet::Run) {
        let gate = read_gate(dir)?;
        outputs.push(timed("verify-estimates", || {
            if gate.violated || !gate.pass {
                return Ok((skip_reason(&gate), None, Vec::new(), None));
            }
            let newton = read_newton(dir)?;
            let (v, s, extra) = run_estimates(&b, cfg, newton, dir)?;
            write_json(dir, "estimates.json", &v)?;
            Ok((s, Some("estimates.json".into()), extra, Some(v)))
        })?);
    }

    let statuses: Vec<&StageStatus> = outputs.iter().map(|o| &o.status).collect();
    let exit = resolve_exit(&statuses);

    if set == StageSet::Run {
        let mut files = vec![file_entry(dir, "config.json")?];
        for o in &outputs {
            if let Some(r) = &o.report {
                files.push(file_entry(dir, r)?);
            }
            for f in &o.extra_files {
                files.push(file_entry(dir, f)?);
            }
        }
        let manifest = Manifest {
            schema: "singint.manifest/1".into(),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: cfg.sha256(),
            stages: outputs
                .iter()
                .map(|o| StageEntry {
                    name: o.name.into(),
                    status: o.status.clone(),
                    report: o.report.clone(),
                    wall_ms: o.wall_ms,
                })
                .collect(),
            rollup: rollup_name(exit).into(),
            files,
        };
        // written last so its checksums cover the final state of every file
        let manifest_value = serde_json::to_value(&manifest).expect("manifest serializes");
        write_json(dir, "manifest.json", &manifest_value)?;
        let bad = crate::manifest::verify_files(dir, &manifest)?;
        if !bad.is_empty() {
            anyhow::bail!("manifest checksums changed under us: {}", bad.join(", "));
        }
        for o in &outputs {
            println!("{}: {}", o.name, status_line(&o.status));
        }
        println!("rollup: {} ({})", rollup_name(exit), dir.join("manifest.json").display());
    } else if let Some(last) = outputs.last() {
        match (&last.json, &last.status) {
            (Some(v), _) => println!("{}", serde_json::to_string_pretty(v)?),
            (None, s) => println!("{}: {}", last.name, status_line(s)),
        }
    }

    Ok(exit)
}

fn timed(
    name: &'static str,
    f: impl FnOnce() -> Result<(StageStatus, Option<String>, Vec<String>, Option<Value>)>,
) -> Result<StageOutput> {
    let start = Instant::now();
    let (status, report, extra_files, json) = f()?;
    Ok(StageOutput {
        name,
        status,
        report,
        extra_files,
        wall_ms: start.elapsed().as_millis() as u64,
        json,
    })
}

fn skip_reason(gate: &HypothesisGate) -> StageStatus {
    let why = if gate.violated {
        "hypotheses violated"
    } else if gate.budget_exhausted {
        "hypothesis screen exhausted its budget"
    } else {
        "hypothesis screen did not pass"
    };
    StageStatus::Skipped(why.into())
}

fn status_line(s: &StageStatus) -> String {
    match s {
        StageStatus::Pass => "pass".into(),
        StageStatus::HypothesisViolation(r) => format!("hypothesis violation: {r}"),
        StageStatus::BudgetExhausted(r) => format!("budget exhausted: {r}"),
        StageStatus::CheckFailure(r) => format!("check failure: {r}"),
        StageStatus::Skipped(r) => format!("skipped: {r}"),
    }
}

fn face_json(np: &NewtonPolyhedron, f: &Face) -> Value {
    let verts: Vec<_> = f
        .member_vertices
        .iter()
        .map(|&i| np.vertices()[i].clone())
        .collect();
    json!({ "dim": f.dim, "vertices": verts })
}

fn run_analyze(b: &MultiPoly) -> Result<(Value, StageStatus)> {
    let np = NewtonPolyhedron::from_poly(b)?;
    let inv = np.invariants();
    let compact: Vec<Value> = np
        .compact_faces()?
        .iter()
        .map(|f| {
            let mut v = face_json(&np, f);
            v["face_poly"] = json!(np
                .face_polynomial(b, f)
                .map(|p| p.to_string())
                .unwrap_or_default());
            v
        })
        .collect();
    let value = json!({
        "schema": "singint.newton/1",
        "poly": b.to_string(),
        "nvars": b.nvars(),
        "vertices": np.vertices(),
        "facets": np.facets(),
        "newton_distance": inv.newton_distance.to_string(),
        "delta0": inv.delta0.to_string(),
        "multiplicity": inv.multiplicity,
        "central_face": face_json(&np, &inv.central_face),
        "compact_faces": compact,
    });
    Ok((value, StageStatus::Pass))
}

fn describe_violation(report: &HypothesisReport) -> String {
    let faces: Vec<String> = report
        .records
        .iter()
        .filter(|r| r.order.map_or(false, |o| (o as f64) >= report.newton_distance))
        .map(|r| format!("face {} (order {})", r.face_index, r.order.unwrap()))
        .collect();
    format!(
        "zero order >= newton distance {} on {}",
        report.newton_distance,
        faces.join(", ")
    )
}

fn run_hypotheses(b: &MultiPoly, cfg: &RunConfig) -> Result<(Value, StageStatus)> {
    let np = NewtonPolyhedron::from_poly(b)?;
    let hcfg = HypothesisConfig {
        seed: cfg.seed,
        ..HypothesisConfig::default()
    };
    let report = check_face_zero_orders(b, &np, &hcfg)?;
    let nonv = check_nonvanishing(b, cfg.radius, &hcfg);
    let bounds: Vec<u32> = (0..b.nvars())
        .map(|l| derivative_line_zero_bound(b, l))
        .collect();
    let status = if report.violated {
        StageStatus::HypothesisViolation(describe_violation(&report))
    } else if report.budget_exhausted {
        StageStatus::BudgetExhausted("face-zero order search hit its scan cap".into())
    } else {
        StageStatus::Pass
    };
    let value = json!({
        "schema": "singint.hypotheses/1",
        "poly": b.to_string(),
        "newton_distance": report.newton_distance,
        "max_order": report.max_order,
        "violated": report.violated,
        "budget_exhausted": report.budget_exhausted,
        "pass": report.pass,
        "records": report.records,
        "nonvanishing": nonv,
        "derivative_line_zero_bounds": bounds,
    });
    Ok((value, status))
}

/// Sample points in the truncation annulus, away from the coordinate
/// hyperplanes where the kernel is singular.
fn sample_points(n: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, "kernel-sample");
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let mag = rng.gen_range(0.02 * radius..0.9 * radius);
                    if rng.gen::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect()
        })
        .collect()
}

fn run_kernel(b: &MultiPoly, cfg: &RunConfig) -> Result<(Value, StageStatus)> {
    let kernel = match Kernel::new(b.clone(), cfg.radius) {
        Ok(k) => k,
        Err(e @ (KernelError::MixedParity { .. } | KernelError::BadRadius)) => {
            let value = json!({
                "schema": "singint.kernel/1",
                "poly": b.to_string(),
                "radius": cfg.radius,
                "admissible": false,
                "reason": e.to_string(),
            });
            // the parity requirement is a standing hypothesis of the kernel
            // construction, so an inadmissible polynomial exits like one
            return Ok((value, StageStatus::HypothesisViolation(e.to_string())));
        }
        Err(e) => return Err(e.into()),
    };
    let n = kernel.nvars();
    let top = *cfg.levels.iter().max().expect("levels nonempty");
    let mut report = VerificationReport::default();

    let points = sample_points(n, cfg.radius, 64, cfg.seed);

    let mut parity = 0.0f64;
    for y in &points {
        for l in 0..n {
            let mut flip = y.clone();
            flip[l] = -flip[l];
            parity = parity.max((kernel.eval(y) + kernel.eval(&flip)).abs());
        }
    }
    report.push(check(
        "kernel_odd_in_each_axis",
        "pointwise",
        points.len() as u64,
        cfg.seed,
        parity,
        "= 0 exactly".into(),
        parity == 0.0,
    ));

    let trunc = kernel.truncate(top);
    let pieces = trunc.pieces();
    let mut recon = 0.0f64;
    for y in &points {
        let direct = trunc.eval(y);
        let mut sum = 0.0;
        for j in &pieces {
            sum += kernel.piece(j.clone()).eval(y);
        }
        recon = recon.max((sum - direct).abs() / (1.0 + direct.abs()));
    }
    report.push(check(
        "pieces_sum_to_truncation",
        "pointwise",
        (points.len() * pieces.len()) as u64,
        cfg.seed,
        recon,
        format!("<= {:e}", cfg.tolerances.reconstruction),
        recon <= cfg.tolerances.reconstruction,
    ));

    // mirrored tensor quadrature of one piece: sign patterns cancel in
    // exact pairs, so the integral is zero in floating point too
    let j0 = vec![kernel.min_level() + 1; n];
    let piece = kernel.piece(j0.clone());
    let support = piece.support();
    let rule = gauss_legendre(cfg.pairing.nodes);
    let mut integral = 0.0f64;
    let m = rule.0.len();
    let mut idx = vec![0usize; n];
    loop {
        let mut weight = 1.0;
        let mut y = vec![0.0; n];
        for l in 0..n {
            let (lo, hi) = support[l];
            let c = 0.5 * (lo + hi);
            let h = 0.5 * (hi - lo);
            y[l] = c + h * rule.0[idx[l]];
            weight *= h * rule.1[idx[l]];
        }
        let mut point_sum = 0.0;
        for pattern in 0..(1u32 << n) {
            let mut ys = y.clone();
            for l in 0..n {
                if pattern & (1 << l) != 0 {
                    ys[l] = -ys[l];
                }
            }
            point_sum += piece.eval(&ys);
        }
        integral += weight * point_sum;
        let mut l = 0;
        loop {
            if l == n {
                break;
            }
            idx[l] += 1;
            if idx[l] < m {
                break;
            }
            idx[l] = 0;
            l += 1;
        }
        if l == n {
            break;
        }
    }
    report.push(check(
        "piece_integral_cancels",
        "tensor-gauss",
        (m.pow(n as u32) << n) as u64,
        cfg.seed,
        integral.abs(),
        "= 0 exactly".into(),
        integral == 0.0,
    ));

    let centers = [0.07, -0.05, 0.03];
    let sigma = 0.15f64;
    let f = |y: &[f64]| {
        let mut q = 0.0;
        for (l, &v) in y.iter().enumerate() {
            let d = v - centers[l % centers.len()];
            q += d * d;
        }
        (-q / (2.0 * sigma * sigma)).exp()
    };
    let popts = PairingOptions {
        max_level: cfg.pairing.max_level,
        tol: cfg.pairing.tol,
        settle: 2,
        nodes: cfg.pairing.nodes,
    };
    let mut pairing_value = Value::Null;
    let mut pairing_error = Value::Null;
    let mut budget: Option<String> = None;
    match kernel.pair_with_test_function(f, &popts) {
        Ok(r) => {
            report.push(check(
                "pairing_settles",
                "level-sums",
                cfg.pairing.nodes as u64,
                cfg.seed,
                r.last_level_contribution.abs(),
                format!("< {:e} per level", cfg.pairing.tol),
                r.last_level_contribution.abs() < cfg.pairing.tol,
            ));
            pairing_value = serde_json::to_value(r)?;
        }
        Err(KernelError::PairingBudget {
            levels,
            partial,
            last,
        }) => {
            budget = Some(format!(
                "pairing still moving {last:.3e} after {levels} levels (partial {partial:.6e})"
            ));
            pairing_error = json!({ "levels": levels, "partial": partial, "last": last });
        }
        Err(e) => return Err(e.into()),
    }

    let riesz = if n == 2 {
        let r = riesz_blowup_check(
            2,
            &RieszOptions {
                grid: cfg.riesz_grid,
                ..RieszOptions::default()
            },
        );
        report.push(check(
            "riesz_mirrored_lines_cancel",
            "gauss-lines",
            cfg.riesz_grid as u64,
            cfg.seed,
            r.raw_residual,
            "= 0 exactly".into(),
            r.raw_residual == 0.0,
        ));
        report.push(check(
            "riesz_windowed_decay",
            "octave-fit",
            cfg.riesz_grid as u64,
            cfg.seed,
            r.decay_rate,
            "> 0".into(),
            r.decay_rate > 0.0,
        ));
        serde_json::to_value(&r)?
    } else {
        Value::Null
    };

    let pass = report.passed() && budget.is_none();
    let status = if let Some(msg) = budget {
        StageStatus::BudgetExhausted(msg)
    } else if !report.passed() {
        StageStatus::CheckFailure(failed_names(&report))
    } else {
        StageStatus::Pass
    };
    let value = json!({
        "schema": "singint.kernel/1",
        "poly": b.to_string(),
        "radius": cfg.radius,
        "admissible": true,
        "min_level": kernel.min_level(),
        "top_level": top,
        "checks": report.checks,
        "pairing": pairing_value,
        "pairing_error": pairing_error,
        "riesz": riesz,
        "pass": pass,
    });
    Ok((value, status))
}

fn failed_names(report: &VerificationReport) -> String {
    report
        .failed()
        .iter()
        .map(|c| c.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn run_estimates(
    b: &MultiPoly,
    cfg: &RunConfig,
    newton: (f64, usize),
    dir: &Path,
) -> Result<(Value, StageStatus, Vec<String>)> {
    let (delta0, multiplicity) = newton;
    let np = NewtonPolyhedron::from_poly(b)?;
    let n = b.nvars();
    let tol = &cfg.tolerances;
    let mut report = VerificationReport::default();
    let mut skipped: Vec<Value> = Vec::new();
    let mut budget_notes: Vec<String> = Vec::new();
    let mut extra_files: Vec<String> = Vec::new();

    // sublevel asymptotics
    let grid = geometric_grid(cfg.sublevel.eps_lo, cfg.sublevel.eps_hi, cfg.sublevel.points);
    let mut sublevel_value = Value::Null;
    match fit_sublevel_asymptotics(b, cfg.radius, &grid, cfg.sublevel.samples, cfg.seed) {
        Ok(fit) => {
            let d_err = (fit.delta_hat - delta0).abs();
            report.push(check(
                "sublevel_delta",
                "wls-fit",
                cfg.sublevel.samples,
                cfg.seed,
                fit.delta_hat,
                format!("|x - {delta0}| <= {}", tol.sublevel_delta),
                d_err <= tol.sublevel_delta,
            ));
            let target_power = (multiplicity - 1) as f64;
            let p_err = (fit.log_power_hat - target_power).abs();
            report.push(check(
                "sublevel_log_power",
                "wls-fit",
                cfg.sublevel.samples,
                cfg.seed,
                fit.log_power_hat,
                format!("|x - {target_power}| <= {}", tol.sublevel_log_power),
                p_err <= tol.sublevel_log_power,
            ));
            let mut csv = String::from("eps,measure,stderr\n");
            let mut iter = fit.points.iter();
            let mut next = iter.next();
            for &eps in &grid {
                match next {
                    Some(p) if p.eps == eps => {
                        csv.push_str(&format!("{},{},{}\n", p.eps, p.measure, p.stderr));
                        next = iter.next();
                    }
                    // dropped points: zero-measure estimates excluded from
                    // the fit but kept in the series
                    _ => csv.push_str(&format!("{eps},0,0\n")),
                }
            }
            write_text(dir, "sublevel.csv", &csv)?;
            extra_files.push("sublevel.csv".into());
            sublevel_value = serde_json::to_value(&fit)?;
        }
        Err(EstimateError::NotEnoughPoints { have, need }) => {
            budget_notes.push(format!(
                "sublevel fit has {have} usable points, needs {need}; raise samples or eps range"
            ));
        }
        Err(e) => return Err(e.into()),
    }

    // the two shell estimators on random dyadic rectangles
    let mut rect_rows: Vec<Value> = Vec::new();
    let mut worst_rel = 0.0f64;
    let mut used = 0usize;
    let mut rng = substream(cfg.seed, "cli-rects");
    for i in 0..cfg.rects.count {
        let j: Vec<i32> = (0..n).map(|_| rng.gen_range(1..=cfg.rects.j_max)).collect();
        let signs: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
        let rect = DyadicRect::new(j.clone(), signs.clone());
        let seed_i = cfg.seed.wrapping_add(i as u64);
        let mc = shell_power_integral_mc(b, delta0, &rect, cfg.rects.mc_samples, seed_i);
        let dist = shell_power_integral_distribution(
            b,
            delta0,
            &rect,
            &DistributionOptions::default(),
            seed_i,
        );
        let rel = (mc.value - dist.value).abs() / dist.value.abs().max(f64::MIN_POSITIVE);
        if !mc.high_variance && !dist.high_variance {
            worst_rel = worst_rel.max(rel);
            used += 1;
        }
        rect_rows.push(json!({
            "j": j, "signs": signs, "mc": mc, "distribution": dist, "rel_diff": rel,
        }));
    }
    if used == 0 {
        budget_notes.push("every rectangle estimate was high-variance; raise rect samples".into());
    } else {
        report.push(check(
            "shell_estimators_agree",
            "mc-vs-distribution",
            cfg.rects.mc_samples,
            cfg.seed,
            worst_rel,
            format!("<= {} on {used} rects", tol.estimator_agreement),
            worst_rel <= tol.estimator_agreement,
        ));
    }
    let first_rect = DyadicRect::positive(&vec![2; n]);
    let near_zero = near_zero_fraction(b, &np, &first_rect, 1e-3, cfg.rects.mc_samples, cfg.seed);

    // kernel-dependent checks; an inadmissible kernel skips them but the
    // measure-side results above stand on their own
    let mut decay_rows: Vec<Value> = Vec::new();
    let mut multiplier_value = Value::Null;
    let mut marcinkiewicz_rows: Vec<Value> = Vec::new();
    let mut operator_value = Value::Null;
    match Kernel::new(b.clone(), cfg.radius) {
        Err(e) => {
            skipped.push(json!({
                "name": "kernel-dependent checks",
                "reason": e.to_string(),
            }));
        }
        Ok(kernel) => {
            let mut engine = FourierEngine::new(&kernel, OscOptions::default());
            let min = kernel.min_level();

            // piece decay: low-frequency linear constant and envelope slope
            let mut js = vec![vec![min + 2; n]];
            if n >= 2 {
                let mut stag = vec![min + 2; n];
                stag[1] = min + 4;
                js.push(stag);
            }
            let mut c_small_max = 0.0f64;
            let mut rho_min = f64::INFINITY;
            let mut decay_ok = true;
            for j in &js {
                match verify_fourier_decay(&mut engine, j, &DecayOptions::default()) {
                    Ok(rep) => {
                        c_small_max = c_small_max.max(rep.c_small);
                        rho_min = rho_min.min(rep.rho_fit);
                        if decay_rows.is_empty() {
                            let mut csv = String::from("s,transform\n");
                            for (s, v) in &rep.samples {
                                csv.push_str(&format!("{s},{v}\n"));
                            }
                            write_text(dir, "decay.csv", &csv)?;
                            extra_files.push("decay.csv".into());
                        }
                        decay_rows.push(json!({
                            "j": j, "c_small": rep.c_small, "rho_fit": rep.rho_fit,
                        }));
                    }
                    Err(EstimateError::UnsupportedDimension { .. }) => {
                        decay_ok = false;
                        skipped.push(json!({
                            "name": "piece_decay",
                            "reason": format!("{n} variables not supported"),
                        }));
                        break;
                    }
                    Err(EstimateError::NotEnoughPoints { .. }) => {
                        decay_ok = false;
                        budget_notes
                            .push("decay envelope has too few octaves above noise".into());
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if decay_ok {
                report.push(check(
                    "piece_c_small",
                    "log-scan",
                    49,
                    cfg.seed,
                    c_small_max,
                    format!("<= {}", tol.c_small),
                    c_small_max <= tol.c_small,
                ));
                report.push(check(
                    "piece_decay_positive",
                    "octave-fit",
                    49,
                    cfg.seed,
                    rho_min,
                    "> 0".into(),
                    rho_min > 0.0,
                ));
            }

            // truncated multiplier sup across levels; the two-variable
            // symbol needs the level above the cutoff scale
            let mut levels = cfg.levels.clone();
            levels.sort_unstable();
            levels.dedup();
            let mut sym_levels = levels.clone();
            if n == 2 {
                sym_levels.retain(|&l| l >= engine.split_level());
            }
            let grid = if n <= 2 {
                xi_grid(n, 0.5, 512.0, 12, 3, cfg.seed)
            } else {
                Vec::new()
            };
            let mut sups: Vec<(i32, f64)> = Vec::new();
            let mut symbol_ok = n <= 2 && !sym_levels.is_empty();
            for &level in &sym_levels {
                if !symbol_ok {
                    break;
                }
                match multiplier_sup(&mut engine, level, &grid) {
                    Ok(s) => sups.push((level, s)),
                    Err(EstimateError::SymbolNeedsSeparable)
                    | Err(EstimateError::UnsupportedDimension { .. }) => {
                        symbol_ok = false;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if !symbol_ok || n > 2 {
                skipped.push(json!({
                    "name": "multiplier_and_marcinkiewicz",
                    "reason": if n > 2 {
                        format!("{n} variables not supported")
                    } else if sym_levels.is_empty() {
                        format!(
                            "every configured level sits below the cutoff scale {}",
                            engine.split_level()
                        )
                    } else {
                        "two-variable symbol needs a monomial polynomial".to_string()
                    },
                }));
            } else {
                let lo = sups.iter().map(|&(_, s)| s).fold(f64::INFINITY, f64::min);
                let hi = sups.iter().map(|&(_, s)| s).fold(0.0f64, f64::max);
                let spread = hi / lo - 1.0;
                report.push(check(
                    "multiplier_sup_stable_in_level",
                    "xi-grid-sup",
                    grid.len() as u64,
                    cfg.seed,
                    spread,
                    format!("<= {} across levels {sym_levels:?}", tol.stability),
                    spread <= tol.stability,
                ));
                let top = *sym_levels.last().expect("levels nonempty");
                let zero = engine.symbol(top, &vec![0; n], &vec![0.0; n])?.norm();
                report.push(check(
                    "multiplier_vanishes_at_zero",
                    "symbol",
                    1,
                    cfg.seed,
                    zero,
                    "= 0 exactly".into(),
                    zero == 0.0,
                ));
                let mut csv = String::from("level,sup\n");
                for &(l, s) in &sups {
                    csv.push_str(&format!("{l},{s}\n"));
                }
                write_text(dir, "multiplier.csv", &csv)?;
                extra_files.push("multiplier.csv".into());
                multiplier_value = json!({
                    "grid_points": grid.len(),
                    "sups": sups,
                    "zero_frequency": zero,
                });

                // derivative-weighted sups, same level stability
                let alphas: Vec<Vec<u32>> = if n == 1 {
                    vec![vec![1]]
                } else {
                    vec![vec![1, 0], vec![0, 1], vec![1, 1]]
                };
                for alpha in &alphas {
                    let mut asups: Vec<(i32, f64)> = Vec::new();
                    for &level in &sym_levels {
                        asups.push((level, marcinkiewicz_sup(&mut engine, level, alpha, &grid)?));
                    }
                    let lo = asups.iter().map(|&(_, s)| s).fold(f64::INFINITY, f64::min);
                    let hi = asups.iter().map(|&(_, s)| s).fold(0.0f64, f64::max);
                    let spread = hi / lo - 1.0;
                    let name = format!(
                        "marcinkiewicz_stable_alpha_{}",
                        alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join("")
                    );
                    report.push(check(
                        &name,
                        "weighted-sup",
                        grid.len() as u64,
                        cfg.seed,
                        spread,
                        format!("<= {} across levels {sym_levels:?}", tol.stability),
                        spread <= tol.stability,
                    ));
                    marcinkiewicz_rows.push(json!({ "alpha": alpha, "sups": asups }));
                }
                let mock = marcinkiewicz_sup(&mut engine, top, &vec![0; n], &grid)?;
                let plain = multiplier_sup(&mut engine, top, &grid)?;
                report.push(check(
                    "alpha_zero_matches_multiplier",
                    "weighted-sup",
                    grid.len() as u64,
                    cfg.seed,
                    (mock - plain).abs(),
                    "= 0 exactly".into(),
                    mock == plain,
                ));
            }

            // L2 operator harness on the feasible levels
            if n <= 2 {
                let oopts = OperatorOptions {
                    grid: cfg.operator.grid,
                    sigma: cfg.operator.sigma,
                };
                let mut results = Vec::new();
                let mut ratios: Vec<f64> = Vec::new();
                let mut agree = 0.0f64;
                let mut op_skipped: Vec<Value> = Vec::new();
                for &level in &levels {
                    match apply_operator(&kernel, level, &oopts) {
                        Ok(r) => {
                            agree = agree
                                .max((r.l2_out_space - r.l2_out_freq).abs() / r.l2_out_freq);
                            ratios.push(r.ratio());
                            results.push(r);
                        }
                        Err(e @ EstimateError::ResolutionTooCoarse { .. }) => {
                            op_skipped.push(json!({
                                "level": level,
                                "reason": e.to_string(),
                            }));
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                if results.is_empty() {
                    budget_notes.push(format!(
                        "operator grid {} resolves none of levels {levels:?}",
                        cfg.operator.grid
                    ));
                } else {
                    report.push(check(
                        "operator_norms_agree",
                        "fft-vs-plancherel",
                        (cfg.operator.grid * cfg.operator.grid) as u64,
                        cfg.seed,
                        agree,
                        "<= 1e-6 relative".into(),
                        agree <= 1e-6,
                    ));
                    if ratios.len() >= 2 {
                        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
                        let hi = ratios.iter().cloned().fold(0.0f64, f64::max);
                        let spread = hi / lo - 1.0;
                        report.push(check(
                            "operator_ratio_stable_in_level",
                            "fft",
                            (cfg.operator.grid * cfg.operator.grid) as u64,
                            cfg.seed,
                            spread,
                            format!("<= {}", tol.stability),
                            spread <= tol.stability,
                        ));
                    }
                    let mut csv = String::from("level,ratio,l2_in,l2_out_space,l2_out_freq\n");
                    for r in &results {
                        csv.push_str(&format!(
                            "{},{},{},{},{}\n",
                            r.level,
                            r.ratio(),
                            r.l2_in,
                            r.l2_out_space,
                            r.l2_out_freq
                        ));
                    }
                    write_text(dir, "operator.csv", &csv)?;
                    extra_files.push("operator.csv".into());
                }
                operator_value = json!({ "results": results, "skipped": op_skipped });
            } else {
                skipped.push(json!({
                    "name": "operator",
                    "reason": format!("{n} variables not supported"),
                }));
            }
        }
    }

    let pass = report.passed() && budget_notes.is_empty();
    let status = if !budget_notes.is_empty() {
        StageStatus::BudgetExhausted(budget_notes.join("; "))
    } else if !report.passed() {
        StageStatus::CheckFailure(failed_names(&report))
    } else {
        StageStatus::Pass
    };
    let value = json!({
        "schema": "singint.estimates/1",
        "poly": b.to_string(),
        "radius": cfg.radius,
        "seed": cfg.seed,
        "delta0": delta0,
        "multiplicity": multiplicity,
        "sublevel": sublevel_value,
        "rects": rect_rows,
        "near_zero_fraction_at_1e-3": near_zero,
        "decay": decay_rows,
        "multiplier": multiplier_value,
        "marcinkiewicz": marcinkiewicz_rows,
        "operator": operator_value,
        "checks": report.checks,
        "skipped": skipped,
        "budget_notes": budget_notes,
        "pass": pass,
    });
    Ok((value, status, extra_files))
}

