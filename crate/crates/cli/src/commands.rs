use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64 as C64;
use qrg_core::geometry::Geometry;
use qrg_core::presets::{self, Bound, Params, Preset, REGISTRY};
use qrg_core::solver::layouts::{bundle_at, layout, layout_params, sign_variants, LAYOUTS};
use qrg_core::solver::{
    cluster_ids, dedup_gauge, invariants, multistart, LmOptions, MultistartOptions,
};
use qrg_core::spinor::{spectrum as dirac_spectrum, Signs, SpinorBundle};
use qrg_core::tol::{DEFAULT_TOL, FAMILY_ID, SOLVE_SUCCESS};
use qrg_core::verify::{verify as verify_bundle, VerificationReport};
use serde_json::{json, Value};

use crate::config::{build_inline, parse_param, ConfigError, Format, RunConfig};
use crate::{Common, ListArgs, SolveArgs};

type Outcome = Result<bool, ConfigError>;

fn fail<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn cj(z: C64) -> Value {
    json!([z.re, z.im])
}

fn params_json(p: &Params) -> Value {
    Value::Object(p.iter().map(|(k, v)| (k.clone(), cj(*v))).collect())
}

fn signs_json(s: Signs) -> Value {
    json!({ "eps": s.eps, "eps_prime": s.eps_prime, "eps_dprime": s.eps_dprime })
}

/// A finite float, or `null` in JSON.
fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn load(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn merged_params(
    base: &BTreeMap<String, crate::config::ComplexSpec>,
    cli: &[String],
) -> Result<Params, ConfigError> {
    let mut p: Params = base.iter().map(|(k, v)| (k.clone(), v.value())).collect();
    for arg in cli {
        let (k, v) = parse_param(arg)?;
        p.insert(k, v);
    }
    Ok(p)
}

fn positive(x: f64, what: &str) -> Result<f64, ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        fail(format!("{what} must be positive and finite, got {x}"))
    }
}

struct Output {
    path: Option<std::path::PathBuf>,
    format: Format,
}

impl Output {
    fn new(cfg: &RunConfig, path: Option<&Path>, format: Option<Format>) -> Self {
        Self {
            path: path
                .map(Path::to_path_buf)
                .or_else(|| cfg.output.path.as_ref().map(Into::into)),
            format: format.or(cfg.output.format).unwrap_or_default(),
        }
    }

    fn write(&self, text: &str) -> Result<(), ConfigError> {
        match &self.path {
            Some(p) => {
                std::fs::write(p, text).map_err(|e| ConfigError(format!("{}: {e}", p.display())))
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn records(&self, records: &[Value]) -> Result<(), ConfigError> {
        let mut text = String::new();
        for r in records {
            text.push_str(&r.to_string());
            text.push('\n');
        }
        self.write(&text)
    }

    fn csv(&self, header: &[String], rows: &[Vec<String>]) -> Result<(), ConfigError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| ConfigError(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| ConfigError(e.to_string()))?;
        self.write(&String::from_utf8_lossy(&bytes))
    }
}

enum Source {
    Preset(Box<Preset>),
    Inline(Box<Geometry>, Option<SpinorBundle>),
}

struct Setup {
    label: String,
    params: Params,
    source: Source,
    window: i32,
    tol: f64,
    out: Output,
}

impl Setup {
    fn geometry(&self) -> &Geometry {
        match &self.source {
            Source::Preset(p) => &p.geometry,
            Source::Inline(g, _) => g,
        }
    }

    fn bundle(&self) -> Option<&SpinorBundle> {
        match &self.source {
            Source::Preset(p) => p.bundle.as_ref(),
            Source::Inline(_, b) => b.as_ref(),
        }
    }
}

fn setup(c: &Common) -> Result<Setup, ConfigError> {
    let cfg = load(c.config.as_deref())?;
    if cfg.solver.is_some() {
        return fail("[solver] only applies to the solve command");
    }
    let name = c.preset.clone().or_else(|| cfg.preset.clone());
    let params = merged_params(&cfg.params, &c.params)?;
    let (label, source, default_window) = match (name, &cfg.inline) {
        (Some(_), Some(_)) => {
            return fail("give either a preset or an [inline] definition, not both")
        }
        (None, None) => {
            return fail("no preset given; use --preset NAME or a config with `preset` or [inline]")
        }
        (Some(name), None) => {
            let p = presets::preset(&name, &params).map_err(|e| ConfigError(e.to_string()))?;
            let w = p.window;
            (name, Source::Preset(Box::new(p)), w)
        }
        (None, Some(inline)) => {
            if !params.is_empty() {
                return fail("parameters only apply to presets");
            }
            let (g, b) = build_inline(inline)?;
            let w = if matches!(g.calculus.backend, qrg_core::Backend::Torus { .. }) {
                2
            } else {
                0
            };
            ("inline".to_string(), Source::Inline(Box::new(g), b), w)
        }
    };
    let window = c.truncation.or(cfg.truncation).unwrap_or(default_window);
    if window < 0 {
        return fail(format!("truncation must be non-negative, got {window}"));
    }
    let tol = positive(
        c.tol.or(cfg.tolerance.check).unwrap_or(DEFAULT_TOL),
        "tolerance",
    )?;
    let params = match &source {
        Source::Preset(p) => p.params.clone(),
        Source::Inline(..) => Params::new(),
    };
    let out = Output::new(&cfg, c.out.as_deref(), c.format);
    Ok(Setup {
        label,
        params,
        source,
        window,
        tol,
        out,
    })
}

struct Check {
    name: String,
    value: f64,
    tol: f64,
    pass: bool,
    /// Counts toward the exit code; the rest are reported for context.
    required: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, tol: f64, required: bool) -> Self {
        Self {
            name: name.into(),
            value,
            tol,
            pass: value <= tol,
            required,
        }
    }

    fn json(&self) -> Value {
        json!({
            "check": self.name,
            "value": num(self.value),
            "tol": self.tol,
            "pass": self.pass,
            "required": self.required,
        })
    }
}

fn report_checks(r: &VerificationReport, out: &mut Vec<Check>) {
    let tol = r.tol;
    for (name, v) in &r.axioms.entries {
        out.push(Check::below(format!("axiom.{name}"), *v, tol, true));
    }
    let cr = &r.connection;
    out.push(Check::below("connection.torsion", cr.torsion, tol, false));
    out.push(Check::below(
        "connection.cotorsion",
        cr.cotorsion,
        tol,
        false,
    ));
    out.push(Check::below(
        "connection.metric_compatibility",
        cr.metric_compatibility,
        tol,
        false,
    ));
    if let Some(s) = cr.star_preserving {
        out.push(Check::below("connection.star_preserving", s, tol, false));
    }
    if let Ok(c) = &r.clifford {
        out.push(Check::below("clifford.full", c.residual, tol, false));
        out.push(Check::below(
            "clifford.relaxed",
            c.relaxed_residual,
            tol,
            false,
        ));
    }
    if let Some(l) = &r.lichnerowicz {
        out.push(Check::below(
            "lichnerowicz",
            l.residual,
            tol,
            l.preconditions_met,
        ));
    }
    let h = &r.hilbert;
    out.push(Check::below(
        "dirac.antihermitian_defect",
        h.dirac.antihermitian,
        tol,
        false,
    ));
    out.push(Check::below(
        "dirac.hermitian_defect",
        h.dirac.hermitian,
        tol,
        false,
    ));
    if let Some(a) = &h.algebraic_dirac {
        out.push(Check::below(
            "dirac_algebraic.antihermitian_defect",
            a.antihermitian,
            tol,
            false,
        ));
        out.push(Check::below(
            "dirac_algebraic.hermitian_defect",
            a.hermitian,
            tol,
            false,
        ));
    }
    out.push(Check::below(
        "j_isometry.algebraic",
        h.j_isometry_algebraic,
        tol,
        false,
    ));
    out.push(Check::below(
        "j_isometry.sampled",
        h.j_isometry_sampled,
        tol,
        false,
    ));
    if let Some(g) = h.gamma_hermitian {
        out.push(Check::below("gamma.hermitian_defect", g, tol, false));
    }
    if let Some(g) = h.gamma_dirac_anticommute {
        out.push(Check::below("gamma.dirac_anticommutator", g, tol, false));
    }
}

pub fn verify(c: &Common) -> Outcome {
    let s = setup(c)?;
    let mut checks = Vec::new();
    let mut record = serde_json::Map::new();
    record.insert("kind".into(), json!("verification"));
    record.insert("source".into(), json!(s.label));
    record.insert("params".into(), params_json(&s.params));
    record.insert("truncation".into(), json!(s.window));
    record.insert("tol".into(), json!(s.tol));

    let report = match s.bundle() {
        Some(b) => Some(
            verify_bundle(s.geometry(), b, s.window, s.tol)
                .map_err(|e| ConfigError(e.to_string()))?,
        ),
        None => None,
    };
    match &report {
        Some(r) => {
            report_checks(r, &mut checks);
            let h = &r.hilbert;
            let reading = if r.dirac_antihermitian() {
                "antihermitian"
            } else if r.dirac_hermitian() {
                "hermitian"
            } else {
                "neither"
            };
            record.insert("realisation".into(), json!(r.realisation.as_str()));
            record.insert("even".into(), json!(r.even));
            record.insert("dirac".into(), json!(reading));
            record.insert(
                "signs".into(),
                json!({ "antihermitian_reading": signs_json(h.signs), "hermitian_reading": signs_json(h.hermitian_signs) }),
            );
            record.insert("leaked_columns".into(), json!(h.leaked_columns.len()));
            if let Ok(cl) = &r.clifford {
                record.insert("phi_derived".into(), json!(cl.phi_derived));
            }
            if let Some(l) = &r.lichnerowicz {
                record.insert(
                    "lichnerowicz".into(),
                    json!({
                        "residual": num(l.residual),
                        "tol": r.tol,
                        "applicable": l.preconditions_met,
                        "torsion": num(l.torsion),
                        "clifford_residual": num(l.clifford_residual),
                    }),
                );
            }
        }
        None => {
            // A bare geometry from an inline definition is judged as a connection.
            let required = matches!(s.source, Source::Inline(..));
            let cr = qrg_core::geometry::connection_report(
                &s.geometry().connection,
                &s.geometry().metric,
                &s.geometry().calculus,
                s.tol,
            );
            checks.push(Check::below(
                "connection.torsion",
                cr.torsion,
                s.tol,
                required,
            ));
            checks.push(Check::below(
                "connection.cotorsion",
                cr.cotorsion,
                s.tol,
                required,
            ));
            checks.push(Check::below(
                "connection.metric_compatibility",
                cr.metric_compatibility,
                s.tol,
                required,
            ));
            if let Some(v) = cr.star_preserving {
                checks.push(Check::below("connection.star_preserving", v, s.tol, false));
            }
            record.insert("realisation".into(), Value::Null);
        }
    }

    let mut expectations = Vec::new();
    if let Source::Preset(p) = &s.source {
        for o in p.evaluate_expectations() {
            expectations.push(json!({
                "name": o.name,
                "statement": o.statement,
                "value": num(o.value),
                "tol": o.tol,
                "bound": match o.bound { Bound::Below => "below", Bound::Above => "above" },
                "pass": o.pass,
            }));
            checks.push(Check {
                name: format!("expectation.{}", o.name),
                value: o.value,
                tol: o.tol,
                pass: o.pass,
                required: true,
            });
        }
        if let (Some(want), Some(r)) = (p.realisation, &report) {
            let hit = want == r.realisation;
            record.insert("expected_realisation".into(), json!(want.as_str()));
            checks.push(Check {
                name: "expectation.realisation".into(),
                value: if hit { 0.0 } else { 1.0 },
                tol: 0.0,
                pass: hit,
                required: true,
            });
        }
    }
    record.insert("expectations".into(), Value::Array(expectations));

    let pass = checks.iter().filter(|c| c.required).all(|c| c.pass)
        && report.as_ref().is_none_or(VerificationReport::passes);
    record.insert("checks".into(), checks.iter().map(Check::json).collect());
    record.insert("pass".into(), json!(pass));

    let failed: Vec<_> = checks.iter().filter(|c| c.required && !c.pass).collect();
    let class = report.as_ref().map_or("geometry only".to_string(), |r| {
        format!(
            "{}{}",
            r.realisation.as_str(),
            if r.even { ", even" } else { "" }
        )
    });
    eprintln!(
        "{}: {class}; {} checks, {} required failed",
        s.label,
        checks.len(),
        failed.len()
    );
    for f in &failed {
        eprintln!("  FAIL {} = {:.3e} (tol {:.1e})", f.name, f.value, f.tol);
    }

    match s.out.format {
        Format::Records => s.out.records(&[Value::Object(record)])?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        format!("{:e}", c.value),
                        format!("{:e}", c.tol),
                        c.pass.to_string(),
                    ]
                })
                .collect();
            s.out
                .csv(&["check", "value", "tol", "pass"].map(String::from), &rows)?;
        }
    }
    Ok(pass)
}

pub fn spectrum(c: &Common) -> Outcome {
    let s = setup(c)?;
    let Some(b) = s.bundle() else {
        return fail(format!("{} has no spinor bundle", s.label));
    };
    let spec = dirac_spectrum(b, s.window).map_err(|e| ConfigError(e.to_string()))?;
    let mut mult = Vec::with_capacity(spec.values.len());
    for (_, k) in &spec.multiplicities {
        mult.extend(std::iter::repeat_n(*k, *k));
    }
    let leaked = !spec.leaked_columns.is_empty();
    eprintln!(
        "{}: {} eigenvalues, {} distinct, truncation {}{}",
        s.label,
        spec.values.len(),
        spec.multiplicities.len(),
        s.window,
        if leaked {
            format!(
                ", {} columns leak out of the window",
                spec.leaked_columns.len()
            )
        } else {
            String::new()
        }
    );
    match s.out.format {
        Format::Records => {
            let mut records = vec![json!({
                "kind": "spectrum",
                "source": s.label,
                "params": params_json(&s.params),
                "truncation": s.window,
                "dimension": spec.values.len(),
                "hermitian": spec.hermitian,
                "leaked_columns": spec.leaked_columns,
                "multiplicity_tol": 1e-8,
            })];
            for (k, (z, m)) in spec.values.iter().zip(&mult).enumerate() {
                records.push(json!({
                    "kind": "eigenvalue", "index": k, "real": z.re, "imag": z.im, "multiplicity": m, "leaked": leaked,
                }));
            }
            s.out.records(&records)?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = spec
                .values
                .iter()
                .zip(&mult)
                .enumerate()
                .map(|(k, (z, m))| {
                    vec![
                        k.to_string(),
                        z.re.to_string(),
                        z.im.to_string(),
                        m.to_string(),
                        leaked.to_string(),
                    ]
                })
                .collect();
            s.out.csv(
                &["index", "real", "imag", "multiplicity", "leaked"].map(String::from),
                &rows,
            )?;
        }
    }
    Ok(true)
}

struct Solution {
    variant: Params,
    start: usize,
    residual: f64,
    iterations: usize,
    coordinates: Vec<(String, f64)>,
    bundle: SpinorBundle,
}

pub fn solve(a: &SolveArgs) -> Outcome {
    let c = &a.common;
    let cfg = load(c.config.as_deref())?;
    if cfg.inline.is_some() {
        return fail("solve works on layouts; [inline] is not accepted");
    }
    if c.truncation.is_some() || cfg.truncation.is_some() {
        return fail("truncation does not apply to solve");
    }
    let sc = cfg.solver.clone().unwrap_or_default();
    let name = c
        .preset
        .clone()
        .or_else(|| sc.layout.clone())
        .or_else(|| cfg.preset.clone())
        .ok_or_else(|| {
            ConfigError("no layout given; use --preset NAME or [solver] layout".into())
        })?;
    if layout_params(&name).is_none() {
        return fail(format!(
            "unknown layout '{name}'; known: {}",
            LAYOUTS.join(", ")
        ));
    }
    let mut base = cfg.params.clone();
    base.extend(sc.params.clone());
    let params = merged_params(&base, &c.params)?;

    let starts = a.starts.or(sc.starts).unwrap_or(100);
    let seed = a.seed.or(sc.seed).unwrap_or(0);
    let solve_tol = positive(
        c.tol.or(cfg.tolerance.solve).unwrap_or(SOLVE_SUCCESS),
        "solve tolerance",
    )?;
    let cluster_tol = positive(
        cfg.tolerance.cluster.unwrap_or(FAMILY_ID),
        "cluster tolerance",
    )?;
    let scale = positive(sc.scale.unwrap_or(1.0), "start scale")?;
    let mut lm = LmOptions {
        tol: solve_tol,
        ..LmOptions::default()
    };
    if let Some(m) = a.max_iter.or(sc.max_iter) {
        lm.max_iter = m;
    }
    let opts = MultistartOptions {
        starts,
        seed,
        scale,
        lm,
    };
    let out = Output::new(&cfg, c.out.as_deref(), c.format);

    let variants = sign_variants(&name, &params);
    let mut solutions = Vec::new();
    let mut best = f64::INFINITY;
    let mut names = Vec::new();
    for v in &variants {
        let problem = layout(&name, v).map_err(|e| ConfigError(e.to_string()))?;
        names = problem.coordinate_names();
        let report = multistart(&problem, &opts);
        best = best.min(report.best_residual());
        for r in report.successes() {
            let full = problem
                .expand(&r.x)
                .map_err(|e| ConfigError(e.to_string()))?;
            let bundle = bundle_at(&problem, &r.x).map_err(|e| ConfigError(e.to_string()))?;
            solutions.push(Solution {
                variant: v.clone(),
                start: r.index,
                residual: r.residual,
                iterations: r.iterations,
                coordinates: names.iter().cloned().zip(full).collect(),
                bundle,
            });
        }
    }
    let bundles: Vec<_> = solutions.iter().map(|s| s.bundle.clone()).collect();
    let clusters = dedup_gauge(&bundles, cluster_tol);
    let ids = cluster_ids(&clusters, bundles.len());

    let total = starts * variants.len();
    let certificate = (solutions.is_empty() && total > 0).then(|| {
        format!("no solution found under {total} starts with best residual {best:.3e} (seed {seed}, tol {solve_tol:.1e})")
    });
    eprintln!(
        "{name}: {} solutions in {} gauge classes from {total} starts over {} sign variants (seed {seed})",
        solutions.len(),
        clusters.len(),
        variants.len()
    );
    if let Some(cert) = &certificate {
        eprintln!("  {cert}");
    }

    match out.format {
        Format::Records => {
            let mut records: Vec<Value> = solutions
                .iter()
                .zip(&ids)
                .map(|(s, id)| {
                    json!({
                        "kind": "solution",
                        "layout": name,
                        "variant": params_json(&s.variant),
                        "seed": seed,
                        "start": s.start,
                        "residual": s.residual,
                        "tol": solve_tol,
                        "iterations": s.iterations,
                        "coordinates": s.coordinates.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
                        "invariants": invariants(&s.bundle).into_iter().map(cj).collect::<Vec<_>>(),
                        "cluster": id,
                    })
                })
                .collect();
            records.push(json!({
                "kind": "summary",
                "layout": name,
                "params": params_json(&params),
                "seed": seed,
                "starts": starts,
                "variants": variants.iter().map(params_json).collect::<Vec<_>>(),
                "solutions": solutions.len(),
                "clusters": clusters.len(),
                "cluster_tol": cluster_tol,
                "best_residual": num(best),
                "tol": solve_tol,
                "certificate": certificate,
            }));
            out.records(&records)?;
        }
        Format::Csv => {
            let mut header: Vec<String> = [
                "variant",
                "start",
                "seed",
                "residual",
                "iterations",
                "cluster",
            ]
            .map(String::from)
            .to_vec();
            header.extend(names.iter().cloned());
            let rows: Vec<Vec<String>> = solutions
                .iter()
                .zip(&ids)
                .map(|(s, id)| {
                    let variant = s
                        .variant
                        .iter()
                        .map(|(k, v)| format!("{k}={}", v.re))
                        .collect::<Vec<_>>()
                        .join(";");
                    let mut row = vec![
                        variant,
                        s.start.to_string(),
                        seed.to_string(),
                        format!("{:e}", s.residual),
                        s.iterations.to_string(),
                        id.to_string(),
                    ];
                    row.extend(s.coordinates.iter().map(|(_, v)| v.to_string()));
                    row
                })
                .collect();
            out.csv(&header, &rows)?;
        }
    }
    Ok(true)
}

pub fn presets_list(l: &ListArgs) -> Outcome {
    let out = Output::new(&RunConfig::default(), l.out.as_deref(), l.format);
    match out.format {
        Format::Records => {
            let mut records: Vec<Value> = REGISTRY
                .iter()
                .map(|i| {
                    json!({
                        "kind": "preset",
                        "name": i.name,
                        "summary": i.summary,
                        "params": i.params.iter().map(|p| json!({ "name": p.name, "default": cj(p.default), "real": p.real })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            for name in LAYOUTS {
                records.push(json!({ "kind": "layout", "name": name, "params": layout_params(name).unwrap_or(&[]) }));
            }
            out.records(&records)?;
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for i in REGISTRY {
                if i.params.is_empty() {
                    rows.push(vec![
                        "preset".into(),
                        i.name.into(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
                for p in i.params {
                    rows.push(vec![
                        "preset".into(),
                        i.name.into(),
                        p.name.into(),
                        p.default.re.to_string(),
                        p.default.im.to_string(),
                    ]);
                }
            }
            for name in LAYOUTS {
                let ps = layout_params(name).unwrap_or(&[]);
                if ps.is_empty() {
                    rows.push(vec![
                        "layout".into(),
                        name.into(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                }
                for p in ps {
                    rows.push(vec![
                        "layout".into(),
                        name.into(),
                        (*p).into(),
                        String::new(),
                        String::new(),
                    ]);
                }
            }
            out.csv(
                &["kind", "name", "param", "default_re", "default_im"].map(String::from),
                &rows,
            )?;
        }
    }
    Ok(true)
}
