//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! numbers that decided it. Known failures are reported, never hidden; the
//! process exits 0 so that the rest of the test run is unaffected.

mod common;

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use qrg_core::algebra::{re, Backend, Element, C64};
use qrg_core::geometry::{curvature, ricci};
use qrg_core::linalg::{conj, identity, max_abs, pauli_d, CMat};
use qrg_core::presets::{
    alt_partial_hermiticity, clifford_commutator, params, preset, preset_default, Params, Preset,
};
use qrg_core::solver::layouts::{self, bundle_at, layout, sign_variants};
use qrg_core::solver::{
    build_residual, continue_family, dedup_gauge, multistart, norm, ContinuationOptions,
    MultistartOptions, MultistartReport, SolveProblem,
};
use qrg_core::spinor::{axiom_residuals, gauge_transform, hilbert_checks, spectrum, SpinorBundle};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Collects sub-check failures for one criterion.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn le(&mut self, what: &str, value: f64, tol: f64) {
        self.notes.push(format!("{what} {value:.2e} (< {tol:.0e})"));
        if !(value < tol) {
            self.failed
                .push(format!("{what} = {value:.3e} not < {tol:.0e}"));
        }
    }

    fn gt(&mut self, what: &str, value: f64, bound: f64) {
        self.notes
            .push(format!("{what} {value:.2e} (> {bound:.0e})"));
        if !(value > bound) {
            self.failed
                .push(format!("{what} = {value:.3e} not > {bound:.0e}"));
        }
    }

    fn ok(&mut self, what: &str, cond: bool) {
        if !cond {
            self.failed.push(what.to_string());
        }
    }

    fn within(&mut self, t: Duration, budget: f64) {
        self.le("runtime [s]", t.as_secs_f64(), budget);
    }

    fn finish(self) -> Outcome {
        if self.failed.is_empty() {
            outcome(true, self.notes.join("; "))
        } else {
            outcome(false, self.failed.join("; "))
        }
    }
}

fn expectation(p: &Preset, name: &str) -> f64 {
    p.evaluate_expectations()
        .into_iter()
        .find(|o| o.name == name)
        .map_or(f64::INFINITY, |o| o.value)
}

fn run(p: &SolveProblem, starts: usize, seed: u64) -> MultistartReport {
    multistart(
        p,
        &MultistartOptions {
            starts,
            seed,
            ..Default::default()
        },
    )
}

fn anticommutator(b: &SpinorBundle) -> CMat {
    &b.c[0] * &b.c[1] + &b.c[1] * &b.c[0]
}

fn named(p: &SolveProblem, x: &[f64], name: &str) -> f64 {
    x[p.free_index(name).unwrap()]
}

fn torus_triple() -> Outcome {
    let t0 = Instant::now();
    let mut c = Checks::default();
    for eps in [1.0, -1.0] {
        let p = preset("torus_spectral", &params(&[("eps", eps)])).unwrap();
        let r = p.verify(1e-12).unwrap().unwrap();
        c.le(&format!("axioms ε={eps}"), r.axioms.max(), 1e-12);
        let h = hilbert_checks(p.bundle(), p.window).unwrap();
        c.le(
            &format!("antihermitian defect ε={eps}"),
            h.dirac.antihermitian,
            1e-12,
        );
        c.le(&format!("J isometry ε={eps}"), h.j_isometry_sampled, 1e-12);
        let q = preset(
            "torus_spectral",
            &params(&[("eps", eps), ("d1", 0.3), ("d2", 0.3)]),
        )
        .unwrap();
        let hq = hilbert_checks(q.bundle(), q.window).unwrap();
        c.gt(
            &format!("defect with d=0.3 ε={eps}"),
            hq.dirac.antihermitian,
            0.1,
        );
    }
    c.within(t0.elapsed(), 1.0);
    c.finish()
}

fn torus_spectrum() -> Outcome {
    let t0 = Instant::now();
    let mut c = Checks::default();
    let n = 4;
    for eps in [1.0, -1.0] {
        let p = preset("torus_spectral", &params(&[("eps", eps)])).unwrap();
        let s = spectrum(p.bundle(), n).unwrap();
        c.ok("no leakage at the window edge", s.leaked_columns.is_empty());
        let oracle = common::torus_lattice_spectrum(n);
        c.ok("eigenvalue count", s.values.len() == oracle.len());
        let got = common::sorted_re(s.values.iter().map(|z| z.re).collect());
        let dev = got
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let imag = s.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        c.le(&format!("max deviation ε={eps}"), dev.max(imag), 1e-10);
        let mut mult_ok = true;
        for (v, k) in &s.multiplicities {
            let r2 = (v.re * v.re).round() as i32;
            let want = if r2 == 0 {
                2
            } else {
                common::lattice_count(n, r2)
            };
            mult_ok &= *k == want;
        }
        c.ok("lattice multiplicities", mult_ok);
    }
    c.within(t0.elapsed(), 5.0);
    c.finish()
}

fn torus_flatness() -> Outcome {
    let t0 = Instant::now();
    let mut c = Checks::default();
    for eps in [1, -1] {
        let p = layouts::torus_lemma32(1.0, eps);
        let rep = run(&p, 200, 32);
        let succ: Vec<_> = rep.successes().collect();
        c.ok("lemma system has solutions", !succ.is_empty());
        let worst_h = succ.iter().map(|r| norm(&r.x[..6])).fold(0.0, f64::max);
        c.le(
            &format!("max ‖h‖ over {} of 200 converged (ε={eps})", succ.len()),
            worst_h,
            1e-7,
        );
    }
    let p = layouts::torus_prop34(1.0, 1);
    let rep = run(&p, 60, 34);
    let mut worst: f64 = 0.0;
    let mut hs = Vec::new();
    for r in rep.successes() {
        let nb = &r.x[..8];
        let (h12, h21) = (nb[3], nb[4]);
        let b = bundle_at(&p, &r.x).unwrap();
        let s = b.constant_connection(1e-12).unwrap();
        let d1 = (s[0][(0, 0)] + s[0][(1, 1)]) / 2.0;
        let d2 = (s[1][(0, 0)] + s[1][(1, 1)]) / 2.0;
        let s1 = identity(2) * d1 - pauli_d(3) * C64::new(0.0, h21 / 2.0);
        let s2 = identity(2) * d2 + pauli_d(3) * C64::new(0.0, h12 / 2.0);
        worst = worst
            .max(max_abs(&(&s[0] - s1)))
            .max(max_abs(&(&s[1] - s2)));
        worst = worst.max(d1.im.abs()).max(d2.im.abs());
        hs.push([h12, h21]);
    }
    c.ok("extended system has solutions", hs.len() > 10);
    c.le("S_i vs closed form", worst, 1e-8);
    let m = DMatrix::from_fn(hs.len(), 2, |r, k| hs[r][k]);
    let smallest = m.svd(false, false).singular_values.min();
    c.gt(
        "spread of (h12, h21) in the weakest direction",
        smallest,
        1e-2,
    );
    c.within(t0.elapsed(), 60.0);
    c.finish()
}

fn levi(i: usize, j: usize) -> f64 {
    match (i, j) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    }
}

fn m2_standard() -> Outcome {
    let t0 = Instant::now();
    let mut c = Checks::default();
    for mu in [-1.0, 0.0, 0.5] {
        let p = preset("m2_standard_qlc", &params(&[("mu", mu)])).unwrap();
        let g = &p.geometry;
        let rho = curvature(&g.connection, &g.calculus).unwrap();
        let scalar = |z: f64| Element::scalar(Backend::Matrix2, re(z));
        let mut dr: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                dr = dr.max((&rho[i][j] - &scalar(-mu * levi(i, j))).norm());
            }
        }
        let (ric, s) = ricci(&rho, &g.metric);
        let mut dric: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let want = Element::scalar(Backend::Matrix2, g.metric.g[(i, j)] * (mu / 2.0));
                dric = dric.max((&ric[i][j] - &want).norm());
            }
        }
        c.le(&format!("μ={mu}: R"), dr, 1e-12);
        c.le(&format!("μ={mu}: Ricci"), dric, 1e-12);
        c.le(&format!("μ={mu}: S"), (&s - &scalar(-mu)).norm(), 1e-12);
    }
    c.within(t0.elapsed(), 1.0);
    c.finish()
}

fn m2_canonical() -> Outcome {
    let mut c = Checks::default();
    for ep in [1.0, -1.0] {
        let p = preset("m2_canonical", &params(&[("eps_prime", ep)])).unwrap();
        let r = p.verify(1e-12).unwrap().unwrap();
        c.le(&format!("local residuals ε′={ep}"), r.axioms.max(), 1e-12);
        c.le(
            &format!("D̸ antihermitian ε′={ep}"),
            r.hilbert.dirac.antihermitian,
            1e-12,
        );
        c.le(
            &format!("γ hermitian ε′={ep}"),
            r.hilbert.gamma_hermitian.unwrap_or(f64::INFINITY),
            1e-12,
        );
        let rot = preset("m2_canonical_rotated", &params(&[("eps_prime", ep)])).unwrap();
        c.le(
            &format!("rotation to the printed data ε′={ep}"),
            expectation(&rot, "rotated_data"),
            1e-12,
        );
        let b = gauge_transform(p.bundle(), &qrg_core::presets::rotation_u()).unwrap();
        c.le(
            &format!("rotated bundle matches ε′={ep}"),
            max_abs(&(&b.c[0] - &rot.bundle().c[0])).max(max_abs(&(&b.j - &rot.bundle().j))),
            1e-12,
        );
    }
    c.finish()
}

fn lichnerowicz() -> Outcome {
    let t0 = Instant::now();
    let mut c = Checks::default();
    for ep in [1.0, -1.0] {
        let p = preset("m2_canonical", &params(&[("eps_prime", ep)])).unwrap();
        for name in [
            "phi",
            "curvature_action",
            "spinor_laplacian",
            "dirac_squared",
            "lichnerowicz",
        ] {
            c.le(&format!("{name} ε′={ep}"), expectation(&p, name), 1e-12);
        }
    }
    let t = preset_default("torus_spectral").unwrap();
    c.le("torus identity", expectation(&t, "lichnerowicz"), 1e-12);
    c.within(t0.elapsed(), 1.0);
    c.finish()
}

fn thm42() -> Outcome {
    let mut c = Checks::default();
    let p = layout("m2_thm42", &Params::new()).unwrap();
    let rep = run(&p, 100, 42);
    let succ: Vec<_> = rep.successes().collect();
    c.ok("at least one start converges", !succ.is_empty());
    let (mut mu, mut form, mut det, mut unit): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for r in &succ {
        mu = mu.max(r.x[0].abs());
        let b = bundle_at(&p, &r.x).unwrap();
        let k = clifford_commutator(&b.c);
        let ki = k.clone().try_inverse().unwrap();
        let mut zeta = CMat::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let z = &b.sigma_s[i][j] * &ki;
                zeta[(i, j)] = z.trace() / 2.0;
                form = form.max(max_abs(&(&z - identity(2) * zeta[(i, j)])));
            }
        }
        let kd = k.determinant();
        det = det.max((zeta.determinant() + 1.0 / (kd * kd)).norm());
        unit = unit.max(max_abs(&(conj(&zeta) * &zeta - identity(2))));
    }
    c.le(
        &format!("max |μ| over {} of 100 converged", succ.len()),
        mu,
        1e-7,
    );
    c.le("σ_S = ζ[C¹,C²]", form, 1e-7);
    c.le("det ζ + 1/det[C¹,C²]²", det, 1e-7);
    c.le("ζ̄ζ - id", unit, 1e-7);
    c.finish()
}

fn examples() -> Outcome {
    let mut c = Checks::default();
    let solved = |name: &str, ep: f64, seed: u64| {
        let p = layout(name, &params(&[("eps_prime", ep)])).unwrap();
        let rep = run(&p, 60, seed);
        let xs: Vec<Vec<f64>> = rep.successes().map(|r| r.x.clone()).collect();
        let bundles: Vec<SpinorBundle> = xs.iter().map(|x| bundle_at(&p, x).unwrap()).collect();
        let clusters = dedup_gauge(&bundles, 1e-6);
        (p, xs, bundles, clusters)
    };

    let (p, xs, bundles, clusters) = solved("m2_ex41", 1.0, 41);
    c.ok("Ex 4.1(a) found", !clusters.is_empty());
    let mut worst: f64 = 0.0;
    for cl in &clusters {
        let b = &bundles[cl.representative];
        worst = worst.max(norm(&build_residual(&p, &xs[cl.representative]).unwrap()));
        for m in &b.c {
            worst = worst.max(m.determinant().norm());
        }
        worst = worst.max((clifford_commutator(&b.c).determinant() + 1.0).norm());
        worst = worst.max(max_abs(&(anticommutator(b) + identity(2))));
    }
    c.le(
        &format!("Ex 4.1(a) defects over {} clusters", clusters.len()),
        worst,
        1e-8,
    );

    let mut worst: f64 = 0.0;
    let mut found = 0;
    for ep in [1.0, -1.0] {
        let (p, xs, bundles, clusters) = solved("m2_ex42", ep, 42);
        found += clusters.len();
        for cl in &clusters {
            let x = &xs[cl.representative];
            worst = worst.max(norm(&build_residual(&p, x).unwrap()));
            worst = worst.max(max_abs(&anticommutator(&bundles[cl.representative])));
            worst = worst.max(((named(&p, x, "c1") - named(&p, x, "c3")).abs() - 1.0).abs());
        }
    }
    c.ok("Ex 4.2(a) found", found > 0);
    c.le(
        &format!("Ex 4.2(a) |x−y| = 1 defects over {found} clusters"),
        worst,
        1e-8,
    );

    let mut worst: f64 = 0.0;
    let mut found = 0;
    for ep in [1.0, -1.0] {
        let (p, xs, bundles, clusters) = solved("m2_exj2", ep, 43);
        found += clusters.len();
        for cl in &clusters {
            worst = worst.max(norm(&build_residual(&p, &xs[cl.representative]).unwrap()));
            worst = worst.max(max_abs(&anticommutator(&bundles[cl.representative])));
        }
    }
    c.ok("Ex 4.3 found", found > 0);
    c.le(
        &format!("Ex 4.3 anticommutator over {found} clusters"),
        worst,
        1e-8,
    );
    c.finish()
}

fn appendix_no_solution() -> Outcome {
    let mut c = Checks::default();
    let variants = sign_variants("appendix_full_clifford", &Params::new());
    let per = 1000 / variants.len();
    let mut best = f64::INFINITY;
    let mut successes = 0;
    let mut total = 0;
    for (k, v) in variants.iter().enumerate() {
        let p = layout("appendix_full_clifford", v).unwrap();
        let rep = run(&p, per, 900 + k as u64);
        best = best.min(rep.best_residual());
        successes += rep.successes().count();
        total += rep.starts;
    }
    c.ok("1000 starts", total == 1000);
    c.ok(&format!("{successes} starts converged"), successes == 0);
    c.gt(&format!("best residual over {total} starts"), best, 1e-2);
    c.finish()
}

fn appendix_family() -> Outcome {
    let mut c = Checks::default();
    let mut worst_axiom: f64 = 0.0;
    let mut worst_rho: f64 = 0.0;
    let mut bad = Vec::new();
    for s in [0.6, 1.0, 1.4] {
        for t in [0.6, 1.0, 1.4] {
            for x in [0.0, 0.35] {
                let p = preset(
                    "m2_alt_family",
                    &params(&[("s", s), ("t", t), ("x", x), ("y", 0.2)]),
                )
                .unwrap();
                let g = &p.geometry;
                let a = axiom_residuals(p.bundle(), &g.connection, &g.calculus).max();
                if a >= 1e-12 {
                    bad.push(format!("({s},{t},{x})"));
                }
                worst_axiom = worst_axiom.max(a);
                worst_rho = worst_rho.max(expectation(&p, "rho"));
            }
        }
    }
    c.le("1+ρ² identity and curvature", worst_rho, 1e-12);
    c.le("local axioms over the (s,t,x) grid", worst_axiom, 1e-12);
    if !bad.is_empty() {
        c.failed.push(format!(
            "axioms fail at {} of 18 points, all with s ≠ t: {}",
            bad.len(),
            bad.join(" ")
        ));
    }
    c.finish()
}

fn appendix_predicates() -> Outcome {
    let mut c = Checks::default();
    let circle = |s: f64| (s, (2.0 - s * s).sqrt());
    let mut grid = Vec::new();
    for (s, t) in [circle(1.0), circle(0.6), circle(1.2)] {
        for x in [0.0, 0.3, -0.5, 0.8] {
            grid.push((s, t, x));
        }
    }
    for (s, t) in [(0.8f64, 1.3f64), (1.0, 2.0)] {
        let pred = s * (1.0 - 2.0 / (s * s + t * t)).sqrt();
        for x in [0.0, pred, -pred, 0.3] {
            grid.push((s, t, x));
        }
    }
    let mut mismatches = Vec::new();
    for &(s, t, x) in &grid {
        let p = preset("m2_alt_family", &params(&[("s", s), ("t", t), ("x", x)])).unwrap();
        let (h1, h2) = alt_partial_hermiticity(p.bundle()).unwrap();
        let n = s * s + t * t;
        let root = if n >= 2.0 {
            s * (1.0 - 2.0 / n).sqrt()
        } else {
            f64::NAN
        };
        let predicted = (x - root).abs() < 1e-12 || (x + root).abs() < 1e-12;
        let computed = h1.max(h2) < 1e-10;
        if predicted != computed {
            mismatches.push(format!("({s:.2},{t:.2},{x:.3}) defect {:.2e}", h1.max(h2)));
        }
        let gh = hilbert_checks(p.bundle(), 0)
            .unwrap()
            .gamma_hermitian
            .unwrap();
        if (x == 0.0) != (gh < 1e-10) {
            mismatches.push(format!("γ at ({s:.2},{t:.2},{x:.3}) defect {gh:.2e}"));
        }
        let on_circle = (n - 2.0).abs() < 1e-12 && x == 0.0;
        if on_circle && (h1.max(h2) >= 1e-12 || gh >= 1e-12) {
            mismatches.push(format!("circle point ({s:.2},{t:.2}) not hermitian"));
        }
    }
    c.ok("20 grid points", grid.len() == 20);
    if !mismatches.is_empty() {
        c.failed.push(format!(
            "predicate disagrees at {}: {}",
            mismatches.len(),
            mismatches.join(", ")
        ));
    } else {
        c.notes.push("all 20 grid points agree".into());
    }
    c.finish()
}

fn appendix_circle() -> Outcome {
    let mut c = Checks::default();
    let p = layouts::appendix_circle().pin("x", 0.0).pin("y", 0.0);
    match continue_family(
        &p,
        &[1.0, 1.0],
        "s",
        &ContinuationOptions {
            step: 0.04,
            ..Default::default()
        },
    ) {
        Ok(rep) => {
            c.ok("path has more than 8 points", rep.points.len() > 8);
            let dev = rep
                .points
                .iter()
                .map(|pt| (pt.x[0] * pt.x[0] + pt.x[1] * pt.x[1] - 2.0).abs())
                .fold(0.0, f64::max);
            c.le(
                &format!("|s²+t²−2| over {} points", rep.points.len()),
                dev,
                1e-7,
            );
        }
        Err(e) => c.failed.push(format!("continuation failed: {e}")),
    }
    c.finish()
}

fn property_suites() -> Outcome {
    // The property suites themselves live in tests/properties.rs; here the
    // oracle agreement is re-run at full size to report a number.
    use rand::SeedableRng;
    let t0 = Instant::now();
    let mut c = Checks::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
    let mut worst_lap: f64 = 0.0;
    for name in ["m2_canonical", "m2_exJ2", "torus_general_spinor"] {
        let p = preset_default(name).unwrap();
        let g = &p.geometry;
        for _ in 0..100 {
            let psi = common::random_spinor(p.bundle(), 2, &mut rng);
            let scale = 1.0 + psi.iter().map(Element::norm).fold(0.0, f64::max);
            let a = qrg_core::spinor::spinor_laplacian(p.bundle(), &g.connection, &g.metric, &psi);
            let b = common::spinor_laplacian_direct(p.bundle(), &g.connection, &g.metric, &psi);
            worst_lap = worst_lap.max(common::max_diff(&a, &b) / scale);
        }
    }
    c.le("□_S expanded vs direct (relative)", worst_lap, 1e-10);
    let mut worst_gauge: f64 = 0.0;
    let p = preset_default("m2_exJ2").unwrap();
    let base = spectrum(p.bundle(), 0).unwrap();
    for _ in 0..50 {
        let u = common::random_unitary(2, &mut rng);
        let b = gauge_transform(p.bundle(), &u).unwrap();
        let g = &p.geometry;
        worst_gauge = worst_gauge.max(axiom_residuals(&b, &g.connection, &g.calculus).max());
        let s = spectrum(&b, 0).unwrap();
        for k in 1..=s.values.len() as i32 {
            let ps = |v: &[C64]| v.iter().map(|z| z.powi(k)).sum::<C64>();
            worst_gauge =
                worst_gauge.max((ps(&s.values) - ps(&base.values)).norm() / 10f64.powi(k));
        }
    }
    c.le("gauge invariance over 50 unitaries", worst_gauge, 1e-10);
    c.within(t0.elapsed(), 300.0);
    c.finish()
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("1 torus spectral triple", torus_triple),
        ("2 torus spectrum", torus_spectrum),
        ("3 torus forced flatness", torus_flatness),
        ("4 M2 standard geometry", m2_standard),
        ("5 M2 canonical triple", m2_canonical),
        ("6 Lichnerowicz", lichnerowicz),
        ("7 forced μ = 0", thm42),
        ("8 example families", examples),
        ("9a full Clifford has no solution", appendix_no_solution),
        ("9b alternate family", appendix_family),
        ("9c hermiticity predicates", appendix_predicates),
        ("9d hermitian circle by continuation", appendix_circle),
        ("10 property suites", property_suites),
    ];
    let t0 = Instant::now();
    let mut passed = 0;
    for (name, f) in &criteria {
        let t = Instant::now();
        let o = f();
        passed += usize::from(o.pass);
        println!(
            "{} criterion {name} [{:.2}s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "{passed}/{} criteria pass in {:.1}s",
        criteria.len(),
        t0.elapsed().as_secs_f64()
    );
}
