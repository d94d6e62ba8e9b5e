mod common;

use common::{
    curvature_direct, max_diff, random_spinor, random_unitary, spinor_laplacian_direct, vol_action,
};
use proptest::prelude::*;
use qrg_core::algebra::{Backend, Element};
use qrg_core::calculus::Calculus;
use qrg_core::linalg::CMat;
use qrg_core::presets::{params, preset, preset_default, Preset};
use qrg_core::spinor::{
    axiom_residual_blocks, clifford_check, clifford_residual_components, curvature_action,
    gauge_transform, spectrum, spinor_laplacian, Residual,
};
use qrg_core::SpinorBundle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const THETA: f64 = 0.7;

fn backends() -> [(Backend, Calculus); 2] {
    [
        (Backend::Matrix2, Calculus::matrix2()),
        (Backend::Torus { theta: THETA }, Calculus::torus(THETA)),
    ]
}

fn pair(seed: u64, backend: Backend) -> (Element, Element) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (
        Element::random(backend, 2, &mut rng),
        Element::random(backend, 2, &mut rng),
    )
}

fn scale_of(a: &Element, b: &Element) -> f64 {
    1.0 + a.norm() * b.norm() * 50.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn derivations_obey_leibniz(seed in any::<u64>()) {
        for (backend, calc) in backends() {
            let (a, b) = pair(seed, backend);
            let ab = &a * &b;
            let tol = 1e-12 * scale_of(&a, &b);
            for i in 0..2 {
                let lhs = ab.partial(i).unwrap();
                let rhs = &(&a.partial(i).unwrap() * &b) + &(&a * &b.partial(i).unwrap());
                prop_assert!((&lhs - &rhs).norm() < tol);
            }
            let (da, db, dab) = (calc.d0(&a).unwrap(), calc.d0(&b).unwrap(), calc.d0(&ab).unwrap());
            for i in 0..2 {
                let rhs = &(&da.0[i] * &b) + &(&a * &db.0[i]);
                prop_assert!((&dab.0[i] - &rhs).norm() < tol);
            }
        }
    }

    #[test]
    fn exterior_derivative_squares_to_zero(seed in any::<u64>()) {
        for (backend, calc) in backends() {
            let (a, _) = pair(seed, backend);
            let dda = calc.d1(&calc.d0(&a).unwrap()).unwrap();
            prop_assert!(dda.0.norm() < 1e-12 * (1.0 + a.norm() * 10.0));
        }
    }

    #[test]
    fn integral_is_a_trace(seed in any::<u64>()) {
        for (backend, _) in backends() {
            let (a, b) = pair(seed, backend);
            let tol = 1e-12 * scale_of(&a, &b);
            prop_assert!(((&a * &b).integral() - (&b * &a).integral()).norm() < tol);
            for i in 0..2 {
                prop_assert!(a.partial(i).unwrap().integral().norm() < 1e-12 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn star_is_an_antilinear_antimultiplicative_involution(seed in any::<u64>(), re in -3.0..3.0f64, im in -3.0..3.0f64) {
        let z = qrg_core::C64::new(re, im);
        for (backend, _) in backends() {
            let (a, b) = pair(seed, backend);
            let tol = 1e-12 * scale_of(&a, &b);
            prop_assert!((&a.star().star() - &a).norm() == 0.0);
            prop_assert!((&(&a * &b).star() - &(&b.star() * &a.star())).norm() < tol);
            prop_assert!((&a.scale(z).star() - &a.star().scale(z.conj())).norm() < tol);
            for i in 0..2 {
                prop_assert!((&a.partial(i).unwrap().star() - &a.star().partial(i).unwrap()).norm() < tol);
            }
        }
    }
}

/// Frobenius size of a residual block; conjugation by a unitary preserves it.
fn frobenius(r: &Residual) -> f64 {
    let s: f64 = r.scalars.iter().map(|z| z.norm_sqr()).sum();
    let e: f64 = r
        .elems
        .iter()
        .map(|e| match e {
            Element::Matrix2(m) => m.iter().map(|z| z.norm_sqr()).sum::<f64>(),
            Element::Torus(l) => l.terms().map(|(_, v)| v.norm_sqr()).sum(),
        })
        .sum();
    (s + e).sqrt()
}

fn gauge_cases() -> Vec<(Preset, Option<SpinorBundle>)> {
    let mut out = Vec::new();
    for name in [
        "m2_canonical",
        "m2_exJ2",
        "m2_ex41a",
        "m2_ex42a",
        "m2_alt_family",
        "torus_spectral",
        "torus_mass",
    ] {
        out.push((preset_default(name).unwrap(), None));
    }
    let broken = |name: &str, f: &dyn Fn(&mut SpinorBundle)| {
        let p = preset_default(name).unwrap();
        let mut b = p.bundle().clone();
        f(&mut b);
        (p, Some(b))
    };
    out.push(broken("m2_canonical", &|b| {
        b.j[(0, 1)] += qrg_core::C64::new(0.3, -0.2)
    }));
    out.push(broken("m2_exJ2", &|b| {
        b.c[0][(1, 0)] += qrg_core::C64::new(0.1, 0.4)
    }));
    out.push(broken("torus_spectral", &|b| {
        b.sigma_s[0][1][(0, 0)] += qrg_core::C64::new(0.5, 0.0)
    }));
    out
}

#[test]
fn residuals_and_spectra_are_gauge_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (p, override_bundle) in gauge_cases() {
        let b = override_bundle.unwrap_or_else(|| p.bundle().clone());
        let g = &p.geometry;
        let blocks = axiom_residual_blocks(&b, &g.connection, &g.calculus);
        let cl = clifford_residual_components(&b, &g.metric, &g.calculus, false).ok();
        let window = if matches!(b.backend, Backend::Torus { .. }) {
            2
        } else {
            0
        };
        let spec = spectrum(&b, window).unwrap();
        for _ in 0..50 {
            let u = random_unitary(b.ns(), &mut rng);
            let bu = gauge_transform(&b, &u).unwrap();
            let blocks_u = axiom_residual_blocks(&bu, &g.connection, &g.calculus);
            assert_eq!(blocks.len(), blocks_u.len());
            for (x, y) in blocks.iter().zip(&blocks_u) {
                assert_eq!(x.name, y.name);
                let (fx, fy) = (frobenius(x), frobenius(y));
                assert!(
                    (fx - fy).abs() < 1e-10 * (1.0 + fx),
                    "{} block {}: {fx} vs {fy}",
                    p.name,
                    x.name
                );
            }
            if let Some(cl) = &cl {
                let clu = clifford_residual_components(&bu, &g.metric, &g.calculus, false).unwrap();
                let n = |v: &[qrg_core::C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                assert!(
                    (n(cl) - n(&clu)).abs() < 1e-10 * (1.0 + n(cl)),
                    "{} clifford",
                    p.name
                );
            }
            let su = spectrum(&bu, window).unwrap();
            assert_eq!(spec.values.len(), su.values.len());
            let scale = 1.0 + spec.values.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if spec.hermitian {
                let mut unused = su.values.clone();
                for x in &spec.values {
                    let (k, d) = unused
                        .iter()
                        .enumerate()
                        .map(|(k, y)| (k, (x - y).norm()))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .unwrap();
                    assert!(
                        d < 1e-8 * scale,
                        "{} spectrum {x}: nearest is {d} away",
                        p.name
                    );
                    unused.swap_remove(k);
                }
            } else {
                // Individual eigenvalues in a Jordan cluster are ill conditioned;
                // the power sums determine the spectrum and are not.
                for k in 1..=spec.values.len() as i32 {
                    let ps =
                        |v: &[qrg_core::C64]| v.iter().map(|z| z.powi(k)).sum::<qrg_core::C64>();
                    let (a, c) = (ps(&spec.values), ps(&su.values));
                    assert!(
                        (a - c).norm() < 1e-8 * scale.powi(k),
                        "{} power sum {k}: {a} vs {c}",
                        p.name
                    );
                }
            }
        }
    }
}

fn oracle_presets() -> Vec<Preset> {
    vec![
        preset("m2_canonical", &params(&[("eps_prime", 1.0)])).unwrap(),
        preset("m2_canonical", &params(&[("eps_prime", -1.0)])).unwrap(),
        preset_default("m2_canonical_rotated").unwrap(),
        preset_default("m2_exJ2").unwrap(),
        preset_default("m2_ex41b").unwrap(),
        preset_default("m2_alt_family").unwrap(),
        preset_default("torus_general_spinor").unwrap(),
        preset_default("torus_extended").unwrap(),
        preset(
            "torus_spectral",
            &params(&[("eps", -1.0), ("d1", 0.3), ("d2", -0.4)]),
        )
        .unwrap(),
    ]
}

#[test]
fn expanded_spinor_laplacian_matches_direct_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for p in oracle_presets() {
        let b = p.bundle();
        let g = &p.geometry;
        for _ in 0..100 {
            let psi = random_spinor(b, 2, &mut rng);
            let scale = 1.0 + psi.iter().map(Element::norm).fold(0.0, f64::max);
            let lhs = spinor_laplacian(b, &g.connection, &g.metric, &psi);
            let rhs = spinor_laplacian_direct(b, &g.connection, &g.metric, &psi);
            let d = max_diff(&lhs, &rhs);
            assert!(d < 1e-10 * scale, "{}: {d}", p.name);
        }
    }
}

#[test]
fn expanded_curvature_action_matches_direct_composition() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut checked = 0;
    for p in oracle_presets() {
        let b = p.bundle();
        let g = &p.geometry;
        // The expanded form assumes a torsion free connection and the full Clifford relations.
        let Ok(rs) = curvature_action(b, &g.connection, &g.metric, &g.calculus) else {
            continue;
        };
        let cl = clifford_check(b, &g.metric, &g.calculus).unwrap();
        if cl.residual > 1e-12 {
            continue;
        }
        checked += 1;
        let vol: CMat = vol_action(b, &g.metric, &g.calculus, &cl.phi);
        for _ in 0..100 {
            let psi = random_spinor(b, 2, &mut rng);
            let scale = 1.0 + psi.iter().map(Element::norm).fold(0.0, f64::max);
            let lhs: Vec<Element> = (0..b.ns())
                .map(|d| {
                    let mut acc = Element::zero(b.backend);
                    for (gm, x) in psi.iter().enumerate() {
                        acc += &(x * &rs[(gm, d)]);
                    }
                    acc
                })
                .collect();
            let rhs = curvature_direct(b, &g.calculus, &vol, &psi);
            let d = max_diff(&lhs, &rhs);
            assert!(d < 1e-10 * scale, "{}: {d}", p.name);
        }
    }
    assert!(
        checked >= 4,
        "only {checked} presets satisfied the preconditions"
    );
}
