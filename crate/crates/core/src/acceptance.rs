//! The nine acceptance criteria, shared by the integration test and the
//! CLI `selftest`. Every tolerance is a named constant below.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::borel::{bridge_identity_check, bridge_residual, convolution_residual, FormalSeries};
use crate::deformation::{CutoffProfile, DeformationField, FieldVariant, FlowMap};
use crate::error::Result;
use crate::geometry::{product_set, select_constants, smooth_waypoints, Path, SingularSet};
use crate::germ::{BranchTracker, Germ};
use crate::hadamard::{continue_hadamard, hadamard_principal, monodromy, trapezoid_circle, ContinuationOptions};

pub const RATIONAL_TOL: f64 = 1e-8;
pub const RATIONAL_TIME_LIMIT_S: f64 = 30.0;
pub const LOG_TOL: f64 = 1e-6;
pub const LI2_PRINCIPAL_TOL: f64 = 1e-8;
pub const LI2_PATH_TOL: f64 = 1e-6;
pub const LI2_MONODROMY_MIN: f64 = 0.1;
pub const LI2_PRINCIPAL_LOOP_TOL: f64 = 1e-8;
pub const FLOW_TOL: f64 = 1e-8;
pub const VARIANT_TOL: f64 = 1e-6;
pub const SPECTRAL_FACTOR: f64 = 4.0;
pub const SPECTRAL_FLOOR: f64 = 1e-12;
pub const BOREL_ORDER: usize = 20;
pub const SEED: u64 = 20_201_014;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Full,
    Reduced,
}

#[derive(Debug, Clone)]
pub struct AcceptanceConfig {
    pub scale: Scale,
    /// Initial node count for the continuation criteria.
    pub nodes: usize,
    /// Perturb `e₁` in the bridge check; the Borel criterion must then fail.
    pub inject_bridge_bug: bool,
}

impl AcceptanceConfig {
    pub fn new(scale: Scale) -> Self {
        AcceptanceConfig {
            scale,
            nodes: match scale {
                Scale::Full => 512,
                Scale::Reduced => 256,
            },
            inject_bridge_bug: false,
        }
    }

    fn count(&self, full: usize, reduced: usize) -> usize {
        match self.scale {
            Scale::Full => full,
            Scale::Reduced => reduced,
        }
    }

    fn options(&self, field: FieldVariant) -> ContinuationOptions {
        ContinuationOptions {
            n_nodes: self.nodes,
            field,
            ..ContinuationOptions::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {} ({}): {} [{:.2} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub const TITLES: [&str; 9] = [
    "rational oracle",
    "log oracle",
    "Li2 oracle",
    "flow invariants",
    "field-variant equivalence",
    "quadrature spectral decay",
    "Borel identities",
    "product-set enumeration",
    "constant selection",
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Rounded square around 1 from the basepoint 0.3, counterclockwise.
pub fn square_loop() -> Path {
    smooth_waypoints(
        &[c(0.3, 0.0), c(0.3, -0.5), c(1.7, -0.5), c(1.7, 0.5), c(0.3, 0.5), c(0.3, 0.0)],
        Some(0.1),
    )
    .expect("square fixture is valid")
}

fn geometric1() -> Arc<Germ> {
    Arc::new(Germ::geometric(c(1.0, 0.0)).expect("α = 1"))
}

fn log_f0() -> Arc<Germ> {
    Arc::new(Germ::log_f0())
}

/// The f, g pairs of criteria 1–3.
pub fn continuation_fixtures() -> Vec<(&'static str, Arc<Germ>, Arc<Germ>)> {
    vec![
        ("geometric(1) ⊙ geometric(1)", geometric1(), geometric1()),
        ("log_f0 ⊙ geometric(1)", log_f0(), geometric1()),
        ("log_f0 ⊙ log_f0", log_f0(), log_f0()),
    ]
}

fn tracker_along(germ: Germ, path: &Path) -> Result<Complex64> {
    let g = Arc::new(germ);
    let mut t = BranchTracker::init(&g, path.start())?;
    t.follow_path(path)
}

type Outcome = Result<(bool, String)>;

fn criterion_1(cfg: &AcceptanceConfig) -> Outcome {
    let start = Instant::now();
    let r = continue_hadamard(&geometric1(), &geometric1(), &square_loop(), &cfg.options(FieldVariant::Cutoff))?;
    let secs = start.elapsed().as_secs_f64();
    let err = (r.value - c(10.0 / 7.0, 0.0)).norm();
    Ok((
        err < RATIONAL_TOL && secs < RATIONAL_TIME_LIMIT_S,
        format!(
            "|value − 10/7| = {err:.3e} (< {RATIONAL_TOL:e}), {secs:.2} s at {} initial nodes (< {RATIONAL_TIME_LIMIT_S} s), {} final nodes",
            cfg.nodes, r.diagnostics.node_count
        ),
    ))
}

fn criterion_2(cfg: &AcceptanceConfig) -> Outcome {
    let path = square_loop();
    let r = continue_hadamard(&log_f0(), &geometric1(), &path, &cfg.options(FieldVariant::Cutoff))?;
    let oracle = tracker_along(Germ::log_f0(), &path)?;
    let closed = c(-(0.7f64).ln(), -2.0 * PI);
    let err = (r.value - oracle).norm();
    let err_closed = (oracle - closed).norm();
    Ok((
        err < LOG_TOL && err_closed < LOG_TOL,
        format!("|value − tracker| = {err:.3e}, |tracker − (−log 0.7 − 2πi)| = {err_closed:.3e} (< {LOG_TOL:e})"),
    ))
}

fn criterion_3(cfg: &AcceptanceConfig) -> Outcome {
    let path = square_loop();
    let (f, g) = (log_f0(), log_f0());
    let opts = cfg.options(FieldVariant::Cutoff);

    let xi = c(0.5, 0.0);
    let principal = hadamard_principal(&f, &g, xi, None, 64)?;
    let exact = PI * PI / 12.0 - LN_2 * LN_2 / 2.0;
    let err_a = (principal - c(exact, 0.0)).norm();

    let r = continue_hadamard(&f, &g, &path, &opts)?;
    let oracle = tracker_along(Germ::li2(), &path)?;
    let err_b = (r.value - oracle).norm();

    let base = c(0.3, 0.0);
    let after_one = monodromy(&f, &g, base, c(0.0, 0.0), Some(&path), 1, &opts)?;
    let principal_loop = monodromy(&f, &g, base, c(0.0, 0.0), None, 1, &opts)?;
    let jump = after_one.difference.norm();
    let flat = principal_loop.difference.norm();
    Ok((
        err_a < LI2_PRINCIPAL_TOL && err_b < LI2_PATH_TOL && jump > LI2_MONODROMY_MIN && flat < LI2_PRINCIPAL_LOOP_TOL,
        format!(
            "(a) {err_a:.3e} (< {LI2_PRINCIPAL_TOL:e}); (b) {err_b:.3e} (< {LI2_PATH_TOL:e}); \
             (c) loop around 0 after loop around 1 changes by {jump:.6} (> {LI2_MONODROMY_MIN}), \
             on the principal branch by {flat:.3e} (< {LI2_PRINCIPAL_LOOP_TOL:e})"
        ),
    ))
}

/// Paths and singular sets for the flow-invariant checks.
pub fn flow_fixtures() -> Vec<(&'static str, Path, SingularSet, SingularSet)> {
    let one = || SingularSet::finite([c(1.0, 0.0)]);
    vec![
        ("square, A = B = {1}", square_loop(), one(), one()),
        (
            "circle |ξ − 0.5| = 0.2, A = B = {1}",
            Path::circle(c(0.5, 0.0), c(0.3, 0.0), 1.0).expect("circle"),
            one(),
            one(),
        ),
        (
            "square, A = {1, 2i}, B = {1, −1.5}",
            square_loop(),
            SingularSet::finite([c(1.0, 0.0), c(0.0, 2.0)]),
            SingularSet::finite([c(1.0, 0.0), c(-1.5, 0.0)]),
        ),
    ]
}

fn criterion_4(cfg: &AcceptanceConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let samples = cfg.count(20, 5);
    let variants = [
        (FieldVariant::Cutoff, CutoffProfile::Smoothstep, "cutoff"),
        (FieldVariant::FiniteB, CutoffProfile::Smoothstep, "finiteb"),
        (FieldVariant::Cutoff, CutoffProfile::Linear, "cutoff/linear"),
    ];
    let mut worst_pin = 0.0_f64;
    let mut worst_track = 0.0_f64;
    let mut worst_comp = 0.0_f64;
    for (_, path, a, b) in flow_fixtures() {
        for (variant, profile, _) in variants {
            let field = DeformationField::new(variant, &path, &a, &b, profile)?;
            let rho = field.constants().rho;
            let flow = FlowMap::new(field);
            let alphas: Vec<Complex64> = a.finite_points().unwrap_or_default();
            let betas: Vec<Complex64> = b.finite_points().unwrap_or_default();
            for _ in 0..samples {
                let t: f64 = rng.random();
                let s: f64 = rng.random::<f64>() * t;
                for &alpha in &alphas {
                    let moved = flow.flow(0.0, t, alpha)?;
                    worst_pin = worst_pin.max((moved - alpha).norm() / alpha.norm());
                }
                for &beta in &betas {
                    let start = path.eval(0.0) / beta;
                    let want = path.eval(t) / beta;
                    let got = flow.flow(0.0, t, start)?;
                    worst_track = worst_track.max((got - want).norm() / want.norm());
                }
                let z = Complex64::from_polar(rho, rng.random::<f64>() * 2.0 * PI);
                let direct = flow.flow(0.0, t, z)?;
                let composed = flow.flow(s, t, flow.flow(0.0, s, z)?)?;
                worst_comp = worst_comp.max((direct - composed).norm() / direct.norm().max(1.0));
            }
        }
    }
    Ok((
        worst_pin < FLOW_TOL && worst_track < FLOW_TOL && worst_comp < FLOW_TOL,
        format!(
            "{} fixtures × 3 fields × {samples} t: pins {worst_pin:.2e}, tracked pins {worst_track:.2e}, composition {worst_comp:.2e} (< {FLOW_TOL:e})",
            flow_fixtures().len()
        ),
    ))
}

fn criterion_5(cfg: &AcceptanceConfig) -> Outcome {
    let path = square_loop();
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    for (name, f, g) in continuation_fixtures() {
        let a = continue_hadamard(&f, &g, &path, &cfg.options(FieldVariant::Cutoff))?;
        let b = continue_hadamard(&f, &g, &path, &cfg.options(FieldVariant::FiniteB))?;
        let d = (a.value - b.value).norm();
        worst = worst.max(d);
        parts.push(format!("{name}: {d:.2e}"));
    }
    Ok((worst < VARIANT_TOL, format!("{} (< {VARIANT_TOL:e})", parts.join(", "))))
}

fn criterion_6(_cfg: &AcceptanceConfig) -> Outcome {
    let f = geometric1();
    let xi = square_loop().start();
    let rho = select_constants(&square_loop(), f.singular_set(), f.singular_set())?.rho;
    let exact = c(1.0, 0.0) / (c(1.0, 0.0) - xi);
    let errs: Vec<f64> = [128, 256, 512]
        .iter()
        .map(|&n| trapezoid_circle(&f, &f, xi, rho, n).map(|v| (v - exact).norm()))
        .collect::<Result<_>>()?;
    let ok = errs
        .windows(2)
        .all(|w| w[0] < SPECTRAL_FLOOR || w[1] * SPECTRAL_FACTOR <= w[0]);
    let coarse: Vec<String> = [4, 8, 16, 32]
        .iter()
        .map(|&n| trapezoid_circle(&f, &f, xi, rho, n).map(|v| format!("{n}: {:.1e}", (v - exact).norm())))
        .collect::<Result<_>>()?;
    Ok((
        ok,
        format!(
            "errors at 128/256/512 = {:.1e}/{:.1e}/{:.1e} (×{SPECTRAL_FACTOR} per doubling or < {SPECTRAL_FLOOR:e}); coarse {}",
            errs[0],
            errs[1],
            errs[2],
            coarse.join(", ")
        ),
    ))
}

fn random_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let n: i64 = rng.random_range(-20..=20);
    let d: i64 = rng.random_range(1..=12);
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn random_series(rng: &mut ChaCha8Rng, order: usize) -> FormalSeries<BigRational> {
    FormalSeries::from_fn(1, order, |_| random_rational(rng))
}

fn criterion_7(cfg: &AcceptanceConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let pairs = cfg.count(100, 20);
    let n = BOREL_ORDER;
    let mut kernel = FormalSeries::<BigRational>::e1(n + 1);
    if cfg.inject_bridge_bug {
        let mut cs = kernel.coeffs().to_vec();
        cs[3] = cs[3].clone() + BigRational::new(BigInt::from(1), BigInt::from(1_000_000));
        kernel = FormalSeries::new(cs, 1);
    }
    let mut bridge_bad = 0;
    let mut conv_bad = 0;
    for _ in 0..pairs {
        let f = random_series(&mut rng, n + 1);
        let g = random_series(&mut rng, n + 1);
        let r = if cfg.inject_bridge_bug {
            bridge_residual(&f, &g, &kernel, n)?
        } else {
            bridge_identity_check(&f, &g, n)?
        };
        if r != 0.0 {
            bridge_bad += 1;
        }
        if convolution_residual(&f, &g, n)? != 0.0 {
            conv_bad += 1;
        }
    }
    Ok((
        bridge_bad == 0 && conv_bad == 0,
        format!(
            "{pairs} random rational pairs to order {n}: bridge residual nonzero in {bridge_bad}, convolution residual nonzero in {conv_bad}"
        ),
    ))
}

/// `{0} ∪ {αβ : |αβ| ≤ r}` by the definition, sorted lexicographically.
fn brute_product(a: &[Complex64], b: &[Complex64], r: f64) -> Vec<Complex64> {
    let mut out = vec![c(0.0, 0.0)];
    for x in a.iter().filter(|x| x.norm() > 0.0) {
        for y in b.iter().filter(|y| y.norm() > 0.0) {
            let w = x * y;
            if w.norm() <= r {
                out.push(w);
            }
        }
    }
    sort_lex(&mut out);
    out.dedup();
    out
}

fn sort_lex(v: &mut [Complex64]) {
    // IEEE comparison, so that −0 and 0 tie.
    v.sort_by(|p, q| p.re.partial_cmp(&q.re).unwrap().then(p.im.partial_cmp(&q.im).unwrap()));
}

fn criterion_8(cfg: &AcceptanceConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let trials = cfg.count(50, 20);
    let mut mismatches = 0;
    for _ in 0..trials {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
            let k = rng.random_range(1..=8);
            (0..k)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        c(0.0, 0.0)
                    } else {
                        // Small integer lattice points make exact ties likely.
                        c(rng.random_range(-4..=4) as f64 * 0.5, rng.random_range(-4..=4) as f64 * 0.5)
                    }
                })
                .collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        let r = rng.random_range(0.25..6.0);
        let mut got = product_set(&SingularSet::finite(a.iter().copied()), &SingularSet::finite(b.iter().copied())).enumerate(r);
        sort_lex(&mut got);
        if got != brute_product(&a, &b, r) {
            mismatches += 1;
        }
    }
    let n_ge_1 = SingularSet::progression(c(1.0, 0.0), c(1.0, 0.0))?;
    let pm1 = SingularSet::finite([c(1.0, 0.0), c(-1.0, 0.0)]);
    let mut lattice = product_set(&n_ge_1, &pm1).enumerate(2.5);
    sort_lex(&mut lattice);
    let want = brute_product(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], &[c(1.0, 0.0), c(-1.0, 0.0)], 2.5);
    let lattice_ok = lattice == want && want.len() == 5;
    Ok((
        mismatches == 0 && lattice_ok,
        format!(
            "{mismatches}/{trials} random finite pairs differ from brute force; {{n ≥ 1}}·{{±1}} in |ω| ≤ 2.5 gives {} points ({})",
            lattice.len(),
            if lattice_ok { "matches {0, ±1, ±2}" } else { "mismatch" }
        ),
    ))
}

fn criterion_9(cfg: &AcceptanceConfig) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let wanted = cfg.count(100, 25);
    let mut valid = 0;
    let mut attempts = 0;
    let mut failures = Vec::new();
    while valid < wanted && attempts < 100 * wanted {
        attempts += 1;
        let pick = |rng: &mut ChaCha8Rng, k: usize| -> Vec<Complex64> {
            (0..k)
                .map(|_| Complex64::from_polar(rng.random_range(0.5..3.0), rng.random_range(0.0..2.0 * PI)))
                .collect()
        };
        let (ka, kb) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let a = pick(&mut rng, ka);
        let b = pick(&mut rng, kb);
        let ab = a.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min)
            * b.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min);
        let g0 = Complex64::from_polar(rng.random_range(0.05..0.95) * ab, rng.random_range(0.0..2.0 * PI));
        let mut pts = vec![g0];
        for _ in 0..rng.random_range(1..=4) {
            pts.push(Complex64::from_polar(rng.random_range(0.1..3.0), rng.random_range(0.0..2.0 * PI)));
        }
        let rounding = rng.random_range(0.0..0.3);
        let Ok(path) = smooth_waypoints(&pts, Some(rounding)) else { continue };
        let (sa, sb) = (SingularSet::finite(a.iter().copied()), SingularSet::finite(b.iter().copied()));
        let Ok(k) = select_constants(&path, &sa, &sb) else { continue };
        valid += 1;
        if let Err(e) = k.check() {
            failures.push(e);
            continue;
        }
        // Independent sampling of |γ| and the distance to Ω.
        let omega: Vec<Complex64> = brute_product(&a, &b, 2.0 * k.m + 1.0);
        for j in 0..=2000 {
            let z = path.eval(j as f64 / 2000.0);
            let dist = omega.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            if z.norm() < k.delta - 1e-12 || z.norm() > k.m + 1e-12 || dist < k.delta - 1e-12 {
                failures.push(format!("sample {j}: |γ| = {}, dist = {dist}, δ = {}, M = {}", z.norm(), k.delta, k.m));
                break;
            }
        }
        let g0n = path.start().norm();
        if !(g0n / k.b < k.rho && k.rho < k.a && k.epsilon < k.a / 2.0 && k.a * k.delta / k.epsilon > k.m + 2.0 * k.m / k.a * k.epsilon) {
            failures.push("direct inequality check failed".into());
        }
    }
    Ok((
        valid == wanted && failures.is_empty(),
        format!(
            "{valid} valid random fixtures ({attempts} drawn), {} violations{}",
            failures.len(),
            failures.first().map(|f| format!(": {f}")).unwrap_or_default()
        ),
    ))
}

/// Run criterion `id` (1–9).
pub fn run_criterion(id: u8, cfg: &AcceptanceConfig) -> CriterionReport {
    let start = Instant::now();
    let outcome = match id {
        1 => criterion_1(cfg),
        2 => criterion_2(cfg),
        3 => criterion_3(cfg),
        4 => criterion_4(cfg),
        5 => criterion_5(cfg),
        6 => criterion_6(cfg),
        7 => criterion_7(cfg),
        8 => criterion_8(cfg),
        9 => criterion_9(cfg),
        _ => panic!("criteria are numbered 1 to 9"),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionReport {
        id,
        title: TITLES[id as usize - 1],
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionReport> {
    (1..=9).map(|id| run_criterion(id, cfg)).collect()
}
