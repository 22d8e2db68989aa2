use std::f64::consts::TAU;
use std::sync::Arc;

use hadamard_core::borel::{self, FormalSeries};
use hadamard_core::deformation::{CutoffFunction, CutoffProfile, DeformationField, FieldVariant, FlowMap};
use hadamard_core::geometry::{product_set, select_constants, smooth_waypoints, Path, SingularSet};
use hadamard_core::germ::{BranchTracker, Germ};
use hadamard_core::hadamard::hadamard_principal;
use hadamard_core::Complex64;
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn polar(r: f64, th: f64) -> Complex64 {
    Complex64::from_polar(r, th)
}

fn square() -> Path {
    smooth_waypoints(
        &[c(0.3, 0.0), c(0.3, -0.5), c(1.7, -0.5), c(1.7, 0.5), c(0.3, 0.5), c(0.3, 0.0)],
        Some(0.1),
    )
    .unwrap()
}

fn rational() -> impl Strategy<Value = BigRational> {
    (-30i64..=30, 1i64..=15).prop_map(|(n, d)| BigRational::new(BigInt::from(n), BigInt::from(d)))
}

fn series(offset: usize, order: usize) -> impl Strategy<Value = FormalSeries<BigRational>> {
    proptest::collection::vec(rational(), order - offset).prop_map(move |v| FormalSeries::new(v, offset))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tracker_step_is_reversible(r in 0.05f64..0.45, th in 0.0..TAU, dr in 0.05f64..0.4, dth in 0.0..TAU) {
        let g = Arc::new(Germ::li2());
        let start = c(0.5, 0.0) + polar(r, th);
        let target = start + polar(dr, dth);
        prop_assume!((target - c(0.5, 0.0)).norm() < 0.45);
        let mut t = BranchTracker::init(&g, start).unwrap();
        let v0 = t.value();
        t.step(target).unwrap();
        let back = t.step(start).unwrap();
        prop_assert!((back - v0).norm() <= 10.0 * t.step_tolerance());
    }

    #[test]
    fn tracker_matches_taylor_in_half_disc(r in 0.0f64..0.5, th in 0.0..TAU) {
        let z = polar(r, th);
        for germ in [Germ::log_f0(), Germ::li2(), Germ::f1()] {
            let coeffs = germ.taylor_coeffs().to_vec();
            let g = Arc::new(germ);
            let v = BranchTracker::init(&g, z).unwrap().value();
            let mut sum = Complex64::new(0.0, 0.0);
            let mut p = Complex64::new(1.0, 0.0);
            for a in &coeffs {
                sum += a * p;
                p *= z;
            }
            prop_assert!((v - sum).norm() < 1e-12, "{v} vs {sum}");
        }
    }

    #[test]
    fn homotopic_polylines_agree(px in -1.0f64..2.0, py in 0.3f64..1.5, qx in -1.0f64..2.0, qy in 0.3f64..1.5, zx in -1.0f64..2.0, zy in 0.2f64..1.0) {
        // Everything stays in the upper half plane, away from the singular points on the real axis.
        let start = c(0.0, 0.1);
        let z = c(zx, zy);
        for germ in [Germ::log_f0(), Germ::li2()] {
            let g = Arc::new(germ);
            let mut a = BranchTracker::init(&g, start).unwrap();
            let mut b = a.clone();
            let va = a.step_along(&[c(px, py), z]).unwrap();
            let vb = b.step_along(&[c(qx, qy), z]).unwrap();
            prop_assert!((va - vb).norm() < 1e-9 * (1.0 + va.norm()));
        }
    }

    #[test]
    fn rational_and_holonomic_backends_agree(ar in 0.5f64..1.5, at in 0.0..TAU, w in proptest::collection::vec((0.0f64..TAU, 0.3f64..1.8), 1..4)) {
        let alpha = polar(ar, at);
        let rat = Arc::new(Germ::geometric(alpha).unwrap());
        let hol = Arc::new(rat.to_holonomic().unwrap());
        let pole = Complex64::new(1.0, 0.0) / alpha;
        let mut pts: Vec<Complex64> = w.iter().map(|&(th, r)| polar(r, th)).collect();
        pts.insert(0, Complex64::new(0.0, 0.0));
        for pair in pts.windows(2) {
            let seg_dist = {
                let d = pair[1] - pair[0];
                let u = ((pole - pair[0]) * d.conj()).re / d.norm_sqr();
                (pair[0] + d * u.clamp(0.0, 1.0) - pole).norm()
            };
            prop_assume!(seg_dist > 0.1);
        }
        let mut a = BranchTracker::init(&rat, pts[0]).unwrap();
        let mut b = BranchTracker::init(&hol, pts[0]).unwrap();
        let va = a.step_along(&pts[1..]).unwrap();
        let vb = b.step_along(&pts[1..]).unwrap();
        prop_assert!((va - vb).norm() <= 1e-10 * va.norm().max(1.0), "{va} vs {vb}");
    }

    #[test]
    fn product_set_matches_brute_force(
        a in proptest::collection::vec((-3i32..=3, -3i32..=3), 1..6),
        b in proptest::collection::vec((-3i32..=3, -3i32..=3), 1..6),
        r in 0.5f64..8.0,
    ) {
        let pa: Vec<Complex64> = a.iter().map(|&(x, y)| c(x as f64, y as f64 * 0.5)).collect();
        let pb: Vec<Complex64> = b.iter().map(|&(x, y)| c(x as f64 * 0.5, y as f64)).collect();
        let omega = product_set(&SingularSet::finite(pa.clone()), &SingularSet::finite(pb.clone()));
        let got = omega.enumerate(r);
        let mut want = vec![Complex64::new(0.0, 0.0)];
        for x in pa.iter().filter(|x| x.norm() > 0.0) {
            for y in pb.iter().filter(|y| y.norm() > 0.0) {
                if (x * y).norm() <= r { want.push(x * y); }
            }
        }
        let key = |p: &Complex64| (p.re, p.im);
        let mut g2 = got.clone();
        g2.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        want.sort_by(|p, q| key(p).partial_cmp(&key(q)).unwrap());
        want.dedup();
        prop_assert_eq!(g2, want);
        let bigger = omega.enumerate(r * 1.5);
        prop_assert!(got.iter().all(|p| bigger.contains(p)));
    }

    #[test]
    fn smoothed_paths_are_c1_and_close(w in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 3..7), rounding in 0.0f64..0.3) {
        let pts: Vec<Complex64> = w.iter().map(|&(x, y)| c(x, y)).collect();
        prop_assume!(pts.windows(2).all(|p| (p[1] - p[0]).norm() > 0.05));
        let Ok(path) = smooth_waypoints(&pts, Some(rounding)) else { return Ok(()) };
        prop_assert!((path.start() - pts[0]).norm() < 1e-12);
        prop_assert!((path.end() - pts[pts.len() - 1]).norm() < 1e-12);
        // Distance to the polyline stays within the rounding radius.
        let poly_dist = |z: Complex64| {
            pts.windows(2).map(|p| {
                let d = p[1] - p[0];
                let u = ((z - p[0]) * d.conj()).re / d.norm_sqr();
                (p[0] + d * u.clamp(0.0, 1.0) - z).norm()
            }).fold(f64::INFINITY, f64::min)
        };
        let n = 4000;
        let mut lip = 0.0_f64;
        let mut prev = path.eval_derivative(0.0);
        for k in 1..=n {
            let t = k as f64 / n as f64;
            prop_assert!(poly_dist(path.eval(t)) <= rounding + 1e-9);
            let d = path.eval_derivative(t);
            lip = lip.max((d - prev).norm() * n as f64);
            prev = d;
        }
        if path.is_c1() && rounding > 0.0 {
            // Each fillet has radius ℓ/tan(θ/2); at constant speed |γ″| = L²/radius.
            let min_radius = pts.windows(3).filter_map(|p| {
                let (u, v) = (p[1] - p[0], p[2] - p[1]);
                let theta = (u.re * v.im - u.im * v.re).atan2(u.re * v.re + u.im * v.im).abs();
                let ell = rounding.min(0.25 * u.norm().min(v.norm()));
                (theta > 1e-9).then(|| ell / (theta / 2.0).tan())
            }).fold(f64::INFINITY, f64::min);
            let bound = path.length().powi(2) / min_radius;
            prop_assert!(lip <= bound * 1.01, "{lip} vs {bound}");
        }
    }

    #[test]
    fn selected_constants_satisfy_inequalities(ar in 0.5f64..3.0, br in 0.5f64..3.0, at in 0.0..TAU, bt in 0.0..TAU, g0 in 0.05f64..0.95, gt in 0.0..TAU, w in proptest::collection::vec((0.1f64..3.0, 0.0..TAU), 1..4)) {
        let a = SingularSet::finite([polar(ar, at)]);
        let b = SingularSet::finite([polar(br, bt)]);
        let mut pts = vec![polar(g0 * ar * br, gt)];
        pts.extend(w.iter().map(|&(r, th)| polar(r, th)));
        let Ok(path) = smooth_waypoints(&pts, Some(0.1)) else { return Ok(()) };
        let Ok(k) = select_constants(&path, &a, &b) else { return Ok(()) };
        prop_assert!(k.check().is_ok(), "{:?}", k.check());
    }

    #[test]
    fn cutoff_is_bounded_and_lipschitz(eps in 0.01f64..0.5, z1 in (-2.0f64..2.0, -2.0f64..2.0), z2 in (-2.0f64..2.0, -2.0f64..2.0)) {
        for profile in [CutoffProfile::Linear, CutoffProfile::Smoothstep] {
            let cut = CutoffFunction::new(eps, vec![c(1.0, 0.0), c(-0.5, 0.7)], profile).unwrap();
            let (a, b) = (c(z1.0, z1.1), c(z2.0, z2.1));
            let (ea, eb) = (cut.eval(a), cut.eval(b));
            prop_assert!((0.0..=1.0).contains(&ea));
            prop_assert!((ea - eb).abs() <= cut.lipschitz() * (a - b).norm() + 1e-12);
            prop_assert_eq!(cut.eval(c(1.0, 0.0)), 0.0);
            if cut.distance(a) >= eps { prop_assert_eq!(ea, 1.0); }
        }
    }

    #[test]
    fn cutoff_field_vanishes_and_grows_linearly(t in 0.0f64..1.0, r in 0.0f64..3.0, th in 0.0..TAU) {
        let a = SingularSet::finite([c(1.0, 0.0), c(0.0, 2.0)]);
        let b = SingularSet::finite([c(1.0, 0.0)]);
        let field = DeformationField::new(FieldVariant::Cutoff, &square(), &a, &b, CutoffProfile::Smoothstep).unwrap();
        let k = field.constants().k;
        prop_assert_eq!(field.eval(t, c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        for alpha in field.a_prime() {
            prop_assert_eq!(field.eval(t, *alpha).unwrap().norm(), 0.0);
        }
        let z = polar(r, th);
        prop_assert!(field.eval(t, z).unwrap().norm() <= k * z.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn flow_bounds_and_separation(t in 0.05f64..1.0, s in 0.0f64..1.0, th1 in 0.0..TAU, th2 in 0.0..TAU, r in 0.2f64..0.9) {
        let a = SingularSet::finite([c(1.0, 0.0)]);
        let field = DeformationField::new(FieldVariant::Cutoff, &square(), &a, &a, CutoffProfile::Smoothstep).unwrap();
        let consts = field.constants().clone();
        let reach = field.reach();
        let flow = FlowMap::new(field);
        let z1 = polar(r, th1);
        let z2 = polar(r, th2);
        prop_assume!((z1 - z2).norm() > 1e-3);
        let w1 = flow.flow(0.0, t, z1).unwrap();
        let w2 = flow.flow(0.0, t, z2).unwrap();
        prop_assert!(w1.norm() <= z1.norm() * (consts.k * t).exp() * (1.0 + 1e-9));
        // Lipschitz bound of X on the reachable disc gives a Grönwall lower bound on separation.
        let lip = consts.k * (1.0 + reach / consts.epsilon);
        prop_assert!((w1 - w2).norm() >= (-lip * t).exp() * (z1 - z2).norm());
        let mid = s * t;
        let composed = flow.flow(mid, t, flow.flow(0.0, mid, z1).unwrap()).unwrap();
        prop_assert!((composed - w1).norm() <= 1e-8 * w1.norm().max(1.0));
        prop_assert_eq!(flow.flow(t, t, z1).unwrap(), z1);
    }

    #[test]
    fn hadamard_and_convolution_are_bilinear_and_commutative(f in series(0, 12), g in series(0, 12), h in series(0, 12), k in rational()) {
        let add = |x: &FormalSeries<BigRational>, y: &FormalSeries<BigRational>| {
            FormalSeries::new(x.coeffs().iter().zip(y.coeffs()).map(|(a, b)| a + b).collect(), 0)
        };
        let scale = |x: &FormalSeries<BigRational>| x.map(|a| a * &k);
        prop_assert_eq!(borel::hadamard_coeff(&f, &g), borel::hadamard_coeff(&g, &f));
        prop_assert_eq!(borel::convolve(&f, &g), borel::convolve(&g, &f));
        let lhs = borel::hadamard_coeff(&add(&scale(&f), &g), &h);
        let rhs = add(&scale(&borel::hadamard_coeff(&f, &h)), &borel::hadamard_coeff(&g, &h));
        prop_assert_eq!(lhs, rhs);
        let lhs = borel::convolve(&add(&scale(&f), &g), &h);
        let conv_fh = borel::convolve(&f, &h);
        let conv_gh = borel::convolve(&g, &h);
        let rhs = FormalSeries::new(
            conv_fh.coeffs().iter().zip(conv_gh.coeffs()).map(|(a, b)| a * &k + b).collect(),
            conv_fh.offset(),
        );
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bridge_identity_is_exact(f in series(1, 17), g in series(1, 17)) {
        prop_assert_eq!(borel::bridge_identity_check(&f, &g, 15).unwrap(), 0.0);
        prop_assert_eq!(borel::convolution_residual(&f, &g, 15).unwrap(), 0.0);
    }

    #[test]
    fn borel_of_convergent_series_decays_factorially(r in 0.2f64..3.0, th in 0.0..TAU) {
        // f̃ = Σ (re^{iθ})ⁿ t^{n+1}: |Bf̃ coefficients| = rⁿ/n!.
        let q = polar(r, th);
        let f = FormalSeries::from_fn(1, 30, |n| q.powi(n as i32 - 1));
        let bf = borel::borel(&f).unwrap();
        let mut fact = 1.0;
        for n in 0..29 {
            if n > 0 { fact *= n as f64; }
            prop_assert!(bf.coeff(n).unwrap().norm() <= 1.0000001 * r.powi(n as i32) / fact);
        }
    }

    #[test]
    fn principal_value_matches_coefficient_sum(r in 0.0f64..0.6, th in 0.0..TAU, ar in 0.3f64..1.2, at in 0.0..TAU) {
        let xi = polar(r, th);
        let alpha = polar(ar, at);
        let f = Arc::new(Germ::log_f0());
        let g = Arc::new(Germ::geometric(alpha).unwrap());
        prop_assume!(xi.norm() < 0.6 / ar);
        let v = hadamard_principal(&f, &g, xi, None, 64).unwrap();
        // aₙbₙ = αⁿ/n; the tail after N terms is below q^N/(1 − q), q = |αξ|.
        let q = (alpha * xi).norm();
        let mut sum = Complex64::new(0.0, 0.0);
        let mut n = 1;
        let mut p = alpha * xi;
        while q.powi(n) / (1.0 - q) > 1e-13 || n < 2 {
            sum += p / n as f64;
            p *= alpha * xi;
            n += 1;
        }
        prop_assert!((v - sum).norm() < 1e-10, "{v} vs {sum}");
    }
}
