//! Germs at the origin and their analytic continuation along paths.
//!
//! Every catalog germ is either rational, evaluated exactly, or holonomic:
//! it satisfies `Σ_k q_k(ξ) y^{(k)}(ξ) = 0` with polynomial `q_k`, and is
//! continued by Taylor-series steps of that ODE. A [`BranchTracker`] carries
//! the local jet `(y, y′, y″/2!, …)` so it knows which sheet it is on.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Path, SingularSet};
use crate::poly;

/// Number of Taylor coefficients stored for catalog germs.
pub const STORED_COEFFS: usize = 256;

/// Default absolute clearance a tracker segment must keep from the singular set.
pub const DEFAULT_STEP_TOLERANCE: f64 = 1e-10;

/// Largest Taylor order a single ODE step may use.
const MAX_SERIES_TERMS: usize = 800;

/// Relative size below which series tails are discarded.
const SERIES_CUTOFF: f64 = 1e-17;

/// Polynomials `q_0, …, q_r` (ascending coefficients) of the ODE
/// `Σ_k q_k(ξ) y^{(k)}(ξ) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOde {
    pub coeffs: Vec<Vec<Complex64>>,
}

impl LinearOde {
    pub fn new(coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidParameter("ODE must have order ≥ 1".into()));
        }
        let lead = poly::trim(coeffs.last().unwrap().clone());
        if lead.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::InvalidParameter("leading ODE coefficient vanishes".into()));
        }
        Ok(LinearOde { coeffs })
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Roots of the leading coefficient.
    pub fn singular_points(&self) -> Vec<Complex64> {
        let mut pts = poly::roots(self.coeffs.last().unwrap());
        merge_close_roots(&mut pts);
        pts
    }

    /// Residual of the ODE applied to a series at 0, coefficient by coefficient.
    pub fn series_residual(&self, a: &[Complex64], n: usize) -> f64 {
        let mut worst = 0.0_f64;
        for big_n in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, q) in self.coeffs.iter().enumerate() {
                for (j, qj) in q.iter().enumerate() {
                    if j > big_n {
                        break;
                    }
                    let m = big_n - j + k;
                    if let Some(am) = a.get(m) {
                        acc += qj * am * falling(big_n - j, k);
                    }
                }
            }
            worst = worst.max(acc.norm());
        }
        worst
    }
}

/// `(n+1)(n+2)…(n+k)`.
fn falling(n: usize, k: usize) -> f64 {
    (1..=k).map(|i| (n + i) as f64).product()
}

fn merge_close_roots(pts: &mut Vec<Complex64>) {
    let mut out: Vec<Complex64> = Vec::with_capacity(pts.len());
    for &p in pts.iter() {
        if !out
            .iter()
            .any(|q| (q - p).norm() <= 1e-6 * (1.0 + p.norm()))
        {
            out.push(p);
        }
    }
    *pts = out;
}

/// How values off the disc of convergence are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    /// `num / den`, reduced.
    Rational {
        num: Vec<Complex64>,
        den: Vec<Complex64>,
    },
    /// Solution of `ode` whose Taylor series at 0 is the stored one.
    Holonomic {
        ode: LinearOde,
        ode_singular: Vec<Complex64>,
    },
    /// Stored coefficients only; valid strictly inside the disc of convergence.
    TaylorOnly,
}

/// An Ω-continuable germ at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Germ {
    name: String,
    taylor: Vec<Complex64>,
    radius: f64,
    singular_set: SingularSet,
    backend: Backend,
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl Germ {
    /// `ξ ↦ 1/(1 − αξ)`.
    pub fn geometric(alpha: Complex64) -> Result<Self> {
        if alpha.norm() == 0.0 || !alpha.is_finite() {
            return Err(Error::InvalidParameter("geometric(α) needs α ≠ 0".into()));
        }
        let mut g = Germ::rational(vec![re(1.0)], vec![re(1.0), -alpha])?;
        g.name = format!("geometric({})", crate::geometry::format_point(alpha));
        Ok(g)
    }

    /// `−log(1 − ξ)`.
    pub fn log_f0() -> Self {
        let taylor = (0..STORED_COEFFS)
            .map(|n| if n == 0 { re(0.0) } else { re(1.0 / n as f64) })
            .collect();
        let ode = LinearOde::new(vec![vec![re(0.0)], vec![re(-1.0)], vec![re(1.0), re(-1.0)]]).unwrap();
        Germ::holonomic("log_f0", taylor, 1.0, SingularSet::finite([re(1.0)]), ode)
    }

    /// `−log(1 − ξ)/ξ`.
    pub fn f1() -> Self {
        let taylor = (0..STORED_COEFFS).map(|n| re(1.0 / (n + 1) as f64)).collect();
        let ode = LinearOde::new(vec![
            vec![re(-1.0)],
            vec![re(2.0), re(-3.0)],
            vec![re(0.0), re(1.0), re(-1.0)],
        ])
        .unwrap();
        Germ::holonomic("f1", taylor, 1.0, SingularSet::finite([re(0.0), re(1.0)]), ode)
    }

    /// The dilogarithm `Li₂(ξ) = Σ ξⁿ/n²`.
    pub fn li2() -> Self {
        let taylor = (0..STORED_COEFFS)
            .map(|n| if n == 0 { re(0.0) } else { re(1.0 / (n * n) as f64) })
            .collect();
        let ode = LinearOde::new(vec![
            vec![re(0.0)],
            vec![re(-1.0)],
            vec![re(2.0), re(-3.0)],
            vec![re(0.0), re(1.0), re(-1.0)],
        ])
        .unwrap();
        Germ::holonomic("li2", taylor, 1.0, SingularSet::finite([re(0.0), re(1.0)]), ode)
    }

    /// `(1 − ξ)^λ`, principal branch.
    pub fn power(lambda: Complex64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("power(λ) needs finite λ".into()));
        }
        let mut taylor = vec![re(1.0)];
        for n in 0..STORED_COEFFS - 1 {
            let next = taylor[n] * (re(n as f64) - lambda) / (n + 1) as f64;
            taylor.push(next);
        }
        let is_poly = lambda.im == 0.0 && lambda.re >= 0.0 && lambda.re.fract() == 0.0;
        let (radius, set) = if is_poly {
            (f64::INFINITY, SingularSet::empty())
        } else {
            (1.0, SingularSet::finite([re(1.0)]))
        };
        let ode = LinearOde::new(vec![vec![lambda], vec![re(1.0), re(-1.0)]])?;
        let name = format!("power({})", crate::geometry::format_point(lambda));
        Ok(Germ::holonomic(&name, taylor, radius, set, ode))
    }

    /// `e^ξ`, the kernel of `Bf̃(ξ) = e^ξ ⊙ (f̃(ξ)/ξ)`.
    pub fn exp_e1_borel() -> Self {
        let mut taylor = vec![re(1.0)];
        for n in 1..STORED_COEFFS {
            let next = taylor[n - 1] / n as f64;
            taylor.push(next);
        }
        let ode = LinearOde::new(vec![vec![re(-1.0)], vec![re(1.0)]]).unwrap();
        Germ::holonomic("exp_e1_borel", taylor, f64::INFINITY, SingularSet::empty(), ode)
    }

    /// `num/den` after cancelling common roots; the poles form the singular set.
    pub fn rational(num: Vec<Complex64>, den: Vec<Complex64>) -> Result<Self> {
        let mut num = poly::trim(num);
        let mut den = poly::trim(den);
        if den.iter().all(|c| c.norm() == 0.0) {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        if num.iter().chain(den.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        let mut poles = Vec::new();
        for r in poly::roots(&den) {
            let scale = poly::eval_abs(&num, r).max(f64::MIN_POSITIVE);
            if num.len() > 1 && poly::eval(&num, r).norm() <= 1e-10 * scale {
                num = poly::deflate(&num, r);
                den = poly::deflate(&den, r);
            } else {
                poles.push(r);
            }
        }
        if den[0].norm() == 0.0 || poles.iter().any(|p| p.norm() == 0.0) {
            return Err(Error::InvalidParameter(
                "rational germ has a pole at 0".into(),
            ));
        }
        merge_close_roots(&mut poles);
        let radius = poles
            .iter()
            .map(|p| p.norm())
            .fold(f64::INFINITY, f64::min);
        let taylor = poly::series_div(&num, &den, STORED_COEFFS);
        let name = format!("rational({:?},{:?})", format_coeffs(&num), format_coeffs(&den));
        Ok(Germ {
            name,
            taylor,
            radius,
            singular_set: SingularSet::finite(poles),
            backend: Backend::Rational { num, den },
        })
    }

    pub fn holonomic(
        name: &str,
        taylor: Vec<Complex64>,
        radius: f64,
        singular_set: SingularSet,
        ode: LinearOde,
    ) -> Self {
        let ode_singular = ode.singular_points();
        Germ {
            name: name.to_string(),
            taylor,
            radius,
            singular_set,
            backend: Backend::Holonomic { ode, ode_singular },
        }
    }

    /// A germ known only through its Taylor coefficients.
    pub fn taylor_only(
        name: &str,
        taylor: Vec<Complex64>,
        radius: f64,
        singular_set: SingularSet,
    ) -> Result<Self> {
        if !(radius > 0.0) || taylor.is_empty() {
            return Err(Error::InvalidParameter(
                "taylor-only germ needs coefficients and a positive radius".into(),
            ));
        }
        Ok(Germ {
            name: name.to_string(),
            taylor,
            radius,
            singular_set,
            backend: Backend::TaylorOnly,
        })
    }

    /// The same function with a holonomic backend: `(den·y)^{(deg num + 1)} = 0`.
    pub fn to_holonomic(&self) -> Result<Self> {
        let Backend::Rational { num, den } = &self.backend else {
            return Ok(self.clone());
        };
        let m = num.len();
        let mut derivs = vec![den.clone()];
        for _ in 0..m {
            let next = poly::derivative(derivs.last().unwrap());
            derivs.push(next);
        }
        let coeffs = (0..=m)
            .map(|k| {
                let binom = binomial(m, k);
                derivs[m - k].iter().map(|c| c * binom).collect()
            })
            .collect();
        Ok(Germ::holonomic(
            &format!("{} (holonomic)", self.name),
            self.taylor.clone(),
            self.radius,
            self.singular_set.clone(),
            LinearOde::new(coeffs)?,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn taylor_coeffs(&self) -> &[Complex64] {
        &self.taylor
    }

    pub fn radius_of_convergence(&self) -> f64 {
        self.radius
    }

    pub fn singular_set(&self) -> &SingularSet {
        &self.singular_set
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Radius of the disc around 0 where the stored series is summed directly.
    fn series_disc(&self) -> f64 {
        if self.radius.is_finite() {
            0.5 * self.radius
        } else {
            4.0
        }
    }

    /// Scale `s` with `|a_n| sⁿ` bounded, used to sum the stored series.
    fn series_scale(&self) -> f64 {
        2.0 * self.series_disc()
    }

    fn sum_series(&self, z: Complex64) -> Result<Complex64> {
        let x = z / self.series_scale();
        let scaled: Vec<Complex64> = self
            .taylor
            .iter()
            .scan(1.0_f64, |s, a| {
                let v = a * *s;
                *s *= self.series_scale();
                Some(v)
            })
            .collect();
        let tail = scaled.last().map_or(0.0, |c| c.norm()) * x.norm().powi(scaled.len() as i32 - 1);
        let value = poly::eval(&scaled, x);
        if !(tail <= 1e-15 * (1.0 + value.norm())) || !value.is_finite() {
            return Err(Error::OutsideDisc {
                point: z,
                radius: self.radius,
            });
        }
        Ok(value)
    }

    /// `y^{(k)}(z)/k!` for `k < count`, from the stored series.
    fn jet_from_series(&self, z: Complex64, count: usize) -> Vec<Complex64> {
        (0..count)
            .map(|k| {
                let tail: Vec<Complex64> = self
                    .taylor
                    .iter()
                    .enumerate()
                    .skip(k)
                    .map(|(n, a)| a * binomial(n, k))
                    .collect();
                poly::eval(&tail, z)
            })
            .collect()
    }

    /// Principal-branch value at `z`, `|z| < R`.
    pub fn eval_principal(self: &Arc<Self>, z: Complex64) -> Result<Complex64> {
        Ok(BranchTracker::init(self, z)?.value())
    }
}

fn format_coeffs(p: &[Complex64]) -> Vec<String> {
    p.iter().map(|c| crate::geometry::format_point(*c)).collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Names accepted by [`catalog_get`].
pub const CATALOG: &[&str] = &[
    "geometric",
    "log_f0",
    "f1",
    "li2",
    "power",
    "rational",
    "exp_e1_borel",
];

/// Look up a catalog germ. `geometric` and `power` take one parameter;
/// for `rational` use [`Germ::rational`] or the germ-spec parser.
pub fn catalog_get(name: &str, params: &[Complex64]) -> Result<Germ> {
    let want = |n: usize| {
        if params.len() == n {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{name} takes {n} parameter(s), got {}",
                params.len()
            )))
        }
    };
    match name {
        "geometric" => {
            want(1)?;
            Germ::geometric(params[0])
        }
        "power" => {
            want(1)?;
            Germ::power(params[0])
        }
        "log_f0" => want(0).map(|_| Germ::log_f0()),
        "f1" => want(0).map(|_| Germ::f1()),
        "li2" => want(0).map(|_| Germ::li2()),
        "exp_e1_borel" => want(0).map(|_| Germ::exp_e1_borel()),
        "rational" => Err(Error::InvalidParameter(
            "rational needs coefficient lists: rational([num],[den])".into(),
        )),
        other => Err(Error::UnknownGerm(other.to_string())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Summing the stored series at 0.
    Series,
    /// Stepping the ODE from the current jet.
    Ode,
    /// Exact rational evaluation.
    Exact,
    /// Stored series only.
    Taylor,
}

/// Stateful continuation of one germ along a polyline.
#[derive(Debug, Clone)]
pub struct BranchTracker {
    germ: Arc<Germ>,
    point: Complex64,
    value: Complex64,
    jet: Vec<Complex64>,
    mode: Mode,
    step_tolerance: f64,
    steps: usize,
}

impl BranchTracker {
    /// Start on the principal branch at `start`, `|start| < R`.
    pub fn init(germ: &Arc<Germ>, start: Complex64) -> Result<Self> {
        if !(start.norm() < germ.radius) {
            return Err(Error::OutsideDisc {
                point: start,
                radius: germ.radius,
            });
        }
        let mode = match germ.backend {
            Backend::Rational { .. } => Mode::Exact,
            Backend::Holonomic { .. } => Mode::Series,
            Backend::TaylorOnly => Mode::Taylor,
        };
        let mut tracker = BranchTracker {
            germ: Arc::clone(germ),
            point: Complex64::new(0.0, 0.0),
            value: germ.taylor.first().copied().unwrap_or_default(),
            jet: Vec::new(),
            mode,
            step_tolerance: DEFAULT_STEP_TOLERANCE,
            steps: 0,
        };
        match mode {
            Mode::Exact | Mode::Taylor => tracker.jump_within_disc(start)?,
            Mode::Series if start.norm() <= germ.series_disc() => tracker.jump_within_disc(start)?,
            _ => {
                // Sum the series part of the way out, then follow the ray.
                let edge = start * (germ.series_disc() / start.norm());
                tracker.jump_within_disc(edge)?;
                tracker.switch_to_ode();
                tracker.ode_advance(start)?;
            }
        }
        tracker.steps = 0;
        Ok(tracker)
    }

    pub fn with_step_tolerance(mut self, tol: f64) -> Self {
        self.step_tolerance = tol;
        self
    }

    pub fn germ(&self) -> &Arc<Germ> {
        &self.germ
    }

    pub fn current_point(&self) -> Complex64 {
        self.point
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn step_tolerance(&self) -> f64 {
        self.step_tolerance
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Normalized derivatives `y^{(k)}/k!` at the current point, `k < r`
    /// with `r` the ODE order (two entries for rational germs).
    pub fn current_jet(&self) -> Vec<Complex64> {
        match self.mode {
            Mode::Ode => self.jet.clone(),
            Mode::Series | Mode::Taylor => {
                let r = match &self.germ.backend {
                    Backend::Holonomic { ode, .. } => ode.order(),
                    _ => 2,
                };
                self.germ.jet_from_series(self.point, r)
            }
            Mode::Exact => {
                let Backend::Rational { num, den } = &self.germ.backend else {
                    unreachable!()
                };
                let (p, q) = (poly::eval(num, self.point), poly::eval(den, self.point));
                let dp = poly::eval(&poly::derivative(num), self.point);
                let dq = poly::eval(&poly::derivative(den), self.point);
                vec![p / q, (dp * q - p * dq) / (q * q)]
            }
        }
    }

    fn jump_within_disc(&mut self, z: Complex64) -> Result<()> {
        self.value = match self.mode {
            Mode::Exact => {
                let Backend::Rational { num, den } = &self.germ.backend else {
                    unreachable!()
                };
                poly::eval(num, z) / poly::eval(den, z)
            }
            Mode::Series | Mode::Taylor => {
                if self.mode == Mode::Taylor && !(z.norm() < self.germ.radius) {
                    return Err(Error::OutsideDisc {
                        point: z,
                        radius: self.germ.radius,
                    });
                }
                self.germ.sum_series(z)?
            }
            Mode::Ode => unreachable!(),
        };
        self.point = z;
        Ok(())
    }

    fn switch_to_ode(&mut self) {
        let Backend::Holonomic { ode, .. } = &self.germ.backend else {
            unreachable!()
        };
        self.jet = self.germ.jet_from_series(self.point, ode.order());
        self.value = self.jet[0];
        self.mode = Mode::Ode;
    }

    /// Continue along the segment `[current_point, target]`.
    pub fn step(&mut self, target: Complex64) -> Result<Complex64> {
        if !target.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite target {target}")));
        }
        if let Some((w, d)) = self
            .germ
            .singular_set
            .nearest_to_segment(self.point, target)
        {
            if d <= self.step_tolerance {
                return Err(Error::SegmentTooClose {
                    from: self.point,
                    to: target,
                    singular: w,
                    distance: d,
                });
            }
        }
        match self.mode {
            Mode::Exact | Mode::Taylor => self.jump_within_disc(target)?,
            Mode::Series if target.norm() <= self.germ.series_disc() => {
                self.jump_within_disc(target)?
            }
            Mode::Series => {
                self.switch_to_ode();
                self.ode_advance(target)?;
            }
            Mode::Ode => self.ode_advance(target)?,
        }
        self.steps += 1;
        Ok(self.value)
    }

    /// Continue along the polyline through `points`.
    pub fn step_along(&mut self, points: &[Complex64]) -> Result<Complex64> {
        for &p in points {
            self.step(p)?;
        }
        Ok(self.value)
    }

    /// Continue along `path`, which must start at the current point. Chords
    /// are at most a quarter of the distance to the singular set, so each
    /// chord is homotopic to the arc it replaces.
    pub fn follow_path(&mut self, path: &Path) -> Result<Complex64> {
        if (path.start() - self.point).norm() > 1e-12 * (1.0 + self.point.norm()) {
            return Err(Error::InvalidPath(format!(
                "path starts at {}, tracker is at {}",
                path.start(),
                self.point
            )));
        }
        let len = path.length();
        if len == 0.0 {
            return Ok(self.value);
        }
        let mut stops = path.knots();
        stops.push(1.0);
        let mut t = 0.0;
        for stop in stops {
            while t < stop {
                let d = self.germ.singular_set.distance_to(path.eval(t));
                let dt = (0.25 * d / len).min(stop - t).max(1e-12);
                t = if t + dt >= stop { stop } else { t + dt };
                self.step(path.eval(t))?;
            }
        }
        Ok(self.value)
    }

    /// The local expansion of the current branch, for evaluating nearby.
    pub fn expansion(&self) -> Result<LocalExpansion> {
        match self.mode {
            Mode::Exact => Ok(LocalExpansion {
                center: self.point,
                scale: f64::INFINITY,
                coeffs: Vec::new(),
                germ: Some(Arc::clone(&self.germ)),
            }),
            Mode::Series | Mode::Taylor => {
                let s = if self.germ.radius.is_finite() {
                    self.germ.radius
                } else {
                    self.germ.series_scale()
                };
                let coeffs = self
                    .germ
                    .taylor
                    .iter()
                    .scan(1.0_f64, |acc, a| {
                        let v = a * *acc;
                        *acc *= s;
                        Some(v)
                    })
                    .collect();
                Ok(LocalExpansion {
                    center: Complex64::new(0.0, 0.0),
                    scale: s,
                    coeffs,
                    germ: None,
                })
            }
            Mode::Ode => {
                let Backend::Holonomic { ode, ode_singular } = &self.germ.backend else {
                    unreachable!()
                };
                let sigma = sigma_at(ode_singular, self.point, f64::INFINITY);
                let sigma = if sigma.is_finite() { sigma } else { 2.0 };
                let coeffs = ode_series(ode, self.point, sigma, &self.jet, 0.75)?;
                Ok(LocalExpansion {
                    center: self.point,
                    scale: sigma,
                    coeffs,
                    germ: None,
                })
            }
        }
    }

    fn ode_advance(&mut self, target: Complex64) -> Result<()> {
        let Backend::Holonomic { ode, ode_singular } = &self.germ.backend else {
            unreachable!()
        };
        let mut guard = 0usize;
        while self.point != target {
            guard += 1;
            if guard > 1_000_000 {
                return Err(Error::Integrator("too many ODE steps".into()));
            }
            let dist = sigma_at(ode_singular, self.point, f64::INFINITY);
            if !(dist > self.step_tolerance) {
                return Err(Error::SegmentTooClose {
                    from: self.point,
                    to: target,
                    singular: self.point,
                    distance: dist,
                });
            }
            let remaining = target - self.point;
            let max_step = (0.5 * dist).min(1.0);
            let (h, next) = if remaining.norm() <= max_step {
                (remaining, target)
            } else {
                let h = remaining * (max_step / remaining.norm());
                (h, self.point + h)
            };
            let sigma = (2.0 * h.norm()).min(dist);
            let v = ode_series(ode, self.point, sigma, &self.jet, 0.5)?;
            let x = h / sigma;
            self.jet = (0..ode.order())
                .map(|k| {
                    let dk: Vec<Complex64> = v
                        .iter()
                        .enumerate()
                        .skip(k)
                        .map(|(n, c)| c * binomial(n, k))
                        .collect();
                    poly::eval(&dk, x) / sigma.powi(k as i32)
                })
                .collect();
            self.point = next;
            self.value = self.jet[0];
            if !self.value.is_finite() {
                return Err(Error::Integrator(format!("non-finite value at {next}")));
            }
        }
        Ok(())
    }
}

fn sigma_at(points: &[Complex64], z: Complex64, default: f64) -> f64 {
    points.iter().map(|p| (p - z).norm()).fold(default, f64::min)
}

/// Taylor coefficients `v_n` of the solution in `x = (ξ − c)/σ`, given the
/// jet `u_k = y^{(k)}(c)/k!`, summed far enough that the tail at `|x| = x_max`
/// is negligible.
fn ode_series(
    ode: &LinearOde,
    c: Complex64,
    sigma: f64,
    jet: &[Complex64],
    x_max: f64,
) -> Result<Vec<Complex64>> {
    let r = ode.order();
    // Q̃_{k,j} = q_k(c + σx) coefficients, times σ^{-k}.
    let q: Vec<Vec<Complex64>> = ode
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, qk)| {
            poly::taylor_shift(qk, c)
                .iter()
                .enumerate()
                .map(|(j, a)| a * sigma.powi(j as i32 - k as i32))
                .collect()
        })
        .collect();
    let lead = q[r][0];
    if lead.norm() == 0.0 {
        return Err(Error::Integrator(format!("expansion centre {c} is a singular point")));
    }
    let mut v: Vec<Complex64> = jet
        .iter()
        .enumerate()
        .map(|(k, u)| u * sigma.powi(k as i32))
        .collect();
    let mut scale = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut n = 0usize;
    loop {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, qk) in q.iter().enumerate() {
            for (j, qkj) in qk.iter().enumerate() {
                if j > n || (k == r && j == 0) {
                    continue;
                }
                acc += qkj * v[n - j + k] * falling(n - j, k);
            }
        }
        let next = -acc / (lead * falling(n, r));
        v.push(next);
        n += 1;
        let len = v.len();
        let term = |i: usize| v[i].norm() * x_max.powi(i as i32);
        scale = scale.max(term(len - 1));
        if len > r + 8 && (len - r - 1..len).all(|i| term(i) <= SERIES_CUTOFF * scale) {
            break;
        }
        if len >= MAX_SERIES_TERMS {
            return Err(Error::Integrator(format!(
                "Taylor expansion at {c} did not converge"
            )));
        }
    }
    Ok(v)
}

/// A truncated power series about a node, valid on `|ξ − centre| ≤ ¾·scale`.
#[derive(Debug, Clone)]
pub struct LocalExpansion {
    center: Complex64,
    scale: f64,
    coeffs: Vec<Complex64>,
    germ: Option<Arc<Germ>>,
}

impl LocalExpansion {
    pub fn center(&self) -> Complex64 {
        self.center
    }

    /// Radius within which [`LocalExpansion::eval`] is accurate.
    pub fn radius(&self) -> f64 {
        0.75 * self.scale
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if let Some(germ) = &self.germ {
            let Backend::Rational { num, den } = &germ.backend else {
                unreachable!()
            };
            return Ok(poly::eval(num, z) / poly::eval(den, z));
        }
        let x = (z - self.center) / self.scale;
        if x.norm() > 0.75 + 1e-12 {
            return Err(Error::OutsideDisc {
                point: z,
                radius: self.radius(),
            });
        }
        Ok(poly::eval(&self.coeffs, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn circle_points(center: Complex64, start: Complex64, n: usize, turns: f64) -> Vec<Complex64> {
        let r = start - center;
        (1..=n)
            .map(|k| center + r * Complex64::from_polar(1.0, 2.0 * PI * turns * k as f64 / n as f64))
            .collect()
    }

    #[test]
    fn catalog_coefficients() {
        let g = catalog_get("log_f0", &[]).unwrap();
        assert_eq!(g.taylor_coeffs()[0], re(0.0));
        assert_eq!(g.taylor_coeffs()[3], re(1.0 / 3.0));
        assert_eq!(g.singular_set().finite_points().unwrap(), vec![re(1.0)]);

        let g = catalog_get("geometric", &[re(2.0)]).unwrap();
        for (n, a) in g.taylor_coeffs().iter().take(10).enumerate() {
            assert!((a - re(2f64.powi(n as i32))).norm() < 1e-12);
        }
        assert_eq!(g.singular_set().finite_points().unwrap(), vec![re(0.5)]);
        assert_eq!(g.radius_of_convergence(), 0.5);

        let li2 = catalog_get("li2", &[]).unwrap();
        assert_eq!(li2.taylor_coeffs()[2], re(0.25));
        assert_eq!(li2.taylor_coeffs()[3], re(1.0 / 9.0));
        assert!(li2.singular_set().contains_zero());
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(catalog_get("nope", &[]), Err(Error::UnknownGerm(_))));
        assert!(catalog_get("geometric", &[re(0.0)]).is_err());
        assert!(Germ::rational(vec![re(1.0)], vec![re(0.0), re(1.0)]).is_err());
        assert!(Germ::rational(vec![re(1.0)], vec![re(0.0)]).is_err());
    }

    #[test]
    fn catalog_series_satisfy_their_odes() {
        for germ in [Germ::log_f0(), Germ::f1(), Germ::li2(), Germ::exp_e1_borel(), Germ::power(c(0.5, 0.25)).unwrap()] {
            let Backend::Holonomic { ode, .. } = germ.backend() else {
                panic!()
            };
            let res = ode.series_residual(germ.taylor_coeffs(), 120);
            assert!(res < 1e-12, "{}: residual {res}", germ.name());
        }
    }

    #[test]
    fn rational_cancels_common_factor() {
        // (1 - z)(1 + z) / ((1 - z)(1 - 2z)) = (1 + z)/(1 - 2z)
        let g = Germ::rational(vec![re(1.0), re(0.0), re(-1.0)], vec![re(1.0), re(-3.0), re(2.0)]).unwrap();
        let poles = g.singular_set().finite_points().unwrap();
        assert_eq!(poles.len(), 1);
        assert!((poles[0] - re(0.5)).norm() < 1e-12);
        assert!((g.taylor_coeffs()[1] - re(3.0)).norm() < 1e-12);
    }

    #[test]
    fn tracker_init_examples() {
        let log = Arc::new(Germ::log_f0());
        let t = BranchTracker::init(&log, re(0.5)).unwrap();
        assert!((t.value() - re(2f64.ln())).norm() < 1e-14);
        let geo = Arc::new(Germ::geometric(re(1.0)).unwrap());
        assert_eq!(BranchTracker::init(&geo, re(0.0)).unwrap().value(), re(1.0));
        let li2 = Arc::new(Germ::li2());
        let oracle: f64 = (1..200).map(|n| 0.5f64.powi(n) / (n * n) as f64).sum();
        let v = BranchTracker::init(&li2, re(0.5)).unwrap().value();
        assert!((v - re(oracle)).norm() < 1e-15);
        assert!(matches!(
            BranchTracker::init(&log, re(1.2)),
            Err(Error::OutsideDisc { .. })
        ));
    }

    #[test]
    fn init_beyond_half_radius_uses_ode() {
        let log = Arc::new(Germ::log_f0());
        let z = c(0.6, 0.6);
        let v = BranchTracker::init(&log, z).unwrap().value();
        let want = -(re(1.0) - z).ln();
        assert!((v - want).norm() < 1e-13, "{v} vs {want}");
    }

    #[test]
    fn log_monodromy_around_one() {
        let log = Arc::new(Germ::log_f0());
        let mut t = BranchTracker::init(&log, re(0.5)).unwrap();
        let v = t.step_along(&circle_points(re(1.0), re(0.5), 64, 1.0)).unwrap();
        let want = re(2f64.ln()) - Complex64::new(0.0, 2.0 * PI);
        assert!((v - want).norm() < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn geometric_is_single_valued() {
        let geo = Arc::new(Germ::geometric(re(1.0)).unwrap());
        let mut t = BranchTracker::init(&geo, re(0.5)).unwrap();
        let v = t.step_along(&circle_points(re(1.0), re(0.5), 16, 1.0)).unwrap();
        assert!((v - re(2.0)).norm() < 1e-13);
    }

    #[test]
    fn li2_monodromy_around_one() {
        // Around 1 counterclockwise, Li₂ picks up -2πi·log(ξ).
        let li2 = Arc::new(Germ::li2());
        let mut t = BranchTracker::init(&li2, re(0.5)).unwrap();
        let v = t.step_along(&circle_points(re(1.0), re(0.5), 64, 1.0)).unwrap();
        let principal = BranchTracker::init(&li2, re(0.5)).unwrap().value();
        let jump = Complex64::new(0.0, -2.0 * PI) * 0.5f64.ln();
        assert!((v - principal - jump).norm() < 1e-11, "{}", v - principal);
    }

    #[test]
    fn backend_agreement_geometric() {
        let rat = Arc::new(Germ::geometric(c(0.8, 0.3)).unwrap());
        let hol = Arc::new(rat.to_holonomic().unwrap());
        let loop_pts = circle_points(1.0 / c(0.8, 0.3), re(0.4), 40, 2.0);
        let mut a = BranchTracker::init(&rat, re(0.4)).unwrap();
        let mut b = BranchTracker::init(&hol, re(0.4)).unwrap();
        for p in loop_pts {
            let (x, y) = (a.step(p).unwrap(), b.step(p).unwrap());
            assert!((x - y).norm() <= 1e-10 * x.norm(), "{x} vs {y}");
        }
    }

    #[test]
    fn backend_agreement_rational_quadratic() {
        let rat = Arc::new(Germ::rational(vec![re(1.0), re(2.0)], vec![re(1.0), re(-3.0), re(2.0)]).unwrap());
        let hol = Arc::new(rat.to_holonomic().unwrap());
        let pts = [c(0.3, 0.4), c(0.75, 0.6), c(1.5, 0.2), c(1.6, -0.5), c(0.75, -0.3), re(0.2)];
        let mut a = BranchTracker::init(&rat, re(0.2)).unwrap();
        let mut b = BranchTracker::init(&hol, re(0.2)).unwrap();
        for p in pts {
            let (x, y) = (a.step(p).unwrap(), b.step(p).unwrap());
            assert!((x - y).norm() <= 1e-10 * x.norm(), "{x} vs {y}");
        }
    }

    #[test]
    fn exp_continues_everywhere() {
        let e = Arc::new(Germ::exp_e1_borel());
        let mut t = BranchTracker::init(&e, re(0.5)).unwrap();
        let v = t.step(c(7.0, -3.0)).unwrap();
        let want = c(7.0, -3.0).exp();
        assert!((v - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn taylor_only_is_confined_to_the_disc() {
        let g = Arc::new(
            Germ::taylor_only("geo", vec![re(1.0); 400], 1.0, SingularSet::finite([re(1.0)])).unwrap(),
        );
        let mut t = BranchTracker::init(&g, re(0.3)).unwrap();
        assert!((t.step(c(0.0, 0.5)).unwrap() - 1.0 / c(1.0, -0.5)).norm() < 1e-14);
        assert!(t.step(re(1.3)).is_err());
    }

    #[test]
    fn segment_through_singularity_is_rejected() {
        let log = Arc::new(Germ::log_f0());
        let mut t = BranchTracker::init(&log, re(0.5)).unwrap();
        assert!(matches!(t.step(re(1.5)), Err(Error::SegmentTooClose { .. })));
    }

    #[test]
    fn power_principal_values() {
        let p = Arc::new(Germ::power(re(0.5)).unwrap());
        let z = c(0.7, -0.2);
        let want = (re(1.0) - z).sqrt();
        assert!((p.eval_principal(z).unwrap() - want).norm() < 1e-13);
        let poly = Germ::power(re(3.0)).unwrap();
        assert!(poly.singular_set().finite_points().unwrap().is_empty());
        assert!(poly.radius_of_convergence().is_infinite());
    }

    #[test]
    fn follow_path_matches_dense_polyline() {
        let log = Arc::new(Germ::log_f0());
        let loop_path = Path::circle(re(1.0), re(0.3), 1.0).unwrap();
        let mut t = BranchTracker::init(&log, re(0.3)).unwrap();
        let v = t.follow_path(&loop_path).unwrap();
        let want = -re(0.7).ln() - Complex64::new(0.0, 2.0 * PI);
        assert!((v - want).norm() < 1e-12);
    }

    #[test]
    fn expansion_reproduces_nearby_values() {
        let log = Arc::new(Germ::log_f0());
        let mut t = BranchTracker::init(&log, re(0.5)).unwrap();
        t.step_along(&circle_points(re(1.0), re(0.5), 32, 0.5)).unwrap();
        let e = t.expansion().unwrap();
        let z = t.current_point() + c(0.1, 0.1);
        let want = -(re(1.0) - z).ln() - Complex64::new(0.0, 2.0 * PI);
        assert!((e.eval(z).unwrap() - want).norm() < 1e-13);
    }
}
