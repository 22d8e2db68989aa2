//! Singular sets, the product set `Ω = {0} ∪ A·B`, paths, and the constants
//! `a, b, ρ, δ, M, ε, K` that drive the contour deformation.
//!
//! Closed discrete subsets of ℂ are infinite in general, so a
//! [`SingularSet`] is only ever accessed through [`SingularSet::enumerate`],
//! which lists every member of modulus `≤ R`. Paths are chains of straight
//! lines and circular arcs, parametrized proportionally to arc length on
//! `[0, 1]`; all clearance and modulus bounds below are computed from that
//! exact geometry rather than by sampling.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Hard cap on the size of a single enumeration.
const MAX_ENUMERATION: usize = 5_000_000;

/// A closed discrete subset of ℂ.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularSet {
    /// An explicit finite list.
    Finite { points: Vec<Complex64>, label: String },
    /// The one-dimensional lattice `step·ℤ`, optionally without 0.
    Lattice { step: Complex64, exclude_zero: bool },
    /// The arithmetic progression `{first + k·step : k ≥ 0}`.
    Progression { first: Complex64, step: Complex64 },
    /// `{0} ∪ (A′·B′)`, enumerated as in the finiteness argument for `Ω`.
    Product {
        a: Box<SingularSet>,
        b: Box<SingularSet>,
        a_min: f64,
        b_min: f64,
    },
}

fn canonical(z: Complex64) -> Complex64 {
    // Fold -0.0 into 0.0 so exact deduplication is well defined.
    Complex64::new(z.re + 0.0, z.im + 0.0)
}

/// Sort by modulus, then argument, and drop exact duplicates.
pub(crate) fn sort_dedup(points: &mut Vec<Complex64>) {
    for p in points.iter_mut() {
        *p = canonical(*p);
    }
    points.sort_by(|x, y| {
        x.norm()
            .total_cmp(&y.norm())
            .then(x.arg().total_cmp(&y.arg()))
            .then(x.re.total_cmp(&y.re))
            .then(x.im.total_cmp(&y.im))
    });
    points.dedup();
}

impl SingularSet {
    pub fn finite(points: impl IntoIterator<Item = Complex64>) -> Self {
        let mut points: Vec<Complex64> = points.into_iter().collect();
        sort_dedup(&mut points);
        let label = format!(
            "{{{}}}",
            points
                .iter()
                .map(|p| format_point(*p))
                .collect::<Vec<_>>()
                .join(", ")
        );
        SingularSet::Finite { points, label }
    }

    pub fn empty() -> Self {
        SingularSet::Finite {
            points: Vec::new(),
            label: "{}".to_string(),
        }
    }

    pub fn lattice(step: Complex64, exclude_zero: bool) -> Result<Self> {
        if step.norm() == 0.0 || !step.is_finite() {
            return Err(Error::InvalidParameter("lattice step must be nonzero".into()));
        }
        Ok(SingularSet::Lattice { step, exclude_zero })
    }

    pub fn progression(first: Complex64, step: Complex64) -> Result<Self> {
        if step.norm() == 0.0 || !step.is_finite() || !first.is_finite() {
            return Err(Error::InvalidParameter(
                "progression step must be nonzero".into(),
            ));
        }
        Ok(SingularSet::Progression { first, step })
    }

    pub fn label(&self) -> String {
        match self {
            SingularSet::Finite { label, .. } => label.clone(),
            SingularSet::Lattice { step, exclude_zero } => {
                let base = format!("{}·ℤ", format_point(*step));
                if *exclude_zero {
                    format!("{base} ∖ {{0}}")
                } else {
                    base
                }
            }
            SingularSet::Progression { first, step } => {
                format!("{} + {}·ℕ", format_point(*first), format_point(*step))
            }
            SingularSet::Product { a, b, .. } => format!("{{0}} ∪ ({})·({})", a.label(), b.label()),
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            SingularSet::Finite { .. } => true,
            SingularSet::Lattice { .. } | SingularSet::Progression { .. } => false,
            SingularSet::Product { a, b, .. } => a.is_finite() && b.is_finite(),
        }
    }

    /// All members when the set is finite.
    pub fn finite_points(&self) -> Option<Vec<Complex64>> {
        match self {
            SingularSet::Finite { points, .. } => Some(points.clone()),
            _ if self.is_finite() => Some(self.enumerate(f64::INFINITY)),
            _ => None,
        }
    }

    pub fn contains_zero(&self) -> bool {
        self.enumerate(0.0).iter().any(|p| p.norm() == 0.0)
    }

    /// The members of modulus `≤ r`, sorted by modulus, each exactly once.
    pub fn enumerate(&self, r: f64) -> Vec<Complex64> {
        let mut out = match self {
            SingularSet::Finite { points, .. } => {
                return points.iter().copied().filter(|p| p.norm() <= r).collect();
            }
            SingularSet::Lattice { step, exclude_zero } => {
                let kmax = if r.is_finite() {
                    (r / step.norm()).floor().min(MAX_ENUMERATION as f64) as i64
                } else {
                    MAX_ENUMERATION as i64 / 2
                };
                (-kmax..=kmax)
                    .filter(|&k| !(k == 0 && *exclude_zero))
                    .map(|k| step * k as f64)
                    .filter(|p| p.norm() <= r)
                    .collect::<Vec<_>>()
            }
            SingularSet::Progression { first, step } => progression_in_disc(*first, *step, r),
            SingularSet::Product { a, b, a_min, b_min } => {
                let mut out = vec![Complex64::new(0.0, 0.0)];
                if a_min.is_finite() && b_min.is_finite() {
                    let alphas: Vec<Complex64> = a
                        .enumerate(r / b_min)
                        .into_iter()
                        .filter(|p| p.norm() > 0.0)
                        .collect();
                    let betas: Vec<Complex64> = b
                        .enumerate(r / a_min)
                        .into_iter()
                        .filter(|p| p.norm() > 0.0)
                        .collect();
                    for alpha in &alphas {
                        for beta in &betas {
                            let w = alpha * beta;
                            if w.norm() <= r {
                                out.push(w);
                            }
                        }
                    }
                }
                out
            }
        };
        sort_dedup(&mut out);
        out
    }

    /// Members of modulus in `(0, r]`.
    pub fn enumerate_nonzero(&self, r: f64) -> Vec<Complex64> {
        self.enumerate(r)
            .into_iter()
            .filter(|p| p.norm() > 0.0)
            .collect()
    }

    /// The nearest member to `z` together with its distance.
    pub fn nearest(&self, z: Complex64) -> Option<(Complex64, f64)> {
        if let SingularSet::Finite { points, .. } = self {
            return points
                .iter()
                .map(|p| (*p, (p - z).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1));
        }
        let mut d = z.norm().max(1.0);
        while d < 1e300 {
            let best = self
                .enumerate(z.norm() + d)
                .into_iter()
                .map(|p| (p, (p - z).norm()))
                .min_by(|x, y| x.1.total_cmp(&y.1));
            if let Some(best) = best {
                if best.1 <= d {
                    return Some(best);
                }
            }
            d *= 2.0;
        }
        None
    }

    /// `dist(z, S)`; `+∞` for the empty set.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.nearest(z).map_or(f64::INFINITY, |(_, d)| d)
    }

    /// The member closest to the segment `[p, q]` and its distance.
    pub fn nearest_to_segment(&self, p: Complex64, q: Complex64) -> Option<(Complex64, f64)> {
        let seg = Segment::Line { from: p, to: q };
        let candidates = match self {
            SingularSet::Finite { points, .. } => points.clone(),
            _ => {
                let mid = 0.5 * (p + q);
                let reach = self.distance_to(mid) + 0.5 * (q - p).norm();
                if !reach.is_finite() {
                    return None;
                }
                self.enumerate(mid.norm() + reach)
            }
        };
        candidates
            .into_iter()
            .map(|w| (w, seg.distance_to(w)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
    }
}

fn progression_in_disc(first: Complex64, step: Complex64, r: f64) -> Vec<Complex64> {
    // |first + k step|² ≤ r² is a quadratic inequality in k.
    let qa = step.norm_sqr();
    let qb = 2.0 * (first * step.conj()).re;
    let qc = first.norm_sqr() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let lo = ((-qb - sq) / (2.0 * qa)).floor().max(0.0);
    let hi = ((-qb + sq) / (2.0 * qa)).ceil();
    if hi < 0.0 {
        return Vec::new();
    }
    let hi = hi.min(lo + MAX_ENUMERATION as f64);
    let (lo, hi) = (lo as u64, hi as u64);
    (lo..=hi)
        .map(|k| first + step * k as f64)
        .filter(|p| p.norm() <= r)
        .collect()
}

pub(crate) fn format_point(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// `Ω = {0} ∪ (A·B)`.
///
/// Enumeration only multiplies `α ∈ A ∩ D̄(R/b)` with `β ∈ B ∩ D̄(R/a)`,
/// which is complete because `|α| ≥ a` and `|β| ≥ b` for nonzero members.
pub fn product_set(a: &SingularSet, b: &SingularSet) -> SingularSet {
    let a_min = min_modulus(a).unwrap_or(f64::INFINITY);
    let b_min = min_modulus(b).unwrap_or(f64::INFINITY);
    SingularSet::Product {
        a: Box::new(a.clone()),
        b: Box::new(b.clone()),
        a_min,
        b_min,
    }
}

/// `min{|α| : α ∈ S ∖ {0}}`, found by enumerating with a doubling radius.
pub fn min_modulus(s: &SingularSet) -> Result<f64> {
    match s {
        SingularSet::Finite { points, .. } => points
            .iter()
            .map(|p| p.norm())
            .filter(|&m| m > 0.0)
            .min_by(f64::total_cmp)
            .ok_or(Error::NoNonzeroMembers),
        SingularSet::Lattice { step, .. } => Ok(step.norm()),
        _ => {
            let mut r = 1.0_f64;
            while r < 1e300 {
                if let Some(m) = s
                    .enumerate(r)
                    .into_iter()
                    .map(|p| p.norm())
                    .find(|&m| m > 0.0)
                {
                    return Ok(m);
                }
                r *= 2.0;
            }
            Err(Error::NoNonzeroMembers)
        }
    }
}

/// A line or circular arc.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Line {
        from: Complex64,
        to: Complex64,
    },
    /// `center + radius·e^{i(start_angle + u·sweep)}`, `u ∈ [0, 1]`.
    Arc {
        center: Complex64,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
}

fn angle_fraction(theta: f64, start: f64, sweep: f64) -> Option<f64> {
    if sweep.abs() >= TAU {
        return Some(0.0);
    }
    let d = ((theta - start) * sweep.signum()).rem_euclid(TAU);
    (d <= sweep.abs()).then(|| d / sweep.abs())
}

impl Segment {
    pub fn length(&self) -> f64 {
        match self {
            Segment::Line { from, to } => (to - from).norm(),
            Segment::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    pub fn point_at(&self, u: f64) -> Complex64 {
        match self {
            Segment::Line { from, to } => from + (to - from) * u,
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => center + Complex64::from_polar(*radius, start_angle + u * sweep),
        }
    }

    /// Unit tangent.
    pub fn tangent_at(&self, u: f64) -> Complex64 {
        match self {
            Segment::Line { from, to } => (to - from) / (to - from).norm(),
            Segment::Arc {
                start_angle, sweep, ..
            } => Complex64::from_polar(1.0, start_angle + u * sweep + sweep.signum() * PI / 2.0),
        }
    }

    pub fn start(&self) -> Complex64 {
        self.point_at(0.0)
    }

    pub fn end(&self) -> Complex64 {
        self.point_at(1.0)
    }

    pub fn distance_to(&self, p: Complex64) -> f64 {
        match self {
            Segment::Line { from, to } => {
                let d = to - from;
                let len2 = d.norm_sqr();
                if len2 == 0.0 {
                    return (p - from).norm();
                }
                let u = (((p - from) * d.conj()).re / len2).clamp(0.0, 1.0);
                (p - (from + d * u)).norm()
            }
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let rel = p - center;
                if rel.norm() == 0.0 {
                    return *radius;
                }
                match angle_fraction(rel.arg(), *start_angle, *sweep) {
                    Some(_) => (rel.norm() - radius).abs(),
                    None => (p - self.start()).norm().min((p - self.end()).norm()),
                }
            }
        }
    }

    pub fn max_modulus(&self) -> f64 {
        match self {
            Segment::Line { from, to } => from.norm().max(to.norm()),
            Segment::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                if center.norm() == 0.0 {
                    return *radius;
                }
                match angle_fraction(center.arg(), *start_angle, *sweep) {
                    Some(_) => center.norm() + radius,
                    None => self.start().norm().max(self.end().norm()),
                }
            }
        }
    }
}

/// A piecewise line/arc path `γ : [0, 1] → ℂ`, parametrized
/// proportionally to arc length, so `|γ′(t)|` equals the total length.
///
/// Paths built by [`smooth_waypoints`] are C¹ with Lipschitz derivative.
/// Concatenations may have corners at the junctions; those junctions are
/// reported by [`Path::knots`] so integrators can stop there.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    control_points: Vec<Complex64>,
    segments: Vec<Segment>,
    cumulative: Vec<f64>,
    length: f64,
    start: Complex64,
}

impl Path {
    pub fn from_segments(control_points: Vec<Complex64>, segments: Vec<Segment>) -> Result<Self> {
        let segments: Vec<Segment> = segments.into_iter().filter(|s| s.length() > 0.0).collect();
        let start = match (segments.first(), control_points.first()) {
            (Some(s), _) => s.start(),
            (None, Some(p)) => *p,
            (None, None) => return Err(Error::InvalidPath("empty path".into())),
        };
        for w in segments.windows(2) {
            let (e, s) = (w[0].end(), w[1].start());
            if (e - s).norm() > 1e-9 * (1.0 + e.norm()) {
                return Err(Error::InvalidPath(format!(
                    "segments do not join: {e} vs {s}"
                )));
            }
        }
        let mut cumulative = Vec::with_capacity(segments.len() + 1);
        cumulative.push(0.0);
        for s in &segments {
            cumulative.push(cumulative.last().unwrap() + s.length());
        }
        let length = *cumulative.last().unwrap();
        Ok(Path {
            control_points,
            segments,
            cumulative,
            length,
            start,
        })
    }

    /// The degenerate path `γ ≡ z`.
    pub fn constant(z: Complex64) -> Self {
        Path {
            control_points: vec![z],
            segments: Vec::new(),
            cumulative: vec![0.0],
            length: 0.0,
            start: z,
        }
    }

    /// Straight segments through the points, no rounding.
    pub fn polyline(points: &[Complex64]) -> Result<Self> {
        check_waypoints(points)?;
        let segments = points
            .windows(2)
            .map(|w| Segment::Line { from: w[0], to: w[1] })
            .collect();
        Path::from_segments(points.to_vec(), segments)
    }

    /// The circle around `center` through `start`, run `turns` times
    /// (counterclockwise for positive `turns`).
    pub fn circle(center: Complex64, start: Complex64, turns: f64) -> Result<Self> {
        let radius = (start - center).norm();
        if radius == 0.0 || turns == 0.0 || !turns.is_finite() {
            return Err(Error::InvalidPath(
                "circle needs a positive radius and nonzero turns".into(),
            ));
        }
        let seg = Segment::Arc {
            center,
            radius,
            start_angle: (start - center).arg(),
            sweep: TAU * turns,
        };
        Path::from_segments(vec![start, center], vec![seg])
    }

    pub fn concat(paths: &[Path]) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InvalidPath("nothing to concatenate".into()))?;
        let mut controls = first.control_points.clone();
        let mut segments = first.segments.clone();
        let mut end = first.end();
        for p in &paths[1..] {
            if (p.start - end).norm() > 1e-9 * (1.0 + end.norm()) {
                return Err(Error::InvalidPath(format!(
                    "path starting at {} does not continue from {end}",
                    p.start
                )));
            }
            controls.extend_from_slice(&p.control_points);
            segments.extend(p.segments.iter().cloned());
            end = p.end();
        }
        Path::from_segments(controls, segments)
    }

    pub fn control_points(&self) -> &[Complex64] {
        &self.control_points
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    fn locate(&self, t: f64) -> Option<(usize, f64)> {
        if self.segments.is_empty() {
            return None;
        }
        let s = t.clamp(0.0, 1.0) * self.length;
        let i = self.cumulative[1..]
            .partition_point(|&c| c <= s)
            .min(self.segments.len() - 1);
        let len = self.segments[i].length();
        Some((i, ((s - self.cumulative[i]) / len).clamp(0.0, 1.0)))
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match self.locate(t) {
            None => self.start,
            Some((i, u)) => self.segments[i].point_at(u),
        }
    }

    pub fn eval_derivative(&self, t: f64) -> Complex64 {
        match self.locate(t) {
            None => Complex64::new(0.0, 0.0),
            Some((i, u)) => self.segments[i].tangent_at(u) * self.length,
        }
    }

    pub fn start(&self) -> Complex64 {
        self.start
    }

    pub fn end(&self) -> Complex64 {
        self.segments.last().map_or(self.start, |s| s.end())
    }

    /// Parameter values where one segment hands over to the next.
    pub fn knots(&self) -> Vec<f64> {
        if self.length == 0.0 {
            return Vec::new();
        }
        self.cumulative[1..self.cumulative.len() - 1]
            .iter()
            .map(|c| c / self.length)
            .collect()
    }

    /// Whether the tangent is continuous across every junction.
    pub fn is_c1(&self) -> bool {
        self.segments
            .windows(2)
            .all(|w| (w[0].tangent_at(1.0) - w[1].tangent_at(0.0)).norm() < 1e-9)
    }

    pub fn max_speed(&self) -> f64 {
        self.length
    }

    pub fn max_modulus(&self) -> f64 {
        self.segments
            .iter()
            .map(Segment::max_modulus)
            .fold(self.start.norm(), f64::max)
    }

    pub fn distance_to(&self, p: Complex64) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance_to(p))
            .fold((self.start - p).norm(), f64::min)
    }

    /// `∫₀¹ |γ′(t)| / |γ(t)| dt`, the exponent in the growth bound
    /// `|Ψ_t(ζ)| ≤ |ζ| exp(∫₀ᵗ |γ′|/|γ|)` for the cutoff field.
    pub fn log_length(&self) -> f64 {
        const PANELS: usize = 256;
        self.segments
            .iter()
            .map(|seg| {
                let len = seg.length();
                let h = 1.0 / PANELS as f64;
                let inv = |u: f64| 1.0 / seg.point_at(u).norm();
                let mut acc = inv(0.0) + inv(1.0);
                for k in 1..PANELS {
                    let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * inv(k as f64 * h);
                }
                len * acc * h / 3.0
            })
            .sum()
    }

    /// Dense samples `(t, γ(t))`, `n + 1` of them, plus every knot.
    pub fn sample(&self, n: usize) -> Vec<(f64, Complex64)> {
        let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        ts.extend(self.knots());
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.into_iter().map(|t| (t, self.eval(t))).collect()
    }
}

fn check_waypoints(points: &[Complex64]) -> Result<()> {
    if points.len() < 2 {
        return Err(Error::InvalidPath("need at least two waypoints".into()));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidPath(format!("non-finite waypoint {p}")));
    }
    for (i, w) in points.windows(2).enumerate() {
        if w[0] == w[1] {
            return Err(Error::InvalidPath(format!(
                "duplicate consecutive waypoints at index {i}"
            )));
        }
    }
    Ok(())
}

/// A C¹ path through the waypoints: the polyline with each corner replaced
/// by a tangent circular arc. The arc starts `ℓ` before and ends `ℓ` after
/// the corner, with `ℓ = min(rounding, ¼ of the shorter adjacent segment)`;
/// the rounded path stays within `ℓ` of the polyline. Collinear interior
/// points are passed straight through.
pub fn smooth_waypoints(points: &[Complex64], rounding: Option<f64>) -> Result<Path> {
    check_waypoints(points)?;
    if let Some(r) = rounding {
        if !(r >= 0.0) {
            return Err(Error::InvalidPath(format!("negative rounding {r}")));
        }
    }
    let n = points.len();
    let lens: Vec<f64> = points.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let mut segments = Vec::new();
    let mut current = points[0];
    for i in 1..n - 1 {
        let u = (points[i] - points[i - 1]) / lens[i - 1];
        let v = (points[i + 1] - points[i]) / lens[i];
        let cross = u.re * v.im - u.im * v.re;
        let dot = u.re * v.re + u.im * v.im;
        if cross.abs() <= 1e-12 {
            if dot > 0.0 {
                continue;
            }
            return Err(Error::InvalidPath(format!(
                "path reverses direction at waypoint {i}"
            )));
        }
        let ell = rounding
            .unwrap_or(f64::INFINITY)
            .min(0.25 * lens[i - 1].min(lens[i]));
        if ell == 0.0 {
            segments.push(Segment::Line {
                from: current,
                to: points[i],
            });
            current = points[i];
            continue;
        }
        let theta = cross.atan2(dot);
        let radius = ell / (theta.abs() / 2.0).tan();
        let a = points[i] - u * ell;
        let b = points[i] + v * ell;
        let normal = if theta > 0.0 {
            Complex64::i() * u
        } else {
            -Complex64::i() * u
        };
        let center = a + normal * radius;
        segments.push(Segment::Line {
            from: current,
            to: a,
        });
        segments.push(Segment::Arc {
            center,
            radius,
            start_angle: (a - center).arg(),
            sweep: theta,
        });
        current = b;
    }
    segments.push(Segment::Line {
        from: current,
        to: points[n - 1],
    });
    Path::from_segments(points.to_vec(), segments)
}

/// Outcome of [`validate_path`].
#[derive(Debug, Clone, Serialize)]
pub struct PathDiagnostics {
    pub basepoint: Complex64,
    pub basepoint_modulus: f64,
    pub min_modulus: f64,
    pub max_modulus: f64,
    /// `dist(γ([0,1]), Ω ∩ D̄_{2M})`.
    pub clearance: f64,
    pub nearest_singular_point: Complex64,
    /// How the bounds were obtained.
    pub certificate: &'static str,
}

/// Clearances at or below this (relative to `max(1, M)`) count as hits.
pub const CLEARANCE_RESOLUTION: f64 = 1e-12;

/// Check `0 < |γ(0)| < ab` and that `γ` avoids `Ω`.
///
/// Members of `Ω` with modulus above `2M` are at distance `> M` from the
/// path, so only `Ω ∩ D̄_{2M}` is inspected.
pub fn validate_path(path: &Path, omega: &SingularSet, a: f64, b: f64) -> Result<PathDiagnostics> {
    let z0 = path.start();
    let m0 = z0.norm();
    let bound = a * b;
    if !(m0 > 0.0 && m0 < bound) {
        return Err(Error::BasepointOutOfRange {
            modulus: m0,
            bound,
        });
    }
    let max_modulus = path.max_modulus();
    let min_modulus = path.distance_to(Complex64::new(0.0, 0.0));
    let mut clearance = f64::INFINITY;
    let mut nearest = Complex64::new(0.0, 0.0);
    for w in omega.enumerate(2.0 * max_modulus) {
        let d = path.distance_to(w);
        if d < clearance {
            clearance = d;
            nearest = w;
        }
    }
    if clearance <= CLEARANCE_RESOLUTION * max_modulus.max(1.0) {
        return Err(Error::PathHitsSingularity {
            point: nearest,
            distance: clearance,
        });
    }
    Ok(PathDiagnostics {
        basepoint: z0,
        basepoint_modulus: m0,
        min_modulus,
        max_modulus,
        clearance,
        nearest_singular_point: nearest,
        certificate: "exact line/arc distance geometry",
    })
}

/// The constants of the deformation argument for one path.
#[derive(Debug, Clone, Serialize)]
pub struct ProofConstants {
    /// `min |α|`, `α ∈ A ∖ {0}`.
    pub a: f64,
    /// `min |β|`, `β ∈ B ∖ {0}`.
    pub b: f64,
    /// Radius of the initial circle, `|γ(0)|/b < ρ < a`.
    pub rho: f64,
    /// `δ ≤ |γ(t)|` and `|γ(t) − ω| ≥ δ` for `ω ∈ Ω`.
    pub delta: f64,
    /// `|γ(t)| ≤ M`.
    pub m: f64,
    /// Cutoff width.
    pub epsilon: f64,
    /// Growth constant `max|γ′|/δ` of the field.
    pub k: f64,
    /// `∫|γ′|/|γ|`, a sharper growth exponent than `K`.
    pub log_length: f64,
    pub basepoint: Complex64,
}

impl ProofConstants {
    /// Check the three defining inequalities directly.
    pub fn check(&self) -> std::result::Result<(), String> {
        let g0 = self.basepoint.norm();
        if !(g0 / self.b < self.rho && self.rho < self.a) {
            return Err(format!(
                "|γ(0)|/b = {} < ρ = {} < a = {} fails",
                g0 / self.b,
                self.rho,
                self.a
            ));
        }
        if !(self.epsilon < self.a / 2.0) {
            return Err(format!("ε = {} ≥ a/2", self.epsilon));
        }
        let lhs = self.a * self.delta / self.epsilon;
        let rhs = self.m + 2.0 * self.m / self.a * self.epsilon;
        if !(lhs > rhs) {
            return Err(format!("aδ/ε = {lhs} ≤ M + (2M/a)ε = {rhs}"));
        }
        if !(self.delta > 0.0 && self.delta <= self.m) {
            return Err(format!("δ = {} outside (0, M = {}]", self.delta, self.m));
        }
        Ok(())
    }
}

/// Choose `a, b, ρ, δ, M, ε, K` for `γ`, `A`, `B`:
/// `ρ = √(a|γ(0)|/b)`, `ε = min(a/4, aδ/(2M))`, `K = max|γ′|/δ`.
pub fn select_constants(path: &Path, a_set: &SingularSet, b_set: &SingularSet) -> Result<ProofConstants> {
    let a = min_modulus(a_set)?;
    let b = min_modulus(b_set)?;
    let omega = product_set(a_set, b_set);
    let diag = validate_path(path, &omega, a, b)?;
    let m = diag.max_modulus;
    let delta = diag.min_modulus.min(diag.clearance);
    let rho = (a * diag.basepoint_modulus / b).sqrt();
    let epsilon = (a / 4.0).min(a * delta / (2.0 * m));
    Ok(ProofConstants {
        a,
        b,
        rho,
        delta,
        m,
        epsilon,
        k: path.max_speed() / delta,
        log_length: path.log_length(),
        basepoint: path.start(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn re(x: f64) -> Complex64 {
        c(x, 0.0)
    }

    #[test]
    fn product_of_single_points() {
        let one = SingularSet::finite([re(1.0)]);
        assert_eq!(product_set(&one, &one).enumerate(2.0), vec![re(0.0), re(1.0)]);
        let omega = product_set(&SingularSet::finite([re(2.0)]), &SingularSet::finite([re(3.0)]));
        assert_eq!(omega.enumerate(10.0), vec![re(0.0), re(6.0)]);
        assert_eq!(omega.enumerate(5.0), vec![re(0.0)]);
    }

    #[test]
    fn product_of_progression_and_signs() {
        let naturals = SingularSet::progression(re(1.0), re(1.0)).unwrap();
        let signs = SingularSet::finite([re(1.0), re(-1.0)]);
        let got = product_set(&naturals, &signs).enumerate(2.5);
        let mut want = vec![re(0.0), re(1.0), re(-1.0), re(2.0), re(-2.0)];
        sort_dedup(&mut want);
        assert_eq!(got, want);
    }

    #[test]
    fn min_modulus_examples() {
        assert_eq!(min_modulus(&SingularSet::finite([re(1.0)])).unwrap(), 1.0);
        let s = SingularSet::finite([re(0.0), re(3.0), c(0.0, 4.0)]);
        assert_eq!(min_modulus(&s).unwrap(), 3.0);
        let lattice = SingularSet::lattice(c(0.0, TAU), true).unwrap();
        assert!((min_modulus(&lattice).unwrap() - TAU).abs() < 1e-15);
        assert!(matches!(
            min_modulus(&SingularSet::finite([re(0.0)])),
            Err(Error::NoNonzeroMembers)
        ));
        let far = SingularSet::progression(re(1000.5), re(1.0)).unwrap();
        assert_eq!(min_modulus(&far).unwrap(), 1000.5);
    }

    #[test]
    fn lattice_and_progression_enumeration() {
        let l = SingularSet::lattice(c(0.0, TAU), false).unwrap();
        assert_eq!(l.enumerate(7.0).len(), 3);
        assert!(l.contains_zero());
        let p = SingularSet::progression(c(-3.0, 0.5), re(1.0)).unwrap();
        let pts = p.enumerate(1.0);
        assert_eq!(pts, vec![c(0.0, 0.5)]);
        assert!((p.distance_to(re(0.2)) - c(0.2, -0.5).norm()).abs() < 1e-15);
    }

    #[test]
    fn enumeration_is_monotone_in_radius() {
        let omega = product_set(
            &SingularSet::lattice(c(0.0, TAU), true).unwrap(),
            &SingularSet::finite([re(1.0), c(0.5, 0.5)]),
        );
        let small = omega.enumerate(10.0);
        let large = omega.enumerate(20.0);
        assert!(small.iter().all(|p| large.contains(p)));
    }

    #[test]
    fn two_point_path_is_straight() {
        let p = smooth_waypoints(&[re(0.3), c(0.3, 1.0)], None).unwrap();
        assert_eq!(p.segments().len(), 1);
        let d0 = p.eval_derivative(0.1);
        let d1 = p.eval_derivative(0.9);
        assert!((d0 - d1).norm() < 1e-15);
        assert!((p.eval(0.0) - re(0.3)).norm() == 0.0);
        assert!((p.eval(1.0) - c(0.3, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn collinear_triple_is_not_rounded() {
        let p = smooth_waypoints(&[re(0.0), re(1.0), re(3.0)], Some(0.2)).unwrap();
        assert_eq!(p.segments().len(), 1);
        assert!((p.length() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rounded_square_stays_close_to_polyline() {
        let pts = [re(0.3), c(0.3, -0.5), c(1.7, -0.5), c(1.7, 0.5), c(0.3, 0.5), re(0.3)];
        let ell = 0.1;
        let p = smooth_waypoints(&pts, Some(ell)).unwrap();
        let poly = Path::polyline(&pts).unwrap();
        assert!(p.is_c1());
        for (_, z) in p.sample(4000) {
            assert!(poly.distance_to(z) <= ell + 1e-12);
        }
        assert_eq!(p.eval(0.0), re(0.3));
        assert!((p.eval(1.0) - re(0.3)).norm() < 1e-15);
    }

    #[test]
    fn rounded_path_derivative_is_lipschitz() {
        let pts = [re(0.3), c(0.3, -0.5), c(1.7, -0.5), c(1.7, 0.5), c(0.3, 0.5), re(0.3)];
        let p = smooth_waypoints(&pts, Some(0.1)).unwrap();
        // Curvature is at most 1/R with R = ℓ / tan(π/4) = 0.1 here.
        let lip = p.length() * p.length() / 0.1;
        let n = 20_000;
        let h = 1.0 / n as f64;
        for k in 0..n {
            let t = k as f64 * h;
            let q = (p.eval_derivative(t + h) - p.eval_derivative(t)).norm() / h;
            assert!(q <= lip * (1.0 + 1e-6), "difference quotient {q} at t = {t}");
        }
    }

    #[test]
    fn duplicate_waypoints_rejected() {
        assert!(matches!(
            smooth_waypoints(&[re(0.3), re(0.3), re(1.0)], None),
            Err(Error::InvalidPath(_))
        ));
        assert!(smooth_waypoints(&[re(0.3)], None).is_err());
    }

    #[test]
    fn arc_geometry() {
        let circle = Path::circle(re(0.5), re(0.3), 1.0).unwrap();
        assert!((circle.max_modulus() - 0.7).abs() < 1e-15);
        assert!((circle.distance_to(re(0.0)) - 0.3).abs() < 1e-15);
        assert!((circle.distance_to(re(1.0)) - 0.3).abs() < 1e-15);
        let quarter = Segment::Arc {
            center: re(0.0),
            radius: 1.0,
            start_angle: 0.0,
            sweep: PI / 2.0,
        };
        assert!((quarter.distance_to(re(-2.0)) - c(-2.0, -1.0).norm()).abs() < 1e-15);
        assert!((quarter.distance_to(c(0.0, 3.0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn validate_path_examples() {
        let omega = SingularSet::finite([re(0.0), re(1.0)]);
        let lp = Path::circle(re(1.0), re(0.3), 1.0).unwrap();
        let d = validate_path(&lp, &omega, 1.0, 1.0).unwrap();
        assert!((d.clearance - 0.3).abs() < 1e-15);

        let bad = Path::polyline(&[re(1.5), c(1.5, 1.0)]).unwrap();
        assert!(matches!(
            validate_path(&bad, &omega, 1.0, 1.0),
            Err(Error::BasepointOutOfRange { .. })
        ));
        let through_zero = Path::polyline(&[re(0.3), re(-0.3)]).unwrap();
        assert!(matches!(
            validate_path(&through_zero, &omega, 1.0, 1.0),
            Err(Error::PathHitsSingularity { .. })
        ));
    }

    #[test]
    fn constants_on_circle_fixture() {
        let one = SingularSet::finite([re(1.0)]);
        let gamma = Path::circle(re(0.5), re(0.3), 1.0).unwrap();
        let k = select_constants(&gamma, &one, &one).unwrap();
        assert_eq!((k.a, k.b), (1.0, 1.0));
        assert!((k.m - 0.7).abs() < 1e-15);
        assert!((k.delta - 0.3).abs() < 1e-15);
        assert!((k.rho - 0.3f64.sqrt()).abs() < 1e-15);
        assert!((k.epsilon - (0.25f64).min(0.3 / 1.4)).abs() < 1e-15);
        assert!((k.k - TAU * 0.2 / 0.3).abs() < 1e-12);
        k.check().unwrap();
    }

    #[test]
    fn epsilon_rule_satisfies_inequalities() {
        // ε ≤ a/4 < a/2, and ε ≤ aδ/(2M) gives aδ/ε ≥ 2M > M + (2M/a)ε
        // because (2M/a)ε ≤ M/2.
        for &(a, delta, m) in &[(1.0, 0.3, 1.8), (2.0, 0.01, 5.0), (0.5, 0.4, 0.45), (3.0, 1.0, 1.0)] {
            let eps = (a / 4.0f64).min(a * delta / (2.0 * m));
            assert!(eps < a / 2.0);
            assert!(a * delta / eps > m + 2.0 * m / a * eps);
        }
    }
}
