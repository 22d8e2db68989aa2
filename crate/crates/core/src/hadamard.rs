//! The Hadamard product by contour integration.
//!
//! On the principal sheet `f ⊙ g(ξ) = ∫₀¹ f(ζ) g(ξ/ζ) ds`, `ζ = ρe^{2πis}`,
//! evaluated by the periodic trapezoidal rule. Along a path `γ` the circle
//! is replaced by its image `Ψ_t(C_ρ)` under the deformation flow; each
//! node of the discretized contour carries trackers for `f` at `ζ` and for
//! `g` at `γ(t)/ζ`, so the integrand is always evaluated on the right sheet.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::deformation::{
    is_simple_polygon, ContourSnapshot, CutoffProfile, DeformationField, FieldVariant, FlowMap,
    IntegratorSettings,
};
use crate::error::{Error, Result};
use crate::geometry::{self, Path, ProofConstants, SingularSet};
use crate::germ::{BranchTracker, Germ, LocalExpansion, DEFAULT_STEP_TOLERANCE};

/// Knobs for [`continue_hadamard`].
#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    /// Initial number of contour nodes.
    pub n_nodes: usize,
    /// Absolute target for the quadrature error estimate.
    pub tolerance: f64,
    pub field: FieldVariant,
    pub profile: CutoffProfile,
    /// Times at which node positions are recorded.
    pub snapshots: Vec<f64>,
    pub max_nodes: usize,
    /// Adjacent nodes must be within `κ` times the local clearance.
    pub kappa: f64,
    /// Number of Taylor coefficients returned at the endpoint.
    pub taylor_order: usize,
    /// `None` uses the defaults for the chosen field.
    pub integrator: Option<IntegratorSettings>,
    pub step_tolerance: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            n_nodes: 256,
            tolerance: 1e-10,
            field: FieldVariant::Cutoff,
            profile: CutoffProfile::Smoothstep,
            snapshots: Vec::new(),
            max_nodes: 16_384,
            kappa: 0.25,
            taylor_order: 16,
            integrator: None,
            step_tolerance: DEFAULT_STEP_TOLERANCE,
        }
    }
}

/// `count` uniform snapshot times in `(0, 1]`.
pub fn uniform_snapshots(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 / count as f64).collect()
}

const MIN_S_GAP: f64 = 1e-14;
const DT_INITIAL: f64 = 1.0 / 128.0;
const DT_MAX: f64 = 1.0 / 32.0;
const DT_MIN: f64 = 1.0 / 4096.0;
const SEAM_TOLERANCE: f64 = 1e-6;
const LOCAL_RING: usize = 32;

/// One node of the deformed contour.
#[derive(Debug, Clone)]
pub struct ContourNode {
    pub s: f64,
    pub position: Complex64,
    pub f_tracker: BranchTracker,
    pub g_tracker: BranchTracker,
    min_pin: f64,
    h: f64,
}

impl ContourNode {
    /// Smallest distance to `A′ ∪ {γ(t)/β}` seen so far.
    pub fn min_pin_distance(&self) -> f64 {
        self.min_pin
    }
}

/// A cyclic list of nodes discretizing `Ψ_t(C_ρ)`.
#[derive(Debug, Clone)]
pub struct Contour {
    pub nodes: Vec<ContourNode>,
    pub origin_radius: f64,
}

impl Contour {
    pub fn positions(&self) -> Vec<Complex64> {
        self.nodes.iter().map(|n| n.position).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub quadrature_error_estimate: f64,
    pub min_pin_distance: f64,
    pub node_count: usize,
    pub initial_nodes: usize,
    pub refinements: usize,
    pub checkpoints: usize,
    pub rejected_checkpoints: usize,
    pub seam_mismatch: f64,
    pub simple_polygon: bool,
    pub collisions: usize,
    pub flow_steps: usize,
    /// `|local_taylor[0] − value|`.
    pub taylor_consistency: f64,
}

/// Outcome of [`continue_hadamard`].
#[derive(Debug, Clone, Serialize)]
pub struct ContinuationResult {
    pub endpoint: Complex64,
    pub value: Complex64,
    /// Coefficients of `f ⊙ g` at the endpoint, in powers of `ξ − γ(1)`.
    pub local_taylor: Vec<Complex64>,
    /// Radius of the ring the coefficients were extracted from.
    pub local_radius: f64,
    pub snapshots: Vec<ContourSnapshot>,
    pub diagnostics: Diagnostics,
    pub constants: ProofConstants,
}

struct Geometry {
    a_set: SingularSet,
    b_set: SingularSet,
    a_prime: Vec<Complex64>,
    b_prime: Option<Vec<Complex64>>,
}

impl Geometry {
    fn r_f(&self, z: Complex64) -> f64 {
        self.a_set.distance_to(z).min(z.norm())
    }

    fn r_g(&self, w: Complex64) -> f64 {
        self.b_set.distance_to(w).min(w.norm())
    }

    fn pin_distance(&self, z: Complex64, w: Complex64) -> f64 {
        let fixed = self
            .a_prime
            .iter()
            .map(|a| (z - a).norm())
            .fold(f64::INFINITY, f64::min);
        // |ζ − γ/β| = |ζ| |β − w| / |β|.
        let moving = match &self.b_prime {
            Some(bs) => bs
                .iter()
                .map(|b| z.norm() * (b - w).norm() / b.norm())
                .fold(f64::INFINITY, f64::min),
            None => match self.b_set.nearest(w) {
                Some((b, d)) if b.norm() > 0.0 => z.norm() * d / b.norm(),
                _ => f64::INFINITY,
            },
        };
        fixed.min(moving)
    }
}

/// Incremental continuation of `f ⊙ g` along a path.
pub struct Continuation {
    f: Arc<Germ>,
    g: Arc<Germ>,
    flow: FlowMap,
    geom: Geometry,
    opts: ContinuationOptions,
    contour: Contour,
    checkpoints: Vec<f64>,
    t: f64,
    refinements: usize,
    rejected: usize,
    snapshots: Vec<ContourSnapshot>,
    simple: bool,
    collisions: usize,
}

impl Continuation {
    pub fn new(f: &Arc<Germ>, g: &Arc<Germ>, path: &Path, opts: ContinuationOptions) -> Result<Self> {
        if opts.n_nodes < 4 {
            return Err(Error::InvalidParameter("need at least 4 nodes".into()));
        }
        if !(opts.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        let a_set = f.singular_set().clone();
        let b_set = g.singular_set().clone();
        let field = DeformationField::new(opts.field, path, &a_set, &b_set, opts.profile)?;
        let mut flow = FlowMap::new(field);
        if let Some(settings) = opts.integrator {
            flow = flow.with_settings(settings);
        }
        let a_prime = flow.field.a_prime().to_vec();
        let b_prime = b_set
            .finite_points()
            .map(|v| v.into_iter().filter(|b| b.norm() > 0.0).collect());
        let geom = Geometry {
            a_set,
            b_set,
            a_prime,
            b_prime,
        };
        let rho = flow.field.constants().rho;
        let mut this = Continuation {
            f: Arc::clone(f),
            g: Arc::clone(g),
            flow,
            geom,
            opts,
            contour: Contour {
                nodes: Vec::new(),
                origin_radius: rho,
            },
            checkpoints: vec![0.0],
            t: 0.0,
            refinements: 0,
            rejected: 0,
            snapshots: Vec::new(),
            simple: true,
            collisions: 0,
        };
        let n = this.opts.n_nodes;
        let nodes: Result<Vec<ContourNode>> = (0..n)
            .into_par_iter()
            .map(|k| this.seed(k as f64 / n as f64))
            .collect();
        this.contour.nodes = nodes?;
        if this.opts.snapshots.iter().any(|&t| t == 0.0) {
            this.record_snapshot();
        }
        Ok(this)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn contour(&self) -> &Contour {
        &self.contour
    }

    pub fn checkpoints(&self) -> &[f64] {
        &self.checkpoints
    }

    pub fn constants(&self) -> &ProofConstants {
        self.flow.field.constants()
    }

    pub fn flow(&self) -> &FlowMap {
        &self.flow
    }

    fn seed(&self, s: f64) -> Result<ContourNode> {
        let rho = self.contour.origin_radius;
        let z = Complex64::from_polar(rho, TAU * s);
        let w = self.flow.field.path().eval(0.0) / z;
        let wrap = |e: Error| Error::NodeTracking {
            s,
            t: 0.0,
            source: Box::new(e),
        };
        let f_tracker = BranchTracker::init(&self.f, z)
            .map_err(wrap)?
            .with_step_tolerance(self.opts.step_tolerance);
        let g_tracker = BranchTracker::init(&self.g, w)
            .map_err(wrap)?
            .with_step_tolerance(self.opts.step_tolerance);
        Ok(ContourNode {
            s,
            position: z,
            f_tracker,
            g_tracker,
            min_pin: self.geom.pin_distance(z, w),
            h: 0.0,
        })
    }

    fn advance_node(&self, node: &mut ContourNode, t_a: f64, t_b: f64) -> Result<()> {
        let path = self.flow.field.path();
        let geom = &self.geom;
        let f_tr = &mut node.f_tracker;
        let g_tr = &mut node.g_tracker;
        let mut anchor_f = f_tr.current_point();
        let mut anchor_g = g_tr.current_point();
        let mut rf = geom.r_f(anchor_f);
        let mut rg = geom.r_g(anchor_g);
        let mut min_pin = node.min_pin;
        // Trackers are only moved once the trajectory is about to leave the
        // half-clearance disc around their current point; every chord they
        // take therefore stays inside a disc free of singular points.
        let (z, _) = self
            .flow
            .flow_guarded(t_a, t_b, node.position, &mut node.h, |t0, z0, t1, z1| {
                let w0 = path.eval(t0) / z0;
                let w1 = path.eval(t1) / z1;
                if (z1 - z0).norm() > 0.5 * geom.r_f(z0) || (w1 - w0).norm() > 0.5 * geom.r_g(w0) {
                    return Ok(false);
                }
                if (z1 - anchor_f).norm() > 0.5 * rf {
                    f_tr.step(z0)?;
                    anchor_f = z0;
                    rf = geom.r_f(z0);
                }
                if (w1 - anchor_g).norm() > 0.5 * rg {
                    g_tr.step(w0)?;
                    anchor_g = w0;
                    rg = geom.r_g(w0);
                }
                min_pin = min_pin.min(geom.pin_distance(z1, w1));
                Ok(true)
            })
            .map_err(|e| Error::NodeTracking {
                s: node.s,
                t: t_b,
                source: Box::new(e),
            })?;
        let w = path.eval(t_b) / z;
        let wrap = |e: Error| Error::NodeTracking {
            s: node.s,
            t: t_b,
            source: Box::new(e),
        };
        if z != f_tr.current_point() {
            f_tr.step(z).map_err(wrap)?;
        }
        if w != g_tr.current_point() {
            g_tr.step(w).map_err(wrap)?;
        }
        node.position = z;
        node.min_pin = min_pin;
        Ok(())
    }

    /// A fresh node at `s`, replayed through every checkpoint so far.
    fn replay(&self, s: f64) -> Result<ContourNode> {
        let mut node = self.seed(s)?;
        for w in self.checkpoints.windows(2) {
            self.advance_node(&mut node, w[0], w[1])?;
        }
        Ok(node)
    }

    fn w_of(&self, node: &ContourNode) -> Complex64 {
        node.g_tracker.current_point()
    }

    fn needs_split(&self, a: &ContourNode, b: &ContourNode) -> bool {
        let k = self.opts.kappa;
        let rf = self.geom.r_f(a.position).min(self.geom.r_f(b.position));
        let (wa, wb) = (self.w_of(a), self.w_of(b));
        let rg = self.geom.r_g(wa).min(self.geom.r_g(wb));
        (a.position - b.position).norm() > k * rf || (wa - wb).norm() > k * rg
    }

    fn insert(&mut self, gaps: &[usize]) -> Result<usize> {
        if gaps.is_empty() {
            return Ok(0);
        }
        let n = self.contour.nodes.len();
        if n + gaps.len() > self.opts.max_nodes {
            return Err(Error::RefinementLimit {
                nodes: n + gaps.len(),
                t: self.t,
            });
        }
        let mids: Vec<f64> = gaps
            .iter()
            .map(|&i| {
                let s0 = self.contour.nodes[i].s;
                let s1 = if i + 1 == n { 1.0 } else { self.contour.nodes[i + 1].s };
                if s1 - s0 < MIN_S_GAP {
                    Err(Error::RefinementLimit { nodes: n, t: self.t })
                } else {
                    Ok(0.5 * (s0 + s1))
                }
            })
            .collect::<Result<_>>()?;
        let fresh: Vec<ContourNode> = mids
            .par_iter()
            .map(|&s| self.replay(s))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(n + fresh.len());
        let mut fresh_iter = fresh.into_iter().peekable();
        let mut gap_iter = gaps.iter().peekable();
        for (i, node) in std::mem::take(&mut self.contour.nodes).into_iter().enumerate() {
            out.push(node);
            if gap_iter.peek() == Some(&&i) {
                gap_iter.next();
                out.push(fresh_iter.next().unwrap());
            }
        }
        self.contour.nodes = out;
        self.refinements += mids.len();
        Ok(mids.len())
    }

    /// Bisect every gap that is too wide for the local clearances, repeatedly,
    /// returning the number of inserted nodes.
    pub fn refine_contour(&mut self) -> Result<usize> {
        let mut total = 0;
        loop {
            let n = self.contour.nodes.len();
            let gaps: Vec<usize> = (0..n)
                .filter(|&i| self.needs_split(&self.contour.nodes[i], &self.contour.nodes[(i + 1) % n]))
                .collect();
            if gaps.is_empty() {
                return Ok(total);
            }
            total += self.insert(&gaps)?;
        }
    }

    /// Insert a node in every gap.
    pub fn double_nodes(&mut self) -> Result<()> {
        let gaps: Vec<usize> = (0..self.contour.nodes.len()).collect();
        self.insert(&gaps).map(|_| ())
    }

    fn mandatory_stops(&self) -> Vec<f64> {
        let mut stops = self.flow.field.path().knots();
        stops.extend(self.opts.snapshots.iter().copied().filter(|&t| t > 0.0 && t <= 1.0));
        stops.push(1.0);
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        stops
    }

    fn record_snapshot(&mut self) {
        let nodes = self.contour.positions();
        self.simple &= is_simple_polygon(&nodes);
        self.collisions += crate::deformation::close_pairs(&nodes).len();
        self.snapshots.push(ContourSnapshot { t: self.t, nodes });
    }

    /// Advance the contour to time `t_target`.
    pub fn advance_to(&mut self, t_target: f64) -> Result<()> {
        let t_target = t_target.min(1.0);
        let stops = self.mandatory_stops();
        let mut dt = DT_INITIAL;
        while self.t < t_target {
            let next_stop = stops
                .iter()
                .copied()
                .find(|&s| s > self.t)
                .unwrap_or(1.0)
                .min(t_target);
            let t_next = (self.t + dt).min(next_stop);
            let t_now = self.t;
            let trial: Vec<ContourNode> = self
                .contour
                .nodes
                .par_iter()
                .map(|node| {
                    let mut node = node.clone();
                    self.advance_node(&mut node, t_now, t_next)?;
                    Ok(node)
                })
                .collect::<Result<_>>()?;
            let n = trial.len();
            let grew = (0..n).any(|i| {
                let j = (i + 1) % n;
                let before = (self.contour.nodes[i].position - self.contour.nodes[j].position).norm();
                let after = (trial[i].position - trial[j].position).norm();
                after > 1.5 * before
            });
            if grew && t_next - t_now > DT_MIN {
                self.rejected += 1;
                dt = (0.5 * (t_next - t_now)).max(DT_MIN);
                continue;
            }
            self.contour.nodes = trial;
            self.t = t_next;
            self.checkpoints.push(t_next);
            dt = (dt * 1.5).min(DT_MAX);
            self.refine_contour()?;
            if self.opts.snapshots.iter().any(|&s| s == t_next) {
                self.record_snapshot();
            }
        }
        Ok(())
    }

    fn expansions(&self) -> Result<Vec<(LocalExpansion, LocalExpansion)>> {
        self.contour
            .nodes
            .par_iter()
            .map(|n| {
                let wrap = |e: Error| Error::NodeTracking {
                    s: n.s,
                    t: self.t,
                    source: Box::new(e),
                };
                Ok((
                    n.f_tracker.expansion().map_err(wrap)?,
                    n.g_tracker.expansion().map_err(wrap)?,
                ))
            })
            .collect()
    }

    fn quadrature(&self, exps: &[(LocalExpansion, LocalExpansion)], xi: Complex64) -> Result<Quadrature> {
        let nodes = &self.contour.nodes;
        let n = nodes.len();
        let g8 = gauss_legendre(8);
        let g16 = gauss_legendre(16);
        let panels: Vec<Result<(Complex64, f64, f64)>> = (0..n)
            .into_par_iter()
            .map(|k| {
                let j = (k + 1) % n;
                let (za, zb) = (nodes[k].position, nodes[j].position);
                let m = 0.5 * (za + zb);
                let (fa, ga) = &exps[k];
                let (fb, gb) = &exps[j];
                let integrand = |fe: &LocalExpansion, ge: &LocalExpansion, z: Complex64| -> Result<Complex64> {
                    Ok(fe.eval(z)? * ge.eval(xi / z)? / z)
                };
                let wrap = |e: Error| Error::NodeTracking {
                    s: nodes[k].s,
                    t: self.t,
                    source: Box::new(e),
                };
                let half = |fe, ge, a: Complex64, b: Complex64, rule: &(Vec<f64>, Vec<f64>)| -> Result<Complex64> {
                    let mid = 0.5 * (a + b);
                    let rad = 0.5 * (b - a);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (x, w) in rule.0.iter().zip(&rule.1) {
                        acc += integrand(fe, ge, mid + rad * *x)? * *w;
                    }
                    Ok(acc * rad)
                };
                let i16 = half(fa, ga, za, m, &g16).map_err(wrap)? + half(fb, gb, m, zb, &g16).map_err(wrap)?;
                let i8 = half(fa, ga, za, m, &g8).map_err(wrap)? + half(fb, gb, m, zb, &g8).map_err(wrap)?;
                let (f1, f2) = (fa.eval(m).map_err(wrap)?, fb.eval(m).map_err(wrap)?);
                let (g1, g2) = (ga.eval(xi / m).map_err(wrap)?, gb.eval(xi / m).map_err(wrap)?);
                let seam = ((f1 - f2).norm() / (1.0 + f1.norm())).max((g1 - g2).norm() / (1.0 + g1.norm()));
                Ok((i16, (i16 - i8).norm(), seam))
            })
            .collect();
        let mut vals = Vec::with_capacity(n);
        let mut errs = Vec::with_capacity(n);
        let mut seam = 0.0_f64;
        for (k, p) in panels.into_iter().enumerate() {
            let (v, e, s) = p?;
            if s > SEAM_TOLERANCE {
                return Err(Error::BranchMismatch {
                    s: nodes[k].s,
                    mismatch: s,
                });
            }
            seam = seam.max(s);
            vals.push(v);
            errs.push(e);
        }
        let scale = Complex64::new(0.0, 1.0 / TAU);
        let value = pairwise_sum(&vals) * -scale;
        let error = errs.iter().sum::<f64>() / TAU;
        Ok(Quadrature {
            value,
            error,
            panel_errors: errs,
            seam,
        })
    }

    /// `f ⊙ g` at `ξ` near `γ(t)` on the branch reached so far.
    pub fn integral_at(&self, xi: Complex64) -> Result<(Complex64, f64)> {
        let exps = self.expansions()?;
        let q = self.quadrature(&exps, xi)?;
        Ok((q.value, q.error))
    }

    /// Run to `t = 1` and evaluate value, error estimate and local Taylor data.
    pub fn finish(mut self) -> Result<ContinuationResult> {
        self.advance_to(1.0)?;
        let endpoint = self.flow.field.path().eval(1.0);
        let tol = self.opts.tolerance;
        let mut q;
        let mut exps;
        let mut rounds = 0;
        loop {
            exps = self.expansions()?;
            q = self.quadrature(&exps, endpoint)?;
            if q.error <= tol {
                break;
            }
            rounds += 1;
            let n = q.panel_errors.len();
            let cut = TAU * tol / n as f64;
            let gaps: Vec<usize> = (0..n).filter(|&i| q.panel_errors[i] > cut).collect();
            if rounds > 8 || self.contour.nodes.len() + gaps.len() > self.opts.max_nodes {
                return Err(Error::ToleranceNotMet {
                    estimate: q.error,
                    tolerance: tol,
                });
            }
            self.insert(&gaps)?;
        }
        let snapshots_final = self.opts.snapshots.iter().any(|&s| s == 1.0);
        if !snapshots_final {
            let nodes = self.contour.positions();
            self.simple &= is_simple_polygon(&nodes);
        }

        let omega = geometry::product_set(&self.geom.a_set, &self.geom.b_set);
        let end_clear = omega.distance_to(endpoint);
        let ring_limit = self
            .contour
            .nodes
            .iter()
            .map(|n| n.position.norm() * self.geom.r_g(self.w_of(n)))
            .fold(f64::INFINITY, f64::min);
        let r_loc = (0.1 * end_clear).min(0.2 * ring_limit);
        let ring: Vec<Complex64> = (0..LOCAL_RING)
            .map(|j| endpoint + Complex64::from_polar(r_loc, TAU * j as f64 / LOCAL_RING as f64))
            .collect();
        let ring_vals: Vec<Complex64> = ring
            .iter()
            .map(|&x| self.quadrature(&exps, x).map(|q| q.value))
            .collect::<Result<_>>()?;
        let local_taylor = ring_coefficients(&ring_vals, r_loc, self.opts.taylor_order);
        let min_pin = self
            .contour
            .nodes
            .iter()
            .map(|n| n.min_pin)
            .fold(f64::INFINITY, f64::min);
        let diagnostics = Diagnostics {
            quadrature_error_estimate: q.error,
            min_pin_distance: min_pin,
            node_count: self.contour.nodes.len(),
            initial_nodes: self.opts.n_nodes,
            refinements: self.refinements,
            checkpoints: self.checkpoints.len() - 1,
            rejected_checkpoints: self.rejected,
            seam_mismatch: q.seam,
            simple_polygon: self.simple,
            collisions: self.collisions,
            flow_steps: self
                .contour
                .nodes
                .iter()
                .map(|n| n.f_tracker.steps() + n.g_tracker.steps())
                .sum(),
            taylor_consistency: (local_taylor[0] - q.value).norm(),
        };
        Ok(ContinuationResult {
            endpoint,
            value: q.value,
            local_taylor,
            local_radius: r_loc,
            snapshots: std::mem::take(&mut self.snapshots),
            diagnostics,
            constants: self.flow.field.constants().clone(),
        })
    }
}

struct Quadrature {
    value: Complex64,
    error: f64,
    panel_errors: Vec<f64>,
    seam: f64,
}

/// Continue the principal branch of `f ⊙ g` along `γ`.
pub fn continue_hadamard(
    f: &Arc<Germ>,
    g: &Arc<Germ>,
    path: &Path,
    opts: &ContinuationOptions,
) -> Result<ContinuationResult> {
    Continuation::new(f, g, path, opts.clone())?.finish()
}

/// Fixed-order pairwise summation.
pub(crate) fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    match v.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Taylor coefficients from values on the circle `|ξ − c| = r`.
fn ring_coefficients(vals: &[Complex64], r: f64, order: usize) -> Vec<Complex64> {
    let m = vals.len();
    (0..order.min(m))
        .map(|n| {
            let terms: Vec<Complex64> = vals
                .iter()
                .enumerate()
                .map(|(j, v)| v * Complex64::from_polar(1.0, -TAU * (n * j) as f64 / m as f64))
                .collect();
            pairwise_sum(&terms) / m as f64 / r.powi(n as i32)
        })
        .collect()
}

fn default_radius(f: &Germ, g: &Germ, xi: Complex64) -> f64 {
    let (rf, rg) = (f.radius_of_convergence(), g.radius_of_convergence());
    let x = xi.norm();
    match (rf.is_finite(), rg.is_finite()) {
        (true, true) if x > 0.0 => (x * rf / rg).sqrt(),
        (true, _) => 0.5 * rf,
        (false, true) => (2.0 * x / rg).max(1.0),
        (false, false) => 1.0,
    }
}

fn check_principal(f: &Germ, g: &Germ, xi: Complex64, rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < f.radius_of_convergence()) {
        return Err(Error::InvalidParameter(format!(
            "ρ = {rho} must lie in (0, R_f = {})",
            f.radius_of_convergence()
        )));
    }
    if !(xi.norm() < rho * g.radius_of_convergence()) {
        return Err(Error::InvalidParameter(format!(
            "|ξ| = {} must be below ρ·R_g = {}",
            xi.norm(),
            rho * g.radius_of_convergence()
        )));
    }
    Ok(())
}

/// The trapezoidal rule with `n` nodes on `|ζ| = ρ`, no convergence check.
pub fn trapezoid_circle(f: &Arc<Germ>, g: &Arc<Germ>, xi: Complex64, rho: f64, n: usize) -> Result<Complex64> {
    check_principal(f, g, xi, rho)?;
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one node".into()));
    }
    let terms: Vec<Complex64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let z = Complex64::from_polar(rho, TAU * k as f64 / n as f64);
            Ok(f.eval_principal(z)? * g.eval_principal(xi / z)?)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms) / n as f64)
}

/// `(1/2πi)∮_{|ζ|=ρ} f(ζ) g(ξ/ζ) dζ/ζ` by the trapezoidal rule, doubling the
/// node count from `n` until two successive values agree. `ρ = None` picks
/// the geometric mean of the admissible range.
pub fn hadamard_principal(
    f: &Arc<Germ>,
    g: &Arc<Germ>,
    xi: Complex64,
    rho: Option<f64>,
    n: usize,
) -> Result<Complex64> {
    let rho = rho.unwrap_or_else(|| default_radius(f, g, xi));
    let mut n = n.max(8);
    let cap = 64 * n;
    let mut prev = trapezoid_circle(f, g, xi, rho, n)?;
    while n < cap {
        n *= 2;
        let next = trapezoid_circle(f, g, xi, rho, n)?;
        if (next - prev).norm() <= 1e-14 * (1.0 + next.norm()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ToleranceNotMet {
        estimate: f64::NAN,
        tolerance: 1e-14,
    })
}

/// Principal value and Taylor coefficients at `ξ` from a ring of principal values.
fn principal_with_taylor(
    f: &Arc<Germ>,
    g: &Arc<Germ>,
    xi: Complex64,
    clearance: f64,
    order: usize,
) -> Result<(Complex64, Vec<Complex64>, f64)> {
    let rho = default_radius(f, g, xi);
    let lim = (rho * g.radius_of_convergence() - xi.norm()).max(0.0);
    let r = (0.1 * clearance).min(0.5 * lim);
    let value = hadamard_principal(f, g, xi, Some(rho), 64)?;
    let vals: Vec<Complex64> = (0..LOCAL_RING)
        .map(|j| hadamard_principal(f, g, xi + Complex64::from_polar(r, TAU * j as f64 / LOCAL_RING as f64), Some(rho), 64))
        .collect::<Result<_>>()?;
    Ok((value, ring_coefficients(&vals, r, order), r))
}

/// Outcome of [`monodromy`].
#[derive(Debug, Clone, Serialize)]
pub struct MonodromyResult {
    pub basepoint: Complex64,
    pub omega: Complex64,
    pub turns: i32,
    pub before: Complex64,
    pub after: Complex64,
    pub difference: Complex64,
    pub taylor_difference: Vec<Complex64>,
    pub loop_kind: &'static str,
    pub continuation: ContinuationResult,
}

/// A loop from `basepoint` around `ω` only: the circle about `ω` through the
/// basepoint when no other point of `Ω` is near it, otherwise a keyhole
/// (straight in, small circle, straight back).
pub fn monodromy_loop(omega_set: &SingularSet, basepoint: Complex64, omega: Complex64, turns: i32) -> Result<(Path, &'static str)> {
    if turns == 0 {
        return Err(Error::InvalidParameter("turns must be nonzero".into()));
    }
    let r = (basepoint - omega).norm();
    if r == 0.0 {
        return Err(Error::InvalidPath("basepoint coincides with ω".into()));
    }
    let nearest_other = omega_set
        .enumerate(omega.norm() + 2.0 * r)
        .into_iter()
        .filter(|p| (p - omega).norm() > 1e-12 * (1.0 + omega.norm()))
        .map(|p| (p - omega).norm())
        .fold(f64::INFINITY, f64::min);
    if nearest_other > 1.25 * r {
        return Ok((Path::circle(omega, basepoint, turns as f64)?, "circle"));
    }
    let r_w = 0.4 * nearest_other;
    let dir = (basepoint - omega) / r;
    let near = omega + dir * r_w;
    let inbound = Path::polyline(&[basepoint, near])?;
    let around = Path::circle(omega, near, turns as f64)?;
    let outbound = Path::polyline(&[near, basepoint])?;
    Ok((Path::concat(&[inbound, around, outbound])?, "keyhole"))
}

/// The change of `f ⊙ g` at `basepoint` after looping `turns` times around `ω`.
///
/// Without `pre_path` the branch before the loop is the principal one and the
/// basepoint must satisfy `0 < |basepoint| < ab`. With `pre_path` (ending at
/// `basepoint`) the branch before is the continuation along it.
pub fn monodromy(
    f: &Arc<Germ>,
    g: &Arc<Germ>,
    basepoint: Complex64,
    omega: Complex64,
    pre_path: Option<&Path>,
    turns: i32,
    opts: &ContinuationOptions,
) -> Result<MonodromyResult> {
    let omega_set = geometry::product_set(f.singular_set(), g.singular_set());
    let (lp, kind) = monodromy_loop(&omega_set, basepoint, omega, turns)?;
    let (before, taylor_before, full) = match pre_path {
        Some(pre) => {
            if (pre.end() - basepoint).norm() > 1e-12 * (1.0 + basepoint.norm()) {
                return Err(Error::InvalidPath(format!(
                    "pre-path ends at {}, not at the basepoint {basepoint}",
                    pre.end()
                )));
            }
            let r = continue_hadamard(f, g, pre, opts)?;
            (r.value, r.local_taylor, Path::concat(&[pre.clone(), lp])?)
        }
        None => {
            let a = geometry::min_modulus(f.singular_set())?;
            let b = geometry::min_modulus(g.singular_set())?;
            geometry::validate_path(&lp, &omega_set, a, b)?;
            let clearance = omega_set.distance_to(basepoint);
            let (v, t, _) = principal_with_taylor(f, g, basepoint, clearance, opts.taylor_order)?;
            (v, t, lp)
        }
    };
    let after = continue_hadamard(f, g, &full, opts)?;
    let taylor_difference = after
        .local_taylor
        .iter()
        .zip(&taylor_before)
        .map(|(a, b)| a - b)
        .collect();
    Ok(MonodromyResult {
        basepoint,
        omega,
        turns,
        before,
        after: after.value,
        difference: after.value - before,
        taylor_difference,
        loop_kind: kind,
        continuation: after,
    })
}
