use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::integrator::{integrate, IntegratorSettings, StepStats};
use super::DeformationField;
use crate::error::Result;

/// The flow `Φ^{t*,t}` of a [`DeformationField`].
#[derive(Debug, Clone)]
pub struct FlowMap {
    pub field: DeformationField,
    pub settings: IntegratorSettings,
}

impl FlowMap {
    pub fn new(field: DeformationField) -> Self {
        FlowMap {
            settings: IntegratorSettings::for_field(field.variant()),
            field,
        }
    }

    pub fn with_settings(mut self, settings: IntegratorSettings) -> Self {
        self.settings = settings;
        self
    }

    /// Path knots strictly between `t0` and `t1`, in the order traversed.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let (lo, hi) = (t0.min(t1), t0.max(t1));
        let mut ks: Vec<f64> = self
            .field
            .path()
            .knots()
            .into_iter()
            .filter(|&k| k > lo && k < hi)
            .collect();
        if t1 < t0 {
            ks.reverse();
        }
        ks
    }

    /// `Φ^{t0,t1}(ζ0)`.
    pub fn flow(&self, t0: f64, t1: f64, z0: Complex64) -> Result<Complex64> {
        let mut h = 0.0;
        self.flow_guarded(t0, t1, z0, &mut h, |_, _, _, _| Ok(true))
            .map(|(z, _)| z)
    }

    /// `Φ^{t0,t1}(ζ0)`, stopping at path knots, with a step veto callback.
    pub fn flow_guarded<S>(
        &self,
        t0: f64,
        t1: f64,
        z0: Complex64,
        h: &mut f64,
        mut on_step: S,
    ) -> Result<(Complex64, StepStats)>
    where
        S: FnMut(f64, Complex64, f64, Complex64) -> Result<bool>,
    {
        let f = |t: f64, z: Complex64| self.field.eval(t, z);
        let mut stops = self.breakpoints(t0, t1);
        stops.push(t1);
        let mut z = z0;
        let mut t = t0;
        let mut stats = StepStats::default();
        for stop in stops {
            let (zn, st) = integrate(&f, t, stop, z, &self.settings, h, &mut on_step)?;
            z = zn;
            t = stop;
            stats += st;
        }
        Ok((z, stats))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourSnapshot {
    pub t: f64,
    pub nodes: Vec<Complex64>,
}

/// Result of [`flow_contour`].
#[derive(Debug, Clone, Serialize)]
pub struct FlowedContour {
    pub s: Vec<f64>,
    pub positions: Vec<Complex64>,
    pub snapshots: Vec<ContourSnapshot>,
    /// Per node, the smallest distance to `A′ ∪ {γ(t)/β}` seen on its trajectory.
    pub min_pin_distance: Vec<f64>,
    /// `(snapshot index, node index)` of adjacent pairs closer than the resolution.
    pub collisions: Vec<(usize, usize)>,
    pub stats: StepStats,
}

impl FlowedContour {
    pub fn has_collision(&self) -> bool {
        !self.collisions.is_empty()
    }
}

/// Collision threshold relative to the contour diameter.
pub const COLLISION_RESOLUTION: f64 = 1e-6;

/// Advance every node from `t_start` to `t_end`, recording positions at the
/// requested times and the closest approach of each trajectory to the pins
/// `A′ ∪ {γ(t)/β : β ∈ betas}`.
pub fn flow_contour(
    flow: &FlowMap,
    s: &[f64],
    positions: &[Complex64],
    t_start: f64,
    t_end: f64,
    snapshot_times: &[f64],
    betas: &[Complex64],
) -> Result<FlowedContour> {
    let (lo, hi) = (t_start.min(t_end), t_start.max(t_end));
    let mut times: Vec<f64> = snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= lo && t <= hi)
        .collect();
    times.sort_by(f64::total_cmp);
    if t_end < t_start {
        times.reverse();
    }
    times.dedup();
    let a_prime = flow.field.a_prime().to_vec();
    let path = flow.field.path();
    let pin_distance = |t: f64, z: Complex64| {
        let g = path.eval(t);
        let fixed = a_prime.iter().map(|a| (z - a).norm()).fold(f64::INFINITY, f64::min);
        betas.iter().map(|b| (z - g / b).norm()).fold(fixed, f64::min)
    };
    let per_node: Vec<Result<(Vec<Complex64>, Complex64, f64, StepStats)>> = positions
        .par_iter()
        .map(|&z0| {
            let mut z = z0;
            let mut t = t_start;
            let mut h = 0.0;
            let mut dmin = pin_distance(t_start, z0);
            let mut stats = StepStats::default();
            let mut snaps = Vec::with_capacity(times.len());
            for &stop in times.iter().chain(std::iter::once(&t_end)) {
                let (zn, st) = flow.flow_guarded(t, stop, z, &mut h, |_, _, tn, zn| {
                    dmin = dmin.min(pin_distance(tn, zn));
                    Ok(true)
                })?;
                stats += st;
                z = zn;
                t = stop;
                if snaps.len() < times.len() {
                    snaps.push(z);
                }
            }
            Ok((snaps, z, dmin, stats))
        })
        .collect();
    let mut out_pos = Vec::with_capacity(positions.len());
    let mut dmins = Vec::with_capacity(positions.len());
    let mut columns: Vec<Vec<Complex64>> = vec![Vec::with_capacity(positions.len()); times.len()];
    let mut stats = StepStats::default();
    for r in per_node {
        let (snaps, z, d, st) = r?;
        for (col, p) in columns.iter_mut().zip(snaps) {
            col.push(p);
        }
        out_pos.push(z);
        dmins.push(d);
        stats += st;
    }
    let snapshots: Vec<ContourSnapshot> = times
        .iter()
        .zip(columns)
        .map(|(&t, nodes)| ContourSnapshot { t, nodes })
        .collect();
    let mut collisions = Vec::new();
    for (k, snap) in snapshots.iter().enumerate() {
        for i in close_pairs(&snap.nodes) {
            collisions.push((k, i));
        }
    }
    Ok(FlowedContour {
        s: s.to_vec(),
        positions: out_pos,
        snapshots,
        min_pin_distance: dmins,
        collisions,
        stats,
    })
}

fn diameter(points: &[Complex64]) -> f64 {
    let (mut lo, mut hi) = (
        Complex64::new(f64::INFINITY, f64::INFINITY),
        Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in points {
        lo = Complex64::new(lo.re.min(p.re), lo.im.min(p.im));
        hi = Complex64::new(hi.re.max(p.re), hi.im.max(p.im));
    }
    (hi - lo).norm()
}

/// Indices `i` with nodes `i` and `i+1` (cyclically) closer than
/// [`COLLISION_RESOLUTION`] times the contour diameter.
pub(crate) fn close_pairs(points: &[Complex64]) -> Vec<usize> {
    let n = points.len();
    if n < 2 {
        return Vec::new();
    }
    let tol = COLLISION_RESOLUTION * diameter(points);
    (0..n)
        .filter(|&i| (points[(i + 1) % n] - points[i]).norm() < tol)
        .collect()
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    (b.re - a.re) * (c.im - a.im) - (b.im - a.im) * (c.re - a.re)
}

fn segments_cross(p1: Complex64, p2: Complex64, q1: Complex64, q2: Complex64) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Whether the closed polygon through `points` has no self-intersections
/// between non-adjacent edges. Edges are bucketed on a uniform grid, so the
/// cost is close to linear for well-spread contours.
pub fn is_simple_polygon(points: &[Complex64]) -> bool {
    use std::collections::HashMap;
    let n = points.len();
    if n < 4 {
        return true;
    }
    let edge = |i: usize| (points[i], points[(i + 1) % n]);
    let mut lens: Vec<f64> = (0..n).map(|i| (edge(i).1 - edge(i).0).norm()).collect();
    lens.sort_by(f64::total_cmp);
    let cell = (4.0 * lens[n / 2]).max(diameter(points) / 4096.0).max(f64::MIN_POSITIVE);
    let key = |z: Complex64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for i in 0..n {
        let (a, b) = edge(i);
        let (k0, k1) = (key(a), key(b));
        let cells = (k0.0.min(k1.0)..=k0.0.max(k1.0))
            .flat_map(|x| (k0.1.min(k1.1)..=k0.1.max(k1.1)).map(move |y| (x, y)));
        let count = ((k0.0 - k1.0).abs() + 1) * ((k0.1 - k1.1).abs() + 1);
        if count > 1_000_000 {
            return simple_polygon_brute(points);
        }
        for c in cells {
            grid.entry(c).or_default().push(i);
        }
    }
    let mut keys: Vec<&(i64, i64)> = grid.keys().collect();
    keys.sort();
    for k in keys {
        let edges = &grid[k];
        for (x, &i) in edges.iter().enumerate() {
            for &j in &edges[x + 1..] {
                let adjacent = (i + 1) % n == j || (j + 1) % n == i || i == j;
                if adjacent {
                    continue;
                }
                let (a, b) = edge(i);
                let (c, d) = edge(j);
                if segments_cross(a, b, c, d) {
                    return false;
                }
            }
        }
    }
    true
}

fn simple_polygon_brute(points: &[Complex64]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::{CutoffProfile, FieldVariant};
    use crate::geometry::{smooth_waypoints, Path, SingularSet};
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn square() -> Path {
        smooth_waypoints(
            &[c(0.3, 0.0), c(0.3, -0.5), c(1.7, -0.5), c(1.7, 0.5), c(0.3, 0.5), c(0.3, 0.0)],
            Some(0.1),
        )
        .unwrap()
    }

    fn square_flow(profile: CutoffProfile) -> FlowMap {
        let one = SingularSet::finite([c(1.0, 0.0)]);
        FlowMap::new(
            crate::deformation::DeformationField::new(FieldVariant::Cutoff, &square(), &one, &one, profile).unwrap(),
        )
    }

    #[test]
    fn pins_and_tracking() {
        let flow = square_flow(CutoffProfile::Smoothstep);
        let g = square();
        for &t in &[0.1, 0.37, 0.5, 0.81, 1.0] {
            assert_eq!(flow.flow(0.0, t, c(1.0, 0.0)).unwrap(), c(1.0, 0.0));
            let z = flow.flow(0.0, t, g.eval(0.0)).unwrap();
            assert!((z - g.eval(t)).norm() < 1e-9, "{z} vs {}", g.eval(t));
        }
    }

    #[test]
    fn forward_backward_identity() {
        let flow = square_flow(CutoffProfile::Smoothstep);
        let z0 = Complex64::from_polar(0.3f64.sqrt(), 0.4);
        let z1 = flow.flow(0.0, 1.0, z0).unwrap();
        let back = flow.flow(1.0, 0.0, z1).unwrap();
        assert!((back - z0).norm() < 1e-9);
        assert_eq!(flow.flow(0.4, 0.4, z0).unwrap(), z0);
    }

    #[test]
    fn constant_path_is_identity() {
        let one = SingularSet::finite([c(1.0, 0.0)]);
        let gamma = Path::constant(c(0.3, 0.0));
        let flow = FlowMap::new(
            crate::deformation::DeformationField::new(FieldVariant::Cutoff, &gamma, &one, &one, CutoffProfile::Linear).unwrap(),
        );
        let s: Vec<f64> = (0..64).map(|k| k as f64 / 64.0).collect();
        let pos: Vec<Complex64> = s.iter().map(|s| Complex64::from_polar(0.5, TAU * s)).collect();
        let out = flow_contour(&flow, &s, &pos, 0.0, 1.0, &[0.5], &[c(1.0, 0.0)]).unwrap();
        assert_eq!(out.positions, pos);
        assert!(!out.has_collision());
    }

    #[test]
    fn contour_keeps_nodes_and_pinned_node() {
        let flow = square_flow(CutoffProfile::Smoothstep);
        let n = 128;
        let rho = flow.field.constants().rho;
        let s: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        let mut pos: Vec<Complex64> = s.iter().map(|s| Complex64::from_polar(rho, TAU * s)).collect();
        pos.push(c(1.0, 0.0));
        let mut s2 = s.clone();
        s2.push(1.0);
        let times: Vec<f64> = (1..=4).map(|k| k as f64 / 4.0).collect();
        let out = flow_contour(&flow, &s2, &pos, 0.0, 1.0, &times, &[c(1.0, 0.0)]).unwrap();
        assert_eq!(out.positions.len(), n + 1);
        assert_eq!(out.positions[n], c(1.0, 0.0));
        assert_eq!(out.snapshots.len(), 4);
        assert!(out.min_pin_distance[..n].iter().all(|&d| d > 1e-6));
    }

    #[test]
    fn polygon_simplicity() {
        let square = [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(0.0, 1.0)];
        assert!(is_simple_polygon(&square));
        let bowtie = [c(0.0, 0.0), c(1.0, 1.0), c(1.0, 0.0), c(0.0, 1.0)];
        assert!(!is_simple_polygon(&bowtie));
        let circle: Vec<Complex64> = (0..1000).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / 1000.0)).collect();
        assert!(is_simple_polygon(&circle));
        let mut twisted = circle.clone();
        twisted.swap(10, 500);
        assert!(!is_simple_polygon(&twisted));
    }
}
