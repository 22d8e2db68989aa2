//! Dense univariate polynomials with complex coefficients, ascending order.

use num_complex::Complex64;

pub(crate) fn eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Sum of `|p_i| |z|^i`, the natural scale for judging `|p(z)|` small.
pub(crate) fn eval_abs(p: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    p.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

pub(crate) fn trim(mut p: Vec<Complex64>) -> Vec<Complex64> {
    while p.len() > 1 && p.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
        p.pop();
    }
    p
}

pub(crate) fn derivative(p: &[Complex64]) -> Vec<Complex64> {
    if p.len() <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| c * i as f64)
        .collect()
}

/// Coefficients of `h ↦ p(c + h)`.
pub(crate) fn taylor_shift(p: &[Complex64], c: Complex64) -> Vec<Complex64> {
    let mut q = p.to_vec();
    let n = q.len();
    // Repeated synthetic division (Horner's shift), O(n²).
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let hi = q[j + 1];
            q[j] += c * hi;
        }
    }
    q
}

/// Divide by `(z - root)`, dropping the remainder.
pub(crate) fn deflate(p: &[Complex64], root: Complex64) -> Vec<Complex64> {
    let n = p.len();
    if n <= 1 {
        return vec![Complex64::new(0.0, 0.0)];
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n - 1];
    let mut carry = Complex64::new(0.0, 0.0);
    for i in (1..n).rev() {
        carry = p[i] + carry * root;
        out[i - 1] = carry;
    }
    out
}

/// First `n` Taylor coefficients at 0 of `num / den`; requires `den[0] != 0`.
pub(crate) fn series_div(num: &[Complex64], den: &[Complex64], n: usize) -> Vec<Complex64> {
    let d0 = den[0];
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = num.get(k).copied().unwrap_or_default();
        for j in 1..den.len().min(k + 1) {
            acc -= den[j] * out[k - j];
        }
        out.push(acc / d0);
    }
    out
}

/// All complex roots by the Aberth–Ehrlich iteration followed by Newton polishing.
pub(crate) fn roots(p: &[Complex64]) -> Vec<Complex64> {
    let p = trim(p.to_vec());
    let deg = p.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = p[deg];
    if deg == 1 {
        return vec![-p[0] / lead];
    }
    let dp = derivative(&p);
    // Cauchy bound for the initial circle.
    let bound = 1.0
        + p[..deg]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0_f64, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64 + 0.4;
            Complex64::from_polar(0.5 * bound, theta)
        })
        .collect();
    for _ in 0..500 {
        let mut max_corr = 0.0_f64;
        for i in 0..deg {
            let pv = eval(&p, z[i]);
            let dv = eval(&dp, z[i]);
            if pv == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = pv / dv;
            let repulsion: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| Complex64::new(1.0, 0.0) / (z[i] - z[j]))
                .sum();
            let corr = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            z[i] -= corr;
            max_corr = max_corr.max(corr.norm() / z[i].norm().max(1e-300));
        }
        if max_corr < 1e-15 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let dv = eval(&dp, *zi);
            if dv.norm() == 0.0 {
                break;
            }
            let step = eval(&p, *zi) / dv;
            if !step.is_finite() {
                break;
            }
            *zi -= step;
        }
    }
    z
}
