//! Ellipses and the direct least-squares conic fit.
//!
//! The fit minimizes the algebraic distance of a general conic subject to
//! the ellipse constraint `4AC − B² = 1`. The scatter matrix is split into
//! quadratic and linear blocks so the constrained problem reduces to a 3×3
//! eigenproblem, which is solved in closed form here to keep the fit generic
//! over the scalar type.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

/// Center, semi-axes (`a >= b`) and major-axis rotation in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse<T> {
    pub cx: T,
    pub cy: T,
    pub a: T,
    pub b: T,
    pub theta: T,
}

impl<T: Real> Ellipse<T> {
    /// Canonicalizes so that `a >= b` and `theta ∈ [0, π)`.
    pub fn new(cx: T, cy: T, a: T, b: T, theta: T) -> Self {
        let (a, b, theta) = if a >= b {
            (a, b, theta)
        } else {
            (b, a, theta + T::lit(std::f64::consts::FRAC_PI_2))
        };
        Self {
            cx,
            cy,
            a,
            b,
            theta: wrap_angle(theta),
        }
    }

    pub fn area(&self) -> T {
        T::lit(std::f64::consts::PI) * self.a * self.b
    }

    pub fn is_valid(&self) -> bool {
        [self.cx, self.cy, self.a, self.b, self.theta]
            .iter()
            .all(|v| v.is_finite())
            && self.b > T::zero()
            && self.a >= self.b
    }

    /// Coordinates of `(x, y)` along the (major, minor) axes.
    pub fn to_local(&self, x: T, y: T) -> (T, T) {
        let (s, c) = self.theta.sin_cos();
        let (dx, dy) = (x - self.cx, y - self.cy);
        (dx * c + dy * s, -dx * s + dy * c)
    }

    pub fn from_local(&self, m: T, n: T) -> (T, T) {
        let (s, c) = self.theta.sin_cos();
        (self.cx + m * c - n * s, self.cy + m * s + n * c)
    }

    /// `(m/a)² + (n/b)²`: below 1 inside, 1 on the boundary.
    pub fn normalized_radius_sq(&self, x: T, y: T) -> T {
        let (m, n) = self.to_local(x, y);
        let (u, v) = (m / self.a, n / self.b);
        u * u + v * v
    }

    pub fn contains_strictly(&self, x: T, y: T) -> bool {
        self.normalized_radius_sq(x, y) < T::one()
    }

    /// Boundary point at parametric angle `phi`.
    pub fn point_at(&self, phi: T) -> (T, T) {
        self.from_local(self.a * phi.cos(), self.b * phi.sin())
    }

    pub fn translated(&self, dx: T, dy: T) -> Self {
        Self {
            cx: self.cx + dx,
            cy: self.cy + dy,
            ..*self
        }
    }

    pub fn to_conic(&self) -> Conic<T> {
        let (s, c) = self.theta.sin_cos();
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        let qa = c * c / a2 + s * s / b2;
        let qb = T::lit(2.0) * c * s * (T::one() / a2 - T::one() / b2);
        let qc = s * s / a2 + c * c / b2;
        let two = T::lit(2.0);
        let qd = -two * qa * self.cx - qb * self.cy;
        let qe = -qb * self.cx - two * qc * self.cy;
        let qf = qa * self.cx * self.cx + qb * self.cx * self.cy + qc * self.cy * self.cy
            - T::one();
        Conic([qa, qb, qc, qd, qe, qf])
    }

    pub fn cast<U: Real>(&self) -> Ellipse<U> {
        let f = |v: T| U::lit(v.to_f64_lossy());
        Ellipse {
            cx: f(self.cx),
            cy: f(self.cy),
            a: f(self.a),
            b: f(self.b),
            theta: f(self.theta),
        }
    }
}

/// Wraps an angle into `[0, π)`.
pub fn wrap_angle<T: Real>(theta: T) -> T {
    let pi = T::lit(std::f64::consts::PI);
    let mut t = theta % pi;
    if t < T::zero() {
        t = t + pi;
    }
    if t >= pi {
        t = t - pi;
    }
    t
}

/// `A x² + B xy + C y² + D x + E y + F = 0`, stored as `[A, B, C, D, E, F]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conic<T>(pub [T; 6]);

impl<T: Real> Conic<T> {
    pub fn eval(&self, x: T, y: T) -> T {
        let [a, b, c, d, e, f] = self.0;
        a * x * x + b * x * y + c * y * y + d * x + e * y + f
    }

    /// Scale so the quadratic part has unit norm.
    pub fn normalized(&self) -> Self {
        let [a, b, c, ..] = self.0;
        let n = (a * a + b * b + c * c).sqrt();
        Conic(self.0.map(|v| v / n))
    }

    pub fn to_ellipse(&self) -> Option<Ellipse<T>> {
        let [a, b, c, d, e, _] = self.0;
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let denom = four * a * c - b * b;
        if !(denom > T::zero()) {
            return None;
        }
        let cx = (b * e - two * c * d) / denom;
        let cy = (b * d - two * a * e) / denom;
        let f0 = self.eval(cx, cy);
        let sum = a + c;
        let diff = ((a - c) * (a - c) + b * b).sqrt();
        let l_hi = (sum + diff) / two;
        let l_lo = (sum - diff) / two;
        // Semi-axis along the direction of `l_hi`, then the perpendicular one.
        let r_hi = -f0 / l_hi;
        let r_lo = -f0 / l_lo;
        if !(r_hi > T::zero()) || !(r_lo > T::zero()) {
            return None;
        }
        let theta0 = T::lit(0.5) * b.atan2(a - c);
        let ellipse = Ellipse::new(
            cx,
            cy,
            r_hi.sqrt(),
            r_lo.sqrt(),
            theta0,
        );
        ellipse.is_valid().then_some(ellipse)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitError {
    #[error("need at least 6 points, got {0}")]
    TooFewPoints(usize),
    #[error("points are degenerate (collinear or coincident)")]
    Degenerate,
    #[error("best conic is not an ellipse")]
    NotAnEllipse,
}

type Mat3<T> = [[T; 3]; 3];

fn mat_mul<T: Real>(a: &Mat3<T>, b: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose<T: Real>(m: &Mat3<T>) -> Mat3<T> {
    let mut out = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[j][i] = m[i][j];
        }
    }
    out
}

fn det3<T: Real>(m: &Mat3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inverse3<T: Real>(m: &Mat3<T>) -> Option<Mat3<T>> {
    let det = det3(m);
    let scale = m
        .iter()
        .flatten()
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    if !(det.abs() > T::epsilon() * scale * scale * scale) {
        return None;
    }
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
        [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
        [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
    ];
    Some(adj.map(|row| row.map(|v| v / det)))
}

fn cross<T: Real>(u: &[T; 3], v: &[T; 3]) -> [T; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn norm<T: Real>(v: &[T; 3]) -> T {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Real roots of `λ³ + p2 λ² + p1 λ + p0`.
fn cubic_real_roots<T: Real>(p2: T, p1: T, p0: T) -> Vec<T> {
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let shift = p2 / three;
    // Depressed cubic y³ + p y + q with λ = y − p2/3.
    let p = p1 - p2 * p2 / three;
    let q = two * p2 * p2 * p2 / T::lit(27.0) - p2 * p1 / three + p0;
    let disc = (q / two) * (q / two) + (p / three) * (p / three) * (p / three);
    if disc > T::zero() {
        let sq = disc.sqrt();
        let y = (-q / two + sq).cbrt() + (-q / two - sq).cbrt();
        vec![y - shift]
    } else if p == T::zero() {
        vec![-shift]
    } else {
        let r = (-p / three).sqrt();
        let arg = (T::lit(3.0) * q / (two * p * r)).max(-T::one()).min(T::one());
        let phi = arg.acos() / three;
        let tau = T::lit(2.0 * std::f64::consts::PI / 3.0);
        (0..3)
            .map(|k| two * r * (phi - tau * T::from_count(k)).cos() - shift)
            .collect()
    }
}

/// Unit eigenvector of `m` for eigenvalue `lambda` via the best row cross product.
fn eigenvector<T: Real>(m: &Mat3<T>, lambda: T) -> Option<[T; 3]> {
    let mut n = *m;
    for (i, row) in n.iter_mut().enumerate() {
        row[i] = row[i] - lambda;
    }
    let candidates = [cross(&n[0], &n[1]), cross(&n[0], &n[2]), cross(&n[1], &n[2])];
    let best = candidates
        .iter()
        .copied()
        .max_by(|a, b| norm(a).partial_cmp(&norm(b)).unwrap_or(std::cmp::Ordering::Equal))?;
    let len = norm(&best);
    (len > T::zero() && len.is_finite()).then(|| best.map(|v| v / len))
}

/// Direct least-squares ellipse fit of `points`.
pub fn fit_ellipse<T: Real>(points: &[(T, T)]) -> Result<(Conic<T>, Ellipse<T>), FitError> {
    let n = points.len();
    if n < 6 {
        return Err(FitError::TooFewPoints(n));
    }
    let nf = T::from_count(n);
    let mx = points.iter().map(|p| p.0).sum::<T>() / nf;
    let my = points.iter().map(|p| p.1).sum::<T>() / nf;
    let mean_dist = points
        .iter()
        .map(|p| ((p.0 - mx) * (p.0 - mx) + (p.1 - my) * (p.1 - my)).sqrt())
        .sum::<T>()
        / nf;
    if !(mean_dist > T::zero()) {
        return Err(FitError::Degenerate);
    }
    let scale = T::lit(std::f64::consts::SQRT_2) / mean_dist;

    // Scatter blocks of the quadratic [x², xy, y²] and linear [x, y, 1] terms.
    let mut s1 = [[T::zero(); 3]; 3];
    let mut s2 = [[T::zero(); 3]; 3];
    let mut s3 = [[T::zero(); 3]; 3];
    for &(px, py) in points {
        let x = (px - mx) * scale;
        let y = (py - my) * scale;
        let q = [x * x, x * y, y * y];
        let l = [x, y, T::one()];
        for i in 0..3 {
            for j in 0..3 {
                s1[i][j] = s1[i][j] + q[i] * q[j];
                s2[i][j] = s2[i][j] + q[i] * l[j];
                s3[i][j] = s3[i][j] + l[i] * l[j];
            }
        }
    }
    let s3_inv = inverse3(&s3).ok_or(FitError::Degenerate)?;
    // Linear part as a function of the quadratic part: a2 = t · a1.
    let t = mat_mul(&s3_inv, &transpose(&s2)).map(|row| row.map(|v| -v));
    let reduced = {
        let st = mat_mul(&s2, &t);
        let mut m = s1;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = m[i][j] + st[i][j];
            }
        }
        m
    };
    // Premultiply by the inverse of the constraint matrix [[0,0,2],[0,-1,0],[2,0,0]].
    let half = T::lit(0.5);
    let m = [
        reduced[2].map(|v| v * half),
        reduced[1].map(|v| -v),
        reduced[0].map(|v| v * half),
    ];

    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let roots = cubic_real_roots(-trace, minors, -det3(&m));

    let quad = roots
        .into_iter()
        .filter_map(|lambda| eigenvector(&m, lambda))
        .map(|v| (T::lit(4.0) * v[0] * v[2] - v[1] * v[1], v))
        .filter(|(cond, _)| *cond > T::zero())
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(_, v)| v)
        .ok_or(FitError::NotAnEllipse)?;
    let lin: Vec<T> = t
        .iter()
        .map(|row| row[0] * quad[0] + row[1] * quad[1] + row[2] * quad[2])
        .collect();

    // Undo the normalization x' = s·x − s·mx.
    let (a, b, c) = (quad[0], quad[1], quad[2]);
    let (d, e, f) = (lin[0], lin[1], lin[2]);
    let u = scale;
    let (p, q) = (-scale * mx, -scale * my);
    let two = T::lit(2.0);
    let conic = Conic([
        a * u * u,
        b * u * u,
        c * u * u,
        two * a * u * p + b * u * q + d * u,
        b * u * p + two * c * u * q + e * u,
        a * p * p + b * p * q + c * q * q + d * p + e * q + f,
    ])
    .normalized();
    let ellipse = conic.to_ellipse().ok_or(FitError::NotAnEllipse)?;
    Ok((conic, ellipse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn samples(e: &Ellipse<f64>, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| e.point_at(2.0 * PI * i as f64 / n as f64))
            .collect()
    }

    #[test]
    fn canonicalization() {
        let e = Ellipse::new(0.0, 0.0, 2.0, 5.0, 0.1);
        assert_eq!((e.a, e.b), (5.0, 2.0));
        assert!((e.theta - (0.1 + PI / 2.0)).abs() < 1e-12);
        let w = Ellipse::new(0.0, 0.0, 5.0, 2.0, -0.25);
        assert!((w.theta - (PI - 0.25)).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), 0.0);
    }

    #[test]
    fn conic_round_trip() {
        let e = Ellipse::new(12.0f64, -7.0, 30.0, 11.0, 2.2);
        let back = e.to_conic().to_ellipse().unwrap();
        assert!((back.cx - e.cx).abs() < 1e-9);
        assert!((back.cy - e.cy).abs() < 1e-9);
        assert!((back.a - e.a).abs() < 1e-9);
        assert!((back.b - e.b).abs() < 1e-9);
        assert!((back.theta - e.theta).abs() < 1e-9);
    }

    #[test]
    fn cubic_roots() {
        // (λ-1)(λ-2)(λ-3) = λ³ - 6λ² + 11λ - 6
        let mut r = cubic_real_roots(-6.0f64, 11.0, -6.0);
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-9, "{r:?}");
        }
        // (λ-2)(λ²+1)
        let r = cubic_real_roots(-2.0f64, 1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fits_axis_aligned_ellipse() {
        let truth = Ellipse::new(320.0, 240.0, 100.0, 40.0, 0.0);
        let (_, fit) = fit_ellipse(&samples(&truth, 200)).unwrap();
        assert!((fit.cx - 320.0).abs() < 1e-6);
        assert!((fit.cy - 240.0).abs() < 1e-6);
        assert!((fit.a - 100.0).abs() < 1e-6);
        assert!((fit.b - 40.0).abs() < 1e-6);
        let dtheta = fit.theta.min(PI - fit.theta);
        assert!(dtheta < 1e-6, "theta {}", fit.theta);
    }

    #[test]
    fn fits_rotated_ellipse_in_f32() {
        let truth = Ellipse::new(50.0f32, 60.0, 30.0, 12.0, 0.7);
        let pts: Vec<(f32, f32)> = (0..90)
            .map(|i| truth.point_at(2.0 * std::f32::consts::PI * i as f32 / 90.0))
            .collect();
        let (_, fit) = fit_ellipse(&pts).unwrap();
        assert!((fit.cx - 50.0).abs() < 0.05);
        assert!((fit.a - 30.0).abs() < 0.05);
        assert!((fit.b - 12.0).abs() < 0.05);
        assert!((fit.theta - 0.7).abs() < 0.01);
    }

    #[test]
    fn circle_has_equal_axes() {
        let truth = Ellipse::new(10.0, 20.0, 15.0, 15.0, 0.0);
        let (_, fit) = fit_ellipse(&samples(&truth, 64)).unwrap();
        assert!((fit.a - 15.0).abs() < 1e-6 && (fit.b - 15.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            fit_ellipse(&[(0.0f64, 0.0); 3]).unwrap_err(),
            FitError::TooFewPoints(3)
        );
        assert_eq!(
            fit_ellipse(&[(1.0f64, 1.0); 10]).unwrap_err(),
            FitError::Degenerate
        );
        let line: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert!(fit_ellipse(&line).is_err());
    }

    #[test]
    fn exact_samples_have_tiny_algebraic_residual() {
        let truth = Ellipse::new(200.0, 150.0, 80.0, 35.0, 1.1);
        let pts = samples(&truth, 120);
        let (conic, _) = fit_ellipse(&pts).unwrap();
        let [a, b, c, ..] = conic.0;
        let mean_res = pts.iter().map(|&(x, y)| conic.eval(x, y).abs()).sum::<f64>() / 120.0;
        let term_scale = pts
            .iter()
            .map(|&(x, y)| (a * x * x).abs() + (b * x * y).abs() + (c * y * y).abs())
            .fold(0.0, f64::max);
        assert!(mean_res <= 1e-6 * term_scale, "{mean_res} vs {term_scale}");
    }
}
