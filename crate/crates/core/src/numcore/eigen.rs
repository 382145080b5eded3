//! Eigenvalues of small dense real matrices: balancing, reduction to upper
//! Hessenberg form by stabilised elimination, then Francis double-shift QR.
//! Eigenvectors come from inverse iteration on the original matrix.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::linalg::Matrix;
use crate::{Error, Result};

pub const MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Sorted by descending real part; conjugate pairs list +Im first.
    pub values: Vec<Complex64>,
    /// Unit 2-norm; largest-modulus entry real and positive.
    pub vectors: Vec<Vec<Complex64>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// The leading eigenvalue l₁ (largest real part).
    pub fn leading(&self) -> Complex64 {
        self.values[0]
    }

    pub fn max_real(&self) -> f64 {
        self.values.first().map_or(f64::NEG_INFINITY, |v| v.re)
    }

    pub fn min_abs_real(&self) -> f64 {
        self.values.iter().map(|v| v.re.abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn min_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_real(&self, i: usize) -> bool {
        self.values[i].im == 0.0
    }

    /// Real part of eigenvector `i` (exact for real eigenvalues).
    pub fn real_vector(&self, i: usize) -> Vec<f64> {
        self.vectors[i].iter().map(|c| c.re).collect()
    }

    /// Largest residual ‖Av − μv‖ / (‖A‖‖v‖) over all pairs.
    pub fn residual(&self, a: &Matrix) -> f64 {
        let n = a.rows();
        let an = a.norm_fro().max(f64::MIN_POSITIVE);
        let mut worst: f64 = 0.0;
        for (mu, v) in self.values.iter().zip(&self.vectors) {
            let mut r2 = 0.0;
            for i in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += v[j] * a[(i, j)];
                }
                r2 += (acc - mu * v[i]).norm_sqr();
            }
            let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r2.sqrt() / (an * vn));
        }
        worst
    }
}

/// Full eigen-decomposition of a square matrix of dimension ≤ 64.
pub fn eigen(a: &Matrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::Dimension(alloc::format!("eigen of {}x{} matrix", a.rows(), a.cols())));
    }
    let n = a.rows();
    if n == 0 {
        return Ok(EigenDecomposition { values: Vec::new(), vectors: Vec::new() });
    }
    if n > MAX_DIM {
        return Err(Error::Dimension(alloc::format!("eigen limited to dimension {MAX_DIM}, got {n}")));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("eigen of a non-finite matrix".into()));
    }
    let mut values = eigenvalues(a)?;
    sort_values(&mut values);
    let vectors = eigenvectors(a, &values);
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, unsorted.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>> {
    let n = a.rows();
    if n == 1 {
        return Ok(vec![Complex64::new(a[(0, 0)], 0.0)]);
    }
    // 1-based working copy keeps the classical index arithmetic readable.
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[(i, j)];
        }
    }
    balance(&mut h, n);
    hessenberg(&mut h, n);
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            h[i][j] = 0.0;
        }
    }
    hqr(&mut h, n)
}

fn sort_values(values: &mut [Complex64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

fn balance(a: &mut [Vec<f64>], n: usize) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    for m in 2..n {
        let mut x: f64 = 0.0;
        let mut i = m;
        for j in m..=n {
            if a[j][m - 1].abs() > x.abs() {
                x = a[j][m - 1];
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let t = a[i][j];
                a[i][j] = a[m][j];
                a[m][j] = t;
            }
            for j in 1..=n {
                let t = a[j][i];
                a[j][i] = a[j][m];
                a[j][m] = t;
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a[i][m - 1];
                if y != 0.0 {
                    y /= x;
                    a[i][m - 1] = y;
                    for j in m..=n {
                        a[i][j] -= y * a[m][j];
                    }
                    for j in 1..=n {
                        a[j][m] += y * a[j][i];
                    }
                }
            }
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

fn hqr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<Complex64>> {
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];
    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
                break;
            }
            y = a[nn - 1][nn - 1];
            w = a[nn][nn - 1] * a[nn - 1][nn];
            if l == nn - 1 {
                p = 0.5 * (y - x);
                q = p * p + w;
                z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[nn - 1] = x + z;
                    wr[nn] = x + z;
                    if z != 0.0 {
                        wr[nn] = x - w / z;
                    }
                    wi[nn - 1] = 0.0;
                    wi[nn] = 0.0;
                } else {
                    wr[nn - 1] = x + p;
                    wr[nn] = x + p;
                    wi[nn - 1] = -z;
                    wi[nn] = z;
                }
                nn -= 2;
                break;
            }
            if its == 60 {
                return Err(Error::QrNonConvergence);
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 1..=nn {
                    a[i][i] -= x;
                }
                let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let mut m = nn - 2;
            loop {
                z = a[m][m];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
                q = a[m + 1][m + 1] - z - r - s;
                r = a[m + 2][m + 1];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=nn {
                a[i][i - 2] = 0.0;
                if i != m + 2 {
                    a[i][i - 3] = 0.0;
                }
            }
            let mut k = m;
            while k < nn {
                if k != m {
                    p = a[k][k - 1];
                    q = a[k + 1][k - 1];
                    r = 0.0;
                    if k != nn - 1 {
                        r = a[k + 2][k - 1];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[k][k - 1] = -a[k][k - 1];
                        }
                    } else {
                        a[k][k - 1] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        p = a[k][j] + q * a[k + 1][j];
                        if k != nn - 1 {
                            p += r * a[k + 2][j];
                            a[k + 2][j] -= p * z;
                        }
                        a[k + 1][j] -= p * y;
                        a[k][j] -= p * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        p = x * a[i][k] + y * a[i][k + 1];
                        if k != nn - 1 {
                            p += z * a[i][k + 2];
                            a[i][k + 2] -= p * r;
                        }
                        a[i][k + 1] -= p * q;
                        a[i][k] -= p;
                    }
                }
                k += 1;
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Inverse iteration for each (sorted) eigenvalue. Conjugate partners share
/// a conjugated vector; repeated eigenvalues are orthogonalised against the
/// vectors already found for the same value.
fn eigenvectors(a: &Matrix, values: &[Complex64]) -> Vec<Vec<Complex64>> {
    let n = a.rows();
    let scale = a.norm_inf().max(1e-300);
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for (idx, &mu) in values.iter().enumerate() {
        if mu.im < 0.0 {
            if let Some(j) = (0..idx).rev().find(|&j| (values[j] - mu.conj()).norm() <= 1e-12 * scale) {
                let v: Vec<Complex64> = out[j].iter().map(|c| c.conj()).collect();
                out.push(normalise(v));
                continue;
            }
        }
        let cluster: Vec<usize> =
            (0..idx).filter(|&j| (values[j] - mu).norm() <= 1e-8 * scale).collect();
        let shift = mu + Complex64::new(1e-10 * scale, 0.0);
        let mut m: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = Complex64::new(a[(i, j)], 0.0);
            }
            m[i * n + i] -= shift;
        }
        let (lu, perm) = complex_lu(m, n, 1e-14 * scale);
        let mut v: Vec<Complex64> =
            (0..n).map(|i| Complex64::new(1.0 + 0.1 * ((i * 7 + 3) % 11) as f64, 0.0)).collect();
        for _ in 0..4 {
            v = complex_solve(&lu, &perm, n, &v);
            for &j in &cluster {
                let u = &out[j];
                let proj: Complex64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for k in 0..n {
                    v[k] -= proj * u[k];
                }
            }
            v = normalise(v);
        }
        out.push(v);
    }
    out
}

fn normalise(mut v: Vec<Complex64>) -> Vec<Complex64> {
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        v.iter_mut().for_each(|c| *c /= norm);
    }
    // largest-modulus component real and positive (first one on ties)
    let mut k = 0;
    let mut best = -1.0;
    for (i, c) in v.iter().enumerate() {
        if c.norm() > best * (1.0 + 1e-12) {
            best = c.norm();
            k = i;
        }
    }
    if best > 0.0 {
        let phase = v[k].conj() / v[k].norm();
        v.iter_mut().for_each(|c| *c *= phase);
        v[k] = Complex64::new(v[k].re, 0.0);
    }
    v
}

fn complex_lu(mut m: Vec<Complex64>, n: usize, tiny: f64) -> (Vec<Complex64>, Vec<usize>) {
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        for i in k + 1..n {
            if m[i * n + k].norm() > m[p * n + k].norm() {
                p = i;
            }
        }
        if p != k {
            for j in 0..n {
                m.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        if m[k * n + k].norm() < tiny {
            m[k * n + k] = Complex64::new(tiny, 0.0);
        }
        let pivot = m[k * n + k];
        for i in k + 1..n {
            let f = m[i * n + k] / pivot;
            m[i * n + k] = f;
            for j in k + 1..n {
                let t = m[k * n + j];
                m[i * n + j] -= f * t;
            }
        }
    }
    (m, perm)
}

fn complex_solve(lu: &[Complex64], perm: &[usize], n: usize, b: &[Complex64]) -> Vec<Complex64> {
    let mut x: Vec<Complex64> = perm.iter().map(|&p| b[p]).collect();
    for i in 0..n {
        for k in 0..i {
            let t = lu[i * n + k] * x[k];
            x[i] -= t;
        }
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            let t = lu[i * n + k] * x[k];
            x[i] -= t;
        }
        x[i] /= lu[i * n + i];
    }
    // rescale to avoid overflow between iterations
    let m = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if m > 0.0 && m.is_finite() {
        x.iter_mut().for_each(|c| *c /= m);
    }
    x
}

/// Left eigenvector w (wᵀA = μwᵀ) for a real eigenvalue, normalised so that
/// w·v = 1 against the matching right eigenvector `v`.
pub fn left_eigenvector(a: &Matrix, mu: f64, v: &[f64]) -> Vec<f64> {
    let at = a.transpose();
    let values = [Complex64::new(mu, 0.0)];
    let w = eigenvectors(&at, &values).remove(0);
    let w: Vec<f64> = w.iter().map(|c| c.re).collect();
    let d: f64 = w.iter().zip(v).map(|(x, y)| x * y).sum();
    if d.abs() > 1e-300 {
        w.iter().map(|x| x / d).collect()
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn diagonal_and_rotation() {
        let e = eigen(&Matrix::diag(&[-2.0, -1.0])).unwrap();
        assert!(close(e.values[0], -1.0, 0.0) && close(e.values[1], -2.0, 0.0));
        assert!((e.vectors[0][1].re - 1.0).abs() < 1e-12 && e.vectors[0][0].norm() < 1e-9);
        assert!((e.vectors[1][0].re - 1.0).abs() < 1e-12 && e.vectors[1][1].norm() < 1e-9);

        let r = Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let e = eigen(&r).unwrap();
        assert!(close(e.values[0], 0.0, 1.0) && close(e.values[1], 0.0, -1.0));
        assert!(e.residual(&r) < 1e-10);
    }

    #[test]
    fn jordan_like_and_repeated() {
        let e = eigen(&Matrix::identity(3)).unwrap();
        assert!(e.residual(&Matrix::identity(3)) < 1e-12);
        // the three vectors must span: check pairwise near-orthogonality
        for i in 0..3 {
            for j in 0..i {
                let d: Complex64 = e.vectors[i].iter().zip(&e.vectors[j]).map(|(a, b)| a.conj() * b).sum();
                assert!(d.norm() < 1e-8);
            }
        }
    }

    #[test]
    fn companion_of_known_roots() {
        // roots 1, 2, 3, 4: x^4 - 10x^3 + 35x^2 - 50x + 24
        let a = Matrix::from_rows(&[
            &[10.0, -35.0, 50.0, -24.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
        ]);
        let e = eigen(&a).unwrap();
        for (k, want) in [4.0, 3.0, 2.0, 1.0].iter().enumerate() {
            assert!((e.values[k].re - want).abs() < 1e-9, "{:?}", e.values);
        }
        assert!(e.residual(&a) < 1e-8);
    }

    #[test]
    fn left_vector_is_dual() {
        let a = Matrix::from_rows(&[&[-2.0, 0.0], &[-0.5, -0.8]]);
        let e = eigen(&a).unwrap();
        let v = e.real_vector(0);
        let w = left_eigenvector(&a, e.values[0].re, &v);
        let wa = a.transpose().mul_vec(&w);
        for i in 0..2 {
            assert!((wa[i] - e.values[0].re * w[i]).abs() < 1e-9);
        }
        let d: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        assert!((d - 1.0).abs() < 1e-12);
    }
}
