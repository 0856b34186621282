//! Dense complex polynomials and a companion-matrix root finder.
//!
//! Coefficients are stored in ascending order, `coeffs[k]` multiplies `z^k`.
//! Roots are the eigenvalues of the balanced companion matrix, computed with a
//! shifted complex QR iteration on the (already Hessenberg) companion form and
//! polished with a couple of Newton steps on the original polynomial.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&ZERO) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: vec![ZERO] }
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    /// `z^k`
    pub fn monomial(k: usize) -> Self {
        let mut c = vec![ZERO; k + 1];
        c[k] = ONE;
        Poly { coeffs: c }
    }

    /// Monic polynomial `Π (z - r)`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut c = vec![ONE];
        for &r in roots {
            let mut next = vec![ZERO; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k + 1] += ck;
                next[k] -= r * ck;
            }
            c = next;
        }
        Poly::new(c)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == ZERO
    }

    pub fn leading(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Value and first derivative by a single Horner sweep.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = ZERO;
        let mut dp = ZERO;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    /// Antiderivative vanishing at the origin.
    pub fn integral(&self) -> Poly {
        let mut c = vec![ZERO; self.coeffs.len() + 1];
        for (k, &ck) in self.coeffs.iter().enumerate() {
            c[k + 1] = ck / (k as f64 + 1.0);
        }
        Poly::new(c)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `z^n · conj(p(1/conj z))` with `n = self.degree()`.
    pub fn reversed_conjugate(&self) -> Poly {
        Poly::new(self.coeffs.iter().rev().map(|c| c.conj()).collect())
    }

    /// Multiplicity of the root at the origin, read off exact zero coefficients.
    pub fn origin_order(&self) -> usize {
        if self.is_zero() {
            return 0;
        }
        self.coeffs.iter().take_while(|&&c| c == ZERO).count()
    }

    /// Divides out `z^k` exactly (the low `k` coefficients are dropped).
    pub fn shift_down(&self, k: usize) -> Poly {
        if k >= self.coeffs.len() {
            return Poly::zero();
        }
        Poly::new(self.coeffs[k..].to_vec())
    }

    /// Taylor coefficients `p^{(j)}(c)/j!` for `j = 0..count` by repeated
    /// synthetic division.
    pub fn taylor_at(&self, c: Complex64, count: usize) -> Vec<Complex64> {
        let mut work = self.coeffs.clone();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            if work.is_empty() {
                out.push(ZERO);
                continue;
            }
            // divide work by (z - c): remainder is the value
            let n = work.len();
            let mut q = vec![ZERO; n.saturating_sub(1)];
            let mut acc = ZERO;
            for k in (0..n).rev() {
                acc = acc * c + work[k];
                if k > 0 {
                    q[k - 1] = acc;
                }
            }
            out.push(acc);
            work = q;
        }
        out
    }

    /// Quotient and remainder of division by `d`.
    pub fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let dd = d.degree();
        let lead = d.leading();
        if self.degree() < dd {
            return (Poly::zero(), self.clone());
        }
        let mut rem = self.coeffs.clone();
        let mut q = vec![ZERO; self.degree() - dd + 1];
        for k in (0..q.len()).rev() {
            let f = rem[k + dd] / lead;
            q[k] = f;
            for (j, &dj) in d.coeffs.iter().enumerate() {
                rem[k + j] -= f * dj;
            }
        }
        rem.truncate(dd.max(1));
        (Poly::new(q), Poly::new(rem))
    }

    /// Largest coefficient modulus.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// All roots, counted with multiplicity. Exact zero leading coefficients are
    /// ignored and exact zero trailing coefficients yield exact roots at 0.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::RootFinder("zero polynomial has no isolated roots".into()));
        }
        let k0 = self.origin_order();
        let reduced = self.shift_down(k0);
        let mut roots = vec![ZERO; k0];
        if reduced.degree() == 0 {
            return Ok(roots);
        }
        let lead = reduced.leading();
        let monic: Vec<Complex64> = reduced.coeffs.iter().map(|&c| c / lead).collect();
        let eig = companion_eigenvalues(&monic)?;
        for (i, &r) in eig.iter().enumerate() {
            // members of a split multiple root are left alone so that their
            // centroid stays accurate
            let isolated = eig
                .iter()
                .enumerate()
                .all(|(j, &s)| j == i || (s - r).norm() > 1e-4 * (1.0 + r.norm()));
            roots.push(if isolated { polish(&reduced, r, 2) } else { r });
        }
        Ok(roots)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or(ZERO)
                        + rhs.coeffs.get(k).copied().unwrap_or(ZERO)
                })
                .collect(),
        )
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut c = vec![ZERO; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == ZERO {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Poly::new(c)
    }
}

fn polish(p: &Poly, mut z: Complex64, iters: usize) -> Complex64 {
    let mut best = p.eval(z).norm();
    for _ in 0..iters {
        let (v, dv) = p.eval_with_derivative(z);
        if dv.norm() == 0.0 || !dv.is_finite() {
            break;
        }
        let cand = z - v / dv;
        let cv = p.eval(cand).norm();
        if cand.is_finite() && cv < best {
            z = cand;
            best = cv;
        } else {
            break;
        }
    }
    z
}

/// Eigenvalues of the companion matrix of the monic polynomial whose
/// ascending coefficients are `monic` (last entry 1).
fn companion_eigenvalues(monic: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = monic.len() - 1;
    if n == 1 {
        return Ok(vec![-monic[0]]);
    }
    // upper Hessenberg: first row holds -c_{n-1}, ..., -c_0, ones below the diagonal
    let mut h = vec![vec![ZERO; n]; n];
    for j in 0..n {
        h[0][j] = -monic[n - 1 - j];
    }
    for i in 1..n {
        h[i][i - 1] = ONE;
    }
    balance(&mut h);
    hessenberg_qr_eigenvalues(h)
}

/// Parlett–Reinsch balancing with powers of two.
fn balance(a: &mut [Vec<Complex64>]) {
    let n = a.len();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].l1_norm();
                    r += a[i][j].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i][j] *= g;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let an = a.norm();
    let r = an.hypot(b.norm());
    if r == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    (an / r, (a / an) * b.conj() / r)
}

/// Shifted single-step complex QR on an upper Hessenberg matrix.
fn hessenberg_qr_eigenvalues(mut h: Vec<Vec<Complex64>>) -> Result<Vec<Complex64>> {
    let n = h.len();
    let mut eig = vec![ZERO; n];
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n.max(4);
    loop {
        if hi == 0 {
            eig[0] = h[0][0];
            break;
        }
        let mut l = hi;
        while l > 0 {
            let s = h[l - 1][l - 1].l1_norm() + h[l][l].l1_norm();
            if h[l][l - 1].l1_norm() <= f64::EPSILON * s.max(f64::MIN_POSITIVE) {
                h[l][l - 1] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi][hi];
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_total {
            return Err(Error::RootFinder(format!(
                "QR iteration exceeded {max_total} sweeps"
            )));
        }
        let shift = if iter % 11 == 0 {
            // exceptional shift
            h[hi][hi] + Complex64::new(0.75 * h[hi][hi - 1].norm(), 0.4375 * h[hi][hi - 1].norm())
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        for k in l..=hi {
            h[k][k] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            for j in k..=hi {
                let x = h[k][j];
                let y = h[k + 1][j];
                h[k][j] = x * c + s * y;
                h[k + 1][j] = -s.conj() * x + y * c;
            }
            rots.push((c, s));
        }
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = l + idx;
            let top = (k + 2).min(hi);
            for row in h.iter_mut().take(top + 1).skip(l) {
                let x = row[k];
                let y = row[k + 1];
                row[k] = x * c + y * s.conj();
                row[k + 1] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[k][k] += shift;
        }
    }
    Ok(eig)
}

fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let l1 = tr * 0.5 + disc;
    let l2 = tr * 0.5 - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// A point together with the number of times it occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cluster {
    pub point: Complex64,
    pub multiplicity: usize,
}

/// Groups nearly coincident roots. Roots closer than `tol` are linked
/// (union-find, transitive), and each group is replaced by its centroid.
pub fn cluster_points(points: &[Complex64], tol: f64) -> Vec<Cluster> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i] - points[j]).norm() <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += points[i];
                g.2 += 1;
            }
            None => groups.push((r, points[i], 1)),
        }
    }
    groups
        .into_iter()
        .map(|(_, sum, m)| Cluster {
            point: sum / m as f64,
            multiplicity: m,
        })
        .collect()
}
