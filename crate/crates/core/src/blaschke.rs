//! Finite Blaschke products in zero form `B(z) = η Π (z - a_k)/(1 - conj(a_k) z)`
//! and critical sets (finite multisets of disk points).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::{pseudo_hyperbolic_distance, unimodular, DiskAutomorphism};
use crate::error::{Error, Result};
use crate::poly::{cluster_points, Poly};
use crate::record::ComplexRecord;

/// Zeros closer than this to the origin are treated as zeros at the origin.
pub const ORIGIN_TOL: f64 = 1e-13;

/// Distance below which roots of the critical polynomial are merged into one
/// critical point of higher multiplicity.
pub const CLUSTER_TOL: f64 = 1e-4;

/// Critical-polynomial roots this close to the unit circle cannot be assigned
/// to the inside or the outside.
pub const CIRCLE_GAP: f64 = 1e-5;

/// Closer than this to a pole counts as a pole.
pub const POLE_TOL: f64 = 1e-14;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub point: Complex64,
    pub multiplicity: usize,
}

/// A finite multiset of points in the open unit disk, stored as distinct
/// points with multiplicities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriticalSet {
    entries: Vec<CriticalPoint>,
}

impl CriticalSet {
    pub fn empty() -> Self {
        CriticalSet::default()
    }

    pub fn new(entries: Vec<CriticalPoint>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if !(e.point.norm() < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "critical point {} is not inside the unit disk",
                    e.point
                )));
            }
            if e.multiplicity == 0 {
                return Err(Error::InvalidInput(format!(
                    "critical point {} has multiplicity 0",
                    e.point
                )));
            }
            if entries[..i].iter().any(|o| o.point == e.point) {
                return Err(Error::InvalidInput(format!(
                    "critical point {} listed twice",
                    e.point
                )));
            }
        }
        Ok(CriticalSet { entries })
    }

    /// Builds a set from a list of points in which repetitions encode multiplicity.
    pub fn from_points(points: &[Complex64]) -> Result<Self> {
        let mut entries: Vec<CriticalPoint> = Vec::new();
        for &p in points {
            match entries.iter_mut().find(|e| e.point == p) {
                Some(e) => e.multiplicity += 1,
                None => entries.push(CriticalPoint { point: p, multiplicity: 1 }),
            }
        }
        CriticalSet::new(entries)
    }

    pub fn from_pairs(pairs: &[(Complex64, usize)]) -> Result<Self> {
        CriticalSet::new(
            pairs
                .iter()
                .map(|&(point, multiplicity)| CriticalPoint { point, multiplicity })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[CriticalPoint] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of points counted with multiplicity.
    pub fn mass(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Multiplicity of the origin (0 if absent).
    pub fn origin_multiplicity(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.point.norm() <= ORIGIN_TOL)
            .map(|e| e.multiplicity)
            .sum()
    }

    /// Entries away from the origin.
    pub fn off_origin(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.entries.iter().filter(|e| e.point.norm() > ORIGIN_TOL)
    }

    /// The multiset as a flat list of points.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.point, e.multiplicity))
            .collect()
    }

    /// Multiset union (multiplicities add on coincident points).
    pub fn union(&self, other: &CriticalSet) -> CriticalSet {
        let mut entries = self.entries.clone();
        for e in &other.entries {
            match entries.iter_mut().find(|x| x.point == e.point) {
                Some(x) => x.multiplicity += e.multiplicity,
                None => entries.push(*e),
            }
        }
        CriticalSet { entries }
    }

    /// Applies `z ↦ f(z)` to every point; `f` must map the disk into itself injectively.
    pub fn map_points(&self, f: impl Fn(Complex64) -> Complex64) -> Result<CriticalSet> {
        CriticalSet::new(
            self.entries
                .iter()
                .map(|e| CriticalPoint { point: f(e.point), multiplicity: e.multiplicity })
                .collect(),
        )
    }

    /// The first `n` entries (in insertion order).
    pub fn prefix(&self, n: usize) -> CriticalSet {
        CriticalSet { entries: self.entries[..n.min(self.entries.len())].to_vec() }
    }

    /// Largest pseudo-hyperbolic distance between matched entries, or `None`
    /// when the two sets cannot be matched entry-for-entry with equal
    /// multiplicities.
    pub fn match_distance(&self, other: &CriticalSet) -> Option<f64> {
        if self.entries.len() != other.entries.len() || self.mass() != other.mass() {
            return None;
        }
        let mut used = vec![false; other.entries.len()];
        let mut worst: f64 = 0.0;
        for e in &self.entries {
            let best = other
                .entries
                .iter()
                .enumerate()
                .filter(|(j, o)| !used[*j] && o.multiplicity == e.multiplicity)
                .map(|(j, o)| (j, pseudo_hyperbolic_distance(e.point, o.point)))
                .min_by(|a, b| a.1.total_cmp(&b.1))?;
            used[best.0] = true;
            worst = worst.max(best.1);
        }
        Some(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub re: f64,
    pub im: f64,
    pub multiplicity: i64,
}

/// JSON form: `{"points": [{"re", "im", "multiplicity"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalSetRecord {
    pub points: Vec<CriticalPointRecord>,
}

impl From<&CriticalSet> for CriticalSetRecord {
    fn from(c: &CriticalSet) -> Self {
        CriticalSetRecord {
            points: c
                .entries
                .iter()
                .map(|e| CriticalPointRecord {
                    re: e.point.re,
                    im: e.point.im,
                    multiplicity: e.multiplicity as i64,
                })
                .collect(),
        }
    }
}

impl TryFrom<CriticalSetRecord> for CriticalSet {
    type Error = Error;
    fn try_from(r: CriticalSetRecord) -> Result<Self> {
        let mut entries = Vec::with_capacity(r.points.len());
        for p in r.points {
            if p.multiplicity < 1 {
                return Err(Error::InvalidInput(format!(
                    "multiplicity {} < 1 at ({}, {})",
                    p.multiplicity, p.re, p.im
                )));
            }
            if !p.re.is_finite() || !p.im.is_finite() {
                return Err(Error::InvalidInput("non-finite critical point".into()));
            }
            entries.push(CriticalPoint {
                point: Complex64::new(p.re, p.im),
                multiplicity: p.multiplicity as usize,
            });
        }
        CriticalSet::new(entries)
    }
}

/// A finite Blaschke product `η Π (z - a_k)/(1 - conj(a_k) z)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlaschkeRecord", into = "BlaschkeRecord")]
pub struct FiniteBlaschke {
    eta: Complex64,
    zeros: Vec<Complex64>,
}

/// JSON form: `{"eta": {"re", "im"}, "zeros": [{"re", "im"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlaschkeRecord {
    pub eta: ComplexRecord,
    pub zeros: Vec<ComplexRecord>,
}

impl From<FiniteBlaschke> for BlaschkeRecord {
    fn from(b: FiniteBlaschke) -> Self {
        BlaschkeRecord {
            eta: b.eta.into(),
            zeros: b.zeros.iter().map(|&z| z.into()).collect(),
        }
    }
}

impl TryFrom<BlaschkeRecord> for FiniteBlaschke {
    type Error = Error;
    fn try_from(r: BlaschkeRecord) -> Result<Self> {
        FiniteBlaschke::new(r.eta.into(), r.zeros.into_iter().map(Complex64::from).collect())
    }
}

impl FiniteBlaschke {
    pub fn new(eta: Complex64, zeros: Vec<Complex64>) -> Result<Self> {
        if zeros.is_empty() {
            return Err(Error::InvalidInput("a Blaschke product needs at least one zero".into()));
        }
        if (eta.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("|eta| = {} is not 1", eta.norm())));
        }
        for a in &zeros {
            if !(a.norm() < 1.0) {
                return Err(Error::InvalidInput(format!("zero {a} is not inside the unit disk")));
            }
        }
        Ok(FiniteBlaschke { eta: unimodular(eta)?, zeros })
    }

    pub fn identity() -> Self {
        FiniteBlaschke { eta: ONE, zeros: vec![ZERO] }
    }

    /// `z^k`, `k >= 1`.
    pub fn monomial(k: usize) -> Self {
        assert!(k >= 1);
        FiniteBlaschke { eta: ONE, zeros: vec![ZERO; k] }
    }

    pub fn from_automorphism(t: &DiskAutomorphism) -> Self {
        // rot (c - z)/(1 - c̄ z) = -rot (z - c)/(1 - c̄ z)
        FiniteBlaschke { eta: -t.rotation(), zeros: vec![t.center()] }
    }

    pub fn eta(&self) -> Complex64 {
        self.eta
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn with_eta(&self, eta: Complex64) -> Result<Self> {
        FiniteBlaschke::new(eta, self.zeros.clone())
    }

    fn pole_check(&self, z: Complex64) -> Result<()> {
        for a in &self.zeros {
            let d = (ONE - a.conj() * z).norm();
            if d < POLE_TOL {
                return Err(Error::PoleProximity { point: z.to_string(), distance: d });
            }
        }
        Ok(())
    }

    /// `B(z)`; fails near a pole `1/conj(a_k)`.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        self.pole_check(z)?;
        Ok(self.value(z))
    }

    /// `B'(z)`; fails near a pole.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        self.pole_check(z)?;
        Ok(self.value_and_derivative(z).1)
    }

    /// Unchecked evaluation, intended for `|z| <= 1` where no pole can occur.
    pub fn value(&self, z: Complex64) -> Complex64 {
        self.zeros
            .iter()
            .fold(self.eta, |acc, &a| acc * (z - a) / (ONE - a.conj() * z))
    }

    /// `(B(z), B'(z))` with the pole-free derivative
    /// `η Σ_k (1-|a_k|^2)/(1 - conj(a_k) z)^2 Π_{j≠k} (z-a_j)/(1-conj(a_j) z)`.
    pub fn value_and_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let d = self.zeros.len();
        let factors: Vec<Complex64> = self
            .zeros
            .iter()
            .map(|&a| (z - a) / (ONE - a.conj() * z))
            .collect();
        // suffix products
        let mut suffix = vec![ONE; d + 1];
        for k in (0..d).rev() {
            suffix[k] = suffix[k + 1] * factors[k];
        }
        let mut prefix = ONE;
        let mut dsum = ZERO;
        for (k, &a) in self.zeros.iter().enumerate() {
            let den = ONE - a.conj() * z;
            dsum += prefix * suffix[k + 1] * (1.0 - a.norm_sqr()) / (den * den);
            prefix *= factors[k];
        }
        (self.eta * suffix[0], self.eta * dsum)
    }

    /// Number of zeros at the origin.
    pub fn origin_order(&self) -> usize {
        self.zeros.iter().filter(|a| a.norm() <= ORIGIN_TOL).count()
    }

    /// `B^{(N+1)}(0)` for `B(z) = z^{N+1} g(z)`, i.e. `(N+1)! g(0)`.
    pub fn derivative_at_origin_order(&self, n: usize) -> Result<Complex64> {
        let found = self.origin_order();
        if found != n + 1 {
            return Err(Error::OrderMismatch { expected: n + 1, found });
        }
        let g0 = self
            .zeros
            .iter()
            .filter(|a| a.norm() > ORIGIN_TOL)
            .fold(self.eta, |acc, &a| acc * (-a));
        let fact: f64 = (1..=n + 1).map(|k| k as f64).product();
        Ok(g0 * fact)
    }

    /// The same product with `η` rotated so that the first nonvanishing
    /// Taylor coefficient at 0 is real and positive.
    pub fn normalized(&self) -> Self {
        let n = self.origin_order();
        if n == 0 {
            return self.clone();
        }
        let g0 = self.derivative_at_origin_order(n - 1).unwrap();
        let eta = self.eta * g0.conj() / g0.norm();
        FiniteBlaschke { eta: eta / eta.norm(), zeros: self.zeros.clone() }
    }

    /// `η Π (z - a_k)`.
    pub fn numerator(&self) -> Poly {
        Poly::from_roots(&self.zeros).scale(self.eta)
    }

    /// `Π (1 - conj(a_k) z)`.
    pub fn denominator(&self) -> Poly {
        Poly::from_roots(&self.zeros).reversed_conjugate()
    }

    /// `Q(z) = Σ_k (1-|a_k|^2) Π_{j≠k} (z-a_j)(1-conj(a_j) z)`, so that
    /// `B' = η Q / Π(1-conj(a_j) z)^2`. Degree `2d-2` before the loss of
    /// degree caused by zeros at the origin.
    pub fn critical_polynomial(&self) -> Poly {
        let linear: Vec<Poly> = self
            .zeros
            .iter()
            .map(|&a| {
                if a.norm() <= ORIGIN_TOL {
                    Poly::monomial(1)
                } else {
                    &Poly::from_roots(&[a]) * &Poly::new(vec![ONE, -a.conj()])
                }
            })
            .collect();
        let d = linear.len();
        let mut q = Poly::zero();
        for k in 0..d {
            let w = if self.zeros[k].norm() <= ORIGIN_TOL {
                1.0
            } else {
                1.0 - self.zeros[k].norm_sqr()
            };
            let mut term = Poly::constant(Complex64::new(w, 0.0));
            for (j, l) in linear.iter().enumerate() {
                if j != k {
                    term = &term * l;
                }
            }
            q = &q + &term;
        }
        q
    }

    /// The `d - 1` critical points inside the disk, with multiplicities.
    pub fn critical_points(&self) -> Result<CriticalSet> {
        self.critical_points_with_tol(CLUSTER_TOL)
    }

    pub fn critical_points_with_tol(&self, merge_tol: f64) -> Result<CriticalSet> {
        let d = self.degree();
        if d == 1 {
            return Ok(CriticalSet::empty());
        }
        let q = self.critical_polynomial();
        let mut roots = q.roots()?;
        if roots.len() < d - 1 {
            return Err(Error::RootFinder(format!(
                "critical polynomial has {} roots, expected at least {}",
                roots.len(),
                d - 1
            )));
        }
        // the roots pair up as c and 1/c̄, so the disk holds the d - 1 smallest
        roots.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let mut inside = roots[..d - 1].to_vec();
        self.refine_critical(&mut inside);
        if inside.iter().any(|r| !r.is_finite()) {
            return Err(Error::RootFinder("critical point refinement diverged".into()));
        }
        let near_circle = inside.iter().filter(|r| r.norm() >= 1.0 - CIRCLE_GAP).count();
        if near_circle > 0 {
            return Err(Error::MultiplicityAmbiguity(format!(
                "{near_circle} critical points within {CIRCLE_GAP:e} of the unit circle"
            )));
        }
        for r in inside.iter_mut() {
            if r.norm() <= ORIGIN_TOL {
                *r = ZERO;
            }
        }
        let clusters = cluster_points(&inside, merge_tol);
        let mut entries: Vec<CriticalPoint> = clusters
            .into_iter()
            .map(|c| CriticalPoint { point: self.polish_critical(c.point, c.multiplicity, merge_tol), multiplicity: c.multiplicity })
            .collect();
        entries.sort_by(|a, b| a.point.norm().total_cmp(&b.point.norm()).then(a.point.arg().total_cmp(&b.point.arg())));
        CriticalSet::new(entries)
    }

    /// `m`-th derivative of `B'/B = Σ 1/(z - a) + Σ ā/(1 - ā z)`.
    fn log_derivative(&self, z: Complex64, m: usize) -> Complex64 {
        let fact: f64 = (1..=m).map(|i| i as f64).product();
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let p = m as i32 + 1;
        self.zeros
            .iter()
            .map(|&a| sign * fact / (z - a).powi(p) + fact * a.conj().powi(p) / (ONE - a.conj() * z).powi(p))
            .sum()
    }

    /// Aberth iteration on the critical polynomial `Q` for its roots in the disk,
    /// the remaining roots being their reflections `1/c̄`. `Q'/Q = S + S'/S - 2 Σ ā/(1 - ā z)`
    /// with `S = B'/B` is evaluated in partial fractions.
    fn refine_critical(&self, roots: &mut [Complex64]) {
        let q_log = |z: Complex64| {
            let s = self.log_derivative(z, 0);
            let ds = self.log_derivative(z, 1);
            let poles: Complex64 = self.zeros.iter().map(|&a| a.conj() / (ONE - a.conj() * z)).sum();
            s + ds / s - poles * 2.0
        };
        for _ in 0..64 {
            let mut largest = 0.0f64;
            for k in 0..roots.len() {
                let z = roots[k];
                if z.norm() <= ORIGIN_TOL {
                    continue;
                }
                let mut repulsion = ZERO;
                for (j, &w) in roots.iter().enumerate() {
                    if j != k {
                        repulsion += ONE / (z - w);
                    }
                    if w.norm() > ORIGIN_TOL {
                        repulsion += ONE / (z - ONE / w.conj());
                    }
                }
                let step = ONE / (q_log(z) - repulsion);
                if !step.is_finite() {
                    continue;
                }
                roots[k] = z - step;
                largest = largest.max(step.norm());
            }
            if largest <= 1e-15 {
                break;
            }
        }
    }

    /// Refines a root cluster of the critical polynomial. Multiple zeros of `B`
    /// are exact; elsewhere Newton runs on the partial-fraction form of `(B'/B)^{(k-1)}`.
    fn polish_critical(&self, c: Complex64, k: usize, tol: f64) -> Complex64 {
        if c == ZERO {
            return c;
        }
        let near: Vec<Complex64> = self.zeros.iter().copied().filter(|a| (a - c).norm() <= tol).collect();
        if !near.is_empty() {
            return near.iter().sum::<Complex64>() / near.len() as f64;
        }
        let mut z = c;
        let mut last = f64::INFINITY;
        for _ in 0..8 {
            let step = self.log_derivative(z, k - 1) / self.log_derivative(z, k);
            if !step.is_finite() || step.norm() >= last || (z - step - c).norm() > tol {
                break;
            }
            z -= step;
            last = step.norm();
            if last <= 1e-17 {
                break;
            }
        }
        z
    }

    /// Preimages of `w` under `self`, counted with multiplicity (`degree` points).
    pub fn preimages(&self, w: Complex64) -> Result<Vec<Complex64>> {
        if w == ZERO {
            return Ok(self.zeros.clone());
        }
        let p = &self.numerator() - &self.denominator().scale(w);
        let mut roots = p.roots()?;
        if roots.len() != self.degree() {
            return Err(Error::RootFinder(format!(
                "preimage equation has {} roots, expected {}",
                roots.len(),
                self.degree()
            )));
        }
        for r in roots.iter_mut() {
            if r.norm() >= 1.0 {
                if r.norm() < 1.0 + 1e-12 {
                    *r /= r.norm() * (1.0 + 1e-15);
                } else {
                    return Err(Error::RootFinder(format!("preimage {r} outside the disk")));
                }
            }
        }
        Ok(roots)
    }

    /// `outer ∘ inner` as a Blaschke product of degree `deg(outer)·deg(inner)`.
    pub fn compose(outer: &FiniteBlaschke, inner: &FiniteBlaschke) -> Result<FiniteBlaschke> {
        let mut zeros = Vec::with_capacity(outer.degree() * inner.degree());
        for &b in &outer.zeros {
            zeros.extend(inner.preimages(b)?);
        }
        let shape = FiniteBlaschke { eta: ONE, zeros };
        let probe = ONE;
        let target = outer.value(inner.value(probe));
        let eta = unimodular(target / shape.value(probe))?;
        let result = FiniteBlaschke { eta, zeros: shape.zeros };
        for k in 1..8 {
            let z = Complex64::from_polar(0.9, k as f64 * 0.77);
            let err = (result.value(z) - outer.value(inner.value(z))).norm();
            if err > 1e-9 {
                return Err(Error::Internal(format!(
                    "composition check failed at {z}: error {err:e}"
                )));
            }
        }
        Ok(result)
    }

    /// `T ∘ self`.
    pub fn postcompose(&self, t: &DiskAutomorphism) -> Result<FiniteBlaschke> {
        FiniteBlaschke::compose(&FiniteBlaschke::from_automorphism(t), self)
    }

    /// Evaluates `B` outside the closed disk and checks the reflection identity
    /// `B(z) = 1/conj(B(1/conj z))`.
    pub fn reflect_check(&self, z: Complex64) -> Result<Complex64> {
        if z.norm() <= 1.0 {
            return Err(Error::Domain(format!("{z} is not outside the closed unit disk")));
        }
        let outside = self.evaluate(z)?;
        let inner = self.evaluate(ONE / z.conj())?;
        if inner.norm() < POLE_TOL {
            return Err(Error::PoleProximity { point: z.to_string(), distance: inner.norm() });
        }
        let reflected = ONE / inner.conj();
        let err = (outside - reflected).norm();
        if err > 1e-10 * outside.norm().max(1.0) {
            return Err(Error::Internal(format!(
                "reflection identity violated at {z}: {outside} vs {reflected}"
            )));
        }
        Ok(outside)
    }

    /// Largest `||B(ζ)| - 1|` over `samples` equally spaced boundary points.
    pub fn boundary_modulus_defect(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| {
                let z = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / samples as f64);
                (self.value(z).norm() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}
