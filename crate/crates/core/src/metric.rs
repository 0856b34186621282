//! Conformal densities sampled on a polar grid of a sub-disk `|z| ≤ r_max`.
//!
//! Radii are uniform in `log(1 - r)`, `r_i = 1 - (1 - r_max)^{i/n_r}`, so rings
//! crowd toward the outer edge where pullback densities grow like the
//! hyperbolic one. The
//! Laplacian is the 5-point polar stencil with three-point nonuniform radial
//! differences.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::blaschke::{CriticalPoint, CriticalSet, FiniteBlaschke};
use crate::disk::pseudo_hyperbolic_distance;
use crate::error::{Error, Result};

pub const RATIO_TOL: f64 = 1e-9;

/// Near-equality threshold for the dominance flag.
pub const NEAR_EQUALITY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
}

impl Default for PolarGrid {
    fn default() -> Self {
        PolarGrid { n_r: 128, n_theta: 512, r_max: 0.95 }
    }
}

impl PolarGrid {
    pub fn new(n_r: usize, n_theta: usize, r_max: f64) -> Result<Self> {
        let g = PolarGrid { n_r, n_theta, r_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 2 || self.n_theta < 4 || !(self.r_max > 0.0 && self.r_max < 1.0) {
            return Err(Error::InvalidInput(format!("invalid polar grid {self:?}")));
        }
        Ok(())
    }

    /// Same disk with both spacings halved.
    pub fn refined(&self) -> Self {
        PolarGrid { n_r: 2 * self.n_r, n_theta: 2 * self.n_theta, r_max: self.r_max }
    }

    pub fn node_count(&self) -> usize {
        1 + self.n_r * self.n_theta
    }

    /// Radius of ring `i`; ring 0 is the center.
    pub fn radius(&self, i: usize) -> f64 {
        1.0 - (1.0 - self.r_max).powf(i as f64 / self.n_r as f64)
    }

    pub fn dtheta(&self) -> f64 {
        2.0 * PI / self.n_theta as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        if i == 0 {
            0
        } else {
            1 + (i - 1) * self.n_theta + j % self.n_theta
        }
    }

    /// `(ring, angle)` of a node index.
    pub fn ring_angle(&self, idx: usize) -> (usize, usize) {
        if idx == 0 {
            (0, 0)
        } else {
            (1 + (idx - 1) / self.n_theta, (idx - 1) % self.n_theta)
        }
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        let (i, j) = self.ring_angle(idx);
        if i == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(self.radius(i), j as f64 * self.dtheta())
        }
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.node_count()).map(|k| self.point(k)).collect()
    }

    /// Nodes with a full stencil: the center and every ring but the outermost.
    pub fn is_interior(&self, idx: usize) -> bool {
        self.ring_angle(idx).0 < self.n_r
    }

    /// Largest of the radial spacings and the outer arc spacing.
    pub fn spacing(&self) -> f64 {
        let dr = (1..=self.n_r)
            .map(|i| self.radius(i) - self.radius(i - 1))
            .fold(0.0, f64::max);
        dr.max(self.r_max * self.dtheta())
    }

    /// 5-point Laplacian of `u` at an interior node.
    fn laplacian(&self, u: impl Fn(usize) -> f64, idx: usize) -> f64 {
        let (i, j) = self.ring_angle(idx);
        if i == 0 {
            let r1 = self.radius(1);
            let mean = (0..self.n_theta).map(|j| u(self.index(1, j))).sum::<f64>() / self.n_theta as f64;
            return 4.0 * (mean - u(0)) / (r1 * r1);
        }
        let r = self.radius(i);
        let (hm, hp) = (r - self.radius(i - 1), self.radius(i + 1) - r);
        let (um, u0, up) = (u(self.index(i - 1, j)), u(idx), u(self.index(i + 1, j)));
        let den = hm * hp * (hm + hp);
        let ur = (hm * hm * (up - u0) + hp * hp * (u0 - um)) / den;
        let urr = 2.0 * (hm * (up - u0) - hp * (u0 - um)) / den;
        let n = self.n_theta;
        let dt = self.dtheta();
        let utt = (u(self.index(i, j + 1)) - 2.0 * u0 + u(self.index(i, j + n - 1))) / (dt * dt);
        urr + ur / r + utt / (r * r)
    }

    fn stencil(&self, idx: usize) -> Vec<usize> {
        let (i, j) = self.ring_angle(idx);
        if i == 0 {
            let mut v: Vec<usize> = (0..self.n_theta).map(|j| self.index(1, j)).collect();
            v.push(0);
            return v;
        }
        let n = self.n_theta;
        vec![
            idx,
            self.index(i - 1, j),
            self.index(i + 1, j),
            self.index(i, j + 1),
            self.index(i, j + n - 1),
        ]
    }
}

/// A nonnegative density `λ` on a polar grid with the zeros it is allowed to have.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: PolarGrid,
    values: Vec<f64>,
    zero_set: CriticalSet,
}

impl DensityField {
    pub fn new(grid: PolarGrid, values: Vec<f64>, zero_set: CriticalSet) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.node_count() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!("density value {v} is not a finite nonnegative number")));
        }
        Ok(DensityField { grid, values, zero_set })
    }

    pub fn from_fn(grid: PolarGrid, zero_set: CriticalSet, f: impl Fn(Complex64) -> f64 + Sync) -> Result<Self> {
        grid.validate()?;
        let values = (0..grid.node_count()).into_par_iter().map(|k| f(grid.point(k))).collect();
        DensityField::new(grid, values, zero_set)
    }

    /// `λ_𝔻(z) = 1/(1-|z|²)`
    pub fn hyperbolic(grid: PolarGrid) -> Result<Self> {
        DensityField::from_fn(grid, CriticalSet::empty(), |z| 1.0 / (1.0 - z.norm_sqr()))
    }

    pub fn constant(grid: PolarGrid, c: f64) -> Result<Self> {
        DensityField::from_fn(grid, CriticalSet::empty(), |_| c)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        DensityField::new(self.grid, self.values.iter().map(|v| c * v).collect(), self.zero_set.clone())
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn zero_set(&self) -> &CriticalSet {
        &self.zero_set
    }

    /// Distance from a node to the nearest annotated zero.
    fn zero_distance(&self, z: Complex64) -> f64 {
        self.zero_set
            .entries()
            .iter()
            .map(|e| (z - e.point).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// `log|S(z)|` with `S = Π (z - c)^k` over the annotated zeros.
    fn log_zero_factor(&self, z: Complex64) -> f64 {
        self.zero_set
            .entries()
            .iter()
            .map(|e| e.multiplicity as f64 * (z - e.point).norm().ln())
            .sum()
    }

    /// `re,im,value` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,value\n");
        for (k, v) in self.values.iter().enumerate() {
            let z = self.grid.point(k);
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", z.re, z.im, v));
        }
        s
    }
}

/// `|f'(z)| / (1 - |f(z)|²)` with the critical points of `f` inside the grid disk.
pub fn pullback_density(f: &FiniteBlaschke, grid: PolarGrid) -> Result<DensityField> {
    scaled_pullback(f, 1.0, grid)
}

/// `c |f'(z)| / (1 - c²|f(z)|²)`, the pullback under `c·f`.
pub fn scaled_pullback(f: &FiniteBlaschke, c: f64, grid: PolarGrid) -> Result<DensityField> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidInput(format!("scale {c} is not in (0, 1]")));
    }
    let crit = f.critical_points()?;
    let inside: Vec<CriticalPoint> = crit
        .entries()
        .iter()
        .filter(|e| e.point.norm() <= grid.r_max)
        .copied()
        .collect();
    DensityField::from_fn(grid, CriticalSet::new(inside)?, |z| {
        let (w, dw) = f.value_and_derivative(z);
        c * dw.norm() / (1.0 - c * c * w.norm_sqr())
    })
}

/// Per-node curvature, `None` where it is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    grid: PolarGrid,
    values: Vec<Option<f64>>,
}

impl CurvatureField {
    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn defined(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().filter_map(|(k, v)| v.map(|v| (k, v)))
    }

    pub fn defined_count(&self) -> usize {
        self.defined().count()
    }

    /// `max |κ - target|` over defined nodes.
    pub fn max_deviation(&self, target: f64) -> f64 {
        self.defined().map(|(_, v)| (v - target).abs()).fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.defined().map(|(_, v)| v).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `κ = -Δ log λ / λ²` by the polar stencil.
///
/// The harmonic part `log|S|` of the annotated zeros is removed before
/// differencing, since its Laplacian vanishes exactly. Nodes within two grid
/// spacings of an annotated zero, or with a vanishing stencil value, are
/// left undefined.
pub fn discrete_curvature(lambda: &DensityField) -> CurvatureField {
    let grid = lambda.grid;
    let h = grid.spacing();
    let u: Vec<f64> = (0..grid.node_count())
        .into_par_iter()
        .map(|k| {
            let v = lambda.values[k];
            if v > 0.0 {
                v.ln() - lambda.log_zero_factor(grid.point(k))
            } else {
                f64::NAN
            }
        })
        .collect();
    let values = (0..grid.node_count())
        .into_par_iter()
        .map(|k| {
            if !grid.is_interior(k) || lambda.zero_distance(grid.point(k)) < 2.0 * h {
                return None;
            }
            if grid.stencil(k).iter().any(|&s| !(lambda.values[s] > 0.0)) {
                return None;
            }
            let lam = lambda.values[k];
            Some(-grid.laplacian(|s| u[s], k) / (lam * lam))
        })
        .collect();
    CurvatureField { grid, values }
}

fn same_grid(a: &DensityField, b: &DensityField) -> Result<()> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    Ok(())
}

/// A product density with its closed-form curvature `-4(λ_A⁻² + λ_B⁻²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductDensity {
    pub density: DensityField,
    pub analytic_curvature: CurvatureField,
}

pub fn product_density(a: &DensityField, b: &DensityField) -> Result<ProductDensity> {
    same_grid(a, b)?;
    let grid = a.grid;
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
    let curv = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| (x > 0.0 && y > 0.0).then(|| -4.0 * (1.0 / (x * x) + 1.0 / (y * y))))
        .collect();
    Ok(ProductDensity {
        density: DensityField::new(grid, values, a.zero_set.union(&b.zero_set))?,
        analytic_curvature: CurvatureField { grid, values: curv },
    })
}

/// Largest `|stencil - analytic|` over interior nodes where both factors exceed `floor`.
pub fn product_consistency(a: &DensityField, b: &DensityField, floor: f64) -> Result<f64> {
    let p = product_density(a, b)?;
    let stencil = discrete_curvature(&p.density);
    let mut worst: f64 = 0.0;
    for (k, s) in stencil.defined() {
        if a.values[k] > floor && b.values[k] > floor {
            if let Some(exact) = p.analytic_curvature.values[k] {
                worst = worst.max((s - exact).abs());
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnionMetric {
    pub lambda_a: DensityField,
    pub lambda_b: DensityField,
    pub product: ProductDensity,
    /// `-max κ` of the product over the grid
    pub alpha: f64,
    /// `(√α / 2) λ_A λ_B`
    pub mu: DensityField,
    /// Closed-form curvature of `μ`, `4 κ_λ / α`.
    pub mu_curvature: CurvatureField,
}

pub fn union_metric(f: &FiniteBlaschke, g: &FiniteBlaschke, c: f64, grid: PolarGrid) -> Result<UnionMetric> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidInput(format!("scale {c} is not in (0, 1)")));
    }
    let lambda_a = scaled_pullback(f, c, grid)?;
    let lambda_b = scaled_pullback(g, c, grid)?;
    let product = product_density(&lambda_a, &lambda_b)?;
    let alpha = -product.analytic_curvature.max();
    if !(alpha > 0.0) {
        return Err(Error::Internal(format!("nonpositive curvature bound α = {alpha}")));
    }
    let mu = product.density.scaled(alpha.sqrt() / 2.0)?;
    let mu_curvature = CurvatureField {
        grid,
        values: product.analytic_curvature.values.iter().map(|v| v.map(|v| 4.0 * v / alpha)).collect(),
    };
    if mu_curvature.max() > -4.0 + 1e-12 * alpha.max(1.0) {
        return Err(Error::Internal("scaled union metric exceeds curvature -4".into()));
    }
    Ok(UnionMetric { lambda_a, lambda_b, product, alpha, mu, mu_curvature })
}

/// `max λ/λ_𝔻` over the grid.
pub fn ahlfors_check(lambda: &DensityField) -> f64 {
    let g = lambda.grid;
    (0..g.node_count())
        .map(|k| lambda.values[k] * (1.0 - g.point(k).norm_sqr()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub max_ratio: f64,
    /// `max_ratio ≤ 1 + RATIO_TOL`
    pub pass: bool,
    /// A node away from the zeros came within `NEAR_EQUALITY` of equality while
    /// the competitor's zero set is strictly larger.
    pub near_equality: bool,
}

/// `max λ*/λ_max`, skipping nodes where both vanish.
pub fn dominance_check(star: &DensityField, max: &DensityField) -> Result<DominanceReport> {
    same_grid(star, max)?;
    for e in max.zero_set.entries() {
        let covered: usize = star
            .zero_set
            .entries()
            .iter()
            .filter(|s| pseudo_hyperbolic_distance(s.point, e.point) < 1e-6)
            .map(|s| s.multiplicity)
            .sum();
        if covered < e.multiplicity {
            return Err(Error::AnnotationContainment(format!(
                "zero {} of multiplicity {} is not contained in the competitor's zero set",
                e.point, e.multiplicity
            )));
        }
    }
    let larger = star.zero_set.mass() > max.zero_set.mass();
    let h = star.grid.spacing();
    let mut max_ratio: f64 = 0.0;
    let mut near = false;
    for k in 0..star.grid.node_count() {
        let (s, m) = (star.values[k], max.values[k]);
        if s == 0.0 && m == 0.0 {
            continue;
        }
        let ratio = if m == 0.0 { f64::INFINITY } else { s / m };
        max_ratio = max_ratio.max(ratio);
        if larger && ratio >= 1.0 - NEAR_EQUALITY && star.zero_distance(star.grid.point(k)) > 2.0 * h {
            near = true;
        }
    }
    Ok(DominanceReport { max_ratio, pass: max_ratio <= 1.0 + RATIO_TOL, near_equality: near })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_maximal, HomotopyConfig};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small() -> PolarGrid {
        PolarGrid::new(32, 128, 0.9).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = small();
        assert_eq!(g.node_count(), 1 + 32 * 128);
        assert_eq!(g.point(0), c(0.0, 0.0));
        assert!((g.radius(32) - 0.9).abs() < 1e-15);
        for k in [1, 77, 4000] {
            let (i, j) = g.ring_angle(k);
            assert_eq!(g.index(i, j), k);
        }
        assert!(PolarGrid::new(8, 16, 1.0).is_err());
        assert!((PolarGrid::default().spacing() - (1.0 - 0.05f64.powf(1.0 / 128.0))).abs() < 1e-15);
    }

    #[test]
    fn pullback_examples() {
        let g = small();
        let id = pullback_density(&FiniteBlaschke::identity(), g).unwrap();
        assert_eq!(id.values()[0], 1.0);
        let sq = FiniteBlaschke::monomial(2);
        let (w, dw) = sq.value_and_derivative(c(0.5, 0.0));
        assert!((dw.norm() / (1.0 - w.norm_sqr()) - 1.0666666666666667).abs() < 1e-15);
        let cs = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1)]).unwrap();
        let b = solve_maximal(&cs, &HomotopyConfig::default()).unwrap().solution;
        let grid = PolarGrid::new(2, 4, 0.5).unwrap();
        let f = pullback_density(&b, grid).unwrap();
        // ring 2, angle 0 sits at 0.5
        assert!(f.values()[grid.index(2, 0)] < 1e-12);
        assert!(f.zero_set().match_distance(&cs).unwrap() < 1e-10);
    }

    #[test]
    fn hyperbolic_curvature_converges() {
        let g = PolarGrid::new(64, 256, 0.95).unwrap();
        let d1 = discrete_curvature(&DensityField::hyperbolic(g).unwrap()).max_deviation(-4.0);
        let d2 = discrete_curvature(&DensityField::hyperbolic(g.refined()).unwrap()).max_deviation(-4.0);
        assert!(d1 <= 10.0 * g.spacing().powi(2), "{d1}");
        let ratio = d1 / d2;
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
        let flat = discrete_curvature(&DensityField::constant(g, 1.0).unwrap());
        assert_eq!(flat.max_deviation(0.0), 0.0);
    }

    #[test]
    fn product_examples() {
        let g = small();
        let half = DensityField::constant(g, 0.5).unwrap();
        let p = product_density(&half, &half).unwrap();
        assert!(p.density.values().iter().all(|&v| v == 0.25));
        assert!(p.analytic_curvature.defined().all(|(_, v)| v == -32.0));
        let hyp = DensityField::hyperbolic(g).unwrap();
        let q = product_density(&hyp, &hyp).unwrap();
        assert_eq!(q.density.values()[0], 1.0);
        assert_eq!(q.analytic_curvature.values()[0], Some(-8.0));
        let mut zeros = vec![1.0; g.node_count()];
        zeros[5] = 0.0;
        let z = DensityField::new(g, zeros, CriticalSet::empty()).unwrap();
        let r = product_density(&z, &hyp).unwrap();
        assert_eq!(r.density.values()[5], 0.0);
        assert_eq!(r.analytic_curvature.values()[5], None);
        assert!(product_density(&hyp, &DensityField::hyperbolic(PolarGrid::default()).unwrap()).is_err());
    }

    #[test]
    fn product_stencil_matches_closed_form() {
        let g = PolarGrid::new(64, 256, 0.9).unwrap();
        let a = pullback_density(&FiniteBlaschke::identity(), g).unwrap();
        let b = DensityField::hyperbolic(g).unwrap();
        let dev = product_consistency(&a, &b, 0.05).unwrap();
        assert!(dev <= 10.0 * g.spacing().powi(2), "{dev}");
        let fine = product_consistency(&pullback_density(&FiniteBlaschke::identity(), g.refined()).unwrap(), &DensityField::hyperbolic(g.refined()).unwrap(), 0.05).unwrap();
        assert!((3.5..=4.5).contains(&(dev / fine)), "{}", dev / fine);
    }

    #[test]
    fn union_metric_examples() {
        let g = small();
        let id = FiniteBlaschke::identity();
        let u = union_metric(&id, &id, 0.5, g).unwrap();
        let r2 = g.r_max * g.r_max;
        assert!((u.alpha - 32.0 * (1.0 - r2 / 4.0).powi(2)).abs() < 1e-10);
        assert!(u.mu_curvature.max() <= -4.0 + 1e-12);
        let v = union_metric(&FiniteBlaschke::monomial(2), &id, 0.5, g).unwrap();
        assert_eq!(v.mu.zero_set().entries(), &[CriticalPoint { point: c(0.0, 0.0), multiplicity: 1 }]);
        assert_eq!(v.mu.values()[0], 0.0);
        assert!(v.mu.values()[1..].iter().all(|&x| x > 0.0));
        assert!(union_metric(&id, &id, 1.0, g).is_err());
    }

    #[test]
    fn ahlfors_examples() {
        let g = small();
        let hyp = DensityField::hyperbolic(g).unwrap();
        assert!((ahlfors_check(&hyp) - 1.0).abs() < 1e-15);
        assert!((ahlfors_check(&hyp.scaled(0.5).unwrap()) - 0.5).abs() < 1e-15);
        let cs = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1)]).unwrap();
        let b = solve_maximal(&cs, &HomotopyConfig::default()).unwrap().solution;
        let r = ahlfors_check(&pullback_density(&b, g).unwrap());
        assert!(r < 1.0, "{r}");
    }

    #[test]
    fn dominance_examples() {
        let g = small();
        let cfg = HomotopyConfig::default();
        let one = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1)]).unwrap();
        let two = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1), (c(-0.5, 0.0), 1)]).unwrap();
        let lm = pullback_density(&solve_maximal(&one, &cfg).unwrap().solution, g).unwrap();
        let ls = pullback_density(&solve_maximal(&two, &cfg).unwrap().solution, g).unwrap();
        let same = dominance_check(&lm, &lm).unwrap();
        assert!((same.max_ratio - 1.0).abs() < 1e-15 && same.pass && !same.near_equality);
        let rep = dominance_check(&ls, &lm).unwrap();
        assert!(rep.pass && rep.max_ratio < 1.0 && !rep.near_equality, "{rep:?}");
        assert!(matches!(dominance_check(&lm, &ls), Err(Error::AnnotationContainment(_))));
        let scaled = dominance_check(&lm.scaled(0.5).unwrap(), &lm).unwrap();
        assert!((scaled.max_ratio - 0.5).abs() < 1e-15);
    }

    #[test]
    fn csv_export() {
        let g = PolarGrid::new(2, 4, 0.5).unwrap();
        let csv = DensityField::constant(g, 2.0).unwrap().to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "re,im,value");
        assert_eq!(lines.len(), 1 + g.node_count());
        assert!(lines[1].ends_with("2.0000000000000000e0"));
    }
}
