//! Dirichlet problem `Δu = -κ(z) e^{2u}`, `u = log b` on `|z| = r`.
//!
//! The disk is cut out of a uniform Cartesian grid. Nodes next to the circle
//! use Shortley–Weller arms ending at the exact boundary crossing, where the
//! trace is sampled. Newton steps are damped by Armijo backtracking and each
//! linear system is factored by a sparse LU.
//!
//! The residual reported and tested is the discrete equation at each node
//! divided by the magnitude of its Laplacian diagonal, so it is measured in
//! units of `u` and does not blow up for nodes very close to the circle.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::blaschke::{CriticalSet, FiniteBlaschke};
use crate::error::{Error, Result};
use crate::poly::Poly;

pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_NEWTON_ITERS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Arm {
    Node(usize),
    Boundary(usize),
}

#[derive(Debug, Clone, PartialEq)]
struct Stencil {
    diag: f64,
    arms: Vec<(Arm, f64)>,
}

/// Interior nodes of an `n × n` grid on `[-r, r]²` with their stencils.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    n: usize,
    r: f64,
    h: f64,
    points: Vec<Complex64>,
    boundary: Vec<Complex64>,
    stencils: Vec<Stencil>,
    center: Option<usize>,
}

impl PdeGrid {
    pub fn new(n: usize, r: f64) -> Result<Self> {
        if n < 5 || !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidInput(format!("invalid PDE grid n = {n}, r = {r}")));
        }
        let h = 2.0 * r / (n - 1) as f64;
        let coord = |i: usize| -r + i as f64 * h;
        let inside = |i: usize, j: usize| {
            let (x, y) = (coord(i), coord(j));
            x * x + y * y < r * r
        };
        let mut index = vec![None; n * n];
        let mut points = Vec::new();
        for j in 0..n {
            for i in 0..n {
                if inside(i, j) {
                    index[j * n + i] = Some(points.len());
                    points.push(Complex64::new(coord(i), coord(j)));
                }
            }
        }
        let mut boundary = Vec::new();
        let mut stencils = Vec::with_capacity(points.len());
        for j in 0..n {
            for i in 0..n {
                if index[j * n + i].is_none() {
                    continue;
                }
                let (x, y) = (coord(i), coord(j));
                let mut arms = Vec::with_capacity(4);
                let mut diag = 0.0;
                for horizontal in [true, false] {
                    let mut len = [0.0; 2];
                    let mut ends = [Arm::Node(0); 2];
                    for (s, sign) in [(0, -1i64), (1, 1i64)] {
                        let (ni, nj) = if horizontal { (i as i64 + sign, j as i64) } else { (i as i64, j as i64 + sign) };
                        let nb = (ni >= 0 && nj >= 0 && (ni as usize) < n && (nj as usize) < n)
                            .then(|| index[nj as usize * n + ni as usize])
                            .flatten();
                        match nb {
                            Some(k) => {
                                len[s] = h;
                                ends[s] = Arm::Node(k);
                            }
                            None => {
                                let (a, b) = if horizontal { (x, y) } else { (y, x) };
                                let edge = sign as f64 * (r * r - b * b).sqrt();
                                let d = (edge - a).abs().clamp(f64::MIN_POSITIVE, h);
                                let p = if horizontal {
                                    Complex64::new(edge, y)
                                } else {
                                    Complex64::new(x, edge)
                                };
                                len[s] = d;
                                ends[s] = Arm::Boundary(boundary.len());
                                boundary.push(p);
                            }
                        }
                    }
                    let (a, b) = (len[0], len[1]);
                    arms.push((ends[0], 2.0 / (a * (a + b))));
                    arms.push((ends[1], 2.0 / (b * (a + b))));
                    diag -= 2.0 / (a * b);
                }
                stencils.push(Stencil { diag, arms });
            }
        }
        let center = (n % 2 == 1).then(|| index[(n / 2) * n + n / 2]).flatten();
        Ok(PdeGrid { n, r, h, points, boundary, stencils, center })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Interior node positions, in unknown order.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Boundary crossing points where the trace is sampled.
    pub fn boundary_points(&self) -> &[Complex64] {
        &self.boundary
    }

    /// Index of the node at the origin (odd `n` only).
    pub fn center(&self) -> Option<usize> {
        self.center
    }

    /// Same disk with the spacing halved.
    pub fn refined(&self) -> Result<Self> {
        PdeGrid::new(2 * self.n - 1, self.r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeProblem {
    grid: PdeGrid,
    curvature: Vec<f64>,
    boundary: Vec<f64>,
    divisor: Option<CriticalSet>,
}

impl PdeProblem {
    pub fn new(grid: PdeGrid, curvature: Vec<f64>, boundary: Vec<f64>, divisor: Option<CriticalSet>) -> Result<Self> {
        if curvature.len() != grid.points.len() || boundary.len() != grid.boundary.len() {
            return Err(Error::GridMismatch(format!(
                "{} curvature and {} boundary values for {} nodes and {} boundary points",
                curvature.len(),
                boundary.len(),
                grid.points.len(),
                grid.boundary.len()
            )));
        }
        if let Some(k) = curvature.iter().find(|k| !(**k <= 0.0) || !k.is_finite()) {
            return Err(Error::InvalidInput(format!("curvature {k} is not a finite nonpositive number")));
        }
        if let Some(b) = boundary.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidInput(format!("boundary value {b} is not finite and positive")));
        }
        Ok(PdeProblem { grid, curvature, boundary, divisor })
    }

    pub fn from_fns(
        grid: PdeGrid,
        curvature: impl Fn(Complex64) -> f64,
        boundary: impl Fn(Complex64) -> f64,
    ) -> Result<Self> {
        let k = grid.points.iter().map(|&z| curvature(z)).collect();
        let b = grid.boundary.iter().map(|&z| boundary(z)).collect();
        PdeProblem::new(grid, k, b, None)
    }

    /// `κ ≡ -4` with trace `b`.
    pub fn constant_curvature(grid: PdeGrid, boundary: impl Fn(Complex64) -> f64) -> Result<Self> {
        PdeProblem::from_fns(grid, |_| -4.0, boundary)
    }

    pub fn grid(&self) -> &PdeGrid {
        &self.grid
    }

    pub fn curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn boundary(&self) -> &[f64] {
        &self.boundary
    }

    pub fn divisor(&self) -> Option<&CriticalSet> {
        self.divisor.as_ref()
    }

    /// Discrete equation at every node, divided by its Laplacian diagonal.
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.grid
            .stencils
            .iter()
            .enumerate()
            .map(|(k, st)| {
                let mut lap = st.diag * u[k];
                for &(arm, c) in &st.arms {
                    lap += c * match arm {
                        Arm::Node(m) => u[m],
                        Arm::Boundary(b) => self.boundary[b].ln(),
                    };
                }
                (lap + self.curvature[k] * (2.0 * u[k]).exp()) / st.diag.abs()
            })
            .collect()
    }

    fn jacobian(&self, u: &[f64]) -> Result<SparseColMat<usize, f64>> {
        let n = u.len();
        let mut trip = Vec::with_capacity(5 * n);
        for (k, st) in self.grid.stencils.iter().enumerate() {
            let s = 1.0 / st.diag.abs();
            trip.push(Triplet::new(k, k, s * (st.diag + 2.0 * self.curvature[k] * (2.0 * u[k]).exp())));
            for &(arm, c) in &st.arms {
                if let Arm::Node(m) = arm {
                    trip.push(Triplet::new(k, m, s * c));
                }
            }
        }
        SparseColMat::try_new_from_triplets(n, n, &trip).map_err(|e| Error::Internal(format!("{e:?}")))
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSolution {
    /// `u` at the interior nodes, in grid order
    pub u: Vec<f64>,
    pub residual_norm: f64,
    pub newton_iters: usize,
}

impl PdeSolution {
    pub fn density(&self) -> Vec<f64> {
        self.u.iter().map(|u| u.exp()).collect()
    }
}

/// Newton from `u ≡ min log b`.
pub fn solve_dirichlet(p: &PdeProblem) -> Result<PdeSolution> {
    let start = p.boundary.iter().map(|b| b.ln()).fold(f64::INFINITY, f64::min);
    solve_dirichlet_from(p, start)
}

/// Newton from the constant initial guess `u ≡ u0`.
pub fn solve_dirichlet_from(p: &PdeProblem, u0: f64) -> Result<PdeSolution> {
    let mut u = vec![u0; p.grid.points.len()];
    let mut f = p.residual(&u);
    let mut norm = max_abs(&f);
    let mut last_step = f64::INFINITY;
    for iter in 0..MAX_NEWTON_ITERS {
        // one step past the tolerance brings u to rounding level
        if norm <= RESIDUAL_TOL && last_step <= 1e-12 {
            return Ok(PdeSolution { u, residual_norm: norm, newton_iters: iter });
        }
        let jac = p.jacobian(&u)?;
        let lu = jac.sp_lu().map_err(|e| Error::Internal(format!("sparse LU failed: {e:?}")))?;
        let rhs = Mat::<f64>::from_fn(u.len(), 1, |k, _| -f[k]);
        let step = lu.solve(&rhs);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().enumerate().map(|(k, x)| x + alpha * step[(k, 0)]).collect();
            let ft = p.residual(&trial);
            let nt = max_abs(&ft);
            let polish = norm <= RESIDUAL_TOL && nt <= RESIDUAL_TOL;
            if polish || nt <= (1.0 - 1e-4 * alpha) * norm {
                last_step = if polish { 0.0 } else { alpha * step.col(0).iter().fold(0.0, |m: f64, x| m.max(x.abs())) };
                u = trial;
                f = ft;
                norm = nt;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-12 {
                return Err(Error::PdeNonconvergence { iterations: iter + 1, residual: norm });
            }
        }
    }
    if norm <= RESIDUAL_TOL {
        return Ok(PdeSolution { u, residual_norm: norm, newton_iters: MAX_NEWTON_ITERS });
    }
    Err(Error::PdeNonconvergence { iterations: MAX_NEWTON_ITERS, residual: norm })
}

/// `S(z) = Π (z - z_j)^{m_j}`
pub fn divisor_polynomial(c: &CriticalSet) -> Poly {
    Poly::from_roots(&c.expanded())
}

/// Problem for `ũ = log(λ/|S|)`: `κ = -4|S|²`, trace `b/|S|`.
pub fn divisor_reduced_problem(
    c: &CriticalSet,
    grid: PdeGrid,
    boundary: impl Fn(Complex64) -> f64,
) -> Result<PdeProblem> {
    if let Some(e) = c.entries().iter().find(|e| !(e.point.norm() < grid.r)) {
        return Err(Error::InvalidInput(format!(
            "divisor point {} is not inside the disk of radius {}",
            e.point, grid.r
        )));
    }
    let s = divisor_polynomial(c);
    let kappa = grid.points.iter().map(|&z| -4.0 * s.eval(z).norm_sqr()).collect();
    let b = grid.boundary.iter().map(|&z| boundary(z) / s.eval(z).norm()).collect();
    PdeProblem::new(grid, kappa, b, Some(c.clone()))
}

/// `e^ũ |S|` at the interior nodes.
pub fn recomposed_density(p: &PdeProblem, sol: &PdeSolution) -> Vec<f64> {
    let s = p.divisor.as_ref().map(divisor_polynomial).unwrap_or_else(|| Poly::constant(Complex64::new(1.0, 0.0)));
    p.grid.points.iter().zip(&sol.u).map(|(&z, u)| u.exp() * s.eval(z).norm()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// `max |e^ũ|S| - λ| / λ` over interior nodes
    pub deviation: f64,
    pub h: f64,
    pub grid_size: usize,
    pub radius: f64,
    pub residual_norm: f64,
    pub newton_iters: usize,
}

/// `λ/|S| = |B'/S| / (1 - |B|²)`, smooth through the zeros of `λ`.
fn reduced_pullback(b: &FiniteBlaschke, c: &CriticalSet) -> impl Fn(Complex64) -> f64 {
    let (quotient, _) = b.critical_polynomial().div_rem(&divisor_polynomial(c));
    let den = b.denominator();
    let eta = b.eta();
    let b = b.clone();
    move |z| {
        let d = den.eval(z);
        let reduced = eta * quotient.eval(z) / (d * d);
        reduced.norm() / (1.0 - b.value(z).norm_sqr())
    }
}

/// Solves the divisor-reduced problem with the pullback trace of `b` on
/// `|z| = r` and compares the recomposed density with the pullback.
pub fn oracle_validate(b: &FiniteBlaschke, r: f64, n: usize) -> Result<OracleReport> {
    let crit = b.critical_points()?;
    let grid = PdeGrid::new(n, r)?;
    let target = reduced_pullback(b, &crit);
    let p = divisor_reduced_problem(&crit, grid, |z| {
        let (w, dw) = b.value_and_derivative(z);
        dw.norm() / (1.0 - w.norm_sqr())
    })?;
    let sol = solve_dirichlet(&p)?;
    let deviation = p
        .grid
        .points
        .iter()
        .zip(&sol.u)
        .map(|(&z, u)| {
            let t = target(z);
            (u.exp() - t).abs() / t
        })
        .fold(0.0, f64::max);
    Ok(OracleReport {
        deviation,
        h: p.grid.h,
        grid_size: n,
        radius: r,
        residual_norm: sol.residual_norm,
        newton_iters: sol.newton_iters,
    })
}
