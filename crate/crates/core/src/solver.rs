//! Inverse problem: from a finite critical set `C` to the normalized maximal
//! Blaschke product `B_C` with `B_C(0) = 0`, `B_C^{(N+1)}(0) > 0`.
//!
//! Write `B(z) = η z^{N+1} P(z) / P̃(z)` where `N` is the multiplicity of the
//! origin in `C`, `P` is the monic polynomial of the `n = m - N` free zeros and
//! `P̃(z) = z^n conj(P(1/conj z))`. Then `B' = η z^N R / P̃²` with
//!
//! ```text
//! R = (N+1) P P̃ + z (P' P̃ - P P̃')
//! ```
//!
//! and `B` has critical set `C` exactly when `R` vanishes to the prescribed
//! order at every nonzero point of `C`. The unknowns are the coefficients of
//! `P`. Along the homotopy the critical points move as `t·ĉ_j(t)`, and the
//! problem is posed in the rescaled variable `w = z/t` with coefficients
//! `p̂_i = p_i / t^{n-i}`; at `t = 0` the equations become linear (the
//! polynomial with prescribed critical points) and the start is exact.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blaschke::{CriticalSet, CriticalSetRecord, FiniteBlaschke};
use crate::disk::{DiskAutomorphism, RiemannMap};
use crate::error::{Error, Result};
use crate::poly::Poly;

/// Corrector tolerance along the path; the endpoint is polished to `newton_tol`.
const PATH_TOL: f64 = 1e-8;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopyConfig {
    pub steps: usize,
    /// Max-norm of the critical-point conditions required at `t = 1`, each
    /// relative to its rounding scale.
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub step_halving_limit: usize,
    /// Largest accepted pseudo-hyperbolic distance between the requested and
    /// the recovered critical points.
    pub roundtrip_tol: f64,
    /// When set, each critical point additionally turns by a random angle
    /// along the path, giving a different homotopy to the same target.
    pub path_seed: Option<u64>,
}

impl Default for HomotopyConfig {
    fn default() -> Self {
        HomotopyConfig {
            steps: 32,
            newton_tol: 1e-12,
            max_newton_iters: 50,
            step_halving_limit: 8,
            roundtrip_tol: 1e-8,
            path_seed: None,
        }
    }
}

impl HomotopyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || !(self.newton_tol > 0.0) || !(self.roundtrip_tol > 0.0) {
            return Err(Error::InvalidInput(format!("invalid homotopy configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub t: f64,
    pub residual: f64,
    pub newton_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub critical_set: CriticalSetRecord,
    pub solution: FiniteBlaschke,
    pub residual_norm: f64,
    pub roundtrip_error: f64,
    pub homotopy_trace: Vec<TraceEntry>,
    /// `B^{(N+1)}(0)`
    pub functional_value: f64,
    pub newton_tol: f64,
    pub roundtrip_tol: f64,
}

/// The nonlinear system for one critical set.
struct System {
    /// multiplicity of the origin
    origin: usize,
    /// free zeros
    n: usize,
    /// off-origin critical points with multiplicity and path phase
    targets: Vec<(Complex64, usize, f64)>,
}

impl System {
    fn new(c: &CriticalSet, path_seed: Option<u64>) -> Self {
        let mut rng = path_seed.map(ChaCha8Rng::seed_from_u64);
        let targets: Vec<_> = c
            .off_origin()
            .map(|e| {
                let phase = rng
                    .as_mut()
                    .map(|r| r.random_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2))
                    .unwrap_or(0.0);
                (e.point, e.multiplicity, phase)
            })
            .collect();
        System {
            origin: c.origin_multiplicity(),
            n: targets.iter().map(|t| t.1).sum(),
            targets,
        }
    }

    /// Critical points in the rescaled variable `w = z/t`.
    fn scaled_points(&self, t: f64) -> Vec<(Complex64, usize)> {
        self.targets
            .iter()
            .map(|&(c, k, phase)| (c * Complex64::from_polar(1.0, phase * (1.0 - t)), k))
            .collect()
    }

    /// Exact solution at `t = 0`: `w^{N+1} P̂(w) = (m+1) ∫_0^w s^N Π (s - ĉ_j)^{k_j} ds`.
    fn start(&self) -> Vec<Complex64> {
        let mut roots = Vec::new();
        for (c, k) in self.scaled_points(0.0) {
            roots.extend(std::iter::repeat_n(c, k));
        }
        let m = self.origin + self.n;
        let integrand = &Poly::monomial(self.origin) * &Poly::from_roots(&roots);
        let q = integrand.integral().scale(Complex64::new((m + 1) as f64, 0.0));
        let p = q.shift_down(self.origin + 1);
        p.coeffs()[..self.n].to_vec()
    }

    fn operator(&self, u: &Poly, v: &Poly) -> Poly {
        // (N+1) U V + w (U' V - U V')
        let a = (u * v).scale(Complex64::new((self.origin + 1) as f64, 0.0));
        let b = &(&u.derivative() * v) - &(u * &v.derivative());
        &a + &(&Poly::monomial(1) * &b)
    }

    fn polys(&self, coeffs: &[Complex64], t: f64) -> (Poly, Poly) {
        let n = self.n;
        let mut pc = coeffs.to_vec();
        pc.push(ONE);
        let mut vc = vec![ZERO; n + 1];
        vc[0] = ONE;
        for (i, p) in coeffs.iter().enumerate() {
            vc[n - i] = p.conj() * t.powi(2 * (n - i) as i32);
        }
        (Poly::new(pc), Poly::new(vc))
    }

    fn residual(&self, coeffs: &[Complex64], t: f64) -> Vec<Complex64> {
        let (p, v) = self.polys(coeffs, t);
        let r = self.operator(&p, &v);
        self.scaled_points(t)
            .into_iter()
            .flat_map(|(c, k)| r.taylor_at(c, k))
            .collect()
    }

    /// Residual max-norm, each condition divided by its rounding scale
    /// `Σ |r_i| C(i, j) |c|^{i-j}` (the same Taylor coefficient of `Σ |r_i| w^i` at `|c|`).
    fn relative_residual(&self, coeffs: &[Complex64], t: f64) -> f64 {
        let (p, v) = self.polys(coeffs, t);
        let r = self.operator(&p, &v);
        let abs = Poly::new(r.coeffs().iter().map(|c| Complex64::new(c.norm(), 0.0)).collect());
        self.scaled_points(t)
            .into_iter()
            .flat_map(|(c, k)| {
                let scale = abs.taylor_at(Complex64::new(c.norm(), 0.0), k);
                r.taylor_at(c, k).into_iter().zip(scale).map(|(x, s)| x.norm() / s.re.max(f64::MIN_POSITIVE))
            })
            .fold(0.0, f64::max)
    }

    /// Conditions `(B_t'/B_t)^{(i)}(c) = 0`, `i < k`, in the free zeros `b` of
    /// `P`, each with its rounding scale. The poles sit at `1/(t² b̄)`.
    fn zero_conditions(&self, b: &[Complex64], t: f64) -> Vec<(Complex64, f64)> {
        let origin = (self.origin + 1) as f64;
        let t2 = t * t;
        let mut out = Vec::with_capacity(self.n);
        for (c, k) in self.scaled_points(t) {
            let mut fact = 1.0;
            for i in 0..k {
                if i > 0 {
                    fact *= i as f64;
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let p = i as i32 + 1;
                let mut value = sign * origin * fact / c.powi(p);
                let mut scale = value.norm();
                for &z in b {
                    let s = z.conj() * t2;
                    let u = sign * fact / (c - z).powi(p);
                    let v = fact * s.powi(p) / (ONE - s * c).powi(p);
                    value += u + v;
                    scale += u.norm() + v.norm();
                }
                out.push((value, scale));
            }
        }
        out
    }

    fn zero_jacobian(&self, b: &[Complex64], t: f64) -> DMatrix<f64> {
        let n = self.n;
        let t2 = t * t;
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        let mut row = 0;
        for (c, k) in self.scaled_points(t) {
            let mut fact = 1.0;
            for i in 0..k {
                if i > 0 {
                    fact *= i as f64;
                }
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                let p = i as i32 + 2;
                for (m, &z) in b.iter().enumerate() {
                    let s = z.conj() * t2;
                    let db = sign * fact * (i + 1) as f64 / (c - z).powi(p);
                    let dbb = t2 * fact * (i + 1) as f64 * s.powi(i as i32) / (ONE - s * c).powi(p);
                    let dx = db + dbb;
                    let dy = Complex64::new(0.0, 1.0) * (db - dbb);
                    jac[(2 * row, 2 * m)] = dx.re;
                    jac[(2 * row + 1, 2 * m)] = dx.im;
                    jac[(2 * row, 2 * m + 1)] = dy.re;
                    jac[(2 * row + 1, 2 * m + 1)] = dy.im;
                }
                row += 1;
            }
        }
        jac
    }

    /// Real Jacobian of `[Re F; Im F]` with respect to `[Re p̂_i, Im p̂_i]`.
    fn jacobian(&self, coeffs: &[Complex64], t: f64) -> DMatrix<f64> {
        let n = self.n;
        let (p, v) = self.polys(coeffs, t);
        let pts = self.scaled_points(t);
        let mut jac = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            let d_holo = self.operator(&Poly::monomial(i), &v);
            let w = t.powi(2 * (n - i) as i32);
            let d_anti = self.operator(&p, &Poly::monomial(n - i)).scale(Complex64::new(w, 0.0));
            let mut row = 0;
            for &(c, k) in &pts {
                let a = d_holo.taylor_at(c, k);
                let b = d_anti.taylor_at(c, k);
                for j in 0..k {
                    let dx = a[j] + b[j];
                    let dy = Complex64::new(0.0, 1.0) * (a[j] - b[j]);
                    jac[(2 * row, 2 * i)] = dx.re;
                    jac[(2 * row + 1, 2 * i)] = dx.im;
                    jac[(2 * row, 2 * i + 1)] = dy.re;
                    jac[(2 * row + 1, 2 * i + 1)] = dy.im;
                    row += 1;
                }
            }
        }
        jac
    }

    fn free_zeros(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut pc = coeffs.to_vec();
        pc.push(ONE);
        Poly::new(pc).roots()
    }
}

enum StepFailure {
    Newton(f64),
    Escape(f64),
}

/// Newton corrector at fixed `t`. Returns the converged coefficients, the
/// final residual and the iteration count.
fn correct(
    sys: &System,
    mut x: Vec<Complex64>,
    t: f64,
    tol: f64,
    max_iters: usize,
) -> std::result::Result<(Vec<Complex64>, f64, usize), StepFailure> {
    let n = sys.n;
    let bound = 2f64.powi(n as i32 + 1) / t.max(1e-300).powi(n as i32);
    let mut res = sys.relative_residual(&x, t);
    let mut iters = 0;
    while res > tol {
        if iters >= max_iters || !res.is_finite() {
            return Err(StepFailure::Newton(res));
        }
        let f = sys.residual(&x, t);
        let jac = sys.jacobian(&x, t);
        let rhs = DVector::from_iterator(2 * n, f.iter().flat_map(|z| [-z.re, -z.im]));
        let delta = jac.lu().solve(&rhs).ok_or(StepFailure::Newton(res))?;
        for i in 0..n {
            x[i] += Complex64::new(delta[2 * i], delta[2 * i + 1]);
        }
        iters += 1;
        let new_res = sys.relative_residual(&x, t);
        if x.iter().any(|c| !c.is_finite() || c.norm() > bound) {
            return Err(StepFailure::Newton(new_res));
        }
        // stagnation at the rounding floor
        if new_res >= res && new_res <= tol * 1e3 {
            res = new_res;
            break;
        }
        res = new_res;
    }
    if res > tol {
        return Err(StepFailure::Newton(res));
    }
    let zeros = sys.free_zeros(&x).map_err(|_| StepFailure::Newton(res))?;
    let worst = zeros.iter().map(|a| a.norm() * t).fold(0.0, f64::max);
    if worst >= 1.0 {
        return Err(StepFailure::Escape(worst));
    }
    Ok((x, res, iters))
}

/// Newton corrector in the free zeros at fixed `t`.
fn correct_zeros(
    sys: &System,
    mut b: Vec<Complex64>,
    t: f64,
    tol: f64,
    max_iters: usize,
) -> std::result::Result<(Vec<Complex64>, f64, usize), StepFailure> {
    let relative = |f: &[(Complex64, f64)]| f.iter().map(|(v, s)| v.norm() / s).fold(0.0, f64::max);
    let mut f = sys.zero_conditions(&b, t);
    let mut res = relative(&f);
    let mut iters = 0;
    while res > tol {
        if iters >= max_iters || !res.is_finite() {
            return Err(StepFailure::Newton(res));
        }
        let rhs = DVector::from_iterator(2 * sys.n, f.iter().flat_map(|(v, _)| [-v.re, -v.im]));
        let delta = sys.zero_jacobian(&b, t).lu().solve(&rhs).ok_or(StepFailure::Newton(res))?;
        let next: Vec<Complex64> =
            b.iter().enumerate().map(|(m, z)| z + Complex64::new(delta[2 * m], delta[2 * m + 1])).collect();
        let worst = next.iter().map(|z| z.norm() * t).fold(0.0, f64::max);
        if !(worst < 1.0) {
            return Err(StepFailure::Escape(worst));
        }
        let f_next = sys.zero_conditions(&next, t);
        let res_next = relative(&f_next);
        iters += 1;
        if !(res_next < res) {
            break;
        }
        (b, f, res) = (next, f_next, res_next);
    }
    if res > tol {
        return Err(StepFailure::Newton(res));
    }
    Ok((b, res, iters))
}

fn breakdown(t: f64, halvings: usize, fail: StepFailure) -> Error {
    match fail {
        StepFailure::Escape(modulus) => Error::ZeroEscape { t, modulus },
        StepFailure::Newton(residual) => Error::HomotopyBreakdown { t, halvings, residual },
    }
}

fn halve(dt: &mut f64, halvings: &mut usize, t_next: f64, fail: StepFailure, cfg: &HomotopyConfig) -> Result<()> {
    *halvings += 1;
    if *halvings > cfg.step_halving_limit || *dt < 2e-12 {
        return Err(breakdown(t_next, *halvings - 1, fail));
    }
    *dt *= 0.5;
    Ok(())
}

/// Computes the normalized maximal Blaschke product `B_C`.
pub fn solve_maximal(c: &CriticalSet, cfg: &HomotopyConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let sys = System::new(c, cfg.path_seed);
    let origin = sys.origin;
    let report = |solution: FiniteBlaschke, residual, trace, functional| -> Result<SolveReport> {
        let recovered = solution.critical_points()?;
        let roundtrip = recovered.match_distance(c).ok_or_else(|| {
            Error::CriticalSetMismatch(format!(
                "requested multiplicities {:?}, recovered {:?}",
                c.entries().iter().map(|e| e.multiplicity).collect::<Vec<_>>(),
                recovered.entries().iter().map(|e| e.multiplicity).collect::<Vec<_>>()
            ))
        })?;
        if roundtrip > cfg.roundtrip_tol {
            return Err(Error::CriticalSetMismatch(format!(
                "round-trip error {roundtrip:e} exceeds {:e}",
                cfg.roundtrip_tol
            )));
        }
        Ok(SolveReport {
            critical_set: c.into(),
            solution,
            residual_norm: residual,
            roundtrip_error: roundtrip,
            homotopy_trace: trace,
            functional_value: functional,
            newton_tol: cfg.newton_tol,
            roundtrip_tol: cfg.roundtrip_tol,
        })
    };

    if sys.n == 0 {
        let fact: f64 = (1..=origin + 1).map(|k| k as f64).product();
        return report(FiniteBlaschke::monomial(origin + 1), 0.0, Vec::new(), fact);
    }

    let mut x = sys.start();
    let mut trace = vec![TraceEntry { t: 0.0, residual: sys.relative_residual(&x, 0.0), newton_iters: 0 }];
    let base = 1.0 / cfg.steps as f64;
    let mut t = 0.0_f64;
    let mut dt = base;
    let mut prev: Option<(f64, Vec<Complex64>)> = None;
    let path_tol = cfg.newton_tol.max(PATH_TOL);
    let mut in_zeros = false;
    while t < 1.0 {
        let mut halvings = 0;
        loop {
            let t_next = if t + dt >= 1.0 - 1e-14 { 1.0 } else { t + dt };
            // secant predictor
            let guess: Vec<Complex64> = match &prev {
                Some((tp, xp)) if *tp < t => {
                    let s = (t_next - t) / (t - tp);
                    x.iter().zip(xp).map(|(a, b)| a + (a - b) * s).collect()
                }
                _ => x.clone(),
            };
            let step = if in_zeros {
                correct_zeros(&sys, guess, t_next, path_tol, cfg.max_newton_iters)
            } else {
                correct(&sys, guess, t_next, path_tol, cfg.max_newton_iters)
            };
            match step {
                Ok((xn, res, iters)) => {
                    prev = Some((t, std::mem::replace(&mut x, xn)));
                    t = t_next;
                    trace.push(TraceEntry { t, residual: res, newton_iters: iters });
                    if halvings == 0 {
                        dt = (dt * 2.0).min(base);
                    }
                    break;
                }
                Err(fail) if !in_zeros && t > 0.0 => {
                    // continue in the zeros of P from the last accepted point
                    let switched = sys
                        .free_zeros(&x)
                        .map_err(|_| StepFailure::Newton(f64::INFINITY))
                        .and_then(|b| correct_zeros(&sys, b, t, path_tol, cfg.max_newton_iters));
                    match switched {
                        Ok((b, _, _)) => {
                            x = b;
                            in_zeros = true;
                            prev = None;
                        }
                        Err(_) => halve(&mut dt, &mut halvings, t_next, fail, cfg)?,
                    }
                }
                Err(fail) => halve(&mut dt, &mut halvings, t_next, fail, cfg)?,
            }
        }
    }

    // final polish in the zeros of P
    let polished = if in_zeros {
        correct_zeros(&sys, x.clone(), 1.0, cfg.newton_tol, cfg.max_newton_iters)
    } else {
        sys.free_zeros(&x)
            .map_err(|_| StepFailure::Newton(f64::INFINITY))
            .and_then(|b| correct_zeros(&sys, b, 1.0, cfg.newton_tol, cfg.max_newton_iters))
    };
    let (free, residual, iters) = match polished {
        Ok(p) => p,
        Err(f) if in_zeros => return Err(breakdown(1.0, 0, f)),
        Err(_) => {
            let (xn, res, iters) = correct(&sys, x, 1.0, cfg.newton_tol, cfg.max_newton_iters)
                .map_err(|f| breakdown(1.0, 0, f))?;
            (sys.free_zeros(&xn)?, res, iters)
        }
    };
    trace.push(TraceEntry { t: 1.0, residual, newton_iters: iters });
    // η = conj(g(0))/|g(0)| with g(0) = P(0) = Π(-a)
    let g0 = free.iter().fold(ONE, |acc, a| acc * (-a));
    let mut zeros = vec![ZERO; origin + 1];
    zeros.extend(free);
    let solution = FiniteBlaschke::new(g0.conj() / g0.norm(), zeros)?;
    let fact: f64 = (1..=origin + 1).map(|k| k as f64).product();
    let functional = solution.derivative_at_origin_order(origin)?.re;
    debug_assert!((functional - fact * g0.norm()).abs() < 1e-8);
    report(solution, residual, trace, functional)
}

/// `T ∘ B_C`, a maximal Blaschke product with the same critical set.
pub fn solve_maximal_normalized(
    c: &CriticalSet,
    t: &DiskAutomorphism,
    cfg: &HomotopyConfig,
) -> Result<FiniteBlaschke> {
    let r = solve_maximal(c, cfg)?;
    r.solution.postcompose(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationStep {
    /// number of leading entries of the ordered set used
    pub n: usize,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub steps: Vec<TruncationStep>,
    pub functional_values: Vec<f64>,
    /// `sup_{|z| <= 1/2} |B_n - B_{n+1}|` for consecutive prefixes
    pub sup_differences: Vec<f64>,
    pub non_increasing: bool,
}

/// Sup of `|f - g|` over `|z| <= radius`, read off the circle `|z| = radius`
/// (maximum modulus principle).
pub fn sup_difference_on_disk(f: &FiniteBlaschke, g: &FiniteBlaschke, radius: f64, samples: usize) -> f64 {
    (0..samples)
        .map(|k| {
            let z = Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / samples as f64);
            (f.value(z) - g.value(z)).norm()
        })
        .fold(0.0, f64::max)
}

/// Solves for the nested prefixes `C_0 = ∅, C_1, ..., C_{n_max}` of an ordered set.
pub fn truncation_sequence(c_full: &CriticalSet, n_max: usize, cfg: &HomotopyConfig) -> Result<TruncationReport> {
    let n_max = n_max.min(c_full.entries().len());
    let steps: Vec<TruncationStep> = (0..=n_max)
        .map(|n| solve_maximal(&c_full.prefix(n), cfg).map(|report| TruncationStep { n, report }))
        .collect::<Result<_>>()?;
    let functional_values: Vec<f64> = steps.iter().map(|s| s.report.functional_value).collect();
    let sup_differences = steps
        .windows(2)
        .map(|w| sup_difference_on_disk(&w[0].report.solution, &w[1].report.solution, 0.5, 2048))
        .collect();
    let non_increasing = functional_values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(TruncationReport { steps, functional_values, sup_differences, non_increasing })
}

/// `B_{Ψ(C)} ∘ Ψ`, the extremal function transplanted to a simply connected
/// domain through its normalized Riemann map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transplant {
    pub map: RiemannMap,
    pub disk_report: SolveReport,
}

impl Transplant {
    pub fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.disk_report.solution.value(self.map.apply(z)?))
    }

    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let w = self.map.apply(z)?;
        Ok(self.disk_report.solution.value_and_derivative(w).1 * self.map.derivative(z)?)
    }

    /// Critical points in the original domain (preimages under Ψ).
    pub fn critical_points(&self) -> Result<Vec<(Complex64, usize)>> {
        self.disk_report
            .solution
            .critical_points()?
            .entries()
            .iter()
            .map(|e| Ok((self.map.inverse(e.point)?, e.multiplicity)))
            .collect()
    }
}

pub fn transplant(points: &[(Complex64, usize)], map: RiemannMap, cfg: &HomotopyConfig) -> Result<Transplant> {
    map.validate()?;
    let mapped = points
        .iter()
        .map(|&(z, k)| Ok((map.apply(z)?, k)))
        .collect::<Result<Vec<_>>>()?;
    let c = CriticalSet::from_pairs(&mapped)?;
    Ok(Transplant { map, disk_report: solve_maximal(&c, cfg)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// In-disk critical point of `z (z-a)/(1-a z)` for real `a`, by the
    /// quadratic formula on `a z^2 - 2 z + a = 0`.
    fn one_point_critical(a: f64) -> f64 {
        (1.0 - (1.0 - a * a).sqrt()) / a
    }

    /// Symmetric two-point ansatz `-z (z^2 - b^2)/(1 - b^2 z^2)`: find `b` by
    /// bisection so that the in-disk critical point sits at `p`.
    fn symmetric_two_point(p: f64) -> f64 {
        let crit = |b: f64| {
            // B'(x) numerator on the real axis, locate its root in (0, 1) by bisection
            let f = |x: f64| {
                let b2 = b * b;
                // d/dx [x (x^2 - b2) / (1 - b2 x^2)] numerator
                (3.0 * x * x - b2) * (1.0 - b2 * x * x) + 2.0 * b2 * x * (x * x * x - b2 * x)
            };
            let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(lo).signum() == f(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let (mut lo, mut hi) = (1e-6, 1.0 - 1e-9);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if crit(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn oracles_agree_with_closed_forms() {
        assert!((one_point_critical(0.8) - 0.5).abs() < 1e-15);
        let b = symmetric_two_point(0.5);
        // p^2 x^2 + (p^4 + 1) x - 3 p^2 = 0 in x = b^2
        let (p2, p4): (f64, f64) = (0.25, 0.0625);
        let x = (-(p4 + 1.0) + ((p4 + 1.0) * (p4 + 1.0) + 12.0 * p2 * p2).sqrt()) / (2.0 * p2);
        assert!((b * b - x).abs() < 1e-12, "{} vs {}", b * b, x);
        assert!((b - 0.785_152_230_419_467).abs() < 1e-12);
        assert!((x - 0.616_464_024_932_664).abs() < 1e-12);
    }

    #[test]
    fn empty_set_gives_identity() {
        let r = solve_maximal(&CriticalSet::empty(), &HomotopyConfig::default()).unwrap();
        assert_eq!(r.solution, FiniteBlaschke::identity());
        assert_eq!(r.functional_value, 1.0);
    }

    #[test]
    fn origin_only_sets_give_monomials() {
        let cs = CriticalSet::from_pairs(&[(ZERO, 3)]).unwrap();
        let r = solve_maximal(&cs, &HomotopyConfig::default()).unwrap();
        assert_eq!(r.solution, FiniteBlaschke::monomial(4));
        assert_eq!(r.functional_value, 24.0);
    }

    #[test]
    fn one_point_closed_form() {
        let cs = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1)]).unwrap();
        let r = solve_maximal(&cs, &HomotopyConfig::default()).unwrap();
        let b = &r.solution;
        assert_eq!(b.degree(), 2);
        assert!((b.eta() - c(-1.0, 0.0)).norm() < 1e-12);
        let nz = b.zeros().iter().find(|z| z.norm() > 0.1).unwrap();
        assert!((nz - c(0.8, 0.0)).norm() < 1e-12);
        assert!((r.functional_value - 0.8).abs() < 1e-12);
        assert!(r.roundtrip_error < 1e-8);
        assert!(r.residual_norm <= 1e-12);
    }

    #[test]
    fn symmetric_two_point_closed_form() {
        let cs = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1), (c(-0.5, 0.0), 1)]).unwrap();
        let r = solve_maximal(&cs, &HomotopyConfig::default()).unwrap();
        let b = symmetric_two_point(0.5);
        assert!((r.functional_value - b * b).abs() < 1e-10);
        assert!((r.solution.eta() - c(-1.0, 0.0)).norm() < 1e-10);
        for z in r.solution.zeros() {
            let d = [0.0, b, -b].iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-10);
        }
    }

    #[test]
    fn normalized_postcomposition_keeps_critical_set() {
        let cs = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1)]).unwrap();
        let cfg = HomotopyConfig::default();
        let id = solve_maximal_normalized(&cs, &DiskAutomorphism::identity(), &cfg).unwrap();
        assert!((id.value(c(0.3, 0.2)) - solve_maximal(&cs, &cfg).unwrap().solution.value(c(0.3, 0.2))).norm() < 1e-14);
        let neg = DiskAutomorphism::rotation_by(c(-1.0, 0.0)).unwrap();
        let b = solve_maximal_normalized(&cs, &neg, &cfg).unwrap();
        assert!((b.derivative_at_origin_order(0).unwrap() - c(-0.8, 0.0)).norm() < 1e-12);
        let cp = b.critical_points().unwrap();
        assert!((cp.entries()[0].point - c(0.5, 0.0)).norm() < 1e-10);
        // automorphism sending B_C(w) to 0
        let w = c(0.1, -0.4);
        let bc = solve_maximal(&cs, &cfg).unwrap().solution;
        let t = DiskAutomorphism::new(ONE, bc.value(w)).unwrap();
        let tb = solve_maximal_normalized(&cs, &t, &cfg).unwrap();
        assert!(tb.value(w).norm() < 1e-12);
        assert!(tb.critical_points().unwrap().match_distance(&cs).unwrap() < 1e-8);
    }

    #[test]
    fn truncation_examples() {
        let full = CriticalSet::from_pairs(&[(c(0.5, 0.0), 1), (c(-0.5, 0.0), 1)]).unwrap();
        let rep = truncation_sequence(&full, 2, &HomotopyConfig::default()).unwrap();
        assert_eq!(rep.functional_values.len(), 3);
        assert!((rep.functional_values[0] - 1.0).abs() < 1e-15);
        assert!((rep.functional_values[1] - 0.8).abs() < 1e-12);
        assert!((rep.functional_values[2] - 0.616_464_024_932_664).abs() < 1e-10);
        assert!(rep.non_increasing);
        // repeating the same set gives the same solution
        let a = solve_maximal(&full, &HomotopyConfig::default()).unwrap();
        let b = solve_maximal(&full, &HomotopyConfig::default()).unwrap();
        assert_eq!(a.solution, b.solution);
    }

    #[test]
    fn transplant_examples() {
        let cfg = HomotopyConfig::default();
        let tr = transplant(&[(c(1.0, 0.0), 1)], RiemannMap::ScaledDisk { radius: 2.0 }, &cfg).unwrap();
        assert!((tr.derivative(ZERO).unwrap() - c(0.4, 0.0)).norm() < 1e-12);
        let cps = tr.critical_points().unwrap();
        assert_eq!(cps.len(), 1);
        assert!((cps[0].0 - c(1.0, 0.0)).norm() < 1e-8);
        let id = transplant(&[(c(0.5, 0.0), 1)], RiemannMap::Identity, &cfg).unwrap();
        assert!((id.disk_report.functional_value - 0.8).abs() < 1e-12);
        let hp = RiemannMap::HalfPlane { offset: 1.0 };
        let empty = transplant(&[], hp, &cfg).unwrap();
        for z in [c(0.3, 0.1), c(2.0, -5.0)] {
            assert!((empty.value(z).unwrap() - hp.apply(z).unwrap()).norm() < 1e-15);
        }
        assert!(transplant(&[(c(3.0, 0.0), 1)], RiemannMap::ScaledDisk { radius: 2.0 }, &cfg).is_err());
    }

    #[test]
    fn multiplicity_two_solve() {
        let cs = CriticalSet::from_pairs(&[(c(0.5, 0.0), 2)]).unwrap();
        let r = solve_maximal(&cs, &HomotopyConfig::default()).unwrap();
        assert_eq!(r.solution.degree(), 3);
        assert!(r.roundtrip_error < 1e-8);
    }

    #[test]
    fn different_paths_same_solution() {
        let cs = CriticalSet::from_pairs(&[(c(0.5, 0.2), 1), (c(-0.3, 0.6), 2), (c(0.1, -0.7), 1)]).unwrap();
        let a = solve_maximal(&cs, &HomotopyConfig::default()).unwrap();
        let b = solve_maximal(&cs, &HomotopyConfig { path_seed: Some(3), ..Default::default() }).unwrap();
        for k in 0..50 {
            let z = Complex64::from_polar(0.97, k as f64 * 0.4);
            assert!((a.solution.value(z) - b.solution.value(z)).norm() < 1e-9);
        }
    }
}
