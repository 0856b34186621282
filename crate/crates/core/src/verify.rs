//! Checks of the extremal, boundary, composition and union properties on
//! concrete solver outputs.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::blaschke::{CriticalPoint, CriticalPointRecord, CriticalSet, CriticalSetRecord, FiniteBlaschke, CLUSTER_TOL};
use crate::disk::DiskAutomorphism;
use crate::error::{Error, Result};
use crate::metric::{
    discrete_curvature, dominance_check, product_consistency, pullback_density, union_metric, DominanceReport,
    PolarGrid,
};
use crate::poly::{cluster_points, Poly};
use crate::record::complex_record;
use crate::solver::{solve_maximal, HomotopyConfig};

pub const MARGIN_TOL: f64 = 1e-9;
pub const SUP_SAMPLES: usize = 8192;
pub const SUP_DEFLATION: f64 = 1e-6;
pub const CAUCHY_RADIUS: f64 = 0.5;
pub const CAUCHY_NODES: usize = 4096;
/// Largest admissible `|f^{(j)}(c)|` for the critical-point constraint.
pub const CONSTRAINT_TOL: f64 = 1e-10;
pub const MATCH_TOL: f64 = 1e-8;
pub const MATCH_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CompetitorSpec {
    /// `T ∘ B` for `T(z) = rotation (center - z)/(1 - conj(center) z)`
    PostcomposeAutomorphism {
        #[serde(with = "complex_record")]
        rotation: Complex64,
        #[serde(with = "complex_record")]
        center: Complex64,
    },
    ScalarMultiple {
        #[serde(with = "complex_record")]
        c: Complex64,
    },
    /// `T ∘ B_{C ∪ extra}` with `T` the rotation by `rotation`
    LargerCriticalSet {
        extra: Vec<CriticalPointRecord>,
        #[serde(with = "complex_record")]
        rotation: Complex64,
    },
    /// `∫_0^z p(t) S(t) dt` deflated to sup-norm below one, `p` random of the given degree
    AntiderivativeFamily { degree: usize, seed: u64 },
}

/// A concrete competitor function.
#[derive(Debug, Clone, PartialEq)]
pub enum Competitor {
    Blaschke { scale: Complex64, b: FiniteBlaschke },
    Polynomial(Poly),
}

impl Competitor {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Competitor::Blaschke { scale, b } => scale * b.value(z),
            Competitor::Polynomial(p) => p.eval(z),
        }
    }

    /// Largest modulus over `samples` equally spaced boundary points.
    pub fn boundary_sup(&self, samples: usize) -> f64 {
        (0..samples)
            .map(|k| self.eval(Complex64::from_polar(1.0, 2.0 * PI * k as f64 / samples as f64)).norm())
            .fold(0.0, f64::max)
    }

    /// `f^{(k)}(0)` by the trapezoidal rule on `|z| = radius`.
    pub fn derivative_at_origin(&self, k: usize) -> Complex64 {
        cauchy_derivative(|z| self.eval(z), Complex64::new(0.0, 0.0), k, CAUCHY_RADIUS, CAUCHY_NODES)
    }
}

/// `f^{(k)}(c)` by the trapezoidal rule on the circle of the given radius about `c`.
pub fn cauchy_derivative(f: impl Fn(Complex64) -> Complex64, c: Complex64, k: usize, radius: f64, nodes: usize) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64);
        sum += f(c + radius * w) * w.powu(k as u32).conj();
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    sum * fact / (nodes as f64 * radius.powi(k as i32))
}

fn divisor(c: &CriticalSet) -> Poly {
    Poly::from_roots(&c.expanded())
}

/// Builds the competitor; `b` is the maximal product for `c`.
pub fn build_competitor(spec: &CompetitorSpec, c: &CriticalSet, b: &FiniteBlaschke, cfg: &HomotopyConfig) -> Result<Competitor> {
    match spec {
        CompetitorSpec::PostcomposeAutomorphism { rotation, center } => {
            let t = DiskAutomorphism::new(*rotation, *center)?;
            Ok(Competitor::Blaschke { scale: Complex64::new(1.0, 0.0), b: b.postcompose(&t)? })
        }
        CompetitorSpec::ScalarMultiple { c: s } => {
            if s.norm() > 1.0 {
                return Err(Error::InvalidInput(format!("scalar {s} has modulus above one")));
            }
            Ok(Competitor::Blaschke { scale: *s, b: b.clone() })
        }
        CompetitorSpec::LargerCriticalSet { extra, rotation } => {
            let extra = CriticalSet::try_from(CriticalSetRecord { points: extra.clone() })?;
            let bigger = c.union(&extra);
            let sol = solve_maximal(&bigger, cfg)?.solution;
            let t = DiskAutomorphism::rotation_by(*rotation)?;
            Ok(Competitor::Blaschke { scale: Complex64::new(1.0, 0.0), b: sol.postcompose(&t)? })
        }
        CompetitorSpec::AntiderivativeFamily { degree, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let coeffs = (0..=*degree)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let f = (&Poly::new(coeffs) * &divisor(c)).integral();
            let raw = Competitor::Polynomial(f.clone());
            let sup = raw.boundary_sup(SUP_SAMPLES);
            if !(sup > 0.0) {
                return Err(Error::Internal("degenerate antiderivative competitor".into()));
            }
            Ok(Competitor::Polynomial(f.scale(Complex64::new((1.0 - SUP_DEFLATION) / sup, 0.0))))
        }
    }
}

/// Checks `sup|f| ≤ 1` on the boundary samples and `f^{(j)}(c) = 0` for `1 ≤ j ≤ m` at each point,
/// the latter on the invariant scale `(1 - |c|²)^j |f^{(j)}(c)| / j!`.
pub fn competitor_constraints(f: &Competitor, c: &CriticalSet) -> Result<()> {
    let sup = f.boundary_sup(SUP_SAMPLES);
    if sup > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!("competitor sup-norm {sup} exceeds one")));
    }
    for e in c.entries() {
        let radius = (0.5 * (1.0 - e.point.norm())).min(0.05);
        let weight = 1.0 - e.point.norm_sqr();
        for j in 1..=e.multiplicity {
            let fact: f64 = (1..=j).map(|i| i as f64).product();
            let d = match f {
                Competitor::Polynomial(p) => p.taylor_at(e.point, j + 1)[j] * fact,
                _ => cauchy_derivative(|z| f.eval(z), e.point, j, radius, 256),
            };
            if d.norm() * weight.powi(j as i32) / fact > CONSTRAINT_TOL {
                return Err(Error::InvalidInput(format!(
                    "competitor derivative of order {j} at {} is {d}",
                    e.point
                )));
            }
        }
    }
    Ok(())
}

/// Mixed competitor specs for `c`: automorphisms, scalars, antiderivatives and
/// a smaller number of larger critical sets (each needs a solve).
pub fn random_competitors(c: &CriticalSet, count: usize, larger: usize, seed: u64) -> Vec<CompetitorSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let disk_point = |rng: &mut ChaCha8Rng, max: f64| Complex64::from_polar(max * rng.random::<f64>().sqrt(), rng.random_range(0.0..2.0 * PI));
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let spec = if k < larger {
            let n_extra = rng.random_range(1..=2);
            let extra = (0..n_extra)
                .map(|_| {
                    let p = disk_point(&mut rng, 0.8);
                    CriticalPointRecord { re: p.re, im: p.im, multiplicity: 1 }
                })
                .filter(|p| c.entries().iter().all(|e| (e.point - Complex64::new(p.re, p.im)).norm() > 1e-3))
                .collect();
            CompetitorSpec::LargerCriticalSet { extra, rotation: Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)) }
        } else {
            match k % 3 {
                0 => CompetitorSpec::PostcomposeAutomorphism {
                    rotation: Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI)),
                    center: disk_point(&mut rng, 0.95),
                },
                1 => CompetitorSpec::ScalarMultiple { c: disk_point(&mut rng, 1.0) },
                _ => CompetitorSpec::AntiderivativeFamily { degree: rng.random_range(0..=4), seed: rng.random() },
            }
        };
        out.push(spec);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalityReport {
    /// `B^{(N+1)}(0)`
    pub functional_value: f64,
    /// `min B^{(N+1)}(0) - Re f^{(N+1)}(0)` over accepted competitors
    pub worst_margin: f64,
    pub evaluated: usize,
    pub skipped: Vec<String>,
    pub margin_tol: f64,
    pub pass: bool,
}

pub fn extremality_suite(
    c: &CriticalSet,
    b: &FiniteBlaschke,
    specs: &[CompetitorSpec],
    cfg: &HomotopyConfig,
) -> Result<ExtremalityReport> {
    let order = c.origin_multiplicity() + 1;
    let functional_value = b.derivative_at_origin_order(c.origin_multiplicity())?.re;
    let outcomes: Vec<std::result::Result<f64, String>> = specs
        .par_iter()
        .map(|spec| {
            let f = build_competitor(spec, c, b, cfg).map_err(|e| format!("{spec:?}: {e}"))?;
            competitor_constraints(&f, c).map_err(|e| format!("{spec:?}: {e}"))?;
            Ok(functional_value - f.derivative_at_origin(order).re)
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut evaluated = 0;
    let mut skipped = Vec::new();
    for o in outcomes {
        match o {
            Ok(m) => {
                evaluated += 1;
                worst = worst.min(m);
            }
            Err(e) => skipped.push(e),
        }
    }
    Ok(ExtremalityReport {
        functional_value,
        worst_margin: worst,
        evaluated,
        skipped,
        margin_tol: MARGIN_TOL,
        pass: evaluated > 0 && worst >= -MARGIN_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProbe {
    #[serde(with = "complex_record")]
    pub direction: Complex64,
    pub radii: Vec<f64>,
}

impl BoundaryProbe {
    pub fn new(direction: Complex64, radii: Vec<f64>) -> Result<Self> {
        if (direction.norm() - 1.0).abs() > 1e-12 || radii.iter().any(|r| !(*r > 0.0 && *r < 1.0)) {
            return Err(Error::InvalidInput("probe needs a unimodular direction and radii in (0, 1)".into()));
        }
        Ok(BoundaryProbe { direction, radii })
    }

    /// `1 - 10^{-k}` for `k = 1..=digits`
    pub fn standard(direction: Complex64, digits: u32) -> Result<Self> {
        BoundaryProbe::new(direction, (1..=digits).map(|k| 1.0 - 10f64.powi(-(k as i32))).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    #[serde(with = "complex_record")]
    pub direction: Complex64,
    /// `(r, quotient)`
    pub samples: Vec<(f64, f64)>,
    /// `max |q - 1| / (1 - r)`
    pub fitted_k: f64,
    /// Observed, never asserted.
    pub monotone: bool,
}

/// Distance from the probe direction to the nearest critical point.
pub fn probe_clearance(b: &FiniteBlaschke, direction: Complex64) -> Result<f64> {
    Ok(b.critical_points()?
        .entries()
        .iter()
        .map(|e| (e.point - direction).norm())
        .fold(f64::INFINITY, f64::min))
}

/// `(1 - |z|²)|B'(z)| / (1 - |B(z)|²)` along `z = r ζ`.
pub fn boundary_quotient(b: &FiniteBlaschke, probe: &BoundaryProbe) -> Result<BoundaryReport> {
    let clearance = probe_clearance(b, probe.direction)?;
    if clearance < 0.1 {
        return Err(Error::InvalidInput(format!(
            "probe direction {} is {clearance} from a critical point",
            probe.direction
        )));
    }
    let samples: Vec<(f64, f64)> = probe
        .radii
        .iter()
        .map(|&r| {
            let z = probe.direction * r;
            let (w, dw) = b.value_and_derivative(z);
            (r, (1.0 - r * r) * dw.norm() / (1.0 - w.norm_sqr()))
        })
        .collect();
    let fitted_k = samples.iter().map(|(r, q)| (q - 1.0).abs() / (1.0 - r)).fold(0.0, f64::max);
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = sorted.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-15);
    Ok(BoundaryReport { direction: probe.direction, samples, fitted_k, monotone })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiReport {
    pub samples: usize,
    pub min_re: f64,
    pub max_re: f64,
    pub max_abs_im: f64,
    pub pass: bool,
}

/// `φ(ζ) = B(ζ) / (ζ B'(ζ))` at equally spaced boundary points.
pub fn phi_boundary_bound(b: &FiniteBlaschke, samples: usize) -> Result<PhiReport> {
    let mut rep = PhiReport { samples, min_re: f64::INFINITY, max_re: f64::NEG_INFINITY, max_abs_im: 0.0, pass: false };
    for k in 0..samples {
        let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / samples as f64);
        let (w, dw) = b.value_and_derivative(z);
        if dw.norm() < 1e-12 {
            return Err(Error::Domain(format!("B' vanishes near the boundary point {z}")));
        }
        let phi = w / (z * dw);
        rep.min_re = rep.min_re.min(phi.re);
        rep.max_re = rep.max_re.max(phi.re);
        rep.max_abs_im = rep.max_abs_im.max(phi.im.abs());
    }
    rep.pass = rep.min_re > 0.0 && rep.max_re <= 1.0 + 1e-10 && rep.max_abs_im <= 1e-10;
    Ok(rep)
}

/// Deterministic points spread over `|z| ≤ 0.95`.
pub fn sample_points(count: usize) -> Vec<Complex64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| Complex64::from_polar(0.95 * ((k as f64 + 0.5) / count as f64).sqrt(), k as f64 * golden))
        .collect()
}

/// Fits `T` with `target = T ∘ maximal` at `0` and `1/4` and returns it with
/// the largest mismatch over the sample points.
pub fn automorphism_match(target: &FiniteBlaschke, maximal: &FiniteBlaschke) -> Result<(DiskAutomorphism, f64)> {
    let (z0, z1) = (Complex64::new(0.0, 0.0), Complex64::new(0.25, 0.0));
    let t = DiskAutomorphism::fit(maximal.value(z0), target.value(z0), maximal.value(z1), target.value(z1))?;
    let err = sample_points(MATCH_SAMPLES)
        .iter()
        .map(|&z| (target.value(z) - t.eval(maximal.value(z))).norm())
        .fold(0.0, f64::max);
    Ok((t, err))
}

/// Clusters a numerically computed multiset the way the critical point finder does.
fn clustered(c: &CriticalSet) -> Result<CriticalSet> {
    CriticalSet::new(
        cluster_points(&c.expanded(), CLUSTER_TOL)
            .into_iter()
            .map(|k| CriticalPoint { point: k.point, multiplicity: k.multiplicity })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupReport {
    pub composite: FiniteBlaschke,
    pub maximal: FiniteBlaschke,
    pub match_error: f64,
    pub dominance_forward: DominanceReport,
    pub dominance_backward: DominanceReport,
    pub match_tol: f64,
    pub pass: bool,
}

/// `A = outer ∘ inner` re-solved from its critical set.
pub fn semigroup_check(
    inner: &FiniteBlaschke,
    outer: &FiniteBlaschke,
    cfg: &HomotopyConfig,
    grid: PolarGrid,
) -> Result<SemigroupReport> {
    let a = FiniteBlaschke::compose(outer, inner)?;
    let ca = a.critical_points()?;
    let maximal = solve_maximal(&ca, cfg)?.solution;
    let (_, match_error) = automorphism_match(&a, &maximal)?;
    let la = pullback_density(&a, grid)?;
    let lm = pullback_density(&maximal, grid)?;
    let dominance_forward = dominance_check(&la, &lm)?;
    let dominance_backward = dominance_check(&lm, &la)?;
    let pass = match_error <= MATCH_TOL && dominance_forward.pass && dominance_backward.pass;
    Ok(SemigroupReport {
        composite: a,
        maximal,
        match_error,
        dominance_forward,
        dominance_backward,
        match_tol: MATCH_TOL,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeftFactorReport {
    pub composite_match_error: f64,
    pub left_match_error: f64,
    pub match_tol: f64,
    pub pass: bool,
}

/// For `A = left ∘ right` maximal, `left` matches the maximal product of its own critical set.
pub fn left_factor_check(left: &FiniteBlaschke, right: &FiniteBlaschke, cfg: &HomotopyConfig) -> Result<LeftFactorReport> {
    let a = FiniteBlaschke::compose(left, right)?;
    let (_, composite_match_error) = automorphism_match(&a, &solve_maximal(&a.critical_points()?, cfg)?.solution)?;
    let (_, left_match_error) = automorphism_match(left, &solve_maximal(&left.critical_points()?, cfg)?.solution)?;
    Ok(LeftFactorReport {
        composite_match_error,
        left_match_error,
        match_tol: MATCH_TOL,
        pass: composite_match_error <= MATCH_TOL && left_match_error <= MATCH_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionReport {
    pub alpha: f64,
    pub h: f64,
    /// Pseudo-hyperbolic mismatch of the zero set of `μ` against `C₁ ∪ C₂`, `None` if unmatched.
    pub zero_set_error: Option<f64>,
    /// `max` stencil curvature of `μ` at defined nodes
    pub max_stencil_curvature: f64,
    pub curvature_bound: f64,
    /// `max |stencil - closed form|` for the product where both factors exceed 0.05
    pub consistency_deviation: f64,
    pub consistency_bound: f64,
    pub direct_functional_value: f64,
    pub direct_roundtrip_error: f64,
    pub pass: bool,
}

pub fn union_suite(c1: &CriticalSet, c2: &CriticalSet, c: f64, grid: PolarGrid, cfg: &HomotopyConfig) -> Result<UnionReport> {
    let f = solve_maximal(c1, cfg)?.solution;
    let g = solve_maximal(c2, cfg)?.solution;
    let u = union_metric(&f, &g, c, grid)?;
    let expected = clustered(&c1.union(c2))?;
    let inside = CriticalSet::new(expected.entries().iter().filter(|e| e.point.norm() <= grid.r_max).copied().collect())?;
    let zero_set_error = clustered(u.mu.zero_set())?.match_distance(&inside);
    let h = grid.spacing();
    let max_stencil_curvature = discrete_curvature(&u.mu).max();
    let consistency_deviation = product_consistency(&u.lambda_a, &u.lambda_b, 0.05)?;
    let direct = solve_maximal(&expected, cfg)?;
    let curvature_bound = -4.0 + 10.0 * h * h;
    let consistency_bound = 10.0 * h * h;
    let pass = zero_set_error.is_some_and(|e| e <= 1e-6)
        && max_stencil_curvature <= curvature_bound
        && consistency_deviation <= consistency_bound
        && direct.roundtrip_error <= cfg.roundtrip_tol;
    Ok(UnionReport {
        alpha: u.alpha,
        h,
        zero_set_error,
        max_stencil_curvature,
        curvature_bound,
        consistency_deviation,
        consistency_bound,
        direct_functional_value: direct.functional_value,
        direct_roundtrip_error: direct.roundtrip_error,
        pass,
    })
}
