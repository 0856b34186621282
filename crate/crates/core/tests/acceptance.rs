//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Criteria listed in `UNATTAINABLE` are run at full tolerance and reported,
//! but do not fail the target. Any other FAIL exits nonzero.

use maxblaschke::disk::pseudo_hyperbolic_distance;
use maxblaschke::metric::{ahlfors_check, discrete_curvature, dominance_check, pullback_density, DensityField, PolarGrid};
use maxblaschke::pde::{oracle_validate, solve_dirichlet, PdeGrid, PdeProblem};
use maxblaschke::solver::{solve_maximal, transplant, truncation_sequence, HomotopyConfig, SolveReport};
use maxblaschke::verify::{
    boundary_quotient, extremality_suite, left_factor_check, phi_boundary_bound, probe_clearance,
    random_competitors, semigroup_check, union_suite, BoundaryProbe,
};
use maxblaschke::{CriticalPoint, CriticalSet, FiniteBlaschke, RiemannMap};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

const UNATTAINABLE: &[usize] = &[4, 10];
const SEED: u64 = 20_240_611;
const CORPUS: usize = 50;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cfg() -> HomotopyConfig {
    HomotopyConfig::default()
}

/// Points in `|z| ≤ max_r`, pairwise pseudo-hyperbolic distance at least 0.15.
fn random_set(rng: &mut ChaCha8Rng, m: RangeInclusive<usize>, max_mult: usize, max_r: f64) -> CriticalSet {
    let m = rng.random_range(m);
    let mut entries: Vec<CriticalPoint> = Vec::new();
    while entries.len() < m {
        let p = if entries.is_empty() && rng.random_bool(0.15) {
            c(0.0, 0.0)
        } else {
            Complex64::from_polar(max_r * rng.random::<f64>().sqrt(), rng.random_range(0.0..TAU))
        };
        if entries.iter().all(|e| pseudo_hyperbolic_distance(e.point, p) > 0.15) {
            entries.push(CriticalPoint { point: p, multiplicity: rng.random_range(1..=max_mult) });
        }
    }
    CriticalSet::new(entries).unwrap()
}

fn corpus() -> Vec<CriticalSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut sets = vec![CriticalSet::empty()];
    while sets.len() < CORPUS {
        sets.push(random_set(&mut rng, 1..=8, 2, 0.8));
    }
    sets
}

struct Solved {
    set: CriticalSet,
    report: SolveReport,
    elapsed: Duration,
}

fn solve_corpus() -> Vec<Solved> {
    corpus()
        .into_iter()
        .map(|set| {
            let t = Instant::now();
            let report = solve_maximal(&set, &cfg()).unwrap_or_else(|e| panic!("solve of {set:?} failed: {e}"));
            Solved { set, report, elapsed: t.elapsed() }
        })
        .collect()
}

fn one_point() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [0.1, 0.3, 0.5, 0.7] {
        let r = solve_maximal(&CriticalSet::from_points(&[c(p, 0.0)]).unwrap(), &cfg()).unwrap();
        let a = 2.0 * p / (1.0 + p * p);
        let b = &r.solution;
        let far = b.zeros().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let near = b.zeros().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        let zero_err = (b.zeros().iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap() - a).norm();
        worst = worst.max(zero_err).max((r.functional_value - a).abs()).max(near);
        worst = worst.max((b.degree() as f64 - 2.0).abs()).max((far - a).abs());
    }
    outcome(worst <= 1e-10, format!("max error {worst:.2e} (tol 1e-10)"))
}

fn round_trip(solved: &[Solved]) -> Outcome {
    let worst = solved.iter().map(|s| s.report.roundtrip_error).fold(0.0, f64::max);
    let slowest = solved.iter().map(|s| s.elapsed).max().unwrap();
    let pass = worst <= 1e-8 && slowest <= Duration::from_secs(2);
    outcome(
        pass,
        format!("{} sets, max pseudo-hyperbolic error {worst:.2e} (tol 1e-8), slowest solve {slowest:.2?} (limit 2s)", solved.len()),
    )
}

fn extremality(solved: &[Solved]) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut evaluated = usize::MAX;
    let mut skipped = 0;
    let mut pass = true;
    for (k, s) in solved.iter().enumerate() {
        let specs = random_competitors(&s.set, 1000, 16, SEED + k as u64);
        let rep = extremality_suite(&s.set, &s.report.solution, &specs, &cfg()).unwrap();
        worst = worst.min(rep.worst_margin);
        evaluated = evaluated.min(rep.evaluated);
        skipped += rep.skipped.len();
        pass &= rep.pass && rep.evaluated >= 1000;
    }
    outcome(
        pass,
        format!("worst margin {worst:.3e} (tol -1e-9), fewest evaluated competitors per set {evaluated}, {skipped} specs skipped overall"),
    )
}

fn far_field_deviation(lambda: &DensityField) -> f64 {
    let k = discrete_curvature(lambda);
    let zeros = lambda.zero_set();
    k.defined()
        .filter(|&(i, _)| zeros.entries().iter().all(|e| (e.point - lambda.grid().point(i)).norm() >= 0.1))
        .map(|(_, v)| (v + 4.0).abs())
        .fold(0.0, f64::max)
}

fn curvature(solved: &[Solved]) -> Outcome {
    let grid = PolarGrid::default();
    let fine = grid.refined();
    let bound = 10.0 * grid.spacing().powi(2);
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    let mut far: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in solved {
        let l0 = pullback_density(&s.report.solution, grid).unwrap();
        let l1 = pullback_density(&s.report.solution, fine).unwrap();
        let d0 = discrete_curvature(&l0).max_deviation(-4.0);
        let d1 = discrete_curvature(&l1).max_deviation(-4.0);
        let ratio = d0 / d1;
        worst = worst.max(d0);
        far = far.max(far_field_deviation(&l0));
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        if d0 <= bound && (3.5..=4.5).contains(&ratio) {
            passed += 1;
        }
    }
    outcome(
        passed == solved.len(),
        format!(
            "{passed}/{} solves within 10h² = {bound:.3e} with ratio in [3.5, 4.5]; worst deviation {worst:.3e}, ratios {lo:.2}..{hi:.2}; far field (≥ 0.1 from zeros) {far:.3e}",
            solved.len()
        ),
    )
}

fn ahlfors(solved: &[Solved]) -> Outcome {
    let grid = PolarGrid::default();
    let mut pass = true;
    let mut max_nonempty: f64 = 0.0;
    let mut empty_ratio = f64::NAN;
    for s in solved {
        let ratio = ahlfors_check(&pullback_density(&s.report.solution, grid).unwrap());
        pass &= ratio <= 1.0 + 1e-9;
        if s.set.is_empty() {
            empty_ratio = ratio;
            pass &= (ratio - 1.0).abs() <= 1e-9;
        } else {
            max_nonempty = max_nonempty.max(ratio);
            pass &= ratio < 1.0 - 1e-9;
        }
    }
    outcome(pass, format!("empty set ratio {empty_ratio:.12}, largest nonempty ratio {max_nonempty:.9}"))
}

fn dominance_order() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let grid = PolarGrid::default();
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for _ in 0..20 {
        let small = random_set(&mut rng, 0..=5, 2, 0.8);
        let extra = random_set(&mut rng, 1..=2, 1, 0.8);
        let big = small.union(&extra);
        let ls = pullback_density(&solve_maximal(&small, &cfg()).unwrap().solution, grid).unwrap();
        let lb = pullback_density(&solve_maximal(&big, &cfg()).unwrap().solution, grid).unwrap();
        let rep = dominance_check(&lb, &ls).unwrap();
        worst = worst.max(rep.max_ratio);
        pass &= rep.pass;
    }
    outcome(pass, format!("20 nested pairs, max λ_C'/λ_C {worst:.12} (tol 1 + 1e-9)"))
}

fn pde_oracle() -> Outcome {
    let b_half = solve_maximal(&CriticalSet::from_points(&[c(0.5, 0.0)]).unwrap(), &cfg()).unwrap().solution;
    let b_pair = solve_maximal(&CriticalSet::from_points(&[c(0.5, 0.0), c(-0.5, 0.0)]).unwrap(), &cfg()).unwrap().solution;
    let cases = [
        ("z", FiniteBlaschke::identity()),
        ("z²", FiniteBlaschke::monomial(2)),
        ("B_{0.5}", b_half),
        ("B_{±0.5}", b_pair),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, b) in &cases {
        let coarse = oracle_validate(b, 0.75, 257).unwrap();
        let fine = oracle_validate(b, 0.75, 513).unwrap();
        let ratio = coarse.deviation / fine.deviation;
        let ok = coarse.deviation <= 5.0 * coarse.h * coarse.h && (3.5..=4.5).contains(&ratio);
        pass &= ok;
        parts.push(format!("{name} {:.2e} (ratio {ratio:.2})", coarse.deviation));
    }
    let grid = PdeGrid::new(257, 0.5).unwrap();
    let h = grid.spacing();
    let centre = grid.center().unwrap();
    let sol = solve_dirichlet(&PdeProblem::constant_curvature(grid, |_| 2.0).unwrap()).unwrap();
    let lambda0 = sol.density()[centre];
    let err = (lambda0 - 4.0 / (1.0 + 5f64.sqrt())).abs();
    pass &= err <= 5.0 * h * h;
    outcome(
        pass,
        format!("257² at r = 0.75, bound 5h² = {:.2e}: {}; λ(0) = {lambda0:.9} error {err:.2e}", 5.0 * (1.5f64 / 256.0).powi(2), parts.join(", ")),
    )
}

fn maximum_principle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let r = rng.random_range(0.4..0.9);
        let grid = PdeGrid::new(65, r).unwrap();
        let (k0, k1, k2) = (rng.random_range(1.0..6.0), rng.random_range(-0.5..0.5), rng.random_range(0.0..2.0));
        let (b0, b1, b2) = (rng.random_range(0.5..3.0), rng.random_range(-0.3..0.3), rng.random_range(0.0..1.0));
        let omega = rng.random_range(1.0..4.0);
        // κ₁ ≤ κ₂ < 0 and b₁ ≤ b₂ give λ₁ ≤ λ₂
        let kappa2 = move |z: Complex64| -(k0 + k1 * (omega * z.re).sin());
        let kappa1 = move |z: Complex64| kappa2(z) - k2 * (z.im * omega).cos().powi(2);
        let bnd1 = move |z: Complex64| b0 + b1 * (omega * z.arg()).sin() * 0.5 + 0.5 * b1.abs();
        let bnd2 = move |z: Complex64| bnd1(z) + b2 * (z.re / r).powi(2);
        let u1 = solve_dirichlet(&PdeProblem::from_fns(grid.clone(), kappa1, bnd1).unwrap()).unwrap();
        let u2 = solve_dirichlet(&PdeProblem::from_fns(grid, kappa2, bnd2).unwrap()).unwrap();
        let gap = u1.u.iter().zip(&u2.u).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(gap);
    }
    outcome(worst <= 1e-10, format!("20 ordered pairs, max (u₁ - u₂) = {worst:.3e} (tol 1e-10)"))
}

fn semigroup() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let grid = PolarGrid::default();
    let mut pass = true;
    let (mut worst_sg, mut worst_lf) = (0.0f64, 0.0f64);
    let mut max_degree = 0;
    let mut errors = Vec::new();
    for _ in 0..10 {
        let inner_mass = rng.random_range(1..=3);
        let outer_mass = rng.random_range(1..=16 / (inner_mass + 1) - 1);
        let inner = solve_maximal(&random_set(&mut rng, inner_mass..=inner_mass, 1, 0.7), &cfg()).unwrap().solution;
        let outer = solve_maximal(&random_set(&mut rng, outer_mass..=outer_mass, 1, 0.7), &cfg()).unwrap().solution;
        max_degree = max_degree.max(inner.degree() * outer.degree());
        match (semigroup_check(&inner, &outer, &cfg(), grid), left_factor_check(&outer, &inner, &cfg())) {
            (Ok(sg), Ok(lf)) => {
                worst_sg = worst_sg.max(sg.match_error);
                worst_lf = worst_lf.max(lf.left_match_error).max(lf.composite_match_error);
                pass &= sg.pass && lf.pass;
            }
            (sg, lf) => {
                errors.push(sg.err().or(lf.err()).map(|e| e.to_string()).unwrap_or_default());
                pass = false;
            }
        }
    }
    outcome(
        pass,
        format!(
            "10 pairs up to degree {max_degree}: composite match {worst_sg:.2e}, left factor match {worst_lf:.2e} (tol 1e-8); {} solver errors {errors:?}",
            errors.len()
        ),
    )
}

fn union() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let grid = PolarGrid::default();
    let mut passed = 0;
    let (mut zero_err, mut curv, mut cons) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    let mut bounds = (0.0, 0.0);
    for k in 0..10 {
        let c1 = random_set(&mut rng, 1..=3, 1, 0.7);
        let c2 = if k < 3 {
            // shares a point with c1, so the union is a genuine multiset
            let shared = c1.entries()[0];
            let rest = random_set(&mut rng, 0..=2, 1, 0.7);
            CriticalSet::new(std::iter::once(shared).chain(rest.entries().iter().copied().filter(|e| e.point != shared.point)).collect()).unwrap()
        } else {
            random_set(&mut rng, 1..=3, 1, 0.7)
        };
        let rep = union_suite(&c1, &c2, 0.5, grid, &cfg()).unwrap();
        zero_err = zero_err.max(rep.zero_set_error.unwrap_or(f64::INFINITY));
        curv = curv.max(rep.max_stencil_curvature);
        cons = cons.max(rep.consistency_deviation);
        bounds = (rep.curvature_bound, rep.consistency_bound);
        if rep.pass {
            passed += 1;
        }
    }
    outcome(
        passed == 10,
        format!(
            "{passed}/10 pairs pass; zero set error {zero_err:.2e}, max μ curvature {curv:.6} (bound {:.6}), product consistency {cons:.3e} (bound {:.3e})",
            bounds.0, bounds.1
        ),
    )
}

/// 0.5, -0.5, 0.5i, -0.5i, 0.25, then a golden-angle spiral toward the circle.
fn nested_sequence() -> CriticalSet {
    let mut pts = vec![c(0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.5), c(0.0, -0.5), c(0.25, 0.0)];
    for j in 1..=7 {
        pts.push(Complex64::from_polar(1.0 - 0.5 * 2f64.powf(-(j as f64) / 2.0), j as f64 * 2.39996));
    }
    CriticalSet::from_points(&pts).unwrap()
}

fn convergence() -> Outcome {
    let set = nested_sequence();
    let rep = truncation_sequence(&set, set.entries().len(), &cfg()).unwrap();
    // sup_differences[n] compares B_n with B_{n+1}
    let tail = &rep.sup_differences[3..];
    let monotone = tail.windows(2).all(|w| w[1] < w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    outcome(
        rep.non_increasing && monotone,
        format!(
            "functionals non-increasing: {}; sup differences from n = 3 decreasing: {monotone} [{}]",
            rep.non_increasing,
            fmt(tail)
        ),
    )
}

fn boundary(solved: &[Solved]) -> Outcome {
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    for s in solved {
        let b = &s.report.solution;
        for k in 0..8 {
            let mut dir = Complex64::from_polar(1.0, TAU * k as f64 / 8.0 + 0.1);
            while probe_clearance(b, dir).unwrap() < 0.1 {
                dir *= Complex64::from_polar(1.0, 0.05);
            }
            let rep = boundary_quotient(b, &BoundaryProbe::new(dir, vec![0.999]).unwrap()).unwrap();
            worst = worst.max((rep.samples[0].1 - 1.0).abs());
            probes += 1;
        }
    }
    let z2 = FiniteBlaschke::monomial(2);
    let radii = vec![0.5, 0.9, 0.99, 0.999];
    let rep = boundary_quotient(&z2, &BoundaryProbe::new(c(1.0, 0.0), radii).unwrap()).unwrap();
    let closed = rep.samples.iter().map(|&(r, q)| (q - 2.0 * r / (1.0 + r * r)).abs()).fold(0.0, f64::max);
    outcome(
        worst <= 1e-3 && closed <= 1e-12,
        format!("{probes} probes, max |q - 1| at r = 0.999 is {worst:.3e} (tol 1e-3); z² closed form error {closed:.1e}"),
    )
}

fn phi_bound(solved: &[Solved]) -> Outcome {
    let (mut min_re, mut max_re, mut max_im) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut pass = true;
    for s in solved {
        let rep = phi_boundary_bound(&s.report.solution, 4096).unwrap();
        min_re = min_re.min(rep.min_re);
        max_re = max_re.max(rep.max_re);
        max_im = max_im.max(rep.max_abs_im);
        pass &= rep.pass;
    }
    outcome(pass, format!("Re φ in [{min_re:.3e}, {max_re:.15}], max |Im φ| {max_im:.1e}"))
}

fn transplanted() -> Outcome {
    let t = transplant(&[(c(1.0, 0.0), 1)], RiemannMap::ScaledDisk { radius: 2.0 }, &cfg()).unwrap();
    let d = t.derivative(c(0.0, 0.0)).unwrap();
    let d_err = (d - c(0.4, 0.0)).norm();
    let crit = t.critical_points().unwrap();
    let crit_err = match crit.as_slice() {
        [(z, 1)] => (z - c(1.0, 0.0)).norm(),
        _ => f64::INFINITY,
    };
    outcome(d_err <= 1e-10 && crit_err <= 1e-8, format!("derivative error {d_err:.1e} (tol 1e-10), critical point error {crit_err:.1e} (tol 1e-8)"))
}

fn main() {
    let start = Instant::now();
    let solved = solve_corpus();
    let criteria: Vec<(usize, &str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        (1, "one-point closed form", Box::new(one_point)),
        (2, "round trip", Box::new(|| round_trip(&solved))),
        (3, "extremality", Box::new(|| extremality(&solved))),
        (4, "curvature", Box::new(|| curvature(&solved))),
        (5, "Ahlfors dominance", Box::new(|| ahlfors(&solved))),
        (6, "dominance order", Box::new(dominance_order)),
        (7, "PDE oracle", Box::new(pde_oracle)),
        (8, "maximum principle", Box::new(maximum_principle)),
        (9, "semigroup", Box::new(semigroup)),
        (10, "union", Box::new(union)),
        (11, "convergence", Box::new(convergence)),
        (12, "boundary behavior", Box::new(|| boundary(&solved))),
        (13, "phi bound", Box::new(|| phi_bound(&solved))),
        (14, "transplant", Box::new(transplanted)),
    ];
    let mut unexpected = Vec::new();
    for (n, name, run) in &criteria {
        let t = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict} {name} ({:.1?}): {}", t.elapsed(), o.detail);
        if !o.pass && !UNATTAINABLE.contains(n) {
            unexpected.push(*n);
        }
    }
    println!("acceptance finished in {:.1?}", start.elapsed());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
