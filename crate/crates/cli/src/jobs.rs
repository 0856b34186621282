use maxblaschke::blaschke::{BlaschkeRecord, CriticalSetRecord, CLUSTER_TOL};
use maxblaschke::metric::{discrete_curvature, pullback_density, ahlfors_check, PolarGrid};
use maxblaschke::pde::oracle_validate;
use maxblaschke::record::ComplexRecord;
use maxblaschke::solver::{solve_maximal, transplant, truncation_sequence, HomotopyConfig};
use maxblaschke::verify::{
    boundary_quotient, extremality_suite, left_factor_check, phi_boundary_bound, random_competitors,
    semigroup_check, union_suite, BoundaryProbe,
};
use maxblaschke::{CriticalSet, Error, FiniteBlaschke, RiemannMap};
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::Path;

use crate::{json as out, Command, Failure, GridConfig, JobConfig};

const COMPETITORS: usize = 1000;
const LARGER_COMPETITORS: usize = 16;
const PHI_SAMPLES: usize = 4096;
const DEFAULT_PDE_N: usize = 257;
const DEFAULT_PDE_R: f64 = 0.75;

fn numerical(e: Error) -> Failure {
    match e {
        Error::InvalidInput(m) => Failure::Input(m),
        e => Failure::Numerical(e.to_string()),
    }
}

fn input_error(e: Error) -> Failure {
    Failure::Input(e.to_string())
}

pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| {
        let what = if e.is_data() { "invalid input" } else { "malformed JSON" };
        Failure::Input(format!("{origin}: {what} at line {} column {}: {e}", e.line(), e.column()))
    })
}

fn from_value<T: DeserializeOwned>(v: &Value, what: &str) -> Result<T, Failure> {
    T::deserialize(v).map_err(|e| Failure::Input(format!("invalid {what}: {e}")))
}

fn read_input(cfg: &JobConfig) -> Result<Value, Failure> {
    let path = cfg.input_path.as_ref().ok_or_else(|| Failure::Input("no input file given (--input)".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_json(&text, &path.display().to_string())
}

fn critical_set(v: &Value) -> Result<CriticalSet, Failure> {
    CriticalSet::try_from(from_value::<CriticalSetRecord>(v, "critical set")?).map_err(input_error)
}

/// A Blaschke product, either bare or as the `solution` of a `solve` report.
fn blaschke(v: &Value) -> Result<FiniteBlaschke, Failure> {
    let inner = v.get("solution").unwrap_or(v);
    FiniteBlaschke::try_from(from_value::<BlaschkeRecord>(inner, "Blaschke product")?).map_err(input_error)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, Failure> {
    v.get(key).ok_or_else(|| Failure::Input(format!("input is missing the field {key:?}")))
}

fn homotopy(cfg: &JobConfig) -> Result<HomotopyConfig, Failure> {
    let mut h = HomotopyConfig::default();
    if let Some(t) = cfg.tolerances.newton_tol {
        h.newton_tol = t;
    }
    if let Some(t) = cfg.tolerances.roundtrip_tol {
        h.roundtrip_tol = t;
    }
    h.validate().map_err(input_error)?;
    Ok(h)
}

fn polar_grid(cfg: &JobConfig) -> Result<PolarGrid, Failure> {
    match cfg.grid {
        None => Ok(PolarGrid::default()),
        Some(GridConfig::Polar { n_r, n_theta, r_max }) => PolarGrid::new(n_r, n_theta, r_max).map_err(input_error),
        Some(GridConfig::Pde { .. }) => Err(Failure::Input("this command needs a polar grid n_r,n_theta,r_max".into())),
    }
}

fn pde_grid(cfg: &JobConfig) -> Result<(usize, f64), Failure> {
    match cfg.grid {
        None => Ok((DEFAULT_PDE_N, DEFAULT_PDE_R)),
        Some(GridConfig::Pde { n, r }) if n >= 5 && r > 0.0 && r < 1.0 => Ok((n, r)),
        Some(_) => Err(Failure::Input("this command needs a PDE grid n,r with n >= 5 and 0 < r < 1".into())),
    }
}

fn tolerances(h: &HomotopyConfig) -> Value {
    json!({"newton_tol": h.newton_tol, "roundtrip_tol": h.roundtrip_tol, "cluster_tol": CLUSTER_TOL})
}

fn write(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(cfg: &JobConfig, report: &Value) -> Result<(), Failure> {
    write(cfg.output_path.as_deref(), &out::to_string(report))
}

/// Writes the report, then turns a failed check into exit code 1.
fn emit_verdict(cfg: &JobConfig, report: Value, pass: bool, what: &str) -> Result<(), Failure> {
    emit(cfg, &report)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{what} check failed")))
    }
}

/// CSV `re,im,value` plus a JSON sidecar next to it.
fn emit_grid(cfg: &JobConfig, rows: impl Iterator<Item = (Complex64, f64)>, meta: Value) -> Result<(), Failure> {
    let mut csv = String::from("re,im,value\n");
    for (z, v) in rows {
        csv.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", z.re, z.im, v));
    }
    write(cfg.output_path.as_deref(), &csv)?;
    if let Some(p) = &cfg.output_path {
        let mut side = p.clone().into_os_string();
        side.push(".json");
        write(Some(Path::new(&side)), &out::to_string(&meta))?;
    }
    Ok(())
}

fn record(z: Complex64) -> ComplexRecord {
    z.into()
}

pub fn run(cfg: &JobConfig) -> Result<(), Failure> {
    let command = cfg.command.ok_or_else(|| Failure::Input("no command given".into()))?;
    let h = homotopy(cfg)?;
    let input = read_input(cfg)?;
    match command {
        Command::Solve => {
            let c = critical_set(&input)?;
            let r = solve_maximal(&c, &h).map_err(numerical)?;
            let b = &r.solution;
            let report = json!({
                "command": "solve",
                "critical_set": CriticalSetRecord::from(&c),
                "solution": BlaschkeRecord::from(b.clone()),
                "eta": record(b.eta()),
                "zeros": b.zeros().iter().map(|&z| record(z)).collect::<Vec<_>>(),
                "functional": r.functional_value,
                "residual_norm": r.residual_norm,
                "roundtrip_error": r.roundtrip_error,
                "homotopy_trace": r.homotopy_trace,
                "tolerances": tolerances(&h),
            });
            emit(cfg, &report)
        }
        Command::Critpoints => {
            let b = blaschke(&input)?;
            let c = b.critical_points().map_err(numerical)?;
            let mut report = serde_json::to_value(CriticalSetRecord::from(&c)).expect("record");
            report["command"] = json!("critpoints");
            report["tolerances"] = tolerances(&h);
            emit(cfg, &report)
        }
        Command::Metric => {
            let b = blaschke(&input)?;
            let grid = polar_grid(cfg)?;
            let lambda = pullback_density(&b, grid).map_err(numerical)?;
            let meta = json!({
                "command": "metric",
                "quantity": "pullback density |B'(z)|/(1-|B(z)|^2)",
                "columns": ["re", "im", "value"],
                "grid": grid,
                "h": grid.spacing(),
                "nodes": grid.node_count(),
                "zero_set": CriticalSetRecord::from(lambda.zero_set()),
                "ahlfors_ratio": ahlfors_check(&lambda),
            });
            let rows = grid.points().into_iter().zip(lambda.values().iter().copied());
            emit_grid(cfg, rows, meta)
        }
        Command::Curvature => {
            let b = blaschke(&input)?;
            let grid = polar_grid(cfg)?;
            let lambda = pullback_density(&b, grid).map_err(numerical)?;
            let k = discrete_curvature(&lambda);
            let hh = grid.spacing();
            let meta = json!({
                "command": "curvature",
                "quantity": "stencil curvature of the pullback density at defined nodes",
                "columns": ["re", "im", "value"],
                "grid": grid,
                "h": hh,
                "defined_nodes": k.defined_count(),
                "max_deviation_from_minus_4": k.max_deviation(-4.0),
                "bound": 10.0 * hh * hh,
                "zero_set": CriticalSetRecord::from(lambda.zero_set()),
            });
            let rows: Vec<_> = k.defined().map(|(i, v)| (grid.point(i), v)).collect();
            emit_grid(cfg, rows.into_iter(), meta)
        }
        Command::PdeOracle => {
            let b = blaschke(&input)?;
            let (n, r) = pde_grid(cfg)?;
            let rep = oracle_validate(&b, r, n).map_err(numerical)?;
            let bound = 5.0 * rep.h * rep.h;
            let pass = rep.deviation <= bound;
            let report = json!({
                "suite": "pde-oracle",
                "inputs": {"solution": BlaschkeRecord::from(b), "n": n, "r": r},
                "deviation": rep.deviation,
                "bound": bound,
                "pass": pass,
                "report": rep,
                "tolerances": {"residual_tol": maxblaschke::pde::RESIDUAL_TOL, "deviation_bound": bound},
            });
            emit_verdict(cfg, report, pass, "PDE oracle")
        }
        Command::VerifyExtremal => {
            let c = critical_set(&input)?;
            let seed = cfg.seed.unwrap_or(0);
            let b = solve_maximal(&c, &h).map_err(numerical)?.solution;
            let specs = random_competitors(&c, COMPETITORS, LARGER_COMPETITORS, seed);
            let rep = extremality_suite(&c, &b, &specs, &h).map_err(numerical)?;
            let pass = rep.pass;
            let report = json!({
                "suite": "extremal",
                "inputs": {"critical_set": CriticalSetRecord::from(&c), "seed": seed, "competitors": COMPETITORS},
                "margin": rep.worst_margin,
                "pass": pass,
                "report": rep,
                "tolerances": tolerances(&h),
            });
            emit_verdict(cfg, report, pass, "extremality")
        }
        Command::VerifyBoundary => {
            let b = blaschke(&input)?;
            let direction: Complex64 = match input.get("direction") {
                Some(v) => from_value::<ComplexRecord>(v, "direction")?.into(),
                None => Complex64::new(1.0, 0.0),
            };
            let radii: Vec<f64> = match input.get("radii") {
                Some(v) => from_value(v, "radii")?,
                None => vec![0.9, 0.99, 0.999],
            };
            let probe = BoundaryProbe::new(direction, radii).map_err(input_error)?;
            let q = boundary_quotient(&b, &probe).map_err(numerical)?;
            let phi = phi_boundary_bound(&b, PHI_SAMPLES).map_err(numerical)?;
            let near_ok = q.samples.iter().filter(|(r, _)| *r >= 0.999).all(|(_, v)| (v - 1.0).abs() <= 1e-3);
            let pick_ok = q.samples.iter().all(|(_, v)| *v > 0.0 && *v <= 1.0 + 1e-12);
            let pass = near_ok && pick_ok && phi.pass;
            let deviation = q.samples.last().map(|(_, v)| (v - 1.0).abs());
            let report = json!({
                "suite": "boundary",
                "inputs": {"solution": BlaschkeRecord::from(b), "direction": record(direction), "radii": probe.radii},
                "deviation": deviation,
                "pass": pass,
                "samples": q.samples,
                "fitted_k": q.fitted_k,
                "monotone": q.monotone,
                "phi": phi,
                "tolerances": {"near_boundary": 1e-3, "phi": 1e-10},
            });
            emit_verdict(cfg, report, pass, "boundary")
        }
        Command::Compose => {
            let outer = blaschke(field(&input, "outer")?)?;
            let inner = blaschke(field(&input, "inner")?)?;
            let grid = polar_grid(cfg)?;
            let sg = semigroup_check(&inner, &outer, &h, grid).map_err(numerical)?;
            let lf = left_factor_check(&outer, &inner, &h).map_err(numerical)?;
            let pass = sg.pass && lf.pass;
            let report = json!({
                "suite": "compose",
                "inputs": {"outer": BlaschkeRecord::from(outer), "inner": BlaschkeRecord::from(inner)},
                "deviation": sg.match_error.max(lf.left_match_error),
                "pass": pass,
                "composite": BlaschkeRecord::from(sg.composite.clone()),
                "composite_critical_set": sg.composite.critical_points().ok().map(|c| CriticalSetRecord::from(&c)),
                "semigroup": sg,
                "left_factor": lf,
                "tolerances": tolerances(&h),
            });
            emit_verdict(cfg, report, pass, "composition")
        }
        Command::Union => {
            let c1 = critical_set(field(&input, "c1")?)?;
            let c2 = critical_set(field(&input, "c2")?)?;
            let c: f64 = match input.get("c") {
                Some(v) => from_value(v, "scale c")?,
                None => 0.5,
            };
            if !(c > 0.0 && c < 1.0) {
                return Err(Failure::Input(format!("scale c = {c} is not in (0, 1)")));
            }
            let grid = polar_grid(cfg)?;
            let rep = union_suite(&c1, &c2, c, grid, &h).map_err(numerical)?;
            let pass = rep.pass;
            let report = json!({
                "suite": "union",
                "inputs": {"c1": CriticalSetRecord::from(&c1), "c2": CriticalSetRecord::from(&c2), "c": c, "grid": grid},
                "deviation": rep.consistency_deviation,
                "pass": pass,
                "report": rep,
                "tolerances": tolerances(&h),
            });
            emit_verdict(cfg, report, pass, "union")
        }
        Command::Converge => {
            let c = critical_set(&input)?;
            let rep = truncation_sequence(&c, c.entries().len(), &h).map_err(numerical)?;
            let sup_monotone = rep.sup_differences.iter().skip(2).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0]);
            let pass = rep.non_increasing;
            let report = json!({
                "suite": "converge",
                "inputs": {"critical_set": CriticalSetRecord::from(&c)},
                "functional_values": rep.functional_values,
                "sup_differences": rep.sup_differences,
                "non_increasing": rep.non_increasing,
                "sup_differences_monotone_from_3": sup_monotone,
                "pass": pass,
                "solutions": rep.steps.iter().map(|s| BlaschkeRecord::from(s.report.solution.clone())).collect::<Vec<_>>(),
                "tolerances": tolerances(&h),
            });
            emit_verdict(cfg, report, pass, "convergence")
        }
        Command::Transplant => {
            #[derive(Deserialize)]
            struct Input {
                map: RiemannMap,
                points: Vec<maxblaschke::blaschke::CriticalPointRecord>,
            }
            let inp: Input = from_value(&input, "transplant input")?;
            inp.map.validate().map_err(input_error)?;
            let mut points = Vec::with_capacity(inp.points.len());
            for p in &inp.points {
                if p.multiplicity < 1 {
                    return Err(Failure::Input(format!("multiplicity {} < 1", p.multiplicity)));
                }
                let z = Complex64::new(p.re, p.im);
                if !inp.map.contains(z) {
                    return Err(Failure::Input(format!("point {z} is outside the domain")));
                }
                points.push((z, p.multiplicity as usize));
            }
            let t = transplant(&points, inp.map, &h).map_err(numerical)?;
            let d0 = t.derivative(Complex64::new(0.0, 0.0)).map_err(numerical)?;
            let crit = t.critical_points().map_err(numerical)?;
            let report = json!({
                "command": "transplant",
                "map": inp.map,
                "disk_solution": BlaschkeRecord::from(t.disk_report.solution.clone()),
                "disk_critical_set": t.disk_report.critical_set,
                "derivative_at_origin": record(d0),
                "functional": t.disk_report.functional_value,
                "critical_points": crit.iter().map(|&(z, k)| json!({"re": z.re, "im": z.im, "multiplicity": k})).collect::<Vec<_>>(),
                "roundtrip_error": t.disk_report.roundtrip_error,
                "tolerances": tolerances(&h),
            });
            emit(cfg, &report)
        }
    }
}
