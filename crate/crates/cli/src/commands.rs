use std::fmt::Write as _;
use std::path::Path;

use curvcp::beta::beta_eval;
use curvcp::eta::u_classical;
use curvcp::geometry::{HeightGrid, ProfileKind};
use curvcp::potential::ValidityFlags;
use curvcp::thermal::{beta_t0_integral, matsubara_beta_sum};
use curvcp::{
    local_geometry_from_profile, orientation_scan, u_full, u_retarded, BetaIndex, Frame,
    LocalGeometry, PolarizabilityTensor, PotentialBreakdown, Rotation, SurfaceProfile,
    ThermalConfig,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BetaTableArgs, CurveArgs, Format, GeometryArgs, OutputArgs, PotentialArgs, ProfileArg,
    ScanArgs,
};
use crate::error::CliError;

/// Rendered data plus the fields that go into the metadata sidecar.
pub struct Rendered {
    pub data: String,
    pub meta: Value,
    pub warnings: Vec<String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn thermal_config(tau: f64, out: &OutputArgs) -> Result<ThermalConfig, CliError> {
    if out.max_terms == Some(0) {
        return Err(config_err("--max-terms must be positive"));
    }
    let mut cfg = ThermalConfig::new(tau)?;
    if let Some(n) = out.max_terms {
        cfg = cfg.with_max_terms(n);
    }
    match out.tol {
        Some(t) if !(t > 0.0 && t < 1.0) => Err(config_err(format!("--tol {t} must lie in (0, 1)"))),
        Some(t) => Ok(cfg.with_tolerance(t)?),
        None => Ok(cfg),
    }
}

fn json_string<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn index_label(idx: BetaIndex) -> (u8, u8) {
    (idx.p(), idx.q())
}

#[derive(Serialize)]
struct BetaRow {
    p: u8,
    q: u8,
    xi: f64,
    beta: f64,
}

pub fn beta_table(args: &BetaTableArgs) -> Result<Rendered, CliError> {
    if let Some(x) = args.xi.0.iter().find(|x| !(**x >= 0.0)) {
        return Err(config_err(format!("--xi value {x} must be non-negative")));
    }
    let mut rows = Vec::new();
    for &idx in &args.indices.0 {
        for &xi in &args.xi.0 {
            let (p, q) = index_label(idx);
            rows.push(BetaRow { p, q, xi, beta: beta_eval(idx, xi)? });
        }
    }
    let data = match args.out.format {
        Format::Csv => {
            let mut s = String::from("p,q,xi,beta\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{},{}", r.p, r.q, r.xi, num(r.beta));
            }
            s
        }
        Format::Json => json_string(&rows),
    };
    Ok(Rendered {
        data,
        meta: json!({ "rows": rows.len() }),
        warnings: Vec::new(),
    })
}

#[derive(Serialize)]
struct CurveRow {
    p: u8,
    q: u8,
    tau: f64,
    beta_tilde: f64,
    beta_tilde_over_t0: f64,
    terms_used: usize,
}

pub fn matsubara_curves(args: &CurveArgs) -> Result<Rendered, CliError> {
    if let Some(t) = args.tau.0.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(config_err(format!("--tau value {t} must be finite and non-negative")));
    }
    let base = thermal_config(0.0, &args.out)?;

    let mut warnings = Vec::new();
    let mut t0 = Vec::new();
    for &idx in &args.indices.0 {
        match beta_t0_integral(idx, base.quad_tolerance()) {
            Ok(v) => t0.push((idx, v)),
            Err(e) => warnings.push(format!("{idx}: skipped, zero-temperature integral failed: {e}")),
        }
    }

    let jobs: Vec<(BetaIndex, f64, f64)> = t0
        .iter()
        .flat_map(|&(idx, v0)| args.tau.0.iter().map(move |&tau| (idx, v0, tau)))
        .collect();
    let results: Vec<Result<CurveRow, String>> = jobs
        .par_iter()
        .map(|&(idx, v0, tau)| {
            let (p, q) = index_label(idx);
            let (value, terms_used) = if tau == 0.0 {
                (v0, 0)
            } else {
                let cfg = base.with_tau(tau).map_err(|e| e.to_string())?;
                let r = matsubara_beta_sum(idx, &cfg)
                    .map_err(|e| format!("{idx} at tau = {tau}: skipped, {e}"))?;
                (r.value, r.terms_used)
            };
            Ok(CurveRow {
                p,
                q,
                tau,
                beta_tilde: value,
                beta_tilde_over_t0: value / v0,
                terms_used,
            })
        })
        .collect();

    let mut rows = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(w) => warnings.push(w),
        }
    }
    let data = match args.out.format {
        Format::Csv => {
            let mut s = String::from("p,q,tau,beta_tilde,beta_tilde_over_T0\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{},{},{}", r.p, r.q, r.tau, r.beta_tilde, r.beta_tilde_over_t0);
            }
            s
        }
        Format::Json => json_string(&rows),
    };
    Ok(Rendered {
        data,
        meta: json!({
            "rows": rows.len(),
            "warnings": warnings.len(),
            "sum_rel_tol": base.sum_rel_tol,
            "max_terms": base.max_terms,
        }),
        warnings,
    })
}

fn read_grid_file(path: &Path) -> Result<HeightGrid, CliError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(shown.clone(), e))?;
    let mut spacing = None;
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(c) = line.strip_prefix('#') {
            if let Some(v) = c.trim().strip_prefix("spacing_nm=") {
                spacing = Some(v.trim().parse::<f64>().map_err(|_| {
                    config_err(format!("{shown}:{}: bad spacing `{}`", n + 1, v.trim()))
                })?);
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| config_err(format!("{shown}:{}: non-numeric height", n + 1)))?;
        values.push(row);
    }
    let spacing = spacing.ok_or_else(|| config_err(format!("{shown}: missing `# spacing_nm=` line")))?;
    if !(spacing > 0.0) {
        return Err(config_err(format!("{shown}: spacing must be positive")));
    }
    if values.iter().any(|r| r.len() != values[0].len()) {
        return Err(config_err(format!("{shown}: rows have different lengths")));
    }
    Ok(HeightGrid::centred(spacing, values)?)
}

fn require(v: Option<f64>, flag: &str, profile: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| config_err(format!("{flag} is required for --profile {profile}")))
}

/// Separation in nm and geometry at the foot point, lengths in nm.
pub fn build_geometry(g: &GeometryArgs) -> Result<(f64, LocalGeometry, &'static str), CliError> {
    let f = g.length_unit.to_nm();
    let d = g.d * f;
    if !(d > 0.0 && d.is_finite()) {
        return Err(config_err(format!("--d {} must be positive", g.d)));
    }
    let profile = |kind| SurfaceProfile::new(kind);
    let (geom, name) = match g.profile {
        ProfileArg::Plane => (LocalGeometry::flat(d)?, "plane"),
        ProfileArg::Sphere => {
            let r = require(g.radius, "--radius", "sphere")? * f;
            (local_geometry_from_profile(&SurfaceProfile::sphere(r), d)?, "sphere")
        }
        ProfileArg::Cylinder => {
            let r = require(g.radius, "--radius", "cylinder")? * f;
            let p = SurfaceProfile::cylinder(r, g.axis_angle_deg.to_radians());
            (local_geometry_from_profile(&p, d)?, "cylinder")
        }
        ProfileArg::Corrugation => {
            let a = require(g.amplitude, "--amplitude", "corrugation")? * f;
            let period = require(g.period, "--period", "corrugation")? * f;
            let p = profile(ProfileKind::Corrugation {
                amplitude: a,
                period,
                angle: g.angle_deg.to_radians(),
            });
            (local_geometry_from_profile(&p, d)?, "corrugation")
        }
        ProfileArg::Polynomial => {
            let terms = g
                .poly
                .as_ref()
                .ok_or_else(|| config_err("--poly is required for --profile polynomial"))?;
            let scaled = terms
                .0
                .iter()
                .map(|(&(i, j), &c)| ((i, j), c * f.powi(1 - i as i32 - j as i32)));
            (local_geometry_from_profile(&SurfaceProfile::polynomial(scaled), d)?, "polynomial")
        }
        ProfileArg::Grid => {
            let path = g
                .grid_file
                .as_ref()
                .ok_or_else(|| config_err("--grid-file is required for --profile grid"))?;
            let grid = read_grid_file(path)?;
            (local_geometry_from_profile(&SurfaceProfile::grid(grid), d)?, "grid")
        }
        ProfileArg::Principal => {
            let r1 = g.r1.unwrap_or(f64::INFINITY) * f;
            let r2 = g.r2.unwrap_or(f64::INFINITY) * f;
            let grad = g.grad.map_or([0.0, 0.0], |p| [p.0[0] / (f * f), p.0[1] / (f * f)]);
            (LocalGeometry::from_radii(d, r1, r2, grad)?, "principal")
        }
    };
    if g.profile != ProfileArg::Principal && g.grad.is_some() {
        return Err(config_err("--grad only applies to --profile principal"));
    }
    Ok((d, geom, name))
}

fn build_alpha(g: &GeometryArgs, frame: Frame) -> Result<PolarizabilityTensor, CliError> {
    let m = g.alpha.0;
    if m.iter().flatten().any(|v| !v.is_finite()) {
        return Err(config_err("--alpha entries must be finite"));
    }
    Ok(PolarizabilityTensor::new(m)?.with_frame(frame))
}

enum Temperature {
    Kelvin(f64, f64),
    Tau(f64),
}

impl Temperature {
    fn tau(&self) -> f64 {
        match *self {
            Temperature::Kelvin(_, tau) | Temperature::Tau(tau) => tau,
        }
    }

    fn kelvin(&self) -> Option<f64> {
        match *self {
            Temperature::Kelvin(t, _) => Some(t),
            Temperature::Tau(_) => None,
        }
    }
}

fn temperature(d_nm: f64, t: Option<f64>, tau: Option<f64>) -> Result<Temperature, CliError> {
    match (t, tau) {
        (Some(t), None) => {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(config_err(format!("--temperature {t} must be non-negative")));
            }
            Ok(Temperature::Kelvin(t, curvcp::units::tau_from(d_nm, t)?))
        }
        (None, Some(tau)) if tau >= 0.0 && tau.is_finite() => Ok(Temperature::Tau(tau)),
        (None, Some(tau)) => Err(config_err(format!("--tau {tau} must be non-negative"))),
        _ => Err(config_err("give exactly one of --temperature and --tau")),
    }
}

fn breakdown_json(b: &PotentialBreakdown) -> Value {
    json!({
        "total": b.total,
        "flat": b.flat,
        "curvature1": b.curvature1,
        "gradient": b.gradient,
        "curvature2": b.curvature2,
        "channels": b.channels,
    })
}

/// Prints −0 as 0.
fn num(v: f64) -> f64 {
    v + 0.0
}

fn csv_row(s: &mut String, model: &str, unit: &str, b: &PotentialBreakdown) {
    let _ = write!(s, "{model},{unit},{}", num(b.total));
    for v in b.order_terms().into_iter().chain(b.channel_terms()) {
        let _ = write!(s, ",{}", num(v));
    }
    s.push('\n');
}

pub fn potential(args: &PotentialArgs) -> Result<Rendered, CliError> {
    let (d, geom, profile) = build_geometry(&args.geometry)?;
    let temp = temperature(d, args.temperature, args.tau)?;
    let tau = temp.tau();
    let alpha = build_alpha(&args.geometry, geom.frame())?;
    let cfg = thermal_config(tau, &args.out)?;

    let full = u_full(&alpha, &geom, &cfg)?;
    let retarded = u_retarded(&alpha, &geom, tau)?;
    let classical = u_classical(&alpha, &geom)?;
    let flags = ValidityFlags::assess(&geom, Some(tau));
    let mut warnings = flags.messages();
    if let Some(est) = geom.stencil_estimate() {
        if est.slope > 1e-6 {
            warnings.push(format!("surface slope at the foot point is {:e}", est.slope));
        }
    }

    let (a, b) = geom.d_over_r();
    let si = |e: &PotentialBreakdown, thermal: bool| -> Option<Value> {
        let t = temp.kelvin()?;
        let joules = if thermal {
            curvcp::units::thermal_to_joules(e.total, d, t)
        } else {
            curvcp::units::reduced_to_joules(e.total, d)
        };
        Some(json!({ "joules": joules, "kelvin": curvcp::units::joules_to_kelvin(joules) }))
    };

    let data = match args.out.format {
        Format::Csv => {
            let mut s = String::from("model,unit,total,flat,curvature1,gradient,curvature2,perp,zz,zi,xy\n");
            csv_row(&mut s, "full", "reduced", &full);
            csv_row(&mut s, "retarded", "reduced", &retarded);
            csv_row(&mut s, "classical", "thermal", &classical);
            s
        }
        Format::Json => {
            let report = json!({
                "inputs": {
                    "d_nm": d,
                    "temperature_k": temp.kelvin(),
                    "tau": tau,
                    "profile": profile,
                    "d_over_r1": a,
                    "d_over_r2": b,
                    "reduced_grad_lap": geom.reduced_grad_lap(),
                    "principal_angle_deg": geom.principal_angle().to_degrees(),
                    "alpha_nm3": alpha.components(),
                },
                "full": {
                    "unit": "reduced",
                    "energy": breakdown_json(&full),
                    "u_d4_over_hbar_c": full.total / std::f64::consts::PI,
                    "si": si(&full, false),
                },
                "retarded": {
                    "unit": "reduced",
                    "energy": breakdown_json(&retarded),
                    "u_d4_over_hbar_c": retarded.total / std::f64::consts::PI,
                    "si": si(&retarded, false),
                },
                "classical": {
                    "unit": "thermal",
                    "energy": breakdown_json(&classical),
                    "u_d4_over_hbar_c": classical.total * tau / (2.0 * std::f64::consts::PI),
                    "si": si(&classical, true),
                },
                "flags": flags,
            });
            json_string(&report)
        }
    };
    Ok(Rendered {
        data,
        meta: json!({ "tau": tau, "profile": profile }),
        warnings,
    })
}

pub fn scan(args: &ScanArgs) -> Result<Rendered, CliError> {
    let (d, geom, profile) = build_geometry(&args.geometry)?;
    let temps: Vec<Temperature> = match (&args.temperature, &args.tau) {
        (Some(ts), None) => ts
            .0
            .iter()
            .map(|&t| temperature(d, Some(t), None))
            .collect::<Result<_, _>>()?,
        (None, Some(taus)) => taus
            .0
            .iter()
            .map(|&t| temperature(d, None, Some(t)))
            .collect::<Result<_, _>>()?,
        _ => return Err(config_err("give exactly one of --temperature and --tau")),
    };
    if temps.is_empty() {
        return Err(config_err("temperature list is empty"));
    }
    let alpha = build_alpha(&args.geometry, Frame::General)?;
    let rotations: Vec<Rotation> = args
        .tilt_deg
        .0
        .iter()
        .flat_map(|&tilt| {
            args.azimuth_deg.0.iter().map(move |&az| Rotation {
                azimuth: az.to_radians(),
                tilt: tilt.to_radians(),
            })
        })
        .collect();

    let scans = temps
        .par_iter()
        .map(|t| {
            let cfg = thermal_config(t.tau(), &args.out)?;
            Ok(orientation_scan(&alpha, &geom, &cfg, &rotations)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut warnings = ValidityFlags::assess(&geom, temps.iter().map(Temperature::tau).reduce(f64::max)).messages();
    if alpha.is_isotropic() {
        warnings.push("isotropic polarizability: energy does not depend on orientation".into());
    }

    let data = match args.out.format {
        Format::Csv => {
            let mut s = String::from("tau,azimuth_deg,tilt_deg,energy,is_min\n");
            for (t, sc) in temps.iter().zip(&scans) {
                for (i, (r, b)) in sc.points.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{}",
                        t.tau(),
                        r.azimuth.to_degrees(),
                        num(r.tilt.to_degrees()),
                        num(b.total),
                        i == sc.argmin
                    );
                }
            }
            s
        }
        Format::Json => {
            let v: Vec<Value> = temps
                .iter()
                .zip(&scans)
                .map(|(t, sc)| {
                    let (r, b) = sc.minimum();
                    json!({
                        "tau": t.tau(),
                        "temperature_k": t.kelvin(),
                        "minimum": {
                            "azimuth_deg": r.azimuth.to_degrees(),
                            "tilt_deg": r.tilt.to_degrees(),
                            "energy": b.total,
                        },
                        "points": sc.points.iter().map(|(r, b)| json!({
                            "azimuth_deg": r.azimuth.to_degrees(),
                            "tilt_deg": r.tilt.to_degrees(),
                            "energy": breakdown_json(b),
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            json_string(&json!({ "unit": "reduced", "profile": profile, "scans": v }))
        }
    };
    Ok(Rendered {
        data,
        meta: json!({ "profile": profile, "orientations": rotations.len(), "temperatures": temps.len() }),
        warnings,
    })
}
