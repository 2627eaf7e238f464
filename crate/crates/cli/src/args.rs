use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use curvcp::BetaIndex;

/// Casimir-Polder free energy near gently curved perfect conductors.
#[derive(Parser, Debug)]
#[command(name = "curvcp", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate the coefficient functions β^(p)_q(ξ).
    #[command(args_override_self = true)]
    BetaTable(BetaTableArgs),
    /// Matsubara sums β̃(τ) and their ratio to the zero-temperature integral.
    #[command(args_override_self = true)]
    MatsubaraCurves(CurveArgs),
    /// Evaluate the potential for one configuration.
    #[command(args_override_self = true)]
    Potential(PotentialArgs),
    /// Energy of a rotated particle over an orientation grid.
    #[command(args_override_self = true)]
    OrientationScan(ScanArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Write data here instead of stdout; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Relative tolerance of the Matsubara sums and quadratures.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Cap on Matsubara terms per sum.
    #[arg(long)]
    pub max_terms: Option<usize>,
    /// Flat `key = value` file; its entries are read before the command-line flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BetaTableArgs {
    /// ξ values: numbers and inclusive `start:stop:step` ranges, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Grid,
    /// Indices as `p:q` pairs, or `all`.
    #[arg(long, default_value = "all")]
    pub indices: IndexList,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// τ = d/λ_T values, same syntax as --xi.
    #[arg(long, allow_hyphen_values = true)]
    pub tau: Grid,
    #[arg(long, default_value = "all")]
    pub indices: IndexList,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LengthUnit {
    Nm,
    M,
}

impl LengthUnit {
    pub fn to_nm(self) -> f64 {
        match self {
            LengthUnit::Nm => 1.0,
            LengthUnit::M => 1e9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Plane,
    Sphere,
    Cylinder,
    Corrugation,
    Polynomial,
    Grid,
    /// Principal radii and curvature gradient given directly.
    Principal,
}

#[derive(Args, Debug)]
pub struct GeometryArgs {
    /// Particle-surface separation.
    #[arg(long)]
    pub d: f64,
    #[arg(long, value_enum, default_value_t = LengthUnit::Nm)]
    pub length_unit: LengthUnit,
    /// Static polarizability in nm³: `a` (isotropic), `xx,yy,zz`, or `xx,yy,zz,xy,xz,yz`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: AlphaSpec,
    #[arg(long, value_enum, default_value_t = ProfileArg::Plane)]
    pub profile: ProfileArg,
    /// Sphere or cylinder radius.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Cylinder axis direction measured from x.
    #[arg(long, default_value_t = 90.0, allow_hyphen_values = true)]
    pub axis_angle_deg: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub period: Option<f64>,
    /// Corrugation wave-vector direction measured from x.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub angle_deg: f64,
    /// Polynomial terms `ij=c` for c·x^i·y^j, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub poly: Option<PolySpec>,
    /// Height map; first line `# spacing_nm=<value>`, then rows in nm.
    #[arg(long)]
    pub grid_file: Option<PathBuf>,
    /// Principal radius R1 (`inf` for flat).
    #[arg(long, allow_hyphen_values = true)]
    pub r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r2: Option<f64>,
    /// ∂_i(1/R1 + 1/R2) as `gx,gy`, in 1/length².
    #[arg(long, allow_hyphen_values = true)]
    pub grad: Option<Pair>,
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Temperature in kelvin.
    #[arg(long)]
    pub temperature: Option<f64>,
    /// τ = d/λ_T directly.
    #[arg(long)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Temperatures in kelvin, same syntax as --xi.
    #[arg(long)]
    pub temperature: Option<Grid>,
    #[arg(long)]
    pub tau: Option<Grid>,
    /// In-plane rotation angles.
    #[arg(long, default_value = "0:180:15", allow_hyphen_values = true)]
    pub azimuth_deg: Grid,
    /// Polar tilt angles.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub tilt_deg: Grid,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn number(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [v] => out.push(number(v)?),
                [a, b, h] => {
                    let (a, b, h) = (number(a)?, number(b)?, number(h)?);
                    if !(h > 0.0) || b < a {
                        return Err(format!("range `{item}` needs start <= stop and step > 0"));
                    }
                    let n = ((b - a) / h + 1e-9).floor() as usize;
                    out.extend((0..=n).map(|k| a + k as f64 * h));
                }
                _ => return Err(format!("`{item}` is neither a number nor start:stop:step")),
            }
        }
        Ok(Grid(out))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexList(pub Vec<BetaIndex>);

impl FromStr for IndexList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.trim() == "all" {
            return Ok(IndexList(BetaIndex::ALL.to_vec()));
        }
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|item| {
                let (p, q) = item
                    .split_once(':')
                    .ok_or_else(|| format!("index `{item}` must look like p:q"))?;
                let p: u8 = p.trim().parse().map_err(|_| format!("bad p in `{item}`"))?;
                let q: u8 = q.trim().parse().map_err(|_| format!("bad q in `{item}`"))?;
                BetaIndex::new(p, q).map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()
            .map(IndexList)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSpec(pub [[f64; 3]; 3]);

impl FromStr for AlphaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        let m = match v.as_slice() {
            [a] => [[*a, 0.0, 0.0], [0.0, *a, 0.0], [0.0, 0.0, *a]],
            [xx, yy, zz] => [[*xx, 0.0, 0.0], [0.0, *yy, 0.0], [0.0, 0.0, *zz]],
            [xx, yy, zz, xy, xz, yz] => [[*xx, *xy, *xz], [*xy, *yy, *yz], [*xz, *yz, *zz]],
            _ => return Err("alpha takes 1, 3 or 6 comma-separated values".into()),
        };
        Ok(AlphaSpec(m))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pair(pub [f64; 2]);

impl FromStr for Pair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let v = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        match v.as_slice() {
            [a, b] => Ok(Pair([*a, *b])),
            _ => Err("expected two comma-separated values".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolySpec(pub BTreeMap<(u8, u8), f64>);

impl FromStr for PolySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (powers, c) = item
                .split_once('=')
                .ok_or_else(|| format!("polynomial term `{item}` must look like ij=c"))?;
            let digits: Vec<u8> = powers
                .trim()
                .chars()
                .map(|ch| ch.to_digit(10).map(|d| d as u8))
                .collect::<Option<_>>()
                .ok_or_else(|| format!("bad powers in `{item}`"))?;
            let [i, j] = digits[..] else {
                return Err(format!("`{item}`: powers are two digits, e.g. 20=0.05"));
            };
            *map.entry((i, j)).or_insert(0.0) += number(c)?;
        }
        Ok(PolySpec(map))
    }
}
