use std::path::{Path, PathBuf};

use configparser::ini::Ini;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{BoundaryData, Grid};
use crate::params::StructureParams;
use crate::regularity::{pinned_profiles, ScaleSweep, PINNED_SEED};
use crate::solver::{FluxModel, Manufactured, SolverConfig, DEFAULT_EPS};

pub const CHECKS: [&str; 8] = [
    "harnack",
    "l1linf",
    "supbound",
    "expansion",
    "oscdecay",
    "holder",
    "truncation",
    "ks",
];

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySpec {
    Constant(f64),
    /// `a₀ + Σ a_i x_i`.
    Affine(Vec<f64>),
    /// `1 + ½ sin(2π x_N)`.
    Sine,
    Pinned {
        member: usize,
        seed: u64,
    },
    Csv(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub enabled: Vec<String>,
    pub seed: u64,
    pub harnack: ScaleSweep,
    pub supbound: ScaleSweep,
    pub supbound_l: f64,
    pub l1linf: ScaleSweep,
    pub expansion: ScaleSweep,
    pub expansion_nu: f64,
    pub expansion_delta: f64,
    pub osc_centers: Vec<Vec<f64>>,
    pub osc_k: Option<f64>,
    pub osc_delta_bar: f64,
    pub holder_center: Vec<f64>,
    pub holder_theta: f64,
    pub holder_rho: f64,
    pub holder_pairs: usize,
    pub holder_fresh: usize,
    pub holder_slack: f64,
    pub truncation_levels: usize,
    pub truncation_bumps: usize,
    pub ks_center: Vec<f64>,
    pub ks_rho: f64,
    pub ks_delta_bar: f64,
    pub ks_beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmsConfig {
    pub nodes: Vec<usize>,
    pub profile: Manufactured,
    pub min_order: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: StructureParams,
    pub flux: FluxModel,
    pub grid: Grid,
    pub boundary: BoundarySpec,
    pub solver: SolverConfig,
    pub checks: CheckConfig,
    pub mms: MmsConfig,
    pub output: PathBuf,
    /// Hex SHA-256 of the config file bytes.
    pub sha256: String,
}

struct Source {
    ini: Ini,
}

fn bad(section: &str, key: &str, v: &str) -> Error {
    Error::Config(format!("[{section}] {key} = {v:?} is malformed"))
}

impl Source {
    fn raw(&self, section: &str, key: &str) -> Option<String> {
        self.ini
            .get(section, key)
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
    }

    fn parse<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| bad(section, key, &v)),
        }
    }

    fn opt<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.raw(section, key)
            .map(|v| v.parse().map_err(|_| bad(section, key, &v)))
            .transpose()
    }

    fn list<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<T>>> {
        self.raw(section, key)
            .map(|v| {
                v.split(',')
                    .map(|t| t.trim().parse().map_err(|_| bad(section, key, &v)))
                    .collect()
            })
            .transpose()
    }

    /// `x1, y1; x2, y2; ...`
    fn points(&self, section: &str, key: &str, n: usize) -> Result<Option<Vec<Vec<f64>>>> {
        let Some(v) = self.raw(section, key) else {
            return Ok(None);
        };
        let pts = v
            .split(';')
            .map(|p| {
                p.split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .ok()
                    .filter(|q| q.len() == n)
                    .ok_or_else(|| bad(section, key, &v))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(pts))
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Config("config is not UTF-8".into()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &bytes, base)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::parse(text, text.as_bytes(), Path::new("."))
    }

    fn parse(text: &str, bytes: &[u8], base: &Path) -> Result<Self> {
        let mut ini = Ini::new();
        // ';' separates points, so only '#' starts a comment
        ini.set_comment_symbols(&['#']);
        ini.set_inline_comment_symbols(Some(&['#']));
        ini.read(text.to_string()).map_err(Error::Config)?;
        let src = Source { ini };
        let sha256 = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();

        let n: usize = src.parse("equation", "n", 2)?;
        let s: usize = src.parse("equation", "s", 1)?;
        let p: f64 = src.parse("equation", "p", 1.5)?;
        let params = StructureParams::new(
            n,
            s,
            p,
            src.parse("equation", "c1", 1.0)?,
            src.parse("equation", "c2", 1.0)?,
            src.parse("equation", "c", 0.0)?,
        )?;
        let eps: f64 = src.parse("equation", "epsilon", DEFAULT_EPS)?;
        let flux = match src.raw("equation", "flux").as_deref().unwrap_or("prototype") {
            "prototype" => FluxModel::prototype(p, eps),
            "anisotropic" => {
                let coeffs = src
                    .list("equation", "coefficients")?
                    .ok_or_else(|| Error::Config("anisotropic flux needs [equation] coefficients".into()))?;
                FluxModel::anisotropic(p, eps, coeffs)?
            }
            other => return Err(bad("equation", "flux", other)),
        };

        let nodes: Vec<usize> = src.list("grid", "nodes")?.unwrap_or_else(|| vec![65]);
        let dims = match nodes.len() {
            1 => vec![nodes[0]; n],
            k if k == n => nodes,
            _ => return Err(bad("grid", "nodes", &src.raw("grid", "nodes").unwrap_or_default())),
        };
        let lo = src.list("grid", "lo")?.unwrap_or_else(|| vec![0.0; n]);
        let hi = src.list("grid", "hi")?.unwrap_or_else(|| vec![1.0; n]);
        let grid = Grid::on_box(&dims, &lo, &hi, s, p)?;

        let boundary = match src.raw("boundary", "profile").as_deref().unwrap_or("sine") {
            "constant" => BoundarySpec::Constant(src.parse("boundary", "value", 1.0)?),
            "affine" => {
                let a: Vec<f64> = src
                    .list("boundary", "coefficients")?
                    .ok_or_else(|| Error::Config("affine profile needs [boundary] coefficients".into()))?;
                if a.len() != n + 1 {
                    return Err(Error::Config(format!("affine profile needs {} coefficients", n + 1)));
                }
                BoundarySpec::Affine(a)
            }
            "sine" => BoundarySpec::Sine,
            "pinned" => {
                if n != 2 {
                    return Err(Error::Config("pinned profiles are two-dimensional".into()));
                }
                BoundarySpec::Pinned {
                    member: src.parse("boundary", "member", 0)?,
                    seed: src.parse("boundary", "seed", PINNED_SEED)?,
                }
            }
            "csv" => {
                let path: String = src
                    .raw("boundary", "path")
                    .ok_or_else(|| Error::Config("csv profile needs [boundary] path".into()))?;
                BoundarySpec::Csv(base.join(path))
            }
            other => return Err(bad("boundary", "profile", other)),
        };

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            tol_residual: src.parse("solver", "tol_residual", defaults.tol_residual)?,
            tol_energy: src.parse("solver", "tol_energy", defaults.tol_energy)?,
            max_sweeps: src.parse("solver", "max_sweeps", defaults.max_sweeps)?,
            epsilon: eps,
            seed: 0,
        };
        solver.validate()?;

        let width: Vec<f64> = (0..n).map(|a| hi[a] - lo[a]).collect();
        let wmin = width.iter().cloned().fold(f64::INFINITY, f64::min);
        let at = |f: &[f64]| -> Vec<f64> { (0..n).map(|a| lo[a] + f[a] * width[a]).collect() };
        let frac_lattice =
            |vals: &[f64]| -> Vec<Vec<f64>> { ScaleSweep::lattice(vals, n).iter().map(|f| at(f)).collect() };
        let center = at(&vec![0.5; n]);
        let points = |key: &str, default: Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
            Ok(src.points("checks", key, n)?.unwrap_or(default))
        };
        let radii = |key: &str, default: Vec<f64>| -> Result<Vec<f64>> {
            Ok(src
                .list("checks", key)?
                .unwrap_or_else(|| default.iter().map(|r| r * wmin).collect()))
        };
        let enabled: Vec<String> = match src.raw("checks", "enabled") {
            None => CHECKS.iter().map(|c| c.to_string()).collect(),
            Some(v) => {
                let list: Vec<String> = v.split(',').map(|t| t.trim().to_lowercase()).collect();
                if let Some(u) = list.iter().find(|c| !CHECKS.contains(&c.as_str())) {
                    return Err(bad("checks", "enabled", u));
                }
                list
            }
        };
        if enabled.iter().any(|c| c == "harnack" || c == "l1linf") {
            params.require_supercritical()?;
        }
        let lattice3 = frac_lattice(&[0.375, 0.5, 0.625]);
        let main_points = points("points", lattice3)?;
        let checks = CheckConfig {
            seed: src.parse("checks", "seed", 0)?,
            harnack: ScaleSweep::new(
                radii("harnack_radii", vec![0.05, 0.1, 0.2])?,
                main_points.clone(),
                src.list("checks", "harnack_delta_bars")?.unwrap_or_else(|| vec![1.0]),
            )?,
            supbound: ScaleSweep::new(
                radii("supbound_radii", ScaleSweep::dyadic(3, 6))?,
                main_points.clone(),
                vec![src.parse("checks", "supbound_delta_bar", 1.0)?],
            )?,
            supbound_l: src.parse("checks", "supbound_l", 1.0)?,
            l1linf: ScaleSweep::new(
                radii("l1linf_radii", ScaleSweep::dyadic(5, 7))?,
                main_points,
                vec![src.parse("checks", "l1linf_delta_bar", 0.5)?],
            )?,
            expansion: ScaleSweep::new(
                vec![src.parse("checks", "expansion_rho", wmin / 16.0)?],
                points("expansion_points", frac_lattice(&[0.25, 0.375, 0.5, 0.625, 0.75]))?,
                vec![1.0],
            )?,
            expansion_nu: src.parse("checks", "expansion_nu", 0.5)?,
            expansion_delta: src.parse("checks", "expansion_delta", 0.25)?,
            osc_centers: match src.points("checks", "osc_centers", n)? {
                Some(p) => p,
                None => random_centers(
                    n,
                    src.parse("checks", "osc_count", 10)?,
                    src.parse("checks", "seed", 0)?,
                )
                .iter()
                .map(|f| at(f))
                .collect(),
            },
            osc_k: src.opt("checks", "osc_k")?,
            osc_delta_bar: src.parse("checks", "osc_delta_bar", 1.0)?,
            holder_center: src.list("checks", "holder_center")?.unwrap_or_else(|| center.clone()),
            holder_theta: src.parse("checks", "holder_theta", wmin / 4.0)?,
            holder_rho: src.parse("checks", "holder_rho", wmin / 4.0)?,
            holder_pairs: src.parse("checks", "holder_pairs", 20_000)?,
            holder_fresh: src.parse("checks", "holder_fresh", 1000)?,
            holder_slack: src.parse("checks", "holder_slack", 1.1)?,
            truncation_levels: src.parse("checks", "truncation_levels", 5)?,
            truncation_bumps: src.parse("checks", "truncation_bumps", 20)?,
            ks_center: src.list("checks", "ks_center")?.unwrap_or(center),
            ks_rho: src.parse("checks", "ks_rho", 0.2 * wmin)?,
            ks_delta_bar: src.parse("checks", "ks_delta_bar", 1.0)?,
            ks_beta: src.parse("checks", "ks_beta", 1.0)?,
            enabled,
        };

        let mms = MmsConfig {
            nodes: src.list("mms", "nodes")?.unwrap_or_else(|| vec![17, 33, 65]),
            profile: match src.raw("mms", "profile").as_deref().unwrap_or("sine") {
                "sine" => Manufactured::Sine,
                "affine" => Manufactured::Affine,
                other => return Err(bad("mms", "profile", other)),
            },
            min_order: src.parse("mms", "min_order", 1.5)?,
        };
        if mms.nodes.is_empty() || mms.nodes.iter().any(|&k| k < 3) {
            return Err(Error::Config("[mms] nodes must be at least 3".into()));
        }

        Ok(Self {
            params,
            flux,
            grid,
            boundary,
            solver,
            checks,
            mms,
            output: PathBuf::from(src.raw("output", "dir").unwrap_or_else(|| "out".into())),
            sha256,
        })
    }

    pub fn boundary_data(&self) -> Result<BoundaryData> {
        let g = &self.grid;
        Ok(match &self.boundary {
            BoundarySpec::Constant(c) => BoundaryData::constant(g, *c),
            BoundarySpec::Affine(a) => {
                BoundaryData::from_fn(g, |x| a[0] + x.iter().zip(&a[1..]).map(|(x, c)| x * c).sum::<f64>())
            }
            BoundarySpec::Sine => {
                BoundaryData::from_fn(g, |x| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x[x.len() - 1]).sin())
            }
            BoundarySpec::Pinned { member, seed } => {
                let prof = pinned_profiles(member + 1, *seed).pop().expect("nonempty");
                BoundaryData::from_fn(g, |x| prof.eval(x))
            }
            BoundarySpec::Csv(path) => BoundaryData::from_csv(g, path)?,
        })
    }
}

/// Fractions in `[0.35, 0.65]^n`.
fn random_centers(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.gen_range(0.35..0.65)).collect())
        .collect()
}
