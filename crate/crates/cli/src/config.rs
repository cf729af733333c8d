//! Experiment configuration: one JSON file with a section per subcommand.
//! Flags override keys read from the file, which override built-in defaults.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use scatter_core::SmootherSpec;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::CliError;

/// An angle in radians, written in configs and on the command line either as
/// a number or as an expression such as `pi/6`, `2pi/3`, `-pi/4` or `15deg`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle(pub f64);

impl Angle {
    pub fn pi_over(d: f64) -> Self {
        Angle(PI / d)
    }
}

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
        let bad = || format!("cannot parse angle `{s}`");
        if let Some(deg) = t.strip_suffix("deg") {
            return deg.parse::<f64>().map(|d| Angle(d.to_radians())).map_err(|_| bad());
        }
        let Some(pos) = t.find("pi") else {
            return t.parse::<f64>().map(Angle).map_err(|_| bad());
        };
        let coef = t[..pos].trim_end_matches('*');
        let coef = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| bad())?,
        };
        let rest = &t[pos + 2..];
        let den = match rest {
            "" => 1.0,
            r => r.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
        };
        if den == 0.0 {
            return Err(bad());
        }
        Ok(Angle(coef * PI / den))
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Angle;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians or an expression like \"pi/6\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Angle, E> {
                Ok(Angle(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Angle, E> {
                Ok(Angle(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Angle, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// Raw config file contents.
#[derive(Debug, Default)]
pub struct ConfigFile {
    root: serde_json::Map<String, serde_json::Value>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        match serde_json::from_str(&text) {
            Ok(serde_json::Value::Object(root)) => Ok(Self { root }),
            Ok(_) => Err(CliError::Usage("config file must hold a JSON object".into())),
            Err(e) => Err(CliError::Usage(format!("invalid config {}: {e}", path.display()))),
        }
    }

    /// The section for `command`, or the defaults when absent.
    pub fn section<T: for<'de> Deserialize<'de> + Default>(&self, command: &str) -> Result<T, CliError> {
        match self.root.get(command) {
            None => Ok(T::default()),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("config section `{command}`: {e}"))),
        }
    }
}

/// Sets `target` when the flag was given.
pub fn over<T>(target: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *target = v;
    }
}

/// Inclusive energy range `emin, emin + estep, …, emax`.
pub fn energy_range(emin: f64, emax: f64, estep: f64) -> Result<Vec<f64>, CliError> {
    if !(estep > 0.0) || emax < emin {
        return Err(CliError::Usage(format!("bad energy range {emin}..{emax} step {estep}")));
    }
    let n = ((emax - emin) / estep + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| emin + i as f64 * estep).collect())
}

/// Smoother selection shared by the solver commands.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SmootherChoice {
    Gmres,
    Jacobi,
}

pub fn smoother(choice: SmootherChoice, omega: f64, m: usize) -> SmootherSpec {
    match choice {
        SmootherChoice::Gmres => SmootherSpec::gmres(m),
        SmootherChoice::Jacobi => SmootherSpec::jacobi(omega),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleTableConfig {
    pub thetas: Vec<Angle>,
}

impl Default for AngleTableConfig {
    fn default() -> Self {
        Self {
            thetas: [8.0, 7.0, 6.0, 5.0, 4.0, 3.0].iter().map(|&d| Angle::pi_over(d)).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Vcycle,
    Fmg,
    Krylov,
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    Rotated,
    Ecs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HelmholtzSolveConfig {
    pub problem: String,
    pub k0: f64,
    pub n: usize,
    pub grid: GridKind,
    /// Rotation angle; derived from `theta` when absent.
    pub gamma: Option<Angle>,
    pub theta: Angle,
    /// ECS layer intervals on each side; `n / 4` when absent.
    pub layer: Option<usize>,
    pub method: Method,
    pub tol: f64,
    pub max_iters: usize,
    pub smoother: SmootherChoice,
    pub omega: f64,
    pub m: usize,
}

impl Default for HelmholtzSolveConfig {
    fn default() -> Self {
        Self {
            problem: "helmholtz2d-twodots".into(),
            k0: 1.0,
            n: 64,
            grid: GridKind::Rotated,
            gamma: None,
            theta: Angle::pi_over(6.0),
            layer: None,
            method: Method::Vcycle,
            tol: 1e-6,
            max_iters: 100,
            smoother: SmootherChoice::Gmres,
            omega: 2.0 / 3.0,
            m: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgBenchConfig {
    pub dim: usize,
    pub k0: Vec<f64>,
    pub n: Vec<usize>,
    pub gamma: Option<Angle>,
    pub theta: Angle,
    pub methods: Vec<Method>,
    pub tol: f64,
    pub max_iters: usize,
    pub smoother: SmootherChoice,
    pub omega: f64,
    pub m: usize,
}

impl Default for MgBenchConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            k0: vec![0.25, 0.5, 1.0, 2.0],
            n: vec![16, 32, 64],
            gamma: None,
            theta: Angle::pi_over(6.0),
            methods: vec![Method::Vcycle, Method::Fmg],
            tol: 1e-6,
            max_iters: 100,
            smoother: SmootherChoice::Gmres,
            omega: 2.0 / 3.0,
            m: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FmgTimeConfig {
    pub dim: usize,
    pub k0: f64,
    pub n: Vec<usize>,
    pub gamma: Option<Angle>,
    pub theta: Angle,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FmgTimeConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            k0: 1.0,
            n: vec![16, 32, 64],
            gamma: None,
            theta: Angle::pi_over(6.0),
            tol: 1e-6,
            max_iters: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Compare {
    Reference,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FarfieldConfig {
    pub problem: String,
    pub k0: f64,
    pub n: usize,
    pub gamma: Option<Angle>,
    pub theta: Angle,
    pub compare: Compare,
    /// ECS angle of the reference grid.
    pub ref_theta: Angle,
    /// Reference layer intervals per side; `n / 4` when absent.
    pub ref_layer: Option<usize>,
    /// Number of directions; the default set for the dimension when absent.
    pub directions: Option<usize>,
    pub tol: f64,
    pub ref_tol: f64,
    pub max_iters: usize,
    pub smoother: SmootherChoice,
    pub omega: f64,
    pub m: usize,
}

impl Default for FarfieldConfig {
    fn default() -> Self {
        Self {
            problem: "helmholtz2d-twodots".into(),
            k0: 1.0,
            n: 256,
            gamma: None,
            theta: Angle::pi_over(4.0),
            compare: Compare::Reference,
            ref_theta: Angle::pi_over(4.0),
            ref_layer: None,
            directions: None,
            tol: 1e-6,
            ref_tol: 1e-10,
            max_iters: 200,
            smoother: SmootherChoice::Gmres,
            omega: 2.0 / 3.0,
            m: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    Complex,
    Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IonizationScanConfig {
    pub n: usize,
    pub gamma: Option<Angle>,
    pub theta: Angle,
    /// ECS layer intervals of the real-path grid; `n / 2` when absent.
    pub layer: Option<usize>,
    /// Explicit energies; the range below is used when absent.
    pub energies: Option<Vec<f64>>,
    pub emin: f64,
    pub emax: f64,
    pub estep: f64,
    pub paths: Vec<PathKind>,
    pub n_alpha: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for IonizationScanConfig {
    fn default() -> Self {
        Self {
            n: 128,
            gamma: None,
            theta: Angle::pi_over(7.0),
            layer: None,
            energies: None,
            emin: -1.0,
            emax: 2.0,
            estep: 0.25,
            paths: vec![PathKind::Complex, PathKind::Real],
            n_alpha: 32,
            tol: 1e-8,
            max_iters: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MgRateScanConfig {
    pub dim: usize,
    /// Intervals per axis; 256 in 2D and 64 in 3D when absent.
    pub n: Option<usize>,
    /// Rotation angle; `theta_to_gamma(pi/7)` in 2D and `pi/12` in 3D when absent.
    pub gamma: Option<Angle>,
    pub energies: Option<Vec<f64>>,
    pub emin: f64,
    pub emax: f64,
    pub estep: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Cycles per level of the F(s) pass before the measured V-cycles;
    /// 0 starts from a zero guess.
    pub fmg_warmup: usize,
    /// Cycles over which the rate is averaged; 4 in 2D and 3 in 3D when absent.
    pub rate_cycles: Option<usize>,
}

impl Default for MgRateScanConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            n: None,
            gamma: None,
            energies: None,
            emin: -2.0,
            emax: 3.0,
            estep: 0.25,
            tol: 1e-6,
            max_iters: 40,
            fmg_warmup: 5,
            rate_cycles: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub extent: f64,
    pub n: usize,
    pub gamma: Angle,
    pub kronecker: bool,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            extent: 20.0,
            n: 500,
            gamma: Angle::pi_over(6.0),
            kronecker: true,
        }
    }
}
