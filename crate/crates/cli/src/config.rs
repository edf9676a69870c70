use nonlocal_core::kernels::KernelSpec;
use nonlocal_core::plap_lab::PlapConfig;
use nonlocal_core::torus_field::{RegularityOrders, TorusGrid};
use nonlocal_core::{Error, Result};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "N")]
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrdersSpec {
    pub s1: f64,
    pub p: f64,
    pub t_tilde: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationSpec {
    pub x0: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol: f64,
    pub max_iter: usize,
    pub rho_max: f64,
    pub probes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { tol: 1e-8, max_iter: 60, rho_max: 0.95, probes: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSpec {
    pub order: f64,
    pub exponent: f64,
    #[serde(default = "default_extent")]
    pub extent: f64,
}

fn default_extent() -> f64 {
    0.0
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub radius: Option<f64>,
    pub inner: Option<f64>,
    pub outer: Option<f64>,
    pub shift: Option<f64>,
    pub truncation: Option<f64>,
    pub sizes: Vec<usize>,
    pub inputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NormsSpec {
    pub order: Option<f64>,
    pub p: Option<f64>,
    pub field: Option<String>,
}

/// One run: a command, its inputs and where its artifacts go.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub kernel: Option<KernelSpec>,
    pub grid: Option<GridSpec>,
    pub orders: Option<OrdersSpec>,
    pub localization: Option<LocalizationSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub bootstrap: Option<BootstrapSpec>,
    pub plap: Option<PlapConfig>,
    pub field: Option<String>,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub norms: NormsSpec,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn config_error(source: &str, text: &str, e: toml::de::Error) -> Error {
    let location = match e.span() {
        Some(sp) => format!("{source}:{}", text[..sp.start.min(text.len())].matches('\n').count() + 1),
        None => source.to_string(),
    };
    Error::Config { location, message: e.message().trim().to_string() }
}

pub fn missing(field: &str) -> Error {
    Error::Config { location: field.to_string(), message: "missing required section or key".into() }
}

impl RunConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(Error::Config { location: source.to_string(), message: "empty configuration".into() });
        }
        toml::from_str(text).map_err(|e| config_error(source, text, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn kernel_spec(&self) -> Result<&KernelSpec> {
        self.kernel.as_ref().ok_or_else(|| missing("kernel"))
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        let g = self.grid.as_ref().ok_or_else(|| missing("grid"))?;
        if let Some(k) = &self.kernel {
            if k.dim != g.n {
                return Err(Error::Config { location: "grid.n".into(), message: format!("differs from kernel.dim = {}", k.dim) });
            }
        }
        TorusGrid::new(g.n, g.size).map_err(|e| Error::Config { location: "grid".into(), message: e.to_string() })
    }

    pub fn orders(&self) -> Result<RegularityOrders> {
        let o = self.orders.as_ref().ok_or_else(|| missing("orders"))?;
        let mut r = RegularityOrders::new(self.kernel_spec()?.s, o.s1, o.p)
            .map_err(|e| Error::Config { location: "orders".into(), message: e.to_string() })?;
        r.t_tilde = o.t_tilde;
        r.validate().map_err(|e| Error::Config { location: "orders.t_tilde".into(), message: e.to_string() })?;
        Ok(r)
    }

    pub fn localization(&self) -> Result<&LocalizationSpec> {
        self.localization.as_ref().ok_or_else(|| missing("localization"))
    }

    pub fn resolve(&self, rel: &str) -> PathBuf {
        self.base_dir.join(rel)
    }
}
