use super::{
    cone_indicator_kernel, constant_kernel, diffeo_kernel, modulated_kernel, Cone, DiffeoOptions, Homothety, Kernel,
    Outside, SineMap, TableAxis, TableKernel,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// Kernel description in the config language.
///
/// ```toml
/// family = "cone"
/// dim = 2
/// s = 0.5
/// eta = 1.0
/// upper = 1.0
/// axis = [1.0, 0.0]
/// half_angle = 0.7853981633974483
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub family: String,
    #[serde(default = "one")]
    pub dim: usize,
    pub s: f64,
    pub value: Option<f64>,
    pub eta: Option<f64>,
    pub upper: Option<f64>,
    pub axis: Option<Vec<f64>>,
    pub half_angle: Option<f64>,
    pub symmetric: Option<bool>,
    pub outside: Option<String>,
    pub map: Option<String>,
    pub factor: Option<f64>,
    pub amplitude: Option<f64>,
    pub frequency: Option<f64>,
    pub modulation_axis: Option<usize>,
    pub table_axes: Option<Vec<TableAxis>>,
    pub values: Option<Vec<f64>>,
    pub field: Option<String>,
    pub p: Option<f64>,
    pub shift: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

fn missing(field: &str) -> Error {
    Error::Config { location: field.to_string(), message: "required for this family".into() }
}

pub(crate) fn toml_error(source: &str, text: &str, e: toml::de::Error) -> Error {
    let location = match e.span() {
        Some(sp) => {
            let line = text[..sp.start.min(text.len())].matches('\n').count() + 1;
            format!("{source}:{line}")
        }
        None => source.to_string(),
    };
    Error::Config { location, message: e.message().to_string() }
}

impl KernelSpec {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| toml_error("kernel", text, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| toml_error(&path.display().to_string(), &text, e))
    }

    fn cone(&self) -> Result<Cone> {
        match (&self.axis, self.half_angle) {
            (Some(a), Some(l)) => Cone::cap(self.dim, a, l, self.symmetric.unwrap_or(true)),
            (None, None) => Ok(Cone::full(self.dim)),
            (None, _) => Err(missing("axis")),
            (_, None) => Err(missing("half_angle")),
        }
    }

    /// Builds the kernel; `base_dir` resolves relative field paths.
    pub fn build(&self, base_dir: &Path) -> Result<Kernel> {
        match self.family.as_str() {
            "constant" => constant_kernel(self.value.unwrap_or(1.0), self.s, self.dim),
            "cone" => {
                let eta = self.eta.ok_or_else(|| missing("eta"))?;
                let upper = self.upper.unwrap_or(eta);
                let outside = match self.outside.as_deref().unwrap_or("zero") {
                    "zero" => Outside::Zero,
                    "eta" => Outside::Eta,
                    other => {
                        return Err(Error::Config { location: "outside".into(), message: format!("unknown value {other}") })
                    }
                };
                cone_indicator_kernel(self.cone()?, eta, upper, self.s, outside)
            }
            "modulated" => modulated_kernel(
                self.value.unwrap_or(1.0),
                self.amplitude.ok_or_else(|| missing("amplitude"))?,
                self.frequency.unwrap_or(1.0),
                self.modulation_axis.unwrap_or(0),
                self.s,
                self.dim,
            ),
            "diffeo" => {
                let map: Arc<dyn super::Map> = match self.map.as_deref().unwrap_or("identity") {
                    "identity" => Arc::new(Homothety { dim: self.dim, factor: 1.0 }),
                    "homothety" => Arc::new(Homothety { dim: self.dim, factor: self.factor.ok_or_else(|| missing("factor"))? }),
                    "sine" => Arc::new(SineMap { dim: self.dim, amplitude: self.amplitude.ok_or_else(|| missing("amplitude"))? }),
                    other => return Err(Error::Config { location: "map".into(), message: format!("unknown map {other}") }),
                };
                diffeo_kernel(map, self.s, DiffeoOptions::default())
            }
            "custom_table" => {
                let axes = self.table_axes.clone().ok_or_else(|| missing("table_axes"))?;
                let values = self.values.clone().ok_or_else(|| missing("values"))?;
                let cone_eta = match self.eta {
                    Some(e) => Some((self.cone()?, e)),
                    None => None,
                };
                TableKernel::new(self.dim, axes, values)?.into_kernel(self.s, cone_eta)
            }
            "plap_effective" => {
                let field = self.field.as_ref().ok_or_else(|| missing("field"))?;
                let (u, _) = crate::torus_field::read_field(&base_dir.join(field))?;
                let p = self.p.ok_or_else(|| missing("p"))?;
                let shift = self.shift.clone().unwrap_or_else(|| vec![0.0; u.grid.dim()]);
                let origin = vec![0.0; u.grid.dim()];
                let cert = crate::plap_lab::cone_certificate(&u, &origin, &shift, p, crate::plap_lab::CONE_FLOOR)?;
                crate::plap_lab::effective_kernel(&u, &shift, p)?.to_kernel(self.s, cert.cone, cert.eta_eff)
            }
            other => Err(Error::Config { location: "family".into(), message: format!("unknown family {other}") }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cone() {
        let s = KernelSpec::parse("family = \"cone\"\ndim = 2\ns = 0.5\neta = 1.0\naxis = [1.0, 0.0]\nhalf_angle = 0.5\n").unwrap();
        let k = s.build(Path::new(".")).unwrap();
        assert_eq!(k.eval(&[0.0, 0.0], 0.0, &[1.0, 0.0]), 1.0);
        assert_eq!(k.eval(&[0.0, 0.0], 0.0, &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn unknown_field_reports_line() {
        let err = KernelSpec::parse("family = \"cone\"\ns = 0.5\nbogus = 3\n").unwrap_err();
        match err {
            Error::Config { location, .. } => assert_eq!(location, "kernel:3"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_parameter_names_field() {
        let s = KernelSpec::parse("family = \"modulated\"\ns = 0.5\n").unwrap();
        assert!(matches!(s.build(Path::new(".")), Err(Error::Config { location, .. }) if location == "amplitude"));
    }
}
