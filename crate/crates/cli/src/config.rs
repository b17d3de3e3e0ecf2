//! Run configuration: one JSON schema shared by every solver command.

use std::path::Path;
use std::sync::Arc;

use bundletc::manifolds::{zoo, RiemannianManifold};
use bundletc::variational::{Anisotropic, Boundary, Domain, Kinetic, KineticMinusPotential, Lagrangian, Potential};
use serde::Deserialize;
use serde_path_to_error::Segment;

use crate::failure::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; when present it must name the command being run.
    pub command: Option<String>,
    /// Domain manifold `M`. Defaults to Euclidean space of the grid's dimension.
    pub manifold: Option<ManifoldSpec>,
    pub target: ManifoldSpec,
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub lagrangian: LagrangianSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub boundary: BoundarySpec,
    /// Accepted so one file can drive every command; the solver commands
    /// are deterministic and draw no random numbers.
    #[serde(default)]
    #[allow(dead_code)]
    pub seed: u64,
    initial: Option<RawInitial>,
    #[serde(default)]
    variations: Vec<RawVariation>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldSpec {
    pub name: String,
    #[serde(default)]
    pub params: ManifoldParams,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldParams {
    pub dim: Option<usize>,
    pub radius: Option<f64>,
}

/// Integration domain, `{"type": "interval", a, b, n}` or
/// `{"type": "rectangle", grid}`. Parsed flat so schema errors can point at
/// the offending field.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(rename = "type")]
    pub kind: DomainKind,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub n: Option<usize>,
    pub grid: Option<RectangleGrid>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

/// Each axis is `[lo, hi, intervals]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectangleGrid {
    pub x: (f64, f64, usize),
    pub y: (f64, f64, usize),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum LagrangianSpec {
    #[default]
    Kinetic,
    /// `½|∇φ|² − ½k|s − c|²`.
    KineticMinusPotential(PotentialParams),
    /// `½ Q^{ij} ⟨∂ᵢφ, ∂ⱼφ⟩` with a symmetric positive matrix `Q`, row-major.
    Anisotropic(AnisotropicParams),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialParams {
    pub stiffness: f64,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropicParams {
    pub q: Vec<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// Integration step of the geodesic solver.
    pub step: Option<f64>,
    /// Final time of the geodesic solver.
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Flow steps, or integration steps of shot geodesics.
    pub steps: Option<usize>,
    /// Flow time step.
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BoundarySpec {
    #[default]
    Fixed,
    Free,
}

impl From<BoundarySpec> for Boundary {
    fn from(b: BoundarySpec) -> Self {
        match b {
            BoundarySpec::Fixed => Boundary::Fixed,
            BoundarySpec::Free => Boundary::Free,
        }
    }
}

/// Initial data: a geodesic state, or a map `M → S` sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    /// Point and velocity, for `geodesic`.
    State { point: Vec<f64>, velocity: Vec<f64> },
    /// Identity of `M = S` plus a bump vanishing on the grid boundary.
    PerturbedIdentity { amplitude: f64 },
    /// Straight coordinate segment from `from` to `to`, with the first
    /// coordinate bent by `bend·sin(π t̂)`.
    Segment { from: Vec<f64>, to: Vec<f64>, bend: f64 },
    /// Unit-sphere great circle through `(π/2, 0)` tilted by `tilt`.
    GreatCircle { tilt: f64, speed: f64 },
    /// Unit-sphere equator bent by `amplitude·sin(ω t)`.
    BentEquator { amplitude: f64, omega: f64 },
    /// Geodesic `t ↦ exp(point, t·velocity)`.
    Geodesic { point: Vec<f64>, velocity: Vec<f64> },
    /// Geodesic joining `from` and `to` over the interval, found by shooting.
    BoundaryValue { from: Vec<f64>, to: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    State,
    PerturbedIdentity,
    Segment,
    GreatCircle,
    BentEquator,
    Geodesic,
    BoundaryValue,
}

/// Flat form of [`InitialSpec`] as it appears in JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInitial {
    #[serde(rename = "type")]
    pub kind: InitialKind,
    pub point: Option<Vec<f64>>,
    pub velocity: Option<Vec<f64>>,
    pub amplitude: Option<f64>,
    pub from: Option<Vec<f64>>,
    pub to: Option<Vec<f64>>,
    pub bend: Option<f64>,
    pub tilt: Option<f64>,
    pub speed: Option<f64>,
    pub omega: Option<f64>,
}

/// A variation field along the configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum VariationSpec {
    /// Constant coordinate direction times `Π sinᵖ` over the grid axes.
    Bump { direction: Vec<f64>, power: i32 },
    /// Constant coordinate direction everywhere (free boundaries).
    Constant { direction: Vec<f64> },
    /// `sin(mπ t̂)` times the unit normal of a curve in a surface.
    Normal { mode: usize },
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum VariationKind {
    Bump,
    Constant,
    Normal,
}

/// Flat form of [`VariationSpec`] as it appears in JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawVariation {
    #[serde(rename = "type")]
    pub kind: VariationKind,
    pub direction: Option<Vec<f64>>,
    pub power: Option<i32>,
    pub mode: Option<usize>,
}

/// Checks that exactly the fields a variant uses are present.
struct Fields<'a> {
    at: &'a str,
    kind: &'a str,
    present: Vec<(&'static str, bool)>,
}

impl<'a> Fields<'a> {
    fn new(at: &'a str, kind: &'a str, present: Vec<(&'static str, bool)>) -> Self {
        Fields { at, kind, present }
    }

    /// `required` must be present; anything else present must be `optional`.
    fn allow(&self, required: &[&str], optional: &[&str]) -> Result<(), Failure> {
        for &(name, here) in &self.present {
            if here && !required.contains(&name) && !optional.contains(&name) {
                return Failure::schema_err(
                    format!("{}/{name}", self.at),
                    format!("`{name}` does not apply to type `{}`", self.kind),
                );
            }
            if !here && required.contains(&name) {
                return Failure::schema_err(
                    format!("{}/{name}", self.at),
                    format!("type `{}` needs field `{name}`", self.kind),
                );
            }
        }
        Ok(())
    }
}

fn kind_name<K: std::fmt::Debug>(k: K) -> String {
    // snake_case of the variant name, matching the serde renaming
    let mut out = String::new();
    for (i, c) in format!("{k:?}").chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

impl RawInitial {
    pub fn resolve(&self, at: &str) -> Result<InitialSpec, Failure> {
        use InitialKind as K;
        let kind = kind_name(self.kind);
        let f = Fields::new(
            at,
            &kind,
            vec![
                ("point", self.point.is_some()),
                ("velocity", self.velocity.is_some()),
                ("amplitude", self.amplitude.is_some()),
                ("from", self.from.is_some()),
                ("to", self.to.is_some()),
                ("bend", self.bend.is_some()),
                ("tilt", self.tilt.is_some()),
                ("speed", self.speed.is_some()),
                ("omega", self.omega.is_some()),
            ],
        );
        let take = |v: &Option<Vec<f64>>| v.clone().unwrap_or_default();
        Ok(match self.kind {
            K::State | K::Geodesic => {
                f.allow(&["point", "velocity"], &[])?;
                let (point, velocity) = (take(&self.point), take(&self.velocity));
                if self.kind == K::State {
                    InitialSpec::State { point, velocity }
                } else {
                    InitialSpec::Geodesic { point, velocity }
                }
            }
            K::PerturbedIdentity => {
                f.allow(&[], &["amplitude"])?;
                InitialSpec::PerturbedIdentity { amplitude: self.amplitude.unwrap_or(0.0) }
            }
            K::Segment => {
                f.allow(&["from", "to"], &["bend"])?;
                InitialSpec::Segment { from: take(&self.from), to: take(&self.to), bend: self.bend.unwrap_or(0.0) }
            }
            K::GreatCircle => {
                f.allow(&["tilt", "speed"], &[])?;
                InitialSpec::GreatCircle { tilt: self.tilt.unwrap_or(0.0), speed: self.speed.unwrap_or(0.0) }
            }
            K::BentEquator => {
                f.allow(&["amplitude", "omega"], &[])?;
                InitialSpec::BentEquator { amplitude: self.amplitude.unwrap_or(0.0), omega: self.omega.unwrap_or(0.0) }
            }
            K::BoundaryValue => {
                f.allow(&["from", "to"], &[])?;
                InitialSpec::BoundaryValue { from: take(&self.from), to: take(&self.to) }
            }
        })
    }
}

impl RawVariation {
    pub fn resolve(&self, at: &str) -> Result<VariationSpec, Failure> {
        let kind = kind_name(self.kind);
        let f = Fields::new(
            at,
            &kind,
            vec![
                ("direction", self.direction.is_some()),
                ("power", self.power.is_some()),
                ("mode", self.mode.is_some()),
            ],
        );
        let direction = self.direction.clone().unwrap_or_default();
        Ok(match self.kind {
            VariationKind::Bump => {
                f.allow(&["direction"], &["power"])?;
                VariationSpec::Bump { direction, power: self.power.unwrap_or(4) }
            }
            VariationKind::Constant => {
                f.allow(&["direction"], &[])?;
                VariationSpec::Constant { direction }
            }
            VariationKind::Normal => {
                f.allow(&["mode"], &[])?;
                VariationSpec::Normal { mode: self.mode.unwrap_or(0) }
            }
        })
    }
}

/// Renders a deserialization path as a JSON pointer.
fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let at = pointer(e.path());
            Failure::schema(at, e.into_inner().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Rejects a config written for a different command.
    pub fn expect_command(&self, name: &str) -> Result<(), Failure> {
        match &self.command {
            Some(c) if c != name => Failure::schema_err("/command", format!("config is for `{c}`, not `{name}`")),
            _ => Ok(()),
        }
    }

    pub fn target(&self) -> Result<Arc<RiemannianManifold<f64>>, Failure> {
        self.target.build().map_err(|e| e.at("/target"))
    }

    pub fn domain(&self) -> Result<Domain<f64>, Failure> {
        let Some(d) = &self.domain else {
            return Failure::schema_err("/domain", "missing field `domain`");
        };
        let present =
            vec![("a", d.a.is_some()), ("b", d.b.is_some()), ("n", d.n.is_some()), ("grid", d.grid.is_some())];
        let kind = kind_name(d.kind);
        let f = Fields::new("/domain", &kind, present);
        match d.kind {
            DomainKind::Interval => {
                f.allow(&["a", "b", "n"], &[])?;
                Ok(Domain::Interval { a: d.a.unwrap_or(0.0), b: d.b.unwrap_or(0.0), n: d.n.unwrap_or(0) })
            }
            DomainKind::Rectangle => {
                f.allow(&["grid"], &[])?;
                let g = d.grid.as_ref().expect("checked above");
                Ok(Domain::Rectangle { x: g.x, y: g.y })
            }
        }
    }

    /// The domain manifold, named `M` unless configured.
    pub fn manifold(&self, domain: &Domain<f64>) -> Result<Arc<RiemannianManifold<f64>>, Failure> {
        let dim = match domain {
            Domain::Interval { .. } => 1,
            Domain::Rectangle { .. } => 2,
        };
        let m = match &self.manifold {
            Some(spec) => spec.build().map_err(|e| e.at("/manifold"))?,
            None => Arc::new(RiemannianManifold::euclidean(dim).renamed("M")),
        };
        if m.dim() != dim {
            return Failure::schema_err(
                "/manifold",
                format!("manifold has dimension {} but the domain grid has dimension {dim}", m.dim()),
            );
        }
        Ok(m)
    }

    pub fn lagrangian(
        &self,
        m: Arc<RiemannianManifold<f64>>,
        s: Arc<RiemannianManifold<f64>>,
    ) -> Result<Arc<dyn Lagrangian<f64>>, Failure> {
        Ok(match &self.lagrangian {
            LagrangianSpec::Kinetic => Arc::new(Kinetic::new(m, s)),
            LagrangianSpec::KineticMinusPotential(p) => {
                if p.center.len() != s.dim() {
                    return Failure::schema_err(
                        "/lagrangian/params/center",
                        format!("center needs {} coordinates", s.dim()),
                    );
                }
                let v = Potential::quadratic(p.stiffness, p.center.clone());
                Arc::new(KineticMinusPotential::new(m, s, v))
            }
            LagrangianSpec::Anisotropic(p) => {
                Arc::new(Anisotropic::new(m, s, p.q.clone()).map_err(|e| Failure::from(e).at("/lagrangian/params/q"))?)
            }
        })
    }

    pub fn initial(&self) -> Result<InitialSpec, Failure> {
        match &self.initial {
            Some(raw) => raw.resolve("/initial"),
            None => Failure::schema_err("/initial", "missing field `initial`"),
        }
    }

    pub fn variations(&self) -> Result<Vec<VariationSpec>, Failure> {
        self.variations.iter().enumerate().map(|(k, raw)| raw.resolve(&format!("/variations/{k}"))).collect()
    }
}

impl ManifoldSpec {
    pub fn build(&self) -> Result<Arc<RiemannianManifold<f64>>, Failure> {
        let params: Vec<f64> = match self.name.to_ascii_lowercase().as_str() {
            "euclidean" => self.params.dim.map(|d| vec![d as f64]).unwrap_or_default(),
            "sphere2" => self.params.radius.into_iter().collect(),
            _ => Vec::new(),
        };
        Ok(Arc::new(zoo::<f64>(&self.name, &params)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pointer_of(text: &str) -> String {
        match RunConfig::parse(text) {
            Err(Failure::Schema { pointer, .. }) => pointer,
            other => panic!("expected a schema error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::parse(r#"{"target": {"name": "sphere2"}}"#).unwrap();
        assert!(matches!(c.lagrangian, LagrangianSpec::Kinetic));
        assert_eq!(c.boundary, BoundarySpec::Fixed);
        assert_eq!(c.seed, 0);
        assert!(c.variations().unwrap().is_empty());
    }

    #[test]
    fn lagrangians_are_named_with_params() {
        let c = RunConfig::parse(
            r#"{"target": {"name": "sphere2"},
                "lagrangian": {"name": "kinetic_minus_potential", "params": {"stiffness": 2.0, "center": [1.0, 0.5]}}}"#,
        )
        .unwrap();
        match c.lagrangian {
            LagrangianSpec::KineticMinusPotential(p) => assert_eq!(p.center, [1.0, 0.5]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pointers_escape_special_keys() {
        assert_eq!(pointer_of(r#"{"target": {"name": "sphere2"}, "a/b~c": 1}"#), "/a~1b~0c");
    }

    #[test]
    fn pointers_index_into_arrays() {
        let text = r#"{"target": {"name": "sphere2"},
                      "variations": [{"type": "constant", "direction": [1, 0]}, {"type": "bump", "power": "x"}]}"#;
        assert_eq!(pointer_of(text), "/variations/1/power");
    }

    #[test]
    fn variants_reject_foreign_fields() {
        let c = RunConfig::parse(
            r#"{"target": {"name": "sphere2"}, "variations": [{"type": "normal", "mode": 1, "power": 2}]}"#,
        )
        .unwrap();
        match c.variations() {
            Err(Failure::Schema { pointer, .. }) => assert_eq!(pointer, "/variations/0/power"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_command_is_rejected() {
        let c = RunConfig::parse(r#"{"command": "harmonic", "target": {"name": "sphere2"}}"#).unwrap();
        assert!(c.expect_command("harmonic").is_ok());
        assert!(c.expect_command("geodesic").is_err());
    }
}
