//! Scenario schema: one JSON file declares the ambient manifold, one or two
//! solenoid models, the task, and its numeric parameters. The file is the
//! whole input; command-line flags only override depth, quadrature order,
//! seed, and the report directory.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;
use solenoid_core::cantor::{GapSchedule, ReturnMap};
use solenoid_core::{
    Address, AmbientManifold, CantorTransversal, DifferentialForm, FiberEmbedding, Homotopy,
    LinearDirections, MeasureKind, Profile, Result, SolenoidError, SolenoidModel,
    TransversalKind, TrigPoly,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CurrentEval,
    RsClass,
    StokesCheck,
    HomotopyCheck,
    Pairing,
    Exhaustion,
    ThomPairing,
    AePairing,
    Perturb,
    TangencyDemo,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::CurrentEval => "current-eval",
            Task::RsClass => "rs-class",
            Task::StokesCheck => "stokes-check",
            Task::HomotopyCheck => "homotopy-check",
            Task::Pairing => "pairing",
            Task::Exhaustion => "exhaustion",
            Task::ThomPairing => "thom-pairing",
            Task::AePairing => "ae-pairing",
            Task::Perturb => "perturb",
            Task::TangencyDemo => "tangency-demo",
        }
    }
}

fn default_depth() -> usize {
    8
}

fn default_quad_order() -> usize {
    64
}

fn default_mass() -> f64 {
    1.0
}

fn default_out() -> PathBuf {
    PathBuf::from("reports")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub task: Task,
    pub ambient: AmbientSpec,
    pub models: Vec<ModelSpec>,
    /// Form to evaluate the current against (current-eval).
    #[serde(default)]
    pub form: Option<FormSpec>,
    /// Homotopies to test class invariance under (homotopy-check).
    #[serde(default)]
    pub homotopies: Vec<HomotopySpec>,
    /// Working transversal depth for intersection tasks.
    #[serde(default = "default_depth")]
    pub depth: usize,
    /// Leafwise quadrature order.
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default)]
    pub seed: u64,
    /// Task-specific tolerance: null-transversality mass tolerance for
    /// ae-pairing, default 1e-3.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Exhaustion radius schedule.
    #[serde(default)]
    pub radii: Vec<f64>,
    /// Leaf base points for the exhaustion windows, one per model.
    #[serde(default)]
    pub bases: Vec<Vec<f64>>,
    /// Thom tube width schedule.
    #[serde(default)]
    pub rhos: Vec<f64>,
    /// Coordinate axis of the dual circle (thom-pairing).
    #[serde(default)]
    pub axis: Option<usize>,
    /// Position of the dual circle on that axis (thom-pairing).
    #[serde(default)]
    pub center: Option<f64>,
    /// Perturbation sup-norm budget (perturb).
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Retry budget per box (perturb).
    #[serde(default)]
    pub max_samples: Option<usize>,
    /// Number of random test forms (stokes-check).
    #[serde(default)]
    pub form_count: Option<usize>,
    /// Frequency cutoff of the random test forms (stokes-check).
    #[serde(default)]
    pub max_frequency: Option<i32>,
    /// Run the fat-Cantor obstruction certificate (tangency-demo).
    #[serde(default)]
    pub certificate: bool,
    /// Number of random perturbations to re-certify (tangency-demo).
    #[serde(default)]
    pub perturbations: usize,
    /// Sup-norm of those random perturbations, default 0.01.
    #[serde(default)]
    pub perturbation_size: Option<f64>,
    /// Report directory.
    #[serde(default = "default_out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum AmbientSpec {
    Torus { n: usize },
    Plane { x: (f64, f64), y: (f64, f64) },
}

impl AmbientSpec {
    pub fn build(&self) -> AmbientManifold {
        match self {
            AmbientSpec::Torus { n } => AmbientManifold::Torus { n: *n },
            AmbientSpec::Plane { x, y } => AmbientManifold::PlaneRegion { x: *x, y: *y },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyTag {
    Linear,
    Suspension,
    Graph,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: FamilyTag,
    #[serde(default)]
    pub slope: Option<f64>,
    #[serde(default)]
    pub columns: Option<Vec<Vec<i64>>>,
    #[serde(default)]
    pub offset: Option<Vec<f64>>,
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub coupling: Option<TrigSpec>,
    #[serde(default)]
    pub return_map: Option<ReturnMapSpec>,
    pub transversal: TransversalSpec,
    pub depth: usize,
    pub measure: MeasureSpec,
    #[serde(default = "default_mass")]
    pub mass: f64,
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub shifts: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TransversalSpec {
    /// The whole fiber interval, dyadically subdivided.
    Full,
    /// Middle-`ratio` Cantor set (measure zero).
    Middle { ratio: f64 },
    /// Fat Cantor set with geometric gap schedule `c 4^{-d}`.
    Fat { c: f64 },
    /// A single point: the transversal of an embedded submanifold.
    Atom { point: f64 },
}

impl TransversalSpec {
    fn kind(&self) -> TransversalKind {
        match self {
            TransversalSpec::Full => TransversalKind::FullInterval,
            TransversalSpec::Middle { ratio } => TransversalKind::MiddleCantor { ratio: *ratio },
            TransversalSpec::Fat { c } => TransversalKind::FatCantor {
                schedule: GapSchedule::Geometric { c: *c },
            },
            TransversalSpec::Atom { point } => TransversalKind::Atom { point: *point },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub enum MeasureSpec {
    #[serde(rename = "lebesgue")]
    Lebesgue,
    #[serde(rename = "bernoulli")]
    Bernoulli(f64),
}

impl MeasureSpec {
    fn kind(&self) -> MeasureKind {
        match self {
            MeasureSpec::Lebesgue => MeasureKind::LebesgueRestricted,
            MeasureSpec::Bernoulli(p) => MeasureKind::Bernoulli { p: *p },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub enum ReturnMapSpec {
    #[serde(rename = "identity")]
    Identity,
    #[serde(rename = "odometer")]
    Odometer,
    #[serde(rename = "permutation")]
    Permutation { prefix_depth: usize, map: Vec<u32> },
}

impl ReturnMapSpec {
    fn build(&self) -> ReturnMap {
        match self {
            ReturnMapSpec::Identity => ReturnMap::Identity,
            ReturnMapSpec::Odometer => ReturnMap::Odometer,
            ReturnMapSpec::Permutation { prefix_depth, map } => ReturnMap::Permutation {
                prefix_depth: *prefix_depth,
                map: map.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub enum ProfileSpec {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "poly")]
    Poly(Vec<f64>),
    #[serde(rename = "trig")]
    Trig(TrigSpec),
}

impl ProfileSpec {
    fn build(&self) -> Profile {
        match self {
            ProfileSpec::Zero => Profile::constant_zero(),
            ProfileSpec::Poly(c) => Profile::Poly(c.clone()),
            ProfileSpec::Trig(t) => Profile::Trig(t.build()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    pub n: usize,
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub harmonics: Vec<HarmonicSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicSpec {
    pub freq: Vec<i32>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl TrigSpec {
    pub fn build(&self) -> TrigPoly {
        let mut p = TrigPoly::constant(self.n, self.constant);
        for h in &self.harmonics {
            p.add_assign(&TrigPoly::harmonic(self.n, &h.freq, h.cos, h.sin));
        }
        p
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormSpec {
    pub n: usize,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub axes: Vec<usize>,
    pub poly: TrigSpec,
}

impl FormSpec {
    pub fn build(&self) -> Result<DifferentialForm> {
        let degree = self
            .components
            .first()
            .map(|c| c.axes.len())
            .ok_or_else(|| SolenoidError::Parameter("form needs at least one component".into()))?;
        let mut form = DifferentialForm::zero(self.n, degree);
        for c in &self.components {
            if c.axes.len() != degree {
                return Err(SolenoidError::DegreeMismatch {
                    expected: degree,
                    got: c.axes.len(),
                });
            }
            form.add_assign(&DifferentialForm::from_component(
                self.n,
                &c.axes,
                c.poly.build(),
            ));
        }
        Ok(form)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum HomotopySpec {
    Bump { amplitude: f64, frequency: i32 },
    Shear { amplitude: f64, frequency: i32 },
    Translation { v: Vec<f64> },
}

impl HomotopySpec {
    pub fn name(&self) -> &'static str {
        match self {
            HomotopySpec::Bump { .. } => "bump",
            HomotopySpec::Shear { .. } => "shear",
            HomotopySpec::Translation { .. } => "translation",
        }
    }

    pub fn build(&self) -> Homotopy {
        match self {
            HomotopySpec::Bump {
                amplitude,
                frequency,
            } => Homotopy::Bump {
                amplitude: *amplitude,
                frequency: *frequency,
            },
            HomotopySpec::Shear {
                amplitude,
                frequency,
            } => Homotopy::Shear {
                amplitude: *amplitude,
                frequency: *frequency,
            },
            HomotopySpec::Translation { v } => Homotopy::Translation { v: v.clone() },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
}

impl ModelSpec {
    fn forbid(&self, present: bool, key: &str) -> Result<()> {
        if present {
            return Err(SolenoidError::Parameter(format!(
                "key `{key}` does not apply to a {:?} family",
                self.family
            )));
        }
        Ok(())
    }

    pub fn build(&self, ambient: &AmbientManifold) -> Result<SolenoidModel> {
        let transversal = CantorTransversal::build(
            self.transversal.kind(),
            self.depth,
            self.measure.kind(),
            self.mass,
        )?;
        let embedding =
            FiberEmbedding::new(self.embedding.axis, self.embedding.lo, self.embedding.hi)?;
        let mut model = match self.family {
            FamilyTag::Linear => {
                self.forbid(self.profile.is_some(), "profile")?;
                self.forbid(self.coupling.is_some(), "coupling")?;
                self.forbid(self.return_map.is_some(), "return_map")?;
                let directions = match (&self.slope, &self.columns) {
                    (Some(a), None) => LinearDirections::Slope(*a),
                    (None, Some(cols)) => LinearDirections::Integer(cols.clone()),
                    _ => {
                        return Err(SolenoidError::Parameter(
                            "a linear family needs exactly one of `slope` or `columns`".into(),
                        ))
                    }
                };
                let offset = self
                    .offset
                    .clone()
                    .unwrap_or_else(|| vec![0.0; ambient.dim()]);
                SolenoidModel::linear(ambient.clone(), directions, offset, transversal, embedding)?
            }
            FamilyTag::Suspension => {
                self.forbid(self.slope.is_some(), "slope")?;
                self.forbid(self.columns.is_some(), "columns")?;
                self.forbid(self.offset.is_some(), "offset")?;
                self.forbid(self.profile.is_some(), "profile")?;
                self.forbid(self.coupling.is_some(), "coupling")?;
                let map = self.return_map.as_ref().ok_or_else(|| {
                    SolenoidError::Parameter("a suspension family needs `return_map`".into())
                })?;
                SolenoidModel::suspension(transversal, map.build(), embedding)?
            }
            FamilyTag::Graph => {
                self.forbid(self.slope.is_some(), "slope")?;
                self.forbid(self.columns.is_some(), "columns")?;
                self.forbid(self.offset.is_some(), "offset")?;
                self.forbid(self.return_map.is_some(), "return_map")?;
                let profile = self.profile.as_ref().ok_or_else(|| {
                    SolenoidError::Parameter("a graph family needs `profile`".into())
                })?;
                match &self.coupling {
                    None => SolenoidModel::graph(
                        ambient.clone(),
                        profile.build(),
                        transversal,
                        embedding,
                    )?,
                    Some(g) => SolenoidModel::graph_coupled(
                        ambient.clone(),
                        profile.build(),
                        g.build(),
                        transversal,
                        embedding,
                    )?,
                }
            }
        };
        for (key, value) in &self.shifts {
            model.shifts.insert(Address::parse(key)?, *value);
        }
        Ok(model)
    }
}
