//! Solenoid models: families of measured, oriented solenoids immersed in a
//! flat torus or a plane region, with their transversal structure.
//!
//! Three constructive families cover everything downstream:
//! linear torus foliations (irrational Kronecker lines on T^2, or compact
//! integer-direction leaves on T^2/T^4), Cantor suspensions over a return
//! map, and graph solenoids (a profile curve carried over a Cantor set of
//! fiber offsets). A fourth, derived family holds 0-dimensional solenoids
//! produced by slicing with a submanifold.
//!
//! Geometry conventions: leaves of 1-dimensional families are parametrised
//! by a base coordinate x over one period window; `velocity` is the
//! unnormalised tangent d(point)/dx used in leaf integrals, while
//! `leaf_frame` returns unit vectors used for transversality margins.

use std::collections::BTreeMap;

use crate::cantor::{Address, CantorTransversal, ReturnMap};
use crate::error::{Result, SolenoidError};
use crate::forms::TrigPoly;
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq)]
pub enum AmbientManifold {
    /// Flat torus, coordinates mod 1. Intersection operations require
    /// n = 2 or 4; derived slices may live on n = 1 or 3.
    Torus { n: usize },
    /// Open box in the plane, for the non-compact tangency demonstrations.
    PlaneRegion { x: (f64, f64), y: (f64, f64) },
}

impl AmbientManifold {
    pub fn dim(&self) -> usize {
        match self {
            AmbientManifold::Torus { n } => *n,
            AmbientManifold::PlaneRegion { .. } => 2,
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, AmbientManifold::Torus { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AmbientManifold::Torus { n } => {
                if !(1..=4).contains(n) {
                    return Err(SolenoidError::Construction(format!(
                        "torus dimension {n} outside 1..=4"
                    )));
                }
            }
            AmbientManifold::PlaneRegion { x, y } => {
                if !(x.0 < x.1 && y.0 < y.1) {
                    return Err(SolenoidError::Construction(
                        "plane region has empty extent".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Reduce mod 1 on tori; identity on the plane.
    pub fn wrap(&self, p: &mut [f64]) {
        if self.is_torus() {
            for c in p.iter_mut() {
                *c = c.rem_euclid(1.0);
            }
        }
    }

    /// Distance between coordinates along one axis (circle metric on tori).
    pub fn axis_distance(&self, a: f64, b: f64) -> f64 {
        if self.is_torus() {
            let d = (a - b).rem_euclid(1.0);
            d.min(1.0 - d)
        } else {
            (a - b).abs()
        }
    }
}

/// Affine placement of the abstract transversal [0,1] into one fiber axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberEmbedding {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
}

impl FiberEmbedding {
    pub fn new(axis: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(SolenoidError::Construction(format!(
                "embedding range [{lo}, {hi}] is empty or non-finite"
            )));
        }
        Ok(FiberEmbedding { axis, lo, hi })
    }

    pub fn position(&self, u: f64) -> f64 {
        self.lo + u * (self.hi - self.lo)
    }

    pub fn interval(&self, (a, b): (f64, f64)) -> (f64, f64) {
        (self.position(a), self.position(b))
    }
}

/// Leaf profile of a graph solenoid.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// 1-periodic trigonometric polynomial (torus-compatible).
    Trig(TrigPoly),
    /// Polynomial in x, for plane-region models; coefficients low-to-high.
    Poly(Vec<f64>),
}

impl Profile {
    pub fn constant_zero() -> Self {
        Profile::Poly(vec![])
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Trig(p) => p.evaluate(&[x]),
            Profile::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Profile::Trig(p) => p.partial(0).evaluate(&[x]),
            Profile::Poly(c) => {
                let mut acc = 0.0;
                for k in (1..c.len()).rev() {
                    acc = acc * x + c[k] * k as f64;
                }
                acc
            }
        }
    }

    pub fn eval_interval(&self, x: &Interval) -> Interval {
        match self {
            Profile::Trig(p) => p.evaluate_interval(&[*x]),
            Profile::Poly(c) => c.iter().rev().fold(Interval::point(0.0), |acc, &ck| {
                acc.mul(x).add(&Interval::point(ck))
            }),
        }
    }

    pub fn deriv_interval(&self, x: &Interval) -> Interval {
        match self {
            Profile::Trig(p) => p.partial(0).evaluate_interval(&[*x]),
            Profile::Poly(c) => {
                let mut acc = Interval::point(0.0);
                for k in (1..c.len()).rev() {
                    acc = acc.mul(x).add(&Interval::point(c[k] * k as f64));
                }
                acc
            }
        }
    }

    pub fn second_deriv_interval(&self, x: &Interval) -> Interval {
        match self {
            Profile::Trig(p) => p.partial(0).partial(0).evaluate_interval(&[*x]),
            Profile::Poly(c) => {
                let mut acc = Interval::point(0.0);
                for k in (2..c.len()).rev() {
                    acc = acc
                        .mul(x)
                        .add(&Interval::point(c[k] * (k * (k - 1)) as f64));
                }
                acc
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Profile::Trig(p) => p.max_frequency(0) == 0,
            Profile::Poly(c) => c.len() <= 1,
        }
    }

    /// Is the profile 1-periodic (safe on a torus)?
    pub fn torus_compatible(&self) -> bool {
        matches!(self, Profile::Trig(_)) || self.is_constant()
    }
}

/// Direction data of a linear foliation.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearDirections {
    /// k = 1 Kronecker line on T^2: direction (1, slope), slope irrational
    /// for the dense case. Unit direction (1, slope)/sqrt(1+slope^2).
    Slope(f64),
    /// Integer period vectors (k columns): leaves are compact subtori.
    /// Columns must be independent; for k = 2 also orthogonal, so the
    /// stored unit directions are orthonormal.
    Integer(Vec<Vec<i64>>),
}

impl LinearDirections {
    pub fn leaf_dim(&self) -> usize {
        match self {
            LinearDirections::Slope(_) => 1,
            LinearDirections::Integer(cols) => cols.len(),
        }
    }

    /// Unit direction columns.
    pub fn unit_columns(&self, n: usize) -> Vec<Vec<f64>> {
        match self {
            LinearDirections::Slope(a) => {
                let norm = (1.0 + a * a).sqrt();
                vec![vec![1.0 / norm, *a / norm]]
            }
            LinearDirections::Integer(cols) => cols
                .iter()
                .map(|c| {
                    let norm = (c.iter().map(|&v| (v * v) as f64).sum::<f64>()).sqrt();
                    (0..n).map(|i| c[i] as f64 / norm).collect()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearData {
    pub directions: LinearDirections,
    /// Base point of the foliation; the transversal is embedded relative
    /// to it along the embedding axis.
    pub offset: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuspensionData {
    pub return_map: ReturnMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    pub address: Address,
    pub position: Vec<f64>,
    pub mass: f64,
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Linear(LinearData),
    Suspension(SuspensionData),
    Graph {
        profile: Profile,
        /// Fiber-coupled warp g(x, z): the leaf through height z is
        /// y = profile(x) + z + g(x, z). Breaks the pure product structure;
        /// used to build persistently tangent configurations.
        coupling: Option<TrigPoly>,
    },
    /// Derived 0-dimensional solenoid: weighted signed points.
    Points { samples: Vec<PointSample> },
}

/// Ambient isotopies used as homotopies of the immersion. All act on T^2.
#[derive(Debug, Clone, PartialEq)]
pub enum Homotopy {
    Translation { v: Vec<f64> },
    /// Displace the fiber axis by amplitude * sin(2 pi freq * base).
    Bump { amplitude: f64, frequency: i32 },
    /// Displace the base axis by amplitude * sin(2 pi freq * fiber).
    Shear { amplitude: f64, frequency: i32 },
}

impl Homotopy {
    /// Displacement G(p) with Phi_t(p) = p + t G(p).
    fn displacement(&self, p: &[f64]) -> [f64; 2] {
        match self {
            Homotopy::Translation { v } => [v[0], v[1]],
            Homotopy::Bump {
                amplitude,
                frequency,
            } => [
                0.0,
                amplitude * (std::f64::consts::TAU * *frequency as f64 * p[0]).sin(),
            ],
            Homotopy::Shear {
                amplitude,
                frequency,
            } => [
                amplitude * (std::f64::consts::TAU * *frequency as f64 * p[1]).sin(),
                0.0,
            ],
        }
    }

    /// Jacobian dG(p) applied to a vector.
    fn displacement_jacobian(&self, p: &[f64], v: &[f64]) -> [f64; 2] {
        match self {
            Homotopy::Translation { .. } => [0.0, 0.0],
            Homotopy::Bump {
                amplitude,
                frequency,
            } => {
                let w = std::f64::consts::TAU * *frequency as f64;
                [0.0, amplitude * w * (w * p[0]).cos() * v[0]]
            }
            Homotopy::Shear {
                amplitude,
                frequency,
            } => {
                let w = std::f64::consts::TAU * *frequency as f64;
                [amplitude * w * (w * p[1]).cos() * v[1], 0.0]
            }
        }
    }
}

/// Quintic smoothstep rise on [3/4, 1]: 0 below, C^2 at both knots.
fn blend(x: f64) -> f64 {
    if x <= 0.75 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let u = (x - 0.75) * 4.0;
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

fn blend_deriv(x: f64) -> f64 {
    if !(0.75..1.0).contains(&x) {
        0.0
    } else {
        let u = (x - 0.75) * 4.0;
        4.0 * 30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolenoidModel {
    pub ambient: AmbientManifold,
    pub family: Family,
    pub transversal: CantorTransversal,
    pub embedding: FiberEmbedding,
    /// Fiber shifts applied per clopen cylinder (output of the
    /// transversality perturbation); deepest matching prefix wins.
    pub shifts: BTreeMap<Address, f64>,
    /// Ambient isotopy at a fixed time, when evaluating along a homotopy.
    pub deformation: Option<(Homotopy, f64)>,
}

impl SolenoidModel {
    pub fn linear(
        ambient: AmbientManifold,
        directions: LinearDirections,
        offset: Vec<f64>,
        transversal: CantorTransversal,
        embedding: FiberEmbedding,
    ) -> Result<Self> {
        ambient.validate()?;
        let n = ambient.dim();
        if !ambient.is_torus() {
            return Err(SolenoidError::Construction(
                "linear foliations require a torus ambient".into(),
            ));
        }
        if offset.len() != n {
            return Err(SolenoidError::DimensionMismatch {
                expected: n,
                got: offset.len(),
            });
        }
        if embedding.axis >= n {
            return Err(SolenoidError::Construction(format!(
                "embedding axis {} outside ambient dimension {n}",
                embedding.axis
            )));
        }
        match &directions {
            LinearDirections::Slope(a) => {
                if n != 2 {
                    return Err(SolenoidError::Construction(
                        "slope directions are specific to T^2".into(),
                    ));
                }
                if !a.is_finite() {
                    return Err(SolenoidError::Parameter("slope must be finite".into()));
                }
                if embedding.axis != 1 {
                    return Err(SolenoidError::Construction(
                        "a slope foliation embeds its transversal along x2".into(),
                    ));
                }
            }
            LinearDirections::Integer(cols) => {
                let k = cols.len();
                if k == 0 || k > 2 || (k == 2 && n != 4) {
                    return Err(SolenoidError::Construction(format!(
                        "unsupported linear foliation: k = {k} on T^{n}"
                    )));
                }
                for c in cols {
                    if c.len() != n {
                        return Err(SolenoidError::DimensionMismatch {
                            expected: n,
                            got: c.len(),
                        });
                    }
                    if c.iter().all(|&v| v == 0) {
                        return Err(SolenoidError::Construction(
                            "zero direction column".into(),
                        ));
                    }
                }
                if k == 2 {
                    let dot: i64 = (0..n).map(|i| cols[0][i] * cols[1][i]).sum();
                    if dot != 0 {
                        return Err(SolenoidError::Construction(
                            "plane directions must be orthogonal integer vectors".into(),
                        ));
                    }
                    if cols[0][embedding.axis] != 0 || cols[1][embedding.axis] != 0 {
                        return Err(SolenoidError::Construction(
                            "transversal axis must be transverse to the leaf plane".into(),
                        ));
                    }
                }
            }
        }
        Ok(SolenoidModel {
            ambient,
            family: Family::Linear(LinearData { directions, offset }),
            transversal,
            embedding,
            shifts: BTreeMap::new(),
            deformation: None,
        })
    }

    pub fn suspension(
        transversal: CantorTransversal,
        return_map: ReturnMap,
        embedding: FiberEmbedding,
    ) -> Result<Self> {
        return_map.validate()?;
        if embedding.axis != 1 {
            return Err(SolenoidError::Construction(
                "suspensions embed their transversal along x2".into(),
            ));
        }
        if return_map.prefix_depth() > transversal.depth() {
            return Err(SolenoidError::Construction(
                "return map acts deeper than the transversal".into(),
            ));
        }
        Ok(SolenoidModel {
            ambient: AmbientManifold::Torus { n: 2 },
            family: Family::Suspension(SuspensionData { return_map }),
            transversal,
            embedding,
            shifts: BTreeMap::new(),
            deformation: None,
        })
    }

    pub fn graph(
        ambient: AmbientManifold,
        profile: Profile,
        transversal: CantorTransversal,
        embedding: FiberEmbedding,
    ) -> Result<Self> {
        ambient.validate()?;
        if ambient.dim() != 2 {
            return Err(SolenoidError::Construction(
                "graph solenoids live in 2-dimensional ambients".into(),
            ));
        }
        if ambient.is_torus() && !profile.torus_compatible() {
            return Err(SolenoidError::Construction(
                "a non-periodic profile cannot close up on the torus".into(),
            ));
        }
        if embedding.axis != 1 {
            return Err(SolenoidError::Construction(
                "graph solenoids embed their transversal along x2".into(),
            ));
        }
        Ok(SolenoidModel {
            ambient,
            family: Family::Graph {
                profile,
                coupling: None,
            },
            transversal,
            embedding,
            shifts: BTreeMap::new(),
            deformation: None,
        })
    }

    /// Graph family with a fiber-coupled warp g(x, z) in the two ambient
    /// coordinates; the leaf through height z is y = profile(x) + z + g(x, z).
    pub fn graph_coupled(
        ambient: AmbientManifold,
        profile: Profile,
        coupling: TrigPoly,
        transversal: CantorTransversal,
        embedding: FiberEmbedding,
    ) -> Result<Self> {
        let mut m = SolenoidModel::graph(ambient, profile, transversal, embedding)?;
        if coupling.dimension() != 2 {
            return Err(SolenoidError::Construction(format!(
                "coupling must be a 2-variable polynomial, got {} variables",
                coupling.dimension()
            )));
        }
        if let Family::Graph {
            coupling: slot, ..
        } = &mut m.family
        {
            *slot = Some(coupling);
        }
        Ok(m)
    }

    pub fn points(ambient: AmbientManifold, samples: Vec<PointSample>) -> Result<Self> {
        ambient.validate()?;
        for s in &samples {
            if s.position.len() != ambient.dim() {
                return Err(SolenoidError::DimensionMismatch {
                    expected: ambient.dim(),
                    got: s.position.len(),
                });
            }
        }
        // the transversal tree is carried by the samples themselves
        let transversal = CantorTransversal::build(
            crate::cantor::TransversalKind::Atom { point: 0.0 },
            0,
            crate::cantor::MeasureKind::LebesgueRestricted,
            samples.iter().map(|s| s.mass).sum::<f64>().max(f64::MIN_POSITIVE),
        )?;
        Ok(SolenoidModel {
            ambient,
            family: Family::Points { samples },
            transversal,
            embedding: FiberEmbedding {
                axis: 0,
                lo: 0.0,
                hi: 1.0,
            },
            shifts: BTreeMap::new(),
            deformation: None,
        })
    }

    pub fn leaf_dim(&self) -> usize {
        match &self.family {
            Family::Linear(d) => d.directions.leaf_dim(),
            Family::Suspension(_) | Family::Graph { .. } => 1,
            Family::Points { .. } => 0,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Apply an ambient homotopy at time t (replaces any existing one).
    pub fn at_time(&self, h: &Homotopy, t: f64) -> Result<SolenoidModel> {
        if self.ambient.dim() != 2 {
            return Err(SolenoidError::Unsupported(
                "homotopies are implemented on 2-dimensional ambients".into(),
            ));
        }
        let mut m = self.clone();
        m.deformation = Some((h.clone(), t));
        Ok(m)
    }

    /// Fiber shift for a cylinder: deepest stored prefix of the address.
    pub fn shift_for(&self, addr: &Address) -> f64 {
        let mut best = 0.0;
        let mut best_depth = usize::MAX;
        for (pre, &v) in &self.shifts {
            if pre.is_prefix_of(addr) && (best_depth == usize::MAX || pre.depth() > best_depth)
            {
                best = v;
                best_depth = pre.depth();
            }
        }
        best
    }

    /// Embedded fiber height of a transversal parameter within a cylinder.
    pub fn height(&self, addr: &Address, u: f64) -> f64 {
        self.embedding.position(u) + self.shift_for(addr)
    }

    /// Embedded fiber interval of a cylinder, shift included.
    pub fn height_interval(&self, addr: &Address) -> Result<(f64, f64)> {
        let (a, b) = self.transversal.interval(addr)?;
        let (lo, hi) = self.embedding.interval((a, b));
        let s = self.shift_for(addr);
        Ok((lo + s, hi + s))
    }

    /// Depth-d cylinders with masses and representative parameters.
    pub fn cylinders_at(&self, depth: usize) -> Result<Vec<(Address, f64, f64)>> {
        let mut out = Vec::new();
        for addr in self.transversal.cylinders(depth) {
            let mass = self.transversal.cylinder_measure(&addr)?;
            let u = self.transversal.representative(&addr)?;
            out.push((addr, mass, u));
        }
        Ok(out)
    }

    /// One-period leaf window through the representative of a cylinder
    /// (1-dimensional families only).
    pub fn curve_window(&self, addr: &Address, u: f64) -> Result<CurveWindow> {
        let deform = self.deformation.clone();
        match &self.family {
            Family::Linear(d) => {
                let h = self.height(addr, u);
                match &d.directions {
                    LinearDirections::Slope(a) => Ok(CurveWindow {
                        x_lo: 0.0,
                        x_hi: 1.0,
                        periodic: false,
                        knots: vec![],
                        geom: CurveGeom::Line {
                            start: vec![d.offset[0], h],
                            dir: vec![1.0, *a],
                        },
                        deform,
                    }),
                    LinearDirections::Integer(cols) => {
                        let n = self.ambient.dim();
                        let mut start = d.offset.clone();
                        start[self.embedding.axis] = h;
                        Ok(CurveWindow {
                            x_lo: 0.0,
                            x_hi: 1.0,
                            periodic: true,
                            knots: vec![],
                            geom: CurveGeom::Line {
                                start,
                                dir: (0..n).map(|i| cols[0][i] as f64).collect(),
                            },
                            deform,
                        })
                    }
                }
            }
            Family::Suspension(s) => {
                let y0 = self.height(addr, u);
                let image = s.return_map.apply(addr)?;
                let u1 = self.transversal.representative(&image)?;
                let y1 = self.height(&image, u1);
                Ok(CurveWindow {
                    x_lo: 0.0,
                    x_hi: 1.0,
                    periodic: false,
                    knots: vec![0.75],
                    geom: CurveGeom::SuspensionArc { y0, y1 },
                    deform,
                })
            }
            Family::Graph { profile, coupling } => {
                let h = self.height(addr, u);
                let (x_lo, x_hi, periodic) = match &self.ambient {
                    AmbientManifold::Torus { .. } => (0.0, 1.0, true),
                    AmbientManifold::PlaneRegion { x, .. } => (x.0, x.1, false),
                };
                let warp = coupling
                    .as_ref()
                    .map(|g| g.substitute(1, h).project_out(&[1]));
                Ok(CurveWindow {
                    x_lo,
                    x_hi,
                    periodic,
                    knots: vec![],
                    geom: CurveGeom::GraphArc {
                        profile: profile.clone(),
                        height: h,
                        warp,
                    },
                    deform,
                })
            }
            Family::Points { .. } => Err(SolenoidError::Unsupported(
                "0-dimensional solenoids have no leaf windows".into(),
            )),
        }
    }

    /// One-period plane window (k = 2 linear families only).
    pub fn plane_window(&self, addr: &Address, u: f64) -> Result<PlaneWindow> {
        match &self.family {
            Family::Linear(d) => match &d.directions {
                LinearDirections::Integer(cols) if cols.len() == 2 => {
                    let n = self.ambient.dim();
                    let mut start = d.offset.clone();
                    start[self.embedding.axis] = self.height(addr, u);
                    Ok(PlaneWindow {
                        start,
                        dirs: cols
                            .iter()
                            .map(|c| (0..n).map(|i| c[i] as f64).collect())
                            .collect(),
                    })
                }
                _ => Err(SolenoidError::Unsupported(
                    "plane windows exist only for k = 2 linear foliations".into(),
                )),
            },
            _ => Err(SolenoidError::Unsupported(
                "plane windows exist only for k = 2 linear foliations".into(),
            )),
        }
    }

    pub fn point_samples(&self) -> Option<&[PointSample]> {
        match &self.family {
            Family::Points { samples } => Some(samples),
            _ => None,
        }
    }

    /// Leaf point through a cylinder's representative at leaf parameter t.
    /// For suspensions, t beyond [0,1) unwinds the return map; for the
    /// other curve families t is the base coordinate.
    pub fn leaf_point(&self, addr: &Address, t: &[f64]) -> Result<Vec<f64>> {
        match self.leaf_dim() {
            0 => Err(SolenoidError::Unsupported(
                "0-dimensional solenoids have no leaf parameters".into(),
            )),
            1 => {
                let x = t[0];
                let mut p = if let Family::Suspension(s) = &self.family {
                    let j = x.floor() as i64;
                    let local = x - j as f64;
                    let a = s.return_map.iterate(addr, j)?;
                    let u = self.transversal.representative(&a)?;
                    let w = self.curve_window(&a, u)?;
                    w.point_undeformed(local)
                } else {
                    let u = self.transversal.representative(addr)?;
                    let w = self.curve_window(addr, u)?;
                    w.point_undeformed(x)
                };
                if let Some((h, tau)) = &self.deformation {
                    let g = h.displacement(&p);
                    p[0] += tau * g[0];
                    p[1] += tau * g[1];
                }
                self.ambient.wrap(&mut p);
                Ok(p)
            }
            _ => {
                let u = self.transversal.representative(addr)?;
                let w = self.plane_window(addr, u)?;
                let mut p = w.point(t[0], t[1]);
                self.ambient.wrap(&mut p);
                Ok(p)
            }
        }
    }

    /// Unit leaf frame at a leaf parameter (orientation convention: base
    /// coordinate increasing; for planes, the two direction columns).
    pub fn leaf_frame(&self, addr: &Address, t: &[f64]) -> Result<Vec<Vec<f64>>> {
        match self.leaf_dim() {
            0 => Err(SolenoidError::Unsupported(
                "0-dimensional solenoids have no leaf frame".into(),
            )),
            1 => {
                let x = t[0];
                let (a, local) = if let Family::Suspension(s) = &self.family {
                    let j = x.floor() as i64;
                    (s.return_map.iterate(addr, j)?, x - j as f64)
                } else {
                    (*addr, x)
                };
                let u = self.transversal.representative(&a)?;
                let w = self.curve_window(&a, u)?;
                let v = w.velocity(local);
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm < 1e-9 {
                    return Err(SolenoidError::Immersion(format!(
                        "degenerate leaf tangent at cylinder {a}, t = {local}"
                    )));
                }
                Ok(vec![v.iter().map(|c| c / norm).collect()])
            }
            _ => {
                let u = self.transversal.representative(addr)?;
                let w = self.plane_window(addr, u)?;
                Ok(w.unit_frame())
            }
        }
    }

    /// Sampled immersion check: minimum frame singular value over a grid of
    /// cylinders and leaf parameters. For unit frames of our families this
    /// is bounded below by the frame Gram determinant.
    pub fn immersion_margin(&self, samples: usize) -> Result<f64> {
        if self.leaf_dim() == 0 {
            return Ok(1.0);
        }
        let depth = self.transversal.depth().min(6);
        let cylinders = self.transversal.cylinders(depth);
        let mut worst = f64::INFINITY;
        let mut i = 0usize;
        'outer: loop {
            for addr in &cylinders {
                if i >= samples {
                    break 'outer;
                }
                // low-discrepancy parameter sweep, deterministic
                let t = (i as f64 * 0.6180339887498949).fract();
                if self.leaf_dim() == 1 {
                    let frame = self.leaf_frame(addr, &[t * 0.999])?;
                    let norm = frame[0].iter().map(|c| c * c).sum::<f64>().sqrt();
                    worst = worst.min(norm);
                } else {
                    let frame = self.leaf_frame(addr, &[t, (t * 2.0).fract()])?;
                    // Gram determinant of the two unit columns
                    let dot: f64 = frame[0].iter().zip(&frame[1]).map(|(a, b)| a * b).sum();
                    worst = worst.min((1.0 - dot * dot).sqrt());
                }
                i += 1;
            }
            if cylinders.is_empty() {
                break;
            }
        }
        Ok(worst)
    }
}

/// One-period parametrised leaf arc of a 1-dimensional family.
#[derive(Debug, Clone)]
pub struct CurveWindow {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Whether the integrand of a periodic form is x-periodic over the
    /// window (compact leaf): selects trapezoid vs Gauss-Legendre.
    pub periodic: bool,
    /// Interior smoothness knots (quadrature must split here).
    pub knots: Vec<f64>,
    geom: CurveGeom,
    deform: Option<(Homotopy, f64)>,
}

#[derive(Debug, Clone)]
enum CurveGeom {
    /// point(x) = start + x * dir
    Line { start: Vec<f64>, dir: Vec<f64> },
    /// Suspension arc: (x, y0 + blend(x) * (y1 - y0)) over x in [0,1].
    SuspensionArc { y0: f64, y1: f64 },
    /// Graph arc: (x, profile(x) + height + warp(x)); the warp is the
    /// fiber coupling already evaluated at this cylinder's height.
    GraphArc {
        profile: Profile,
        height: f64,
        warp: Option<TrigPoly>,
    },
}

impl CurveWindow {
    fn point_undeformed(&self, x: f64) -> Vec<f64> {
        match &self.geom {
            CurveGeom::Line { start, dir } => start
                .iter()
                .zip(dir)
                .map(|(s, d)| s + x * d)
                .collect(),
            CurveGeom::SuspensionArc { y0, y1 } => {
                vec![x, y0 + blend(x) * (y1 - y0)]
            }
            CurveGeom::GraphArc {
                profile,
                height,
                warp,
            } => {
                let w = warp.as_ref().map_or(0.0, |g| g.evaluate(&[x]));
                vec![x, profile.eval(x) + height + w]
            }
        }
    }

    fn velocity_undeformed(&self, x: f64) -> Vec<f64> {
        match &self.geom {
            CurveGeom::Line { dir, .. } => dir.clone(),
            CurveGeom::SuspensionArc { y0, y1 } => {
                vec![1.0, blend_deriv(x) * (y1 - y0)]
            }
            CurveGeom::GraphArc { profile, warp, .. } => {
                let dw = warp.as_ref().map_or(0.0, |g| g.partial(0).evaluate(&[x]));
                vec![1.0, profile.deriv(x) + dw]
            }
        }
    }

    /// Ambient point at base parameter x (not wrapped mod 1; forms are
    /// 1-periodic so wrapping is unnecessary for evaluation).
    pub fn point(&self, x: f64) -> Vec<f64> {
        let mut p = self.point_undeformed(x);
        if let Some((h, t)) = &self.deform {
            let g = h.displacement(&p);
            p[0] += t * g[0];
            p[1] += t * g[1];
        }
        p
    }

    /// Unnormalised tangent d(point)/dx, for leaf integrals.
    pub fn velocity(&self, x: f64) -> Vec<f64> {
        let p = self.point_undeformed(x);
        let mut v = self.velocity_undeformed(x);
        if let Some((h, t)) = &self.deform {
            let dg = h.displacement_jacobian(&p, &v);
            v[0] += t * dg[0];
            v[1] += t * dg[1];
        }
        v
    }

    /// Coordinate j as an affine function of the window parameter:
    /// `Some((value_at_0, slope))` when exact, `None` otherwise (nonlinear
    /// coordinate or deformed window). Used to locate compact form supports.
    pub fn axis_affine(&self, j: usize) -> Option<(f64, f64)> {
        if self.deform.is_some() {
            return None;
        }
        match &self.geom {
            CurveGeom::Line { start, dir } => Some((start[j], dir[j])),
            CurveGeom::SuspensionArc { y0, y1 } => match j {
                0 => Some((0.0, 1.0)),
                1 if y0 == y1 => Some((*y0, 0.0)),
                _ => None,
            },
            CurveGeom::GraphArc {
                profile,
                height,
                warp,
            } => match j {
                0 => Some((0.0, 1.0)),
                1 if profile.is_constant()
                    && warp.as_ref().is_none_or(|g| g.max_frequency(0) == 0) =>
                {
                    let w = warp.as_ref().map_or(0.0, |g| g.evaluate(&[0.0]));
                    Some((profile.eval(0.0) + height + w, 0.0))
                }
                _ => None,
            },
        }
    }

    /// The fiber coordinate as a function of the base coordinate, when the
    /// window is an x-graph (None for vertical lines).
    pub fn fiber_graph(&self) -> Option<FiberGraph> {
        match &self.geom {
            CurveGeom::Line { start, dir } if self.deform.is_none() && start.len() == 2 => {
                if dir[0] == 0.0 {
                    None
                } else {
                    Some(FiberGraph::Affine {
                        x0: start[0],
                        y0: start[1],
                        slope: dir[1] / dir[0],
                    })
                }
            }
            CurveGeom::GraphArc {
                profile,
                height,
                warp: None,
            } if self.deform.is_none() => Some(FiberGraph::Profile {
                profile: profile.clone(),
                height: *height,
            }),
            _ => None,
        }
    }
}

/// Exact fiber-over-base description of an undeformed curve window.
#[derive(Debug, Clone)]
pub enum FiberGraph {
    Affine { x0: f64, y0: f64, slope: f64 },
    Profile { profile: Profile, height: f64 },
}

impl FiberGraph {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FiberGraph::Affine { x0, y0, slope } => y0 + slope * (x - x0),
            FiberGraph::Profile { profile, height } => profile.eval(x) + height,
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            FiberGraph::Affine { slope, .. } => *slope,
            FiberGraph::Profile { profile, .. } => profile.deriv(x),
        }
    }
}

/// One-period plaque of a compact 2-dimensional leaf: (u, w) in [0,1)^2
/// maps to start + u dir1 + w dir2 with integer direction vectors.
#[derive(Debug, Clone)]
pub struct PlaneWindow {
    pub start: Vec<f64>,
    pub dirs: Vec<Vec<f64>>,
}

impl PlaneWindow {
    pub fn point(&self, u: f64, w: f64) -> Vec<f64> {
        self.start
            .iter()
            .enumerate()
            .map(|(i, s)| s + u * self.dirs[0][i] + w * self.dirs[1][i])
            .collect()
    }

    /// Unnormalised tangent pair (the integer direction vectors).
    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.dirs
    }

    pub fn unit_frame(&self) -> Vec<Vec<f64>> {
        self.dirs
            .iter()
            .map(|d| {
                let norm = d.iter().map(|c| c * c).sum::<f64>().sqrt();
                d.iter().map(|c| c / norm).collect()
            })
            .collect()
    }
}
