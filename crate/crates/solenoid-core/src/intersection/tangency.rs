//! Tangency detection with certified interval arithmetic.
//!
//! A pair of cylinders is flagged when a leaf of one may touch a leaf of
//! the other with matching tangent direction somewhere over the pair's
//! height intervals. Flags are computed by refining the base coordinate
//! until either condition is excluded, so an unflagged pair is a
//! certificate: its leaves cross transversally or not at all. Flagged
//! mass per depth is the almost-everywhere transversality bound; if it
//! does not tend to zero the pair genuinely fails general position, which
//! the fat obstruction certificate can then prove from below.

use crate::cantor::Address;
use crate::error::{Result, SolenoidError};
use crate::forms::TrigPoly;
use crate::interval::Interval;
use crate::model::{AmbientManifold, Family, LinearDirections, Profile, SolenoidModel};

/// Base-coordinate cells are refined to this width before a pair is
/// flagged as possibly tangent.
const X_TOL: f64 = 1.0 / 65_536.0;
/// Coarser resolution for the critical-offset report.
const SWEEP_TOL: f64 = 1.0 / 1024.0;
/// Refinement work cap per cylinder pair; on overflow the pair is flagged
/// (conservative direction).
const CELL_BUDGET: usize = 20_000;

#[derive(Debug, Clone)]
pub struct TangencySet {
    pub depth: usize,
    /// Cylinder pairs that could not be certified transversal.
    pub flagged: Vec<(Address, Address)>,
    /// Flagged transversal mass (max of the two factors) per depth 1..=depth.
    pub per_depth_bounds: Vec<f64>,
    /// Product mass of the flagged pairs at the final depth.
    pub excluded_pair_mass: f64,
    /// False when some flagged contact has vanishing second derivative
    /// (parallel families, flat contact): such tangencies are not isolated
    /// along the leaves and no refinement will separate them.
    pub leafwise_isolated: bool,
    /// Enclosures of the fiber offsets at which leafwise tangencies occur,
    /// attainable by the given embeddings or not.
    pub critical_values: Vec<(f64, f64)>,
}

impl TangencySet {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty()
    }

    /// Mass bound at the final depth.
    pub fn bound(&self) -> f64 {
        self.per_depth_bounds.last().copied().unwrap_or(0.0)
    }
}

/// Leafwise fiber description y(x, z) = z + slope (x - x0) + profile(x)
/// + coupling(x, z) for the families that are graphs over the base.
pub(crate) struct FiberKind<'a> {
    pub(crate) slope: f64,
    pub(crate) x0: f64,
    profile: Option<&'a Profile>,
    coupling: Option<&'a TrigPoly>,
}

pub(crate) enum Kind<'a> {
    Fiber(FiberKind<'a>),
    Vertical,
    /// Every window is an x-graph but the fiber value is not an affine
    /// function of the height (suspensions): only the vertical fast path
    /// applies.
    GraphLike,
    Plane(&'a [Vec<i64>]),
    Points,
}

pub(crate) fn classify(m: &SolenoidModel) -> Result<Kind<'_>> {
    Ok(match &m.family {
        Family::Linear(d) => match &d.directions {
            LinearDirections::Slope(a) => Kind::Fiber(FiberKind {
                slope: *a,
                x0: d.offset[0],
                profile: None,
                coupling: None,
            }),
            LinearDirections::Integer(cols) if cols.len() == 2 => Kind::Plane(cols),
            LinearDirections::Integer(cols) => {
                let c = &cols[0];
                if c.len() != 2 {
                    return Err(SolenoidError::Unsupported(
                        "tangency analysis of curve families is implemented on T^2".into(),
                    ));
                }
                if c[0] == 0 {
                    Kind::Vertical
                } else if c[0].abs() == 1 {
                    Kind::Fiber(FiberKind {
                        slope: c[1] as f64 / c[0] as f64,
                        x0: d.offset[0],
                        profile: None,
                        coupling: None,
                    })
                } else {
                    return Err(SolenoidError::Unsupported(
                        "tangency analysis needs unit base speed on integer directions".into(),
                    ));
                }
            }
        },
        Family::Graph { profile, coupling } => Kind::Fiber(FiberKind {
            slope: 0.0,
            x0: 0.0,
            profile: Some(profile),
            coupling: coupling.as_ref(),
        }),
        Family::Suspension(_) => Kind::GraphLike,
        Family::Points { .. } => Kind::Points,
    })
}

pub(crate) fn contains_integer(v: &Interval) -> bool {
    v.hi.floor() >= v.lo.ceil()
}

impl FiberKind<'_> {
    /// Fiber value minus the height: y(x, z) - z.
    pub(crate) fn base(&self, x: &Interval, z: &Interval) -> Interval {
        let mut acc = x.sub(&Interval::point(self.x0)).scale(self.slope);
        if let Some(p) = self.profile {
            acc = acc.add(&p.eval_interval(x));
        }
        if let Some(g) = self.coupling {
            acc = acc.add(&g.evaluate_interval(&[*x, *z]));
        }
        acc
    }

    pub(crate) fn base_dx(&self, x: &Interval, z: &Interval) -> Interval {
        let mut acc = Interval::point(self.slope);
        if let Some(p) = self.profile {
            acc = acc.add(&p.deriv_interval(x));
        }
        if let Some(g) = self.coupling {
            acc = acc.add(&g.partial(0).evaluate_interval(&[*x, *z]));
        }
        acc
    }

    fn base_dxx(&self, x: &Interval, z: &Interval) -> Interval {
        let mut acc = Interval::point(0.0);
        if let Some(p) = self.profile {
            acc = acc.add(&p.second_deriv_interval(x));
        }
        if let Some(g) = self.coupling {
            acc = acc.add(&g.partial(0).partial(0).evaluate_interval(&[*x, *z]));
        }
        acc
    }
}

struct PairProbe<'a> {
    k1: &'a FiberKind<'a>,
    k2: &'a FiberKind<'a>,
    domain: (f64, f64),
    torus: bool,
}

#[derive(Clone, Copy)]
enum ProbeOutcome {
    Clean,
    Flagged { isolated: bool },
}

impl PairProbe<'_> {
    fn seed_cells(&self) -> Vec<Interval> {
        let (lo, hi) = self.domain;
        (0..8)
            .map(|i| {
                Interval::new(
                    lo + (hi - lo) * i as f64 / 8.0,
                    lo + (hi - lo) * (i + 1) as f64 / 8.0,
                )
            })
            .collect()
    }

    /// Difference of the two fiber functions at fixed heights:
    /// D = (z2 - z1) + base2(x, z2) - base1(x, z1); a leafwise tangency
    /// needs D in Z (0 off the torus) and dD/dx = 0 at a common x.
    fn probe(&self, z1: &Interval, z2: &Interval) -> ProbeOutcome {
        let dz = z2.sub(z1);
        let mut stack = self.seed_cells();
        let mut budget = CELL_BUDGET;
        let mut flagged = false;
        let mut isolated = true;
        while let Some(x) = stack.pop() {
            if budget == 0 {
                return ProbeOutcome::Flagged { isolated: false };
            }
            budget -= 1;
            let dx = self.k2.base_dx(&x, z2).sub(&self.k1.base_dx(&x, z1));
            if !dx.contains_zero() {
                continue;
            }
            let dv = self.k2.base(&x, z2).sub(&self.k1.base(&x, z1)).add(&dz);
            let hit = if self.torus {
                contains_integer(&dv)
            } else {
                dv.contains_zero()
            };
            if !hit {
                continue;
            }
            if x.width() < X_TOL {
                flagged = true;
                let dxx = self.k2.base_dxx(&x, z2).sub(&self.k1.base_dxx(&x, z1));
                if dxx.contains_zero() {
                    isolated = false;
                }
                continue;
            }
            let m = x.midpoint();
            stack.push(Interval::new(x.lo, m));
            stack.push(Interval::new(m, x.hi));
        }
        if flagged {
            ProbeOutcome::Flagged { isolated }
        } else {
            ProbeOutcome::Clean
        }
    }

    /// Enclosures of base2 - base1 over the cells where the tangent
    /// directions can match, independent of whether any height pair
    /// attains them. These are the critical offsets of the pair.
    fn critical_sweep(&self, z1: &Interval, z2: &Interval) -> Vec<(f64, f64)> {
        let mut stack = self.seed_cells();
        let mut budget = CELL_BUDGET;
        let mut values = Vec::new();
        while let Some(x) = stack.pop() {
            let dx = self.k2.base_dx(&x, z2).sub(&self.k1.base_dx(&x, z1));
            if !dx.contains_zero() {
                continue;
            }
            if x.width() < SWEEP_TOL || budget == 0 {
                values.push(self.k2.base(&x, z2).sub(&self.k1.base(&x, z1)));
                continue;
            }
            budget -= 1;
            let m = x.midpoint();
            stack.push(Interval::new(x.lo, m));
            stack.push(Interval::new(m, x.hi));
        }
        merge_enclosures(values)
    }
}

pub(crate) fn height_iv(m: &SolenoidModel, addr: &Address) -> Result<Interval> {
    let (lo, hi) = m.height_interval(addr)?;
    Ok(Interval::new(lo.min(hi), hi.max(lo)))
}

fn merge_enclosures(mut vs: Vec<Interval>) -> Vec<(f64, f64)> {
    vs.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    let mut out: Vec<(f64, f64)> = Vec::new();
    for v in vs {
        match out.last_mut() {
            Some(last) if v.lo <= last.1 + 1e-9 => last.1 = last.1.max(v.hi),
            _ => out.push((v.lo, v.hi)),
        }
    }
    out
}

/// Flagged-pair analysis of two solenoids down to `depth`.
pub fn detect_tangencies(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
) -> Result<TangencySet> {
    if m1.ambient != m2.ambient {
        return Err(SolenoidError::Construction(
            "tangency analysis requires a common ambient manifold".into(),
        ));
    }
    let clean = |critical_values: Vec<(f64, f64)>| TangencySet {
        depth,
        flagged: vec![],
        per_depth_bounds: vec![0.0; depth],
        excluded_pair_mass: 0.0,
        leafwise_isolated: true,
        critical_values,
    };
    let k1 = classify(m1)?;
    let k2 = classify(m2)?;
    match (&k1, &k2) {
        (Kind::Points, _) | (_, Kind::Points) => Err(SolenoidError::Unsupported(
            "tangency analysis of 0-dimensional solenoids is not defined".into(),
        )),
        (Kind::Plane(p1), Kind::Plane(p2)) => {
            let stacked: Vec<Vec<f64>> = (0..4)
                .map(|r| {
                    vec![
                        p1[0][r] as f64,
                        p1[1][r] as f64,
                        p2[0][r] as f64,
                        p2[1][r] as f64,
                    ]
                })
                .collect();
            if super::det_rows(&stacked) != 0.0 {
                return Ok(clean(vec![]));
            }
            // parallel plaque families: every height pair is flat contact
            saturate_all(m1, m2, depth)
        }
        (Kind::Plane(_), _) | (_, Kind::Plane(_)) => Err(SolenoidError::Construction(
            "tangency analysis needs complementary families of equal ambient".into(),
        )),
        (Kind::Vertical, Kind::Vertical) => {
            let torus = m1.ambient.is_torus();
            let verdict = recurse_flags(m1, m2, depth, |z1, z2| {
                let dv = z2.sub(z1);
                let hit = if torus {
                    contains_integer(&dv)
                } else {
                    dv.contains_zero()
                };
                if hit {
                    // coincident circles: flat contact along the whole leaf
                    ProbeOutcome::Flagged { isolated: false }
                } else {
                    ProbeOutcome::Clean
                }
            })?;
            Ok(verdict.into_set(depth, vec![]))
        }
        (Kind::Vertical, _) | (_, Kind::Vertical) => {
            // vertical tangents never align with graph-like tangents
            Ok(clean(vec![]))
        }
        (Kind::GraphLike, _) | (_, Kind::GraphLike) => Err(SolenoidError::Unsupported(
            "tangency analysis for suspension pairs is not implemented".into(),
        )),
        (Kind::Fiber(f1), Kind::Fiber(f2)) => {
            let domain = match &m1.ambient {
                AmbientManifold::Torus { .. } => (0.0, 1.0),
                AmbientManifold::PlaneRegion { x, .. } => *x,
            };
            let probe = PairProbe {
                k1: f1,
                k2: f2,
                domain,
                torus: m1.ambient.is_torus(),
            };
            let z1_root = height_iv(m1, &Address::root())?;
            let z2_root = height_iv(m2, &Address::root())?;
            let critical_values = probe.critical_sweep(&z1_root, &z2_root);
            let verdict = recurse_flags(m1, m2, depth, |z1, z2| probe.probe(z1, z2))?;
            Ok(verdict.into_set(depth, critical_values))
        }
    }
}

struct FlagVerdict {
    flagged: Vec<(Address, Address)>,
    per_depth_bounds: Vec<f64>,
    excluded_pair_mass: f64,
    leafwise_isolated: bool,
}

impl FlagVerdict {
    fn into_set(self, depth: usize, critical_values: Vec<(f64, f64)>) -> TangencySet {
        TangencySet {
            depth,
            flagged: self.flagged,
            per_depth_bounds: self.per_depth_bounds,
            excluded_pair_mass: self.excluded_pair_mass,
            leafwise_isolated: self.leafwise_isolated,
            critical_values,
        }
    }
}

/// Refine flagged pairs depth by depth; children of clean pairs inherit
/// the certificate, so only the flagged frontier is re-probed.
fn recurse_flags(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
    probe: impl Fn(&Interval, &Interval) -> ProbeOutcome,
) -> Result<FlagVerdict> {
    let levels = depth.max(1);
    let z1_root = height_iv(m1, &Address::root())?;
    let z2_root = height_iv(m2, &Address::root())?;
    if matches!(probe(&z1_root, &z2_root), ProbeOutcome::Clean) {
        return Ok(FlagVerdict {
            flagged: vec![],
            per_depth_bounds: vec![0.0; levels],
            excluded_pair_mass: 0.0,
            leafwise_isolated: true,
        });
    }
    let mut isolated = true;
    let mut frontier: Vec<(Address, Address)> = vec![(Address::root(), Address::root())];
    let mut per_depth = Vec::with_capacity(levels);
    for d in 1..=levels {
        let d1 = d.min(m1.transversal.depth());
        let d2 = d.min(m2.transversal.depth());
        let final_level = d == levels;
        let mut next = Vec::new();
        let mut seen1 = std::collections::BTreeSet::new();
        let mut seen2 = std::collections::BTreeSet::new();
        let (mut mass1, mut mass2) = (0.0, 0.0);
        for (p1, p2) in &frontier {
            let kids1: Vec<Address> = if p1.depth() < d1 {
                vec![p1.child(0), p1.child(1)]
            } else {
                vec![*p1]
            };
            let kids2: Vec<Address> = if p2.depth() < d2 {
                vec![p2.child(0), p2.child(1)]
            } else {
                vec![*p2]
            };
            for a1 in &kids1 {
                let z1 = height_iv(m1, a1)?;
                for a2 in &kids2 {
                    let z2 = height_iv(m2, a2)?;
                    match probe(&z1, &z2) {
                        ProbeOutcome::Clean => {}
                        ProbeOutcome::Flagged { isolated: iso } => {
                            if final_level && !iso {
                                isolated = false;
                            }
                            next.push((*a1, *a2));
                            if seen1.insert(*a1) {
                                mass1 += m1.transversal.cylinder_measure(a1)?;
                            }
                            if seen2.insert(*a2) {
                                mass2 += m2.transversal.cylinder_measure(a2)?;
                            }
                        }
                    }
                }
            }
        }
        per_depth.push(mass1.max(mass2));
        frontier = next;
        if frontier.is_empty() {
            while per_depth.len() < levels {
                per_depth.push(0.0);
            }
            break;
        }
    }
    let mut excluded = 0.0;
    for (a1, a2) in &frontier {
        excluded += m1.transversal.cylinder_measure(a1)? * m2.transversal.cylinder_measure(a2)?;
    }
    Ok(FlagVerdict {
        flagged: frontier,
        per_depth_bounds: per_depth,
        excluded_pair_mass: excluded,
        leafwise_isolated: isolated,
    })
}

/// All pairs flagged at every depth, flat contact (parallel families).
fn saturate_all(m1: &SolenoidModel, m2: &SolenoidModel, depth: usize) -> Result<TangencySet> {
    let d1 = depth.min(m1.transversal.depth());
    let d2 = depth.min(m2.transversal.depth());
    let c1 = m1.cylinders_at(d1)?;
    let c2 = m2.cylinders_at(d2)?;
    let mass1: f64 = c1.iter().map(|(_, m, _)| m).sum();
    let mass2: f64 = c2.iter().map(|(_, m, _)| m).sum();
    let mut flagged = Vec::with_capacity(c1.len() * c2.len());
    for (a1, _, _) in &c1 {
        for (a2, _, _) in &c2 {
            flagged.push((*a1, *a2));
        }
    }
    Ok(TangencySet {
        depth,
        flagged,
        per_depth_bounds: vec![mass1.max(mass2); depth.max(1)],
        excluded_pair_mass: mass1 * mass2,
        leafwise_isolated: false,
        critical_values: vec![],
    })
}

/// A persistent-tangency lower bound for a horizontal family against a
/// strictly convex graph family, proving that no fiber perturbation can
/// reach almost-everywhere transversality.
#[derive(Debug, Clone)]
pub struct ObstructionCertificate {
    pub depth: usize,
    /// Limit Lebesgue mass of the horizontal family's fiber set.
    pub mass_k1: f64,
    /// Certified lower bound on the Lebesgue measure of the critical-value
    /// image of the graph family's fiber set.
    pub image_mass_lb: f64,
    /// Length of the interval hull containing both sets.
    pub hull_length: f64,
    /// mass_k1 + image_mass_lb - hull_length: when positive, the fiber sets
    /// overlap in at least this Lebesgue mass of tangency heights.
    pub lower_bound: f64,
}

/// Compute the certificate; one factor must be horizontal circles over a
/// fiber Cantor set, the other a strictly convex quadratic graph family
/// (optionally warped by a fiber coupling). Order-insensitive.
pub fn fat_obstruction_certificate(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
) -> Result<ObstructionCertificate> {
    let (horiz, graph) = match (is_horizontal(m1), is_horizontal(m2)) {
        (true, false) => (m1, m2),
        (false, true) => (m2, m1),
        _ => {
            return Err(SolenoidError::Unsupported(
                "the obstruction certificate needs one horizontal and one graph factor".into(),
            ))
        }
    };
    let domain = match &graph.ambient {
        AmbientManifold::PlaneRegion { x, .. } => *x,
        AmbientManifold::Torus { .. } => {
            return Err(SolenoidError::Unsupported(
                "the obstruction certificate is stated over a plane region".into(),
            ))
        }
    };
    let (c0, c1, c2, coupling) = match &graph.family {
        Family::Graph { profile, coupling } => match profile {
            Profile::Poly(c) if c.len() == 3 && c[2] > 0.0 => {
                (c[0], c[1], c[2], coupling.as_ref())
            }
            _ => {
                return Err(SolenoidError::Unsupported(
                    "the certificate needs a strictly convex quadratic profile".into(),
                ))
            }
        },
        _ => {
            return Err(SolenoidError::Unsupported(
                "the certificate needs a strictly convex quadratic profile".into(),
            ))
        }
    };
    let dom = Interval::new(domain.0, domain.1);

    // interval fixed point for the critical base coordinate at heights z:
    // x = -(c1 + g_x(x, z)) / (2 c2), verified contracting
    let critical_point = |z: &Interval| -> Result<Interval> {
        let mut phi = dom;
        let mut contracted = false;
        for _ in 0..80 {
            let gx = coupling.map_or(Interval::point(0.0), |g| {
                g.partial(0).evaluate_interval(&[phi, *z])
            });
            let next = gx.add(&Interval::point(c1)).scale(-1.0 / (2.0 * c2));
            if next.lo >= phi.lo && next.hi <= phi.hi {
                contracted = true;
            }
            if !(next.lo <= next.hi) || next.lo < dom.lo - 1.0 || next.hi > dom.hi + 1.0 {
                return Err(SolenoidError::Unsupported(
                    "the critical-point iteration left the base domain".into(),
                ));
            }
            let clamped = Interval::new(next.lo.max(dom.lo), next.hi.min(dom.hi));
            if (clamped.lo - phi.lo).abs() < 1e-15 && (clamped.hi - phi.hi).abs() < 1e-15 {
                phi = clamped;
                break;
            }
            phi = clamped;
        }
        if !contracted {
            return Err(SolenoidError::Unsupported(
                "the critical-point iteration failed to contract; the coupling is too strong"
                    .into(),
            ));
        }
        Ok(phi)
    };
    // critical value r(z) = P(phi) + z + g(phi, z); its derivative is
    // r'(z) = 1 + g_z(phi, z), the phi-derivative dropping out at a
    // critical point
    let critical_value = |phi: &Interval, z: &Interval| -> Interval {
        let p_phi = phi
            .square()
            .scale(c2)
            .add(&phi.scale(c1))
            .add(&Interval::point(c0));
        let gval = coupling.map_or(Interval::point(0.0), |g| g.evaluate_interval(&[*phi, *z]));
        p_phi.add(z).add(&gval)
    };
    let value_slope = |phi: &Interval, z: &Interval| -> Interval {
        let gz = coupling.map_or(Interval::point(0.0), |g| {
            g.partial(1).evaluate_interval(&[*phi, *z])
        });
        gz.add(&Interval::point(1.0))
    };

    // global monotonicity of r over the whole embedded fiber interval makes
    // the per-cylinder image measures disjoint, so they may be summed
    let z_all = height_iv(graph, &Address::root())?;
    let phi_all = critical_point(&z_all)?;
    if value_slope(&phi_all, &z_all).lo <= 0.0 {
        return Err(SolenoidError::Unsupported(
            "the coupling destroys monotonicity of the critical-value map".into(),
        ));
    }

    let d = depth.min(graph.transversal.depth());
    let g_scale = graph.embedding.hi - graph.embedding.lo;
    let mut image_mass_lb = 0.0;
    let mut r_hull: Option<Interval> = None;
    let mut z_spans: Vec<(f64, f64)> = Vec::new();
    for (addr, _, _) in graph.cylinders_at(d)? {
        let z = height_iv(graph, &addr)?;
        z_spans.push((z.lo, z.hi));
        let leb = graph.transversal.limit_lebesgue(&addr)? * g_scale;
        let phi = critical_point(&z)?;
        image_mass_lb += value_slope(&phi, &z).lo * leb;
        let r = critical_value(&phi, &z);
        r_hull = Some(match r_hull {
            None => r,
            Some(h) => h.hull(&r),
        });
    }
    // monotone r maps disjoint fiber intervals to disjoint images, and the
    // per-cylinder measures may be summed; shifts can break the premise
    z_spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in z_spans.windows(2) {
        if w[1].0 < w[0].1 {
            return Err(SolenoidError::Unsupported(
                "shifted fiber cylinders overlap; the image-measure sum loses disjointness"
                    .into(),
            ));
        }
    }
    let r_hull = r_hull.ok_or_else(|| {
        SolenoidError::Construction("the graph transversal has no cylinders".into())
    })?;
    let h_scale = horiz.embedding.hi - horiz.embedding.lo;
    let mass_k1 = horiz.transversal.limit_lebesgue_total() * h_scale;
    // hull over cylinders, not the root interval: per-cylinder shifts on the
    // horizontal factor move its fiber set beyond the root enclosure
    let mut k1_lo = f64::INFINITY;
    let mut k1_hi = f64::NEG_INFINITY;
    for (addr, _, _) in horiz.cylinders_at(d.min(horiz.transversal.depth()))? {
        let iv = height_iv(horiz, &addr)?;
        k1_lo = k1_lo.min(iv.lo);
        k1_hi = k1_hi.max(iv.hi);
    }
    let hull_length = k1_hi.max(r_hull.hi) - k1_lo.min(r_hull.lo);
    Ok(ObstructionCertificate {
        depth: d,
        mass_k1,
        image_mass_lb,
        hull_length,
        lower_bound: mass_k1 + image_mass_lb - hull_length,
    })
}

fn is_horizontal(m: &SolenoidModel) -> bool {
    match &m.family {
        Family::Linear(d) => match &d.directions {
            LinearDirections::Slope(a) => *a == 0.0,
            LinearDirections::Integer(cols) => {
                cols.len() == 1 && cols[0].len() == 2 && cols[0][0].abs() == 1 && cols[0][1] == 0
            }
        },
        Family::Graph { profile, coupling } => profile.is_constant() && coupling.is_none(),
        _ => false,
    }
}
