//! Intersection pairings of complementary families on a common ambient.
//!
//! Routes that must agree within their stated error bounds:
//!
//! * band: closed-form lattice count for pairs of line families with
//!   uniform height densities. Exact.
//! * representative: crossing enumeration on one leaf window per cylinder
//!   pair. The count is locked over a cylinder pair unless a crossing can
//!   slide through a chart seam; the mass of such pairs is charged to
//!   `error_bound`.
//! * plaque: determinant count for plane pairs on the 4-torus. Exact.
//! * cup product of the homology classes through the dual basis.
//! * tube regularisation of one factor by a Thom form of a subtorus.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::cantor::{Address, MeasureKind, TransversalKind};
use crate::currents::{evaluate_current, poincare_dual_pairing, rs_class, QuadratureSpec};
use crate::error::{Result, SolenoidError};
use crate::forms::{AnyForm, ThomForm};
use crate::interval::Interval;
use crate::model::{AmbientManifold, CurveWindow, Family, LinearDirections, SolenoidModel};
use crate::quad::tree_sum;

use super::geometry::{band_area, plane_crossings, window_crossings};
use super::tangency::{classify, contains_integer, detect_tangencies, height_iv, Kind};

const PAIR_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairingRoute {
    /// Closed-form lattice band count for a pair of line families.
    Band,
    /// Crossing enumeration on representative leaf windows.
    Representative,
    /// Plaque determinant count on the 4-torus.
    Plaque,
}

#[derive(Debug, Clone)]
pub struct PairingBreakdown {
    pub value: f64,
    pub route: PairingRoute,
    /// Cylinder pairs the sum ranged over.
    pub pairs: usize,
    /// Mass of cylinder pairs whose crossing count is not locked by the
    /// window combinatorics; zero for the exact routes.
    pub error_bound: f64,
}

/// Almost-everywhere pairing: the crossing count away from the flagged
/// tangency set, which must be certified null for the count to represent
/// the pairing of the currents.
#[derive(Debug, Clone)]
pub struct AePairing {
    pub value: f64,
    /// Flagged transversal mass at the working depth; crossings hiding
    /// inside this mass are unaccounted for.
    pub flagged_mass_bound: f64,
    /// Product mass of the excluded cylinder pairs.
    pub excluded_pair_mass: f64,
    /// Mass of retained pairs whose window count is seam-sensitive.
    pub resolution_bound: f64,
    pub depth: usize,
}

/// A single tube-regularisation step: the pairing against a Thom form of
/// width `rho`, evaluated at the given quadrature order.
#[derive(Debug, Clone)]
pub struct ThomStep {
    pub rho: f64,
    pub order: usize,
    pub value: f64,
    /// The requested leaf order underresolves the tube; the order above
    /// was raised to keep roughly four nodes per width.
    pub warned: bool,
}

fn check_pair(m1: &SolenoidModel, m2: &SolenoidModel) -> Result<()> {
    if m1.ambient != m2.ambient {
        return Err(SolenoidError::Construction(
            "pairing needs a common ambient manifold".into(),
        ));
    }
    let n = m1.ambient_dim();
    let (k1, k2) = (m1.leaf_dim(), m2.leaf_dim());
    if k1 == 0 || k2 == 0 {
        return Err(SolenoidError::Unsupported(
            "a 0-dimensional factor pairs by current evaluation, not by crossings".into(),
        ));
    }
    if k1 + k2 != n {
        return Err(SolenoidError::DegreeMismatch {
            expected: n - k2,
            got: k1,
        });
    }
    Ok(())
}

/// Shifts below the working depth are invisible to per-cylinder windows,
/// so every route works at least as deep as the deepest stored shift.
fn deepest_shift(m: &SolenoidModel) -> usize {
    m.shifts.keys().map(|a| a.depth()).max().unwrap_or(0)
}

/// Geometric intersection pairing with a certified-exact or error-bounded
/// route, chosen by the shape of the pair. Pairs that cannot be certified
/// transversal are rejected; use [`ae_pairing`] for those.
pub fn pairing_exact(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
) -> Result<PairingBreakdown> {
    check_pair(m1, m2)?;
    let depth = depth.max(deepest_shift(m1)).max(deepest_shift(m2));
    let preflight = detect_tangencies(m1, m2, depth)?;
    if let Some((a, b)) = preflight.flagged.first() {
        return Err(SolenoidError::Tangency {
            cylinder: format!("{a} x {b}"),
            reason: "possible tangency carries cylinder mass; use the almost-everywhere pairing"
                .into(),
        });
    }
    if m1.leaf_dim() == 2 {
        return plaque_route(m1, m2, depth);
    }
    if let Some(out) = band_route(m1, m2, depth)? {
        return Ok(out);
    }
    let keep_all = BTreeSet::new();
    let (value, pairs) = representative_sum(m1, m2, depth, &keep_all)?;
    let error_bound = resolution_bound(m1, m2, depth, &keep_all)?;
    Ok(PairingBreakdown {
        value,
        route: PairingRoute::Representative,
        pairs,
        error_bound,
    })
}

/// Crossing count away from the flagged tangency set. Requires the flags
/// to be leafwise isolated and their mass to be below `null_tolerance`,
/// otherwise the count does not represent the pairing.
pub fn ae_pairing(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
    null_tolerance: f64,
) -> Result<AePairing> {
    check_pair(m1, m2)?;
    let depth = depth.max(deepest_shift(m1)).max(deepest_shift(m2));
    let t = detect_tangencies(m1, m2, depth)?;
    if !t.leafwise_isolated {
        let cylinder = t
            .flagged
            .first()
            .map(|(a, b)| format!("{a} x {b}"))
            .unwrap_or_else(|| "(root)".into());
        return Err(SolenoidError::Tangency {
            cylinder,
            reason: "a flat contact persists along whole leaves; the almost-everywhere count is not defined"
                .into(),
        });
    }
    if t.bound() > null_tolerance {
        return Err(SolenoidError::NotNullTransverse {
            reason: "flagged tangency mass does not fall below the tolerance".into(),
            mass_bound: t.bound(),
            depth: t.depth,
        });
    }
    if m1.leaf_dim() == 2 {
        // isolated flags on plane pairs do not exist: parallel plaques are
        // flat contacts, so reaching this point means the pair is clean
        let p = plaque_route(m1, m2, depth)?;
        return Ok(AePairing {
            value: p.value,
            flagged_mass_bound: t.bound(),
            excluded_pair_mass: t.excluded_pair_mass,
            resolution_bound: 0.0,
            depth: t.depth,
        });
    }
    let skip: BTreeSet<(Address, Address)> = t.flagged.iter().copied().collect();
    let (value, _) = representative_sum(m1, m2, depth, &skip)?;
    let resolution = resolution_bound(m1, m2, depth, &skip)?;
    Ok(AePairing {
        value,
        flagged_mass_bound: t.bound(),
        excluded_pair_mass: t.excluded_pair_mass,
        resolution_bound: resolution,
        depth: t.depth,
    })
}

/// Topological route: cup product of the two homology classes against the
/// fundamental class, through the Poincare dual basis.
pub fn pairing_via_cup(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_pair(m1, m2)?;
    if !m1.ambient.is_torus() {
        return Err(SolenoidError::Unsupported(
            "the cup route needs torus homology classes".into(),
        ));
    }
    let c1 = rs_class(m1, quad)?;
    let c2 = rs_class(m2, quad)?;
    poincare_dual_pairing(&c1, &c2, m1.ambient_dim(), m1.leaf_dim())
}

/// Pair a curve family against the subtorus `{x_axis = center}` by
/// integrating a Thom form of the subtorus over the family, for each tube
/// width in `rhos`. Every step evaluates the same pairing; the spread over
/// widths measures the regularisation error.
pub fn pairing_via_thom(
    m: &SolenoidModel,
    axis: usize,
    center: f64,
    rhos: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<ThomStep>> {
    let n = m.ambient_dim();
    let mut out = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let form = AnyForm::Thom(ThomForm::new(n, &[axis], &[center], rho)?);
        let warned = (quad.leaf_order as f64) * rho < 4.0;
        let order = if warned {
            ((4.0 / rho).ceil() as usize).clamp(quad.leaf_order, 512)
        } else {
            quad.leaf_order
        };
        let q = QuadratureSpec {
            leaf_order: order,
            ..quad.clone()
        };
        let value = evaluate_current(m, &form, &q)?;
        out.push(ThomStep {
            rho,
            order,
            value,
            warned,
        });
    }
    Ok(out)
}

/// Slope and base offset of a family of parallel lines carrying a uniform
/// height density, the shape the band route integrates in closed form.
fn uniform_line(m: &SolenoidModel) -> Option<(f64, f64)> {
    let Family::Linear(d) = &m.family else {
        return None;
    };
    let slope = match &d.directions {
        LinearDirections::Slope(a) => *a,
        LinearDirections::Integer(cols)
            if cols.len() == 1 && cols[0].len() == 2 && cols[0][0] == 1 =>
        {
            cols[0][1] as f64
        }
        _ => return None,
    };
    let uniform = matches!(m.transversal.kind(), TransversalKind::FullInterval)
        && matches!(m.transversal.measure_kind(), MeasureKind::LebesgueRestricted);
    uniform.then_some((slope, d.offset[0]))
}

/// Exact pairing of two uniform line families. Over one base period the
/// chart difference sweeps an interval of length `|s2 - s1|`, so the
/// crossing count is its floor plus one extra crossing exactly when the
/// seam value lands in a band of width `frac(s2 - s1)` on the circle; the
/// band measure integrates in closed form against the uniform heights.
fn band_route(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
) -> Result<Option<PairingBreakdown>> {
    if !m1.ambient.is_torus() {
        return Ok(None);
    }
    let (Some((s1, x1)), Some((s2, x2))) = (uniform_line(m1), uniform_line(m2)) else {
        return Ok(None);
    };
    // ascending slopes cross positively; a swap flips the orientation
    let (ma, mb, sa, sb, xa, xb, orient) = if s1 <= s2 {
        (m1, m2, s1, s2, x1, x2, 1.0)
    } else {
        (m2, m1, s2, s1, x2, x1, -1.0)
    };
    let d = sb - sa;
    let whole = d.floor();
    let theta = d - whole;
    let shift = sb * (xb - xa);
    let ca = ma.cylinders_at(depth)?;
    let cb = mb.cylinders_at(depth)?;
    if ca.len().saturating_mul(cb.len()) > PAIR_CAP {
        return Err(SolenoidError::Parameter(format!(
            "cylinder pair count {} x {} exceeds the cap",
            ca.len(),
            cb.len()
        )));
    }
    let ivb: Vec<Interval> = cb
        .iter()
        .map(|(addr, _, _)| height_iv(mb, addr))
        .collect::<Result<_>>()?;
    let mut terms: Vec<f64> = ca
        .par_iter()
        .map(|(aa, wa, _)| -> Result<f64> {
            let ia = height_iv(ma, aa)?;
            let mut acc = Vec::with_capacity(cb.len());
            for ((_, wb, _), ib) in cb.iter().zip(&ivb) {
                let mut v = whole * wa * wb;
                if theta > 0.0 {
                    let density = (wa / ia.width()) * (wb / ib.width());
                    v += density * band_area((ia.lo, ia.hi), (ib.lo, ib.hi), shift, theta);
                }
                acc.push(v);
            }
            Ok(tree_sum(&mut acc))
        })
        .collect::<Result<_>>()?;
    Ok(Some(PairingBreakdown {
        value: orient * tree_sum(&mut terms),
        route: PairingRoute::Band,
        pairs: ca.len() * cb.len(),
        error_bound: 0.0,
    }))
}

fn plaque_route(m1: &SolenoidModel, m2: &SolenoidModel, depth: usize) -> Result<PairingBreakdown> {
    let c1 = m1.cylinders_at(depth)?;
    let c2 = m2.cylinders_at(depth)?;
    if c1.len().saturating_mul(c2.len()) > PAIR_CAP {
        return Err(SolenoidError::Parameter(format!(
            "cylinder pair count {} x {} exceeds the cap",
            c1.len(),
            c2.len()
        )));
    }
    let w1s: Vec<_> = c1
        .iter()
        .map(|(a, _, u)| m1.plane_window(a, *u))
        .collect::<Result<_>>()?;
    let w2s: Vec<_> = c2
        .iter()
        .map(|(a, _, u)| m2.plane_window(a, *u))
        .collect::<Result<_>>()?;
    let mut terms: Vec<f64> = (0..c1.len())
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut acc = Vec::with_capacity(c2.len());
            for j in 0..c2.len() {
                let crossings = plane_crossings(&w1s[i], &w2s[j])?;
                let s: f64 = crossings.iter().map(|c| c.sign).sum();
                acc.push(c1[i].1 * c2[j].1 * s);
            }
            Ok(tree_sum(&mut acc))
        })
        .collect::<Result<_>>()?;
    Ok(PairingBreakdown {
        value: tree_sum(&mut terms),
        route: PairingRoute::Plaque,
        pairs: c1.len() * c2.len(),
        error_bound: 0.0,
    })
}

/// Signed crossing count over representative windows, weighted by pair
/// mass, with the pairs in `skip` left out.
fn representative_sum(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
    skip: &BTreeSet<(Address, Address)>,
) -> Result<(f64, usize)> {
    let c1 = m1.cylinders_at(depth)?;
    let c2 = m2.cylinders_at(depth)?;
    if c1.len().saturating_mul(c2.len()) > PAIR_CAP {
        return Err(SolenoidError::Parameter(format!(
            "cylinder pair count {} x {} exceeds the cap",
            c1.len(),
            c2.len()
        )));
    }
    let w1s: Vec<CurveWindow> = c1
        .iter()
        .map(|(a, _, u)| m1.curve_window(a, *u))
        .collect::<Result<_>>()?;
    let w2s: Vec<CurveWindow> = c2
        .iter()
        .map(|(a, _, u)| m2.curve_window(a, *u))
        .collect::<Result<_>>()?;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..c1.len() {
        for j in 0..c2.len() {
            if !skip.contains(&(c1[i].0, c2[j].0)) {
                pairs.push((i, j));
            }
        }
    }
    let mut terms: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<f64> {
            let crossings = window_crossings(&w1s[i], &w2s[j], &m1.ambient)?;
            let mut s = 0.0;
            for c in &crossings {
                if c.tangential {
                    return Err(SolenoidError::Tangency {
                        cylinder: format!("{} x {}", c1[i].0, c2[j].0),
                        reason: "representative leaves meet tangentially".into(),
                    });
                }
                s += c.sign;
            }
            Ok(c1[i].1 * c2[j].1 * s)
        })
        .collect::<Result<_>>()?;
    Ok((tree_sum(&mut terms), pairs.len()))
}

/// Mass of cylinder pairs whose representative crossing count is not
/// locked by continuity. A count can only change where a crossing leaves
/// the window: through a chart seam on a torus (the one-sided chart
/// differences are integers there, and they differ by the chart winding),
/// or through the domain boundary on a plane region. Pairs whose
/// difference interval misses every such event are safe.
fn resolution_bound(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    depth: usize,
    skip: &BTreeSet<(Address, Address)>,
) -> Result<f64> {
    let (Kind::Fiber(f1), Kind::Fiber(f2)) = (classify(m1)?, classify(m2)?) else {
        return Ok(0.0);
    };
    let torus = m1.ambient.is_torus();
    // (seam position, winding applied to the difference across it)
    let mut events: Vec<(f64, f64)> = Vec::new();
    if torus {
        if f1.slope.fract() != 0.0 {
            events.push((f1.x0, -f1.slope));
        }
        if f2.slope.fract() != 0.0 {
            events.push((f2.x0, f2.slope));
        }
    } else if let AmbientManifold::PlaneRegion { x, .. } = &m1.ambient {
        events.push((x.0, 0.0));
        events.push((x.1, 0.0));
    }
    if events.is_empty() {
        return Ok(0.0);
    }
    let c1 = m1.cylinders_at(depth)?;
    let c2 = m2.cylinders_at(depth)?;
    let iv2: Vec<Interval> = c2
        .iter()
        .map(|(addr, _, _)| height_iv(m2, addr))
        .collect::<Result<_>>()?;
    let mut risky = Vec::new();
    for (a1, w1, _) in &c1 {
        let z1 = height_iv(m1, a1)?;
        for ((a2, w2, _), z2) in c2.iter().zip(&iv2) {
            if skip.contains(&(*a1, *a2)) {
                continue;
            }
            let hit = events.iter().any(|&(xs, wind)| {
                let x = Interval::point(xs);
                let d = z2
                    .sub(&z1)
                    .add(&f2.base(&x, z2))
                    .sub(&f1.base(&x, &z1));
                if torus {
                    contains_integer(&d) || contains_integer(&d.add(&Interval::point(wind)))
                } else {
                    d.contains_zero()
                }
            });
            if hit {
                risky.push(w1 * w2);
            }
        }
    }
    Ok(tree_sum(&mut risky))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::CantorTransversal;
    use crate::forms::TrigPoly;
    use crate::model::{FiberEmbedding, Profile};

    fn torus2() -> AmbientManifold {
        AmbientManifold::Torus { n: 2 }
    }

    fn full(depth: usize, mass: f64) -> CantorTransversal {
        CantorTransversal::build(
            TransversalKind::FullInterval,
            depth,
            MeasureKind::LebesgueRestricted,
            mass,
        )
        .unwrap()
    }

    fn slope_line(a: f64, offset: f64, mass: f64, depth: usize) -> SolenoidModel {
        SolenoidModel::linear(
            torus2(),
            LinearDirections::Slope(a),
            vec![offset, 0.0],
            full(depth, mass),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn kronecker_band_matches_closed_form_and_cup() {
        let a = 2f64.sqrt() - 1.0;
        let b = 3f64.sqrt() - 1.0;
        let ma = 1.0 / (1.0 + a * a).sqrt();
        let mb = 1.0 / (1.0 + b * b).sqrt();
        let m1 = slope_line(a, 0.0, ma, 8);
        let m2 = slope_line(b, 0.3, mb, 8);
        let exact = ma * mb * (b - a);

        let band = pairing_exact(&m1, &m2, 6).unwrap();
        assert_eq!(band.route, PairingRoute::Band);
        assert_eq!(band.error_bound, 0.0);
        assert!(
            (band.value - exact).abs() < 1e-12,
            "band {} vs closed form {exact}",
            band.value
        );

        // swapping the factors flips the sign exactly
        let swapped = pairing_exact(&m2, &m1, 6).unwrap();
        assert_eq!(swapped.value, -band.value);

        // the representative count agrees within its seam-sensitivity bound
        let keep_all = BTreeSet::new();
        let (rep, _) = representative_sum(&m1, &m2, 6, &keep_all).unwrap();
        let rb = resolution_bound(&m1, &m2, 6, &keep_all).unwrap();
        assert!(rb > 0.0 && rb < 0.3, "seam bound {rb}");
        assert!(
            (rep - exact).abs() <= rb + 1e-12,
            "representative {rep} vs {exact}, bound {rb}"
        );

        // and so does the homology route
        let cup = pairing_via_cup(&m1, &m2, &QuadratureSpec::default()).unwrap();
        assert!((cup - exact).abs() < 1e-10, "cup {cup} vs {exact}");
    }

    #[test]
    fn coordinate_circles_cross_once() {
        let horizontal = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            full(4, 1.0),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let vertical = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![0, 1]]),
            vec![0.0, 0.0],
            full(4, 1.0),
            FiberEmbedding::new(0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let p = pairing_exact(&horizontal, &vertical, 3).unwrap();
        assert_eq!(p.route, PairingRoute::Representative);
        assert_eq!(p.error_bound, 0.0);
        assert!((p.value - 1.0).abs() < 1e-12, "got {}", p.value);
        let q = pairing_exact(&vertical, &horizontal, 3).unwrap();
        assert!((q.value + 1.0).abs() < 1e-12, "got {}", q.value);
    }

    #[test]
    fn parallel_uniform_lines_are_rejected() {
        let m1 = slope_line(0.5, 0.0, 1.0, 2);
        let m2 = slope_line(0.5, 0.0, 1.0, 2);
        let err = pairing_exact(&m1, &m2, 2).unwrap_err();
        assert!(matches!(err, SolenoidError::Tangency { .. }), "{err}");
    }

    fn cantor(depth: usize) -> CantorTransversal {
        CantorTransversal::build(
            TransversalKind::MiddleCantor { ratio: 0.6 },
            depth,
            MeasureKind::Bernoulli { p: 0.5 },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn touching_families_have_zero_ae_pairing() {
        let depth = 8;
        let m1 = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            cantor(depth),
            FiberEmbedding::new(1, 0.15, 0.35).unwrap(),
        )
        .unwrap();
        let mut psi = TrigPoly::zero(1);
        psi.add_assign(&TrigPoly::constant(1, 0.05));
        psi.add_assign(&TrigPoly::harmonic(1, &[1], -0.05, 0.0));
        let m2 = SolenoidModel::graph(
            torus2(),
            Profile::Trig(psi),
            cantor(depth),
            FiberEmbedding::new(1, 0.35, 0.55).unwrap(),
        )
        .unwrap();

        let ae = ae_pairing(&m1, &m2, depth, 1e-2).unwrap();
        assert_eq!(ae.value, 0.0);
        assert!(
            (ae.flagged_mass_bound - 0.5f64.powi(depth as i32)).abs() < 1e-12,
            "bound {}",
            ae.flagged_mass_bound
        );
        assert!(ae.excluded_pair_mass > 0.0);
        assert_eq!(ae.resolution_bound, 0.0);

        // with a tighter null tolerance the same pair must be refused
        let err = ae_pairing(&m1, &m2, depth, 1e-6).unwrap_err();
        assert!(
            matches!(err, SolenoidError::NotNullTransverse { .. }),
            "{err}"
        );
        // and the exact route refuses it outright
        let err = pairing_exact(&m1, &m2, depth).unwrap_err();
        assert!(matches!(err, SolenoidError::Tangency { .. }), "{err}");
    }

    #[test]
    fn orthogonal_plaques_pair_to_one() {
        let t4 = AmbientManifold::Torus { n: 4 };
        let m1 = SolenoidModel::linear(
            t4.clone(),
            LinearDirections::Integer(vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]]),
            vec![0.0; 4],
            full(2, 1.0),
            FiberEmbedding::new(2, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let m2 = SolenoidModel::linear(
            t4.clone(),
            LinearDirections::Integer(vec![vec![0, 0, 1, 0], vec![0, 0, 0, 1]]),
            vec![0.0; 4],
            full(2, 1.0),
            FiberEmbedding::new(0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let p = pairing_exact(&m1, &m2, 2).unwrap();
        assert_eq!(p.route, PairingRoute::Plaque);
        assert!((p.value - 1.0).abs() < 1e-12, "got {}", p.value);
        assert_eq!(p.error_bound, 0.0);
        let cup = pairing_via_cup(&m1, &m2, &QuadratureSpec::default()).unwrap();
        assert!((cup - 1.0).abs() < 1e-10, "cup {cup}");
    }

    #[test]
    fn thom_steps_recover_line_masses() {
        // horizontal Cantor circles each cross the tube of {x = 1/2} once
        let circles = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            cantor(6),
            FiberEmbedding::new(1, 0.1, 0.9).unwrap(),
        )
        .unwrap();
        let coarse = QuadratureSpec {
            leaf_order: 8,
            ..QuadratureSpec::default()
        };
        let steps = pairing_via_thom(&circles, 0, 0.5, &[0.3, 0.1, 0.02], &coarse).unwrap();
        for s in &steps {
            assert!((s.value - 1.0).abs() < 1e-9, "rho {}: {}", s.rho, s.value);
        }
        assert!(steps.iter().all(|s| s.warned), "order 8 underresolves");
        assert!(steps[2].order >= 200);

        // a slope line of mass M crosses every vertical circle M-often
        let a = 2f64.sqrt() - 1.0;
        let mass = 1.0 / (1.0 + a * a).sqrt();
        let line = slope_line(a, 0.25, mass, 6);
        let steps =
            pairing_via_thom(&line, 0, 0.5, &[0.25, 0.05], &QuadratureSpec::default()).unwrap();
        for s in &steps {
            assert!(
                (s.value - mass).abs() < 1e-9,
                "rho {}: {} vs {mass}",
                s.rho,
                s.value
            );
        }
    }
}
