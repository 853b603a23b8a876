//! Constructive perturbation to general position.
//!
//! Shifts the fiber heights of one family, one clopen box at a time, until
//! every crossing with the other family carries a certified margin. The
//! shift budget halves from box to box, so the total displacement stays
//! below the requested epsilon in the uniform norm; flagged boxes go first
//! and receive the largest budgets. Each accepted shift comes with an
//! interval proof of the achieved margin: the zero shift is tried before
//! any random draw, and a draw whose crossings cannot be certified above
//! the threshold is rejected wholesale. The shifts move leaves along the
//! fibers without changing any winding, so the homology class is preserved
//! exactly; the report still re-measures it on both sides.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cantor::Address;
use crate::currents::{class_distance, rs_class, QuadratureSpec};
use crate::error::{Result, SolenoidError};
use crate::interval::Interval;
use crate::model::{AmbientManifold, SolenoidModel};

use super::tangency::{classify, contains_integer, detect_tangencies, height_iv, Kind};

/// Bisection floor for margin certification; a crossing still undecided on
/// an interval this narrow rejects the whole sample.
const X_FLOOR: f64 = 1.0 / (1 << 20) as f64;
/// Cells spent per cylinder pair before a sample is rejected as
/// uncertifiable.
const CELL_BUDGET: usize = 20_000;
/// Cap on the number of boxes: budgets halve per box, so deeper runs would
/// starve long before this is a memory problem.
const BOX_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub struct PerturbOptions {
    /// Uniform bound on the total fiber displacement.
    pub epsilon: f64,
    pub seed: u64,
    /// Cylinder depth at which boxes are shifted independently.
    pub depth: usize,
    /// Candidate shifts tried per box (the zero shift counts as the first).
    pub max_samples: usize,
}

impl Default for PerturbOptions {
    fn default() -> Self {
        PerturbOptions {
            epsilon: 1e-2,
            seed: 0,
            depth: 4,
            max_samples: 100,
        }
    }
}

/// Shift accepted for one clopen box.
#[derive(Debug, Clone)]
pub struct BoxOutcome {
    pub cylinder: Address,
    /// Shift budget allotted to the box.
    pub budget: f64,
    /// Accepted shift, 0 when the box was already in general position.
    pub shift: f64,
    /// Candidates tried, the zero shift included.
    pub samples: usize,
    /// Certified lower bound on the crossing margins of the shifted box;
    /// 1 for a box whose leaves miss the other family entirely.
    pub certified_margin: f64,
}

/// Result of a successful perturbation run.
#[derive(Debug, Clone)]
pub struct PerturbReport {
    /// The perturbed model (a copy of the first factor with shifts set).
    pub model: SolenoidModel,
    /// Accepted nonzero shifts, keyed by cylinder.
    pub shifts: std::collections::BTreeMap<Address, f64>,
    pub boxes: Vec<BoxOutcome>,
    /// Margin every certified crossing clears: epsilon / 10.
    pub accept_threshold: f64,
    /// Smallest certified margin over all boxes.
    pub min_margin: f64,
    /// Largest homology coefficient moved by the shifts.
    pub class_drift: f64,
}

/// Perturb `m1` until all its crossings with `m2` are certified
/// transversal with margin at least `epsilon / 10`.
pub fn perturb_to_transversality(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    opts: &PerturbOptions,
) -> Result<PerturbReport> {
    if m1.ambient != m2.ambient {
        return Err(SolenoidError::Construction(
            "perturbation requires a common ambient manifold".into(),
        ));
    }
    if !(opts.epsilon > 0.0) || !opts.epsilon.is_finite() {
        return Err(SolenoidError::Parameter(format!(
            "perturbation size {} must be positive and finite",
            opts.epsilon
        )));
    }
    if opts.max_samples == 0 {
        return Err(SolenoidError::Parameter(
            "at least one candidate shift per box is required".into(),
        ));
    }
    if !matches!(classify(m1)?, Kind::Fiber(_)) || !matches!(classify(m2)?, Kind::Fiber(_)) {
        return Err(SolenoidError::Unsupported(
            "perturbation shifts fiber families (graphs over the base circle)".into(),
        ));
    }
    let depth = opts.depth.min(m1.transversal.depth());
    let delta = opts.epsilon / 10.0;

    let flags = detect_tangencies(m1, m2, depth)?;
    let flagged: BTreeSet<Address> = flags.flagged.iter().map(|(a, _)| *a).collect();
    let cylinders = m1.cylinders_at(depth)?;
    if cylinders.len() > BOX_CAP {
        return Err(SolenoidError::Parameter(format!(
            "{} boxes exceed the perturbation budget scheme",
            cylinders.len()
        )));
    }
    let mut order: Vec<Address> = Vec::with_capacity(cylinders.len());
    for (a, _, _) in &cylinders {
        if flagged.contains(a) {
            order.push(*a);
        }
    }
    for (a, _, _) in &cylinders {
        if !flagged.contains(a) {
            order.push(*a);
        }
    }

    let mut work = m1.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut boxes = Vec::with_capacity(order.len());
    let mut min_margin = 1.0f64;
    for (i, addr) in order.iter().enumerate() {
        let budget = opts.epsilon * 0.5f64.powi(i as i32 + 1);
        let mut accepted = None;
        let mut tried = 0usize;
        while tried < opts.max_samples {
            let v = if tried == 0 {
                0.0
            } else {
                rng.random_range(-budget..=budget)
            };
            tried += 1;
            if v == 0.0 {
                work.shifts.remove(addr);
            } else {
                work.shifts.insert(*addr, v);
            }
            match certify_box(&work, m2, addr, depth, delta)? {
                Some(margin) => {
                    accepted = Some((v, margin));
                    break;
                }
                None => {
                    work.shifts.remove(addr);
                }
            }
        }
        let Some((v, margin)) = accepted else {
            return Err(SolenoidError::RetriesExhausted {
                cylinder: addr.to_string(),
                attempts: tried,
                budget,
            });
        };
        min_margin = min_margin.min(margin);
        boxes.push(BoxOutcome {
            cylinder: *addr,
            budget,
            shift: v,
            samples: tried,
            certified_margin: margin,
        });
    }

    let quad = QuadratureSpec::default();
    let class_drift = class_distance(&rs_class(m1, &quad)?, &rs_class(&work, &quad)?);
    Ok(PerturbReport {
        shifts: work.shifts.clone(),
        model: work,
        boxes,
        accept_threshold: delta,
        min_margin,
        class_drift,
    })
}

/// Lower bound on sigma_min of the stacked unit frames of two x-graph
/// leaves whose slope difference lies in `num`, given the slope enclosures
/// themselves. Unit frames have det = (s2 - s1) / sqrt((1+s1^2)(1+s2^2))
/// and sigma_min = sqrt(1 - sqrt(1 - det^2)).
fn margin_lower_bound(num: &Interval, s1: &Interval, s2: &Interval) -> Option<f64> {
    if num.contains_zero() {
        return None;
    }
    let inf_num = num.abs().lo;
    let sup_norm = ((1.0 + s1.square().hi) * (1.0 + s2.square().hi)).sqrt();
    let det_lo = (inf_num / sup_norm).min(1.0);
    Some((1.0 - (1.0 - det_lo * det_lo).max(0.0).sqrt()).max(0.0).sqrt())
}

/// Certify every crossing of the (shifted) box `addr` of `m1` with any
/// cylinder of `m2`: returns the smallest certified margin, 1 if the box
/// is crossing-free, or None when some potential crossing cannot be
/// certified above `delta` at the bisection floor.
fn certify_box(
    m1: &SolenoidModel,
    m2: &SolenoidModel,
    addr: &Address,
    depth: usize,
    delta: f64,
) -> Result<Option<f64>> {
    let k1 = classify(m1)?;
    let k2 = classify(m2)?;
    let (Kind::Fiber(f1), Kind::Fiber(f2)) = (k1, k2) else {
        return Err(SolenoidError::Unsupported(
            "margin certification needs fiber families".into(),
        ));
    };
    let z1 = height_iv(m1, addr)?;
    let torus = m1.ambient.is_torus();
    let (xlo, xhi) = match &m1.ambient {
        AmbientManifold::Torus { .. } => (0.0, 1.0),
        AmbientManifold::PlaneRegion { x, .. } => *x,
    };
    let d2 = depth.min(m2.transversal.depth());
    let mut worst = 1.0f64;
    for (a2, _, _) in m2.cylinders_at(d2)? {
        let z2 = height_iv(m2, &a2)?;
        let dz = z2.sub(&z1);
        let mut stack = vec![Interval::new(xlo, xhi)];
        let mut cells = 0usize;
        while let Some(x) = stack.pop() {
            cells += 1;
            if cells > CELL_BUDGET {
                return Ok(None);
            }
            let d = dz.add(&f2.base(&x, &z2)).sub(&f1.base(&x, &z1));
            let hit = if torus {
                contains_integer(&d)
            } else {
                d.contains_zero()
            };
            if !hit {
                continue;
            }
            let s1 = f1.base_dx(&x, &z1);
            let s2 = f2.base_dx(&x, &z2);
            let num = s2.sub(&s1);
            if let Some(lb) = margin_lower_bound(&num, &s1, &s2) {
                if lb >= delta {
                    worst = worst.min(lb);
                    continue;
                }
            }
            if x.width() <= X_FLOOR {
                return Ok(None);
            }
            let mid = x.midpoint();
            stack.push(Interval::new(x.lo, mid));
            stack.push(Interval::new(mid, x.hi));
        }
    }
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use crate::cantor::{CantorTransversal, MeasureKind, TransversalKind};
    use crate::error::SolenoidError;
    use crate::forms::TrigPoly;
    use crate::intersection::detect_tangencies;
    use crate::model::{
        AmbientManifold, FiberEmbedding, LinearDirections, Profile, SolenoidModel,
    };

    use super::{perturb_to_transversality, PerturbOptions};

    fn torus2() -> AmbientManifold {
        AmbientManifold::Torus { n: 2 }
    }

    fn atom_curve(profile: Profile, height: f64) -> SolenoidModel {
        SolenoidModel::graph(
            torus2(),
            profile,
            CantorTransversal::build(
                TransversalKind::Atom { point: height },
                0,
                MeasureKind::Bernoulli { p: 0.5 },
                1.0,
            )
            .unwrap(),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap()
    }

    /// Horizontal Cantor lines touching the minimum of a wavy curve: only
    /// the lowest box is tangent, it is treated first, and the run ends in
    /// certified general position without moving the class.
    #[test]
    fn tangent_box_is_shifted_first_and_certified() {
        let lines = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            CantorTransversal::build(
                TransversalKind::MiddleCantor { ratio: 0.6 },
                4,
                MeasureKind::Bernoulli { p: 0.5 },
                1.0,
            )
            .unwrap(),
            FiberEmbedding::new(1, 0.2, 0.45).unwrap(),
        )
        .unwrap();
        // gamma(x) = 0.2 + 0.095 (1 - cos 2 pi x), minimum 0.2 at x = 0
        let mut gamma = TrigPoly::constant(1, 0.295);
        gamma.add_assign(&TrigPoly::harmonic(1, &[1], -0.095, 0.0));
        let curve = atom_curve(Profile::Trig(gamma), 0.0);

        let opts = PerturbOptions {
            epsilon: 0.1,
            seed: 0,
            depth: 4,
            max_samples: 100,
        };
        let report = perturb_to_transversality(&lines, &curve, &opts).unwrap();

        assert_eq!(report.boxes.len(), 16);
        assert_eq!(report.boxes[0].cylinder.to_string(), "0000");
        assert_eq!(report.boxes[0].budget, 0.05);
        assert_ne!(report.boxes[0].shift, 0.0);
        assert!(report.boxes[0].shift.abs() <= 0.05);
        assert_eq!(report.shifts.len(), 1);
        for b in &report.boxes[1..] {
            assert_eq!(b.shift, 0.0);
            assert_eq!(b.samples, 1);
        }
        assert_eq!(report.accept_threshold, 0.01);
        assert!(report.min_margin >= 0.01);
        assert_eq!(report.class_drift, 0.0);

        let recheck = detect_tangencies(&report.model, &curve, 4).unwrap();
        assert!(recheck.is_clean());

        // same seed, same run
        let again = perturb_to_transversality(&lines, &curve, &opts).unwrap();
        assert_eq!(report.shifts, again.shifts);
    }

    /// A family already in general position accepts the zero shift in
    /// every box at the globally certified margin.
    #[test]
    fn clean_pair_accepts_the_identity() {
        let kronecker = SolenoidModel::linear(
            torus2(),
            LinearDirections::Slope(0.7),
            vec![0.0, 0.0],
            CantorTransversal::build(
                TransversalKind::FullInterval,
                2,
                MeasureKind::LebesgueRestricted,
                1.0,
            )
            .unwrap(),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let level = atom_curve(Profile::constant_zero(), 0.3);
        let report =
            perturb_to_transversality(&kronecker, &level, &PerturbOptions::default()).unwrap();
        assert_eq!(report.boxes.len(), 4);
        assert!(report.shifts.is_empty());
        for b in &report.boxes {
            assert_eq!(b.shift, 0.0);
            assert_eq!(b.samples, 1);
        }
        // unit-frame det is 0.7 / sqrt(1.49), hence sigma_min = 0.4253
        assert!(report.min_margin > 0.42 && report.min_margin < 0.43);
        assert_eq!(report.class_drift, 0.0);

        let vertical = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![0, 1]]),
            vec![0.0, 0.0],
            CantorTransversal::build(
                TransversalKind::FullInterval,
                0,
                MeasureKind::LebesgueRestricted,
                1.0,
            )
            .unwrap(),
            FiberEmbedding::new(0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            perturb_to_transversality(&kronecker, &vertical, &PerturbOptions::default()),
            Err(SolenoidError::Unsupported(_))
        ));
    }

    /// Parallel horizontal families can only be separated by moving a box
    /// past the other leaf; with a budget smaller than the distance every
    /// sample fails and the run reports the exhausted box.
    #[test]
    fn starved_budget_exhausts_retries() {
        let lines = SolenoidModel::linear(
            torus2(),
            LinearDirections::Integer(vec![vec![1, 0]]),
            vec![0.0, 0.0],
            CantorTransversal::build(
                TransversalKind::FullInterval,
                2,
                MeasureKind::LebesgueRestricted,
                1.0,
            )
            .unwrap(),
            FiberEmbedding::new(1, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let level = atom_curve(Profile::constant_zero(), 0.3);
        let err = perturb_to_transversality(
            &lines,
            &level,
            &PerturbOptions {
                epsilon: 0.01,
                seed: 1,
                depth: 2,
                max_samples: 50,
            },
        )
        .unwrap_err();
        match err {
            SolenoidError::RetriesExhausted {
                cylinder,
                attempts,
                budget,
            } => {
                assert_eq!(cylinder, "01");
                assert_eq!(attempts, 50);
                assert_eq!(budget, 0.005);
            }
            other => panic!("expected exhausted retries, got {other}"),
        }
    }
}
