//! Slices of a solenoid along a fixed compact submanifold.
//!
//! Two targets are supported: coordinate subtori and closed graph curves.
//! A complementary slice on a 2-dimensional ambient produces the signed
//! point charge carried by the transversal (the geometric cap product).
//! A codimension-one subtorus slice of a plaque family on T^4 produces the
//! induced line solenoid over the same transversal.

use crate::cantor::{CantorTransversal, MeasureKind, TransversalKind};
use crate::error::{Result, SolenoidError};
use crate::model::{
    AmbientManifold, Family, FiberEmbedding, LinearDirections, PointSample, Profile,
    SolenoidModel,
};

use super::geometry::find_intersections;

/// A slicing target.
#[derive(Debug, Clone)]
pub enum SubmanifoldSpec {
    /// Coordinate subtorus `{ x_axis = value }`.
    Subtorus { axis: usize, value: f64 },
    /// Closed curve `y = profile(x)` in a 2-dimensional ambient.
    GraphCurve { profile: Profile },
}

fn wrap01(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r == 1.0 {
        0.0
    } else {
        r
    }
}

fn atom(point: f64) -> Result<CantorTransversal> {
    CantorTransversal::build(
        TransversalKind::Atom { point },
        0,
        MeasureKind::Bernoulli { p: 0.5 },
        1.0,
    )
}

/// Realise a slicing target as a mass-one solenoid over an atomic
/// transversal, so the crossing machinery applies to it verbatim. Only
/// targets with 1-dimensional leaves have such a model.
pub fn submanifold_model(
    ambient: &AmbientManifold,
    spec: &SubmanifoldSpec,
) -> Result<SolenoidModel> {
    match spec {
        SubmanifoldSpec::Subtorus { axis, value } => {
            if !ambient.is_torus() || ambient.dim() != 2 {
                return Err(SolenoidError::Unsupported(
                    "subtorus targets are modelled on T^2 only; higher-dimensional slices act on the solenoid directly".into(),
                ));
            }
            if *axis >= 2 {
                return Err(SolenoidError::Construction(format!(
                    "subtorus axis {axis} outside ambient dimension 2"
                )));
            }
            if !value.is_finite() {
                return Err(SolenoidError::Parameter(
                    "subtorus position must be finite".into(),
                ));
            }
            // The circle pinned at `value` on `axis`, running along the
            // other coordinate; the atom fixes the embedded height.
            let mut dir = vec![0i64; 2];
            dir[1 - axis] = 1;
            SolenoidModel::linear(
                ambient.clone(),
                LinearDirections::Integer(vec![dir]),
                vec![0.0; 2],
                atom(wrap01(*value))?,
                FiberEmbedding::new(*axis, 0.0, 1.0)?,
            )
        }
        SubmanifoldSpec::GraphCurve { profile } => {
            if ambient.dim() != 2 {
                return Err(SolenoidError::Unsupported(
                    "graph-curve targets live in 2-dimensional ambients".into(),
                ));
            }
            SolenoidModel::graph(
                ambient.clone(),
                profile.clone(),
                atom(0.0)?,
                FiberEmbedding::new(1, 0.0, 1.0)?,
            )
        }
    }
}

/// Slice `m` along `spec`.
///
/// On a 2-dimensional ambient the slice is complementary: the result is a
/// point family with one sample per leaf sheet crossing the target, each
/// carrying the full mass of its cylinder and the sign of the (leaf,
/// target) frame. Any tangential contact aborts the slice.
///
/// On T^4 a subtorus slice of an integer plaque family is the line
/// solenoid cut out on each plaque, oriented so that the slice direction
/// followed by the increasing sliced coordinate is positive on the plaque.
/// The sliced coordinate must enter exactly one period vector, with unit
/// coefficient; non-unit windings change the transversal type and are not
/// modelled.
pub fn intersect_submanifold(
    m: &SolenoidModel,
    spec: &SubmanifoldSpec,
    depth: usize,
) -> Result<SolenoidModel> {
    let n = m.ambient_dim();
    if n == 2 {
        let target = submanifold_model(&m.ambient, spec)?;
        let records = find_intersections(m, &target, depth)?;
        if let Some(r) = records.iter().find(|r| r.tangential) {
            return Err(SolenoidError::Tangency {
                cylinder: r.cylinder1.to_string(),
                reason: "a leaf meets the slice target tangentially; perturb the family first"
                    .into(),
            });
        }
        let samples = records
            .into_iter()
            .map(|r| {
                Ok(PointSample {
                    mass: m.transversal.cylinder_measure(&r.cylinder1)?,
                    address: r.cylinder1,
                    position: r.point,
                    sign: r.sign,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        return SolenoidModel::points(m.ambient.clone(), samples);
    }
    let SubmanifoldSpec::Subtorus { axis, value } = spec else {
        return Err(SolenoidError::Unsupported(
            "only subtorus slices are defined away from dimension 2".into(),
        ));
    };
    if *axis >= n {
        return Err(SolenoidError::Construction(format!(
            "subtorus axis {axis} outside ambient dimension {n}"
        )));
    }
    if m.deformation.is_some() {
        return Err(SolenoidError::Unsupported(
            "slice plaque families before deforming them".into(),
        ));
    }
    let (plaque_cols, base) = match &m.family {
        Family::Linear(d) => match &d.directions {
            LinearDirections::Integer(cols) if cols.len() == 2 => (cols, &d.offset),
            _ => {
                return Err(SolenoidError::Unsupported(
                    "higher-dimensional slicing needs an integer plaque family".into(),
                ))
            }
        },
        _ => {
            return Err(SolenoidError::Unsupported(
                "higher-dimensional slicing needs an integer plaque family".into(),
            ))
        }
    };
    let (c1, c2) = (&plaque_cols[0], &plaque_cols[1]);
    let (a, b) = (c1[*axis], c2[*axis]);
    if a == 0 && b == 0 {
        return Err(SolenoidError::Tangency {
            cylinder: "(root)".into(),
            reason: "the plaques are parallel to the subtorus; no transversal slice exists"
                .into(),
        });
    }
    if a.abs() + b.abs() != 1 {
        return Err(SolenoidError::Unsupported(
            "subtorus slicing needs a unit coefficient on the sliced coordinate".into(),
        ));
    }
    // Kernel of the sliced coordinate on the plaque lattice. In plaque
    // coordinates (s, t) the direction is (b, -a); the 2x2 determinant
    // against the gradient (a, b) is a^2 + b^2 > 0, which fixes the stated
    // orientation.
    let dir: Vec<i64> = (0..n).map(|i| b * c1[i] - a * c2[i]).collect();
    let w = wrap01(*value);
    // Particular solution s0 col1 + t0 col2 moving the base point onto the
    // slice; a unit coefficient makes it exact.
    let (s0, t0) = if a != 0 {
        ((w - base[*axis]) / a as f64, 0.0)
    } else {
        (0.0, (w - base[*axis]) / b as f64)
    };
    let offset: Vec<f64> = (0..n)
        .map(|i| wrap01(base[i] + s0 * c1[i] as f64 + t0 * c2[i] as f64))
        .collect();
    let mut sliced = SolenoidModel::linear(
        m.ambient.clone(),
        LinearDirections::Integer(vec![dir]),
        offset,
        m.transversal.clone(),
        m.embedding.clone(),
    )?;
    sliced.shifts = m.shifts.clone();
    Ok(sliced)
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use crate::cantor::{CantorTransversal, MeasureKind, TransversalKind};
    use crate::currents::{evaluate_current, rs_class, QuadratureSpec};
    use crate::forms::{AnyForm, DifferentialForm, TrigPoly};
    use crate::intersection::pairing_exact;
    use crate::model::{
        AmbientManifold, Family, FiberEmbedding, LinearDirections, Profile, SolenoidModel,
    };

    use super::{intersect_submanifold, SubmanifoldSpec};

    fn full_interval(depth: usize, mass: f64) -> CantorTransversal {
        CantorTransversal::build(
            TransversalKind::FullInterval,
            depth,
            MeasureKind::LebesgueRestricted,
            mass,
        )
        .unwrap()
    }

    fn total_charge(points: &SolenoidModel) -> f64 {
        let one = AnyForm::Trig(DifferentialForm::constant(2, &[], 1.0));
        evaluate_current(points, &one, &QuadratureSpec::default()).unwrap()
    }

    #[test]
    fn kronecker_slice_charges_every_sheet() {
        let m = SolenoidModel::linear(
            AmbientManifold::Torus { n: 2 },
            LinearDirections::Slope(0.37),
            vec![0.0, 0.0],
            full_interval(3, 0.8),
            FiberEmbedding::new(1, 0.3, 1.3).unwrap(),
        )
        .unwrap();
        let spec = SubmanifoldSpec::Subtorus {
            axis: 0,
            value: 0.6,
        };
        let slice = intersect_submanifold(&m, &spec, 3).unwrap();
        let Family::Points { samples } = &slice.family else {
            panic!("expected a point family");
        };
        assert_eq!(samples.len(), 8);
        for s in samples {
            assert_abs_diff_eq!(s.mass, 0.1, epsilon = 1e-15);
            assert_eq!(s.sign, 1.0);
            assert_abs_diff_eq!(s.position[0], 0.6, epsilon = 1e-12);
        }
        // the sheet through the lowest cylinder sits at height 0.3
        let y0 = (0.3f64 + 0.37 * 0.6).rem_euclid(1.0);
        assert!(samples
            .iter()
            .any(|s| (s.position[1] - y0).abs() < 1e-12));
        assert_abs_diff_eq!(total_charge(&slice), 0.8, epsilon = 1e-12);

        // total charge = pairing against the vertical circle
        let vert = SolenoidModel::linear(
            AmbientManifold::Torus { n: 2 },
            LinearDirections::Integer(vec![vec![0, 1]]),
            vec![0.0, 0.0],
            full_interval(0, 1.0),
            FiberEmbedding::new(0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        let pairing = pairing_exact(&m, &vert, 3).unwrap();
        assert_abs_diff_eq!(total_charge(&slice), pairing.value, epsilon = 1e-12);
    }

    #[test]
    fn graph_slice_lands_on_the_profile() {
        let m = SolenoidModel::graph(
            AmbientManifold::Torus { n: 2 },
            Profile::Trig(TrigPoly::harmonic(1, &[1], 0.05, 0.0)),
            full_interval(2, 1.0),
            FiberEmbedding::new(1, 0.15, 0.35).unwrap(),
        )
        .unwrap();
        let spec = SubmanifoldSpec::Subtorus {
            axis: 0,
            value: 0.25,
        };
        let slice = intersect_submanifold(&m, &spec, 2).unwrap();
        let Family::Points { samples } = &slice.family else {
            panic!("expected a point family");
        };
        assert_eq!(samples.len(), 4);
        // psi(1/4) = 0, so the points sit exactly at the embedded heights
        let heights = [0.15, 0.2, 0.25, 0.3];
        for (s, h) in samples.iter().zip(heights) {
            assert_abs_diff_eq!(s.position[1], h, epsilon = 1e-12);
            assert_eq!(s.sign, 1.0);
            assert_abs_diff_eq!(s.mass, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn vertical_family_slice_signs_and_tangency() {
        let m = SolenoidModel::linear(
            AmbientManifold::Torus { n: 2 },
            LinearDirections::Integer(vec![vec![0, 1]]),
            vec![0.0, 0.0],
            full_interval(2, 1.0),
            FiberEmbedding::new(0, 0.0, 1.0).unwrap(),
        )
        .unwrap();
        // vertical leaves against the horizontal circle: sign -1 per sheet
        let slice = intersect_submanifold(
            &m,
            &SubmanifoldSpec::Subtorus {
                axis: 1,
                value: 0.5,
            },
            2,
        )
        .unwrap();
        assert_abs_diff_eq!(total_charge(&slice), -1.0, epsilon = 1e-12);

        // a slice through a leaf is tangential and must name the cylinder
        let err = intersect_submanifold(
            &m,
            &SubmanifoldSpec::Subtorus {
                axis: 0,
                value: 0.25,
            },
            2,
        )
        .unwrap_err();
        match err {
            crate::error::SolenoidError::Tangency { cylinder, .. } => {
                assert_eq!(cylinder, "01");
            }
            other => panic!("expected a tangency error, got {other}"),
        }

        // graph-curve target crossed downward by the vertical leaves
        let wavy = intersect_submanifold(
            &m,
            &SubmanifoldSpec::GraphCurve {
                profile: Profile::Trig(TrigPoly::harmonic(1, &[1], 0.05, 0.0)),
            },
            2,
        )
        .unwrap();
        assert_abs_diff_eq!(total_charge(&wavy), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn plaque_slice_is_the_induced_line_family() {
        let m = SolenoidModel::linear(
            AmbientManifold::Torus { n: 4 },
            LinearDirections::Integer(vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0]]),
            vec![0.0; 4],
            full_interval(1, 1.0),
            FiberEmbedding::new(2, 0.1, 0.9).unwrap(),
        )
        .unwrap();
        let slice = intersect_submanifold(
            &m,
            &SubmanifoldSpec::Subtorus {
                axis: 0,
                value: 0.25,
            },
            1,
        )
        .unwrap();
        let Family::Linear(d) = &slice.family else {
            panic!("expected a linear family");
        };
        assert_eq!(
            d.directions,
            LinearDirections::Integer(vec![vec![0, -1, 0, 0]])
        );
        assert_abs_diff_eq!(d.offset[0], 0.25, epsilon = 1e-15);
        let class = rs_class(&slice, &QuadratureSpec::default()).unwrap();
        let expect = [0.0, -1.0, 0.0, 0.0];
        for (c, e) in class.iter().zip(expect) {
            assert_abs_diff_eq!(*c, e, epsilon = 1e-10);
        }

        // slicing the other coordinate keeps the first period vector
        let other = intersect_submanifold(
            &m,
            &SubmanifoldSpec::Subtorus {
                axis: 1,
                value: 0.7,
            },
            1,
        )
        .unwrap();
        let Family::Linear(d) = &other.family else {
            panic!("expected a linear family");
        };
        assert_eq!(
            d.directions,
            LinearDirections::Integer(vec![vec![1, 0, 0, 0]])
        );
        assert_abs_diff_eq!(d.offset[1], 0.7, epsilon = 1e-15);

        // parallel slice coordinate: degenerate
        let parallel = intersect_submanifold(
            &m,
            &SubmanifoldSpec::Subtorus {
                axis: 3,
                value: 0.5,
            },
            1,
        );
        assert!(matches!(
            parallel,
            Err(crate::error::SolenoidError::Tangency { .. })
        ));
    }
}
