//! Intersection theory of measured solenoids: transversal crossing
//! enumeration, the pairing computed along mutually checking routes
//! (geometric counting, homology cup product, tube forms, leafwise
//! exhaustion), tangency detection with per-depth mass bounds, and the
//! constructive perturbation to general position.
//!
//! Sign and margin conventions: a crossing of complementary leaves carries
//! the sign of the determinant of the stacked unit frames (first factor's
//! frame rows on top), and its margin is the smallest singular value of
//! that stacked matrix. The margin is 1 exactly when the leaves meet
//! orthogonally and tends to 0 at a tangency.

mod exhaustion;
mod geometry;
mod pairing;
mod perturb;
mod submanifold;
mod tangency;

pub use exhaustion::{exhaustion_estimate, unique_ergodicity, Ergodicity, ExhaustionStep};
pub use geometry::find_intersections;
pub use pairing::{
    ae_pairing, pairing_exact, pairing_via_cup, pairing_via_thom, AePairing, PairingBreakdown,
    PairingRoute, ThomStep,
};
pub use perturb::{perturb_to_transversality, BoxOutcome, PerturbOptions, PerturbReport};
pub use submanifold::{intersect_submanifold, submanifold_model, SubmanifoldSpec};
pub use tangency::{detect_tangencies, fat_obstruction_certificate, ObstructionCertificate, TangencySet};

use crate::cantor::Address;

/// One transversal (or near-tangential) crossing of two leaves.
#[derive(Debug, Clone)]
pub struct IntersectionRecord {
    pub cylinder1: Address,
    pub cylinder2: Address,
    /// Ambient coordinates, wrapped into the fundamental domain on tori.
    pub point: Vec<f64>,
    /// Sign of det of the stacked unit frames, first factor on top.
    pub sign: f64,
    /// Smallest singular value of the stacked unit frames.
    pub margin: f64,
    /// True when the crossing could not be certified transversal (double
    /// root or margin below resolution); such records poison exact routes.
    pub tangential: bool,
}

/// Determinant of a small square matrix given as rows.
pub(crate) fn det_rows(rows: &[Vec<f64>]) -> f64 {
    match rows.len() {
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let m = rows;
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        4 => {
            let mut acc = 0.0;
            let mut sign = 1.0;
            for j in 0..4 {
                let minor: Vec<Vec<f64>> = rows[1..]
                    .iter()
                    .map(|r| {
                        r.iter()
                            .enumerate()
                            .filter(|(c, _)| *c != j)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                acc += sign * rows[0][j] * det_rows(&minor);
                sign = -sign;
            }
            acc
        }
        d => panic!("determinant of unsupported size {d}"),
    }
}

/// Smallest singular value of a square matrix given as rows (n <= 4):
/// closed form for n <= 2, cyclic Jacobi on A^T A above.
pub(crate) fn sigma_min_rows(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    match n {
        1 => rows[0][0].abs(),
        2 => {
            let t: f64 = rows.iter().flatten().map(|v| v * v).sum();
            let d = det_rows(rows);
            let disc = (t * t - 4.0 * d * d).max(0.0).sqrt();
            (0.5 * (t - disc)).max(0.0).sqrt()
        }
        3 | 4 => {
            // Gram matrix A^T A
            let mut g = [[0.0f64; 4]; 4];
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = (0..n).map(|r| rows[r][i] * rows[r][j]).sum();
                }
            }
            symmetric_min_eigenvalue(&mut g, n).max(0.0).sqrt()
        }
        d => panic!("singular values of unsupported size {d}"),
    }
}

/// Smallest eigenvalue of a symmetric matrix, cyclic Jacobi rotations.
fn symmetric_min_eigenvalue(a: &mut [[f64; 4]; 4], n: usize) -> f64 {
    for _sweep in 0..30 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let (aip, aiq) = (a[i][p], a[i][q]);
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let (api, aqi) = (a[p][i], a[q][i]);
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

/// Sign and margin of a crossing from the two unit frames.
pub(crate) fn crossing_data(f1: &[Vec<f64>], f2: &[Vec<f64>]) -> (f64, f64) {
    let rows: Vec<Vec<f64>> = f1.iter().chain(f2.iter()).cloned().collect();
    let d = det_rows(&rows);
    (d.signum(), sigma_min_rows(&rows))
}
