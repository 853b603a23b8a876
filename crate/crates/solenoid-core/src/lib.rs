//! Measured solenoids on flat tori: transversal Cantor structures,
//! Ruelle-Sullivan currents, homology classes, and intersection pairings.

pub mod cantor;
pub mod currents;
pub mod error;
pub mod forms;
pub mod intersection;
pub mod interval;
pub mod model;
pub mod quad;

pub use cantor::{Address, CantorTransversal, GapSchedule, MeasureKind, ReturnMap, TransversalKind};
pub use currents::{evaluate_current, rs_class, QuadratureSpec};
pub use error::{Result, SolenoidError};
pub use forms::{AnyForm, DifferentialForm, ThomForm, TrigPoly};
pub use model::{
    AmbientManifold, Family, FiberEmbedding, Homotopy, LinearDirections, Profile, SolenoidModel,
};
