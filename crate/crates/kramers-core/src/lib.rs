pub mod expr;
pub mod landscape;
pub mod linalg;
pub mod labelling;
pub mod saddle;
pub mod graded;
pub mod discretize;
pub mod quasimode;
pub mod sde;

pub use discretize::{assemble, peclet, small_spectrum, DiscretizeError, Form, Grid, OperatorMatrix, SpectrumResult};
pub use expr::{parse, Expr, ExprError};
pub use graded::{ClusterReport, GradedError, GradedStructure};
pub use labelling::{analyze, LabelError, Labelling, WellEntry, WellMap};
pub use landscape::{find_critical_points, preset, CriticalKind, CriticalPoint, Landscape, LandscapeError, LandscapeSpec, PRESETS};
pub use quasimode::{Quasimode, QuasimodeError};
pub use saddle::{EkPrediction, SaddleError, SaddleSpectralData};
pub use sde::{HittingStats, SdeError, SimulationConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
