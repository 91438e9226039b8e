//! Numerical laboratory for the series `g(x) = Σ_{l≥1} (1 − 2{lx})/l`, its
//! decomposition through Wilton's function, and the moments `∫₀¹ |g|^K dx`.

pub mod cf;
pub mod error;
pub mod gfun;
pub mod mc;
pub mod measure;
pub mod moments;
pub mod special;
pub mod verify;
pub mod wilton;

pub use cf::{cf_expand, cf_expand_default, orbit_terms, CfOrbit, CfTail, RealSpec};
pub use error::{Error, Result};
pub use special::EvalResult;
pub use wilton::WiltonEval;
