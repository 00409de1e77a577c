//! Heat equations on the ring of S-adic numbers.

pub mod error;
pub mod filtration;
pub mod funcspace;
pub mod markov;
pub mod sadic;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use filtration::{Filtration, FiltrationKind, GeneralSpec, PrimeSet};
pub use sadic::{CosetGrid, RadialPosition, SAdicPoint, Window};
pub use spectral::{CertifiedValue, RadialWeight, DEFAULT_EPS};

/// Double-precision instances of the generic types.
pub type TestFunction = funcspace::TestFunction<f64>;
pub type Symbol = spectral::SymbolAlpha<f64>;
pub type Field = spectral::SpectralField<f64>;

/// Single-precision instances.
pub type TestFunctionF32 = funcspace::TestFunction<f32>;
pub type SymbolF32 = spectral::SymbolAlpha<f32>;
pub type FieldF32 = spectral::SpectralField<f32>;
