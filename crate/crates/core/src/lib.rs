//! Mass-shell distribution calculus, wave-operator multipliers and dipole
//! scattering amplitudes, evaluated by smearing against closed-form wave
//! packets.

pub mod asymlim;
pub mod checks;
pub mod criteria;
pub mod dist;
pub mod error;
pub mod jet;
pub mod model;
pub mod packets;
pub mod perturb;
pub mod poly;
pub mod quad;
pub mod rng;
pub mod scatter;
pub mod waveop;

pub use error::{DistError, Error, ModelError, PacketError, QuadError};
pub use packets::WavePacket;
pub use poly::Poly;
pub use quad::{QuadSpec, SmearValue};
