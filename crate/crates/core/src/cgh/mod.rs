//! RGB-D to hologram synthesis and hologram conditioning.
//!
//! A frame is sliced into depth layers, each layer is propagated to the
//! hologram plane per wavelength, and the summed complex field is optionally
//! given a linear phase carrier, double-phase encoded and contrast enhanced.

mod clahe;
mod encode;
mod hologram;
mod layers;

pub use clahe::{clahe, ClaheParams};
pub use encode::{
    add_linear_phase, antialias_filter, double_phase_encode, double_phase_encode_with, double_phase_pair, phase_fraction,
    DoublePhaseOptions,
};
pub use hologram::{
    enhance_hologram, synthesize, synthesize_layers, ChannelData, Encoding, HologramChannel, HologramSet,
    SynthesisParams, CHANNEL_NAMES,
};
pub use layers::{slab_index, slice_layers, InitialPhase, LayerStack, RgbdFrame};

/// Red, green and blue wavelengths in meters.
pub const RGB_WAVELENGTHS: [f64; 3] = [650e-9, 532e-9, 450e-9];
/// Hologram pixel pitch in meters.
pub const DEFAULT_PITCH: f64 = 8.0e-6;
/// Scene-to-hologram distance in meters.
pub const DEFAULT_BASE_DISTANCE: f64 = 0.6e-3;
