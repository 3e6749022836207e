//! Paired RGB / pressure data: the on-disk recording layout, stream
//! synchronization, procedural scene synthesis, participant splits and
//! image degradation.

pub mod degrade;
pub mod error;
pub mod recording;
pub mod sample;
pub mod split;
pub mod sync;
pub mod synth;

pub use degrade::{degrade, DegradeSpec};
pub use error::{DataError, Result};
pub use recording::{load_recording, write_recording, Recording};
pub use sample::FrameSample;
pub use split::ParticipantSplit;
pub use sync::{synchronize_and_subsample, Pairing};
pub use synth::{
    render_scene, synthesize_sample, Action, HandSilhouette, Lighting, Persona, PressPrimitive,
    RenderedScene, SceneSpec, SynthConfig,
};
