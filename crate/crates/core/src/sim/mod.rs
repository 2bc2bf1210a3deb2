pub mod frame;
pub mod noise;
pub mod tableau;

pub use frame::{apply_pauli_channel, frame_inject, frame_sample, propagate_gate, shot_rng, PauliFrame, ShotRecord};
pub use noise::{NoiseModel, Pauli};
pub use tableau::{tableau_run, tableau_run_injected, CliffordTableau, TableauRecord};
