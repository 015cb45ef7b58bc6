//! Client/server sessions for delegated computation on encrypted states.
//!
//! The client hides each mode behind a random displacement `D(Q, P)`, the
//! server runs its program on the encrypted state, and the client removes
//! the key with the correction produced by the correction algebra, scaled
//! for channel loss. Everything that crosses the channel is recorded in a
//! [`SessionTranscript`]; key material has no representation there.
//!
//! Fock-backend sessions keep the key as an exactly tracked phase-space
//! frame around a truncated core state (see [`FramedState`]), so keys far
//! outside the truncation are still simulated exactly.

mod channel;
mod epr;
mod estimation;
mod framed;
mod gadget;
mod key;
mod program;
mod session;
mod squeeze;
mod transcript;
mod verify;

pub use channel::ChannelModel;
pub use epr::{epr_encryption_ensemble, EprEnsemble};
pub use estimation::{estimate_channel, ChannelEstimate};
pub use framed::FramedState;
pub use gadget::{
    gadget_average_output, gadget_split_fisher, gadget_split_fisher_numeric, run_with_gadget,
    FisherEstimate, GadgetConfig, GadgetRecord, GadgetRun,
};
pub use key::EncryptionKey;
pub use program::{algebra_word, ProgramGate};
pub use session::{
    correction_displacements, run_gaussian_program, run_gaussian_program_fock, FockRun,
    GaussianRun, SessionOptions, StageStates,
};
pub use squeeze::{
    run_squeeze_gate, run_u2_via_squeeze, u2_squeeze_equivalence, EulerDecomposition, SqueezeRun,
};
pub use transcript::{digest_f64s, Direction, Message, Payload, SessionTranscript};
pub use verify::{fock_table_check, FockTableCheck};

#[cfg(test)]
mod tests;
