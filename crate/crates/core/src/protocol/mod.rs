//! Two-node self-taught training: decoders learn from the shared known sequence, transmitters
//! learn from echo agreement through a local critic. Nodes exchange only sample values.

mod eval;
mod link;
mod node;
mod objectives;
mod pass;
mod schedule;
mod train;

pub use eval::{evaluate_cer, evaluate_direction, CerEvaluation};
pub use link::{Direction, Leg, LinkMessage, NodeId, Transcript};
pub use node::{LearningRates, Node, ReceiverUpdate, TransmitterUpdate};
pub use objectives::{crit_objective, critic_input_gradient, rx_objective, tx_objective, Objective};
pub use pass::{run_direction_pass, EchoRecord, PassOutcome};
pub use schedule::EpochSchedule;
pub use train::{derive_seed, run_epoch, train_link, EpochOutcome, LinkSession, TrainOutcome, TrainingConfig};
