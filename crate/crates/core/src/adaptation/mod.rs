//! Online adaptation of the operator parameters: the elite-alignment loss,
//! exact reverse-mode gradients through a recorded reproduction pass, AdamW
//! updates and parameter initialization.

mod adamw;
mod backward;
pub mod gradcheck;
mod init;

pub use adamw::{adamw_step, AdamWConfig, AdamWState};
pub use backward::{adaptation_loss, backward, backward_from_output, ThetaGradients};
pub use init::init_theta;
