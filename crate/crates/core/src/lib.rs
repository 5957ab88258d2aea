pub mod channel;
pub mod cli;
pub mod force;
pub mod kinematics;
pub mod latency;
pub mod numerics;
pub mod pipeline;
pub mod scenario;
