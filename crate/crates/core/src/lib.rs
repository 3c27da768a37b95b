pub mod channel;
pub mod error;
pub mod hull;
pub mod joint;
pub mod optim;
pub mod oracle;
pub mod partition;
pub mod prob;
pub mod sim;
pub mod source;
