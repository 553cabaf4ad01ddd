pub mod calibrate;
pub mod clip;
pub mod condition;
pub mod fk;
pub mod mask;
pub mod metrics;
pub mod track;
pub mod validate;
