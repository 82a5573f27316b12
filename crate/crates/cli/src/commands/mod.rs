pub mod evaluate;
pub mod explain;
pub mod pipeline;
pub mod select;
pub mod synth;
pub mod train;
