pub mod evaluate;
pub mod export;
pub mod generate;
pub mod plot;
pub mod sample;
pub mod train;
