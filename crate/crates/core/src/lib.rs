pub mod calendar;
pub mod cli;
pub mod dist;
pub mod entropy;
pub mod fit;
pub mod genmodel;
pub mod ingestion;
pub mod lifepath;
pub mod optim;
pub mod series;
pub mod synth;
pub mod validate;
