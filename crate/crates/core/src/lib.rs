//! Parsing, typing, interpretation and static verification of Pest programs.

pub mod syntax;
pub mod types;
pub mod logic;
pub mod interp;
pub mod solver;
pub mod infer;
pub mod sugar;
pub mod strengthen;
pub mod verify;
pub mod pipeline;
pub mod report;
