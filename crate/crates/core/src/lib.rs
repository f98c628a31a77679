pub mod cli;
pub mod arith;
pub mod blocks;
pub mod error;
pub mod group;
pub mod quadratic;
pub mod kfield;
pub mod factorizer;
