#![allow(dead_code)]

pub mod brute;
pub mod props;
pub mod strategies;
