pub mod bounds;
pub mod exponent;
pub mod figure;
pub mod simulate;
