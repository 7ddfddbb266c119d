pub mod coupling;
pub mod vacuum;
