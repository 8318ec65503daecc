//! Reference models that share no code with the library under test. They are
//! slow and deliberately simple; only the test suites use them.

pub mod bath;
pub mod memory;
pub mod pseudomode;
pub mod steering_lp;

/// 2×2 qubit matrix, `|e⟩` first.
pub type Qubit = [[num_complex::Complex64; 2]; 2];
