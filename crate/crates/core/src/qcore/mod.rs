//! Complex linear algebra and quantum primitives shared by every other module.

pub mod cholesky;
pub mod json;
pub mod linalg;
pub mod matrix;
pub mod pauli;
pub mod state;

pub use cholesky::param_count;
pub use json::MatrixJson;
pub use linalg::{hermitian_eig, nearest_psd, project_to_density, HermitianEig, HERMITIAN_TOL};
pub use matrix::{kron_vec, tensor_product, ComplexMatrix, C64};
pub use pauli::{PauliBasis, PauliOp};
pub use state::{state_from_cholesky_params, DensityMatrix};
