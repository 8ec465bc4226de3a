use thiserror::Error;

/// Errors shared across the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot amplitude-encode an all-zero vector")]
    DegenerateEncoding,

    #[error("{len} values exceed the capacity 2^{n_qubits} of the register")]
    EncodingCapacity { len: usize, n_qubits: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("control and target qubit indices overlap")]
    OverlappingQubits,

    #[error("register qubit indices must be distinct")]
    DuplicateQubit,

    #[error("post-selection amplitude {amplitude:.3e} is below threshold; the block output is numerically null")]
    PostSelectionFailure { amplitude: f64 },

    #[error("kernel has no nonzero coefficient")]
    DegenerateKernel,

    #[error("window size {k} is too small; the quantum convolution needs K >= 4")]
    WindowTooSmall { k: usize },

    #[error("block of {h}x{w} is too small for a valid 3x3 convolution")]
    BlockTooSmall { h: usize, w: usize },

    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),

    #[error("operator center coefficient is zero; the Jacobi smoother is undefined")]
    SmootherUndefined,

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("cannot assemble an operator from an empty part list")]
    EmptyAssembly,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
