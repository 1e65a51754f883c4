use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFiniteCoordinate { vertex: usize },
    #[error("element {element} references vertex {vertex}, which does not exist")]
    VertexOutOfRange { element: usize, vertex: usize },
    #[error("element {element} repeats a vertex")]
    RepeatedVertex { element: usize },
    #[error("element {element} has zero area")]
    ZeroArea { element: usize },
    #[error("elements {first} and {second} are duplicates")]
    DuplicateElement { first: usize, second: usize },
    #[error("edge ({a}, {b}) is shared by more than two elements")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("vertex {vertex} hangs on face ({a}, {b})")]
    HangingVertex { vertex: usize, a: usize, b: usize },
    #[error("vertex {vertex} belongs to no element")]
    UnusedVertex { vertex: usize },
    #[error("elements overlap: total area {element_area} differs from enclosed area {enclosed_area}")]
    Overlap { element_area: f64, enclosed_area: f64 },
    #[error("mesh has no elements")]
    Empty,
    #[error("element {element} is not in the mesh")]
    UnknownElement { element: usize },
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error("load background and target mesh do not descend from a common initial mesh")]
    IncompatibleMesh,
    #[error("element {element} of the target mesh is not nested with the load background")]
    NotNested { element: usize },
    #[error("combined polynomial degree {degree} exceeds the exact quadrature degree {max}")]
    DegreeOverflow { degree: usize, max: usize },
    #[error("load term refers to {kind} {index}, which does not exist in its background mesh")]
    BadIndex { kind: &'static str, index: usize },
    #[error("operation requires a density load but the load has a {0} term")]
    NotL2(&'static str),
    #[error("invalid load description: {0}")]
    Description(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradients stopped after {iterations} iterations with relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("local matrix is singular")]
    Singular,
    #[error("constraint residual {residual:e} exceeds tolerance {tolerance:e}")]
    Infeasible { residual: f64, tolerance: f64 },
    #[error("functions live on meshes that are not nested")]
    MeshMismatch,
    #[error("mean-value compatibility violated by {0:e}")]
    Incompatible(f64),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
