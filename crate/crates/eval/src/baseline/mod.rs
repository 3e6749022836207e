//! Geometric contact baseline: intersect a posed hand mesh with the sensor
//! plane, sweeping the unknown hand scale to best match ground truth.

pub mod contact;
pub mod hand;
pub mod mesh;
pub mod plane;

pub use contact::{
    contact_from_mesh, gather_vertex_values, project_mesh_values, scale_sweep, sweep_scales,
    SweepResult, VertexSplat, DEFAULT_SCALE_RANGE, DEFAULT_SCALE_STEPS,
};
pub use hand::{
    capsule, hand_mesh, hidden_scale_sequence, pressing_sequence, press_to_depth, uv_sphere, HandPose,
};
pub use mesh::{format_mesh, parse_mesh, read_mesh, write_mesh, HandMesh};
pub use plane::{PinholeCamera, PlaneModel};
