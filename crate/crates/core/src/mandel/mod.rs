//! Parameter-plane computations in the quadratic polynomial slice:
//! hyperbolic centers, external rays, wake membership, limb component
//! counts, and connectedness-locus renders of the deformed slices.

mod gleason;
mod ray;
mod render;
mod wake;

pub use gleason::{gleason_roots, CenterSet};
pub use ray::{trace_ray, RayPolyline};
pub use render::{render_slice, Render, RenderSpec};
pub use wake::{build_wake, limb_count, limb_count_with, LimbCount, Wake, WakeConfig};
