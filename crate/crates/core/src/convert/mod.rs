//! Translations out of POWL: workflow nets, BPMN graphs and render graphs.

mod bpmn;
mod pn;
mod render;

use thiserror::Error;

pub use bpmn::{powl_to_bpmn, BpmnGraph, BpmnKind, BpmnNode, SequenceFlow};
pub use pn::powl_to_pn;
pub use render::{to_render_graph, RenderEdge, RenderGraph, RenderNode, View};

use crate::powl::Violation;
use crate::semantics::NetError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("model is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("translation produced a malformed net: {0}")]
    Net(#[from] NetError),
}
