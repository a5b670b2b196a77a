//! File formats: PNML, BPMN XML, PCL source and POWL JSON.

mod bpmn;
mod json;
mod pcl;
mod pnml;

use quick_xml::escape::resolve_predefined_entity;
use quick_xml::events::BytesRef;
use thiserror::Error;

pub use bpmn::{bpmn_export, bpmn_verify, BpmnSummary};
pub use json::{powl_json_export, powl_json_import};
pub use pcl::emit_pcl;
pub use pnml::{pnml_export, pnml_import, PTNET_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl SerializeError {
    pub fn kind(&self) -> &'static str {
        match self {
            SerializeError::MalformedXml(_) => "malformed-xml",
            SerializeError::InvalidNet(_) => "invalid-net",
            SerializeError::MalformedDocument(_) => "malformed-document",
            SerializeError::InvariantViolation(_) => "invariant-violation",
        }
    }
}

fn resolve_ref(r: &BytesRef<'_>) -> Result<String, SerializeError> {
    let bad = |e: String| SerializeError::MalformedXml(e);
    if let Some(c) = r.resolve_char_ref().map_err(|e| bad(e.to_string()))? {
        return Ok(c.to_string());
    }
    let name = r.decode().map_err(|e| bad(e.to_string()))?;
    resolve_predefined_entity(&name)
        .map(str::to_string)
        .ok_or_else(|| bad(format!("unknown entity &{name};")))
}
