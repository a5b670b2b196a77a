use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::SerializeError;
use crate::convert::{BpmnGraph, BpmnKind, BpmnNode, SequenceFlow};

pub const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";

fn element(kind: &BpmnKind) -> &'static str {
    match kind {
        BpmnKind::StartEvent => "startEvent",
        BpmnKind::EndEvent => "endEvent",
        BpmnKind::Task { .. } => "task",
        BpmnKind::ExclusiveGateway => "exclusiveGateway",
        BpmnKind::ParallelGateway => "parallelGateway",
    }
}

/// Semantic BPMN 2.0 XML without diagram interchange.
pub fn bpmn_export(graph: &BpmnGraph) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<definitions xmlns=\"{BPMN_NS}\" id=\"definitions\" targetNamespace=\"urn:promoai\">"
    );
    out.push_str("  <process id=\"process\" isExecutable=\"false\">\n");
    for n in &graph.nodes {
        let id = escape(n.id.as_str());
        match &n.kind {
            BpmnKind::Task { label } => {
                let _ = writeln!(out, "    <task id=\"{id}\" name=\"{}\"/>", escape(label.as_str()));
            }
            kind => {
                let _ = writeln!(out, "    <{} id=\"{id}\"/>", element(kind));
            }
        }
    }
    for f in &graph.flows {
        let _ = writeln!(
            out,
            "    <sequenceFlow id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"/>",
            escape(f.id.as_str()),
            escape(f.source.as_str()),
            escape(f.target.as_str())
        );
    }
    out.push_str("  </process>\n</definitions>\n");
    out
}

/// Element counts of a BPMN document that passed [`bpmn_verify`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BpmnSummary {
    pub start_events: usize,
    pub end_events: usize,
    pub tasks: usize,
    pub exclusive_gateways: usize,
    pub parallel_gateways: usize,
    pub sequence_flows: usize,
}

fn attr(e: &BytesStart<'_>, key: &str) -> Result<Option<String>, SerializeError> {
    match e.try_get_attribute(key) {
        Ok(Some(a)) => a
            .unescape_value()
            .map(|v| Some(v.into_owned()))
            .map_err(|err| SerializeError::MalformedXml(err.to_string())),
        Ok(None) => Ok(None),
        Err(err) => Err(SerializeError::MalformedXml(err.to_string())),
    }
}

fn need(e: &BytesStart<'_>, key: &str, elem: &str) -> Result<String, SerializeError> {
    attr(e, key)?.ok_or_else(|| {
        SerializeError::MalformedDocument(format!("<{elem}> element without `{key}` attribute"))
    })
}

/// Re-reads an exported document and checks that it has one process, only
/// known elements, unique ids, and flows whose references all resolve.
pub fn bpmn_verify(xml: &str) -> Result<BpmnSummary, SerializeError> {
    let mut reader = Reader::from_str(xml);
    let mut depth = 0usize;
    let mut processes = 0usize;
    let mut in_process = false;
    let mut graph = BpmnGraph::default();
    let mut summary = BpmnSummary::default();

    loop {
        let event = reader
            .read_event()
            .map_err(|e| SerializeError::MalformedXml(e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                let empty = matches!(event, Event::Empty(_));
                match (depth, name.as_str()) {
                    (0, "definitions") => {}
                    (0, other) => {
                        return Err(SerializeError::MalformedDocument(format!(
                            "root element is <{other}>, expected <definitions>"
                        )))
                    }
                    (1, "process") => {
                        processes += 1;
                        in_process = !empty;
                    }
                    (2, "sequenceFlow") if in_process => {
                        graph.flows.push(SequenceFlow {
                            id: need(e, "id", &name)?,
                            source: need(e, "sourceRef", &name)?,
                            target: need(e, "targetRef", &name)?,
                        });
                        summary.sequence_flows += 1;
                    }
                    (2, elem) if in_process => {
                        let id = need(e, "id", elem)?;
                        let kind = match elem {
                            "startEvent" => BpmnKind::StartEvent,
                            "endEvent" => BpmnKind::EndEvent,
                            "task" => BpmnKind::Task {
                                label: attr(e, "name")?.unwrap_or_default(),
                            },
                            "exclusiveGateway" => BpmnKind::ExclusiveGateway,
                            "parallelGateway" => BpmnKind::ParallelGateway,
                            other => {
                                return Err(SerializeError::MalformedDocument(format!(
                                    "unexpected element <{other}> in process"
                                )))
                            }
                        };
                        match kind {
                            BpmnKind::StartEvent => summary.start_events += 1,
                            BpmnKind::EndEvent => summary.end_events += 1,
                            BpmnKind::Task { .. } => summary.tasks += 1,
                            BpmnKind::ExclusiveGateway => summary.exclusive_gateways += 1,
                            BpmnKind::ParallelGateway => summary.parallel_gateways += 1,
                        }
                        graph.nodes.push(BpmnNode { id, kind });
                    }
                    _ => {}
                }
                if !empty {
                    depth += 1;
                }
            }
            Event::End(_) => {
                depth = depth.saturating_sub(1);
                if depth == 1 {
                    in_process = false;
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if depth != 0 {
        return Err(SerializeError::MalformedXml("unclosed elements at end of document".into()));
    }
    if processes != 1 {
        return Err(SerializeError::MalformedDocument(format!(
            "expected exactly one <process>, found {processes}"
        )));
    }
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for id in graph.nodes.iter().map(|n| &n.id).chain(graph.flows.iter().map(|f| &f.id)) {
        *ids.entry(id.as_str()).or_default() += 1;
    }
    if let Some((id, _)) = ids.iter().find(|(_, &c)| c > 1) {
        return Err(SerializeError::MalformedDocument(format!("duplicate id {id}")));
    }
    let issues = graph.check();
    if !issues.is_empty() {
        return Err(SerializeError::MalformedDocument(issues.join("; ")));
    }
    Ok(summary)
}
