use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{resolve_ref, SerializeError};
use crate::powl::Label;
use crate::semantics::{NetBuilder, PetriNet};

pub const PTNET_TYPE: &str = "http://www.pnml.org/version-2009/grammar/ptnet";

/// Single-page place/transition net document. Silent transitions carry no
/// `name` element.
pub fn pnml_export(net: &PetriNet) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n");
    let _ = writeln!(out, "  <net id=\"net\" type=\"{PTNET_TYPE}\">");
    out.push_str("    <page id=\"page\">\n");
    let initial = net.initial_place();
    for (i, p) in net.places().iter().enumerate() {
        let id = escape(p.as_str());
        let _ = writeln!(out, "      <place id=\"{id}\">");
        let _ = writeln!(out, "        <name><text>{id}</text></name>");
        if i == initial.0 {
            out.push_str("        <initialMarking><text>1</text></initialMarking>\n");
        }
        out.push_str("      </place>\n");
    }
    for t in net.transitions() {
        let id = escape(t.id.as_str());
        match &t.label {
            Some(label) => {
                let _ = writeln!(out, "      <transition id=\"{id}\">");
                let _ = writeln!(out, "        <name><text>{}</text></name>", escape(label.as_str()));
                out.push_str("      </transition>\n");
            }
            None => {
                let _ = writeln!(out, "      <transition id=\"{id}\"/>");
            }
        }
    }
    for (i, (source, target)) in net.arc_ids().enumerate() {
        let _ = writeln!(
            out,
            "      <arc id=\"arc_{i}\" source=\"{}\" target=\"{}\"/>",
            escape(source),
            escape(target)
        );
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}

#[derive(Default)]
struct RawNet {
    places: Vec<String>,
    marking: BTreeMap<String, u32>,
    transitions: Vec<(String, Option<String>)>,
    arcs: Vec<(String, String)>,
}

fn attr(e: &BytesStart<'_>, key: &str) -> Result<Option<String>, SerializeError> {
    for a in e.attributes() {
        let a = a.map_err(|err| SerializeError::MalformedXml(err.to_string()))?;
        if a.key.as_ref() == key.as_bytes() {
            let v = a
                .unescape_value()
                .map_err(|err| SerializeError::MalformedXml(err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart<'_>, key: &str) -> Result<String, SerializeError> {
    attr(e, key)?.ok_or_else(|| {
        SerializeError::InvalidNet(format!(
            "<{}> element without `{key}` attribute",
            String::from_utf8_lossy(e.name().as_ref())
        ))
    })
}

/// Reads a PNML document back into a workflow net. The initial place is the
/// marked one; the final place is the unique place without outgoing arcs.
pub fn pnml_import(xml: &str) -> Result<PetriNet, SerializeError> {
    let mut reader = Reader::from_str(xml);
    let mut text = String::new();
    let mut stack: Vec<String> = Vec::new();
    // Element id that owns the current name/initialMarking, if any.
    let mut owner: Option<(String, bool)> = None;
    let mut raw = RawNet::default();
    let mut seen_net = false;
    let mut seen_root = false;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| SerializeError::MalformedXml(e.to_string()))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                let empty = matches!(event, Event::Empty(_));
                if stack.is_empty() {
                    if name != "pnml" {
                        return Err(SerializeError::MalformedXml(format!(
                            "root element is <{name}>, expected <pnml>"
                        )));
                    }
                    seen_root = true;
                }
                match name.as_str() {
                    "net" => seen_net = true,
                    "place" if seen_net => {
                        let id = required(e, "id")?;
                        raw.places.push(id.clone());
                        owner = Some((id, true));
                    }
                    "transition" if seen_net => {
                        let id = required(e, "id")?;
                        raw.transitions.push((id.clone(), None));
                        owner = Some((id, false));
                    }
                    "arc" if seen_net => {
                        raw.arcs.push((required(e, "source")?, required(e, "target")?));
                    }
                    _ => {}
                }
                if name == "text" {
                    text.clear();
                }
                if !empty {
                    stack.push(name);
                } else if matches!(stack.last().map(String::as_str), Some("page")) {
                    owner = None;
                }
            }
            Event::End(_) => {
                let Some(name) = stack.pop() else { continue };
                match name.as_str() {
                    "place" | "transition" => owner = None,
                    "text" => {
                        let content = std::mem::take(&mut text);
                        let parent = stack.last().map(String::as_str);
                        let grand = stack.len().checked_sub(2).map(|i| stack[i].as_str());
                        match (&owner, parent, grand) {
                            (Some((_, false)), Some("name"), Some("transition")) => {
                                if let Some(last) = raw.transitions.last_mut() {
                                    last.1 = Some(content);
                                }
                            }
                            (Some((id, true)), Some("initialMarking"), _) => {
                                let tokens: u32 = content.trim().parse().map_err(|_| {
                                    SerializeError::InvalidNet(format!(
                                        "initial marking of {id} is not a token count: {content:?}"
                                    ))
                                })?;
                                raw.marking.insert(id.clone(), tokens);
                            }
                            _ => {}
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) => {
                if stack.last().is_some_and(|n| n == "text") {
                    let piece = t.decode().map_err(|e| SerializeError::MalformedXml(e.to_string()))?;
                    text.push_str(&piece);
                }
            }
            Event::GeneralRef(r) => {
                if stack.last().is_some_and(|n| n == "text") {
                    text.push_str(&resolve_ref(&r)?);
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if !seen_root || !seen_net {
        return Err(SerializeError::MalformedXml(
            "document has no <pnml><net> element".into(),
        ));
    }
    if !stack.is_empty() {
        return Err(SerializeError::MalformedXml("unclosed elements at end of document".into()));
    }
    build(raw)
}

fn build(raw: RawNet) -> Result<PetriNet, SerializeError> {
    let mut b = NetBuilder::new();
    for p in &raw.places {
        b.place(p);
    }
    for (id, name) in &raw.transitions {
        let label = match name {
            Some(n) => Some(Label::new(n).map_err(|e| SerializeError::InvalidNet(e.to_string()))?),
            None => None,
        };
        b.transition(id, label);
    }
    for (s, t) in &raw.arcs {
        b.arc(s, t);
    }

    let marked: Vec<&String> = raw
        .marking
        .iter()
        .filter(|(_, &c)| c > 0)
        .map(|(p, _)| p)
        .collect();
    let initial = match marked.as_slice() {
        [p] if raw.marking[*p] == 1 => (*p).clone(),
        [] => unique(&raw.places, |p| raw.arcs.iter().all(|(_, t)| t != p), "source")?,
        _ => {
            return Err(SerializeError::InvalidNet(
                "initial marking must be a single token on one place".into(),
            ))
        }
    };
    let final_place = unique(&raw.places, |p| raw.arcs.iter().all(|(s, _)| s != p), "sink")?;
    b.build(&initial, &final_place)
        .map_err(|e| SerializeError::InvalidNet(e.to_string()))
}

fn unique(places: &[String], pred: impl Fn(&String) -> bool, what: &str) -> Result<String, SerializeError> {
    let found: Vec<&String> = places.iter().filter(|p| pred(p)).collect();
    match found.as_slice() {
        [p] => Ok((*p).clone()),
        _ => Err(SerializeError::InvalidNet(format!(
            "expected exactly one {what} place, found {}",
            found.len()
        ))),
    }
}
