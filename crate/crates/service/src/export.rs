use std::str::FromStr;

use promoai_core::convert::{powl_to_bpmn, powl_to_pn, to_render_graph, ConvertError, View};
use promoai_core::powl::PowlNode;
use promoai_core::serialize::{bpmn_export, emit_pcl, pnml_export, powl_json_export};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    PowlJson,
    Pnml,
    Bpmn,
    Pcl,
    RenderJson,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "powl-json" => Format::PowlJson,
            "pnml" => Format::Pnml,
            "bpmn" => Format::Bpmn,
            "pcl" => Format::Pcl,
            "render-json" => Format::RenderJson,
            other => {
                return Err(format!(
                    "unknown format `{other}`; expected powl-json, pnml, bpmn, pcl or render-json"
                ))
            }
        })
    }
}

impl Format {
    /// The formats written next to each persisted session.
    pub const FILES: [Format; 4] = [Format::PowlJson, Format::Pnml, Format::Bpmn, Format::Pcl];

    pub fn as_str(self) -> &'static str {
        match self {
            Format::PowlJson => "powl-json",
            Format::Pnml => "pnml",
            Format::Bpmn => "bpmn",
            Format::Pcl => "pcl",
            Format::RenderJson => "render-json",
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            Format::PowlJson | Format::RenderJson => "application/json",
            Format::Pnml | Format::Bpmn => "application/xml",
            Format::Pcl => "text/plain; charset=utf-8",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            Format::PowlJson => "model.powl.json",
            Format::Pnml => "model.pnml",
            Format::Bpmn => "model.bpmn",
            Format::Pcl => "model.pcl",
            Format::RenderJson => "model.render.json",
        }
    }

    /// Guesses the format from a file name.
    pub fn from_path(path: &std::path::Path) -> Option<Format> {
        let name = path.file_name()?.to_str()?;
        [Format::PowlJson, Format::RenderJson, Format::Pnml, Format::Bpmn, Format::Pcl]
            .into_iter()
            .find(|f| {
                let ext = &f.file_name()["model".len()..];
                name.ends_with(ext)
            })
            .or_else(|| name.ends_with(".json").then_some(Format::PowlJson))
    }
}

pub fn export(model: &PowlNode, format: Format, view: View) -> Result<String, ConvertError> {
    Ok(match format {
        Format::PowlJson => powl_json_export(model),
        Format::Pnml => pnml_export(&powl_to_pn(model)?),
        Format::Bpmn => bpmn_export(&powl_to_bpmn(model)?),
        Format::Pcl => emit_pcl(model),
        Format::RenderJson => {
            let graph = to_render_graph(model, view)?;
            serde_json::to_string_pretty(&graph).expect("render graphs serialize")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    #[test]
    fn names() {
        assert_eq!("pnml".parse::<Format>(), Ok(Format::Pnml));
        assert!("svg".parse::<Format>().is_err());
        assert_eq!(Format::from_path(Path::new("a/model.powl.json")), Some(Format::PowlJson));
        assert_eq!(Format::from_path(Path::new("x.pnml")), Some(Format::Pnml));
        assert_eq!(Format::from_path(Path::new("x.bpmn")), Some(Format::Bpmn));
        assert_eq!(Format::from_path(Path::new("x.pcl")), Some(Format::Pcl));
        assert_eq!(Format::from_path(Path::new("x.txt")), None);
    }

    #[test]
    fn render_json_schema() {
        let m = promoai_core::powl::make_activity("a").unwrap();
        let text = export(&m, Format::RenderJson, View::Bpmn).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["nodes"].as_array().unwrap().len(), 3);
        assert_eq!(v["edges"].as_array().unwrap().len(), 2);
        for key in ["id", "kind", "label", "rank"] {
            assert!(v["nodes"][0].get(key).is_some(), "{key}");
        }
    }
}
