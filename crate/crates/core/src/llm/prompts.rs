use std::path::Path;

use super::{LlmError, Message};

pub const MAX_DESCRIPTION_CHARS: usize = 50_000;

/// Headers of the system prompt sections, in order.
pub const SECTION_HEADERS: [&str; 6] = [
    "## Role",
    "## POWL Knowledge Base",
    "## Function Reference",
    "## Least-to-Most Procedure",
    "## Self-Evaluation Checklist",
    "## Examples",
];

const FILES: [&str; 6] = [
    "role.md",
    "knowledge_base.md",
    "function_reference.md",
    "procedure.md",
    "self_evaluation.md",
    "examples_header.md",
];

/// A worked example: a process description and the program for it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FewShot {
    pub name: String,
    pub description: String,
    pub program: String,
}

/// Prompt texts. Placeholders: `{kind}`, `{location}`, `{message}` in the
/// error template and `{feedback}` in the refinement template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub sections: [String; 6],
    pub few_shots: Vec<FewShot>,
    pub error: String,
    pub no_code: String,
    pub refine: String,
}

macro_rules! asset {
    ($name:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/prompts/", $name))
    };
}

macro_rules! shot {
    ($name:literal) => {
        FewShot {
            name: $name.to_string(),
            description: include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/assets/prompts/few_shot/",
                $name,
                ".txt"
            ))
            .trim()
            .to_string(),
            program: include_str!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/assets/prompts/few_shot/",
                $name,
                ".pcl"
            ))
            .trim()
            .to_string(),
        }
    };
}

impl Default for PromptTemplates {
    fn default() -> Self {
        PromptTemplates {
            sections: [
                asset!("role.md"),
                asset!("knowledge_base.md"),
                asset!("function_reference.md"),
                asset!("procedure.md"),
                asset!("self_evaluation.md"),
                asset!("examples_header.md"),
            ]
            .map(|s| s.trim().to_string()),
            few_shots: vec![shot!("01_claims"), shot!("02_hiring"), shot!("03_repair")],
            error: asset!("error.md").trim().to_string(),
            no_code: asset!("no_code.md").trim().to_string(),
            refine: asset!("refine.md").trim().to_string(),
        }
    }
}

impl PromptTemplates {
    /// Loads templates from a directory laid out like `assets/prompts`.
    /// Few-shot pairs are `few_shot/<name>.txt` with a matching
    /// `few_shot/<name>.pcl`, taken in name order.
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let read = |name: &str| -> std::io::Result<String> {
            Ok(std::fs::read_to_string(dir.join(name))?.trim().to_string())
        };
        let mut sections: [String; 6] = Default::default();
        for (slot, file) in sections.iter_mut().zip(FILES) {
            *slot = read(file)?;
        }
        let mut names: Vec<String> = std::fs::read_dir(dir.join("few_shot"))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let p = e.path();
                (p.extension()? == "txt").then(|| p.file_stem()?.to_str().map(String::from))?
            })
            .collect();
        names.sort();
        let few_shots = names
            .into_iter()
            .map(|name| {
                Ok(FewShot {
                    description: read(&format!("few_shot/{name}.txt"))?,
                    program: read(&format!("few_shot/{name}.pcl"))?,
                    name,
                })
            })
            .collect::<std::io::Result<Vec<_>>>()?;
        Ok(PromptTemplates {
            sections,
            few_shots,
            error: read("error.md")?,
            no_code: read("no_code.md")?,
            refine: read("refine.md")?,
        })
    }

    pub fn system_prompt(&self) -> String {
        let mut out = self.sections.join("\n\n");
        for (i, shot) in self.few_shots.iter().enumerate() {
            out.push_str(&format!(
                "\n\n### Example {}\n\nProcess description:\n{}\n\nProgram:\n```\n{}\n```",
                i + 1,
                shot.description,
                shot.program
            ));
        }
        out
    }

    /// System prompt plus one user message holding the description.
    pub fn initial_messages(&self, description: &str) -> Result<Vec<Message>, LlmError> {
        let description = description.trim();
        if description.is_empty() {
            return Err(LlmError::EmptyDescription);
        }
        let chars = description.chars().count();
        if chars > MAX_DESCRIPTION_CHARS {
            return Err(LlmError::DescriptionTooLong { chars });
        }
        Ok(vec![
            Message::system(self.system_prompt()),
            Message::user(format!(
                "Create a process model for the following process description.\n\n{description}"
            )),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcl::run_pcl;

    #[test]
    fn sections_in_order() {
        let t = PromptTemplates::default();
        let prompt = t.system_prompt();
        let mut at = 0;
        for h in SECTION_HEADERS {
            let pos = prompt[at..].find(h).unwrap_or_else(|| panic!("{h} missing"));
            at += pos + h.len();
        }
        assert!(t.few_shots.len() >= 2);
    }

    #[test]
    fn few_shots_are_valid_programs() {
        for shot in PromptTemplates::default().few_shots {
            run_pcl(&shot.program).unwrap_or_else(|e| panic!("{}: {e}", shot.name));
        }
    }

    #[test]
    fn structure() {
        let t = PromptTemplates::default();
        let msgs = t.initial_messages("Orders are received and shipped.").unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].role, super::super::Role::System);
        assert!(msgs[1].content.contains("Orders are received"));
        let other = t.initial_messages("Something else entirely.").unwrap();
        assert_eq!(msgs[0], other[0]);
        assert!(matches!(t.initial_messages("  "), Err(LlmError::EmptyDescription)));
        let long = "x".repeat(MAX_DESCRIPTION_CHARS + 1);
        assert!(matches!(
            t.initial_messages(&long),
            Err(LlmError::DescriptionTooLong { .. })
        ));
    }

    #[test]
    fn directory_matches_builtin() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/prompts");
        assert_eq!(PromptTemplates::from_dir(&dir).unwrap(), PromptTemplates::default());
    }
}
