use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{extract_code, Conversation, LlmError, Message, NoCodeFound, PromptTemplates, Provider};
use crate::convert::powl_to_pn;
use crate::pcl::{run_pcl, PclError};
use crate::powl::{validate, PowlNode};
use crate::semantics::{check_soundness, DEFAULT_STATE_BUDGET};

pub const DEFAULT_MAX_ITERATIONS: usize = 5;

/// An accepted model with the conversation that produced it. `source` is
/// the program the model was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub model: PowlNode,
    pub conversation: Conversation,
    pub attempts: usize,
    pub source: String,
}

/// Why a single response was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AttemptError {
    #[error(transparent)]
    NoCode(#[from] NoCodeFound),
    #[error(transparent)]
    Pcl(#[from] PclError),
    #[error("the model is not a sound process: {0}")]
    Unsound(String),
}

pub fn build_initial_prompt(
    templates: &PromptTemplates,
    description: &str,
) -> Result<Vec<Message>, LlmError> {
    templates.initial_messages(description)
}

pub fn build_error_prompt(templates: &PromptTemplates, error: &AttemptError) -> Message {
    let fill = |kind: &str, location: &str, message: &str| {
        templates
            .error
            .replace("{kind}", kind)
            .replace("{location}", location)
            .replace("{message}", message)
    };
    Message::user(match error {
        AttemptError::NoCode(_) => templates.no_code.clone(),
        AttemptError::Pcl(e) => fill(e.kind.as_str(), &e.location.to_string(), &e.message),
        AttemptError::Unsound(summary) => fill("unsound-model", "whole program", summary),
    })
}

fn accept(response: &str) -> Result<(PowlNode, String), AttemptError> {
    let source = extract_code(response)?;
    let model = run_pcl(&source)?;
    let violations = validate(&model);
    if let Some(v) = violations.first() {
        return Err(AttemptError::Unsound(v.to_string()));
    }
    let net = powl_to_pn(&model).map_err(|e| AttemptError::Unsound(e.to_string()))?;
    let report = check_soundness(&net, DEFAULT_STATE_BUDGET);
    if report.truncated {
        tracing::warn!(states = report.explored_states, "soundness check truncated; accepting model");
    } else if !report.is_sound() {
        return Err(AttemptError::Unsound(report.summary()));
    }
    Ok((model, source))
}

/// Asks, checks and re-asks until a response yields a valid model or
/// `max_iterations` responses have been rejected.
fn iterate(
    templates: &PromptTemplates,
    mut conversation: Conversation,
    provider: &dyn Provider,
    max_iterations: usize,
) -> Result<GenerationResult, LlmError> {
    if max_iterations == 0 {
        return Err(LlmError::NoIterations);
    }
    let mut last_error = String::new();
    let mut last_location = None;
    for attempt in 1..=max_iterations {
        let response = provider.complete(conversation.messages())?;
        let shown = if response.trim().is_empty() { "(empty response)" } else { &response };
        conversation.push(Message::assistant(shown));
        match accept(&response) {
            Ok((model, source)) => {
                tracing::info!(attempt, "model accepted");
                return Ok(GenerationResult { model, conversation, attempts: attempt, source });
            }
            Err(e) => {
                tracing::info!(attempt, error = %e, "response rejected");
                last_error = e.to_string();
                last_location = match &e {
                    AttemptError::Pcl(p) => Some(p.location),
                    _ => None,
                };
                conversation.push(build_error_prompt(templates, &e));
                conversation.iteration_count += 1;
            }
        }
    }
    Err(LlmError::GenerationExhausted {
        attempts: max_iterations,
        last_error,
        last_location,
        conversation: Box::new(conversation),
    })
}

pub fn generate(
    templates: &PromptTemplates,
    description: &str,
    provider: &dyn Provider,
    max_iterations: usize,
) -> Result<GenerationResult, LlmError> {
    let conversation = Conversation::new(build_initial_prompt(templates, description)?);
    iterate(templates, conversation, provider, max_iterations)
}

/// Continues `result`'s conversation with user feedback. The returned
/// conversation starts with every message of the input one.
pub fn refine(
    templates: &PromptTemplates,
    result: &GenerationResult,
    feedback: &str,
    provider: &dyn Provider,
    max_iterations: usize,
) -> Result<GenerationResult, LlmError> {
    let feedback = feedback.trim();
    if feedback.is_empty() {
        return Err(LlmError::EmptyFeedback);
    }
    let mut conversation = result.conversation.clone();
    conversation.push(Message::user(templates.refine.replace("{feedback}", feedback)));
    iterate(templates, conversation, provider, max_iterations)
}
