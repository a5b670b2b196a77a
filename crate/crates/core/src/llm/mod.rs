//! Prompting, provider access and the generate/refine loops.

mod conversation;
mod extract;
mod prompts;
mod provider;
mod repair;

use thiserror::Error;

use crate::pcl::Location;

pub use conversation::{Conversation, Message, Role};
pub use extract::{extract_code, NoCodeFound};
pub use prompts::{FewShot, PromptTemplates, MAX_DESCRIPTION_CHARS, SECTION_HEADERS};
pub use provider::{
    HttpProvider, MockProvider, Provider, ProviderConfig, ProviderError, Secret,
};
pub use repair::{
    build_error_prompt, build_initial_prompt, generate, refine, AttemptError, GenerationResult,
    DEFAULT_MAX_ITERATIONS,
};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("description is empty")]
    EmptyDescription,
    #[error("description has {chars} characters; the limit is {MAX_DESCRIPTION_CHARS}")]
    DescriptionTooLong { chars: usize },
    #[error("feedback is empty")]
    EmptyFeedback,
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error("no valid model after {attempts} attempts; last error: {last_error}")]
    GenerationExhausted {
        attempts: usize,
        last_error: String,
        /// Source position of the last error, if it was a PCL error.
        last_location: Option<Location>,
        conversation: Box<Conversation>,
    },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

impl LlmError {
    pub fn kind(&self) -> &'static str {
        match self {
            LlmError::EmptyDescription | LlmError::EmptyFeedback | LlmError::NoIterations => {
                "precondition"
            }
            LlmError::DescriptionTooLong { .. } => "description-too-long",
            LlmError::GenerationExhausted { .. } => "generation-exhausted",
            LlmError::Provider(_) => "provider-error",
        }
    }
}
