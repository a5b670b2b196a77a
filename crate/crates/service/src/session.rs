use promoai_core::llm::{Conversation, GenerationResult};
use promoai_core::powl::{stats, PowlNode};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Generated,
    Refined,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: String,
    pub kind: EventKind,
    pub attempts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A modeling session. Holds no credentials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub description: String,
    pub conversation: Conversation,
    pub current_model: Option<PowlNode>,
    /// Program the current model was built from.
    pub source: Option<String>,
    pub history: Vec<Event>,
    pub created_at: String,
    pub updated_at: String,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl Session {
    pub fn new(id: String, description: &str, conversation: Conversation) -> Self {
        let t = now();
        Session {
            id,
            description: description.to_string(),
            conversation,
            current_model: None,
            source: None,
            history: Vec::new(),
            created_at: t.clone(),
            updated_at: t,
        }
    }

    fn push(&mut self, kind: EventKind, attempts: usize, feedback: Option<&str>, error: Option<String>) {
        let t = now();
        self.history.push(Event {
            timestamp: t.clone(),
            kind,
            attempts,
            feedback: feedback.map(str::to_string),
            error,
        });
        self.updated_at = t;
    }

    /// Adopts a successful generation or refinement.
    pub fn accept(&mut self, result: GenerationResult, feedback: Option<&str>) {
        let kind = if feedback.is_some() { EventKind::Refined } else { EventKind::Generated };
        self.conversation = result.conversation;
        self.current_model = Some(result.model);
        self.source = Some(result.source);
        self.push(kind, result.attempts, feedback, None);
    }

    /// Records a failed attempt. The model and conversation stay as they were.
    pub fn fail(&mut self, attempts: usize, feedback: Option<&str>, error: String) {
        self.push(EventKind::Failed, attempts, feedback, Some(error));
    }

    /// The current model as a result that `refine` can continue from.
    pub fn result(&self) -> Option<GenerationResult> {
        let attempts = self
            .history
            .iter()
            .rev()
            .find(|e| e.kind != EventKind::Failed)
            .map_or(0, |e| e.attempts);
        Some(GenerationResult {
            model: self.current_model.clone()?,
            conversation: self.conversation.clone(),
            attempts,
            source: self.source.clone()?,
        })
    }

    pub fn summary(&self) -> Value {
        let model = self.current_model.as_ref().map(|m| {
            let s = stats(m);
            json!({
                "activities": s.activity_count,
                "operators": s.operator_count,
                "silent_steps": s.silent_count,
                "depth": s.depth,
            })
        });
        json!({
            "id": self.id,
            "description": self.description,
            "has_model": self.current_model.is_some(),
            "model_stats": model,
            "model": self.current_model,
            "last_event": self.history.last(),
            "events": self.history.len(),
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        })
    }
}
