use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Message { role: Role::Assistant, content: content.into() }
    }
}

/// Append-only chat history. `iteration_count` counts failed attempts that
/// were answered with an error prompt.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Conversation {
    messages: Vec<Message>,
    pub iteration_count: usize,
}

impl Conversation {
    pub fn new(messages: Vec<Message>) -> Self {
        Conversation { messages, iteration_count: 0 }
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn push(&mut self, message: Message) {
        self.messages.push(message);
    }

    pub fn last(&self) -> Option<&Message> {
        self.messages.last()
    }

    /// True if `self` starts with every message of `prefix`.
    pub fn extends(&self, prefix: &Conversation) -> bool {
        self.messages.len() >= prefix.messages.len()
            && self.messages[..prefix.messages.len()] == prefix.messages[..]
    }

    /// Problems with the role sequence: a leading system message, then
    /// strictly alternating user and assistant turns, no empty contents.
    pub fn check(&self) -> Vec<String> {
        let mut issues = Vec::new();
        match self.messages.first() {
            Some(m) if m.role == Role::System => {}
            _ => issues.push("first message is not a system message".to_string()),
        }
        for (i, m) in self.messages.iter().enumerate() {
            if m.content.trim().is_empty() {
                issues.push(format!("message {i} is empty"));
            }
            if i == 0 {
                continue;
            }
            let expected = if i % 2 == 1 { Role::User } else { Role::Assistant };
            if m.role != expected {
                issues.push(format!(
                    "message {i} has role {}, expected {}",
                    m.role.as_str(),
                    expected.as_str()
                ));
            }
        }
        issues
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternation() {
        let mut c = Conversation::new(vec![Message::system("s"), Message::user("u")]);
        assert!(c.check().is_empty());
        c.push(Message::assistant("a"));
        let before = c.clone();
        c.push(Message::user("again"));
        assert!(c.check().is_empty());
        assert!(c.extends(&before));
        assert!(!before.extends(&c));
        c.push(Message::user("twice"));
        assert_eq!(c.check().len(), 1);
    }

    #[test]
    fn roles_serialize_lowercase() {
        let json = serde_json::to_string(&Message::assistant("x")).unwrap();
        assert_eq!(json, r#"{"role":"assistant","content":"x"}"#);
    }
}
