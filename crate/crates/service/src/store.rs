use std::collections::HashMap;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use promoai_core::convert::View;

use crate::export::{export, Format};
use crate::session::Session;

const SESSION_FILE: &str = "session.json";

/// One directory per session under a root directory, holding
/// `session.json` and the latest exports of the current model.
#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

/// 128 random bits as 32 lowercase hex characters.
pub fn new_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

pub fn is_valid_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(tmp, path)
}

/// Writes `session.json` and the model exports into `dir`.
pub fn save_dir(dir: &Path, session: &Session) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(model) = &session.current_model {
        for format in Format::FILES {
            let text = export(model, format, View::Bpmn)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
            write_atomic(&dir.join(format.file_name()), &text)?;
        }
    }
    let json = serde_json::to_string_pretty(session).map_err(io::Error::other)?;
    write_atomic(&dir.join(SESSION_FILE), &json)
}

pub fn load_dir(dir: &Path) -> io::Result<Session> {
    let text = std::fs::read_to_string(dir.join(SESSION_FILE))?;
    serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> io::Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(SessionStore { root, locks: Mutex::default() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    /// The exclusive lock serializing operations on one session.
    pub fn lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks.lock().unwrap().entry(id.to_string()).or_default().clone()
    }

    pub fn save(&self, session: &Session) -> io::Result<()> {
        save_dir(&self.dir(&session.id), session)
    }

    /// `Ok(None)` for ids that are malformed or unknown.
    pub fn load(&self, id: &str) -> io::Result<Option<Session>> {
        if !is_valid_id(id) {
            return Ok(None);
        }
        match load_dir(&self.dir(id)) {
            Ok(s) => Ok(Some(s)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use promoai_core::llm::{Conversation, GenerationResult, Message};
    use promoai_core::powl::make_activity;

    #[test]
    fn ids() {
        let a = new_id();
        assert!(is_valid_id(&a));
        assert_ne!(a, new_id());
        assert!(!is_valid_id("../etc"));
        assert!(!is_valid_id(&a.to_uppercase()));
    }

    #[test]
    fn save_and_load() {
        let tmp = tempfile::tempdir().unwrap();
        let store = SessionStore::open(tmp.path()).unwrap();
        let conv = Conversation::new(vec![Message::system("s"), Message::user("u")]);
        let mut s = Session::new(new_id(), "desc", conv.clone());
        assert!(store.load(&s.id).unwrap().is_none());
        let mut c2 = conv;
        c2.push(Message::assistant("a"));
        s.accept(
            GenerationResult {
                model: make_activity("a").unwrap(),
                conversation: c2,
                attempts: 1,
                source: "a = activity(\"a\")\nfinal(a)".into(),
            },
            None,
        );
        store.save(&s).unwrap();
        assert_eq!(store.load(&s.id).unwrap().unwrap(), s);
        for f in Format::FILES {
            assert!(store.dir(&s.id).join(f.file_name()).exists());
        }
        assert!(store.load("../../etc/passwd").unwrap().is_none());
    }
}
