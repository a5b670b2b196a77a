use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use promoai_core::llm::{HttpProvider, MockProvider, PromptTemplates, Provider, ProviderConfig};
use serde::Deserialize;

/// Service configuration, read from a TOML file. See the README for the
/// keys. Relative paths are resolved against the file's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    #[serde(default = "default_store")]
    pub store_dir: PathBuf,
    #[serde(default = "default_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub cors_origins: Vec<String>,
    #[serde(default = "default_request_timeout")]
    pub request_timeout_secs: u64,
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
    pub provider: ProviderSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderSection {
    /// Replays the JSON list of responses in `script`.
    Mock { script: PathBuf },
    Http(ProviderConfig),
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn default_store() -> PathBuf {
    "sessions".into()
}

fn default_iterations() -> usize {
    promoai_core::llm::DEFAULT_MAX_ITERATIONS
}

fn default_request_timeout() -> u64 {
    600
}

const SECRET_KEYS: [&str; 4] = ["api_key", "apikey", "key", "token"];

fn reject_secrets(table: &toml::Table, path: &str) -> anyhow::Result<()> {
    for (k, v) in table {
        if SECRET_KEYS.contains(&k.to_ascii_lowercase().as_str()) {
            bail!(
                "`{path}{k}` looks like a credential; put the key in an environment variable \
                 and name that variable in provider.api_key_ref"
            );
        }
        if let toml::Value::Table(t) = v {
            reject_secrets(t, &format!("{path}{k}."))?;
        }
    }
    Ok(())
}

impl AppConfig {
    pub fn parse(text: &str, base: &Path) -> anyhow::Result<Self> {
        let table: toml::Table = toml::from_str(text).context("config is not valid TOML")?;
        reject_secrets(&table, "")?;
        let mut cfg: AppConfig = toml::from_str(text).context("invalid config")?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.store_dir);
        if let Some(p) = cfg.prompts_dir.as_mut() {
            resolve(p);
        }
        match &mut cfg.provider {
            ProviderSection::Mock { script } => resolve(script),
            ProviderSection::Http(http) => http.check()?,
        }
        if cfg.max_iterations == 0 {
            bail!("max_iterations must be at least 1");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("in {}", path.display()))
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs(self.request_timeout_secs)
    }

    pub fn templates(&self) -> anyhow::Result<PromptTemplates> {
        match &self.prompts_dir {
            Some(dir) => PromptTemplates::from_dir(dir)
                .with_context(|| format!("cannot load prompts from {}", dir.display())),
            None => Ok(PromptTemplates::default()),
        }
    }
}

impl ProviderSection {
    /// Instantiates the provider. For HTTP this reads the API key from the
    /// environment.
    pub fn build(&self) -> anyhow::Result<Arc<dyn Provider>> {
        Ok(match self {
            ProviderSection::Mock { script } => Arc::new(MockProvider::from_file(script)?),
            ProviderSection::Http(cfg) => Arc::new(HttpProvider::from_env(cfg.clone())?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_config_with_defaults() {
        let cfg = AppConfig::parse(
            "[provider]\nkind = \"mock\"\nscript = \"script.json\"\n",
            Path::new("/etc/promoai"),
        )
        .unwrap();
        assert_eq!(cfg.listen, "127.0.0.1:8080");
        assert_eq!(cfg.max_iterations, 5);
        assert_eq!(cfg.store_dir, Path::new("/etc/promoai/sessions"));
        assert!(matches!(cfg.provider, ProviderSection::Mock { ref script } if script == Path::new("/etc/promoai/script.json")));
    }

    #[test]
    fn http_config() {
        let text = r#"
            listen = "0.0.0.0:9000"
            store_dir = "/var/lib/promoai"
            cors_origins = ["http://localhost:5173"]

            [provider]
            kind = "http"
            endpoint = "https://api.example.com/v1/chat/completions"
            model_name = "some-model"
            api_key_ref = "PROMOAI_API_KEY"
            temperature = 0.2
        "#;
        let cfg = AppConfig::parse(text, Path::new(".")).unwrap();
        let ProviderSection::Http(http) = cfg.provider else { panic!() };
        assert_eq!(http.api_key_ref, "PROMOAI_API_KEY");
        assert_eq!(http.max_retries_transport, 2);
    }

    #[test]
    fn rejects_inline_keys_and_bad_values() {
        let inline = "[provider]\nkind = \"http\"\nendpoint = \"https://x\"\nmodel_name = \"m\"\napi_key_ref = \"K\"\napi_key = \"sk-1\"\n";
        let err = AppConfig::parse(inline, Path::new(".")).unwrap_err();
        assert!(format!("{err:#}").contains("environment variable"));
        assert!(!format!("{err:#}").contains("sk-1"));
        let hot = "[provider]\nkind = \"http\"\nendpoint = \"https://x\"\nmodel_name = \"m\"\napi_key_ref = \"K\"\ntemperature = 3.0\n";
        assert!(AppConfig::parse(hot, Path::new(".")).is_err());
        assert!(AppConfig::parse("listen = 1", Path::new(".")).is_err());
        assert!(AppConfig::parse("bogus = 1\n[provider]\nkind = \"mock\"\nscript = \"s\"", Path::new(".")).is_err());
    }
}
