use std::path::PathBuf;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use jatrans::correct::{
    Backend, FixtureBackend, HttpBackend, IdentityBackend, PromptTemplate, DEFAULT_API_KEY_VAR,
    DEFAULT_ENDPOINT,
};
use jatrans::pipeline::CorrectionSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Skip correction; the transliteration is the output.
    None,
    Identity,
    Fixture,
    Http,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TemplateArg {
    Gec,
    Transliteration,
    Translation,
}

impl From<TemplateArg> for PromptTemplate {
    fn from(t: TemplateArg) -> Self {
        match t {
            TemplateArg::Gec => PromptTemplate::Gec,
            TemplateArg::Transliteration => PromptTemplate::Transliteration,
            TemplateArg::Translation => PromptTemplate::Translation,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BackendArgs {
    #[arg(long, value_enum, default_value = "none")]
    pub backend: BackendKind,
    #[arg(long, default_value = "gpt-4o")]
    pub model: String,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    pub timeout: f64,
    #[arg(long, default_value_t = 3)]
    pub max_retries: u32,
    /// Delay before the first retry in milliseconds; doubles per retry.
    #[arg(long, default_value_t = 500)]
    pub backoff_ms: u64,
    #[arg(long, value_enum, default_value = "gec")]
    pub template: TemplateArg,
    /// Recorded responses for `--backend fixture`.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    pub endpoint: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = DEFAULT_API_KEY_VAR)]
    pub api_key_env: String,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
}

impl BackendArgs {
    pub fn settings(&self) -> Result<CorrectionSettings> {
        anyhow::ensure!(self.timeout > 0.0 && self.timeout.is_finite(), "--timeout must be positive");
        Ok(CorrectionSettings {
            backend_name: format!("{:?}", self.backend).to_lowercase(),
            template: self.template.into(),
            model_id: self.model.clone(),
            max_retries: self.max_retries,
            timeout: Duration::from_secs_f64(self.timeout),
            backoff: Duration::from_millis(self.backoff_ms),
            concurrency: self.concurrency.max(1),
        })
    }

    pub fn build(&self) -> Result<Option<Box<dyn Backend>>> {
        Ok(match self.backend {
            BackendKind::None => None,
            BackendKind::Identity => Some(Box::new(IdentityBackend)),
            BackendKind::Fixture => {
                let path = self.fixture.as_ref().context("--backend fixture needs --fixture FILE")?;
                Some(Box::new(FixtureBackend::from_file(path)?))
            }
            BackendKind::Http => {
                let mut http = HttpBackend::from_env(&self.endpoint, &self.api_key_env)?;
                http.temperature = self.temperature;
                http.top_p = self.top_p;
                Some(Box::new(http))
            }
        })
    }
}
