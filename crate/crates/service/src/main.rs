use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use promoai_core::convert::{powl_to_pn, View};
use promoai_core::llm::{
    generate, refine, MockProvider, PromptTemplates, Provider, DEFAULT_MAX_ITERATIONS,
};
use promoai_core::pcl::run_pcl;
use promoai_core::powl::{stats, validate, PowlNode};
use promoai_core::semantics::{
    check_soundness, pn_traces, powl_traces, PetriNet, DEFAULT_STATE_BUDGET, DEFAULT_TRACE_CAP,
};
use promoai_core::serialize::{pnml_import, powl_json_import};
use promoai_service::config::AppConfig;
use promoai_service::export::{export, Format};
use promoai_service::session::Session;
use promoai_service::store::{load_dir, new_id, save_dir};

#[derive(Parser)]
#[command(name = "promoai", version, about = "Process models from natural language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderKind {
    Mock,
    Http,
}

#[derive(clap::Args)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "mock")]
    provider: ProviderKind,
    /// JSON list of scripted responses (mock provider).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Config file whose [provider] section configures the HTTP provider.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    /// Directory with prompt templates replacing the built-in ones.
    #[arg(long)]
    prompts: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model from a process description.
    Generate {
        #[arg(long)]
        description: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Export file; the format follows the extension.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Session directory to create for later refinement.
        #[arg(long)]
        session: Option<PathBuf>,
    },
    /// Refine the model of a session directory with feedback.
    Refine {
        #[arg(long)]
        session: PathBuf,
        #[arg(long)]
        feedback: String,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert a model file to another format.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        to: String,
        #[arg(long, default_value = "bpmn")]
        view: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a model and check the soundness of its net (exit 1 if not).
    Check {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print all traces up to a length.
    Oracle {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 8)]
        max_len: usize,
    },
}

enum Loaded {
    Model(PowlNode),
    Net(PetriNet),
}

fn read_input(path: &Path) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let name = path.to_string_lossy();
    Ok(if name.ends_with(".pnml") {
        Loaded::Net(pnml_import(&text)?)
    } else if name.ends_with(".pcl") {
        Loaded::Model(run_pcl(&text)?)
    } else {
        Loaded::Model(powl_json_import(&text)?)
    })
}

fn read_model(path: &Path) -> anyhow::Result<PowlNode> {
    match read_input(path)? {
        Loaded::Model(m) => Ok(m),
        Loaded::Net(_) => bail!("{} is a Petri net; a model file is needed here", path.display()),
    }
}

fn write_out(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn export_to(model: &PowlNode, out: &Path) -> anyhow::Result<()> {
    let Some(format) = Format::from_path(out) else {
        bail!("cannot tell the format of {}; use .pnml, .bpmn, .powl.json or .pcl", out.display());
    };
    write_out(Some(out), &export(model, format, View::Bpmn)?)
}

impl ProviderArgs {
    fn build(&self) -> anyhow::Result<(Arc<dyn Provider>, PromptTemplates)> {
        let templates = match &self.prompts {
            Some(dir) => PromptTemplates::from_dir(dir)?,
            None => PromptTemplates::default(),
        };
        let provider: Arc<dyn Provider> = match self.provider {
            ProviderKind::Mock => {
                let script = self.script.as_deref().context("--provider mock needs --script")?;
                Arc::new(MockProvider::from_file(script)?)
            }
            ProviderKind::Http => {
                let cfg = self.config.as_deref().context("--provider http needs --config")?;
                AppConfig::load(cfg)?.provider.build()?
            }
        };
        Ok((provider, templates))
    }
}

fn report(session: &Session) {
    if let (Some(m), Some(e)) = (&session.current_model, session.history.last()) {
        let s = stats(m);
        eprintln!(
            "model accepted after {} attempt(s): {} activities, {} operators, depth {}",
            e.attempts, s.activity_count, s.operator_count, s.depth
        );
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate { description, provider, out, session } => {
            let text = std::fs::read_to_string(&description)
                .with_context(|| format!("cannot read {}", description.display()))?;
            let (p, t) = provider.build()?;
            let result = generate(&t, &text, p.as_ref(), provider.max_iterations)?;
            let mut s = Session::new(new_id(), &text, Default::default());
            s.accept(result, None);
            if let Some(dir) = &session {
                save_dir(dir, &s)?;
            }
            let model = s.current_model.as_ref().expect("accepted");
            match &out {
                Some(path) => export_to(model, path)?,
                None if session.is_none() => write_out(None, &export(model, Format::Pcl, View::Bpmn)?)?,
                None => {}
            }
            report(&s);
        }
        Command::Refine { session, feedback, provider, out } => {
            let mut s = load_dir(&session)
                .with_context(|| format!("cannot load session from {}", session.display()))?;
            let current = s.result().context("the session has no model to refine")?;
            let (p, t) = provider.build()?;
            match refine(&t, &current, &feedback, p.as_ref(), provider.max_iterations) {
                Ok(r) => s.accept(r, Some(&feedback)),
                Err(e) => {
                    s.fail(0, Some(&feedback), e.to_string());
                    save_dir(&session, &s)?;
                    return Err(e.into());
                }
            }
            save_dir(&session, &s)?;
            if let Some(path) = &out {
                export_to(s.current_model.as_ref().expect("accepted"), path)?;
            }
            report(&s);
        }
        Command::Convert { input, to, view, out } => {
            let format: Format = to.parse().map_err(anyhow::Error::msg)?;
            let view: View = view.parse().map_err(anyhow::Error::msg)?;
            let model = read_model(&input)?;
            write_out(out.as_deref(), &export(&model, format, view)?)?;
        }
        Command::Check { input } => {
            let net = match read_input(&input)? {
                Loaded::Model(m) => {
                    let violations = validate(&m);
                    if !violations.is_empty() {
                        for v in violations {
                            println!("invalid: {v}");
                        }
                        return Ok(ExitCode::FAILURE);
                    }
                    let s = stats(&m);
                    println!(
                        "valid: {} activities, {} operators, depth {}",
                        s.activity_count, s.operator_count, s.depth
                    );
                    powl_to_pn(&m)?
                }
                Loaded::Net(n) => n,
            };
            let report = check_soundness(&net, DEFAULT_STATE_BUDGET);
            println!("{}", report.summary());
            for t in &report.dead_transitions {
                println!("dead transition: {t}");
            }
            if !report.is_sound() || report.truncated {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Serve { config } => {
            let cfg = AppConfig::load(&config)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(promoai_service::api::serve(cfg, async {
                let _ = tokio::signal::ctrl_c().await;
            }))?;
        }
        Command::Oracle { input, max_len } => {
            let traces = match read_input(&input)? {
                Loaded::Model(m) => powl_traces(&m, max_len, DEFAULT_TRACE_CAP)?,
                Loaded::Net(n) => pn_traces(&n, max_len, DEFAULT_STATE_BUDGET)?,
            };
            for t in &traces {
                println!("<{}>", t.join(", "));
            }
            eprintln!("{} traces up to length {max_len}", traces.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info,tower_http=warn".into()),
        )
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
