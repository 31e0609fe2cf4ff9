use std::path::PathBuf;

use clap::Args;
use skirmish_llm::{MockReply, MockScript, MockServer};

use crate::run::{usage, CmdResult, Failure};

#[derive(Debug, Args)]
pub struct MockServeArgs {
    /// JSON script: {"rules": [{"model"?, "pattern"?, "replies": [...]}]}
    #[arg(long, conflicts_with = "reply")]
    pub script: Option<PathBuf>,
    /// Answer every request with this text
    #[arg(long)]
    pub reply: Option<String>,
    #[arg(long, default_value = "127.0.0.1:8000")]
    pub bind: String,
}

pub fn run(args: MockServeArgs) -> CmdResult {
    let script = match (&args.script, &args.reply) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            MockScript::from_json(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        (None, Some(text)) => MockScript::always(MockReply::text(text.clone())),
        (None, None) => return Err(usage("give --script or --reply")),
    };
    let server = MockServer::bind(&args.bind, script)
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("{}: {e}", args.bind)))?;
    println!("serving chat completions at {}", server.url());
    server.wait();
    Ok(())
}
