//! `skirmish`: training runs, tournaments, replays, reward plots, map
//! checks and a scripted chat-completions endpoint.

mod maps;
mod mock;
mod plot;
mod replay;
mod run;
mod tournament;
mod train;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "skirmish", version, about = "Tactical combat engine, DQN trainer and tournament harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a DQN agent and write a checkpoint, reward CSV and manifest
    Train(train::TrainArgs),
    /// Round-robin tournament with win/loss/tie matrix and leaderboard
    Tournament(tournament::TournamentArgs),
    /// Re-simulate a combat log, render frames and verify its final hash
    Replay(replay::ReplayArgs),
    /// Overlay reward curves as a text chart and optionally an SVG
    Plot(plot::PlotArgs),
    /// Parse map files and report problems
    ValidateMap(maps::ValidateMapArgs),
    /// Serve a scripted chat-completions endpoint until interrupted
    MockServe(mock::MockServeArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Train(a) => train::run(a),
        Command::Tournament(a) => tournament::run(a),
        Command::Replay(a) => replay::run(a),
        Command::Plot(a) => plot::run(a),
        Command::ValidateMap(a) => maps::run(a),
        Command::MockServe(a) => mock::run(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
