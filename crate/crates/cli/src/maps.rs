use std::path::PathBuf;

use clap::Args;
use skirmish_core::battlemap::{load_map, TerrainTile};

use crate::run::{CmdResult, Failure};

#[derive(Debug, Args)]
pub struct ValidateMapArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Skip the terrain rendering
    #[arg(long)]
    pub quiet: bool,
}

pub fn run(args: ValidateMapArgs) -> CmdResult {
    let mut bad = 0;
    for path in &args.files {
        let name = path.file_stem().map_or("map".into(), |s| s.to_string_lossy().into_owned());
        let loaded = std::fs::read_to_string(path)
            .map_err(|e| e.to_string())
            .and_then(|text| load_map(&name, &text).map_err(|e| e.to_string()));
        match loaded {
            Ok(map) => {
                let count = |t: TerrainTile| map.positions().filter(|&p| map.tile(p) == t).count();
                println!(
                    "{}: ok, {}x{}, spawns {} hero / {} enemy, {} walls, {} barrels, {} water",
                    path.display(),
                    map.width,
                    map.height,
                    map.hero_spawns.len(),
                    map.enemy_spawns.len(),
                    count(TerrainTile::Wall),
                    count(TerrainTile::Barrel),
                    count(TerrainTile::Water)
                );
                if !args.quiet {
                    print!("{}", map.render_terrain());
                }
            }
            Err(e) => {
                bad += 1;
                eprintln!("{}: {e}", path.display());
            }
        }
    }
    if bad > 0 {
        return Err(Failure::Runtime(anyhow::anyhow!("{bad} of {} maps invalid", args.files.len())));
    }
    Ok(())
}
