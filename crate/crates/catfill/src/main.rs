use std::process::ExitCode;

use catfill::config::{parse_config, run, RunConfig, Subcommand};

fn usage() -> &'static str {
    "usage: catfill <exponent|cone|lpfill|jacobi> --config <path> [--out <dir>] [--seed <int>] [--mesh <level>]"
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<i32, String> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.is_empty() {
        return Err(usage().to_string());
    }
    let cmd: Subcommand = args[0].parse().map_err(|e| format!("{e}\n{}", usage()))?;

    let mut config_path = None;
    let mut out_override = None;
    let mut seed_override = None;
    let mut mesh_override = None;
    let mut it = args[1..].iter();
    while let Some(flag) = it.next() {
        let mut take = |name: &str| {
            it.next()
                .cloned()
                .ok_or_else(|| format!("flag {name} needs a value\n{}", usage()))
        };
        match flag.as_str() {
            "--config" => config_path = Some(take("--config")?),
            "--out" => out_override = Some(take("--out")?),
            "--seed" => {
                seed_override =
                    Some(take("--seed")?.parse::<u64>().map_err(|e| format!("bad --seed: {e}"))?)
            }
            "--mesh" => {
                mesh_override =
                    Some(take("--mesh")?.parse::<f64>().map_err(|e| format!("bad --mesh: {e}"))?)
            }
            other => return Err(format!("unknown flag {other}\n{}", usage())),
        }
    }

    let mut cfg: RunConfig = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| format!("cannot read config {path}: {e}"))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = out_override {
        cfg.out_dir = Some(out.into());
    }
    if let Some(seed) = seed_override {
        cfg.seed = Some(seed);
    }
    if let Some(mesh) = mesh_override {
        cfg.mesh = Some(mesh);
    }

    let outcome = run(cmd, &cfg).map_err(|e| e.to_string())?;
    print!("{}", outcome.stdout);
    Ok(outcome.exit_code)
}
