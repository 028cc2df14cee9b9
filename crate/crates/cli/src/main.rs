use clap::Parser;
use smab_cli::{main_with, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SMAB_LOG", "warn")).init();
    std::process::exit(main_with(Cli::parse()));
}
