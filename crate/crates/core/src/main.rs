use phlim::{cli, parallel};

fn main() {
    let verbose = std::env::args().any(|a| a == "--verbose");
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if verbose { "info" } else { "warn" }))
        .init();
    parallel::init_thread_pool();
    std::process::exit(cli::main_with_args(std::env::args_os()));
}
