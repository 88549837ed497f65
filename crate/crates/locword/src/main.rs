use locword::config::SEED_ENV;

fn main() {
    let code = locword::main_with(std::env::args_os(), std::env::var(SEED_ENV).ok());
    std::process::exit(code);
}
