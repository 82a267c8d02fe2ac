fn main() {
    std::process::exit(ratebound::cli::cli_main(std::env::args()));
}
