fn main() {
    std::process::exit(eegcap::cli::run());
}
