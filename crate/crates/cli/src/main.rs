use clap::Parser;

fn main() {
    let cli = match ptwise_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors exit 1; 2 is reserved for unresolved solves
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    std::process::exit(ptwise_cli::run(cli));
}
