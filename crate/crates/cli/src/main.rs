fn main() {
    let code = {
        let stdout = std::io::stdout();
        let stderr = std::io::stderr();
        acstab::run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
    };
    std::process::exit(code);
}
