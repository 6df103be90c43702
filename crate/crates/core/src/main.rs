fn main() {
    let code = tractlab::cli::main_with(
        std::env::args_os(),
        std::env::var("TRACTLAB_BUDGET_NMAX").ok(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
