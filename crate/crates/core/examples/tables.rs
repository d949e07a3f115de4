//! Regenerates the two summary tables through the command-line front end.

use phqm::cli::main_with_args;

fn main() {
    for cmd in ["table1", "table2"] {
        let code = main_with_args(["phqm", cmd]);
        if code != 0 {
            std::process::exit(code);
        }
        println!();
    }
}
