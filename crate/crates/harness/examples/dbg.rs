use sessionvm_core::congruence::canonical_form;
use sessionvm_core::frontend::{parse_process, ParseOptions};

fn main() {
    let opts = ParseOptions { allow_runtime_syntax: true };
    for src in [
        "close x || (wait y; 0) || close z",
        "(close x || (wait y; 0)) || close z",
    ] {
        let p = parse_process(src, opts).unwrap();
        println!("{src}\n  {:?}\n  => {}", p, canonical_form(&p).0);
    }
}
