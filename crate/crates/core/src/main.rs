use std::io::Write;

fn main() {
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    let output = output_path(&args);
    let outcome = microcover::cli::run(args);
    if let Some(msg) = &outcome.diagnostic {
        eprintln!("{msg}");
    }
    if !outcome.artifact.is_empty() {
        let written = match &output {
            Some(path) => std::fs::write(path, &outcome.artifact),
            None => std::io::stdout().write_all(&outcome.artifact),
        };
        if let Err(e) = written {
            eprintln!("cannot write artifact: {e}");
            std::process::exit(1);
        }
    }
    std::process::exit(outcome.code);
}

fn output_path(args: &[std::ffi::OsString]) -> Option<std::path::PathBuf> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--output" || s == "-o" {
            return it.next().map(Into::into);
        }
        if let Some(p) = s.strip_prefix("--output=") {
            return Some(p.into());
        }
    }
    None
}
