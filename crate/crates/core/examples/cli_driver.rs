// Run the command-line driver in-process.

use padam::cli::main_with_args;

pub fn run_example() -> padam::Result<()> {
    let dir = tempfile::tempdir()?;
    let out_dir = dir.path().to_string_lossy().into_owned();
    let mut out = Vec::new();
    let code = main_with_args(
        [
            "padam", "run", "--problem", "quadratic", "--optimizer", "padam", "--p", "0.125", "--lr", "0.05",
            "--steps", "300", "--seeds", "3", "--out-dir", &out_dir,
        ],
        &mut out,
    );
    print!("{}", String::from_utf8_lossy(&out));
    println!("exit code {code}");
    let mut files: Vec<_> = std::fs::read_dir(dir.path())?.map(|e| e.map(|e| e.file_name())).collect::<Result<_, _>>()?;
    files.sort();
    for f in files {
        println!("  {}", f.to_string_lossy());
    }
    Ok(())
}

fn main() -> padam::Result<()> {
    run_example()
}
