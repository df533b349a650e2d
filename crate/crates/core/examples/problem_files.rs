//! Write a problem file, solve it through the command-line entry point,
//! and verify the result file it produced.

use nalgebra::DVector;
use robust_socp::cli;
use robust_socp::lqc::LqcSpec;
use robust_socp::problem::{LqcFile, ProblemFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("robust-socp-example-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let problem = dir.join("scalar.json");
    let result = dir.join("result.json");

    let spec = LqcSpec::scalar_benchmark(3);
    let file = ProblemFile::Lqc(LqcFile::from_spec(
        &spec,
        None,
        Some(&DVector::from_element(1, -1.0)),
    ));
    file.write(&problem)?;
    assert_eq!(ProblemFile::read(&problem)?, file);

    let (p, r) = (problem.to_str().unwrap(), result.to_str().unwrap());
    let mut out = std::io::stdout();
    let mut err = std::io::stderr();
    let code = cli::run(
        ["robust-socp", "solve", p, "--mode", "regret", "--out", r],
        &mut out,
        &mut err,
    );
    println!("solve exited with {code}\n");
    let code = cli::run(["robust-socp", "verify", p, r], &mut out, &mut err);
    println!("verify exited with {code}");
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
