use std::process::ExitCode;

use vortlab_core::harness::{verify, Suite, VerifyOptions};

fn main() -> ExitCode {
    let verdicts = verify(Suite::All, &VerifyOptions::default());
    for v in &verdicts {
        println!("{}", v.line());
        for c in &v.checks {
            let op = if c.strict { "<" } else { "<=" };
            println!("    {} = {:.6e} ({op} {:.3e})", c.name, c.value, c.limit);
        }
    }
    let failed: Vec<u8> = verdicts.iter().filter(|v| !v.passed).map(|v| v.criterion).collect();
    if verdicts.len() == 9 && failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
