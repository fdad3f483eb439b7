//! Run a scenario written inline and print its markdown report.

use cstar_workbench::error::Result;
use cstar_workbench::scenario::{render_markdown, run_scenario, Scenario};

const TEXT: &str = r#"
name = "inline-gns"
checker = "gns"
claim = "GNS triples of random states on M2 + C."
seed = 4

[params]
algebra = "M2+C"
trials = 30

[expect]
verdict = "pass"
"#;

fn main() -> Result<()> {
    let report = run_scenario(&Scenario::from_toml(TEXT)?);
    print!("{}", render_markdown(&report));
    println!("exit code would be {}", report.exit_code());
    Ok(())
}
