// Sweeps the decay exponent r of the error schedule s_k = k^-r and prints the
// predicted regime next to the measured log-log slope and the final bound.

use std::path::Path;

use inexact_fista::cli::{sweep, sweep_table, RunSpec};

pub fn run_example() -> inexact_fista::Result<String> {
    let text = "\
problem gen lsq 50 100 1 0.1 1
rule constant hint
s: power 1 2
perturb: saturate 1 7
iters 3000
reference 20000
";
    let spec = RunSpec::parse(text, "rate_table", Path::new("."), "rates")?;
    let values: Vec<String> = ["-0.5", "0", "0.5", "1", "2"].iter().map(|v| v.to_string()).collect();
    let rows = sweep(&spec, "r", &values)?;
    for row in &rows {
        let r: f64 = row.value.parse().expect("numeric");
        let regime = inexact_fista::analysis::predicted_regime_r(r)?;
        println!("r = {:>4}: predicted {regime}", row.value);
    }
    let table = sweep_table("r", &rows);
    print!("{table}");
    Ok(table)
}

#[allow(dead_code)]
fn main() -> inexact_fista::Result<()> {
    run_example().map(|_| ())
}
