//! JSON experiment configs. A config names the experiment and lists the
//! same flags the subcommand takes, so both paths share one validator.

use std::path::Path;

use serde_json::Value;

use crate::output::CliError;

/// Turns `{"experiment": "mesh2d", "lc": [0.2, 2], "align_to": "dir"}` into
/// `kle mesh2d --lc 0.2,2 --align-to dir`. Unknown keys survive the
/// translation and are rejected by the flag parser.
pub fn config_to_argv(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::usage("config must be a JSON object"));
    };
    let experiment = match map.get("experiment") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(CliError::usage("config needs a string \"experiment\" key")),
    };
    let mut argv = vec!["kle".to_string(), experiment];
    for (key, value) in &map {
        if key == "experiment" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Bool(true) => argv.push(flag),
            Value::Bool(false) => {}
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?;
                argv.push(flag);
                argv.push(parts.join(","));
            }
            other => {
                argv.push(flag);
                argv.push(scalar(other)?);
            }
        }
    }
    Ok(argv)
}

fn scalar(v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(CliError::usage(format!("unsupported config value {other}"))),
    }
}
