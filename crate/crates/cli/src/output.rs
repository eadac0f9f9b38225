use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl From<infomiss::Error> for Failure {
    fn from(e: infomiss::Error) -> Self {
        use infomiss::Error::*;
        match e {
            InvalidParameter(_)
            | DimensionMismatch { .. }
            | UnlabeledRecord(_)
            | Dataset(_)
            | Input(_) => Failure::usage(e.to_string()),
            DegenerateCovariance { .. }
            | UndefinedRule
            | QuadratureAccuracy { .. }
            | UndefinedConditional(_)
            | IllConditioned { .. }
            | NonFiniteLikelihood => Failure::numerical(e.to_string()),
        }
    }
}

pub fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::usage(format!("{}: {e}", path.display()))
}

pub fn load_config(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// The flag defaults for `command`: the `parameters` object of a manifest
/// written by that command, or the whole object otherwise.
pub fn config_section(config: &Value, command: &str) -> Result<Value, Failure> {
    let Some(obj) = config.as_object() else {
        return Err(Failure::usage("config must be a JSON object"));
    };
    match (obj.get("command"), obj.get("parameters")) {
        (Some(c), Some(p)) => {
            if c.as_str() != Some(command) {
                return Err(Failure::usage(format!(
                    "config is a manifest for '{c}', not '{command}'"
                )));
            }
            Ok(p.clone())
        }
        _ => Ok(config.clone()),
    }
}

/// Flags given on the command line override the config file.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: T,
    config: Option<&Value>,
) -> Result<T, Failure> {
    let Some(config) = config else {
        return Ok(flags);
    };
    let mut base = config
        .as_object()
        .cloned()
        .ok_or_else(|| Failure::usage("config must be a JSON object"))?;
    let given = serde_json::to_value(&flags).map_err(|e| Failure::usage(e.to_string()))?;
    for (k, v) in given.as_object().into_iter().flatten() {
        if !v.is_null() {
            base.insert(k.clone(), v.clone());
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| Failure::usage(format!("config: {e}")))
}

pub fn seed_from_env() -> Result<Option<u64>, Failure> {
    match std::env::var("INFOMISS_SEED") {
        Ok(v) => v.parse().map(Some).map_err(|_| {
            Failure::usage(format!(
                "INFOMISS_SEED must be an unsigned integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(None),
    }
}

/// Shortest round-trip representation, or fixed decimals when requested.
pub fn fmt_num(v: f64, digits: Option<usize>) -> String {
    if v.is_nan() {
        return String::new();
    }
    match digits {
        Some(d) => format!("{v:.d$}"),
        None => format!("{v:?}"),
    }
}

pub fn fmt_opt(v: Option<f64>, digits: Option<usize>) -> String {
    v.map_or(String::new(), |x| fmt_num(x, digits))
}

pub fn write_output(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, content).map_err(|e| io_failure(path, e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Records how an output was produced next to it as `<out>.manifest.json`.
pub fn write_manifest<T: Serialize>(
    command: &str,
    parameters: &T,
    seed: Option<u64>,
    threads: Option<usize>,
    out: &Path,
    outputs: &[&Path],
) -> Result<(), Failure> {
    let manifest = json!({
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "threads": threads,
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    let path = manifest_path(out);
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| Failure::usage(e.to_string()))? + "\n";
    std::fs::write(&path, text).map_err(|e| io_failure(&path, e))
}
