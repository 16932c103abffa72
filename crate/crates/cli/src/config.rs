//! `run --config FILE`: a TOML experiment description turned into argv.
//!
//! ```toml
//! command = "avg-lt"
//! threads = 4
//! [args]
//! argset = "integers:100"
//! family = { f = "0", g = "Z" }
//! tau = 0
//! x = [1000, 10000]
//! ```

use std::path::Path;

use toml::Value;

use crate::CliError;

const GLOBALS: [&str; 6] = ["threads", "hurwitz_cache", "output", "manifest", "format", "selftest"];

fn field_err(path: &Path, field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: field {field}: {msg}", path.display()))
}

fn flag(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

fn scalar(path: &Path, field: &str, v: &Value) -> Result<String, CliError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) if f.fract() == 0.0 && f.abs() < 9.0e15 => Ok(format!("{}", *f as i64)),
        Value::Float(f) => Err(field_err(path, field, format!("{f} is not an integer"))),
        other => Err(field_err(path, field, format!("expected a scalar, got {}", other.type_str()))),
    }
}

/// Appends `--key value` (or a bare `--key` for true) for one entry.
fn push_arg(out: &mut Vec<String>, path: &Path, field: &str, key: &str, v: &Value) -> Result<(), CliError> {
    match v {
        Value::Boolean(true) => out.push(flag(key)),
        Value::Boolean(false) => {}
        Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(|x| scalar(path, field, x)).collect::<Result<_, _>>()?;
            out.push(flag(key));
            out.push(parts.join(","));
        }
        Value::Table(t) => {
            // Curve families: { f = "...", g = "..." }.
            let (Some(f), Some(g)) = (t.get("f"), t.get("g")) else {
                return Err(field_err(path, field, "tables must be families with keys f and g"));
            };
            if t.len() != 2 {
                return Err(field_err(path, field, "a family table has exactly the keys f and g"));
            }
            out.push(flag(key));
            out.push(format!("f={};g={}", scalar(path, field, f)?, scalar(path, field, g)?));
        }
        other => {
            out.push(flag(key));
            out.push(scalar(path, field, other)?);
        }
    }
    Ok(())
}

/// Command-line arguments equivalent to the config at `path`; globals given
/// on the outer command line (`outer`) take precedence.
pub fn expand(path: &Path, argv0: &str, outer: &[(String, Option<String>)]) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(format!("{}: {e}", path.display())))?;
    let command = match doc.get("command") {
        Some(Value::String(c)) if c == "run" => return Err(field_err(path, "command", "run cannot nest")),
        Some(Value::String(c)) => c.clone(),
        Some(_) => return Err(field_err(path, "command", "expected a string")),
        None => return Err(field_err(path, "command", "missing")),
    };
    let mut argv = vec![argv0.to_string()];
    for (key, value) in outer {
        argv.push(flag(key));
        argv.extend(value.clone());
    }
    for (key, v) in &doc {
        if key == "command" || key == "args" {
            continue;
        }
        if !GLOBALS.contains(&key.as_str()) {
            return Err(field_err(path, key, "unknown top-level field"));
        }
        if outer.iter().any(|(k, _)| k == key) {
            continue;
        }
        push_arg(&mut argv, path, key, key, v)?;
    }
    argv.push(command);
    match doc.get("args") {
        None => {}
        Some(Value::Table(args)) => {
            for (key, v) in args {
                push_arg(&mut argv, path, &format!("args.{key}"), key, v)?;
            }
        }
        Some(_) => return Err(field_err(path, "args", "expected a table")),
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(text: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), text).unwrap();
        f
    }

    #[test]
    fn expands_args() {
        let f = write(
            "command = \"avg-lt\"\nthreads = 2\n[args]\nfamily = { f = \"0\", g = \"Z\" }\nx = [1000, 1e4]\ntau = 0\nexclude_cm = true\n",
        );
        let argv = expand(f.path(), "frobstat", &[]).unwrap();
        assert_eq!(
            argv,
            ["frobstat", "--threads", "2", "avg-lt", "--exclude-cm", "--family", "f=0;g=Z", "--tau", "0", "--x", "1000,10000"]
        );
    }

    #[test]
    fn outer_globals_win() {
        let f = write("command = \"pi-half\"\nthreads = 2\n");
        let argv = expand(f.path(), "frobstat", &[("threads".into(), Some("1".into()))]).unwrap();
        assert_eq!(argv, ["frobstat", "--threads", "1", "pi-half"]);
    }

    #[test]
    fn errors_name_the_field() {
        let f = write("command = \"avg-lt\"\n[args]\nx = 1.5\n");
        let e = expand(f.path(), "frobstat", &[]).unwrap_err();
        assert!(e.to_string().contains("args.x"), "{e}");
        let f = write("[args]\n");
        assert!(expand(f.path(), "frobstat", &[]).unwrap_err().to_string().contains("command"));
        let f = write("command = \"pi-half\"\nthreds = 1\n");
        assert!(expand(f.path(), "frobstat", &[]).unwrap_err().to_string().contains("threds"));
    }
}
