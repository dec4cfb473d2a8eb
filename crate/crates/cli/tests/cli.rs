use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strongsec")).current_dir(root()).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Checks `v` against the subset of JSON Schema used by the shipped schema:
/// type, required, properties, items, enum and local `$ref`.
fn validate(schema: &Value, root: &Value, v: &Value, at: &str, errors: &mut Vec<String>) {
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return validate(&root["$defs"][name], root, v, at, errors);
    }
    if let Some(t) = schema.get("type").and_then(Value::as_str) {
        let ok = match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            _ => true,
        };
        if !ok {
            errors.push(format!("{at}: expected {t}, found {v}"));
            return;
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            errors.push(format!("{at}: {v} not in {e:?}"));
        }
    }
    if let Some(req) = schema.get("required").and_then(Value::as_array) {
        for k in req {
            let k = k.as_str().unwrap();
            if v.get(k).is_none() {
                errors.push(format!("{at}: missing `{k}`"));
            }
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        for (k, s) in props {
            if let Some(child) = v.get(k) {
                validate(s, root, child, &format!("{at}.{k}"), errors);
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            validate(items, root, x, &format!("{at}[{i}]"), errors);
        }
    }
}

fn schema() -> Value {
    serde_json::from_str(&std::fs::read_to_string(root().join("crates/cli/schema/envelope.schema.json")).unwrap())
        .unwrap()
}

#[test]
fn normalize_prints_normal_form() {
    let o = run(&["normalize", "dec(enc(m,k,r),k)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "m");
    let o = run(&["normalize", "--trace", "pi1(dec(enc(<a,b>,k,r),k))"]);
    assert_eq!(stdout(&o).lines().count(), 3);
}

#[test]
fn analyze_exit_codes_follow_verdicts() {
    let o = run(&["analyze", "corpus/yahalom.pi", "--secret", "k_ab"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("transfer theorem applicable"));
    let o = run(&["analyze", "corpus/p2.pi", "--secret", "s"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("no-test-over-secret condition 2 fails"));
    let o = run(&["analyze", "corpus/psi4.pi", "--secret", "s"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("syntactic-attack-found"));
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let o = run(&["normalize", "enc(a,b)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["analyze", "corpus/missing.pi", "--secret", "s"]).status.code(), Some(2));
}

#[test]
fn frame_commands() {
    let o = run(&["equiv", "corpus/psi1.frame", "corpus/psi1.frame"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["check-frame", "corpus/psi3.frame", "--secret", "s"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["check-frame", "corpus/ext-phi.frame", "--secret", "s", "--extended"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["passive", "corpus/psi4.frame", "--secret", "s", "--samples", "n,n'"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not strongly secret"));
}

#[test]
fn corpus_selftest_is_green() {
    let o = run(&["corpus"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn json_reports_validate_against_schema() {
    let schema = schema();
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(root().join("corpus/manifest.json")).unwrap()).unwrap();
    for e in manifest["entries"].as_array().unwrap() {
        let file = format!("corpus/{}", e["file"].as_str().unwrap());
        let secret = e["secret"].as_str().unwrap();
        let args: Vec<&str> = match e["kind"].as_str().unwrap() {
            "process" => vec!["--json", "analyze", &file, "--secret", secret],
            "frame" => vec!["--json", "passive", &file, "--secret", secret],
            _ => vec!["--json", "check-frame", &file, "--secret", secret, "--extended"],
        };
        let o = run(&args);
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        let mut errors = Vec::new();
        validate(&schema, &schema, &v, "$", &mut errors);
        if args[1] == "analyze" {
            validate(&schema["$defs"]["analyze"], &schema, &v["report"], "$.report", &mut errors);
        }
        assert!(errors.is_empty(), "{file}: {errors:?}");
        assert_eq!(v["exit_code"].as_i64(), o.status.code().map(i64::from));
    }
}
