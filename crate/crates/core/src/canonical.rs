//! Canonical JSON serialization.
//!
//! All artifacts the crate writes go through [`to_canonical_json`]: object
//! keys sorted, two-space indentation, LF line endings, and a single trailing
//! newline. Two runs that compute the same values therefore emit
//! byte-identical files.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

/// Serializes a value to canonical JSON text.
///
/// Keys are sorted by routing the value through [`serde_json::Value`], whose
/// object representation is an ordered map.
pub fn to_canonical_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let tree = serde_json::to_value(value)?;
    let mut text = serde_json::to_string_pretty(&tree)?;
    text.push('\n');
    Ok(text)
}

/// Writes a value as canonical JSON to `path`, creating parent directories.
pub fn write_canonical_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let text = to_canonical_json(value).map_err(io::Error::other)?;
    fs::write(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_output_ends_with_newline() {
        #[derive(serde::Serialize)]
        struct Unsorted {
            zeta: u32,
            alpha: u32,
        }
        let text = to_canonical_json(&Unsorted { zeta: 1, alpha: 2 }).unwrap();
        assert!(text.find("\"alpha\"").unwrap() < text.find("\"zeta\"").unwrap());
        assert!(text.ends_with('\n'));
        assert!(!text.ends_with("\n\n"));
    }

    #[test]
    fn nested_objects_are_sorted_too() {
        let value = json!({"b": {"d": 1, "c": 2}, "a": 3});
        let text = to_canonical_json(&value).unwrap();
        let expected = "{\n  \"a\": 3,\n  \"b\": {\n    \"c\": 2,\n    \"d\": 1\n  }\n}\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn no_carriage_returns() {
        let value = json!({"text": "line one\nline two"});
        let text = to_canonical_json(&value).unwrap();
        assert!(!text.contains('\r'));
    }
}
