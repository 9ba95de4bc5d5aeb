use std::fs;
use std::path::Path;

use morseflow::ScalarField;
use serde::Deserialize;

use crate::error::CliError;

/// On-disk field definition: `{"dim": n, "expr": "...", "label": "..."}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub dim: usize,
    pub expr: String,
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LoadedField {
    pub label: String,
    pub field: ScalarField,
}

pub fn load(path: &Path) -> Result<LoadedField, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: FieldFile =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let field = ScalarField::parse(&file.expr, file.dim)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let label = match file.label {
        Some(label) if !label.is_empty() => label,
        _ => path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "field".to_string()),
    };
    if label.contains(['/', '\\']) {
        return Err(CliError::Input(format!("{}: label {label:?} contains a path separator", path.display())));
    }
    Ok(LoadedField { label, field })
}
