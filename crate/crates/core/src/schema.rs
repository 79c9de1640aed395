//! Attribute schemas and labeled instances.
//!
//! A schema is an ordered list of attributes (numeric or nominal) plus the
//! ordered list of class labels. It lives in a sidecar text file so the same
//! plain CSV format serves both synthetic and ingested data.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

/// Errors from schema construction or schema-file parsing.
#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("schema line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("need at least two classes, got {0}")]
    TooFewClasses(usize),
    #[error("nominal attribute `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("schema has no attributes")]
    NoAttributes,
}

/// Whether an attribute is numeric or nominal; nominal carries its ordered
/// domain of category labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeKind {
    Numeric,
    Nominal { domain: Vec<String> },
}

impl AttributeKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, AttributeKind::Numeric)
    }

    /// Domain size for nominal attributes, 0 for numeric.
    pub fn domain_size(&self) -> usize {
        match self {
            AttributeKind::Numeric => 0,
            AttributeKind::Nominal { domain } => domain.len(),
        }
    }
}

/// One attribute of the instance space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttributeKind,
}

impl AttributeSpec {
    pub fn numeric(name: impl Into<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Numeric,
        }
    }

    pub fn nominal(name: impl Into<String>, domain: Vec<String>) -> Self {
        AttributeSpec {
            name: name.into(),
            kind: AttributeKind::Nominal { domain },
        }
    }
}

/// Ordered attributes plus ordered class labels (K >= 2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
    classes: Vec<String>,
}

impl Schema {
    /// Validates: at least one attribute, unique attribute names, unique
    /// non-empty nominal domains, unique class labels, K >= 2.
    pub fn new(attributes: Vec<AttributeSpec>, classes: Vec<String>) -> Result<Self, SchemaError> {
        if attributes.is_empty() {
            return Err(SchemaError::NoAttributes);
        }
        let mut seen = std::collections::HashSet::new();
        for attr in &attributes {
            if !seen.insert(attr.name.clone()) {
                return Err(SchemaError::DuplicateName(attr.name.clone()));
            }
            if let AttributeKind::Nominal { domain } = &attr.kind {
                if domain.is_empty() {
                    return Err(SchemaError::EmptyDomain(attr.name.clone()));
                }
                let mut values = std::collections::HashSet::new();
                for v in domain {
                    if !values.insert(v.clone()) {
                        return Err(SchemaError::DuplicateName(v.clone()));
                    }
                }
            }
        }
        if classes.len() < 2 {
            return Err(SchemaError::TooFewClasses(classes.len()));
        }
        let mut labels = std::collections::HashSet::new();
        for c in &classes {
            if !labels.insert(c.clone()) {
                return Err(SchemaError::DuplicateName(c.clone()));
            }
        }
        Ok(Schema {
            attributes,
            classes,
        })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn attribute_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Renders the schema in the sidecar-file grammar parsed by
    /// [`parse_schema`].
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for attr in &self.attributes {
            match &attr.kind {
                AttributeKind::Numeric => {
                    let _ = writeln!(out, "attr {} numeric", attr.name);
                }
                AttributeKind::Nominal { domain } => {
                    let _ = writeln!(out, "attr {} nominal {}", attr.name, domain.join(","));
                }
            }
        }
        let _ = writeln!(out, "classes {}", self.classes.join(","));
        out
    }
}

/// Parses the line-oriented schema grammar:
///
/// ```text
/// attr <name> numeric
/// attr <name> nominal <v1>,<v2>,...
/// classes <c1>,<c2>,...
/// ```
///
/// Blank lines and lines starting with `#` are ignored. Attributes keep file
/// order; the `classes` line must come last.
pub fn parse_schema(text: &str) -> Result<Schema, SchemaError> {
    let mut attributes = Vec::new();
    let mut classes: Option<Vec<String>> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if classes.is_some() {
            return Err(SchemaError::Syntax {
                line: lineno,
                msg: "content after the `classes` line".into(),
            });
        }
        let mut parts = line.splitn(2, char::is_whitespace);
        let keyword = parts.next().unwrap_or("");
        let rest = parts.next().unwrap_or("").trim();
        match keyword {
            "attr" => {
                let mut fields = rest.splitn(2, char::is_whitespace);
                let name = fields.next().unwrap_or("").to_string();
                let tail = fields.next().unwrap_or("").trim();
                if name.is_empty() {
                    return Err(SchemaError::Syntax {
                        line: lineno,
                        msg: "missing attribute name".into(),
                    });
                }
                if tail == "numeric" {
                    attributes.push(AttributeSpec::numeric(name));
                } else if let Some(values) = tail.strip_prefix("nominal") {
                    let domain: Vec<String> = values
                        .trim()
                        .split(',')
                        .map(|v| v.trim().to_string())
                        .filter(|v| !v.is_empty())
                        .collect();
                    if domain.is_empty() {
                        return Err(SchemaError::EmptyDomain(name));
                    }
                    attributes.push(AttributeSpec::nominal(name, domain));
                } else {
                    return Err(SchemaError::Syntax {
                        line: lineno,
                        msg: format!("expected `numeric` or `nominal <values>`, got `{tail}`"),
                    });
                }
            }
            "classes" => {
                let labels: Vec<String> = rest
                    .split(',')
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect();
                classes = Some(labels);
            }
            other => {
                return Err(SchemaError::Syntax {
                    line: lineno,
                    msg: format!("unknown keyword `{other}`"),
                });
            }
        }
    }
    let classes = classes.ok_or(SchemaError::TooFewClasses(0))?;
    Schema::new(attributes, classes)
}

/// One attribute value: a real for numeric attributes, a domain index for
/// nominal ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttrValue {
    Numeric(f64),
    Nominal(usize),
}

/// A labeled record: one value per schema attribute plus a class index.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub values: Vec<AttrValue>,
    pub label: usize,
}

impl Instance {
    /// Checks the instance against a schema: value count, value kinds,
    /// nominal indices within domain, numeric values finite, label in range.
    pub fn conforms_to(&self, schema: &Schema) -> bool {
        if self.values.len() != schema.attribute_count() || self.label >= schema.class_count() {
            return false;
        }
        self.values
            .iter()
            .zip(schema.attributes())
            .all(|(value, attr)| match (value, &attr.kind) {
                (AttrValue::Numeric(x), AttributeKind::Numeric) => x.is_finite(),
                (AttrValue::Nominal(v), AttributeKind::Nominal { domain }) => *v < domain.len(),
                _ => false,
            })
    }
}

/// Renders an instance as one CSV record (final field is the class label).
/// Reals use the shortest round-trip decimal form, so
/// `parse_instance(format_instance(i), s) == i`.
pub fn format_instance(inst: &Instance, schema: &Schema) -> String {
    let mut out = String::new();
    for (value, attr) in inst.values.iter().zip(schema.attributes()) {
        match (value, &attr.kind) {
            (AttrValue::Numeric(x), _) => {
                let _ = write!(out, "{x}");
            }
            (AttrValue::Nominal(v), AttributeKind::Nominal { domain }) => {
                out.push_str(&domain[*v]);
            }
            (AttrValue::Nominal(v), AttributeKind::Numeric) => {
                // Invalid under the schema; render the raw index rather than panic.
                let _ = write!(out, "{v}");
            }
        }
        out.push(',');
    }
    out.push_str(&schema.classes()[inst.label]);
    out
}

pub type SharedSchema = Arc<Schema>;
