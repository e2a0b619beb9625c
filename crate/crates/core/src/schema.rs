//! Label inventories and the schema prompt (SSI) built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sel::Label;

/// Environment variable naming a directory searched for `<name>.json` schemas.
pub const SCHEMA_DIR_ENV: &str = "SELKIT_SCHEMA_DIR";

/// Marker spellings that may never be used as labels.
const RESERVED: [&str; 8] = [
    "[spot]", "[asso]", "[asoc]", "[text]", "<spot>", "<asso>", "<asoc>", "<text>",
];

/// Label inventory for one task.
///
/// Labels are stored in declaration order; [`Schema::spots`] and
/// [`Schema::assos`] return them sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    name: String,
    spots: Vec<String>,
    assos: Vec<String>,
    compat: Option<BTreeMap<String, BTreeSet<String>>>,
    sorted_spots: Vec<String>,
    sorted_assos: Vec<String>,
}

/// On-disk schema document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaFile {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub spots: Vec<String>,
    #[serde(default)]
    pub assos: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compat: Option<BTreeMap<String, Vec<String>>>,
}

fn normalized_unique<I, S>(labels: I, what: &str) -> Result<Vec<String>>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for raw in labels {
        let label = Label::new(raw.as_ref()).map_err(|e| Error::Schema(e.to_string()))?;
        let label = String::from(label);
        if RESERVED.contains(&label.as_str()) {
            return Err(Error::Schema(format!("{what} label {label:?} collides with a marker token")));
        }
        if !seen.insert(label.clone()) {
            return Err(Error::Schema(format!("duplicate {what} label {label:?}")));
        }
        out.push(label);
    }
    Ok(out)
}

impl Schema {
    pub fn new<I, J, S, T>(
        name: &str,
        spots: I,
        assos: J,
        compat: Option<BTreeMap<&str, Vec<&str>>>,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let compat = compat.map(|m| {
            m.into_iter()
                .map(|(k, v)| (k.to_string(), v.into_iter().map(str::to_string).collect()))
                .collect()
        });
        Self::build(name.to_string(), spots, assos, compat)
    }

    fn build<I, J, S, T>(
        name: String,
        spots: I,
        assos: J,
        compat: Option<BTreeMap<String, Vec<String>>>,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let spots = normalized_unique(spots, "spot")?;
        let assos = normalized_unique(assos, "asso")?;
        let compat = match compat {
            None => None,
            Some(map) => {
                let mut out = BTreeMap::new();
                for (spot, allowed) in map {
                    let spot = crate::sel::normalize_label(&spot);
                    if !spots.contains(&spot) {
                        return Err(Error::Schema(format!("compat key {spot:?} is not a spot")));
                    }
                    let mut set = BTreeSet::new();
                    for asso in allowed {
                        let asso = crate::sel::normalize_label(&asso);
                        if !assos.contains(&asso) {
                            return Err(Error::Schema(format!(
                                "compat value {asso:?} under {spot:?} is not an asso"
                            )));
                        }
                        set.insert(asso);
                    }
                    out.insert(spot, set);
                }
                Some(out)
            }
        };
        let mut sorted_spots = spots.clone();
        sorted_spots.sort();
        let mut sorted_assos = assos.clone();
        sorted_assos.sort();
        Ok(Schema {
            name,
            spots,
            assos,
            compat,
            sorted_spots,
            sorted_assos,
        })
    }

    pub fn empty() -> Self {
        Schema::new("", Vec::<&str>::new(), Vec::<&str>::new(), None).unwrap()
    }

    pub fn from_file(file: SchemaFile) -> Result<Self> {
        Self::build(file.name, file.spots, file.assos, file.compat)
    }

    pub fn to_file(&self) -> SchemaFile {
        SchemaFile {
            name: self.name.clone(),
            spots: self.spots.clone(),
            assos: self.assos.clone(),
            compat: self.compat.as_ref().map(|m| {
                m.iter()
                    .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
                    .collect()
            }),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SchemaFile =
            serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Spot labels, sorted.
    pub fn spots(&self) -> &[String] {
        &self.sorted_spots
    }

    /// Association labels, sorted.
    pub fn assos(&self) -> &[String] {
        &self.sorted_assos
    }

    pub fn declared_spots(&self) -> &[String] {
        &self.spots
    }

    pub fn declared_assos(&self) -> &[String] {
        &self.assos
    }

    pub fn compat(&self) -> Option<&BTreeMap<String, BTreeSet<String>>> {
        self.compat.as_ref()
    }

    pub fn has_spot(&self, label: &str) -> bool {
        self.sorted_spots.binary_search_by(|s| s.as_str().cmp(label)).is_ok()
    }

    pub fn has_asso(&self, label: &str) -> bool {
        self.sorted_assos.binary_search_by(|s| s.as_str().cmp(label)).is_ok()
    }

    /// Whether `asso` may appear under `spot`. Always true without a compat map;
    /// a spot missing from a present map admits no associations.
    pub fn allows(&self, spot: &str, asso: &str) -> bool {
        match &self.compat {
            None => true,
            Some(map) => map.get(spot).is_some_and(|set| set.contains(asso)),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.spots.is_empty() && self.assos.is_empty()
    }
}

/// Load a schema document from disk.
pub fn load_schema(path: impl AsRef<Path>) -> Result<Schema> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Schema::from_json(&text).map_err(|e| match e {
        Error::Schema(msg) => Error::Schema(format!("{}: {msg}", path.display())),
        other => other,
    })
}

const BUILTIN: &[(&str, &str)] = &[
    ("ace04", include_str!("../schemas/ace04.json")),
    ("ace05-ent", include_str!("../schemas/ace05-ent.json")),
    ("ace05-rel", include_str!("../schemas/ace05-rel.json")),
    ("ace05-evt", include_str!("../schemas/ace05-evt.json")),
    ("casie", include_str!("../schemas/casie.json")),
    ("conll03", include_str!("../schemas/conll03.json")),
    ("conll04", include_str!("../schemas/conll04.json")),
    ("nyt", include_str!("../schemas/nyt.json")),
    ("scierc", include_str!("../schemas/scierc.json")),
    ("sentiment", include_str!("../schemas/sentiment.json")),
];

pub fn builtin_schema_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(name, _)| *name)
}

pub fn builtin_schema(name: &str) -> Option<Schema> {
    BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Schema::from_json(text).expect("bundled schema is valid"))
}

/// Resolve a schema argument: an existing file path, then `<name>.json`
/// under `$SELKIT_SCHEMA_DIR`, then a bundled schema of that name.
pub fn resolve_schema(arg: &str) -> Result<Schema> {
    let path = Path::new(arg);
    if path.is_file() {
        return load_schema(path);
    }
    if let Ok(dir) = std::env::var(SCHEMA_DIR_ENV) {
        let candidate = Path::new(&dir).join(format!("{arg}.json"));
        if candidate.is_file() {
            return load_schema(candidate);
        }
    }
    builtin_schema(arg).ok_or_else(|| {
        Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such schema file or bundled schema"),
        )
    })
}

/// The three marker tokens of a schema prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Markers {
    pub spot: String,
    pub asso: String,
    pub text: String,
}

impl Default for Markers {
    fn default() -> Self {
        Markers {
            spot: "[spot]".into(),
            asso: "[asso]".into(),
            text: "[text]".into(),
        }
    }
}

impl Markers {
    /// Angle-bracket spelling used for display tables.
    pub fn angle() -> Self {
        Markers {
            spot: "<spot>".into(),
            asso: "<asoc>".into(),
            text: "<text>".into(),
        }
    }

    /// Parse `spot,asso,text`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        match parts.as_slice() {
            [spot, asso, text] if !spot.is_empty() && !asso.is_empty() && !text.is_empty() => {
                Ok(Markers {
                    spot: spot.to_string(),
                    asso: asso.to_string(),
                    text: text.to_string(),
                })
            }
            _ => Err(Error::InvalidArgument(format!(
                "markers must be three comma-separated tokens, got {spec:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SsiOptions {
    pub markers: Markers,
    /// Keep declaration order instead of sorting labels.
    pub preserve_order: bool,
}

/// A rendered schema prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SsiString {
    pub markers: Markers,
    pub body: String,
}

impl SsiString {
    pub fn as_str(&self) -> &str {
        &self.body
    }
}

impl std::fmt::Display for SsiString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.body)
    }
}

pub fn build_ssi(schema: &Schema, options: &SsiOptions) -> SsiString {
    let (spots, assos) = if options.preserve_order {
        (schema.declared_spots(), schema.declared_assos())
    } else {
        (schema.spots(), schema.assos())
    };
    let m = &options.markers;
    let mut parts: Vec<&str> = Vec::with_capacity(2 * (spots.len() + assos.len()) + 1);
    for spot in spots {
        parts.push(&m.spot);
        parts.push(spot);
    }
    for asso in assos {
        parts.push(&m.asso);
        parts.push(asso);
    }
    parts.push(&m.text);
    SsiString {
        markers: m.clone(),
        body: parts.join(" "),
    }
}

/// The model input: prompt, a single space, then the text.
pub fn compose_input(ssi: &SsiString, text: &str) -> String {
    let mut out = String::with_capacity(ssi.body.len() + 1 + text.len());
    out.push_str(&ssi.body);
    out.push(' ');
    out.push_str(text);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_by_default_and_declaration_order_on_request() {
        let schema = Schema::new("s", ["person", "company"], ["work for"], None).unwrap();
        let sorted = build_ssi(&schema, &SsiOptions::default());
        assert_eq!(sorted.body, "[spot] company [spot] person [asso] work for [text]");
        let literal = build_ssi(
            &schema,
            &SsiOptions {
                preserve_order: true,
                ..Default::default()
            },
        );
        assert_eq!(literal.body, "[spot] person [spot] company [asso] work for [text]");
    }

    #[test]
    fn empty_schema_prompt() {
        let schema = Schema::from_json(r#"{"spots": [], "assos": []}"#).unwrap();
        assert!(schema.is_empty());
        assert_eq!(build_ssi(&schema, &SsiOptions::default()).body, "[text]");
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Schema::from_json(r#"{"spots": ["a", "a"]}"#).is_err());
        assert!(Schema::from_json(r#"{"spots": ["a"], "compat": {"b": []}}"#).is_err());
        assert!(Schema::from_json(r#"{"spots": ["a"], "compat": {"a": ["x"]}}"#).is_err());
        assert!(Schema::from_json(r#"{"spots": ["[text]"]}"#).is_err());
        assert!(Schema::from_json(r#"{"spots": ["a(b"]}"#).is_err());
        assert!(Schema::from_json(r#"{"spots": "a"}"#).is_err());
        assert!(Schema::from_json(r#"{"spotz": []}"#).is_err());
    }

    #[test]
    fn compose_is_prefix_space_text() {
        let ssi = build_ssi(&Schema::empty(), &SsiOptions::default());
        assert_eq!(compose_input(&ssi, "abc"), "[text] abc");
        let conll = build_ssi(&builtin_schema("conll03").unwrap(), &SsiOptions::default());
        let text = "EU rejects German call to boycott British lamb .";
        let input = compose_input(&conll, text);
        assert_eq!(input.len(), conll.body.len() + 1 + text.len());
        assert!(input.starts_with(&conll.body) && input.ends_with(text));
    }

    #[test]
    fn compat_lookup() {
        let compat = [("person", vec!["work for"])].into_iter().collect();
        let schema = Schema::new("r", ["person", "org"], ["work for"], Some(compat)).unwrap();
        assert!(schema.allows("person", "work for"));
        assert!(!schema.allows("org", "work for"));
        let open = Schema::new("r", ["org"], ["work for"], None).unwrap();
        assert!(open.allows("org", "work for"));
    }

    #[test]
    fn all_builtins_load() {
        for name in builtin_schema_names() {
            assert!(builtin_schema(name).is_some(), "{name}");
        }
    }
}
