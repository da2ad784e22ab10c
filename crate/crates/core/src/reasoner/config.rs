use std::collections::BTreeMap;
use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use super::strategy::{strategy_by_name, DynStrategy, FirstEdgeWeight};
use crate::kg::{Relation, RelationFilter};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("key `{0}` given twice")]
    DuplicateKey(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `key = value` lines; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(ConfigError::DuplicateKey(key));
            }
        }
        Ok(ConfigFile { entries })
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn ensure_only(&self, known: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !known.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::UnknownKey(k.clone())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamWidth {
    Limited(NonZeroUsize),
    Unlimited,
}

impl BeamWidth {
    pub fn limit(self) -> usize {
        match self {
            BeamWidth::Limited(k) => k.get(),
            BeamWidth::Unlimited => usize::MAX,
        }
    }
}

/// Path search settings.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub max_depth: usize,
    /// Neighbors kept per expansion, heaviest first.
    pub beam_width: BeamWidth,
    pub strategy: DynStrategy,
    /// Relations allowed on the hop leaving the context (either direction).
    pub first_hop_relations: RelationFilter,
    /// Relations allowed on every later hop.
    pub relations: RelationFilter,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_depth: 3,
            beam_width: BeamWidth::Limited(NonZeroUsize::new(50).unwrap()),
            strategy: Arc::new(FirstEdgeWeight),
            first_hop_relations: RelationFilter::Only(vec![Relation::AtLocation]),
            relations: RelationFilter::All,
        }
    }
}

impl PartialEq for SearchConfig {
    fn eq(&self, other: &Self) -> bool {
        self.max_depth == other.max_depth
            && self.beam_width == other.beam_width
            && self.strategy.name() == other.strategy.name()
            && self.first_hop_relations == other.first_hop_relations
            && self.relations == other.relations
    }
}

impl SearchConfig {
    pub const KEYS: [&'static str; 5] = [
        "max_depth",
        "beam_width",
        "strategy",
        "first_hop_relations",
        "relations",
    ];

    /// Defaults widened to let the first hop use `UsedFor` as well as
    /// `AtLocation`, for purpose-anchored explanations (playroom, office).
    pub fn explainability() -> Self {
        SearchConfig {
            first_hop_relations: RelationFilter::Only(vec![Relation::AtLocation, Relation::UsedFor]),
            ..Self::default()
        }
    }

    pub fn unlimited(mut self) -> Self {
        self.beam_width = BeamWidth::Unlimited;
        self
    }

    pub fn with_strategy(mut self, strategy: DynStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_max_depth(mut self, depth: usize) -> Self {
        self.max_depth = depth;
        self
    }

    /// Overrides defaults with whatever search keys `file` sets.
    pub fn from_file(file: &ConfigFile) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        if let Some(v) = file.get("max_depth") {
            cfg.max_depth = match v.parse::<usize>() {
                Ok(d) if d >= 1 => d,
                _ => return Err(invalid("max_depth", "expected an integer >= 1")),
            };
        }
        if let Some(v) = file.get("beam_width") {
            cfg.beam_width = if v.eq_ignore_ascii_case("unlimited") {
                BeamWidth::Unlimited
            } else {
                v.parse::<NonZeroUsize>()
                    .map(BeamWidth::Limited)
                    .map_err(|_| invalid("beam_width", "expected an integer >= 1 or `unlimited`"))?
            };
        }
        if let Some(v) = file.get("strategy") {
            cfg.strategy = strategy_by_name(v)
                .ok_or_else(|| invalid("strategy", &format!("unknown strategy `{v}`")))?;
        }
        if let Some(v) = file.get("first_hop_relations") {
            cfg.first_hop_relations = parse_relations("first_hop_relations", v)?;
        }
        if let Some(v) = file.get("relations") {
            cfg.relations = parse_relations("relations", v)?;
        }
        Ok(cfg)
    }
}

fn invalid(key: &str, reason: &str) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

/// `all` or a comma-separated list of relation names.
pub fn parse_relations(key: &str, value: &str) -> Result<RelationFilter, ConfigError> {
    if value.eq_ignore_ascii_case("all") {
        return Ok(RelationFilter::All);
    }
    let list: Vec<Relation> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Relation::from_name)
        .collect();
    if list.is_empty() {
        return Err(invalid(key, "expected `all` or at least one relation"));
    }
    Ok(RelationFilter::Only(list))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let f = ConfigFile::parse(
            "# search\nmax_depth = 4\nbeam_width = unlimited\nstrategy = AverageWeight\n\
             first_hop_relations = AtLocation, UsedFor\nrelations = RelatedTo,IsA # trailing\n",
        )
        .unwrap();
        let cfg = SearchConfig::from_file(&f).unwrap();
        assert_eq!(cfg.max_depth, 4);
        assert_eq!(cfg.beam_width, BeamWidth::Unlimited);
        assert_eq!(cfg.strategy.name(), "average_weight");
        assert_eq!(
            cfg.first_hop_relations,
            RelationFilter::Only(vec![Relation::AtLocation, Relation::UsedFor])
        );
        assert_eq!(
            cfg.relations,
            RelationFilter::Only(vec![Relation::RelatedTo, Relation::IsA])
        );
    }

    #[test]
    fn empty_file_is_default() {
        let cfg = SearchConfig::from_file(&ConfigFile::parse("").unwrap()).unwrap();
        assert_eq!(cfg, SearchConfig::default());
        assert_eq!(cfg.beam_width.limit(), 50);
    }

    #[test]
    fn rejects_bad_values() {
        for text in ["max_depth = 0", "beam_width = 0", "strategy = median", "relations = ,"] {
            let f = ConfigFile::parse(text).unwrap();
            assert!(SearchConfig::from_file(&f).is_err(), "{text}");
        }
        assert!(matches!(
            ConfigFile::parse("a = 1\na = 2"),
            Err(ConfigError::DuplicateKey(_))
        ));
        assert!(matches!(ConfigFile::parse("novalue"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn unknown_keys_flagged() {
        let f = ConfigFile::parse("max_depth = 2\ncolour = blue").unwrap();
        assert!(matches!(
            f.ensure_only(&SearchConfig::KEYS),
            Err(ConfigError::UnknownKey(k)) if k == "colour"
        ));
    }
}
