use std::collections::BTreeMap;
use std::io::Read;

use serde::Serialize;

use super::EvalError;
use crate::kg::ConceptId;

/// One object queried repeatedly against a candidate context set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialSpec {
    pub object: String,
    pub contexts: Vec<String>,
    pub repetitions: u32,
    pub focus: Option<Vec<String>>,
}

impl TrialSpec {
    /// Normalizes every label and checks `repetitions >= 1` and
    /// `focus ⊆ contexts`.
    pub fn new<S: AsRef<str>>(
        object: &str,
        contexts: &[S],
        repetitions: u32,
        focus: Option<&[S]>,
    ) -> Result<Self, String> {
        let norm = |s: &str| ConceptId::new(s).map(String::from).map_err(|e| e.to_string());
        let object = norm(object)?;
        let mut ctx = Vec::new();
        for c in contexts {
            let c = norm(c.as_ref())?;
            if !ctx.contains(&c) {
                ctx.push(c);
            }
        }
        if ctx.is_empty() {
            return Err("no candidate contexts".into());
        }
        if repetitions == 0 {
            return Err("repetitions must be at least 1".into());
        }
        let focus = match focus {
            None => None,
            Some(list) => {
                let f: Vec<String> = list.iter().map(|s| norm(s.as_ref())).collect::<Result<_, _>>()?;
                if f.is_empty() {
                    return Err("focus is empty".into());
                }
                if let Some(bad) = f.iter().find(|x| !ctx.contains(x)) {
                    return Err(format!("focus context `{bad}` is not a candidate"));
                }
                Some(f)
            }
        };
        Ok(TrialSpec {
            object,
            contexts: ctx,
            repetitions,
            focus,
        })
    }
}

fn split_list(s: &str) -> Vec<&str> {
    s.split(';').map(str::trim).filter(|x| !x.is_empty()).collect()
}

/// Reads `object,contexts,repetitions[,focus]` rows; list columns are
/// semicolon-separated.
pub fn read_trial_specs<R: Read>(reader: R) -> Result<Vec<TrialSpec>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(1, e))?.clone();
    let expected = ["object", "contexts", "repetitions"];
    if headers.len() < 3
        || headers.len() > 4
        || headers.iter().take(3).ne(expected.iter().copied())
        || headers.get(3).is_some_and(|h| h != "focus")
    {
        return Err(malformed(1, "header must be `object,contexts,repetitions[,focus]`"));
    }
    let mut specs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() < 3 || rec.len() > 4 {
            return Err(malformed(line, "expected 3 or 4 fields"));
        }
        let repetitions: u32 = rec[2]
            .parse()
            .map_err(|_| malformed(line, format!("bad repetitions `{}`", &rec[2])))?;
        let contexts = split_list(&rec[1]);
        let focus = rec.get(3).map(split_list).filter(|f| !f.is_empty());
        let spec = TrialSpec::new(&rec[0], &contexts, repetitions, focus.as_deref())
            .map_err(|e| malformed(line, e))?;
        specs.push(spec);
    }
    Ok(specs)
}

/// Expected context per object, e.g. from an embedding-similarity consensus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    rows: BTreeMap<String, String>,
}

impl GroundTruth {
    pub fn new<I, S>(rows: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = (S, S)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (o, c) in rows {
            let o = ConceptId::new(o.as_ref()).map_err(|e| malformed(0, e))?.to_string();
            let c = ConceptId::new(c.as_ref()).map_err(|e| malformed(0, e))?.to_string();
            if map.insert(o.clone(), c).is_some() {
                return Err(EvalError::DuplicateGroundTruth(o));
            }
        }
        Ok(GroundTruth { rows: map })
    }

    pub fn expected(&self, object: &str) -> Option<&str> {
        self.rows.get(object).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Reads an `object,context` CSV.
pub fn read_ground_truth<R: Read>(reader: R) -> Result<GroundTruth, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| malformed(1, e))?.clone();
    if headers.len() != 2 || &headers[0] != "object" || &headers[1] != "context" {
        return Err(malformed(1, "header must be `object,context`"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| malformed(e.position().map_or(0, |p| p.line()), e))?;
        rows.push((rec[0].to_string(), rec[1].to_string()));
    }
    GroundTruth::new(rows)
}

fn malformed(line: u64, reason: impl std::fmt::Display) -> EvalError {
    EvalError::MalformedInput {
        line,
        reason: reason.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_specs_with_and_without_focus() {
        let text = "object,contexts,repetitions,focus\n\
                    Apple,kitchen;Living Room;bedroom;bathroom,10,\n\
                    apple,kitchen;living_room;bedroom;bathroom,10,living_room;bedroom;bathroom\n";
        let specs = read_trial_specs(text.as_bytes()).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].object, "apple");
        assert_eq!(specs[0].contexts[1], "living_room");
        assert_eq!(specs[0].focus, None);
        assert_eq!(specs[1].focus.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn three_column_header_accepted() {
        let specs = read_trial_specs("object,contexts,repetitions\nsock,bedroom;laundry_room,10\n".as_bytes()).unwrap();
        assert_eq!(specs[0].repetitions, 10);
    }

    #[test]
    fn focus_must_be_subset() {
        let err = read_trial_specs(
            "object,contexts,repetitions,focus\napple,kitchen;bedroom,10,garage\n".as_bytes(),
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::MalformedInput { line: 2, .. }));
    }

    #[test]
    fn zero_repetitions_rejected() {
        assert!(read_trial_specs("object,contexts,repetitions\napple,kitchen,0\n".as_bytes()).is_err());
    }

    #[test]
    fn ground_truth_rejects_duplicates() {
        let err = read_ground_truth("object,context\napple,kitchen\nApple,pantry\n".as_bytes()).unwrap_err();
        assert!(matches!(err, EvalError::DuplicateGroundTruth(o) if o == "apple"));
    }
}
