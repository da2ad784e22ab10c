use super::{ConceptId, KgError};

/// Maps a ConceptNet URI (`/c/en/apple/n`) or a free-text label (`"Apple"`)
/// to its canonical [`ConceptId`].
pub fn normalize_label(raw: &str) -> Result<ConceptId, KgError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(KgError::EmptyLabel);
    }

    let term = match strip_concept_prefix(trimmed) {
        Some(rest) => {
            let mut parts = rest.split('/');
            let lang = parts.next().unwrap_or("");
            if !lang.eq_ignore_ascii_case("en") {
                return Err(KgError::NonEnglishConcept(trimmed.to_string()));
            }
            parts.next().unwrap_or("")
        }
        None => trimmed,
    };

    let label = canonical_text(term);
    if label.is_empty() {
        return Err(KgError::EmptyLabel);
    }
    // Dropped characters can expose a URI prefix; resolve it so the result is a fixed point.
    if strip_concept_prefix(&label).is_some() {
        return normalize_label(&label);
    }
    Ok(ConceptId(label))
}

fn strip_concept_prefix(s: &str) -> Option<&str> {
    let head = s.get(..3)?;
    if head.eq_ignore_ascii_case("/c/") {
        Some(&s[3..])
    } else {
        None
    }
}

fn canonical_text(term: &str) -> String {
    let lowered = term.to_lowercase();
    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push('_');
        }
        // Characters with no lowercase mapping are dropped.
        out.extend(word.chars().filter(|c| !c.is_control() && !c.is_uppercase()));
    }
    out
}
