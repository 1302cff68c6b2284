//! Exact method matching between two revisions of a file.

use std::collections::HashMap;

use crate::parser::{MethodDecl, MethodIdentity};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MethodMatching {
    pub matched_pairs: Vec<(MethodDecl, MethodDecl)>,
    pub unmatched_before: Vec<MethodDecl>,
    pub unmatched_after: Vec<MethodDecl>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChangeKind {
    Unchanged,
    Modified,
    Added,
    Deleted,
}

/// Pairs methods with the same qualified name and parameter types. The
/// file path is not part of the key so renamed files still match.
pub fn match_methods(before: &[MethodDecl], after: &[MethodDecl]) -> MethodMatching {
    let mut index: HashMap<(&str, &[String]), usize> = HashMap::with_capacity(before.len());
    for (i, m) in before.iter().enumerate() {
        index.entry(m.signature_key()).or_insert(i);
    }
    let mut used = vec![false; before.len()];
    let mut out = MethodMatching::default();
    for a in after {
        match index.get(&a.signature_key()) {
            Some(&i) if !used[i] => {
                used[i] = true;
                out.matched_pairs.push((before[i].clone(), a.clone()));
            }
            _ => out.unmatched_after.push(a.clone()),
        }
    }
    out.unmatched_before = before
        .iter()
        .zip(&used)
        .filter(|(_, u)| !**u)
        .map(|(m, _)| m.clone())
        .collect();
    out
}

/// A matched pair counts as modified when its body or its declaration
/// (modifiers, return type, throws clause) changed.
pub fn is_modified(before: &MethodDecl, after: &MethodDecl) -> bool {
    before.body_tokens != after.body_tokens || before.signature_tokens != after.signature_tokens
}

/// Classifies every method of the matching. Pairs report the after identity.
pub fn classify_changes(matching: &MethodMatching) -> Vec<(MethodIdentity, ChangeKind)> {
    let pairs = matching.matched_pairs.iter().map(|(b, a)| {
        let kind = if is_modified(b, a) {
            ChangeKind::Modified
        } else {
            ChangeKind::Unchanged
        };
        (a.identity(), kind)
    });
    let deleted = matching
        .unmatched_before
        .iter()
        .map(|m| (m.identity(), ChangeKind::Deleted));
    let added = matching
        .unmatched_after
        .iter()
        .map(|m| (m.identity(), ChangeKind::Added));
    pairs.chain(deleted).chain(added).collect()
}
