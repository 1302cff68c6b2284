//! Refactoring detection over one commit's method changes, and the rules
//! that carry statistics across the detected refactorings.
//!
//! Detection runs five passes over the methods that exact matching left
//! unpaired. Structural matches come first, similarity matches later, and
//! every deleted or added method joins at most one event:
//!
//! 1. move / pull up / push down: same name and parameters, different class,
//!    body similarity at least `thresholds.moved`;
//! 2. rename: same class, similarity at least `thresholds.rename`;
//! 3. extract: an added method whose body mostly consists of tokens removed
//!    from a modified method;
//! 4. inline: the mirror image of extract for deleted methods;
//! 5. rename and move at once: different class, similarity at least
//!    `thresholds.rename_and_move`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::diff::{is_modified, MethodMatching};
use crate::model::{ChangeModel, StatsSink};
use crate::parser::{MethodDecl, MethodIdentity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RefactoringKind {
    ExtractMethod,
    ExtractAndMove,
    InlineMethod,
    RenameMethod,
    MoveMethod,
    PullUpMethod,
    PushDownMethod,
}

impl RefactoringKind {
    pub const ALL: [RefactoringKind; 7] = [
        RefactoringKind::ExtractMethod,
        RefactoringKind::ExtractAndMove,
        RefactoringKind::InlineMethod,
        RefactoringKind::RenameMethod,
        RefactoringKind::MoveMethod,
        RefactoringKind::PullUpMethod,
        RefactoringKind::PushDownMethod,
    ];

    /// Kinds that re-key an existing method's statistics.
    pub fn is_rekey(self) -> bool {
        matches!(
            self,
            RefactoringKind::RenameMethod
                | RefactoringKind::MoveMethod
                | RefactoringKind::PullUpMethod
                | RefactoringKind::PushDownMethod
        )
    }
}

impl fmt::Display for RefactoringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RefactoringKind::ExtractMethod => "extract-method",
            RefactoringKind::ExtractAndMove => "extract-and-move-method",
            RefactoringKind::InlineMethod => "inline-method",
            RefactoringKind::RenameMethod => "rename-method",
            RefactoringKind::MoveMethod => "move-method",
            RefactoringKind::PullUpMethod => "pull-up-method",
            RefactoringKind::PushDownMethod => "push-down-method",
        };
        f.write_str(s)
    }
}

/// A detected refactoring. `before` is absent for extractions; `host` is the
/// method extracted from or inlined into.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RefactoringEvent {
    pub kind: RefactoringKind,
    pub before: Option<MethodIdentity>,
    pub after: MethodIdentity,
    pub host: Option<MethodIdentity>,
}

impl RefactoringEvent {
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            RefactoringKind::InlineMethod => self.host.is_some() && self.before.is_some(),
            RefactoringKind::ExtractMethod | RefactoringKind::ExtractAndMove => {
                self.host.is_some() && self.before.is_none()
            }
            _ => self.before.as_ref().is_some_and(|b| *b != self.after),
        }
    }
}

/// Dice coefficient of two token multisets, in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityScore(f64);

impl SimilarityScore {
    pub fn value(self) -> f64 {
        self.0
    }

    /// `2|A ∩ B| / (|A| + |B|)`; two empty bodies are identical.
    pub fn dice(a: &[String], b: &[String]) -> SimilarityScore {
        Bag::of(a).dice(&Bag::of(b))
    }
}

/// Token multiset.
#[derive(Debug, Clone, Default)]
struct Bag<'a> {
    counts: HashMap<&'a str, u32>,
    len: u32,
}

impl<'a> Bag<'a> {
    fn of(tokens: &'a [String]) -> Self {
        let mut bag = Bag::default();
        for t in tokens {
            *bag.counts.entry(t.as_str()).or_default() += 1;
            bag.len += 1;
        }
        bag
    }

    fn intersection_len(&self, other: &Bag<'_>) -> u32 {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .map(|(t, &c)| c.min(large.counts.get(t).copied().unwrap_or(0)))
            .sum()
    }

    fn dice(&self, other: &Bag<'_>) -> SimilarityScore {
        let denom = self.len + other.len;
        if denom == 0 {
            return SimilarityScore(1.0);
        }
        SimilarityScore(2.0 * f64::from(self.intersection_len(other)) / f64::from(denom))
    }

    /// `self - other` as a multiset.
    fn minus(&self, other: &Bag<'a>) -> Bag<'a> {
        let mut out = Bag::default();
        for (&t, &c) in &self.counts {
            let rest = c.saturating_sub(other.counts.get(t).copied().unwrap_or(0));
            if rest > 0 {
                out.counts.insert(t, rest);
                out.len += rest;
            }
        }
        out
    }
}

/// Detection thresholds. The defaults were chosen against the synthetic
/// refactoring corpus in the test suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub moved: f64,
    pub rename: f64,
    pub containment: f64,
    pub rename_and_move: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            moved: 0.60,
            rename: 0.75,
            containment: 0.50,
            rename_and_move: 0.85,
        }
    }
}

/// Simple class name to the simple name of its superclass.
pub type ClassHierarchy = HashMap<String, String>;

fn simple_class(qualified: &str) -> &str {
    qualified.rsplit('.').next().unwrap_or(qualified)
}

fn same_class(a: &MethodDecl, b: &MethodDecl) -> bool {
    a.file_path == b.file_path && a.enclosing_class == b.enclosing_class
}

struct Candidate<'m> {
    decl: &'m MethodDecl,
    id: MethodIdentity,
}

struct ModifiedPair<'m> {
    before: Bag<'m>,
    after: Bag<'m>,
    id: MethodIdentity,
    class: &'m MethodDecl,
}

/// Finds refactorings among the methods of one commit.
pub fn detect_refactorings(
    matchings: &[MethodMatching],
    hierarchy: &ClassHierarchy,
    thresholds: &Thresholds,
) -> Vec<RefactoringEvent> {
    let mut deleted: Vec<Candidate<'_>> = Vec::new();
    let mut added: Vec<Candidate<'_>> = Vec::new();
    let mut modified: Vec<ModifiedPair<'_>> = Vec::new();
    for m in matchings {
        deleted.extend(m.unmatched_before.iter().map(|d| Candidate { decl: d, id: d.identity() }));
        added.extend(m.unmatched_after.iter().map(|a| Candidate { decl: a, id: a.identity() }));
        for (b, a) in &m.matched_pairs {
            if is_modified(b, a) {
                modified.push(ModifiedPair {
                    before: Bag::of(&b.body_tokens),
                    after: Bag::of(&a.body_tokens),
                    id: a.identity(),
                    class: a,
                });
            }
        }
    }
    // Input order must not matter.
    deleted.sort_by(|x, y| x.id.cmp(&y.id));
    added.sort_by(|x, y| x.id.cmp(&y.id));
    modified.sort_by(|x, y| x.id.cmp(&y.id));

    let del_bags: Vec<Bag<'_>> = deleted.iter().map(|c| Bag::of(&c.decl.body_tokens)).collect();
    let add_bags: Vec<Bag<'_>> = added.iter().map(|c| Bag::of(&c.decl.body_tokens)).collect();
    let mut del_used = vec![false; deleted.len()];
    let mut add_used = vec![false; added.len()];
    let mut events = Vec::new();

    // Pass 1: same signature in another class.
    let pairs = best_pairs(&deleted, &added, &del_bags, &add_bags, &del_used, &add_used, |d, a, s| {
        d.decl.name() == a.decl.name()
            && d.decl.param_types == a.decl.param_types
            && !same_class(d.decl, a.decl)
            && s >= thresholds.moved
    });
    for (d, a) in pairs {
        del_used[d] = true;
        add_used[a] = true;
        let kind = hierarchy_kind(deleted[d].decl, added[a].decl, hierarchy);
        events.push(RefactoringEvent {
            kind,
            before: Some(deleted[d].id.clone()),
            after: added[a].id.clone(),
            host: None,
        });
    }

    // Pass 2: renames within a class.
    let pairs = best_pairs(&deleted, &added, &del_bags, &add_bags, &del_used, &add_used, |d, a, s| {
        same_class(d.decl, a.decl) && s >= thresholds.rename
    });
    for (d, a) in pairs {
        del_used[d] = true;
        add_used[a] = true;
        events.push(RefactoringEvent {
            kind: RefactoringKind::RenameMethod,
            before: Some(deleted[d].id.clone()),
            after: added[a].id.clone(),
            host: None,
        });
    }

    // Pass 3: extraction from a modified method.
    for (a, cand) in added.iter().enumerate() {
        if add_used[a] || add_bags[a].len == 0 {
            continue;
        }
        let best = best_container(&add_bags[a], &modified, thresholds.containment, |m| {
            m.before.minus(&m.after)
        });
        if let Some(host) = best {
            add_used[a] = true;
            let kind = if same_class(cand.decl, host.class) {
                RefactoringKind::ExtractMethod
            } else {
                RefactoringKind::ExtractAndMove
            };
            events.push(RefactoringEvent {
                kind,
                before: None,
                after: cand.id.clone(),
                host: Some(host.id.clone()),
            });
        }
    }

    // Pass 4: inlining into a modified method.
    for (d, cand) in deleted.iter().enumerate() {
        if del_used[d] || del_bags[d].len == 0 {
            continue;
        }
        let best = best_container(&del_bags[d], &modified, thresholds.containment, |m| {
            m.after.minus(&m.before)
        });
        if let Some(host) = best {
            del_used[d] = true;
            events.push(RefactoringEvent {
                kind: RefactoringKind::InlineMethod,
                before: Some(cand.id.clone()),
                after: host.id.clone(),
                host: Some(host.id.clone()),
            });
        }
    }

    // Pass 5: renamed and moved in one step.
    let pairs = best_pairs(&deleted, &added, &del_bags, &add_bags, &del_used, &add_used, |d, a, s| {
        !same_class(d.decl, a.decl) && s >= thresholds.rename_and_move
    });
    for (d, a) in pairs {
        del_used[d] = true;
        add_used[a] = true;
        events.push(RefactoringEvent {
            kind: RefactoringKind::MoveMethod,
            before: Some(deleted[d].id.clone()),
            after: added[a].id.clone(),
            host: None,
        });
    }

    events
}

fn hierarchy_kind(from: &MethodDecl, to: &MethodDecl, hierarchy: &ClassHierarchy) -> RefactoringKind {
    let from_class = simple_class(&from.enclosing_class);
    let to_class = simple_class(&to.enclosing_class);
    let super_of = |class: &str, decl: &MethodDecl| -> Option<String> {
        hierarchy
            .get(class)
            .cloned()
            .or_else(|| decl.superclass.clone())
    };
    if super_of(from_class, from).as_deref() == Some(to_class) {
        RefactoringKind::PullUpMethod
    } else if super_of(to_class, to).as_deref() == Some(from_class) {
        RefactoringKind::PushDownMethod
    } else {
        RefactoringKind::MoveMethod
    }
}

/// Greedy maximum-score pairing among unused candidates accepted by `ok`.
/// Ties go to the lexicographically smallest added method, then the
/// smallest deleted one.
fn best_pairs(
    deleted: &[Candidate<'_>],
    added: &[Candidate<'_>],
    del_bags: &[Bag<'_>],
    add_bags: &[Bag<'_>],
    del_used: &[bool],
    add_used: &[bool],
    ok: impl Fn(&Candidate<'_>, &Candidate<'_>, f64) -> bool,
) -> Vec<(usize, usize)> {
    let mut scored = Vec::new();
    for (d, dc) in deleted.iter().enumerate() {
        if del_used[d] {
            continue;
        }
        for (a, ac) in added.iter().enumerate() {
            if add_used[a] {
                continue;
            }
            let s = del_bags[d].dice(&add_bags[a]).value();
            if ok(dc, ac, s) {
                scored.push((s, a, d));
            }
        }
    }
    // Candidates are sorted by identity, so index order is name order.
    scored.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut taken_d = HashSet::new();
    let mut taken_a = HashSet::new();
    let mut out = Vec::new();
    for (_, a, d) in scored {
        if !taken_d.contains(&d) && !taken_a.contains(&a) {
            taken_d.insert(d);
            taken_a.insert(a);
            out.push((d, a));
        }
    }
    out
}

/// The modified method whose changed tokens (as chosen by `changed`) hold
/// the largest share of `tokens`, if that share reaches `threshold`.
fn best_container<'p, 'm>(
    tokens: &Bag<'_>,
    modified: &'p [ModifiedPair<'m>],
    threshold: f64,
    changed: impl Fn(&ModifiedPair<'m>) -> Bag<'m>,
) -> Option<&'p ModifiedPair<'m>> {
    let mut best: Option<(f64, &ModifiedPair<'m>)> = None;
    for m in modified {
        let share = f64::from(tokens.intersection_len(&changed(m))) / f64::from(tokens.len);
        if share >= threshold && best.is_none_or(|(b, _)| share > b) {
            best = Some((share, m));
        }
    }
    best.map(|(_, m)| m)
}

/// How refactorings touch change counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ApplyOptions {
    /// A rename, move, pull up or push down also counts as one change.
    pub count_renames: bool,
}

impl Default for ApplyOptions {
    fn default() -> Self {
        ApplyOptions {
            count_renames: true,
        }
    }
}

/// Applies `events` of a commit made on `day` to `sink`:
///
/// * extract: the new method gets statistics with one change on `day`;
/// * inline: the inlined method's statistics are deleted and the host gains
///   one change on `day`;
/// * rename, move, pull up, push down: statistics are re-keyed to the new
///   identity with their history, plus one change when
///   [`ApplyOptions::count_renames`] is set.
///
/// Returns the `before` identities that were not present in the sink; their
/// events start fresh statistics.
pub fn apply_refactorings<S: StatsSink>(
    sink: &mut S,
    events: &[RefactoringEvent],
    day: NaiveDate,
    opts: ApplyOptions,
) -> Result<Vec<MethodIdentity>, S::Error> {
    let mut unknown = Vec::new();
    for ev in events {
        if let Some(before) = &ev.before {
            if !sink.contains(before)? {
                unknown.push(before.clone());
            }
        }
        match ev.kind {
            RefactoringKind::ExtractMethod | RefactoringKind::ExtractAndMove => {
                sink.increment(&ev.after, day)?;
            }
            RefactoringKind::InlineMethod => {
                if let Some(before) = &ev.before {
                    sink.delete(before)?;
                }
                let host = ev.host.as_ref().unwrap_or(&ev.after);
                sink.increment(host, day)?;
            }
            _ => {
                if let Some(before) = &ev.before {
                    sink.rekey(before, &ev.after)?;
                }
                if opts.count_renames {
                    sink.increment(&ev.after, day)?;
                }
            }
        }
    }
    Ok(unknown)
}

impl ChangeModel {
    /// Value-style wrapper around [`apply_refactorings`].
    pub fn apply_refactorings(
        mut self,
        events: &[RefactoringEvent],
        day: NaiveDate,
        opts: ApplyOptions,
    ) -> ChangeModel {
        match apply_refactorings(&mut self, events, day, opts) {
            Ok(_) => self,
            Err(never) => match never {},
        }
    }
}
