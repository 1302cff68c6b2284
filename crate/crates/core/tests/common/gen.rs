//! Scripted project evolution with ground truth. The generator decides what
//! happened to every method, so its record is the oracle for detection and
//! counting tests.

use std::collections::BTreeMap;

use churnscope::parser::MethodIdentity;
use churnscope::refactor::{RefactoringEvent, RefactoringKind};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::java::{body, ident, statement, Class, Method};
use super::ScriptRepo;

pub const BASE: &str = "Base";
pub const MID: &str = "Mid";
pub const LEAF: &str = "Leaf";
pub const LOOSE: [&str; 3] = ["Alpha", "Beta", "Gamma"];

const PARAM_TYPES: [&str; 6] = ["int", "String", "long", "List<String>", "double[]", "Object"];

pub struct Project {
    pub classes: BTreeMap<String, Class>,
    pub rng: StdRng,
    /// Classes changed since the last `stage`.
    dirty: Vec<String>,
}

pub fn path_of(class: &str) -> String {
    format!("src/demo/{class}.java")
}

pub fn identity(class: &str, m: &Method) -> MethodIdentity {
    MethodIdentity::new(path_of(class), format!("demo.{class}#{}", m.name), m.param_types())
}

impl Project {
    /// Base <- Mid <- Leaf plus three unrelated classes, each with
    /// `methods` methods.
    pub fn new(mut rng: StdRng, methods: usize) -> Self {
        let mut classes = BTreeMap::new();
        let mut names = vec![BASE, MID, LEAF];
        names.extend(LOOSE);
        for name in names {
            let mut c = Class::new(name);
            c.extends = match name {
                MID => Some(BASE.to_owned()),
                LEAF => Some(MID.to_owned()),
                _ => None,
            };
            classes.insert(name.to_owned(), c);
        }
        let mut p = Project {
            classes,
            rng: StdRng::from_rng(&mut rng).unwrap(),
            dirty: Vec::new(),
        };
        let all: Vec<String> = p.classes.keys().cloned().collect();
        for class in &all {
            for _ in 0..methods {
                p.add_method(class);
            }
        }
        p
    }

    /// Loose classes only, no hierarchy.
    pub fn flat(mut rng: StdRng, classes: usize, methods: usize) -> Self {
        let mut p = Project {
            classes: BTreeMap::new(),
            rng: StdRng::from_rng(&mut rng).unwrap(),
            dirty: Vec::new(),
        };
        for i in 0..classes {
            let name = format!("C{i:03}");
            p.classes.insert(name.clone(), Class::new(&name));
            for _ in 0..methods {
                p.add_method(&name);
            }
        }
        p
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.keys().cloned().collect()
    }

    /// Writes every class.
    pub fn stage_all(&mut self, repo: &mut ScriptRepo) {
        self.dirty = self.class_names();
        self.stage(repo);
    }

    /// Writes the classes changed since the last call.
    pub fn stage(&mut self, repo: &mut ScriptRepo) {
        let mut dirty = std::mem::take(&mut self.dirty);
        dirty.sort();
        dirty.dedup();
        for c in dirty {
            match self.classes.get(&c) {
                Some(class) => repo.write(&path_of(&c), class.render()),
                None => repo.remove(&path_of(&c)),
            };
        }
    }

    /// Every method's identity and rendered body.
    pub fn methods(&self) -> BTreeMap<MethodIdentity, String> {
        let mut out = BTreeMap::new();
        for (c, class) in &self.classes {
            for m in &class.methods {
                out.insert(identity(c, m), m.body.join("\n"));
            }
        }
        out
    }

    fn touch(&mut self, class: &str) {
        self.dirty.push(class.to_owned());
    }

    fn fresh_method(&mut self, stmts: usize) -> Method {
        let name = format!("{}{}", ident(&mut self.rng), self.rng.gen_range(0..100));
        let mut m = Method::new(&name, body(&mut self.rng, stmts));
        for _ in 0..self.rng.gen_range(0..3) {
            let ty = PARAM_TYPES.choose(&mut self.rng).unwrap();
            let pname = ident(&mut self.rng);
            m = m.param(ty, &pname);
        }
        m
    }

    fn has_signature(&self, class: &str, m: &Method) -> bool {
        self.classes[class]
            .methods
            .iter()
            .any(|o| o.name == m.name && o.param_types() == m.param_types())
    }

    fn pick_method(&mut self, class: &str, min_stmts: usize) -> Option<String> {
        let names: Vec<String> = self.classes[class]
            .methods
            .iter()
            .filter(|m| m.body.len() >= min_stmts)
            .map(|m| m.name.clone())
            .collect();
        names.choose(&mut self.rng).cloned()
    }

    fn pick_class_with(&mut self, among: &[String], min_stmts: usize) -> Option<(String, String)> {
        let mut order = among.to_vec();
        order.shuffle(&mut self.rng);
        for c in order {
            if let Some(m) = self.pick_method(&c, min_stmts) {
                return Some((c, m));
            }
        }
        None
    }

    // Noise ---------------------------------------------------------------

    pub fn add_method(&mut self, class: &str) -> MethodIdentity {
        let n = self.rng.gen_range(4..10);
        let mut m = self.fresh_method(n);
        while self.has_signature(class, &m) {
            m.name.push('x');
        }
        let id = identity(class, &m);
        let at = self.rng.gen_range(0..=self.classes[class].methods.len());
        self.classes.get_mut(class).unwrap().methods.insert(at, m);
        self.touch(class);
        id
    }

    /// Replaces or appends one statement of a random method.
    pub fn edit_method(&mut self) -> Option<MethodIdentity> {
        let classes = self.class_names();
        let (c, name) = self.pick_class_with(&classes, 1)?;
        let stmt = statement(&mut self.rng);
        let replace = self.rng.gen_bool(0.7);
        let m = self.classes.get_mut(&c).unwrap().method_mut(&name);
        if replace {
            let i = self.rng.gen_range(0..m.body.len());
            m.body[i] = stmt;
        } else {
            let i = self.rng.gen_range(0..=m.body.len());
            m.body.insert(i, stmt);
        }
        let id = identity(&c, self.classes[&c].method(&name));
        self.touch(&c);
        Some(id)
    }

    pub fn delete_method(&mut self) -> Option<MethodIdentity> {
        let classes = self.class_names();
        let (c, name) = self.pick_class_with(&classes, 0)?;
        let m = self.classes.get_mut(&c).unwrap().take(&name);
        self.touch(&c);
        Some(identity(&c, &m))
    }

    pub fn add_random_method(&mut self) -> MethodIdentity {
        let classes = self.class_names();
        let c = classes.choose(&mut self.rng).unwrap().clone();
        self.add_method(&c)
    }

    /// One random non-refactoring change.
    pub fn noise(&mut self) {
        match self.rng.gen_range(0..10) {
            0..=6 => {
                self.edit_method();
            }
            7 | 8 => {
                self.add_random_method();
            }
            _ => {
                self.delete_method();
            }
        }
    }

    // Refactorings ----------------------------------------------------------

    pub fn refactor(&mut self, kind: RefactoringKind) -> Option<RefactoringEvent> {
        match kind {
            RefactoringKind::RenameMethod => self.rename(),
            RefactoringKind::MoveMethod => {
                let loose: Vec<String> = self.class_names().into_iter().filter(|c| ![BASE, MID, LEAF].contains(&c.as_str())).collect();
                let (from, name) = self.pick_class_with(&loose, 1)?;
                let to = loose.iter().filter(|c| **c != from).collect::<Vec<_>>().choose(&mut self.rng).map(|s| s.to_string())?;
                self.move_between(&from, &name, &to, kind)
            }
            RefactoringKind::PullUpMethod => {
                let (from, to) = *[(MID, BASE), (LEAF, MID)].choose(&mut self.rng).unwrap();
                let name = self.pick_method(from, 1)?;
                self.move_between(from, &name, to, kind)
            }
            RefactoringKind::PushDownMethod => {
                let (from, to) = *[(BASE, MID), (MID, LEAF)].choose(&mut self.rng).unwrap();
                let name = self.pick_method(from, 1)?;
                self.move_between(from, &name, to, kind)
            }
            RefactoringKind::ExtractMethod => self.extract(false),
            RefactoringKind::ExtractAndMove => self.extract(true),
            RefactoringKind::InlineMethod => self.inline(),
        }
    }

    fn rename(&mut self) -> Option<RefactoringEvent> {
        let classes = self.class_names();
        let (c, name) = self.pick_class_with(&classes, 4)?;
        let before = identity(&c, self.classes[&c].method(&name));
        let new_name = format!("{}{}", ident(&mut self.rng), self.rng.gen_range(0..100));
        let tweak = self.rng.gen_bool(0.3);
        let stmt = statement(&mut self.rng);
        let class = self.classes.get_mut(&c).unwrap();
        let m = class.method_mut(&name);
        m.name = new_name.clone();
        // Renames often come with a small edit.
        if tweak && m.body.len() >= 6 {
            let i = m.body.len() - 1;
            m.body[i] = stmt;
        }
        let after = identity(&c, self.classes[&c].method(&new_name));
        self.touch(&c);
        Some(RefactoringEvent {
            kind: RefactoringKind::RenameMethod,
            before: Some(before),
            after,
            host: None,
        })
    }

    fn move_between(&mut self, from: &str, name: &str, to: &str, kind: RefactoringKind) -> Option<RefactoringEvent> {
        let m = self.classes[from].method(name).clone();
        if self.has_signature(to, &m) {
            return None;
        }
        let before = identity(from, &m);
        let m = self.classes.get_mut(from).unwrap().take(name);
        let after = identity(to, &m);
        let at = self.rng.gen_range(0..=self.classes[to].methods.len());
        self.classes.get_mut(to).unwrap().methods.insert(at, m);
        self.touch(from);
        self.touch(to);
        Some(RefactoringEvent {
            kind,
            before: Some(before),
            after,
            host: None,
        })
    }

    fn extract(&mut self, elsewhere: bool) -> Option<RefactoringEvent> {
        let classes = self.class_names();
        let (c, name) = self.pick_class_with(&classes, 6)?;
        let target = if elsewhere {
            classes.iter().filter(|o| **o != c).collect::<Vec<_>>().choose(&mut self.rng).map(|s| s.to_string())?
        } else {
            c.clone()
        };
        let len = self.classes[&c].method(&name).body.len();
        let k = self.rng.gen_range(3..=len / 2);
        let start = self.rng.gen_range(0..=len - k);
        let mut new = Method::new(&format!("{}{}", ident(&mut self.rng), self.rng.gen_range(0..100)), Vec::new());
        while self.has_signature(&target, &new) {
            new.name.push('x');
        }
        let call = if elsewhere {
            format!("new {target}().{}();", new.name)
        } else {
            format!("{}();", new.name)
        };
        let host = self.classes.get_mut(&c).unwrap().method_mut(&name);
        new.body = host.body.splice(start..start + k, [call]).collect();
        let host_id = identity(&c, self.classes[&c].method(&name));
        let after = identity(&target, &new);
        let at = self.rng.gen_range(0..=self.classes[&target].methods.len());
        self.classes.get_mut(&target).unwrap().methods.insert(at, new);
        self.touch(&c);
        self.touch(&target);
        Some(RefactoringEvent {
            kind: if elsewhere { RefactoringKind::ExtractAndMove } else { RefactoringKind::ExtractMethod },
            before: None,
            after,
            host: Some(host_id),
        })
    }

    fn inline(&mut self) -> Option<RefactoringEvent> {
        let classes = self.class_names();
        let mut order = classes.clone();
        order.shuffle(&mut self.rng);
        for c in order {
            if self.classes[&c].methods.len() < 2 {
                continue;
            }
            let Some(f) = self.pick_method(&c, 3) else { continue };
            let hosts: Vec<String> = self.classes[&c].methods.iter().filter(|m| m.name != f).map(|m| m.name.clone()).collect();
            let h = hosts.choose(&mut self.rng).unwrap().clone();
            let class = self.classes.get_mut(&c).unwrap();
            let inlined = class.take(&f);
            let before = identity(&c, &inlined);
            let host = class.method_mut(&h);
            let at = self.rng.gen_range(0..=host.body.len());
            host.body.splice(at..at, inlined.body.iter().cloned());
            let host_id = identity(&c, self.classes[&c].method(&h));
            self.touch(&c);
            return Some(RefactoringEvent {
                kind: RefactoringKind::InlineMethod,
                before: Some(before),
                after: host_id.clone(),
                host: Some(host_id),
            });
        }
        None
    }
}
