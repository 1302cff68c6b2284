//! Tiny Java source builder for fixtures.

use rand::rngs::StdRng;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    /// (type, name)
    pub params: Vec<(String, String)>,
    pub body: Vec<String>,
}

impl Method {
    pub fn new(name: &str, body: Vec<String>) -> Self {
        Method {
            name: name.to_owned(),
            params: Vec::new(),
            body,
        }
    }

    pub fn param(mut self, ty: &str, name: &str) -> Self {
        self.params.push((ty.to_owned(), name.to_owned()));
        self
    }

    /// Erased parameter types as the parser reports them.
    pub fn param_types(&self) -> Vec<String> {
        self.params
            .iter()
            .map(|(t, _)| match t.find('<') {
                Some(i) => t[..i].to_owned(),
                None => t.clone(),
            })
            .collect()
    }

    pub fn render(&self, indent: &str) -> String {
        let params: Vec<String> = self.params.iter().map(|(t, n)| format!("{t} {n}")).collect();
        let mut s = format!("{indent}public void {}({}) {{\n", self.name, params.join(", "));
        for stmt in &self.body {
            s.push_str(&format!("{indent}    {stmt}\n"));
        }
        s.push_str(&format!("{indent}}}\n"));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Class {
    pub name: String,
    pub extends: Option<String>,
    pub methods: Vec<Method>,
}

impl Class {
    pub fn new(name: &str) -> Self {
        Class {
            name: name.to_owned(),
            extends: None,
            methods: Vec::new(),
        }
    }

    pub fn extends(mut self, parent: &str) -> Self {
        self.extends = Some(parent.to_owned());
        self
    }

    pub fn with(mut self, m: Method) -> Self {
        self.methods.push(m);
        self
    }

    pub fn method(&self, name: &str) -> &Method {
        self.methods.iter().find(|m| m.name == name).expect("method exists")
    }

    pub fn method_mut(&mut self, name: &str) -> &mut Method {
        self.methods.iter_mut().find(|m| m.name == name).expect("method exists")
    }

    pub fn take(&mut self, name: &str) -> Method {
        let i = self.methods.iter().position(|m| m.name == name).expect("method exists");
        self.methods.remove(i)
    }

    pub fn render(&self) -> String {
        let ext = self.extends.as_ref().map(|p| format!(" extends {p}")).unwrap_or_default();
        let mut s = format!("package demo;\n\nimport java.util.List;\n\npublic class {}{ext} {{\n", self.name);
        for (i, m) in self.methods.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            s.push_str(&m.render("    "));
        }
        s.push_str("}\n");
        s
    }
}

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "vu", "ze", "bo", "da", "fi", "gu", "he", "jo",
    "ki", "ma", "no", "pu", "ri", "sa", "te", "wi",
];

/// A fresh identifier, unlikely to repeat.
pub fn ident(rng: &mut StdRng) -> String {
    let n = rng.gen_range(3..5);
    let mut s: String = (0..n).map(|_| SYLLABLES[rng.gen_range(0..SYLLABLES.len())]).collect();
    s.push_str(&rng.gen_range(0..1000).to_string());
    s
}

/// One random statement.
pub fn statement(rng: &mut StdRng) -> String {
    let (v, a, f) = (ident(rng), ident(rng), ident(rng));
    let k = rng.gen_range(0..10_000);
    match rng.gen_range(0..7) {
        0 => format!("int {v} = {f}({a}, {k});"),
        1 => format!("if ({a} > {k}) {{ {f}({v}); }}"),
        2 => format!("String {v} = \"{f}\" + {a};"),
        3 => format!("for (int i = 0; i < {k}; i++) {{ {a} += {f}(i); }}"),
        4 => format!("{v}.{f}({a});"),
        5 => format!("long {v} = {a} * {k} - {f};"),
        _ => format!("while ({a} < {k}) {{ {a}++; }}"),
    }
}

pub fn body(rng: &mut StdRng, n: usize) -> Vec<String> {
    (0..n).map(|_| statement(rng)).collect()
}
