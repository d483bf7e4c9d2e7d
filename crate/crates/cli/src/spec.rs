//! Problem specification files: `key = value` lines grouped into nested
//! `name { ... }` blocks, `#` comments. See `docs/spec_format.md`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct SpecError {
    pub line: usize,
    pub field: Option<String>,
    pub msg: String,
}

impl SpecError {
    pub fn at(line: usize, msg: impl Into<String>) -> Self {
        SpecError { line, field: None, msg: msg.into() }
    }

    pub fn field(line: usize, field: &str, msg: impl Into<String>) -> Self {
        SpecError { line, field: Some(field.to_string()), msg: msg.into() }
    }
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(name) => write!(f, "line {}: field `{}`: {}", self.line, name, self.msg),
            None => write!(f, "line {}: {}", self.line, self.msg),
        }
    }
}

impl std::error::Error for SpecError {}

pub type SpecResult<T> = std::result::Result<T, SpecError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
    pub blocks: Vec<Block>,
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse(text: &str) -> SpecResult<Block> {
    let mut stack = vec![Block { name: String::new(), line: 0, entries: Vec::new(), blocks: Vec::new() }];
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if body == "}" {
            if stack.len() == 1 {
                return Err(SpecError::at(line, "unmatched `}`"));
            }
            let done = stack.pop().expect("nonempty stack");
            stack.last_mut().expect("root stays").blocks.push(done);
        } else if let Some(name) = body.strip_suffix('{') {
            let name = name.trim();
            if !is_ident(name) {
                return Err(SpecError::at(line, format!("bad block name `{name}`")));
            }
            stack.push(Block { name: name.to_string(), line, entries: Vec::new(), blocks: Vec::new() });
        } else if let Some((key, value)) = body.split_once('=') {
            let key = key.trim();
            if !is_ident(key) {
                return Err(SpecError::at(line, format!("bad key `{key}`")));
            }
            let value = value.trim();
            if value.is_empty() {
                return Err(SpecError::field(line, key, "empty value"));
            }
            stack.last_mut().expect("root stays").entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        } else {
            return Err(SpecError::at(line, "expected `key = value`, `name {` or `}`"));
        }
    }
    if stack.len() > 1 {
        let open = stack.last().expect("nonempty stack");
        return Err(SpecError::at(open.line, format!("block `{}` is never closed", open.name)));
    }
    Ok(stack.pop().expect("root"))
}

fn parse_num(e: &Entry, s: &str) -> SpecResult<f64> {
    let v: f64 = s.trim().parse().map_err(|_| SpecError::field(e.line, &e.key, format!("`{}` is not a number", s.trim())))?;
    if !v.is_finite() {
        return Err(SpecError::field(e.line, &e.key, "value must be finite"));
    }
    Ok(v)
}

impl Block {
    fn label(&self) -> String {
        if self.name.is_empty() {
            "top level".to_string()
        } else {
            format!("block `{}`", self.name)
        }
    }

    /// Reject keys and sub-blocks outside the allowed lists, and repeated
    /// keys other than those in `repeatable`.
    pub fn expect(&self, keys: &[&str], blocks: &[&str], repeatable: &[&str]) -> SpecResult<()> {
        for (i, e) in self.entries.iter().enumerate() {
            if !keys.contains(&e.key.as_str()) {
                return Err(SpecError::field(e.line, &e.key, format!("unknown key in {}", self.label())));
            }
            if !repeatable.contains(&e.key.as_str()) && self.entries[..i].iter().any(|p| p.key == e.key) {
                return Err(SpecError::field(e.line, &e.key, "key given twice"));
            }
        }
        for (i, b) in self.blocks.iter().enumerate() {
            if !blocks.contains(&b.name.as_str()) {
                return Err(SpecError::at(b.line, format!("unknown block `{}` in {}", b.name, self.label())));
            }
            if self.blocks[..i].iter().any(|p| p.name == b.name) {
                return Err(SpecError::at(b.line, format!("block `{}` given twice", b.name)));
            }
        }
        Ok(())
    }

    pub fn entry(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all(&self, key: &str) -> impl Iterator<Item = &Entry> + '_ {
        let key = key.to_string();
        self.entries.iter().filter(move |e| e.key == key)
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn require_block(&self, name: &str) -> SpecResult<&Block> {
        self.block(name)
            .ok_or_else(|| SpecError::at(self.line.max(1), format!("{} needs a `{name} {{ ... }}` block", self.label())))
    }

    pub fn require_str(&self, key: &str) -> SpecResult<&Entry> {
        self.entry(key)
            .ok_or_else(|| SpecError::field(self.line.max(1), key, format!("missing in {}", self.label())))
    }

    pub fn f64(&self, key: &str) -> SpecResult<Option<f64>> {
        self.entry(key).map(|e| parse_num(e, &e.value)).transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> SpecResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn require_f64(&self, key: &str) -> SpecResult<f64> {
        let e = self.require_str(key)?;
        parse_num(e, &e.value)
    }

    pub fn usize(&self, key: &str) -> SpecResult<Option<usize>> {
        self.entry(key)
            .map(|e| {
                e.value
                    .parse::<usize>()
                    .map_err(|_| SpecError::field(e.line, &e.key, format!("`{}` is not a nonnegative integer", e.value)))
            })
            .transpose()
    }

    /// Comma-separated numbers.
    pub fn list(e: &Entry) -> SpecResult<Vec<f64>> {
        e.value.split(',').map(|s| parse_num(e, s)).collect()
    }

    pub fn f64_list(&self, key: &str) -> SpecResult<Option<Vec<f64>>> {
        self.entry(key).map(Block::list).transpose()
    }

    /// Set `path` (`key` or `block.key`, nested blocks joined by dots) to
    /// `value`, adding the entry when it is absent.
    pub fn set(&mut self, path: &str, value: &str) -> Result<(), String> {
        let mut parts: Vec<&str> = path.split('.').collect();
        let key = parts.pop().ok_or("empty parameter path")?;
        let mut node = self;
        for p in parts {
            node = node
                .blocks
                .iter_mut()
                .find(|b| b.name == p)
                .ok_or_else(|| format!("no block `{p}` for parameter `{path}`"))?;
        }
        let line = node.line;
        match node.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value.to_string(),
            None => node.entries.push(Entry { key: key.to_string(), value: value.to_string(), line }),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_blocks_and_comments() {
        let b = parse("application = screening # note\n\ndistribution {\n  kind = uniform\n  inner {\n x = 1\n }\n}\n").unwrap();
        assert_eq!(b.entry("application").unwrap().value, "screening");
        let d = b.block("distribution").unwrap();
        assert_eq!(d.line, 3);
        assert_eq!(d.block("inner").unwrap().f64("x").unwrap(), Some(1.0));
    }

    #[test]
    fn errors_carry_lines() {
        assert_eq!(parse("a = 1\nb {\n").unwrap_err().line, 2);
        assert_eq!(parse("a = 1\n}\n").unwrap_err().line, 2);
        assert_eq!(parse("a = 1\nnonsense\n").unwrap_err().line, 2);
        let b = parse("g {\n n = x\n}\n").unwrap();
        let e = b.block("g").unwrap().f64("n").unwrap_err();
        assert_eq!((e.line, e.field.as_deref()), (2, Some("n")));
    }

    #[test]
    fn set_overrides_and_inserts() {
        let mut b = parse("contest {\n m = 0.1\n}\n").unwrap();
        b.set("contest.m", "0.3").unwrap();
        b.set("contest.extra", "2").unwrap();
        let c = b.block("contest").unwrap();
        assert_eq!(c.f64("m").unwrap(), Some(0.3));
        assert_eq!(c.f64("extra").unwrap(), Some(2.0));
        assert!(b.set("missing.m", "1").is_err());
    }
}
