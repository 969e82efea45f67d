//! Model values and their canonical text encoding.
//!
//! Every state, event payload and action label in the toolkit is a [`Value`].
//! Containers are reference counted so cloning a state is cheap; mutation goes
//! through copy-on-write helpers.
//!
//! The text encoding is canonical: sets and maps are emitted in their `Ord`
//! order and record fields are sorted by name, so two equal values always
//! serialize to the same bytes. The grammar is whitespace free:
//!
//! ```text
//! value  := nil | true | false | int | string
//!         | '[' values ']'            sequence
//!         | '{' values '}'            set
//!         | '<' key ':' value, ... '>' map
//!         | '(' name '=' value, ... ')' record
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use thiserror::Error;

/// Interned-ish field or symbol name. Cloning never allocates.
pub type Name = Arc<str>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Value {
    #[default]
    Nil,
    Bool(bool),
    Int(i64),
    Str(Name),
    Seq(Arc<Vec<Value>>),
    Set(Arc<BTreeSet<Value>>),
    Map(Arc<BTreeMap<Value, Value>>),
    Record(Arc<BTreeMap<Name, Value>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed value at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl Value {
    pub fn str(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }

    pub fn int(i: impl Into<i64>) -> Value {
        Value::Int(i.into())
    }

    pub fn seq(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Seq(Arc::new(items.into_iter().collect()))
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Value {
        Value::Set(Arc::new(items.into_iter().collect()))
    }

    pub fn map(items: impl IntoIterator<Item = (Value, Value)>) -> Value {
        Value::Map(Arc::new(items.into_iter().collect()))
    }

    /// Builds a record from `(field, value)` pairs. Later duplicates win.
    pub fn record<'a>(fields: impl IntoIterator<Item = (&'a str, Value)>) -> Value {
        Value::Record(Arc::new(
            fields.into_iter().map(|(k, v)| (Arc::from(k), v)).collect(),
        ))
    }

    pub fn empty_record() -> Value {
        Value::Record(Arc::default())
    }

    pub fn is_nil(&self) -> bool {
        matches!(self, Value::Nil)
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&[Value]> {
        match self {
            Value::Seq(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_map(&self) -> Option<&BTreeMap<Value, Value>> {
        match self {
            Value::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_record(&self) -> Option<&BTreeMap<Name, Value>> {
        match self {
            Value::Record(r) => Some(r),
            _ => None,
        }
    }

    /// Field lookup on a record; `None` for missing fields and non-records.
    pub fn get(&self, field: &str) -> Option<&Value> {
        self.as_record().and_then(|r| r.get(field))
    }

    /// Returns a copy of this record with `field` set to `value`.
    ///
    /// # Panics
    ///
    /// Panics if `self` is not a record.
    pub fn with(&self, field: &str, value: Value) -> Value {
        let mut out = self.clone();
        out.set_field(field, value);
        out
    }

    /// Sets a record field in place (copy-on-write).
    ///
    /// # Panics
    ///
    /// Panics if `self` is not a record.
    pub fn set_field(&mut self, field: &str, value: Value) {
        match self {
            Value::Record(r) => {
                Arc::make_mut(r).insert(Arc::from(field), value);
            }
            other => panic!("set_field on non-record value {other}"),
        }
    }

    /// Removes a record field in place (copy-on-write). No-op on missing fields.
    pub fn remove_field(&mut self, field: &str) {
        if let Value::Record(r) = self {
            if r.contains_key(field) {
                Arc::make_mut(r).remove(field);
            }
        }
    }

    /// Canonical text encoding.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    pub fn write_canonical(&self, out: &mut String) {
        match self {
            Value::Nil => out.push_str("nil"),
            Value::Bool(true) => out.push_str("true"),
            Value::Bool(false) => out.push_str("false"),
            Value::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Value::Str(s) => write_string(s, out),
            Value::Seq(items) => write_list(out, '[', ']', items.iter()),
            Value::Set(items) => write_list(out, '{', '}', items.iter()),
            Value::Map(entries) => {
                out.push('<');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    k.write_canonical(out);
                    out.push(':');
                    v.write_canonical(out);
                }
                out.push('>');
            }
            Value::Record(fields) => {
                out.push('(');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(k);
                    out.push('=');
                    v.write_canonical(out);
                }
                out.push(')');
            }
        }
    }

    /// Parses a complete canonical encoding (no trailing input allowed).
    pub fn parse(text: &str) -> Result<Value, ParseError> {
        let mut cursor = Cursor::new(text);
        let value = cursor.value()?;
        if !cursor.at_end() {
            return Err(cursor.error("trailing input"));
        }
        Ok(value)
    }
}

fn write_list<'a>(out: &mut String, open: char, close: char, items: impl Iterator<Item = &'a Value>) {
    out.push(open);
    for (i, item) in items.enumerate() {
        if i > 0 {
            out.push(',');
        }
        item.write_canonical(out);
    }
    out.push(close);
}

fn write_string(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            ' ' => out.push_str("\\s"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::str(s)
    }
}

/// Incremental parser over canonical text. Public so that line formats that
/// embed several values (suite files, replay logs) can share it.
pub struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub fn new(text: &'a str) -> Self {
        Cursor { text, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.text.len()
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.text.as_bytes().get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<(), ParseError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{}'", b as char)))
        }
    }

    /// Skips ASCII spaces (token separators in line formats).
    pub fn skip_spaces(&mut self) {
        while self.peek() == Some(b' ') {
            self.pos += 1;
        }
    }

    /// Reads a run of non-space characters.
    pub fn word(&mut self) -> Result<&'a str, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b != b' ') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected token"));
        }
        Ok(&self.text[start..self.pos])
    }

    pub fn unsigned(&mut self) -> Result<u64, ParseError> {
        let start = self.pos;
        let word = self.word()?;
        word.parse().map_err(|_| ParseError {
            offset: start,
            message: format!("expected unsigned integer, found {word:?}"),
        })
    }

    pub fn value(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'[') => {
                self.pos += 1;
                let items = self.items(b']')?;
                Ok(Value::Seq(Arc::new(items)))
            }
            Some(b'{') => {
                self.pos += 1;
                let items = self.items(b'}')?;
                Ok(Value::Set(Arc::new(items.into_iter().collect())))
            }
            Some(b'<') => {
                self.pos += 1;
                let mut entries = BTreeMap::new();
                if self.peek() == Some(b'>') {
                    self.pos += 1;
                    return Ok(Value::Map(Arc::new(entries)));
                }
                loop {
                    let k = self.value()?;
                    self.expect(b':')?;
                    let v = self.value()?;
                    entries.insert(k, v);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b'>') => {
                            self.pos += 1;
                            return Ok(Value::Map(Arc::new(entries)));
                        }
                        _ => return Err(self.error("expected ',' or '>'")),
                    }
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let mut fields = BTreeMap::new();
                if self.peek() == Some(b')') {
                    self.pos += 1;
                    return Ok(Value::Record(Arc::new(fields)));
                }
                loop {
                    let name = self.name()?;
                    self.expect(b'=')?;
                    let v = self.value()?;
                    fields.insert(Arc::from(name), v);
                    match self.peek() {
                        Some(b',') => self.pos += 1,
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Value::Record(Arc::new(fields)));
                        }
                        _ => return Err(self.error("expected ',' or ')'")),
                    }
                }
            }
            Some(b'"') => self.string(),
            Some(b'-' | b'0'..=b'9') => self.integer(),
            Some(_) => {
                let name = self.name()?;
                match name {
                    "nil" => Ok(Value::Nil),
                    "true" => Ok(Value::Bool(true)),
                    "false" => Ok(Value::Bool(false)),
                    other => Err(self.error(format!("unknown literal {other:?}"))),
                }
            }
        }
    }

    fn items(&mut self, close: u8) -> Result<Vec<Value>, ParseError> {
        let mut items = Vec::new();
        if self.peek() == Some(close) {
            self.pos += 1;
            return Ok(items);
        }
        loop {
            items.push(self.value()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b) if b == close => {
                    self.pos += 1;
                    return Ok(items);
                }
                _ => return Err(self.error(format!("expected ',' or '{}'", close as char))),
            }
        }
    }

    fn name(&mut self) -> Result<&'a str, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        if start == self.pos || self.text.as_bytes()[start].is_ascii_digit() {
            self.pos = start;
            return Err(self.error("expected identifier"));
        }
        Ok(&self.text[start..self.pos])
    }

    fn integer(&mut self) -> Result<Value, ParseError> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        self.text[start..self.pos]
            .parse()
            .map(Value::Int)
            .map_err(|_| ParseError {
                offset: start,
                message: "malformed integer".into(),
            })
    }

    fn string(&mut self) -> Result<Value, ParseError> {
        self.expect(b'"')?;
        let mut out = String::new();
        let rest = &self.text[self.pos..];
        let mut chars = rest.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(Value::Str(Arc::from(out)));
                }
                '\\' => {
                    let (_, esc) = chars.next().ok_or_else(|| self.error("dangling escape"))?;
                    match esc {
                        '"' => out.push('"'),
                        '\\' => out.push('\\'),
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        's' => out.push(' '),
                        'u' => {
                            let mut hex = String::new();
                            match chars.next() {
                                Some((_, '{')) => {}
                                _ => return Err(self.error("expected '{' after \\u")),
                            }
                            loop {
                                match chars.next() {
                                    Some((_, '}')) => break,
                                    Some((_, h)) => hex.push(h),
                                    None => return Err(self.error("unterminated \\u escape")),
                                }
                            }
                            let c = u32::from_str_radix(&hex, 16)
                                .ok()
                                .and_then(char::from_u32)
                                .ok_or_else(|| self.error("invalid \\u escape"))?;
                            out.push(c);
                        }
                        other => return Err(self.error(format!("unknown escape \\{other}"))),
                    }
                }
                ' ' => return Err(self.error("raw space inside string")),
                c => out.push(c),
            }
        }
        Err(self.error("unterminated string"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn set_members_are_sorted_regardless_of_insertion_order() {
        let a = Value::set([Value::int(3), Value::int(1), Value::int(2)]);
        let b = Value::set([Value::int(2), Value::int(3), Value::int(1)]);
        assert_eq!(a.to_canonical(), "{1,2,3}");
        assert_eq!(a.to_canonical(), b.to_canonical());
    }

    #[test]
    fn record_fields_sorted_by_name() {
        let r = Value::record([("z", Value::int(1)), ("a", Value::Nil)]);
        assert_eq!(r.to_canonical(), "(a=nil,z=1)");
    }

    #[test]
    fn strings_never_contain_raw_spaces() {
        let v = Value::str("a b\"c\\");
        let text = v.to_canonical();
        assert!(!text.contains(' '));
        assert_eq!(Value::parse(&text).unwrap(), v);
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(Value::parse("(a=1)x").is_err());
        assert!(Value::parse("").is_err());
        assert!(Value::parse("[1,").is_err());
        assert!(Value::parse("maybe").is_err());
    }

    #[test]
    fn with_does_not_mutate_original() {
        let r = Value::record([("n", Value::int(1))]);
        let r2 = r.with("n", Value::int(2));
        assert_eq!(r.get("n"), Some(&Value::int(1)));
        assert_eq!(r2.get("n"), Some(&Value::int(2)));
    }

    fn arb_value() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            Just(Value::Nil),
            any::<bool>().prop_map(Value::Bool),
            any::<i64>().prop_map(Value::Int),
            "[ -~\\n\\t]{0,8}".prop_map(|s| Value::str(&s)),
        ];
        leaf.prop_recursive(4, 32, 6, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..5).prop_map(Value::seq),
                prop::collection::vec(inner.clone(), 0..5).prop_map(Value::set),
                prop::collection::vec((inner.clone(), inner.clone()), 0..4).prop_map(Value::map),
                prop::collection::vec(("[a-z][a-z0-9_]{0,4}", inner), 0..4).prop_map(|fields| {
                    Value::Record(Arc::new(
                        fields.into_iter().map(|(k, v)| (Arc::from(k.as_str()), v)).collect(),
                    ))
                }),
            ]
        })
    }

    proptest! {
        #[test]
        fn canonical_text_round_trips(v in arb_value()) {
            let text = v.to_canonical();
            prop_assert!(!text.contains(' '));
            let back = Value::parse(&text).unwrap();
            prop_assert_eq!(back.to_canonical(), text);
            prop_assert_eq!(back, v);
        }
    }
}
