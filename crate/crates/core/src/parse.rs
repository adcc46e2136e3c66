//! Text forms for groups and elements.
//!
//! Group descriptors:
//!
//! ```text
//! free(2)   trivial   cyclic(6)   finite(path/to/table.csv)
//! product(free(2), free(2))   scaled(free(2), 3/2)
//! ```
//!
//! Elements: free words such as `ab^-1a`, `a^3` or `e`; finite indices such
//! as `#3`; product pairs such as `(ab, b^-1)`.

use std::path::Path;

use num_rational::Ratio;

use crate::element::{Element, Word};
use crate::error::{Error, Result};
use crate::group::{FiniteTable, MetricGroup};

/// Splits on commas that are not nested in parentheses.
pub fn split_top_level(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(text[start..].trim());
    out
}

fn call(text: &str) -> Option<(&str, &str)> {
    let t = text.trim();
    let open = t.find('(')?;
    t.ends_with(')').then(|| (t[..open].trim(), &t[open + 1..t.len() - 1]))
}

pub fn parse_group(text: &str) -> Result<MetricGroup> {
    let t = text.trim();
    if t == "trivial" {
        return Ok(MetricGroup::trivial());
    }
    let (name, args) = call(t).ok_or_else(|| Error::Parse(format!("malformed group descriptor `{t}`")))?;
    let args = split_top_level(args);
    let arity = |k: usize| {
        if args.len() == k {
            Ok(())
        } else {
            Err(Error::Parse(format!("`{name}` takes {k} argument(s), got {}", args.len())))
        }
    };
    match name {
        "free" => {
            arity(1)?;
            let rank = args[0].parse().map_err(|_| Error::Parse(format!("bad rank `{}`", args[0])))?;
            MetricGroup::free(rank)
        }
        "cyclic" => {
            arity(1)?;
            let n = args[0].parse().map_err(|_| Error::Parse(format!("bad order `{}`", args[0])))?;
            Ok(MetricGroup::finite(FiniteTable::cyclic(n)?))
        }
        "finite" => {
            arity(1)?;
            Ok(MetricGroup::finite(load_table(Path::new(args[0]))?))
        }
        "product" => {
            arity(2)?;
            Ok(MetricGroup::product(parse_group(args[0])?, parse_group(args[1])?))
        }
        "scaled" => {
            arity(2)?;
            let base = parse_group(args[0])?;
            let factor = parse_factor(args[1])?;
            MetricGroup::scaled(base, factor)
        }
        other => Err(Error::Parse(format!("unknown group family `{other}`"))),
    }
}

fn parse_factor(text: &str) -> Result<Ratio<u64>> {
    let t = text.trim();
    if t.starts_with('-') {
        return Err(Error::Invalid(format!("scale factor α must be positive (α ≤ 0 given: {t})")));
    }
    let r = crate::scalar::parse_rational(t).ok_or_else(|| Error::Parse(format!("bad scale factor `{t}`")))?;
    let (n, d) = (r.numer().to_string(), r.denom().to_string());
    let n: u64 = n.parse().map_err(|_| Error::Parse(format!("scale factor `{t}` out of range")))?;
    let d: u64 = d.parse().map_err(|_| Error::Parse(format!("scale factor `{t}` out of range")))?;
    if n == 0 {
        return Err(Error::Invalid("scale factor α must be positive (α ≤ 0 given)".into()));
    }
    Ok(Ratio::new(n, d))
}

/// Loads a `|Γ|×|Γ|` index table. The header row lists the generator
/// indices; each following row is one row of the multiplication table.
pub fn load_table(path: &Path) -> Result<FiniteTable> {
    let io = |source| Error::Io { path: path.display().to_string(), source };
    let text = std::fs::read_to_string(path).map_err(io)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let parse_idx = |s: &str| s.parse::<u32>().map_err(|_| Error::Parse(format!("bad table entry `{s}`")));
    let generators = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .filter(|s| !s.is_empty())
        .map(parse_idx)
        .collect::<Result<Vec<u32>>>()?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        rows.push(rec.iter().map(parse_idx).collect::<Result<Vec<u32>>>()?);
    }
    FiniteTable::new(rows, &generators, format!("finite({})", path.display()))
}

fn parse_word(text: &str) -> Result<Word> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() || t == "e" {
        return Ok(Word::identity());
    }
    let chars: Vec<char> = t.chars().collect();
    let mut letters = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if !c.is_ascii_alphabetic() {
            return Err(Error::Parse(format!("unexpected `{c}` in word `{text}`")));
        }
        let (base, mut sign) = if c.is_ascii_lowercase() {
            ((c as u8 - b'a' + 1) as i8, 1i64)
        } else {
            ((c as u8 - b'A' + 1) as i8, -1i64)
        };
        i += 1;
        let mut power = 1i64;
        if i < chars.len() && chars[i] == '^' {
            let start = i + 1;
            let mut end = start;
            if end < chars.len() && chars[end] == '-' {
                end += 1;
            }
            while end < chars.len() && chars[end].is_ascii_digit() {
                end += 1;
            }
            let exp: String = chars[start..end].iter().collect();
            power = exp.parse().map_err(|_| Error::Parse(format!("bad exponent in `{text}`")))?;
            i = end;
        }
        if power < 0 {
            sign = -sign;
            power = -power;
        }
        for _ in 0..power {
            letters.push(base * sign as i8);
        }
    }
    Ok(Word::from_letters(letters))
}

/// Parses an element of `group` and checks membership.
pub fn parse_element(group: &MetricGroup, text: &str) -> Result<Element> {
    let t = text.trim();
    let g = if let Some((l, r)) = group.factors() {
        let inner = t
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| Error::Parse(format!("expected a pair `(x,y)`, got `{t}`")))?;
        let parts = split_top_level(inner);
        if parts.len() != 2 {
            return Err(Error::Parse(format!("expected two components in `{t}`")));
        }
        Element::pair(parse_element(l, parts[0])?, parse_element(r, parts[1])?)
    } else if let Element::Finite(_) = group.identity() {
        let digits = t.trim_start_matches('#');
        if t == "e" {
            group.identity()
        } else {
            Element::Finite(digits.parse().map_err(|_| Error::Parse(format!("bad finite element `{t}`")))?)
        }
    } else {
        Element::Free(parse_word(t)?)
    };
    if !group.contains(&g) {
        return Err(Error::Mismatch { element: g.to_string(), group: group.to_string() });
    }
    Ok(g)
}

/// Parses a comma-separated element list such as `e,a,b,a^-1,b^-1`.
pub fn parse_elements(group: &MetricGroup, text: &str) -> Result<Vec<Element>> {
    split_top_level(text).into_iter().filter(|s| !s.is_empty()).map(|s| parse_element(group, s)).collect()
}
