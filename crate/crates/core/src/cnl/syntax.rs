//! Surface syntax of the refinement language.
//!
//! ```text
//! refinement := "before" date | "after" date | "between" date "and" date
//!             | "within" count unit "of" phrase | "if" phrase
//! date       := month day "," year | "[" NAME "]"
//! count      := [1-9][0-9]*
//! unit       := "day" | "days" | "week" | "weeks" | "month" | "months"
//! phrase     := party gerund [ target ]
//! ```

use crate::diagnostic::{codes, Diagnostic, Position, Span};
use crate::lang::TimeUnit;
use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use std::fmt;

pub const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];

pub const KEYWORDS: [&str; 7] = ["before", "after", "between", "within", "if", "of", "and"];

/// Top-level forms, with the template shown to users.
pub const FORMS: [(&str, &str); 5] = [
    ("before", "before [DATE]"),
    ("after", "after [DATE]"),
    ("between", "between [DATE] and [DATE]"),
    ("within", "within [N] [UNIT] of [EVENT]"),
    ("if", "if [EVENT]"),
];

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateRef {
    Date(NaiveDate),
    Placeholder(String),
}

impl DateRef {
    fn surface(&self, template: bool) -> String {
        match self {
            DateRef::Date(d) => format!("{} {}, {}", MONTHS[d.month0() as usize], d.day(), d.year()),
            DateRef::Placeholder(n) if template => format!("<{n}>"),
            DateRef::Placeholder(n) => format!("[{n}]"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventPhrase {
    pub subject: String,
    /// As written, e.g. `paying`.
    pub verb: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
}

impl fmt::Display for EventPhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.subject, self.verb)?;
        if let Some(o) = &self.object {
            write!(f, " {o}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum CnlForm {
    Before { date: DateRef },
    After { date: DateRef },
    Between { start: DateRef, end: DateRef },
    Within { magnitude: u32, unit: TimeUnit, phrase: EventPhrase },
    If { phrase: EventPhrase },
}

impl CnlForm {
    pub fn is_temporal(&self) -> bool {
        !matches!(self, CnlForm::If { .. })
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            CnlForm::Before { .. } => "before",
            CnlForm::After { .. } => "after",
            CnlForm::Between { .. } => "between",
            CnlForm::Within { .. } => "within",
            CnlForm::If { .. } => "if",
        }
    }

    /// Canonical surface text. With `template` set, date placeholders are
    /// written as template parameters (`<NAME>`).
    pub fn surface(&self, template: bool) -> String {
        match self {
            CnlForm::Before { date } => format!("before {}", date.surface(template)),
            CnlForm::After { date } => format!("after {}", date.surface(template)),
            CnlForm::Between { start, end } => format!(
                "between {} and {}",
                start.surface(template),
                end.surface(template)
            ),
            CnlForm::Within { magnitude, unit, phrase } => {
                format!("within {magnitude} {} of {phrase}", unit.label(*magnitude))
            }
            CnlForm::If { phrase } => format!("if {phrase}"),
        }
    }
}

impl fmt::Display for CnlForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface(false))
    }
}

#[derive(Clone, Copy, Debug)]
struct Tok<'a> {
    text: &'a str,
    col: u32,
}

fn tokenize(text: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let col_of = |byte: usize| text[..byte].chars().count() as u32 + 1;
    let mut cols = Vec::new();
    for (i, c) in text.char_indices() {
        if c.is_whitespace() || c == ',' {
            if let Some(s) = start.take() {
                cols.push((s, i));
            }
            if c == ',' {
                cols.push((i, i + 1));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        cols.push((s, text.len()));
    }
    for (s, e) in cols {
        out.push(Tok {
            text: &text[s..e],
            col: col_of(s),
        });
    }
    out
}

fn is_name(w: &str) -> bool {
    let mut cs = w.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !KEYWORDS.contains(&w)
}

fn is_gerund(w: &str) -> bool {
    w.len() > 3 && w.ends_with("ing") && w.chars().all(|c| c.is_ascii_lowercase())
}

fn nearest_form(first: &str) -> &'static str {
    let first = first.to_ascii_lowercase();
    FORMS
        .iter()
        .min_by_key(|(k, _)| strsim::levenshtein(&first, k))
        .map(|(_, t)| *t)
        .unwrap_or(FORMS[0].1)
}

struct Parser<'a> {
    text: &'a str,
    toks: Vec<Tok<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Tok<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn fail(&self, expected: &str) -> Diagnostic {
        let first = self.toks.first().map_or("", |t| t.text);
        let (found, col) = match self.peek() {
            Some(t) => (format!("`{}`", t.text), t.col),
            None => (
                "end of text".to_owned(),
                self.text.chars().count() as u32 + 1,
            ),
        };
        let at = Position::new(1, col);
        Diagnostic::error(
            codes::NOT_IN_CNL,
            Span::new(at, at),
            format!(
                "`{}` is not in the refinement language: expected {expected}, found {found}; \
                 did you mean `{}`?",
                self.text.trim(),
                nearest_form(first)
            ),
        )
    }

    fn next_if(&mut self, pred: impl Fn(&str) -> bool) -> Option<Tok<'a>> {
        let t = self.peek().filter(|t| pred(t.text))?;
        self.pos += 1;
        Some(t)
    }

    fn word(&mut self, w: &str) -> Result<(), Diagnostic> {
        self.next_if(|t| t == w)
            .map(|_| ())
            .ok_or_else(|| self.fail(&format!("`{w}`")))
    }

    fn date(&mut self) -> Result<DateRef, Diagnostic> {
        if let Some(t) = self.next_if(|t| t.starts_with('[')) {
            let inner = t.text.strip_prefix('[').and_then(|s| s.strip_suffix(']'));
            return match inner {
                Some(n) if is_name(n) => Ok(DateRef::Placeholder(n.to_owned())),
                _ => {
                    self.pos -= 1;
                    Err(self.fail("a date placeholder such as `[START_DATE]`"))
                }
            };
        }
        let month = self
            .next_if(|t| MONTHS.contains(&t))
            .ok_or_else(|| self.fail("a date such as `March 31, 2024`"))?;
        let day = self
            .next_if(|t| (1..=2).contains(&t.len()) && t.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| self.fail("a day of the month"))?;
        self.word(",")?;
        let year = self
            .next_if(|t| t.len() == 4 && t.bytes().all(|b| b.is_ascii_digit()))
            .ok_or_else(|| self.fail("a four-digit year"))?;
        let m = MONTHS.iter().position(|m| *m == month.text).unwrap() as u32 + 1;
        let d: u32 = day.text.parse().unwrap();
        let y: i32 = year.text.parse().unwrap();
        NaiveDate::from_ymd_opt(y, m, d).map(DateRef::Date).ok_or_else(|| {
            self.pos -= 3;
            self.fail("a calendar date")
        })
    }

    fn phrase(&mut self) -> Result<EventPhrase, Diagnostic> {
        let subject = self
            .next_if(|t| is_name(t) && !is_gerund(t))
            .ok_or_else(|| self.fail("a party name"))?;
        let verb = self
            .next_if(is_gerund)
            .ok_or_else(|| self.fail("a verb ending in -ing"))?;
        let object = self.next_if(is_name).map(|t| t.text.to_owned());
        Ok(EventPhrase {
            subject: subject.text.to_owned(),
            verb: verb.text.to_owned(),
            object,
        })
    }

    fn form(&mut self) -> Result<CnlForm, Diagnostic> {
        let Some(head) = self.next_if(|t| FORMS.iter().any(|(k, _)| *k == t)) else {
            return Err(self.fail("one of `before`, `after`, `between`, `within`, `if`"));
        };
        let form = match head.text {
            "before" => CnlForm::Before { date: self.date()? },
            "after" => CnlForm::After { date: self.date()? },
            "between" => {
                let mark = self.pos;
                let start = self.date()?;
                self.word("and")?;
                let end = self.date()?;
                if let (DateRef::Date(a), DateRef::Date(b)) = (&start, &end) {
                    if a > b {
                        self.pos = mark;
                        return Err(self.fail("a start date no later than the end date"));
                    }
                }
                CnlForm::Between { start, end }
            }
            "within" => {
                let magnitude = self
                    .next_if(|t| {
                        t.bytes().all(|b| b.is_ascii_digit())
                            && !t.starts_with('0')
                            && t.parse::<u32>().is_ok()
                    })
                    .ok_or_else(|| self.fail("a positive whole number"))?
                    .text
                    .parse()
                    .unwrap();
                let unit = self
                    .next_if(|t| TimeUnit::parse(t).is_some())
                    .ok_or_else(|| self.fail("`days`, `weeks` or `months`"))?;
                self.word("of")?;
                CnlForm::Within {
                    magnitude,
                    unit: TimeUnit::parse(unit.text).unwrap(),
                    phrase: self.phrase()?,
                }
            }
            _ => CnlForm::If { phrase: self.phrase()? },
        };
        if self.peek().is_some() {
            return Err(self.fail("end of text"));
        }
        Ok(form)
    }
}

/// Parses one refinement. Anything outside the grammar is E602.
pub fn parse(text: &str) -> Result<CnlForm, Diagnostic> {
    let mut p = Parser {
        text,
        toks: tokenize(text),
        pos: 0,
    };
    p.form()
}

/// Splits `P2: before March 31, 2024` into slot and refinement text.
pub fn split_directive(line: &str) -> Option<(&str, &str)> {
    let (slot, rest) = line.split_once(':')?;
    let slot = slot.trim();
    (!slot.is_empty() && !slot.contains(char::is_whitespace)).then_some((slot, rest.trim()))
}

/// Stems a gerund against a verb lexicon: strip `-ing`, undo consonant
/// doubling, or restore a dropped `e`.
pub fn stem<'l>(gerund: &str, lexicon: &'l [String]) -> Option<&'l str> {
    let base = gerund.strip_suffix("ing")?;
    let mut candidates = vec![base.to_owned()];
    let b = base.as_bytes();
    if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] {
        candidates.push(base[..base.len() - 1].to_owned());
    }
    candidates.push(format!("{base}e"));
    if let Some(s) = base.strip_suffix('y') {
        candidates.push(format!("{s}ie"));
    }
    candidates
        .iter()
        .find_map(|c| lexicon.iter().find(|v| *v == c).map(String::as_str))
}

/// Present participle of a verb stem.
pub fn gerund(stem: &str) -> String {
    let vowel = |c: u8| b"aeiou".contains(&c);
    let b = stem.as_bytes();
    let n = b.len();
    if let Some(s) = stem.strip_suffix("ie") {
        return format!("{s}ying");
    }
    if n > 2 && stem.ends_with('e') && !stem.ends_with("ee") {
        return format!("{}ing", &stem[..n - 1]);
    }
    let cvc = n >= 3
        && n <= 4
        && !vowel(b[n - 1])
        && !b"wxy".contains(&b[n - 1])
        && vowel(b[n - 2])
        && !vowel(b[n - 3]);
    if cvc {
        format!("{stem}{}ing", b[n - 1] as char)
    } else {
        format!("{stem}ing")
    }
}
