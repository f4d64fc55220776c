//! Recursive-descent parser for the contract dialect.
//!
//! The parser is total: every input yields a diagnostic list, and a spec is
//! returned only when no syntax error was found. After an error inside a
//! statement the parser skips to the next `;` or section keyword so that one
//! run can report several independent mistakes.

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use crate::diagnostic::{codes, Diagnostic, Span};

/// Words that can never be used as identifiers.
pub const RESERVED: &[&str] = &[
    "Domain",
    "endDomain",
    "Contract",
    "endContract",
    "Declarations",
    "endDeclarations",
    "Obligations",
    "endObligations",
    "Powers",
    "endPowers",
    "Constraints",
    "endConstraints",
    "isA",
    "with",
    "and",
    "or",
    "not",
    "true",
    "false",
    "Obligation",
    "Power",
    "Happens",
    "HappensBefore",
    "HappensAfter",
    "HappensWithin",
    "Violated",
    "Fulfilled",
    "Interval",
    "RelativeTo",
    "Suspend",
    "Resume",
    "Terminate",
    "Impose",
    "Precedes",
    "Role",
    "Asset",
    "Event",
    "Date",
    "Party",
    "Number",
    "Money",
    "Percentage",
    "String",
];

const SECTION_KEYWORDS: &[&str] = &[
    "Domain",
    "endDomain",
    "Contract",
    "endContract",
    "Declarations",
    "endDeclarations",
    "Obligations",
    "endObligations",
    "Powers",
    "endPowers",
    "Constraints",
    "endConstraints",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Parses `source` into a spec. The spec is `None` whenever a syntax error
/// was reported.
pub fn parse(source: &str) -> (Option<SymboleoSpec>, Vec<Diagnostic>) {
    let mut p = Parser {
        tokens: lex(source),
        pos: 0,
        diags: Vec::new(),
    };
    let spec = p.file();
    let mut diags = p.diags;
    crate::diagnostic::sort(&mut diags);
    if diags.iter().any(Diagnostic::is_error) {
        (None, diags)
    } else {
        (spec, diags)
    }
}

/// Marker for "an error was already reported; recover".
struct Reported;

type PResult<T> = Result<T, Reported>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, n: usize) -> &Token {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn is_word(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s == word)
    }

    fn at_section_keyword(&self) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if SECTION_KEYWORDS.contains(&s.as_str()))
            || self.peek().kind == TokenKind::Eof
    }

    fn error_here(&mut self, expected: &str) -> Reported {
        let tok = self.peek().clone();
        let msg = match &tok.kind {
            TokenKind::Error(m) => m.clone(),
            other => format!("expected {expected}, found {}", other.describe()),
        };
        // one syntax error per token; later ones are cascades
        let repeat = self
            .diags
            .last()
            .is_some_and(|d| d.code == codes::SYNTAX && d.range.start == tok.span.start);
        if !repeat {
            self.diags
                .push(Diagnostic::error(codes::SYNTAX, tok.span, msg));
        }
        Reported
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Span> {
        if self.peek().kind == kind {
            Ok(self.bump().span)
        } else {
            Err(self.error_here(what))
        }
    }

    fn expect_word(&mut self, word: &str) -> PResult<Span> {
        if self.is_word(word) {
            Ok(self.bump().span)
        } else {
            Err(self.error_here(&format!("`{word}`")))
        }
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Ident> {
        match &self.peek().kind {
            TokenKind::Ident(s) if !is_reserved(s) => {
                let t = self.bump();
                let TokenKind::Ident(name) = t.kind else { unreachable!() };
                Ok(Ident::spanned(name, t.span))
            }
            _ => Err(self.error_here(what)),
        }
    }

    /// Any word, reserved or not (for type positions).
    fn word(&mut self, what: &str) -> PResult<Ident> {
        match &self.peek().kind {
            TokenKind::Ident(_) => {
                let t = self.bump();
                let TokenKind::Ident(name) = t.kind else { unreachable!() };
                Ok(Ident::spanned(name, t.span))
            }
            _ => Err(self.error_here(what)),
        }
    }

    /// Skips to just after the next `;`, or to the next section keyword.
    fn recover(&mut self) {
        loop {
            if self.at_section_keyword() {
                return;
            }
            if self.bump().kind == TokenKind::Semi {
                return;
            }
        }
    }

    fn file(&mut self) -> Option<SymboleoSpec> {
        let mut spec = SymboleoSpec::default();
        let mut ok = true;

        if self.expect_word("Domain").is_err() {
            ok = false;
            self.recover();
        }
        self.section("endDomain", |p| {
            let d = p.domain_decl()?;
            spec.domain.push(d);
            Ok(())
        });

        match self.contract_header() {
            Ok((name, params)) => {
                spec.name = name;
                spec.parameters = params;
            }
            Err(Reported) => {
                ok = false;
                // skip to Declarations
                while !self.at_section_keyword() {
                    self.bump();
                }
            }
        }

        if self.expect_word("Declarations").is_err() {
            ok = false;
            self.recover();
        }
        self.section("endDeclarations", |p| {
            let b = p.binding()?;
            spec.bindings.push(b);
            Ok(())
        });

        if self.expect_word("Obligations").is_err() {
            ok = false;
            self.recover();
        }
        self.section("endObligations", |p| {
            let o = p.obligation_stmt()?;
            spec.obligations.push(o);
            Ok(())
        });

        if self.expect_word("Powers").is_err() {
            ok = false;
            self.recover();
        }
        self.section("endPowers", |p| {
            let pw = p.power_stmt()?;
            spec.powers.push(pw);
            Ok(())
        });

        if self.is_word("Constraints") {
            self.bump();
            self.section("endConstraints", |p| {
                let c = p.constraint_stmt()?;
                spec.constraints.push(c);
                Ok(())
            });
        }

        if self.expect_word("endContract").is_err() {
            ok = false;
        } else if self.peek().kind != TokenKind::Eof {
            self.error_here("end of input");
            ok = false;
        }
        ok.then_some(spec)
    }

    /// Parses statements until `end` (consumed). Stops at any other section
    /// keyword, reporting the missing terminator.
    fn section(&mut self, end: &str, mut stmt: impl FnMut(&mut Self) -> PResult<()>) {
        loop {
            if self.is_word(end) {
                self.bump();
                return;
            }
            if self.at_section_keyword() {
                self.error_here(&format!("`{end}`"));
                return;
            }
            let before = self.pos;
            if stmt(self).is_err() {
                self.recover();
                if self.pos == before {
                    self.bump();
                }
            }
        }
    }

    fn domain_decl(&mut self) -> PResult<DomainDecl> {
        let name = self.ident("a domain type name")?;
        self.expect_word("isA")?;
        let cat_word = self.word("`Role`, `Asset` or `Event`")?;
        let Some(category) = Category::from_keyword(cat_word.as_str()) else {
            self.diags.push(Diagnostic::error(
                codes::SYNTAX,
                cat_word.span,
                format!("expected `Role`, `Asset` or `Event`, found `{}`", cat_word.name),
            ));
            return Err(Reported);
        };
        let mut attributes = Vec::new();
        if self.is_word("with") {
            self.bump();
            loop {
                let attr = self.ident("an attribute name")?;
                self.expect(TokenKind::Colon, "`:`")?;
                let kw = self.word("`Number`, `Date` or `String`")?;
                let Some(kind) = AttrKind::from_keyword(kw.as_str()) else {
                    self.diags.push(Diagnostic::error(
                        codes::SYNTAX,
                        kw.span,
                        format!("expected `Number`, `Date` or `String`, found `{}`", kw.name),
                    ));
                    return Err(Reported);
                };
                attributes.push(Attribute { name: attr, kind });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let end = self.expect(TokenKind::Semi, "`;`")?;
        Ok(DomainDecl {
            span: name.span.to(end),
            name,
            category,
            attributes,
        })
    }

    fn contract_header(&mut self) -> PResult<(Ident, Vec<Parameter>)> {
        self.expect_word("Contract")?;
        let name = self.ident("a contract name")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.eat(&TokenKind::RParen) {
            loop {
                let pname = self.ident("a parameter name")?;
                self.expect(TokenKind::Colon, "`:`")?;
                let ty_word = self.word("a parameter type")?;
                let ty = match ParamKind::from_keyword(ty_word.as_str()) {
                    Some(k) => ParamType::Kind(k),
                    None if is_reserved(ty_word.as_str()) => {
                        self.diags.push(Diagnostic::error(
                            codes::SYNTAX,
                            ty_word.span,
                            format!("`{}` is not a parameter type", ty_word.name),
                        ));
                        return Err(Reported);
                    }
                    None => ParamType::Role(ty_word.clone()),
                };
                params.push(Parameter {
                    span: pname.span.to(ty_word.span),
                    name: pname,
                    ty,
                });
                if self.eat(&TokenKind::RParen) {
                    break;
                }
                self.expect(TokenKind::Comma, "`,` or `)`")?;
            }
        }
        Ok((name, params))
    }

    fn binding(&mut self) -> PResult<Binding> {
        let name = self.ident("a binding name")?;
        self.expect(TokenKind::Colon, "`:`")?;
        let ty = self.ident("a domain type name")?;
        let mut signature = None;
        if self.eat(&TokenKind::LParen) {
            let subject = self.ident("a party")?;
            self.expect(TokenKind::Comma, "`,`")?;
            let verb = self.ident("a verb")?;
            let object = if self.eat(&TokenKind::Comma) {
                Some(self.ident("a party or asset")?)
            } else {
                None
            };
            self.expect(TokenKind::RParen, "`)`")?;
            signature = Some(EventSignature {
                subject,
                verb,
                object,
            });
        }
        let mut assignments = Vec::new();
        if self.is_word("with") {
            self.bump();
            loop {
                let attr = self.ident("an attribute name")?;
                self.expect(TokenKind::Assign, "`:=`")?;
                let value = self.expr()?;
                assignments.push(Assignment { attr, value });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let end = self.expect(TokenKind::Semi, "`;`")?;
        Ok(Binding {
            span: name.span.to(end),
            name,
            ty,
            signature,
            assignments,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Number(n) => {
                self.bump();
                Ok(Expr::Number(n))
            }
            TokenKind::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            TokenKind::Date(d) => {
                self.bump();
                Ok(Expr::Date(d))
            }
            TokenKind::Ident(_) => Ok(Expr::Param(self.ident("a parameter or literal")?)),
            _ => Err(self.error_here("a parameter or literal")),
        }
    }

    fn obligation_stmt(&mut self) -> PResult<Obligation> {
        let id = self.ident("an obligation id")?;
        self.expect(TokenKind::Colon, "`:`")?;
        let mut o = self.obligation_body(id)?;
        let end = self.expect(TokenKind::Semi, "`;`")?;
        o.span = o.span.to(end);
        Ok(o)
    }

    fn obligation_body(&mut self, id: Ident) -> PResult<Obligation> {
        self.expect_word("Obligation")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let debtor = self.ident("a debtor party")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let creditor = self.ident("a creditor party")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let trigger = self.prop()?;
        self.expect(TokenKind::Comma, "`,`")?;
        let consequent = self.prop()?;
        let end = self.expect(TokenKind::RParen, "`)`")?;
        Ok(Obligation {
            span: id.span.to(end),
            id,
            debtor,
            creditor,
            trigger,
            consequent,
        })
    }

    fn power_stmt(&mut self) -> PResult<Power> {
        let id = self.ident("a power id")?;
        self.expect(TokenKind::Colon, "`:`")?;
        self.expect_word("Power")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let holder = self.ident("a holder party")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let counterparty = self.ident("a counterparty")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let trigger = self.prop()?;
        self.expect(TokenKind::Comma, "`,`")?;
        let action = self.action()?;
        self.expect(TokenKind::RParen, "`)`")?;
        let end = self.expect(TokenKind::Semi, "`;`")?;
        Ok(Power {
            span: id.span.to(end),
            id,
            holder,
            counterparty,
            trigger,
            action,
        })
    }

    fn action(&mut self) -> PResult<PowerAction> {
        if self.is_word("Terminate") {
            self.bump();
            return Ok(PowerAction::Terminate);
        }
        if self.is_word("Impose") {
            self.bump();
            self.expect(TokenKind::LParen, "`(`")?;
            let id = self.ident("an obligation id")?;
            self.expect(TokenKind::Colon, "`:`")?;
            let o = self.obligation_body(id)?;
            self.expect(TokenKind::RParen, "`)`")?;
            return Ok(PowerAction::Impose(Box::new(o)));
        }
        let suspend = if self.is_word("Suspend") {
            true
        } else if self.is_word("Resume") {
            false
        } else {
            return Err(self.error_here("`Suspend`, `Resume`, `Terminate` or `Impose`"));
        };
        self.bump();
        self.expect(TokenKind::LParen, "`(`")?;
        let mut ids = vec![self.ident("an obligation id")?];
        while self.eat(&TokenKind::Comma) {
            ids.push(self.ident("an obligation id")?);
        }
        self.expect(TokenKind::RParen, "`)`")?;
        Ok(if suspend {
            PowerAction::Suspend(ids)
        } else {
            PowerAction::Resume(ids)
        })
    }

    fn constraint_stmt(&mut self) -> PResult<Constraint> {
        let start = self.expect_word("Precedes")?;
        self.expect(TokenKind::LParen, "`(`")?;
        let first = self.ident("an event")?;
        self.expect(TokenKind::Comma, "`,`")?;
        let then = self.ident("an event")?;
        self.expect(TokenKind::RParen, "`)`")?;
        let end = self.expect(TokenKind::Semi, "`;`")?;
        Ok(Constraint {
            first,
            then,
            span: start.to(end),
        })
    }

    // prop := and_prop { "or" and_prop }
    fn prop(&mut self) -> PResult<Proposition> {
        let mut lhs = self.and_prop()?;
        while self.is_word("or") {
            self.bump();
            let rhs = self.and_prop()?;
            lhs = Proposition::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_prop(&mut self) -> PResult<Proposition> {
        let mut lhs = self.unary()?;
        while self.is_word("and") {
            self.bump();
            let rhs = self.unary()?;
            lhs = Proposition::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Proposition> {
        if self.is_word("not") {
            self.bump();
            return Ok(Proposition::negate(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Proposition> {
        if self.eat(&TokenKind::LParen) {
            let p = self.prop()?;
            self.expect(TokenKind::RParen, "`)`")?;
            return Ok(p);
        }
        let word = match &self.peek().kind {
            TokenKind::Ident(w) => w.clone(),
            _ => return Err(self.error_here("a proposition")),
        };
        match word.as_str() {
            "true" => {
                self.bump();
                Ok(Proposition::True)
            }
            "false" => {
                self.bump();
                Ok(Proposition::False)
            }
            "Happens" | "Violated" | "Fulfilled" => {
                self.bump();
                self.expect(TokenKind::LParen, "`(`")?;
                let what = if word == "Happens" { "an event" } else { "an obligation id" };
                let id = self.ident(what)?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(match word.as_str() {
                    "Happens" => Proposition::Happens(id),
                    "Violated" => Proposition::Violated(id),
                    _ => Proposition::Fulfilled(id),
                })
            }
            "HappensBefore" | "HappensAfter" => {
                self.bump();
                self.expect(TokenKind::LParen, "`(`")?;
                let ev = self.ident("an event")?;
                self.expect(TokenKind::Comma, "`,`")?;
                let tp = self.time_point()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(if word == "HappensBefore" {
                    Proposition::HappensBefore(ev, tp)
                } else {
                    Proposition::HappensAfter(ev, tp)
                })
            }
            "HappensWithin" => {
                self.bump();
                self.expect(TokenKind::LParen, "`(`")?;
                let ev = self.ident("an event")?;
                self.expect(TokenKind::Comma, "`,`")?;
                let interval = self.interval()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(Proposition::HappensWithin(ev, interval))
            }
            _ if !is_reserved(&word) && self.peek_at(1).kind == TokenKind::Dot => {
                let event = self.ident("an event")?;
                self.expect(TokenKind::Dot, "`.`")?;
                let attr = self.ident("an attribute name")?;
                let op = match self.peek().kind {
                    TokenKind::Lt => CmpOp::Lt,
                    TokenKind::Le => CmpOp::Le,
                    TokenKind::EqSign => CmpOp::Eq,
                    TokenKind::Ge => CmpOp::Ge,
                    TokenKind::Gt => CmpOp::Gt,
                    _ => return Err(self.error_here("a comparison operator")),
                };
                self.bump();
                let value = self.expr()?;
                Ok(Proposition::AttrCmp {
                    event,
                    attr,
                    op,
                    value,
                })
            }
            _ => Err(self.error_here("a proposition")),
        }
    }

    fn time_point(&mut self) -> PResult<TimePoint> {
        if let TokenKind::Date(d) = self.peek().kind {
            self.bump();
            return Ok(TimePoint::Date(d));
        }
        Ok(TimePoint::Param(self.ident("a date or date parameter")?))
    }

    fn interval(&mut self) -> PResult<Interval> {
        if self.is_word("Interval") {
            self.bump();
            self.expect(TokenKind::LParen, "`(`")?;
            let a = self.time_point()?;
            self.expect(TokenKind::Comma, "`,`")?;
            let b = self.time_point()?;
            self.expect(TokenKind::RParen, "`)`")?;
            return Ok(Interval::Absolute(a, b));
        }
        if self.is_word("RelativeTo") {
            self.bump();
            self.expect(TokenKind::LParen, "`(`")?;
            let anchor = self.ident("an event")?;
            self.expect(TokenKind::Comma, "`,`")?;
            let tok = self.peek().clone();
            let magnitude = match tok.kind {
                TokenKind::Number(n) if n >= 0.0 && n.fract() == 0.0 && n <= u32::MAX as f64 => {
                    self.bump();
                    n as u32
                }
                _ => return Err(self.error_here("a whole number")),
            };
            let unit_tok = self.peek().clone();
            let unit = match &unit_tok.kind {
                TokenKind::Ident(w) => TimeUnit::parse(w),
                _ => None,
            };
            let Some(unit) = unit else {
                return Err(self.error_here("`days`, `weeks` or `months`"));
            };
            self.bump();
            self.expect(TokenKind::RParen, "`)`")?;
            return Ok(Interval::RelativeTo(anchor, Duration { magnitude, unit }));
        }
        Err(self.error_here("`Interval` or `RelativeTo`"))
    }
}
