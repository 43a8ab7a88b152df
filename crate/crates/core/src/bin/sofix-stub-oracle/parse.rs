//! Recursive-descent syntax check over the token stream. Reports the first
//! error with the messages a 3.6 interpreter would give for the common
//! cases.

use crate::tokenize::{tokenize_lenient, ErrClass, Kind, Tok};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub line: u32,
    pub col: u32,
}

type P<T = ()> = Result<T, Failure>;

const KEYWORDS: [&str; 33] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in",
    "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
];
const MORE_KEYWORDS: [&str; 2] = ["with", "yield"];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word) || MORE_KEYWORDS.contains(&word)
}

const AUGASSIGN: [&str; 12] = ["+=", "-=", "*=", "/=", "//=", "%=", "@=", "&=", "|=", "^=", ">>=", "<<="];
const BINOPS: [&str; 12] = ["|", "^", "&", "<<", ">>", "+", "-", "*", "/", "%", "//", "@"];
const COMPARE: [&str; 7] = ["<", ">", "==", ">=", "<=", "!=", "<>"];

/// What an expression could be assigned to, or why not.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Target {
    Ok,
    Literal,
    Keyword,
    Call,
    Operator,
}

impl Target {
    fn message(self) -> Option<&'static str> {
        match self {
            Target::Ok => None,
            Target::Literal => Some("can't assign to literal"),
            Target::Keyword => Some("can't assign to keyword"),
            Target::Call => Some("can't assign to function call"),
            Target::Operator => Some("can't assign to operator"),
        }
    }
}

struct Parser {
    toks: Vec<Tok>,
    i: usize,
}

impl Parser {
    fn tok(&self) -> &Tok {
        &self.toks[self.i.min(self.toks.len() - 1)]
    }

    fn at(&self, off: usize) -> &Tok {
        &self.toks[(self.i + off).min(self.toks.len() - 1)]
    }

    fn bump(&mut self) -> Tok {
        let t = self.tok().clone();
        if self.i < self.toks.len() - 1 {
            self.i += 1;
        }
        t
    }

    fn fail_at(&self, t: &Tok) -> Failure {
        if t.kind == Kind::EndMarker {
            return Failure {
                kind: "SyntaxError",
                message: "unexpected EOF while parsing".into(),
                line: t.line.max(1),
                col: t.col + 1,
            };
        }
        if t.kind == Kind::Indent {
            return Failure {
                kind: "IndentationError",
                message: "unexpected indent".into(),
                line: t.line,
                col: t.col + 1,
            };
        }
        Failure {
            kind: "SyntaxError",
            message: "invalid syntax".into(),
            line: t.line,
            col: t.col + 1,
        }
    }

    fn fail<T>(&self) -> P<T> {
        Err(self.fail_at(self.tok()))
    }

    fn op(&self, op: &str) -> bool {
        self.tok().is_op(op)
    }

    fn kw(&self, word: &str) -> bool {
        self.tok().is_name(word)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        let hit = self.op(op);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_kw(&mut self, word: &str) -> bool {
        let hit = self.kw(word);
        if hit {
            self.bump();
        }
        hit
    }

    fn expect_op(&mut self, op: &str) -> P {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.fail()
        }
    }

    fn expect_kw(&mut self, word: &str) -> P {
        if self.eat_kw(word) {
            Ok(())
        } else {
            self.fail()
        }
    }

    fn name(&mut self) -> P {
        let t = self.tok();
        if t.kind == Kind::Name && !is_keyword(&t.text) {
            self.bump();
            Ok(())
        } else {
            self.fail()
        }
    }

    fn file(&mut self) -> P {
        loop {
            match self.tok().kind {
                Kind::EndMarker => return Ok(()),
                Kind::Newline => {
                    self.bump();
                }
                _ => self.stmt()?,
            }
        }
    }

    fn stmt(&mut self) -> P {
        let t = self.tok().clone();
        if t.kind != Kind::Name && !t.is_op("@") {
            return self.simple_stmt();
        }
        match t.text.as_str() {
            "if" => self.if_stmt(),
            "while" => {
                self.bump();
                self.test()?;
                self.block()?;
                self.else_block()
            }
            "for" => {
                self.bump();
                self.for_rest()?;
                self.else_block()
            }
            "try" => self.try_stmt(),
            "with" => {
                self.bump();
                self.with_rest()
            }
            "def" => self.funcdef(),
            "class" => self.classdef(),
            "@" => {
                while self.eat_op("@") {
                    self.test()?;
                    self.newline()?;
                }
                match self.tok().text.as_str() {
                    "def" => self.funcdef(),
                    "class" => self.classdef(),
                    "async" => self.stmt(),
                    _ => self.fail(),
                }
            }
            "async" if matches!(self.at(1).text.as_str(), "def" | "for" | "with") => {
                self.bump();
                self.stmt()
            }
            _ => self.simple_stmt(),
        }
    }

    fn if_stmt(&mut self) -> P {
        self.bump();
        self.test()?;
        self.block()?;
        while self.eat_kw("elif") {
            self.test()?;
            self.block()?;
        }
        self.else_block()
    }

    fn else_block(&mut self) -> P {
        if self.eat_kw("else") {
            self.block()?;
        }
        Ok(())
    }

    fn for_rest(&mut self) -> P {
        self.target_list()?;
        self.expect_kw("in")?;
        self.testlist()?;
        self.block()
    }

    fn with_rest(&mut self) -> P {
        loop {
            self.test()?;
            if self.eat_kw("as") {
                self.assignable(Parser::expr)?;
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.block()
    }

    fn try_stmt(&mut self) -> P {
        self.bump();
        self.block()?;
        let mut handlers = 0;
        while self.eat_kw("except") {
            handlers += 1;
            if !self.op(":") {
                self.test()?;
                if self.eat_kw("as") || self.eat_op(",") {
                    self.name()?;
                }
            }
            self.block()?;
        }
        if handlers > 0 && self.eat_kw("else") {
            self.block()?;
        }
        if self.eat_kw("finally") {
            self.block()?;
        } else if handlers == 0 {
            return self.fail();
        }
        Ok(())
    }

    fn funcdef(&mut self) -> P {
        self.expect_kw("def")?;
        self.name()?;
        self.expect_op("(")?;
        self.params(")")?;
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.test()?;
        }
        self.block()
    }

    fn params(&mut self, close: &str) -> P {
        while !self.op(close) {
            if self.eat_op("**") || self.eat_op("*") {
                if self.op(",") || self.op(close) {
                    // bare `*` marks keyword-only parameters
                } else {
                    self.name()?;
                    if close == ")" && self.eat_op(":") {
                        self.test()?;
                    }
                }
            } else if self.eat_op("/") {
            } else {
                self.name()?;
                if close == ")" && self.eat_op(":") {
                    self.test()?;
                }
                if self.eat_op("=") {
                    self.test()?;
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(())
    }

    fn classdef(&mut self) -> P {
        self.expect_kw("class")?;
        self.name()?;
        if self.eat_op("(") {
            self.arglist(")")?;
            self.expect_op(")")?;
        }
        self.block()
    }

    /// `:` followed by an inline statement or an indented block.
    fn block(&mut self) -> P {
        self.expect_op(":")?;
        if self.tok().kind != Kind::Newline {
            return self.simple_stmt();
        }
        self.bump();
        let t = self.tok().clone();
        match t.kind {
            Kind::Indent => {
                self.bump();
            }
            Kind::EndMarker => return self.fail(),
            _ => {
                return Err(Failure {
                    kind: "IndentationError",
                    message: "expected an indented block".into(),
                    line: t.line,
                    col: t.col + 1,
                })
            }
        }
        while self.tok().kind != Kind::Dedent && self.tok().kind != Kind::EndMarker {
            if self.tok().kind == Kind::Newline {
                self.bump();
                continue;
            }
            self.stmt()?;
        }
        if self.tok().kind == Kind::Dedent {
            self.bump();
        }
        Ok(())
    }

    fn newline(&mut self) -> P {
        match self.tok().kind {
            Kind::Newline => {
                self.bump();
                Ok(())
            }
            Kind::EndMarker => Ok(()),
            _ => self.fail(),
        }
    }

    fn simple_stmt(&mut self) -> P {
        loop {
            self.small_stmt()?;
            if !self.eat_op(";") {
                break;
            }
            if self.tok().kind == Kind::Newline || self.tok().kind == Kind::EndMarker {
                break;
            }
        }
        self.newline()
    }

    fn small_stmt(&mut self) -> P {
        let t = self.tok().clone();
        if t.kind == Kind::Name {
            match t.text.as_str() {
                "pass" | "break" | "continue" => {
                    self.bump();
                    return Ok(());
                }
                "return" => {
                    self.bump();
                    if !self.at_stmt_end() {
                        self.testlist()?;
                    }
                    return Ok(());
                }
                "raise" => {
                    self.bump();
                    if !self.at_stmt_end() {
                        self.test()?;
                        if self.eat_kw("from") {
                            self.test()?;
                        }
                    }
                    return Ok(());
                }
                "global" | "nonlocal" => {
                    self.bump();
                    self.name()?;
                    while self.eat_op(",") {
                        self.name()?;
                    }
                    return Ok(());
                }
                "del" => {
                    self.bump();
                    return self.target_list();
                }
                "assert" => {
                    self.bump();
                    self.test()?;
                    if self.eat_op(",") {
                        self.test()?;
                    }
                    return Ok(());
                }
                "import" => {
                    self.bump();
                    loop {
                        self.dotted()?;
                        if self.eat_kw("as") {
                            self.name()?;
                        }
                        if !self.eat_op(",") {
                            return Ok(());
                        }
                    }
                }
                "from" => return self.from_import(),
                "print" => {
                    let next = self.at(1);
                    if matches!(next.kind, Kind::Str | Kind::Number)
                        || (next.kind == Kind::Name && !is_keyword(&next.text))
                    {
                        return Err(Failure {
                            kind: "SyntaxError",
                            message: "Missing parentheses in call to 'print'".into(),
                            line: t.line,
                            col: t.col + 1,
                        });
                    }
                }
                _ => {}
            }
        }
        self.expr_stmt()
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.tok().kind, Kind::Newline | Kind::EndMarker) || self.op(";")
    }

    fn dotted(&mut self) -> P {
        self.name()?;
        while self.eat_op(".") {
            self.name()?;
        }
        Ok(())
    }

    fn from_import(&mut self) -> P {
        self.bump();
        let mut dots = 0;
        while self.eat_op(".") || self.eat_op("...") {
            dots += 1;
        }
        if !(dots > 0 && self.kw("import")) {
            self.dotted()?;
        }
        self.expect_kw("import")?;
        if self.eat_op("*") {
            return Ok(());
        }
        let paren = self.eat_op("(");
        loop {
            self.name()?;
            if self.eat_kw("as") {
                self.name()?;
            }
            if !self.eat_op(",") {
                break;
            }
            if paren && self.op(")") {
                break;
            }
        }
        if paren {
            self.expect_op(")")?;
        }
        Ok(())
    }

    fn expr_stmt(&mut self) -> P {
        let start = self.tok().clone();
        let first = self.testlist_star()?;
        if AUGASSIGN.iter().any(|op| self.op(op)) {
            self.check_target(first, &start)?;
            self.bump();
            return if self.kw("yield") { self.yield_expr() } else { self.testlist().map(|_| ()) };
        }
        if self.op(":") {
            self.check_target(first, &start)?;
            self.bump();
            self.test()?;
            if self.eat_op("=") {
                self.test()?;
            }
            return Ok(());
        }
        let mut lhs = (first, start);
        while self.op("=") {
            self.check_target(lhs.0, &lhs.1)?;
            self.bump();
            let start = self.tok().clone();
            let target = if self.kw("yield") {
                self.yield_expr()?;
                Target::Operator
            } else {
                self.testlist_star()?
            };
            lhs = (target, start);
        }
        Ok(())
    }

    fn check_target(&self, target: Target, at: &Tok) -> P {
        match target.message() {
            None => Ok(()),
            Some(message) => Err(Failure {
                kind: "SyntaxError",
                message: message.into(),
                line: at.line,
                col: at.col + 1,
            }),
        }
    }

    fn assignable(&mut self, f: fn(&mut Parser) -> P<Target>) -> P {
        let start = self.tok().clone();
        let t = f(self)?;
        self.check_target(t, &start)
    }

    fn yield_expr(&mut self) -> P {
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            return self.test().map(|_| ());
        }
        if !self.at_stmt_end() && !self.op(")") && !self.op("=") {
            self.testlist()?;
        }
        Ok(())
    }

    fn sequence(&mut self, item: fn(&mut Parser) -> P<Target>) -> P<Target> {
        let first = item(self)?;
        if !self.op(",") {
            return Ok(first);
        }
        let mut all = first;
        while self.eat_op(",") {
            if self.starts_expr() {
                let t = item(self)?;
                if all == Target::Ok {
                    all = t;
                }
            } else {
                break;
            }
        }
        Ok(all)
    }

    fn testlist(&mut self) -> P<Target> {
        self.sequence(Parser::test)
    }

    fn testlist_star(&mut self) -> P<Target> {
        self.sequence(Parser::test_or_star)
    }

    fn target_list(&mut self) -> P {
        let start = self.tok().clone();
        let t = self.sequence(Parser::expr_or_star)?;
        self.check_target(t, &start)
    }

    fn test_or_star(&mut self) -> P<Target> {
        if self.eat_op("*") {
            return self.expr();
        }
        self.test()
    }

    fn expr_or_star(&mut self) -> P<Target> {
        if self.eat_op("*") {
            return self.expr();
        }
        self.expr()
    }

    fn starts_expr(&self) -> bool {
        let t = self.tok();
        match t.kind {
            Kind::Name => !is_keyword(&t.text)
                || matches!(t.text.as_str(), "None" | "True" | "False" | "not" | "lambda" | "await"),
            Kind::Number | Kind::Str => true,
            Kind::Op => matches!(t.text.as_str(), "(" | "[" | "{" | "-" | "+" | "~" | "*" | "..."),
            _ => false,
        }
    }

    fn test(&mut self) -> P<Target> {
        if self.eat_kw("lambda") {
            self.params(":")?;
            self.expect_op(":")?;
            self.test()?;
            return Ok(Target::Operator);
        }
        let t = self.or_test()?;
        if self.eat_kw("if") {
            self.or_test()?;
            self.expect_kw("else")?;
            self.test()?;
            return Ok(Target::Operator);
        }
        Ok(t)
    }

    fn or_test(&mut self) -> P<Target> {
        let mut t = self.and_test()?;
        while self.eat_kw("or") {
            self.and_test()?;
            t = Target::Operator;
        }
        Ok(t)
    }

    fn and_test(&mut self) -> P<Target> {
        let mut t = self.not_test()?;
        while self.eat_kw("and") {
            self.not_test()?;
            t = Target::Operator;
        }
        Ok(t)
    }

    fn not_test(&mut self) -> P<Target> {
        if self.eat_kw("not") {
            self.not_test()?;
            return Ok(Target::Operator);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> P<Target> {
        let mut t = self.expr()?;
        loop {
            if COMPARE.iter().any(|op| self.op(op)) || self.kw("in") {
                self.bump();
            } else if self.kw("not") && self.at(1).is_name("in") {
                self.bump();
                self.bump();
            } else if self.kw("is") {
                self.bump();
                self.eat_kw("not");
            } else {
                return Ok(t);
            }
            self.expr()?;
            t = Target::Operator;
        }
    }

    fn expr(&mut self) -> P<Target> {
        let mut t = self.unary()?;
        while BINOPS.iter().any(|op| self.op(op)) {
            self.bump();
            self.unary()?;
            t = Target::Operator;
        }
        Ok(t)
    }

    fn unary(&mut self) -> P<Target> {
        if self.eat_op("-") || self.eat_op("+") || self.eat_op("~") {
            self.unary()?;
            return Ok(Target::Operator);
        }
        self.power()
    }

    fn power(&mut self) -> P<Target> {
        let awaited = self.eat_kw("await");
        let mut t = self.atom()?;
        loop {
            if self.eat_op("(") {
                self.arglist(")")?;
                self.expect_op(")")?;
                t = Target::Call;
            } else if self.eat_op("[") {
                self.subscripts()?;
                self.expect_op("]")?;
                t = Target::Ok;
            } else if self.eat_op(".") {
                self.name()?;
                t = Target::Ok;
            } else {
                break;
            }
        }
        if self.eat_op("**") {
            self.unary()?;
            t = Target::Operator;
        }
        Ok(if awaited { Target::Operator } else { t })
    }

    fn atom(&mut self) -> P<Target> {
        let t = self.tok().clone();
        match t.kind {
            Kind::Name => match t.text.as_str() {
                "None" | "True" | "False" => {
                    self.bump();
                    Ok(Target::Keyword)
                }
                w if is_keyword(w) => self.fail(),
                _ => {
                    self.bump();
                    Ok(Target::Ok)
                }
            },
            Kind::Number => {
                self.bump();
                Ok(Target::Literal)
            }
            Kind::Str => {
                while self.tok().kind == Kind::Str {
                    self.bump();
                }
                Ok(Target::Literal)
            }
            Kind::Op => match t.text.as_str() {
                "(" => {
                    self.bump();
                    if self.eat_op(")") {
                        return Ok(Target::Literal);
                    }
                    let inner = if self.kw("yield") {
                        self.yield_expr()?;
                        Target::Operator
                    } else {
                        self.comprehension_or_list(")")?
                    };
                    self.expect_op(")")?;
                    Ok(inner)
                }
                "[" => {
                    self.bump();
                    let inner = if self.op("]") { Target::Ok } else { self.comprehension_or_list("]")? };
                    self.expect_op("]")?;
                    Ok(inner)
                }
                "{" => {
                    self.bump();
                    self.dict_or_set()?;
                    self.expect_op("}")?;
                    Ok(Target::Literal)
                }
                "..." => {
                    self.bump();
                    Ok(Target::Literal)
                }
                _ => self.fail(),
            },
            _ => self.fail(),
        }
    }

    fn comprehension_or_list(&mut self, close: &str) -> P<Target> {
        let first = self.test_or_star()?;
        if self.kw("for") || self.kw("async") {
            self.comp_for()?;
            return Ok(Target::Operator);
        }
        let mut all = first;
        while self.eat_op(",") {
            if self.op(close) {
                break;
            }
            let t = self.test_or_star()?;
            if all == Target::Ok {
                all = t;
            }
        }
        Ok(all)
    }

    fn comp_for(&mut self) -> P {
        while self.kw("for") || self.kw("async") {
            self.eat_kw("async");
            self.expect_kw("for")?;
            self.target_list()?;
            self.expect_kw("in")?;
            self.or_test()?;
            while self.eat_kw("if") {
                self.or_test()?;
            }
        }
        Ok(())
    }

    fn dict_or_set(&mut self) -> P {
        let mut first = true;
        while !self.op("}") {
            if self.eat_op("**") {
                self.expr()?;
            } else {
                self.test_or_star()?;
                if self.eat_op(":") {
                    self.test()?;
                }
            }
            if first && (self.kw("for") || self.kw("async")) {
                return self.comp_for();
            }
            first = false;
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(())
    }

    fn arglist(&mut self, close: &str) -> P {
        while !self.op(close) {
            if self.eat_op("**") || self.eat_op("*") {
                self.test()?;
            } else {
                let start = self.tok().clone();
                let t = self.test()?;
                if self.op("=") && !self.at(1).is_op("=") {
                    if t != Target::Ok || start.kind != Kind::Name {
                        return Err(Failure {
                            kind: "SyntaxError",
                            message: "keyword can't be an expression".into(),
                            line: start.line,
                            col: start.col + 1,
                        });
                    }
                    self.bump();
                    self.test()?;
                } else if self.kw("for") || self.kw("async") {
                    self.comp_for()?;
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(())
    }

    fn subscripts(&mut self) -> P {
        loop {
            if !self.op(":") {
                self.test_or_star()?;
            }
            if self.eat_op(":") {
                if !self.op(":") && !self.op("]") && !self.op(",") {
                    self.test()?;
                }
                if self.eat_op(":") && !self.op("]") && !self.op(",") {
                    self.test()?;
                }
            }
            if !self.eat_op(",") || self.op("]") {
                return Ok(());
            }
        }
    }
}

/// Checks `code`; `None` means it parses.
pub fn check(code: &str) -> Option<Failure> {
    let toks = match tokenize_lenient(code) {
        Ok(t) => t,
        Err(e) => {
            return Some(Failure {
                kind: match e.class {
                    ErrClass::Syntax => "SyntaxError",
                    ErrClass::Indentation => "IndentationError",
                    ErrClass::Tab => "TabError",
                },
                message: e.message,
                line: e.line,
                col: e.col,
            })
        }
    };
    let toks: Vec<Tok> = toks
        .into_iter()
        .filter(|t| !matches!(t.kind, Kind::Nl | Kind::Comment))
        .collect();
    if let Some(bad) = toks.iter().find(|t| t.kind == Kind::ErrorToken) {
        return Some(Failure {
            kind: "SyntaxError",
            message: "invalid syntax".into(),
            line: bad.line,
            col: bad.col + 1,
        });
    }
    let mut p = Parser { toks, i: 0 };
    p.file().err()
}
