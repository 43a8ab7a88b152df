//! Python-style tokenizer: enough of the real one to lay out INDENT/DEDENT,
//! NEWLINE/NL, strings with prefixes and triple quotes, and operators.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Name,
    Number,
    Str,
    Op,
    Comment,
    Newline,
    Nl,
    Indent,
    Dedent,
    ErrorToken,
    EndMarker,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Name => "NAME",
            Kind::Number => "NUMBER",
            Kind::Str => "STRING",
            Kind::Op => "OP",
            Kind::Comment => "COMMENT",
            Kind::Newline => "NEWLINE",
            Kind::Nl => "NL",
            Kind::Indent => "INDENT",
            Kind::Dedent => "DEDENT",
            Kind::ErrorToken => "ERRORTOKEN",
            Kind::EndMarker => "ENDMARKER",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tok {
    pub kind: Kind,
    pub text: String,
    pub line: u32,
    /// 0-based character offset in the line.
    pub col: u32,
}

impl Tok {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == Kind::Op && self.text == op
    }

    pub fn is_name(&self, name: &str) -> bool {
        self.kind == Kind::Name && self.text == name
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrClass {
    Syntax,
    Indentation,
    Tab,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokError {
    pub class: ErrClass,
    pub message: String,
    pub line: u32,
    pub col: u32,
}

const OPS3: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const OPS2: [&str; 20] = [
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "->", "+=", "-=", "*=", "/=", "%=", "&=", "|=",
    "^=", "@=", ":=", "<>",
];
const OPS1: &str = "+-*/%@&|^~<>()[]{},:.;=";

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_char(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn is_string_prefix(s: &str) -> bool {
    matches!(
        s.to_ascii_lowercase().as_str(),
        "r" | "b" | "u" | "f" | "br" | "rb" | "fr" | "rf"
    )
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    line_start: usize,
    out: Vec<Tok>,
}

impl Lexer {
    fn col(&self, at: usize) -> u32 {
        (at - self.line_start) as u32
    }

    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn push(&mut self, kind: Kind, start: usize, line: u32, col: u32) {
        let text: String = self.chars[start..self.pos].iter().collect();
        self.out.push(Tok { kind, text, line, col });
    }

    fn newline_consumed(&mut self) {
        self.line += 1;
        self.line_start = self.pos;
    }

    fn string(&mut self, start: usize) -> Result<(), TokError> {
        let (line, col) = (self.line, self.col(start));
        let quote = self.chars[self.pos];
        let triple = self.peek(1) == Some(quote) && self.peek(2) == Some(quote);
        self.pos += if triple { 3 } else { 1 };
        loop {
            let Some(c) = self.peek(0) else {
                let message = if triple {
                    "EOF while scanning triple-quoted string literal"
                } else {
                    "EOL while scanning string literal"
                };
                return Err(TokError { class: ErrClass::Syntax, message: message.into(), line, col: col + 1 });
            };
            match c {
                '\\' => {
                    self.pos += 1;
                    if self.peek(0) == Some('\n') {
                        self.pos += 1;
                        self.newline_consumed();
                    } else if self.peek(0).is_some() {
                        self.pos += 1;
                    }
                }
                '\n' if !triple => {
                    return Err(TokError {
                        class: ErrClass::Syntax,
                        message: "EOL while scanning string literal".into(),
                        line,
                        col: col + 1,
                    })
                }
                '\n' => {
                    self.pos += 1;
                    self.newline_consumed();
                }
                c if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.peek(1) == Some(quote) && self.peek(2) == Some(quote) {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                _ => self.pos += 1,
            }
        }
        self.out.push(Tok {
            kind: Kind::Str,
            text: self.chars[start..self.pos].iter().collect(),
            line,
            col,
        });
        Ok(())
    }

    fn number(&mut self) {
        let start = self.pos;
        let (line, col) = (self.line, self.col(start));
        let hex = self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X'));
        while let Some(c) = self.peek(0) {
            let exponent_sign = !hex
                && matches!(c, '+' | '-')
                && matches!(self.chars.get(self.pos.wrapping_sub(1)), Some('e' | 'E'))
                && self.peek(1).is_some_and(|d| d.is_ascii_digit());
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' || exponent_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.push(Kind::Number, start, line, col);
    }
}

/// Tokenizes `src`. The stream ends with DEDENTs and ENDMARKER, and a
/// zero-width NEWLINE when the last logical line has no line break.
pub fn tokenize(src: &str) -> Result<Vec<Tok>, TokError> {
    tokenize_with(src, true)
}

/// Like [`tokenize`], but an unclosed bracket at end of input is left for
/// the parser to report.
pub fn tokenize_lenient(src: &str) -> Result<Vec<Tok>, TokError> {
    tokenize_with(src, false)
}

fn tokenize_with(src: &str, strict: bool) -> Result<Vec<Tok>, TokError> {
    let src = src.replace("\r\n", "\n").replace('\r', "\n");
    let mut lx = Lexer {
        chars: src.chars().collect(),
        pos: 0,
        line: 1,
        line_start: 0,
        out: Vec::new(),
    };
    let mut indents: Vec<String> = vec![String::new()];
    let mut depth: usize = 0;
    let mut at_line_start = true;
    let mut continued = false;
    let mut line_has_tokens = false;

    while lx.pos < lx.chars.len() {
        if at_line_start && depth == 0 && !continued {
            let ws_start = lx.pos;
            while matches!(lx.peek(0), Some(' ' | '\t' | '\x0c')) {
                lx.pos += 1;
            }
            let ws: String = lx.chars[ws_start..lx.pos].iter().collect();
            match lx.peek(0) {
                None => break,
                Some('#') | Some('\n') => {
                    if lx.peek(0) == Some('#') {
                        let start = lx.pos;
                        while lx.peek(0).is_some_and(|c| c != '\n') {
                            lx.pos += 1;
                        }
                        lx.push(Kind::Comment, start, lx.line, lx.col(start));
                    }
                    let start = lx.pos;
                    let line = lx.line;
                    if lx.peek(0) == Some('\n') {
                        lx.pos += 1;
                    }
                    lx.push(Kind::Nl, start, line, lx.col(start));
                    if lx.out.last().is_some_and(|t| !t.text.is_empty()) {
                        lx.newline_consumed();
                    }
                    at_line_start = true;
                    continue;
                }
                Some(_) => {}
            }
            let top = indents.last().expect("indent stack never empties").clone();
            if ws != top {
                if ws.starts_with(&top) {
                    indents.push(ws.clone());
                    lx.out.push(Tok { kind: Kind::Indent, text: ws, line: lx.line, col: 0 });
                } else if top.starts_with(&ws) {
                    while indents.last().is_some_and(|i| i.len() > ws.len()) {
                        indents.pop();
                        lx.out.push(Tok { kind: Kind::Dedent, text: String::new(), line: lx.line, col: lx.col(lx.pos) });
                    }
                    if indents.last() != Some(&ws) {
                        return Err(TokError {
                            class: ErrClass::Indentation,
                            message: "unindent does not match any outer indentation level".into(),
                            line: lx.line,
                            col: lx.col(lx.pos) + 1,
                        });
                    }
                } else {
                    return Err(TokError {
                        class: ErrClass::Tab,
                        message: "inconsistent use of tabs and spaces in indentation".into(),
                        line: lx.line,
                        col: lx.col(lx.pos) + 1,
                    });
                }
            }
        }
        at_line_start = false;
        continued = false;
        let start = lx.pos;
        let (line, col) = (lx.line, lx.col(start));
        let c = lx.chars[lx.pos];
        match c {
            ' ' | '\t' | '\x0c' => lx.pos += 1,
            '\\' if lx.peek(1) == Some('\n') => {
                lx.pos += 2;
                lx.newline_consumed();
                continued = true;
                at_line_start = true;
            }
            '\n' => {
                lx.pos += 1;
                let kind = if depth > 0 || !line_has_tokens { Kind::Nl } else { Kind::Newline };
                lx.push(kind, start, line, col);
                lx.newline_consumed();
                at_line_start = true;
                if kind == Kind::Newline {
                    line_has_tokens = false;
                }
            }
            '#' => {
                while lx.peek(0).is_some_and(|c| c != '\n') {
                    lx.pos += 1;
                }
                lx.push(Kind::Comment, start, line, col);
            }
            '\'' | '"' => {
                lx.string(start)?;
                line_has_tokens = true;
            }
            c if is_ident_start(c) => {
                while lx.peek(0).is_some_and(is_ident_char) {
                    lx.pos += 1;
                }
                let word: String = lx.chars[start..lx.pos].iter().collect();
                if is_string_prefix(&word) && matches!(lx.peek(0), Some('\'' | '"')) {
                    lx.string(start)?;
                } else {
                    lx.push(Kind::Name, start, line, col);
                }
                line_has_tokens = true;
            }
            c if c.is_ascii_digit() || (c == '.' && lx.peek(1).is_some_and(|d| d.is_ascii_digit())) => {
                lx.number();
                line_has_tokens = true;
            }
            _ => {
                let rest: String = lx.chars[lx.pos..(lx.pos + 3).min(lx.chars.len())].iter().collect();
                let len = if OPS3.iter().any(|o| rest.starts_with(o)) {
                    3
                } else if OPS2.iter().any(|o| rest.starts_with(o)) {
                    2
                } else if OPS1.contains(c) {
                    1
                } else {
                    0
                };
                if len == 0 {
                    lx.pos += 1;
                    lx.push(Kind::ErrorToken, start, line, col);
                } else {
                    lx.pos += len;
                    match c {
                        '(' | '[' | '{' => depth += 1,
                        ')' | ']' | '}' => depth = depth.saturating_sub(1),
                        _ => {}
                    }
                    lx.push(Kind::Op, start, line, col);
                }
                line_has_tokens = true;
            }
        }
    }

    if (strict && depth > 0) || continued {
        return Err(TokError {
            class: ErrClass::Syntax,
            message: "unexpected EOF while parsing".into(),
            line: lx.line,
            col: lx.col(lx.pos) + 1,
        });
    }
    let (line, col) = (lx.line, lx.col(lx.pos));
    if line_has_tokens && depth == 0 {
        lx.out.push(Tok { kind: Kind::Newline, text: String::new(), line, col });
    }
    let eof_line = if col == 0 { line } else { line + 1 };
    for _ in 1..indents.len() {
        lx.out.push(Tok { kind: Kind::Dedent, text: String::new(), line: eof_line, col: 0 });
    }
    lx.out.push(Tok { kind: Kind::EndMarker, text: String::new(), line: eof_line, col: 0 });
    Ok(lx.out)
}
