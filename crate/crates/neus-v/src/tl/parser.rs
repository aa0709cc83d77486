//! Concrete-syntax parser for temporal-logic specifications.
//!
//! The grammar (see `docs/grammar.md` for the EBNF) accepts word operators
//! AND, OR, NOT, UNTIL, ALWAYS, EVENTUALLY, NEXT, IMPLIES and the symbolic
//! aliases `&  |  !  U  G  F  X  ->`. Atoms are double-quoted phrases or bare
//! phrases; bare words that are not operator keywords merge into a single
//! atom, so `There is a boat AND The boat sails` is two atoms. Precedence,
//! tightest first: unary, UNTIL (left-associative), AND, OR, IMPLIES
//! (right-associative).

use super::ast::{Formula, Proposition, PropositionSet};
use super::TlError;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Until,
    Always,
    Eventually,
    Next,
    Implies,
    True,
    False,
    /// A double-quoted phrase, unescaped.
    Quoted(String),
    /// A bare word that is not an operator keyword.
    Word(String),
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::And => "'AND'".into(),
            Token::Or => "'OR'".into(),
            Token::Not => "'NOT'".into(),
            Token::Until => "'UNTIL'".into(),
            Token::Always => "'ALWAYS'".into(),
            Token::Eventually => "'EVENTUALLY'".into(),
            Token::Next => "'NEXT'".into(),
            Token::Implies => "'IMPLIES'".into(),
            Token::True => "'TRUE'".into(),
            Token::False => "'FALSE'".into(),
            Token::Quoted(s) => format!("\"{s}\""),
            Token::Word(s) => format!("'{s}'"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let ch = self.chars.next()?;
        if ch == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(ch)
    }

    fn error(&self, pos: Pos, message: impl Into<String>) -> TlError {
        TlError::Syntax {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn tokenize(mut self) -> Result<Vec<(Token, Pos)>, TlError> {
        let mut tokens = Vec::new();
        loop {
            while matches!(self.chars.peek(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            let pos = Pos {
                line: self.line,
                column: self.column,
            };
            let ch = match self.chars.peek() {
                None => break,
                Some(c) => *c,
            };
            let token = match ch {
                '(' => {
                    self.bump();
                    Token::LParen
                }
                ')' => {
                    self.bump();
                    Token::RParen
                }
                '&' => {
                    self.bump();
                    Token::And
                }
                '|' => {
                    self.bump();
                    Token::Or
                }
                '!' => {
                    self.bump();
                    Token::Not
                }
                '-' => {
                    self.bump();
                    match self.chars.peek() {
                        Some('>') => {
                            self.bump();
                            Token::Implies
                        }
                        _ => return Err(self.error(pos, "expected '>' after '-'")),
                    }
                }
                '"' => {
                    self.bump();
                    let mut phrase = String::new();
                    loop {
                        match self.bump() {
                            None => return Err(self.error(pos, "unterminated quoted atom")),
                            Some('"') => break,
                            Some('\\') => match self.bump() {
                                Some('"') => phrase.push('"'),
                                Some('\\') => phrase.push('\\'),
                                Some(other) => {
                                    phrase.push('\\');
                                    phrase.push(other);
                                }
                                None => return Err(self.error(pos, "unterminated quoted atom")),
                            },
                            Some(other) => phrase.push(other),
                        }
                    }
                    Token::Quoted(phrase)
                }
                c if c.is_alphanumeric() || c == '_' => {
                    let mut word = String::new();
                    while matches!(self.chars.peek(), Some(c) if c.is_alphanumeric() || *c == '_') {
                        word.push(self.bump().unwrap());
                    }
                    keyword_token(&word).unwrap_or(Token::Word(word))
                }
                other => {
                    return Err(self.error(pos, format!("unexpected character {other:?}")));
                }
            };
            tokens.push((token, pos));
        }
        Ok(tokens)
    }
}

fn keyword_token(word: &str) -> Option<Token> {
    match word {
        "AND" => Some(Token::And),
        "OR" => Some(Token::Or),
        "NOT" => Some(Token::Not),
        "UNTIL" | "U" => Some(Token::Until),
        "ALWAYS" | "G" => Some(Token::Always),
        "EVENTUALLY" | "F" => Some(Token::Eventually),
        "NEXT" | "X" => Some(Token::Next),
        "IMPLIES" => Some(Token::Implies),
        "TRUE" => Some(Token::True),
        "FALSE" => Some(Token::False),
        _ => None,
    }
}

/// How atoms get resolved while parsing.
enum AtomMode<'a> {
    /// Atoms must normalize to a member of the given set.
    Resolve(&'a PropositionSet),
    /// Atoms are collected on the fly (empty proposition set supplied).
    Collect(PropositionSet),
}

struct Parser<'a> {
    tokens: Vec<(Token, Pos)>,
    cursor: usize,
    atoms: AtomMode<'a>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<(Token, Pos)> {
        let item = self.tokens.get(self.cursor).cloned();
        if item.is_some() {
            self.cursor += 1;
        }
        item
    }

    fn last_pos(&self) -> Pos {
        self.tokens
            .last()
            .map(|&(_, p)| p)
            .unwrap_or(Pos { line: 1, column: 1 })
    }

    fn syntax_error(&self, pos: Pos, message: impl Into<String>) -> TlError {
        TlError::Syntax {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }

    fn expect_rparen(&mut self, open: Pos) -> Result<(), TlError> {
        match self.bump() {
            Some((Token::RParen, _)) => Ok(()),
            Some((tok, pos)) => {
                Err(self.syntax_error(pos, format!("expected ')' but found {}", tok.describe())))
            }
            None => Err(self.syntax_error(open, "unclosed '('")),
        }
    }

    fn resolve_atom(&mut self, phrase: &str, pos: Pos) -> Result<Formula, TlError> {
        let prop = Proposition::new(phrase).map_err(|_| TlError::UnknownAtom {
            phrase: phrase.to_string(),
        })?;
        match &mut self.atoms {
            AtomMode::Resolve(set) => {
                if set.contains(prop.id()) {
                    Ok(Formula::atom(prop.id()))
                } else {
                    let _ = pos;
                    Err(TlError::UnknownAtom {
                        phrase: phrase.to_string(),
                    })
                }
            }
            AtomMode::Collect(set) => {
                let id = prop.id().to_string();
                set.push_dedup(prop);
                Ok(Formula::atom(id))
            }
        }
    }

    // implies := or ( IMPLIES implies )?     right-associative
    fn parse_implies(&mut self) -> Result<Formula, TlError> {
        let lhs = self.parse_or()?;
        if matches!(self.peek(), Some(Token::Implies)) {
            self.bump();
            let rhs = self.parse_implies()?;
            Ok(lhs.implies(rhs))
        } else {
            Ok(lhs)
        }
    }

    // or := and ( OR and )*
    fn parse_or(&mut self) -> Result<Formula, TlError> {
        let mut lhs = self.parse_and()?;
        while matches!(self.peek(), Some(Token::Or)) {
            self.bump();
            let rhs = self.parse_and()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    // and := until ( AND until )*
    fn parse_and(&mut self) -> Result<Formula, TlError> {
        let mut lhs = self.parse_until()?;
        while matches!(self.peek(), Some(Token::And)) {
            self.bump();
            let rhs = self.parse_until()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    // until := unary ( UNTIL unary )*        left-associative
    fn parse_until(&mut self) -> Result<Formula, TlError> {
        let mut lhs = self.parse_unary()?;
        while matches!(self.peek(), Some(Token::Until)) {
            self.bump();
            let rhs = self.parse_unary()?;
            lhs = lhs.until(rhs);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<Formula, TlError> {
        match self.peek() {
            Some(Token::Not) => {
                self.bump();
                Ok(self.parse_unary()?.not())
            }
            Some(Token::Always) => {
                self.bump();
                Ok(self.parse_unary()?.always())
            }
            Some(Token::Eventually) => {
                self.bump();
                Ok(self.parse_unary()?.eventually())
            }
            Some(Token::Next) => {
                self.bump();
                Ok(self.parse_unary()?.next())
            }
            _ => self.parse_primary(),
        }
    }

    fn parse_primary(&mut self) -> Result<Formula, TlError> {
        match self.bump() {
            None => Err(self.syntax_error(self.last_pos(), "unexpected end of input")),
            Some((Token::True, _)) => Ok(Formula::True),
            Some((Token::False, _)) => Ok(Formula::False),
            Some((Token::LParen, open)) => {
                let inner = self.parse_implies()?;
                self.expect_rparen(open)?;
                Ok(inner)
            }
            Some((Token::Quoted(phrase), pos)) => self.resolve_atom(&phrase, pos),
            Some((Token::Word(first), pos)) => {
                // Consecutive bare words form one atom phrase.
                let mut phrase = first;
                while let Some(Token::Word(_)) = self.peek() {
                    if let Some((Token::Word(next), _)) = self.bump() {
                        phrase.push(' ');
                        phrase.push_str(&next);
                    }
                }
                self.resolve_atom(&phrase, pos)
            }
            Some((tok, pos)) => Err(self.syntax_error(
                pos,
                format!("expected a formula but found {}", tok.describe()),
            )),
        }
    }
}

fn parse_inner<'a>(text: &str, atoms: AtomMode<'a>) -> Result<(Formula, AtomMode<'a>), TlError> {
    let tokens = Lexer::new(text).tokenize()?;
    if tokens.is_empty() {
        return Err(TlError::EmptyFormula);
    }
    let mut parser = Parser {
        tokens,
        cursor: 0,
        atoms,
    };
    let formula = parser.parse_implies()?;
    if let Some((tok, pos)) = parser.bump() {
        return Err(TlError::Syntax {
            line: pos.line,
            column: pos.column,
            message: format!("unexpected trailing {}", tok.describe()),
        });
    }
    Ok((formula, parser.atoms))
}

/// Parses a specification string into a [`Formula`].
///
/// With a non-empty `props`, every atom must resolve (after normalization) to
/// a member; with an empty set, atoms are accepted and collected on the fly
/// (recoverable via [`Formula::collect_atoms`]).
pub fn parse_formula(text: &str, props: &PropositionSet) -> Result<Formula, TlError> {
    let mode = if props.is_empty() {
        AtomMode::Collect(PropositionSet::empty())
    } else {
        AtomMode::Resolve(props)
    };
    parse_inner(text, mode).map(|(formula, _)| formula)
}

/// Parses a specification string, collecting atoms on the fly, and returns
/// the formula together with the propositions in first-appearance order.
pub fn parse_formula_collecting(text: &str) -> Result<(Formula, PropositionSet), TlError> {
    let (formula, atoms) = parse_inner(text, AtomMode::Collect(PropositionSet::empty()))?;
    match atoms {
        AtomMode::Collect(set) => Ok((formula, set)),
        AtomMode::Resolve(_) => unreachable!(),
    }
}
