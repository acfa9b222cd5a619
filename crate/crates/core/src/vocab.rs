//! Token vocabulary and the bracket grammar that decides candidate validity.
//!
//! Index 0 is always the `BEGIN` sentinel and index 1 the `END` sentinel.
//! `BEGIN` only ever appears as decoding context; the policy emits the
//! remaining `len() - 1` tokens, so action `a` maps to vocabulary index `a + 1`.

use crate::error::{Error, Result};

pub const BEGIN: usize = 0;
pub const END: usize = 1;

const BEGIN_SYMBOL: &str = "<s>";
const END_SYMBOL: &str = "</s>";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<String>,
    brackets: Option<(usize, usize)>,
}

impl Vocabulary {
    /// Builds a vocabulary from the non-sentinel symbols. When both `(` and `)`
    /// are present they act as a branch grammar.
    pub fn new<S: AsRef<str>>(symbols: &[S]) -> Result<Self> {
        let mut all = vec![BEGIN_SYMBOL.to_string(), END_SYMBOL.to_string()];
        for s in symbols {
            let s = s.as_ref();
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!("bad symbol `{s}`")));
            }
            if all.iter().any(|x| x == s) {
                return Err(Error::InvalidArgument(format!("duplicate symbol `{s}`")));
            }
            all.push(s.to_string());
        }
        if all.len() < 3 {
            return Err(Error::InvalidArgument(
                "vocabulary needs at least one symbol besides the sentinels".into(),
            ));
        }
        let open = all.iter().position(|s| s == "(");
        let close = all.iter().position(|s| s == ")");
        let brackets = match (open, close) {
            (Some(o), Some(c)) => Some((o, c)),
            _ => None,
        };
        Ok(Vocabulary {
            symbols: all,
            brackets,
        })
    }

    /// The default 12-token vocabulary: sentinels, eight atoms and a bracket pair.
    pub fn standard() -> Self {
        Self::new(&["A", "B", "C", "D", "E", "F", "G", "H", "(", ")"]).expect("static vocabulary")
    }

    /// Total size including both sentinels.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of emittable actions (everything except `BEGIN`).
    pub fn action_count(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn symbol(&self, index: usize) -> &str {
        &self.symbols[index]
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Symbols excluding the two sentinels, in index order.
    pub fn atoms(&self) -> &[String] {
        &self.symbols[2..]
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.symbols
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| Error::UnknownToken(symbol.to_string()))
    }

    /// Parses a whitespace-separated token string such as `"C D ( A ) C"`.
    pub fn parse(&self, text: &str) -> Result<Vec<usize>> {
        text.split_whitespace()
            .map(|t| {
                let i = self.index_of(t)?;
                if i == BEGIN || i == END {
                    Err(Error::InvalidArgument(format!(
                        "sentinel `{t}` inside a token sequence"
                    )))
                } else {
                    Ok(i)
                }
            })
            .collect()
    }

    pub fn render(&self, tokens: &[usize]) -> String {
        tokens
            .iter()
            .map(|&t| self.symbols[t].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Grammar check: nonempty, no sentinels, balanced brackets and no empty
    /// `( )` branch.
    pub fn is_well_formed(&self, tokens: &[usize]) -> bool {
        if tokens.is_empty() || tokens.iter().any(|&t| t == BEGIN || t == END) {
            return false;
        }
        let Some((open, close)) = self.brackets else {
            return true;
        };
        let mut depth = 0i64;
        let mut prev = None;
        for &t in tokens {
            if t == open {
                depth += 1;
            } else if t == close {
                if depth == 0 || prev == Some(open) {
                    return false;
                }
                depth -= 1;
            }
            prev = Some(t);
        }
        depth == 0
    }

    #[inline]
    pub fn action_to_token(action: usize) -> usize {
        action + 1
    }

    #[inline]
    pub fn token_to_action(token: usize) -> usize {
        debug_assert!(token != BEGIN);
        token - 1
    }
}
