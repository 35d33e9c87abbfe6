//! The graph text format:
//!
//! ```text
//! graph W2 { n=1; m=2; v1: b1 b2; }
//! ```
//!
//! One block per graph; per-vertex lines list out-edge targets (`v<j>` or
//! `b<j>`, 1-based) in edge-enumeration order. Vertex lines appear in label
//! order; an omitted line means no out-edges. `#` starts a comment.

use std::fmt;

use crate::graph::{canonicalize, DirectedGraph, OrientedGraphTerm, Target};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphFileError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("graph {graph}: {msg}")]
    Semantic { graph: String, msg: String },
}

/// A parsed graph with its name, the graph as written, and its canonical term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedGraph {
    pub name: String,
    pub labeled: DirectedGraph,
    pub term: OrientedGraphTerm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Int(usize),
    Sym(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
        }
    }
}

struct Lexer {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

fn lex(text: &str) -> Result<Lexer, GraphFileError> {
    let mut toks = Vec::new();
    let (mut line, mut col) = (1, 1);
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let (l0, c0) = (line, col);
        if ch == '\n' {
            line += 1;
            col = 1;
            i += 1;
        } else if ch.is_whitespace() {
            col += 1;
            i += 1;
        } else if ch == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if ch.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse().map_err(|_| GraphFileError::Syntax {
                line: l0,
                col: c0,
                msg: format!("integer `{s}` too large"),
            })?;
            col += i - start;
            toks.push((Tok::Int(v), l0, c0));
        } else if ch.is_alphanumeric() || ch == '_' || ch == '-' || ch == '\'' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '-' | '\'' | '.')) {
                i += 1;
            }
            col += i - start;
            toks.push((Tok::Word(chars[start..i].iter().collect()), l0, c0));
        } else if "{};:=".contains(ch) {
            toks.push((Tok::Sym(ch), l0, c0));
            col += 1;
            i += 1;
        } else {
            return Err(GraphFileError::Syntax {
                line: l0,
                col: c0,
                msg: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(Lexer {
        toks,
        pos: 0,
        end: (line, col),
    })
}

impl Lexer {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.1, t.2)).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: String) -> Result<T, GraphFileError> {
        let (line, col) = self.here();
        Err(GraphFileError::Syntax { line, col, msg })
    }

    fn next(&mut self, what: &str) -> Result<(Tok, usize, usize), GraphFileError> {
        match self.toks.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => self.err(format!("unexpected end of input, expected {what}")),
        }
    }

    fn sym(&mut self, c: char) -> Result<(), GraphFileError> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let t = t.to_string();
                self.err(format!("expected `{c}`, found {t}"))
            }
            None => self.err(format!("unexpected end of input, expected `{c}`")),
        }
    }

    fn int(&mut self) -> Result<usize, GraphFileError> {
        match self.next("an integer")? {
            (Tok::Int(v), _, _) => Ok(v),
            (t, line, col) => Err(GraphFileError::Syntax {
                line,
                col,
                msg: format!("expected an integer, found {t}"),
            }),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), GraphFileError> {
        match self.next(kw)? {
            (Tok::Word(w), _, _) if w == kw => Ok(()),
            (t, line, col) => Err(GraphFileError::Syntax {
                line,
                col,
                msg: format!("expected `{kw}`, found {t}"),
            }),
        }
    }
}

/// Splits `v12`/`b3` into its letter and 1-based index.
fn vertex_ref(w: &str) -> Option<(char, usize)> {
    let mut cs = w.chars();
    let head = cs.next()?;
    let rest: String = cs.collect();
    if !(head == 'v' || head == 'b') || rest.is_empty() || !rest.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    rest.parse().ok().map(|i| (head, i))
}

/// Parses every graph block of `text`, in order.
pub fn parse_graph_file(text: &str) -> Result<Vec<NamedGraph>, GraphFileError> {
    let mut lx = lex(text)?;
    let mut out = Vec::new();
    while lx.peek().is_some() {
        lx.keyword("graph")?;
        let name = match lx.next("a graph name")? {
            (Tok::Word(w), _, _) => w,
            (Tok::Int(i), _, _) => i.to_string(),
            (t, line, col) => {
                return Err(GraphFileError::Syntax {
                    line,
                    col,
                    msg: format!("expected a graph name, found {t}"),
                })
            }
        };
        lx.sym('{')?;
        lx.keyword("n")?;
        lx.sym('=')?;
        let n = lx.int()?;
        lx.sym(';')?;
        lx.keyword("m")?;
        lx.sym('=')?;
        let m = lx.int()?;
        lx.sym(';')?;
        let semantic = |msg: String| GraphFileError::Semantic {
            graph: name.clone(),
            msg,
        };
        let mut out_edges: Vec<Vec<Target>> = vec![Vec::new(); n];
        let mut last = 0usize;
        loop {
            match lx.peek() {
                Some(Tok::Sym('}')) => {
                    lx.pos += 1;
                    break;
                }
                Some(Tok::Word(_)) => {}
                Some(t) => {
                    let t = t.to_string();
                    return lx.err(format!("expected a vertex line or `}}`, found {t}"));
                }
                None => return lx.err("unexpected end of input, expected `}`".to_string()),
            }
            let (tok, line, col) = lx.next("a vertex")?;
            let Tok::Word(w) = tok else { unreachable!() };
            let (kind, idx) = vertex_ref(&w).ok_or_else(|| GraphFileError::Syntax {
                line,
                col,
                msg: format!("expected a vertex `v<i>`, found `{w}`"),
            })?;
            if kind == 'b' {
                return Err(semantic(format!("boundary vertex {w} cannot be the source of edges")));
            }
            if idx == 0 || idx > n {
                return Err(semantic(format!("vertex {w} out of range (n={n})")));
            }
            if idx <= last {
                return Err(semantic(format!("vertex line {w} out of label order")));
            }
            last = idx;
            lx.sym(':')?;
            loop {
                match lx.peek() {
                    Some(Tok::Sym(';')) => {
                        lx.pos += 1;
                        break;
                    }
                    Some(Tok::Word(_)) => {}
                    Some(t) => {
                        let t = t.to_string();
                        return lx.err(format!("expected a target or `;`, found {t}"));
                    }
                    None => return lx.err("unexpected end of input, expected `;`".to_string()),
                }
                let (tok, line, col) = lx.next("a target")?;
                let Tok::Word(t) = tok else { unreachable!() };
                let (kind, j) = vertex_ref(&t).ok_or_else(|| GraphFileError::Syntax {
                    line,
                    col,
                    msg: format!("expected a target `v<j>` or `b<j>`, found `{t}`"),
                })?;
                let target = match kind {
                    'v' if j >= 1 && j <= n => Target::Internal(j - 1),
                    'b' if j >= 1 && j <= m => Target::Boundary(j - 1),
                    _ => return Err(semantic(format!("dangling target {t} (n={n}, m={m})"))),
                };
                out_edges[idx - 1].push(target);
            }
        }
        let labeled = DirectedGraph::new(n, m, out_edges).map_err(|e| semantic(e.to_string()))?;
        let term = canonicalize(&labeled);
        out.push(NamedGraph { name, labeled, term });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_w2() {
        let gs = parse_graph_file("graph W2 { n=1; m=2; v1: b1 b2; }").unwrap();
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].name, "W2");
        assert_eq!(gs[0].term.graph.key(), "1,2;[b1 b2]");
    }

    #[test]
    fn two_graphs_in_order() {
        let text = "graph A { n=1; m=1; v1: b1; }\n# comment\ngraph B { n=0; m=2; }\n";
        let gs = parse_graph_file(text).unwrap();
        assert_eq!(gs.iter().map(|g| g.name.as_str()).collect::<Vec<_>>(), ["A", "B"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_graph_file("graph X { n=1; m=2; v1: b9; }"),
            Err(GraphFileError::Semantic { graph, .. }) if graph == "X"
        ));
        assert!(matches!(
            parse_graph_file("graph X { n=1; m=2; b1: v1; }"),
            Err(GraphFileError::Semantic { .. })
        ));
        assert_eq!(
            parse_graph_file("graph X {\n n=1 m=2; }"),
            Err(GraphFileError::Syntax {
                line: 2,
                col: 6,
                msg: "expected `;`, found `m`".into()
            })
        );
        assert!(matches!(
            parse_graph_file("graph X { n=1; m=2; v1: b1"),
            Err(GraphFileError::Syntax { .. })
        ));
    }
}
