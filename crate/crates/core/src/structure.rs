//! Structure-equation DSL and Lie frames.
//!
//! ```text
//! name = heisenberg-n1     # optional
//! n = 1
//! de[5] = 2 e[1,2] + 2 e[3,4]
//! de[6] = 2 e[1,3] - 2 e[2,4]
//! de[7] = 2 e[1,4] + 2 e[2,3]
//! ```
//!
//! Indices are 1-based in the text and 0-based everywhere else. With
//! `e^{ij}(e_i,e_j) = 1` and `de^k(X,Y) = −e^k([X,Y])`, a term `a e[i,j]` in
//! the line for `de^k` gives `c^k_{ij} = −a`, `c^k_{ji} = a`.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{rat, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Rational,
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equation {
    pub k: usize,
    /// Sorted by `(i, j)`, nonzero coefficients only.
    pub terms: Vec<Term>,
}

/// Parsed structure file; indices are 1-based as written.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFile {
    pub name: String,
    pub n: usize,
    /// Sorted by `k`; coframe indices without a line have `de^k = 0`.
    pub equations: Vec<Equation>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("index {index} outside 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
    #[error("wedge term e[{i},{j}] requires i < j")]
    WedgeOrder { i: usize, j: usize },
    #[error("duplicate term e[{i},{j}]")]
    DuplicateTerm { i: usize, j: usize },
    #[error("second equation for de[{k}]")]
    DuplicateEquation { k: usize },
    #[error("duplicate `{0}` header")]
    DuplicateHeader(&'static str),
    #[error("missing `n = <int>` line")]
    MissingN,
    #[error("n must be positive")]
    ZeroN,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

/// Parse a structure file.
pub fn parse(text: &str) -> Result<StructureFile, ParseError> {
    let mut name: Option<String> = None;
    let mut n: Option<(usize, usize)> = None;
    // (k, k position, terms with positions)
    let mut raw: Vec<(usize, (usize, usize), Vec<(Term, (usize, usize))>)> = Vec::new();

    for (ln, full) in text.lines().enumerate() {
        let line_no = ln + 1;
        let body = full.split('#').next().unwrap_or("");
        let mut cur = Cursor { chars: body.chars().collect(), pos: 0, line: line_no };
        cur.skip_ws();
        if cur.at_end() {
            continue;
        }
        if cur.peek_word("de") {
            cur.pos += 2;
            cur.expect('[')?;
            let kpos = cur.here();
            let k = cur.uint()?;
            cur.expect(']')?;
            cur.expect('=')?;
            let terms = cur.rhs()?;
            raw.push((k, kpos, terms));
        } else {
            let key_pos = cur.here();
            let key = cur.ident()?;
            cur.expect('=')?;
            match key.as_str() {
                "name" => {
                    if name.is_some() {
                        return Err(err(key_pos, ParseErrorKind::DuplicateHeader("name")));
                    }
                    name = Some(cur.ident()?);
                }
                "n" => {
                    if n.is_some() {
                        return Err(err(key_pos, ParseErrorKind::DuplicateHeader("n")));
                    }
                    let p = cur.here();
                    n = Some((cur.uint()?, p.1));
                    if n.unwrap().0 == 0 {
                        return Err(err(p, ParseErrorKind::ZeroN));
                    }
                }
                other => {
                    return Err(err(key_pos, ParseErrorKind::Syntax(format!("unknown header `{other}`"))))
                }
            }
            cur.skip_ws();
            if !cur.at_end() {
                return Err(cur.syntax("unexpected trailing input"));
            }
        }
    }

    let Some((n, _)) = n else {
        return Err(ParseError { line: 1, col: 1, kind: ParseErrorKind::MissingN });
    };
    let max = 4 * n + 3;
    let mut equations: Vec<Equation> = Vec::new();
    for (k, kpos, terms) in raw {
        if k == 0 || k > max {
            return Err(err(kpos, ParseErrorKind::IndexOutOfRange { index: k, max }));
        }
        if equations.iter().any(|e| e.k == k) {
            return Err(err(kpos, ParseErrorKind::DuplicateEquation { k }));
        }
        let mut out: Vec<Term> = Vec::new();
        for (t, pos) in terms {
            for idx in [t.i, t.j] {
                if idx == 0 || idx > max {
                    return Err(err(pos, ParseErrorKind::IndexOutOfRange { index: idx, max }));
                }
            }
            if t.i >= t.j {
                return Err(err(pos, ParseErrorKind::WedgeOrder { i: t.i, j: t.j }));
            }
            if out.iter().any(|o| o.i == t.i && o.j == t.j) {
                return Err(err(pos, ParseErrorKind::DuplicateTerm { i: t.i, j: t.j }));
            }
            out.push(t);
        }
        out.retain(|t| !t.coeff.is_zero());
        out.sort_by_key(|t| (t.i, t.j));
        equations.push(Equation { k, terms: out });
    }
    equations.sort_by_key(|e| e.k);
    Ok(StructureFile { name: name.unwrap_or_default(), n, equations })
}

fn err(pos: (usize, usize), kind: ParseErrorKind) -> ParseError {
    ParseError { line: pos.0, col: pos.1, kind }
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

impl Cursor {
    fn here(&self) -> (usize, usize) {
        (self.line, self.pos + 1)
    }

    fn syntax(&self, msg: &str) -> ParseError {
        err(self.here(), ParseErrorKind::Syntax(msg.to_string()))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn peek_word(&self, w: &str) -> bool {
        let wc: Vec<char> = w.chars().collect();
        self.chars[self.pos..].starts_with(&wc)
            && !self.chars.get(self.pos + wc.len()).is_some_and(|c| c.is_alphanumeric() || *c == '_')
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{c}`")))
        }
    }

    fn uint(&mut self) -> Result<usize, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            self.pos = start;
            return Err(self.syntax("expected an unsigned integer"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| err((self.line, start + 1), ParseErrorKind::Syntax("integer too large".into())))
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len()
            && (self.chars[self.pos].is_alphanumeric() || matches!(self.chars[self.pos], '_' | '-' | '.'))
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("expected an identifier"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    /// `<signed term> (('+'|'-') <term>)*`, or a literal `0`.
    fn rhs(&mut self) -> Result<Vec<(Term, (usize, usize))>, ParseError> {
        let mut terms = Vec::new();
        let mut sign = 1i64;
        match self.peek() {
            Some('-') => {
                sign = -1;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            _ => {}
        }
        if self.peek() == Some('0') && self.rest_is_zero() {
            self.pos = self.chars.len();
            return Ok(terms);
        }
        loop {
            terms.push(self.term(sign)?);
            match self.peek() {
                None => return Ok(terms),
                Some('+') => sign = 1,
                Some('-') => sign = -1,
                Some(_) => return Err(self.syntax("expected `+`, `-` or end of line")),
            }
            self.pos += 1;
        }
    }

    fn rest_is_zero(&self) -> bool {
        let rest: String = self.chars[self.pos..].iter().collect();
        rest.trim() == "0"
    }

    fn term(&mut self, sign: i64) -> Result<(Term, (usize, usize)), ParseError> {
        let start = {
            self.skip_ws();
            self.here()
        };
        let mut coeff = Rational::one();
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            let num = self.uint()?;
            let mut den = 1usize;
            if self.peek() == Some('/') {
                self.pos += 1;
                den = self.uint()?;
                if den == 0 {
                    return Err(self.syntax("zero denominator"));
                }
            }
            let (num, den) = (i64::try_from(num), i64::try_from(den));
            let (Ok(num), Ok(den)) = (num, den) else {
                return Err(self.syntax("coefficient too large"));
            };
            coeff = rat(num, den);
            if self.peek() == Some('*') {
                self.pos += 1;
            }
        }
        self.skip_ws();
        if !self.peek_word("e") {
            return Err(self.syntax("expected `e[i,j]`"));
        }
        self.pos += 1;
        self.expect('[')?;
        let i = self.uint()?;
        self.expect(',')?;
        let j = self.uint()?;
        self.expect(']')?;
        if sign < 0 {
            coeff = -coeff;
        }
        Ok((Term { coeff, i, j }, start))
    }
}

impl fmt::Display for StructureFile {
    /// Canonical text: terms sorted by `(i, j)`, coefficients in lowest terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.name.is_empty() {
            writeln!(f, "name = {}", self.name)?;
        }
        writeln!(f, "n = {}", self.n)?;
        for eq in &self.equations {
            write!(f, "de[{}] =", eq.k)?;
            if eq.terms.is_empty() {
                write!(f, " 0")?;
            }
            for (idx, t) in eq.terms.iter().enumerate() {
                let neg = t.coeff < Rational::zero();
                let mag = if neg { -t.coeff.clone() } else { t.coeff.clone() };
                match (idx, neg) {
                    (0, true) => write!(f, " -")?,
                    (0, false) => {}
                    (_, true) => write!(f, " -")?,
                    (_, false) => write!(f, " +")?,
                }
                if mag.is_one() {
                    write!(f, " e[{},{}]", t.i, t.j)?;
                } else {
                    write!(f, " {} e[{},{}]", mag, t.i, t.j)?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Canonical text form of a structure file.
pub fn serialize(sf: &StructureFile) -> String {
    sf.to_string()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    /// Indices are 1-based, as in the input file.
    #[error("not a Lie algebra: Jacobi fails on (e{i}, e{j}, e{l}), component e{p} = {value}")]
    Jacobi { i: usize, j: usize, l: usize, p: usize, value: Rational },
}

/// Structure constants `c^k_{ij}` of a `(4n+3)`-dimensional Lie algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieFrame {
    pub n: usize,
    pub dim: usize,
    c: Vec<Rational>,
}

impl LieFrame {
    /// Frame from raw constants, antisymmetrized and Jacobi-checked.
    /// `f(k, i, j)` is read for `i < j` only.
    pub fn from_constants(n: usize, f: impl Fn(usize, usize, usize) -> Rational) -> Result<Self, FrameError> {
        let dim = 4 * n + 3;
        let mut c = vec![Rational::zero(); dim * dim * dim];
        for k in 0..dim {
            for i in 0..dim {
                for j in i + 1..dim {
                    let v = f(k, i, j);
                    c[(k * dim + j) * dim + i] = -v.clone();
                    c[(k * dim + i) * dim + j] = v;
                }
            }
        }
        let fr = LieFrame { n, dim, c };
        fr.check_jacobi()?;
        Ok(fr)
    }

    /// `c^k_{ij}`, 0-based.
    pub fn c(&self, k: usize, i: usize, j: usize) -> &Rational {
        &self.c[(k * self.dim + i) * self.dim + j]
    }

    /// First Jacobi violation, if any.
    pub fn check_jacobi(&self) -> Result<(), FrameError> {
        match jacobi_violation(self) {
            None => Ok(()),
            Some((i, j, l, p, value)) => {
                Err(FrameError::Jacobi { i: i + 1, j: j + 1, l: l + 1, p: p + 1, value })
            }
        }
    }
}

fn jacobi_violation(fr: &LieFrame) -> Option<(usize, usize, usize, usize, Rational)> {
    let d = fr.dim;
    for i in 0..d {
        for j in i + 1..d {
            for l in j + 1..d {
                for p in 0..d {
                    let mut v = Rational::zero();
                    for (a, b, e) in [(i, j, l), (j, l, i), (l, i, j)] {
                        for m in 0..d {
                            let x = fr.c(m, a, b);
                            if !x.is_zero() {
                                v += x * fr.c(p, m, e);
                            }
                        }
                    }
                    if !v.is_zero() {
                        return Some((i, j, l, p, v));
                    }
                }
            }
        }
    }
    None
}

/// Bracket constants of a parsed file, Jacobi-checked.
pub fn to_lie_frame(sf: &StructureFile) -> Result<LieFrame, FrameError> {
    let dim = 4 * sf.n + 3;
    let mut a = vec![Rational::zero(); dim * dim * dim];
    for eq in &sf.equations {
        for t in &eq.terms {
            a[((eq.k - 1) * dim + t.i - 1) * dim + t.j - 1] = t.coeff.clone();
        }
    }
    LieFrame::from_constants(sf.n, |k, i, j| -a[(k * dim + i) * dim + j].clone())
}

/// `d(de^k) = 0` for every `k`, evaluated by wedge expansion of the file's
/// coefficients (independent of the bracket route). Returns the first
/// nonzero component `(k, a, b, c)` (0-based, `a<b<c`) if any.
pub fn d_squared_violation(sf: &StructureFile) -> Option<(usize, usize, usize, usize)> {
    let dim = 4 * sf.n + 3;
    // D[k][a][b] = de^k(e_a, e_b)
    let mut dform = vec![Rational::zero(); dim * dim * dim];
    for eq in &sf.equations {
        for t in &eq.terms {
            let (k, i, j) = (eq.k - 1, t.i - 1, t.j - 1);
            dform[(k * dim + i) * dim + j] = t.coeff.clone();
            dform[(k * dim + j) * dim + i] = -t.coeff.clone();
        }
    }
    let two = |k: usize, a: usize, b: usize| &dform[(k * dim + a) * dim + b];
    // (α∧e^j)(x,y,z) = α(x,y)δ^j_z + α(y,z)δ^j_x + α(z,x)δ^j_y
    let wedge = |i: usize, j: usize, x: usize, y: usize, z: usize| -> Rational {
        let mut v = Rational::zero();
        if z == j {
            v += two(i, x, y);
        }
        if x == j {
            v += two(i, y, z);
        }
        if y == j {
            v += two(i, z, x);
        }
        v
    };
    for eq in &sf.equations {
        for a in 0..dim {
            for b in a + 1..dim {
                for c in b + 1..dim {
                    let mut v = Rational::zero();
                    for t in &eq.terms {
                        let (i, j) = (t.i - 1, t.j - 1);
                        // d(e^i∧e^j) = de^i∧e^j − e^i∧de^j = de^i∧e^j − de^j∧e^i
                        let w = wedge(i, j, a, b, c) - wedge(j, i, a, b, c);
                        if !w.is_zero() {
                            v += &t.coeff * w;
                        }
                    }
                    if !v.is_zero() {
                        return Some((eq.k - 1, a, b, c));
                    }
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use proptest::prelude::*;

    #[test]
    fn parses_heisenberg_line() {
        let sf = parse("n = 1\nde[5] = 2 e[1,2] + 2 e[3,4]").unwrap();
        assert_eq!(sf.equations.len(), 1);
        let eq = &sf.equations[0];
        assert_eq!(eq.k, 5);
        assert_eq!(eq.terms, vec![Term { coeff: rat(2, 1), i: 1, j: 2 }, Term { coeff: rat(2, 1), i: 3, j: 4 }]);
    }

    #[test]
    fn empty_block_is_abelian() {
        let sf = parse("n = 1\n").unwrap();
        let fr = to_lie_frame(&sf).unwrap();
        assert!((0..7).all(|k| (0..7).all(|i| (0..7).all(|j| fr.c(k, i, j).is_zero()))));
    }

    #[test]
    fn wedge_order_is_enforced() {
        let e = parse("n = 1\nde[5] = 2 e[2,1]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::WedgeOrder { i: 2, j: 1 });
        assert_eq!((e.line, e.col), (2, 9));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse("n = 1\n\nde[5] = 2 e[1,2] +").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        let e = parse("n = 1\nde[9] = e[1,2]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::IndexOutOfRange { index: 9, max: 7 });
        let e = parse("n = 1\nde[5] = e[1,2] - 3 e[1,2]").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateTerm { i: 1, j: 2 });
        assert_eq!(parse("de[5] = e[1,2]").unwrap_err().kind, ParseErrorKind::MissingN);
    }

    #[test]
    fn accepts_fractions_stars_comments_and_zero() {
        let sf = parse("name = t # comment\nn=1\nde[1] = 0\nde[5]=-1/2*e[6,7]+3/6e[1,2]").unwrap();
        assert_eq!(sf.name, "t");
        assert!(sf.equations[0].terms.is_empty());
        assert_eq!(
            sf.equations[1].terms,
            vec![Term { coeff: rat(1, 2), i: 1, j: 2 }, Term { coeff: rat(-1, 2), i: 6, j: 7 }]
        );
    }

    #[test]
    fn heisenberg_constants() {
        let fr = to_lie_frame(&parse(builtins::HEISENBERG_N1).unwrap()).unwrap();
        assert_eq!(*fr.c(4, 0, 1), rat(-2, 1));
        assert_eq!(*fr.c(4, 2, 3), rat(-2, 1));
        assert_eq!(*fr.c(4, 1, 0), rat(2, 1));
        assert_eq!(*fr.c(5, 1, 3), rat(2, 1));
        assert_eq!(*fr.c(6, 1, 2), rat(-2, 1));
    }

    #[test]
    fn builtins_are_lie_algebras_and_round_trip() {
        for b in builtins::ALL {
            let sf = parse(b.text).unwrap();
            assert_eq!(sf.name, b.name);
            let again = parse(&serialize(&sf)).unwrap();
            assert_eq!(sf, again, "{}", b.name);
            assert!(to_lie_frame(&sf).is_ok(), "{}", b.name);
            assert_eq!(d_squared_violation(&sf), None, "{}", b.name);
        }
    }

    #[test]
    fn jacobi_violation_names_the_triple() {
        let sf = parse("n = 1\nde[5] = e[1,2]\nde[1] = e[3,4]").unwrap();
        match to_lie_frame(&sf) {
            Err(FrameError::Jacobi { i, j, l, p, .. }) => assert_eq!((i, j, l, p), (2, 3, 4, 5)),
            other => panic!("expected a Jacobi failure, got {other:?}"),
        }
        assert!(d_squared_violation(&sf).is_some());
    }

    #[test]
    fn bracket_pair_closing_on_itself_satisfies_jacobi() {
        let sf = parse("n = 1\nde[5] = e[1,2]\nde[1] = e[2,5]").unwrap();
        assert!(to_lie_frame(&sf).is_ok());
        assert_eq!(d_squared_violation(&sf), None);
    }

    fn perturbed(base: &StructureFile, k: usize, i: usize, j: usize, a: i64) -> StructureFile {
        let mut sf = base.clone();
        let term = Term { coeff: rat(a, 1), i, j };
        match sf.equations.iter_mut().find(|e| e.k == k) {
            Some(eq) => {
                eq.terms.retain(|t| (t.i, t.j) != (i, j));
                eq.terms.push(term);
                eq.terms.sort_by_key(|t| (t.i, t.j));
            }
            None => {
                sf.equations.push(Equation { k, terms: vec![term] });
                sf.equations.sort_by_key(|e| e.k);
            }
        }
        sf
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn d_squared_agrees_with_jacobi(
            which in 0usize..3,
            k in 1usize..=7, i in 1usize..=6, dj in 1usize..=6, a in -2i64..=2,
        ) {
            let j = (i + dj).min(7);
            prop_assume!(i < j);
            let base = parse([builtins::HEISENBERG_N1, builtins::G1, builtins::G3][which]).unwrap();
            let sf = perturbed(&base, k, i, j, a);
            prop_assert_eq!(to_lie_frame(&sf).is_ok(), d_squared_violation(&sf).is_none());
        }

        #[test]
        fn serialization_round_trips(
            terms in proptest::collection::vec((1usize..=7, 1usize..=6, 1usize..=6, -9i64..=9, 1i64..=5), 0..12),
        ) {
            let mut sf = StructureFile { name: "p".into(), n: 1, equations: Vec::new() };
            for (k, i, dj, a, d) in terms {
                let j = (i + dj).min(7);
                if i < j && a != 0 {
                    sf = perturbed(&sf, k, i, j, 1);
                    let eq = sf.equations.iter_mut().find(|e| e.k == k).unwrap();
                    eq.terms.iter_mut().find(|t| (t.i, t.j) == (i, j)).unwrap().coeff = rat(a, d);
                }
            }
            prop_assert_eq!(parse(&serialize(&sf)).unwrap(), sf);
        }
    }
}
