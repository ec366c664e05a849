use super::{Axis, AxisExpr, Grammar, ParseMode, PatternBlock, PatternError, Result, TrigFn, TrigTerm, MAX_STEPS};

/// Parses four labeled lines into a validated [`PatternBlock`].
///
/// Labels are case-insensitive and may appear in any order; blank lines are
/// skipped. In [`ParseMode::Auto`] each line picks its grammar by whether it
/// contains a `[`.
pub fn parse_block(text: &str, mode: ParseMode) -> Result<PatternBlock> {
    let mut axes: [Option<AxisExpr>; 4] = [None, None, None, None];
    let mut any_improved = false;
    let mut offset = 0usize;

    for raw_line in text.split_inclusive('\n') {
        let line_start = offset;
        offset += raw_line.len();
        let line = raw_line.trim_end_matches(['\n', '\r']);
        let lead = line.len() - line.trim_start().len();
        let body = line.trim_start();
        if body.is_empty() {
            continue;
        }

        let mut chars = body.char_indices();
        let (_, label) = chars.next().expect("non-empty");
        let axis = Axis::from_label(label).ok_or(PatternError::Lex { position: line_start + lead })?;
        let after_label = &body[label.len_utf8()..];
        let colon_rel = after_label.len() - after_label.trim_start().len();
        if !after_label[colon_rel..].starts_with(':') {
            return Err(PatternError::Lex { position: line_start + lead + label.len_utf8() + colon_rel });
        }
        let content_start = line_start + lead + label.len_utf8() + colon_rel + 1;
        let content = &after_label[colon_rel + 1..];

        let improved = match mode {
            ParseMode::Baseline => false,
            ParseMode::Improved => true,
            ParseMode::Auto => content.contains('['),
        };
        let expr = if improved {
            any_improved = true;
            ImprovedParser::new(content, content_start).parse_line()?
        } else {
            AxisExpr::DigitRun(lex_digit_run_at(content, content_start)?)
        };

        let slot = &mut axes[axis as usize];
        if slot.is_some() {
            return Err(PatternError::DuplicateAxis(axis));
        }
        *slot = Some(expr);
    }

    let mut take = |a: Axis| axes[a as usize].take().ok_or(PatternError::MissingAxis(a));
    let x = take(Axis::X)?;
    let y = take(Axis::Y)?;
    let z = take(Axis::Z)?;
    let g = take(Axis::G)?;
    let grammar = if any_improved || mode == ParseMode::Improved {
        Grammar::Improved
    } else {
        Grammar::Baseline
    };
    PatternBlock::new(x, y, z, g, grammar)
}

/// Lexes an unseparated run of `-1`, `0` and `1` tokens. Whitespace and
/// commas between tokens are tolerated.
pub fn lex_digit_run(text: &str) -> Result<Vec<i8>> {
    lex_digit_run_at(text, 0)
}

fn lex_digit_run_at(text: &str, base: usize) -> Result<Vec<i8>> {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'0' => out.push(0),
            b'1' => out.push(1),
            b'-' if bytes.get(i + 1) == Some(&b'1') => {
                out.push(-1);
                i += 1;
            }
            b' ' | b'\t' | b',' | b'\r' => {}
            _ => return Err(PatternError::Lex { position: base + i }),
        }
        i += 1;
    }
    Ok(out)
}

/// Recursive-descent parser for the bracketed grammar.
///
/// ```text
/// line  := term ('+' term)*  |  ε
/// term  := '[' inner ']' ('*' int)?
/// inner := ε | number (',' number)* | trig 'for' ident 'in' 'range' '(' int ')'
/// trig  := ['-'] [number '*'] fn '(' affine ')'
/// ```
struct ImprovedParser<'a> {
    src: &'a str,
    pos: usize,
    base: usize,
}

impl<'a> ImprovedParser<'a> {
    fn new(src: &'a str, base: usize) -> Self {
        Self { src, pos: 0, base }
    }

    fn lex_err(&self) -> PatternError {
        PatternError::Lex { position: self.base + self.pos }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.lex_err())
        }
    }

    fn parse_line(mut self) -> Result<AxisExpr> {
        self.skip_ws();
        if self.peek().is_none() {
            return Ok(AxisExpr::empty());
        }
        let mut parts = vec![self.term()?];
        loop {
            self.skip_ws();
            match self.peek() {
                None => break,
                Some('+') => {
                    self.pos += 1;
                    parts.push(self.term()?);
                }
                Some(_) => return Err(self.lex_err()),
            }
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { AxisExpr::Concat(parts) })
    }

    fn term(&mut self) -> Result<AxisExpr> {
        self.skip_ws();
        let term_start = self.pos;
        self.expect('[')?;
        let inner_start = self.pos;
        let close = self.matching_bracket().ok_or_else(|| self.lex_err())?;
        let inner = &self.src[inner_start..close];

        let base_expr = if inner.trim().is_empty() {
            self.pos = close + 1;
            None
        } else if looks_like_comprehension(inner) {
            let term = parse_comprehension(inner)
                .ok_or_else(|| PatternError::UnsupportedExpression(self.src[term_start..=close].trim().to_string()))?;
            self.pos = close + 1;
            Some(AxisExpr::Trig(term))
        } else {
            let values = self.number_list(close)?;
            self.pos = close + 1;
            Some(list_expr(values))
        };

        let count = if self.eat('*') { Some(self.integer()?) } else { None };
        if let (Some(e), Some(n)) = (&base_expr, count) {
            let total = e.len().saturating_mul(n);
            if total > MAX_STEPS {
                return Err(PatternError::TooLong(total));
            }
        }
        Ok(match (base_expr, count) {
            (None, _) => AxisExpr::empty(),
            (Some(AxisExpr::Concat(parts)), Some(n)) => {
                AxisExpr::Concat(parts.iter().cloned().cycle().take(parts.len() * n).collect())
            }
            (Some(AxisExpr::Repeat { value, .. }), Some(n)) => AxisExpr::Repeat { value, count: n },
            (Some(AxisExpr::DigitRun(v)), Some(n)) => AxisExpr::DigitRun(v.repeat(n)),
            (Some(e @ AxisExpr::Trig(_)), Some(n)) => AxisExpr::Concat(vec![e; n]),
            (Some(e), None) => e,
        })
    }

    /// Index of the `]` closing the bracket opened just before `self.pos`.
    fn matching_bracket(&self) -> Option<usize> {
        let mut depth = 1usize;
        for (i, c) in self.src[self.pos..].char_indices() {
            match c {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(self.pos + i);
                    }
                }
                _ => {}
            }
        }
        None
    }

    fn number_list(&mut self, end: usize) -> Result<Vec<f64>> {
        let mut out = vec![self.number()?];
        loop {
            self.skip_ws();
            if self.pos >= end {
                break;
            }
            self.expect(',')?;
            out.push(self.number()?);
        }
        if self.pos != end {
            return Err(self.lex_err());
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = scan_number(rest);
        if len == 0 {
            return Err(self.lex_err());
        }
        let v: f64 = rest[..len].parse().map_err(|_| self.lex_err())?;
        self.pos += len;
        Ok(v)
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest.bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 {
            return Err(self.lex_err());
        }
        let v = rest[..len].parse().map_err(|_| self.lex_err())?;
        self.pos += len;
        Ok(v)
    }
}

fn list_expr(values: Vec<f64>) -> AxisExpr {
    if values.len() == 1 {
        return AxisExpr::Repeat { value: values[0], count: 1 };
    }
    if values.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)) {
        AxisExpr::DigitRun(values.iter().map(|&v| v as i8).collect())
    } else {
        AxisExpr::Concat(values.into_iter().map(|v| AxisExpr::Repeat { value: v, count: 1 }).collect())
    }
}

/// Length of a leading signed decimal literal (`-0.5`, `12`, `+3.`).
fn scan_number(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    if matches!(b.first(), Some(b'-') | Some(b'+')) {
        i += 1;
    }
    let int_digits = b[i..].iter().take_while(|c| c.is_ascii_digit()).count();
    i += int_digits;
    let mut frac_digits = 0;
    if b.get(i) == Some(&b'.') {
        frac_digits = b[i + 1..].iter().take_while(|c| c.is_ascii_digit()).count();
        i += 1 + frac_digits;
    }
    if int_digits + frac_digits == 0 {
        0
    } else {
        i
    }
}

fn looks_like_comprehension(inner: &str) -> bool {
    inner.split(|c: char| !c.is_ascii_alphanumeric() && c != '_').any(|w| w == "for")
}

/// Parses `trig for ident in range(n)`; `None` when outside the affine
/// sin/cos subset.
fn parse_comprehension(inner: &str) -> Option<TrigTerm> {
    let toks = tokenize(inner)?;
    let mut p = TokCursor { toks: &toks, i: 0 };

    // amplitude
    let mut amplitude = 1.0;
    if p.eat_sym('-') {
        amplitude = -1.0;
    }
    if let Some(Tok::Num(k)) = p.peek() {
        let k = *k;
        p.i += 1;
        if !p.eat_sym('*') {
            return None;
        }
        amplitude *= k;
    }
    let func = match p.next_ident()? {
        "sin" | "math.sin" | "np.sin" | "numpy.sin" => TrigFn::Sin,
        "cos" | "math.cos" | "np.cos" | "numpy.cos" => TrigFn::Cos,
        _ => return None,
    };
    if !p.eat_sym('(') {
        return None;
    }
    // affine argument: [-][k*] var [*k] [(+|-) b]
    let neg_freq = p.eat_sym('-');
    let mut frequency = 1.0;
    let mut freq_seen = false;
    if let Some(Tok::Num(k)) = p.peek() {
        frequency = *k;
        freq_seen = true;
        p.i += 1;
        if !p.eat_sym('*') {
            return None;
        }
    }
    let var = p.next_ident()?.to_string();
    if p.eat_sym('*') {
        if freq_seen {
            return None;
        }
        match p.next()? {
            Tok::Num(k) => frequency = *k,
            _ => return None,
        }
    }
    if neg_freq {
        frequency = -frequency;
    }
    let mut phase = 0.0;
    if p.eat_sym('+') || p.peek() == Some(&Tok::Sym('-')) {
        let neg = p.eat_sym('-');
        match p.next()? {
            Tok::Num(b) => phase = if neg { -*b } else { *b },
            _ => return None,
        }
    }
    if !p.eat_sym(')') {
        return None;
    }
    if p.next_ident()? != "for" || p.next_ident()? != var || p.next_ident()? != "in" || p.next_ident()? != "range" {
        return None;
    }
    if !p.eat_sym('(') {
        return None;
    }
    let n = match p.next()? {
        Tok::Num(n) if *n >= 0.0 && n.fract() == 0.0 => *n as usize,
        _ => return None,
    };
    if !p.eat_sym(')') || p.peek().is_some() {
        return None;
    }
    Some(TrigTerm { func, amplitude, frequency, phase, n })
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Num(f64),
    Ident(&'a str),
    Sym(char),
}

fn tokenize(s: &str) -> Option<Vec<Tok<'_>>> {
    let mut out = Vec::new();
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let len = scan_number(&s[i..]);
            if len == 0 {
                return None;
            }
            out.push(Tok::Num(s[i..i + len].parse().ok()?));
            i += len;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let len = s[i..]
                .bytes()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == b'_' || *c == b'.')
                .count();
            out.push(Tok::Ident(&s[i..i + len]));
            i += len;
        } else if "()*+-".contains(c) {
            out.push(Tok::Sym(c));
            i += 1;
        } else {
            return None;
        }
    }
    Some(out)
}

struct TokCursor<'t, 'a> {
    toks: &'t [Tok<'a>],
    i: usize,
}

impl<'t, 'a> TokCursor<'t, 'a> {
    fn peek(&self) -> Option<&'t Tok<'a>> {
        self.toks.get(self.i)
    }

    fn next(&mut self) -> Option<&'t Tok<'a>> {
        let t = self.toks.get(self.i);
        self.i += 1;
        t
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn next_ident(&mut self) -> Option<&'a str> {
        match self.next()? {
            Tok::Ident(s) => Some(s),
            _ => None,
        }
    }
}
