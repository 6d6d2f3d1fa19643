//! Model oracles: analytic polynomials, rectangle indicators, closures, and
//! an external scoring process spoken to over stdin/stdout.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};

/// Rows sent to a scoring process per request.
pub const DEFAULT_BATCH_SIZE: usize = 4096;

/// `coef · Π x_i^p` with sorted, distinct variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<(usize, u32)>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().map(|p| p.1).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.powers.iter().fold(self.coef, |acc, &(i, p)| acc * x[i].powi(p as i32))
    }
}

/// A polynomial in `arity` variables written with 1-based names `x1, x2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    arity: usize,
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(arity: usize, terms: Vec<Monomial>) -> Result<Self> {
        let mut merged: Vec<Monomial> = Vec::new();
        for mut t in terms {
            t.powers.retain(|&(_, p)| p > 0);
            t.powers.sort_unstable();
            for w in t.powers.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Parse("repeated variable in monomial".into()));
                }
            }
            if let Some(&(i, _)) = t.powers.iter().find(|&&(i, _)| i >= arity) {
                return Err(Error::InvalidArgument(format!("x{} used but the model has {arity} inputs", i + 1)));
            }
            match merged.iter_mut().find(|m| m.powers == t.powers) {
                Some(m) => m.coef += t.coef,
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.coef != 0.0);
        Ok(Polynomial { arity, terms: merged })
    }

    /// `Σ c_i x_i`.
    pub fn linear(coefs: &[f64]) -> Self {
        let terms = coefs.iter().enumerate().map(|(i, &c)| Monomial { coef: c, powers: vec![(i, 1)] }).collect();
        Polynomial::new(coefs.len(), terms).expect("linear terms are well formed")
    }

    /// Parses expressions such as `3*x2*x3 + x1^2 - 2`. With `arity = None`
    /// the arity is the largest variable index used.
    pub fn parse(expr: &str, arity: Option<usize>) -> Result<Self> {
        let terms = Parser::new(expr).parse()?;
        let used = terms.iter().flat_map(|t| t.powers.iter().map(|p| p.0 + 1)).max().unwrap_or(0);
        Polynomial::new(arity.unwrap_or(used.max(1)), terms)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Variables the polynomial depends on, as a bitmask.
    pub fn support(&self) -> u64 {
        self.terms.iter().flat_map(|t| t.powers.iter()).fold(0, |m, &(i, _)| m | (1u64 << i))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, t) in self.terms.iter().enumerate() {
            let (sign, c) = if t.coef < 0.0 { ("-", -t.coef) } else { ("+", t.coef) };
            if k > 0 {
                write!(f, " {sign} ")?;
            } else if sign == "-" {
                write!(f, "-")?;
            }
            let mut parts = Vec::new();
            if c != 1.0 || t.powers.is_empty() {
                parts.push(format!("{c}"));
            }
            for &(i, p) in &t.powers {
                parts.push(if p == 1 { format!("x{}", i + 1) } else { format!("x{}^{p}", i + 1) });
            }
            write!(f, "{}", parts.join("*"))?;
        }
        Ok(())
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(s: &'a str) -> Self {
        Parser { s: s.as_bytes(), pos: 0 }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("polynomial at offset {}: {msg}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Vec<Monomial>> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        match self.peek() {
            Some(b'-') => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            None => return Err(self.err("empty expression")),
            _ => {}
        }
        loop {
            let mut t = self.term()?;
            t.coef *= sign;
            terms.push(t);
            match self.peek() {
                Some(b'+') => sign = 1.0,
                Some(b'-') => sign = -1.0,
                None => return Ok(terms),
                Some(_) => return Err(self.err("expected '+' or '-'")),
            }
            self.pos += 1;
        }
    }

    fn term(&mut self) -> Result<Monomial> {
        let mut m = Monomial { coef: 1.0, powers: Vec::new() };
        loop {
            match self.peek() {
                Some(b'x') => {
                    self.pos += 1;
                    let idx = self.integer()?;
                    if idx == 0 {
                        return Err(self.err("variables are numbered from x1"));
                    }
                    let power = if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.skip_ws();
                        self.integer()? as u32
                    } else {
                        1
                    };
                    let i = idx as usize - 1;
                    match m.powers.iter_mut().find(|p| p.0 == i) {
                        Some(p) => p.1 += power,
                        None => m.powers.push((i, power)),
                    }
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => {
                    let c = self.number()?;
                    let c = if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.skip_ws();
                        c.powi(self.integer()? as i32)
                    } else {
                        c
                    };
                    m.coef *= c;
                }
                _ => return Err(self.err("expected a number or a variable")),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                return Ok(m);
            }
        }
    }

    fn integer(&mut self) -> Result<u64> {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().map_err(|_| self.err("expected an integer"))
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while self.pos < self.s.len() {
            let c = self.s[self.pos];
            let exp_sign = (c == b'-' || c == b'+') && self.pos > start && matches!(self.s[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap().parse().map_err(|_| self.err("malformed number"))
    }
}

/// Indicator of the open rectangle `(lo0, hi0) × (lo1, hi1)` in two chosen
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub arity: usize,
    pub features: [usize; 2],
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rectangle {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let inside = (0..2).all(|k| x[self.features[k]] > self.lo[k] && x[self.features[k]] < self.hi[k]);
        if inside {
            1.0
        } else {
            0.0
        }
    }
}

type ModelFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Arbitrary in-process model.
#[derive(Clone)]
pub struct CustomModel {
    pub name: String,
    pub arity: usize,
    f: Arc<ModelFn>,
}

/// Pure function `ℝⁿ → ℝ` used as the model being explained.
#[derive(Clone)]
pub enum ModelOracle {
    Polynomial(Polynomial),
    Rectangle(Rectangle),
    Subprocess(Arc<SubprocessModel>),
    Custom(CustomModel),
}

impl fmt::Debug for ModelOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ModelOracle({})", self.describe())
    }
}

impl ModelOracle {
    /// Parses `poly:EXPR`, `bilinear:EXPR`, `linear:c1,c2,...`,
    /// `rect:a,b,c,d` (on `x1, x2`) or `cmd:SHELL COMMAND`.
    pub fn parse(spec: &str, arity: usize) -> Result<Self> {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("model spec {spec:?} needs a prefix such as poly: or cmd:")))?;
        match kind.trim() {
            "poly" => Ok(ModelOracle::Polynomial(Polynomial::parse(body, Some(arity))?)),
            "bilinear" => {
                let p = Polynomial::parse(body, Some(arity))?;
                if p.terms.iter().any(|t| t.degree() > 2 || t.powers.iter().any(|&(_, e)| e > 1)) {
                    return Err(Error::Parse(format!("{body:?} is not bilinear")));
                }
                Ok(ModelOracle::Polynomial(p))
            }
            "linear" => {
                let coefs = parse_floats(body)?;
                if coefs.len() != arity {
                    return Err(Error::InvalidArgument(format!("{} coefficients for {arity} inputs", coefs.len())));
                }
                Ok(ModelOracle::Polynomial(Polynomial::linear(&coefs)))
            }
            "rect" => {
                let b = parse_floats(body)?;
                if b.len() != 4 || arity < 2 {
                    return Err(Error::Parse("rect needs a,b,c,d and at least two inputs".into()));
                }
                Ok(ModelOracle::Rectangle(Rectangle { arity, features: [0, 1], lo: [b[0], b[2]], hi: [b[1], b[3]] }))
            }
            "cmd" => Ok(ModelOracle::Subprocess(Arc::new(SubprocessModel::spawn(body.trim(), arity, DEFAULT_BATCH_SIZE)?))),
            other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
        }
    }

    pub fn custom(name: impl Into<String>, arity: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        ModelOracle::Custom(CustomModel { name: name.into(), arity, f: Arc::new(f) })
    }

    pub fn arity(&self) -> usize {
        match self {
            ModelOracle::Polynomial(p) => p.arity(),
            ModelOracle::Rectangle(r) => r.arity,
            ModelOracle::Subprocess(s) => s.arity,
            ModelOracle::Custom(c) => c.arity,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ModelOracle::Polynomial(p) => format!("poly:{p}"),
            ModelOracle::Rectangle(r) => format!("rect:{},{},{},{}", r.lo[0], r.hi[0], r.lo[1], r.hi[1]),
            ModelOracle::Subprocess(s) => format!("cmd:{}", s.command),
            ModelOracle::Custom(c) => format!("custom:{}", c.name),
        }
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match self {
            ModelOracle::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    /// Evaluates rows stored back to back (`rows.len()` a multiple of the arity).
    pub fn predict(&self, rows: &[f64]) -> Result<Vec<f64>> {
        let n = self.arity();
        if n == 0 || !rows.len().is_multiple_of(n) {
            return Err(Error::InvalidArgument(format!("{} values do not form rows of {n}", rows.len())));
        }
        Ok(match self {
            ModelOracle::Polynomial(p) => rows.chunks_exact(n).map(|x| p.eval(x)).collect(),
            ModelOracle::Rectangle(r) => rows.chunks_exact(n).map(|x| r.eval(x)).collect(),
            ModelOracle::Custom(c) => rows.chunks_exact(n).map(|x| (c.f)(x)).collect(),
            ModelOracle::Subprocess(s) => return s.predict(rows),
        })
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        self.predict(&flat)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict(x)?[0])
    }
}

fn parse_floats(body: &str) -> Result<Vec<f64>> {
    body.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("cannot parse {:?} as a number", s.trim()))))
        .collect()
}

struct Session {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
    lines_read: usize,
}

/// A long-lived scoring process. Each request writes one input vector per
/// line (comma-separated, 17 significant digits) followed by a blank line,
/// and reads back exactly one number per input row. Requests are
/// serialized.
pub struct SubprocessModel {
    pub command: String,
    pub arity: usize,
    pub batch_size: usize,
    session: Mutex<Session>,
}

impl SubprocessModel {
    /// Launches `sh -c command`.
    pub fn spawn(command: &str, arity: usize, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Oracle(format!("cannot start {command:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        log::debug!("started scoring process {command:?}");
        Ok(SubprocessModel {
            command: command.to_string(),
            arity,
            batch_size,
            session: Mutex::new(Session { child, stdin, stdout, lines_read: 0 }),
        })
    }

    pub fn predict(&self, rows: &[f64]) -> Result<Vec<f64>> {
        let mut session = self.session.lock().unwrap_or_else(|e| e.into_inner());
        let mut out = Vec::with_capacity(rows.len() / self.arity);
        for chunk in rows.chunks(self.batch_size * self.arity) {
            let mut request = String::with_capacity(chunk.len() * 24);
            for row in chunk.chunks_exact(self.arity) {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
                request.push_str(&cells.join(","));
                request.push('\n');
            }
            request.push('\n');
            let expected = chunk.len() / self.arity;
            let Session { stdin, stdout, lines_read, .. } = &mut *session;
            let stdin = stdin.as_mut().ok_or_else(|| Error::Oracle("scoring process input is closed".into()))?;
            // Write on a separate thread so a process that answers line by
            // line cannot fill its output pipe while we are still writing.
            let (written, read) = std::thread::scope(|scope| {
                let writer = scope.spawn(|| stdin.write_all(request.as_bytes()).and_then(|_| stdin.flush()));
                let read = read_responses(stdout, expected, lines_read, &mut out);
                (writer.join().expect("writer thread panicked"), read)
            });
            read?;
            written.map_err(|e| Error::Oracle(format!("writing to scoring process: {e}")))?;
        }
        Ok(out)
    }
}

fn read_responses(
    stdout: &mut BufReader<ChildStdout>,
    expected: usize,
    lines_read: &mut usize,
    out: &mut Vec<f64>,
) -> Result<()> {
    let mut line = String::new();
    for _ in 0..expected {
        line.clear();
        let got = stdout.read_line(&mut line).map_err(|e| Error::Oracle(format!("reading scoring output: {e}")))?;
        *lines_read += 1;
        if got == 0 {
            return Err(Error::OracleProtocol { line: *lines_read, message: "output ended early".into() });
        }
        let text = line.trim();
        match text.parse::<f64>() {
            Ok(y) if y.is_finite() => out.push(y),
            _ => {
                return Err(Error::OracleProtocol {
                    line: *lines_read,
                    message: format!("expected one finite number, got {text:?}"),
                })
            }
        }
    }
    Ok(())
}

impl Drop for SubprocessModel {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|e| e.into_inner());
        drop(session.stdin.take());
        if let Err(e) = session.child.wait() {
            log::warn!("scoring process did not exit cleanly: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_polynomials() {
        let p = Polynomial::parse("3*x2*x3 + x1^2 - 2", None).unwrap();
        assert_eq!(p.arity(), 3);
        assert_eq!(p.degree(), 2);
        assert_eq!(p.eval(&[2.0, 1.0, -1.0]), -3.0 + 4.0 - 2.0);
        let q = Polynomial::parse(&p.to_string(), Some(3)).unwrap();
        assert_eq!(p, q);
        assert_eq!(Polynomial::parse("-x1 + 2.5e-1*x1", None).unwrap().eval(&[4.0]), -3.0);
        assert!(Polynomial::parse("x0", None).is_err());
        assert!(Polynomial::parse("3 + * x1", None).is_err());
        assert!(Polynomial::parse("x4", Some(3)).is_err());
    }

    #[test]
    fn model_specs() {
        let m = ModelOracle::parse("bilinear:3*x2*x3", 3).unwrap();
        assert_eq!(m.predict(&[0.0, 2.0, 0.5, 1.0, 1.0, 1.0]).unwrap(), vec![3.0, 3.0]);
        assert!(ModelOracle::parse("bilinear:x1^2", 3).is_err());
        let l = ModelOracle::parse("linear:1,-1", 2).unwrap();
        assert_eq!(l.eval(&[3.0, 1.0]).unwrap(), 2.0);
        let r = ModelOracle::parse("rect:0.5,1.5,-0.5,0.5", 2).unwrap();
        assert_eq!(r.predict(&[1.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(ModelOracle::parse("nope:1", 2).is_err());
    }

    #[test]
    fn subprocess_roundtrip_and_batching() {
        // echoes the first coordinate of every row
        let m = SubprocessModel::spawn(r#"while read -r l; do [ -n "$l" ] && echo "${l%%,*}"; done"#, 2, 3).unwrap();
        let rows: Vec<f64> = (0..20).flat_map(|i| [i as f64 / 3.0, 0.5]).collect();
        let y = m.predict(&rows).unwrap();
        assert_eq!(y, (0..20).map(|i| i as f64 / 3.0).collect::<Vec<_>>());
    }

    #[test]
    fn subprocess_protocol_errors_report_the_line() {
        let script = r#"k=0; while read -r l; do [ -z "$l" ] && continue; k=$((k+1)); if [ $k -eq 2 ]; then echo oops; else echo "$l"; fi; done"#;
        let m = SubprocessModel::spawn(script, 1, 10).unwrap();
        match m.predict(&[1.0, 2.0, 3.0]) {
            Err(Error::OracleProtocol { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let short = SubprocessModel::spawn("head -n 1 >/dev/null; echo 1", 1, 10).unwrap();
        assert!(matches!(short.predict(&[1.0, 2.0]), Err(Error::OracleProtocol { line: 2, .. })));
    }
}
