//! Text formats: instances, operations, linear programs and SA solutions.
//!
//! All formats are line-oriented, `#` starts a comment, and values are exact
//! fractions (`3`, `-1/2`) or `inf` where infinite costs are allowed.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use vcsp_core::algebra::{Language, Operation};
use vcsp_core::sa::{SaSolution, ScopeIndex};
use vcsp_core::{tuples, ExtRat, Instance, LinearProgram, Rational, Sense, WeightedRelation};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, FormatError>;

fn syntax<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(FormatError::Syntax { line, msg: msg.into() })
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split_once('#').map_or(l, |(head, _)| head);
        let toks: Vec<&str> = l.split_whitespace().collect();
        (!toks.is_empty()).then_some((i + 1, toks))
    })
}

fn parse_usize(line: usize, tok: &str, what: &str) -> Result<usize> {
    tok.parse().or_else(|_| syntax(line, format!("expected {what}, found `{tok}`")))
}

fn parse_value(line: usize, tok: &str) -> Result<ExtRat> {
    ExtRat::from_str(tok).or_else(|e| syntax(line, e.to_string()))
}

fn parse_rational(line: usize, tok: &str) -> Result<Rational> {
    Rational::from_str(tok).or_else(|e| syntax(line, e.to_string()))
}

fn parse_label(line: usize, tok: &str, d: usize) -> Result<usize> {
    let a = parse_usize(line, tok, "a domain label")?;
    if a >= d {
        return syntax(line, format!("label {a} outside the domain 0..{d}"));
    }
    Ok(a)
}

struct Lines<'a, I: Iterator<Item = (usize, Vec<&'a str>)>> {
    inner: I,
    last: usize,
}

impl<'a, I: Iterator<Item = (usize, Vec<&'a str>)>> Lines<'a, I> {
    fn next_or(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        match self.inner.next() {
            Some((n, toks)) => {
                self.last = n;
                Ok((n, toks))
            }
            None => syntax(self.last + 1, format!("unexpected end of file, expected {what}")),
        }
    }
}

/// Reads the tuple lines of a relation block after its header, through `end`.
fn parse_relation_body<'a, I: Iterator<Item = (usize, Vec<&'a str>)>>(
    it: &mut Lines<'a, I>,
    header: usize,
    name: &str,
    d: usize,
    arity: usize,
) -> Result<WeightedRelation> {
    let size = tuples::count(d, arity);
    let mut table: Vec<Option<ExtRat>> = vec![None; size];
    let mut default = None;
    loop {
        let (n, toks) = it.next_or("`end`")?;
        match toks[0] {
            "end" if toks.len() == 1 => break,
            "default" if toks.len() == 2 => {
                if default.is_some() {
                    return syntax(n, "second `default` line");
                }
                default = Some(parse_value(n, toks[1])?);
            }
            _ => {
                if toks.len() != arity + 1 {
                    return syntax(n, format!("expected {arity} labels and a value, found {} tokens", toks.len()));
                }
                let t = toks[..arity]
                    .iter()
                    .map(|tok| parse_label(n, tok, d))
                    .collect::<Result<Vec<_>>>()?;
                let slot = &mut table[tuples::encode(&t, d)];
                if slot.is_some() {
                    return syntax(n, format!("tuple {t:?} listed twice"));
                }
                *slot = Some(parse_value(n, toks[arity])?);
            }
        }
    }
    let mut out = Vec::with_capacity(size);
    let mut t = vec![0; arity];
    for v in table {
        match (v, &default) {
            (Some(v), _) => out.push(v),
            (None, Some(v)) => out.push(v.clone()),
            (None, None) => {
                return syntax(header, format!("relation `{name}`: tuple {t:?} unlisted and no default given"))
            }
        }
        tuples::advance(&mut t, d);
    }
    WeightedRelation::new(d, arity, out).or_else(|e| syntax(header, e.to_string()))
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    let mut it = Lines {
        inner: lines(text),
        last: 0,
    };
    let (n, toks) = it.next_or("the `vcsp <domain_size> <num_vars>` header")?;
    if toks.len() != 3 || toks[0] != "vcsp" {
        return syntax(n, "expected `vcsp <domain_size> <num_vars>`");
    }
    let d = parse_usize(n, toks[1], "a domain size")?;
    if d == 0 {
        return syntax(n, "domain size must be positive");
    }
    let num_vars = parse_usize(n, toks[2], "a variable count")?;
    let mut inst = Instance::new(d, num_vars);
    while let Some((n, toks)) = it.inner.next() {
        it.last = n;
        match toks[0] {
            "relation" => {
                if toks.len() != 3 {
                    return syntax(n, "expected `relation <name> <arity>`");
                }
                let arity = parse_usize(n, toks[2], "an arity")?;
                let rel = parse_relation_body(&mut it, n, toks[1], d, arity)?;
                inst.add_named_relation(toks[1], rel).or_else(|e| syntax(n, e.to_string()))?;
            }
            "constraint" => {
                if toks.len() < 2 {
                    return syntax(n, "expected `constraint <name> <v1> ...`");
                }
                let Some(id) = inst.relation_id(toks[1]) else {
                    return syntax(n, format!("unknown relation `{}`", toks[1]));
                };
                let scope = toks[2..]
                    .iter()
                    .map(|tok| parse_usize(n, tok, "a variable index"))
                    .collect::<Result<Vec<_>>>()?;
                inst.add_constraint(id, scope).or_else(|e| syntax(n, e.to_string()))?;
            }
            other => return syntax(n, format!("unexpected `{other}`")),
        }
    }
    Ok(inst)
}

/// The most frequent value, ties going to the value seen first.
fn default_value(table: &[ExtRat]) -> &ExtRat {
    let mut counts: HashMap<&ExtRat, (usize, usize)> = HashMap::new();
    for (i, v) in table.iter().enumerate() {
        counts.entry(v).or_insert((0, i)).0 += 1;
    }
    let best = counts
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .expect("tables are non-empty");
    best.0
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

/// A relation block; every tuple not equal to the most frequent value is listed.
pub fn print_relation(name: &str, rel: &WeightedRelation) -> String {
    let mut out = format!("relation {name} {}\n", rel.arity());
    let default = default_value(rel.table());
    let listed = rel.table().iter().filter(|v| *v != default).count();
    if listed + 1 < rel.table().len() {
        writeln!(out, "default {default}").unwrap();
    }
    let mut t = vec![0; rel.arity()];
    for v in rel.table() {
        if v != default || listed + 1 >= rel.table().len() {
            if t.is_empty() {
                writeln!(out, "{v}").unwrap();
            } else {
                writeln!(out, "{} {v}", join(&t)).unwrap();
            }
        }
        tuples::advance(&mut t, rel.domain_size());
    }
    out.push_str("end\n");
    out
}

/// Canonical form: relations in store order, then constraints with multiplicities expanded.
pub fn print_instance(inst: &Instance) -> String {
    let mut out = format!("vcsp {} {}\n", inst.domain_size(), inst.num_vars());
    for (id, rel) in inst.relations().iter().enumerate() {
        out.push_str(&print_relation(inst.relation_name(id), rel));
    }
    for c in inst.constraints() {
        let line = format!("constraint {} {}", inst.relation_name(c.relation), join(&c.scope));
        for _ in 0..c.multiplicity {
            writeln!(out, "{}", line.trim_end()).unwrap();
        }
    }
    out
}

/// A language file is an instance file; constraints, if any, are ignored.
pub fn parse_language(text: &str) -> Result<Language> {
    parse_instance(text).map(|inst| Language::from_instance(&inst))
}

pub fn print_language(lang: &Language) -> String {
    let mut out = format!("vcsp {} 0\n", lang.domain_size());
    for (name, rel) in lang.names().iter().zip(lang.relations()) {
        out.push_str(&print_relation(name, rel));
    }
    out
}

/// Operation blocks `op <name> <arity> <domain_size>`, one line per argument tuple, then `end`.
pub fn parse_operations(text: &str) -> Result<Vec<(String, Operation)>> {
    let mut it = Lines {
        inner: lines(text),
        last: 0,
    };
    let mut out: Vec<(String, Operation)> = Vec::new();
    while let Some((n, toks)) = it.inner.next() {
        it.last = n;
        if toks.len() != 4 || toks[0] != "op" {
            return syntax(n, "expected `op <name> <arity> <domain_size>`");
        }
        let name = toks[1];
        if out.iter().any(|(other, _)| other == name) {
            return syntax(n, format!("duplicate operation `{name}`"));
        }
        let m = parse_usize(n, toks[2], "an arity")?;
        let d = parse_usize(n, toks[3], "a domain size")?;
        if d == 0 {
            return syntax(n, "domain size must be positive");
        }
        let size = tuples::count(d, m);
        let mut table: Vec<Option<usize>> = vec![None; size];
        loop {
            let (ln, toks) = it.next_or("`end`")?;
            if toks == ["end"] {
                break;
            }
            if toks.len() != m + 1 {
                return syntax(ln, format!("expected {m} arguments and a value"));
            }
            let labels = toks
                .iter()
                .map(|tok| parse_label(ln, tok, d))
                .collect::<Result<Vec<_>>>()?;
            let slot = &mut table[tuples::encode(&labels[..m], d)];
            if slot.is_some() {
                return syntax(ln, format!("arguments {:?} listed twice", &labels[..m]));
            }
            *slot = Some(labels[m]);
        }
        let Some(table) = table.into_iter().collect::<Option<Vec<_>>>() else {
            return syntax(n, format!("operation `{name}` does not list every argument tuple"));
        };
        let f = Operation::new(d, m, table).or_else(|e| syntax(n, e.to_string()))?;
        out.push((name.to_string(), f));
    }
    Ok(out)
}

pub fn print_operation(name: &str, f: &Operation) -> String {
    let mut out = format!("op {name} {} {}\n", f.arity(), f.domain_size());
    let mut t = vec![0; f.arity()];
    for v in f.table() {
        writeln!(out, "{} {v}", join(&t)).unwrap();
        tuples::advance(&mut t, f.domain_size());
    }
    out.push_str("end\n");
    out
}

fn parse_sparse(n: usize, toks: &[&str], num_vars: usize) -> Result<Vec<(usize, Rational)>> {
    let mut out: Vec<(usize, Rational)> = Vec::with_capacity(toks.len());
    for tok in toks {
        let Some((j, a)) = tok.split_once(':') else {
            return syntax(n, format!("expected `<var>:<coefficient>`, found `{tok}`"));
        };
        let j = parse_usize(n, j, "a variable index")?;
        if j >= num_vars {
            return syntax(n, format!("variable {j} out of range"));
        }
        if out.iter().any(|(k, _)| *k == j) {
            return syntax(n, format!("variable {j} repeated"));
        }
        out.push((j, parse_rational(n, a)?));
    }
    Ok(out)
}

fn print_sparse(out: &mut String, coeffs: &[(usize, Rational)]) {
    for (j, a) in coeffs {
        if !a.is_zero() {
            write!(out, " {j}:{a}").unwrap();
        }
    }
}

/// Linear programs: `lp <vars>`, `min j:c ...`, `row j:a ... <=|=|>= b`,
/// `bound j <lo|-inf> <hi|inf>`. Unmentioned coefficients are zero and
/// unmentioned variables keep the bounds `[0, inf)`.
pub fn parse_lp(text: &str) -> Result<LinearProgram> {
    let mut it = lines(text);
    let Some((n, toks)) = it.next() else {
        return syntax(1, "expected `lp <vars>`");
    };
    if toks.len() != 2 || toks[0] != "lp" {
        return syntax(n, "expected `lp <vars>`");
    }
    let num_vars = parse_usize(n, toks[1], "a variable count")?;
    let mut lp = LinearProgram::new(num_vars);
    let mut seen_min = false;
    for (n, toks) in it {
        match toks[0] {
            "min" => {
                if seen_min {
                    return syntax(n, "second objective line");
                }
                seen_min = true;
                for (j, c) in parse_sparse(n, &toks[1..], num_vars)? {
                    lp.set_cost(j, c);
                }
            }
            "row" => {
                if toks.len() < 3 {
                    return syntax(n, "expected `row <var>:<coef> ... <sense> <rhs>`");
                }
                let sense = match toks[toks.len() - 2] {
                    "<=" => Sense::Le,
                    "=" => Sense::Eq,
                    ">=" => Sense::Ge,
                    other => return syntax(n, format!("unknown sense `{other}`")),
                };
                let rhs = parse_rational(n, toks[toks.len() - 1])?;
                let coeffs = parse_sparse(n, &toks[1..toks.len() - 2], num_vars)?;
                lp.add_sparse_row(coeffs, sense, rhs).or_else(|e| syntax(n, e.to_string()))?;
            }
            "bound" => {
                if toks.len() != 4 {
                    return syntax(n, "expected `bound <var> <lo> <hi>`");
                }
                let j = parse_usize(n, toks[1], "a variable index")?;
                if j >= num_vars {
                    return syntax(n, format!("variable {j} out of range"));
                }
                let lo = if toks[2] == "-inf" { None } else { Some(parse_rational(n, toks[2])?) };
                let hi = if toks[3] == "inf" { None } else { Some(parse_rational(n, toks[3])?) };
                lp.set_bounds(j, lo, hi);
            }
            other => return syntax(n, format!("unexpected `{other}`")),
        }
    }
    Ok(lp)
}

pub fn print_lp(lp: &LinearProgram) -> String {
    let mut out = format!("lp {}\nmin", lp.num_vars());
    let objective: Vec<(usize, Rational)> = lp.objective().iter().cloned().enumerate().collect();
    print_sparse(&mut out, &objective);
    out.push('\n');
    for row in lp.rows() {
        out.push_str("row");
        print_sparse(&mut out, &row.coeffs);
        writeln!(out, " {} {}", row.sense.token(), row.rhs).unwrap();
    }
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower_bound(j), lp.upper_bound(j));
        if lo != Some(&Rational::zero()) || hi.is_some() {
            let lo = lo.map_or("-inf".to_string(), Rational::to_string);
            let hi = hi.map_or("inf".to_string(), Rational::to_string);
            writeln!(out, "bound {j} {lo} {hi}").unwrap();
        }
    }
    out
}

/// Writes `lambda <vars> | <labels> = p/q` for every non-zero entry, scopes in index order.
pub fn write_lambda(w: &mut impl Write, lambda: &SaSolution) -> io::Result<()> {
    let index = lambda.index();
    let d = index.domain_size();
    let mut line = String::new();
    for i in 0..index.num_scopes() {
        let scope = index.scope(i);
        let vars = join(scope);
        let mut sigma = vec![0; scope.len()];
        for p in lambda.distribution(i) {
            if !p.is_zero() {
                line.clear();
                write!(line, "lambda {vars} | {} = {p}", join(&sigma)).unwrap();
                writeln!(w, "{line}")?;
            }
            tuples::advance(&mut sigma, d);
        }
    }
    Ok(())
}

/// Reads a λ file against the SA(k, ℓ) scopes of `instance`.
///
/// Unlisted entries of a listed scope are zero; a scope with no line at all is an error.
pub fn read_lambda(r: impl BufRead, index: ScopeIndex) -> Result<SaSolution> {
    let d = index.domain_size();
    let mut seen = vec![false; index.num_scopes()];
    let mut listed: HashSet<(usize, usize)> = HashSet::new();
    let mut lambda = SaSolution::zeros(index);
    for (ln, line) in r.lines().enumerate() {
        let n = ln + 1;
        let line = line?;
        let line = line.split_once('#').map_or(line.as_str(), |(head, _)| head);
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        let bar = toks.iter().position(|&t| t == "|");
        let eq = toks.iter().position(|&t| t == "=");
        let (Some(bar), Some(eq)) = (bar, eq) else {
            return syntax(n, "expected `lambda <vars> | <labels> = <value>`");
        };
        if toks[0] != "lambda" || eq != toks.len() - 2 || bar > eq || eq - bar - 1 != bar - 1 {
            return syntax(n, "expected `lambda <vars> | <labels> = <value>`");
        }
        let vars = toks[1..bar]
            .iter()
            .map(|t| parse_usize(n, t, "a variable index"))
            .collect::<Result<Vec<_>>>()?;
        if vars.windows(2).any(|w| w[0] >= w[1]) {
            return syntax(n, "scope variables must be strictly increasing");
        }
        let labels = toks[bar + 1..eq]
            .iter()
            .map(|t| parse_label(n, t, d))
            .collect::<Result<Vec<_>>>()?;
        let value = parse_rational(n, toks[eq + 1])?;
        let Some(i) = lambda.index().find(&vars) else {
            return syntax(n, format!("scope {vars:?} is not a scope of SA({}, {})", lambda.k(), lambda.l()));
        };
        let s = tuples::encode(&labels, d);
        if !listed.insert((i, s)) {
            return syntax(n, format!("entry {vars:?} = {labels:?} listed twice"));
        }
        seen[i] = true;
        lambda.distribution_mut(i)[s] = value;
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(FormatError::Syntax {
            line: 0,
            msg: format!("no distribution given for scope {:?}", lambda.index().scope(i)),
        });
    }
    Ok(lambda)
}
