//! Minimal SPICE-flavoured netlist format.
//!
//! ```text
//! * comment
//! .TITLE class_b_pa
//! .FREQ 28
//! .NET rf_out W=3
//! M1 gate drain source            (Gate, Drain, Source)
//! L1 vdd drain 250 F=28 W=5       (pH; optional F= GHz, W= um hints)
//! C1 drain rf_out 0.5             (pF)
//! R1 gate bias 500                (ohm)
//! .END
//! ```
//!
//! One element per line. Nets are created on first reference with weight 1;
//! `.NET` declares a net and optionally overrides its criticality weight.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentKind {
    Resistor,
    Capacitor,
    Inductor,
    Nmos,
}

impl ComponentKind {
    pub fn from_prefix(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'R' => Some(ComponentKind::Resistor),
            'C' => Some(ComponentKind::Capacitor),
            'L' => Some(ComponentKind::Inductor),
            'M' => Some(ComponentKind::Nmos),
            _ => None,
        }
    }

    pub fn arity(self) -> usize {
        match self {
            ComponentKind::Nmos => 3,
            _ => 2,
        }
    }

    pub fn has_value(self) -> bool {
        !matches!(self, ComponentKind::Nmos)
    }

    /// Terminal names in netlist order.
    pub fn terminal_names(self) -> &'static [&'static str] {
        match self {
            ComponentKind::Nmos => &["G", "D", "S"],
            _ => &["A", "B"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentInstance {
    pub id: String,
    pub kind: ComponentKind,
    /// Ohm for resistors, pF for capacitors, pH for inductors, `None` for Nmos.
    pub value: Option<f64>,
    pub terminals: Vec<String>,
    /// Inductor operating frequency in GHz.
    pub freq_hint: Option<f64>,
    /// Inductor trace width in um.
    pub width_hint: Option<f64>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PinRef {
    pub component: String,
    pub terminal: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub name: String,
    pub pins: Vec<PinRef>,
    /// Criticality weight, always >= 1.
    pub weight: f64,
    /// Set when the net appears in a `.NET` directive.
    pub declared: bool,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Netlist {
    pub title: String,
    pub components: Vec<ComponentInstance>,
    pub nets: Vec<Net>,
    /// Circuit operating frequency (GHz) from `.FREQ`.
    pub global_freq: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: syntax error: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate component id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: `{id}` expects {expected} terminals, found {found}")]
    Arity {
        line: usize,
        id: String,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::DuplicateId { line, .. }
            | ParseError::Arity { line, .. } => *line,
        }
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_number(line: usize, what: &str, tok: &str) -> Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("cannot parse {what} `{tok}`")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("{what} must be finite")));
    }
    Ok(v)
}

fn split_param(tok: &str) -> Option<(&str, &str)> {
    let (k, v) = tok.split_once('=')?;
    if k.is_empty() || v.is_empty() {
        return None;
    }
    Some((k, v))
}

impl Netlist {
    pub fn component(&self, id: &str) -> Option<&ComponentInstance> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn net(&self, name: &str) -> Option<&Net> {
        self.nets.iter().find(|n| n.name == name)
    }

    /// Frequency used for EM spacing: `.FREQ`, else the highest inductor hint.
    pub fn operating_freq(&self) -> Option<f64> {
        self.global_freq.or_else(|| {
            self.components
                .iter()
                .filter_map(|c| c.freq_hint)
                .reduce(f64::max)
        })
    }

    /// Structural equality that ignores source line numbers and net order.
    pub fn graph_eq(&self, other: &Netlist) -> bool {
        fn strip(n: &Netlist) -> (Vec<ComponentInstance>, Vec<Net>) {
            let comps = n
                .components
                .iter()
                .cloned()
                .map(|mut c| {
                    c.line = 0;
                    c
                })
                .collect();
            let mut nets: Vec<Net> = n
                .nets
                .iter()
                .cloned()
                .map(|mut net| {
                    net.line = 0;
                    net.pins.sort();
                    net
                })
                .collect();
            nets.sort_by(|a, b| a.name.cmp(&b.name));
            (comps, nets)
        }
        self.title == other.title && self.global_freq == other.global_freq && strip(self) == strip(other)
    }

    /// Renders the netlist back into the text grammar.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if !self.title.is_empty() {
            out.push_str(&format!(".TITLE {}\n", self.title));
        }
        if let Some(f) = self.global_freq {
            out.push_str(&format!(".FREQ {f}\n"));
        }
        for net in &self.nets {
            if net.declared || net.weight != 1.0 {
                out.push_str(&format!(".NET {} W={}\n", net.name, net.weight));
            }
        }
        for c in &self.components {
            out.push_str(&c.id);
            for t in &c.terminals {
                out.push(' ');
                out.push_str(t);
            }
            if let Some(v) = c.value {
                out.push_str(&format!(" {v}"));
            }
            if let Some(f) = c.freq_hint {
                out.push_str(&format!(" F={f}"));
            }
            if let Some(w) = c.width_hint {
                out.push_str(&format!(" W={w}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Parses netlist text into a cross-linked [`Netlist`].
pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut nl = Netlist::default();
    let mut net_index: HashMap<String, usize> = HashMap::new();
    let mut ids: HashMap<String, usize> = HashMap::new();

    let mut touch_net = |nl: &mut Netlist, name: &str, line: usize| -> usize {
        *net_index.entry(name.to_string()).or_insert_with(|| {
            nl.nets.push(Net {
                name: name.to_string(),
                pins: Vec::new(),
                weight: 1.0,
                declared: false,
                line,
            });
            nl.nets.len() - 1
        })
    };

    let mut ended = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if ended {
            return Err(syntax(line, "content after .END"));
        }
        let mut toks = trimmed.split_whitespace();
        let head = toks.next().expect("non-empty line has a token");
        let rest: Vec<&str> = toks.collect();

        if let Some(directive) = head.strip_prefix('.') {
            match directive.to_ascii_uppercase().as_str() {
                "TITLE" => {
                    nl.title = rest.join(" ");
                }
                "FREQ" => {
                    let [tok] = rest.as_slice() else {
                        return Err(syntax(line, ".FREQ takes exactly one value"));
                    };
                    let f = parse_number(line, "frequency", tok)?;
                    if !(1.0..=100.0).contains(&f) {
                        return Err(syntax(line, format!("frequency {f} GHz outside [1, 100]")));
                    }
                    nl.global_freq = Some(f);
                }
                "NET" => {
                    let Some((&name, params)) = rest.split_first() else {
                        return Err(syntax(line, ".NET needs a net name"));
                    };
                    if name.contains('=') {
                        return Err(syntax(line, ".NET needs a net name"));
                    }
                    let mut weight = None;
                    for p in params {
                        match split_param(p) {
                            Some((k, v)) if k.eq_ignore_ascii_case("W") => {
                                weight = Some(parse_number(line, "net weight", v)?);
                            }
                            _ => return Err(syntax(line, format!("unexpected `{p}` in .NET"))),
                        }
                    }
                    let idx = touch_net(&mut nl, name, line);
                    let net = &mut nl.nets[idx];
                    net.declared = true;
                    if let Some(w) = weight {
                        if w < 1.0 {
                            return Err(syntax(line, format!("net weight {w} must be >= 1")));
                        }
                        net.weight = w;
                    }
                }
                "END" => {
                    if !rest.is_empty() {
                        return Err(syntax(line, "unexpected tokens after .END"));
                    }
                    ended = true;
                }
                other => return Err(syntax(line, format!("unknown directive .{other}"))),
            }
            continue;
        }

        let kind = head
            .chars()
            .next()
            .and_then(ComponentKind::from_prefix)
            .ok_or_else(|| syntax(line, format!("unknown element `{head}`")))?;
        if head.len() < 2 {
            return Err(syntax(line, format!("element `{head}` needs a name after its prefix")));
        }
        if ids.contains_key(head) {
            return Err(ParseError::DuplicateId {
                line,
                id: head.to_string(),
            });
        }

        let (params, positional): (Vec<&str>, Vec<&str>) =
            rest.iter().partition(|t| t.contains('='));
        let expected = kind.arity() + usize::from(kind.has_value());
        if positional.len() != expected {
            let found = if kind.has_value() {
                positional.len().saturating_sub(1)
            } else {
                positional.len()
            };
            return Err(ParseError::Arity {
                line,
                id: head.to_string(),
                expected: kind.arity(),
                found,
            });
        }
        let terminals: Vec<String> = positional[..kind.arity()].iter().map(|s| s.to_string()).collect();
        let value = if kind.has_value() {
            let v = parse_number(line, "value", positional[kind.arity()])?;
            if v <= 0.0 {
                return Err(syntax(line, format!("value {v} must be positive")));
            }
            Some(v)
        } else {
            None
        };

        let mut freq_hint = None;
        let mut width_hint = None;
        for p in params {
            let (k, v) = split_param(p).ok_or_else(|| syntax(line, format!("malformed parameter `{p}`")))?;
            match (kind, k.to_ascii_uppercase().as_str()) {
                (ComponentKind::Inductor, "F") => {
                    let f = parse_number(line, "frequency hint", v)?;
                    if f <= 0.0 {
                        return Err(syntax(line, "frequency hint must be positive"));
                    }
                    freq_hint = Some(f);
                }
                (ComponentKind::Inductor, "W") => {
                    let w = parse_number(line, "width hint", v)?;
                    if w <= 0.0 {
                        return Err(syntax(line, "width hint must be positive"));
                    }
                    width_hint = Some(w);
                }
                _ => return Err(syntax(line, format!("unsupported parameter `{p}` for {head}"))),
            }
        }

        for (t, name) in terminals.iter().enumerate() {
            let idx = touch_net(&mut nl, name, line);
            nl.nets[idx].pins.push(PinRef {
                component: head.to_string(),
                terminal: t,
            });
        }
        ids.insert(head.to_string(), nl.components.len());
        nl.components.push(ComponentInstance {
            id: head.to_string(),
            kind,
            value,
            terminals,
            freq_hint,
            width_hint,
            line,
        });
    }
    Ok(nl)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Warning => write!(f, "warning"),
            Severity::Error => write!(f, "error"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    UndeclaredNet,
    MissingFrequency,
    MissingWidth,
    EmptyNet,
    FloatingTerminal,
    DanglingReference,
    BadArity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub line: usize,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.severity, self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidateOptions {
    /// Require every referenced net to be declared with `.NET`.
    pub strict: bool,
    /// Trace width used for inductors without a `W=` hint.
    pub default_inductor_width: Option<f64>,
}

/// Checks the netlist invariants; never fails, returns the violations found.
pub fn validate(netlist: &Netlist, opts: &ValidateOptions) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |severity, line, kind, message: String| {
        out.push(Violation {
            severity,
            line,
            kind,
            message,
        })
    };

    for c in &netlist.components {
        if c.terminals.len() != c.kind.arity() {
            push(
                Severity::Error,
                c.line,
                ViolationKind::BadArity,
                format!("{} has {} terminals, expected {}", c.id, c.terminals.len(), c.kind.arity()),
            );
        }
        for (t, name) in c.terminals.iter().enumerate() {
            let linked = netlist.net(name).is_some_and(|n| {
                n.pins
                    .iter()
                    .filter(|p| p.component == c.id && p.terminal == t)
                    .count()
                    == 1
            });
            if !linked {
                push(
                    Severity::Error,
                    c.line,
                    ViolationKind::DanglingReference,
                    format!("{} terminal {t} is not linked to net {name}", c.id),
                );
            }
        }
        if c.kind == ComponentKind::Inductor {
            if c.freq_hint.is_none() && netlist.global_freq.is_none() {
                push(
                    Severity::Error,
                    c.line,
                    ViolationKind::MissingFrequency,
                    format!("inductor {} has no F= hint and no .FREQ directive", c.id),
                );
            }
            if c.width_hint.is_none() && opts.default_inductor_width.is_none() {
                push(
                    Severity::Error,
                    c.line,
                    ViolationKind::MissingWidth,
                    format!("inductor {} has no W= hint and no default width", c.id),
                );
            }
        }
    }

    for net in &netlist.nets {
        if opts.strict && !net.declared {
            push(
                Severity::Error,
                net.line,
                ViolationKind::UndeclaredNet,
                format!("net {} is used but never declared with .NET", net.name),
            );
        }
        if net.pins.is_empty() {
            push(
                Severity::Error,
                net.line,
                ViolationKind::EmptyNet,
                format!("net {} has no pins", net.name),
            );
        } else if net.pins.len() == 1 {
            push(
                Severity::Warning,
                net.line,
                ViolationKind::FloatingTerminal,
                format!(
                    "net {} only touches {} terminal {}",
                    net.name, net.pins[0].component, net.pins[0].terminal
                ),
            );
        }
        for p in &net.pins {
            let ok = netlist
                .component(&p.component)
                .is_some_and(|c| c.terminals.get(p.terminal) == Some(&net.name));
            if !ok {
                push(
                    Severity::Error,
                    net.line,
                    ViolationKind::DanglingReference,
                    format!("net {} references missing terminal {}.{}", net.name, p.component, p.terminal),
                );
            }
        }
    }
    out
}
