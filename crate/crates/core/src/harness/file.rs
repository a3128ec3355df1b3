use std::collections::BTreeMap;
use std::path::Path;

use super::adversary::{AdversaryStrategy, PauliChoice, StrategyKind, Target};
use super::HarnessError;
use crate::dqc::{AttackPoint, Backend};
use crate::multiclient::{ClientSpec, Protocol, ProtocolConfig, Scenario, Wiring};
use crate::qsim::{is_unitary, BasisState, GateList, Mat, PauliString, C64};

/// A parsed and validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub name: String,
    pub protocol: Protocol,
    pub config: ProtocolConfig,
    pub trials: usize,
    pub seed: u64,
    pub scenario: Scenario,
    pub strategies: Vec<AdversaryStrategy>,
}

#[derive(Debug, Clone)]
struct Entry {
    line: usize,
    key: String,
    value: String,
}

#[derive(Debug, Default)]
struct Sections {
    run: Vec<Entry>,
    clients: Vec<Entry>,
    wiring: Vec<Entry>,
    adversaries: Vec<(usize, Vec<Entry>)>,
}

fn perr(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse { line, message: message.into() }
}

fn split(text: &str) -> Result<Sections, HarnessError> {
    let mut s = Sections::default();
    let mut current: Option<String> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            let name = name.trim().to_string();
            match name.as_str() {
                "run" | "clients" | "wiring" => {}
                "adversary" => s.adversaries.push((line, Vec::new())),
                _ => return Err(perr(line, format!("unknown section [{name}]"))),
            }
            current = Some(name);
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(perr(line, format!("expected key = value, got `{body}`")));
        };
        let entry = Entry { line, key: key.trim().to_string(), value: value.trim().to_string() };
        match current.as_deref() {
            Some("run") => s.run.push(entry),
            Some("clients") => s.clients.push(entry),
            Some("wiring") => s.wiring.push(entry),
            Some("adversary") => s.adversaries.last_mut().expect("pushed on header").1.push(entry),
            _ => return Err(perr(line, "entry outside any section")),
        }
    }
    Ok(s)
}

fn lookup<'a>(entries: &'a [Entry], key: &str) -> Result<Option<&'a Entry>, HarnessError> {
    let mut hits = entries.iter().filter(|e| e.key == key);
    let first = hits.next();
    if let Some(dup) = hits.next() {
        return Err(perr(dup.line, format!("`{key}` given twice")));
    }
    Ok(first)
}

fn number<T: std::str::FromStr>(e: &Entry) -> Result<T, HarnessError> {
    e.value.parse().map_err(|_| perr(e.line, format!("`{}` is not a valid number for {}", e.value, e.key)))
}

fn on_off(e: &Entry) -> Result<bool, HarnessError> {
    match e.value.as_str() {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        v => Err(perr(e.line, format!("{} must be on or off, got `{v}`", e.key))),
    }
}

pub(crate) fn parse_backend(name: &str, traps: usize) -> Option<Backend> {
    match name {
        "ideal" => Some(Backend::Ideal),
        "clifford-auth" => Some(Backend::CliffordAuth { traps }),
        _ => None,
    }
}

fn parse_inputs(e: &Entry) -> Result<Vec<BasisState>, HarnessError> {
    e.value
        .split_whitespace()
        .map(|t| {
            BasisState::parse(t).ok_or_else(|| perr(e.line, format!("unknown input state `{t}` (use 0, 1, + or -)")))
        })
        .collect()
}

fn parse_gates(e: &Entry) -> Result<GateList, HarnessError> {
    e.value.parse().map_err(|err| perr(e.line, format!("{}: {err}", e.key)))
}

/// `cK.field` with a 1-based client index.
fn client_key(e: &Entry) -> Result<(usize, &str), HarnessError> {
    let (c, field) = e.key.split_once('.').ok_or_else(|| perr(e.line, format!("unknown key `{}`", e.key)))?;
    let i = c
        .strip_prefix('c')
        .and_then(|d| d.parse::<usize>().ok())
        .filter(|&i| i >= 1)
        .ok_or_else(|| perr(e.line, format!("`{c}` is not a client (use c1, c2, ...)")))?;
    Ok((i, field))
}

fn index_after(token: &str, prefix: char, line: usize) -> Result<usize, HarnessError> {
    token
        .strip_prefix(prefix)
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| perr(line, format!("expected {prefix}<number>, got `{token}`")))
}

/// Parses `all`, `sessions`, `channels` or one attack point as printed in reports.
pub fn parse_target(text: &str, line: usize) -> Result<Target, HarnessError> {
    let t: Vec<&str> = text.split_whitespace().collect();
    Ok(match t.as_slice() {
        ["all"] => Target::All,
        ["sessions"] => Target::Sessions,
        ["channels"] => Target::Channels,
        ["session", c, r] => Target::Point(AttackPoint::Session {
            client: index_after(c, 'c', line)?,
            round: index_after(r, 'r', line)?,
        }),
        ["transfer", r, a, b] => Target::Point(AttackPoint::Transfer {
            round: index_after(r, 'r', line)?,
            from: index_after(a, 'c', line)?,
            to: index_after(b, 'c', line)?,
        }),
        ["upload", c] => Target::Point(AttackPoint::Upload { client: index_after(c, 'c', line)? }),
        ["download", c] => Target::Point(AttackPoint::Download { client: index_after(c, 'c', line)? }),
        _ => return Err(perr(line, format!("unknown target `{text}`"))),
    })
}

fn parse_complex(token: &str, line: usize) -> Result<C64, HarnessError> {
    let bad = || perr(line, format!("`{token}` is not a complex number"));
    let t = token.trim();
    if let Some(im) = t.strip_suffix('i') {
        // split at the last sign that is not the leading one or part of an exponent
        let cut = im
            .char_indices()
            .rev()
            .find(|&(k, ch)| k > 0 && (ch == '+' || ch == '-') && !matches!(im.as_bytes()[k - 1], b'e' | b'E'))
            .map(|(k, _)| k);
        let (re, im) = match cut {
            Some(k) => (&im[..k], &im[k..]),
            None => ("0", im),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.trim_start_matches('+').parse().map_err(|_| bad())?;
        return Ok(C64::new(re, im));
    }
    t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| bad())
}

/// Rows separated by `;`, entries by whitespace: `0 1; 1 0`, `0.7071 0.7071i; ...`.
fn parse_matrix(e: &Entry) -> Result<Mat, HarnessError> {
    let rows: Vec<Vec<C64>> = e
        .value
        .split(';')
        .map(|r| r.split_whitespace().map(|t| parse_complex(t, e.line)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;
    let d = rows.len();
    if !d.is_power_of_two() || d < 2 || rows.iter().any(|r| r.len() != d) {
        return Err(perr(e.line, "matrix must be square with a power-of-two dimension"));
    }
    let m = Mat::from_fn(d, d, |r, c| rows[r][c]);
    if !is_unitary(&m, 1e-6) {
        return Err(perr(e.line, "matrix is not unitary"));
    }
    Ok(m)
}

fn parse_strategy(header: usize, entries: &[Entry]) -> Result<AdversaryStrategy, HarnessError> {
    let known = ["strategy", "name", "target", "pauli", "probability", "matrix", "gates", "round", "client"];
    if let Some(e) = entries.iter().find(|e| !known.contains(&e.key.as_str())) {
        return Err(perr(e.line, format!("unknown adversary key `{}`", e.key)));
    }
    let strategy = lookup(entries, "strategy")?.ok_or_else(|| perr(header, "adversary section without `strategy`"))?;
    let target = || -> Result<Target, HarnessError> {
        match lookup(entries, "target")? {
            Some(e) => parse_target(&e.value, e.line),
            None => Ok(Target::All),
        }
    };
    let required = |key: &str| {
        lookup(entries, key)?.ok_or_else(|| perr(strategy.line, format!("{} needs `{key}`", strategy.value)))
    };
    let kind = match strategy.value.as_str() {
        "honest" => StrategyKind::Honest,
        "abort-flip" => {
            StrategyKind::AbortFlip { round: number(required("round")?)?, client: number(required("client")?)? }
        }
        "pauli-tamper" => {
            let pauli = match lookup(entries, "pauli")? {
                None => PauliChoice::Uniform,
                Some(e) if e.value == "uniform" => PauliChoice::Uniform,
                Some(e) => {
                    let p: PauliString = e.value.parse().map_err(|err| perr(e.line, format!("pauli: {err}")))?;
                    if p.is_identity() {
                        return Err(perr(e.line, "pauli must not be the identity"));
                    }
                    PauliChoice::Fixed(p)
                }
            };
            let probability = match lookup(entries, "probability")? {
                Some(e) => {
                    let p: f64 = number(e)?;
                    if !(0.0..=1.0).contains(&p) {
                        return Err(perr(e.line, format!("probability {p} is not in [0, 1]")));
                    }
                    p
                }
                None => 1.0,
            };
            StrategyKind::PauliTamper { target: target()?, pauli, probability }
        }
        "unitary-tamper" => {
            let matrix = match (lookup(entries, "matrix")?, lookup(entries, "gates")?) {
                (Some(e), None) => parse_matrix(e)?,
                (None, Some(e)) => {
                    let g = parse_gates(e)?;
                    g.dense(g.min_width().max(1)).map_err(|err| perr(e.line, err.to_string()))?
                }
                _ => return Err(perr(strategy.line, "unitary-tamper needs exactly one of `matrix` or `gates`")),
            };
            StrategyKind::UnitaryTamper { target: target()?, matrix }
        }
        "measure-resend" => StrategyKind::MeasureResend { target: target()? },
        other => return Err(perr(strategy.line, format!("unknown strategy `{other}`"))),
    };
    let s = AdversaryStrategy::new(kind);
    Ok(match lookup(entries, "name")? {
        Some(e) => s.named(&e.value),
        None => s,
    })
}

fn parse_scenario_body(protocol: Protocol, s: &Sections) -> Result<Scenario, HarnessError> {
    let known_line = |key: &str| s.clients.iter().find(|e| e.key == key).map_or(0, |e| e.line);
    let n_entry = lookup(&s.clients, "n")?.ok_or_else(|| perr(0, "[clients] needs `n`"))?;
    let m_entry = lookup(&s.clients, "m")?.ok_or_else(|| perr(0, "[clients] needs `m`"))?;
    let (n, m): (usize, usize) = (number(n_entry)?, number(m_entry)?);
    if n == 0 || m == 0 {
        return Err(perr(n_entry.line, "n and m must be at least 1"));
    }
    let mut inputs: BTreeMap<usize, Vec<BasisState>> = BTreeMap::new();
    let mut unitaries: BTreeMap<(usize, usize), GateList> = BTreeMap::new();
    for e in s.clients.iter().filter(|e| e.key != "n" && e.key != "m") {
        let (i, field) = client_key(e)?;
        if i > n {
            return Err(perr(e.line, format!("client c{i} but n = {n}")));
        }
        if field == "input" {
            if inputs.insert(i, parse_inputs(e)?).is_some() {
                return Err(perr(e.line, format!("c{i}.input given twice")));
            }
        } else if let Some(h) = field.strip_prefix('u').and_then(|h| h.parse::<usize>().ok()) {
            if h == 0 || h > m {
                return Err(perr(e.line, format!("round {h} outside 1..={m}")));
            }
            if unitaries.insert((i, h), parse_gates(e)?).is_some() {
                return Err(perr(e.line, format!("c{i}.u{h} given twice")));
            }
        } else {
            return Err(perr(e.line, format!("unknown client field `{field}` (use input or u<round>)")));
        }
    }
    let validation = |field: &str, err| HarnessError::Validation { field: field.to_string(), source: err };
    if protocol.is_two_client() {
        if n != 2 || m != 1 {
            return Err(perr(n_entry.line, format!("protocol {} takes n = 2 and m = 1", protocol.number())));
        }
        if let Some(e) = s.wiring.first() {
            return Err(perr(e.line, "the two-client chain forwards all of client 1's output; leave [wiring] empty"));
        }
        if inputs.get(&2).is_some_and(|v| !v.is_empty()) {
            return Err(perr(known_line("c2.input"), "client 2 has no input in the two-client chain"));
        }
        let u = |i| unitaries.get(&(i, 1)).cloned().unwrap_or_else(GateList::identity);
        return Scenario::chain(inputs.get(&1).cloned().unwrap_or_default(), u(1), u(2))
            .map_err(|e| validation("clients", e));
    }
    let mut wiring = Wiring::new(n, m);
    for e in &s.wiring {
        let parts: Vec<&str> = e.key.split('.').collect();
        let [t, a, b] = parts.as_slice() else {
            return Err(perr(e.line, format!("wiring key `{}` should look like t1.c1.c2", e.key)));
        };
        let h = index_after(t, 't', e.line)?;
        let (from, to) = (index_after(a, 'c', e.line)?, index_after(b, 'c', e.line)?);
        let labels = e
            .value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|x| !x.is_empty())
            .map(|x| x.parse::<usize>().map_err(|_| perr(e.line, format!("`{x}` is not a qubit label"))))
            .collect::<Result<Vec<_>, _>>()?;
        wiring.set(h, from, to, &labels).map_err(|err| perr(e.line, err.to_string()))?;
    }
    let clients = (1..=n)
        .map(|i| {
            let us = (1..=m).map(|h| unitaries.get(&(i, h)).cloned().unwrap_or_else(GateList::identity)).collect();
            ClientSpec::new(inputs.get(&i).cloned().unwrap_or_default(), us)
        })
        .collect();
    Scenario::new(clients, wiring).map_err(|e| validation("wiring", e))
}

/// Parses scenario text. `name` labels the report.
pub fn parse_scenario_str(name: &str, text: &str) -> Result<ScenarioFile, HarnessError> {
    let s = split(text)?;
    let known = ["protocol", "backend", "traps", "trials", "seed", "rebroadcast"];
    if let Some(e) = s.run.iter().find(|e| !known.contains(&e.key.as_str())) {
        return Err(perr(e.line, format!("unknown run key `{}`", e.key)));
    }
    let protocol = match lookup(&s.run, "protocol")? {
        Some(e) => number::<u8>(e)
            .ok()
            .and_then(Protocol::from_number)
            .ok_or_else(|| perr(e.line, "protocol must be 1, 2, 3 or 4"))?,
        None => Protocol::P1,
    };
    let traps = match lookup(&s.run, "traps")? {
        Some(e) => {
            let t: usize = number(e)?;
            if t == 0 || t > 3 {
                return Err(perr(e.line, "traps must be between 1 and 3"));
            }
            t
        }
        None => 1,
    };
    let backend = match lookup(&s.run, "backend")? {
        Some(e) => {
            parse_backend(&e.value, traps).ok_or_else(|| perr(e.line, format!("unknown backend `{}`", e.value)))?
        }
        None => Backend::Ideal,
    };
    let rebroadcast = lookup(&s.run, "rebroadcast")?.map(on_off).transpose()?.unwrap_or(true);
    let trials = lookup(&s.run, "trials")?.map(number).transpose()?.unwrap_or(1000);
    let seed = lookup(&s.run, "seed")?.map(number).transpose()?.unwrap_or(0);
    let scenario = parse_scenario_body(protocol, &s)?;
    let strategies = s.adversaries.iter().map(|(line, e)| parse_strategy(*line, e)).collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioFile {
        name: name.to_string(),
        protocol,
        config: ProtocolConfig { backend, traps, rebroadcast },
        trials,
        seed,
        scenario,
        strategies,
    })
}

/// Reads and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<ScenarioFile, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    parse_scenario_str(&name, &text)
}
