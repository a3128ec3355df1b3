use std::collections::BTreeMap;
use std::fmt::Write;

use super::file::ScenarioFile;
use super::HarnessError;

const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0.0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Three binomial standard deviations at rate `p` over `n` trials.
pub fn three_sigma(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let p = p.clamp(0.0, 1.0);
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StrategyRow {
    pub name: String,
    pub trials: usize,
    pub aborts: usize,
    pub corrupted: usize,
    pub accepted: usize,
    pub attacks: usize,
    pub corruption_ci: (f64, f64),
    /// Three-sigma allowance around the general bound.
    pub margin: f64,
    pub within_bound: bool,
    pub within_two_client_bound: Option<bool>,
    /// Only shown in the human format.
    pub mean_wall_us: f64,
}

impl StrategyRow {
    fn rate(&self, k: usize) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            k as f64 / self.trials as f64
        }
    }

    pub fn abort_rate(&self) -> f64 {
        self.rate(self.aborts)
    }

    pub fn corruption_rate(&self) -> f64 {
        self.rate(self.corrupted)
    }

    pub fn accept_rate(&self) -> f64 {
        self.rate(self.accepted)
    }

    /// Fills the interval and the bound comparisons from the counts.
    pub fn finish(&mut self, general: f64, two_client: Option<f64>) {
        self.corruption_ci = wilson_interval(self.corrupted, self.trials);
        let (rate, n) = (self.corruption_rate(), self.trials);
        let check = |b: f64| rate <= b + three_sigma(b, n) + 1e-12;
        self.margin = three_sigma(general, self.trials);
        self.within_bound = check(general);
        self.within_two_client_bound = two_client.map(check);
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub protocol: u8,
    pub n: usize,
    pub m: usize,
    pub backend: String,
    pub traps: usize,
    pub rebroadcast: bool,
    pub seed: u64,
    pub eps_bv: f64,
    pub eps_qsec: f64,
    pub eps_bb: f64,
    /// The composition-theorem formula.
    pub bound_general: f64,
    /// The dedicated two-client value, where it applies.
    pub bound_two_client: Option<f64>,
    pub rows: Vec<StrategyRow>,
    /// `(label, trace distance)` of blindness comparisons.
    pub blindness: Vec<(String, f64)>,
}

impl Report {
    pub fn header(file: &ScenarioFile, general: f64, two_client: Option<f64>) -> Self {
        let (eps_bv, eps_qsec, eps_bb) = super::trials::epsilons(&file.config);
        Report {
            scenario: file.name.clone(),
            protocol: file.protocol.number(),
            n: file.scenario.n(),
            m: file.scenario.m(),
            backend: file.config.backend.name().to_string(),
            traps: file.config.traps,
            rebroadcast: file.config.rebroadcast,
            seed: file.seed,
            eps_bv,
            eps_qsec,
            eps_bb,
            bound_general: general,
            bound_two_client: two_client,
            rows: Vec::new(),
            blindness: Vec::new(),
        }
    }

    /// Whether every strategy stayed within the general bound.
    pub fn all_within_bound(&self) -> bool {
        self.rows.iter().all(|r| r.within_bound)
    }

    /// One `key=value` per line with stable keys.
    pub fn to_machine(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("scenario", self.scenario.clone());
        put("protocol", self.protocol.to_string());
        put("n", self.n.to_string());
        put("m", self.m.to_string());
        put("backend", self.backend.clone());
        put("traps", self.traps.to_string());
        put("rebroadcast", on_off(self.rebroadcast).into());
        put("seed", self.seed.to_string());
        put("eps.bv", self.eps_bv.to_string());
        put("eps.qsec", self.eps_qsec.to_string());
        put("eps.bb", self.eps_bb.to_string());
        put("bound.general", self.bound_general.to_string());
        if let Some(b) = self.bound_two_client {
            put("bound.two_client", b.to_string());
        }
        put("strategies", self.rows.len().to_string());
        for (k, r) in self.rows.iter().enumerate() {
            let p = format!("strategy.{k}");
            put(&format!("{p}.name"), r.name.clone());
            put(&format!("{p}.trials"), r.trials.to_string());
            put(&format!("{p}.aborts"), r.aborts.to_string());
            put(&format!("{p}.corrupted"), r.corrupted.to_string());
            put(&format!("{p}.accepted"), r.accepted.to_string());
            put(&format!("{p}.attacks"), r.attacks.to_string());
            put(&format!("{p}.abort_rate"), r.abort_rate().to_string());
            put(&format!("{p}.corruption_rate"), r.corruption_rate().to_string());
            put(&format!("{p}.accept_rate"), r.accept_rate().to_string());
            put(&format!("{p}.corruption_ci_low"), r.corruption_ci.0.to_string());
            put(&format!("{p}.corruption_ci_high"), r.corruption_ci.1.to_string());
            put(&format!("{p}.margin"), r.margin.to_string());
            put(&format!("{p}.within_bound"), r.within_bound.to_string());
            if let Some(w) = r.within_two_client_bound {
                put(&format!("{p}.within_two_client_bound"), w.to_string());
            }
        }
        put("blindness", self.blindness.len().to_string());
        for (k, (label, d)) in self.blindness.iter().enumerate() {
            put(&format!("blindness.{k}.pair"), label.clone());
            put(&format!("blindness.{k}.distance"), d.to_string());
        }
        out
    }

    /// Aligned tables.
    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario   {}", self.scenario);
        let _ = writeln!(
            out,
            "protocol   {}   n={} m={}   backend={} traps={} rebroadcast={} seed={}",
            self.protocol,
            self.n,
            self.m,
            self.backend,
            self.traps,
            on_off(self.rebroadcast),
            self.seed
        );
        let _ = writeln!(out, "epsilons   bv={:.6} q-sec={:.6} bb={:.6}", self.eps_bv, self.eps_qsec, self.eps_bb);
        let _ = write!(out, "bound      general={:.6}", self.bound_general);
        if let Some(b) = self.bound_two_client {
            let _ = write!(out, "   two-client={b:.6}");
        }
        out.push('\n');
        if !self.rows.is_empty() {
            let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(8);
            let _ = writeln!(
                out,
                "\n{:<width$}  {:>7}  {:>7}  {:>9}  {:>19}  {:>7}  {:>8}  {:>10}",
                "strategy", "trials", "abort", "corrupt", "95% CI", "accept", "bound", "us/trial"
            );
            for r in &self.rows {
                let verdict = match (r.within_bound, r.within_two_client_bound) {
                    (true, _) => "ok",
                    (false, Some(true)) => "2c-only",
                    (false, _) => "EXCEEDED",
                };
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>7}  {:>7.4}  {:>9.4}  [{:>7.4}, {:>7.4}]  {:>7.4}  {:>8}  {:>10.1}",
                    r.name,
                    r.trials,
                    r.abort_rate(),
                    r.corruption_rate(),
                    r.corruption_ci.0,
                    r.corruption_ci.1,
                    r.accept_rate(),
                    verdict,
                    r.mean_wall_us
                );
            }
        }
        if !self.blindness.is_empty() {
            out.push('\n');
            for (label, d) in &self.blindness {
                let _ = writeln!(out, "blindness  {label}  {d:.3e}");
            }
        }
        out
    }
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

/// Reads a machine-format report back.
pub fn parse_machine(text: &str) -> Result<Report, HarnessError> {
    let mut map = BTreeMap::new();
    for (k, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Parse { line: k + 1, message: format!("`{line}` is not key=value") })?;
        map.insert(key.to_string(), value.to_string());
    }
    let get = |key: &str| {
        map.get(key).cloned().ok_or_else(|| HarnessError::Parse { line: 0, message: format!("missing key `{key}`") })
    };
    fn num<T: std::str::FromStr>(key: &str, v: String) -> Result<T, HarnessError> {
        v.parse().map_err(|_| HarnessError::Parse { line: 0, message: format!("bad value `{v}` for `{key}`") })
    }
    let n_rows: usize = num("strategies", get("strategies")?)?;
    let mut rows = Vec::with_capacity(n_rows);
    for k in 0..n_rows {
        let p = format!("strategy.{k}");
        let f = |name: &str| -> Result<String, HarnessError> { get(&format!("{p}.{name}")) };
        let two = map
            .get(&format!("{p}.within_two_client_bound"))
            .map(|v| num(&format!("{p}.within_two_client_bound"), v.clone()))
            .transpose()?;
        rows.push(StrategyRow {
            name: f("name")?,
            trials: num("trials", f("trials")?)?,
            aborts: num("aborts", f("aborts")?)?,
            corrupted: num("corrupted", f("corrupted")?)?,
            accepted: num("accepted", f("accepted")?)?,
            attacks: num("attacks", f("attacks")?)?,
            corruption_ci: (num("ci", f("corruption_ci_low")?)?, num("ci", f("corruption_ci_high")?)?),
            margin: num("margin", f("margin")?)?,
            within_bound: num("within_bound", f("within_bound")?)?,
            within_two_client_bound: two,
            mean_wall_us: 0.0,
        });
    }
    let n_blind: usize = num("blindness", get("blindness")?)?;
    let blindness = (0..n_blind)
        .map(|k| Ok((get(&format!("blindness.{k}.pair"))?, num("distance", get(&format!("blindness.{k}.distance"))?)?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(Report {
        scenario: get("scenario")?,
        protocol: num("protocol", get("protocol")?)?,
        n: num("n", get("n")?)?,
        m: num("m", get("m")?)?,
        backend: get("backend")?,
        traps: num("traps", get("traps")?)?,
        rebroadcast: get("rebroadcast")? == "on",
        seed: num("seed", get("seed")?)?,
        eps_bv: num("eps.bv", get("eps.bv")?)?,
        eps_qsec: num("eps.qsec", get("eps.qsec")?)?,
        eps_bb: num("eps.bb", get("eps.bb")?)?,
        bound_general: num("bound.general", get("bound.general")?)?,
        bound_two_client: map.get("bound.two_client").map(|v| num("bound.two_client", v.clone())).transpose()?,
        rows,
        blindness,
    })
}
