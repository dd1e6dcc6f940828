//! Timed plans and their text format `t: name [duration]`.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("plan line {line}: {message}")]
    Syntax { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanStep {
    pub t: f64,
    /// Ground name such as `refuel(tank1)`.
    pub name: String,
    /// Zero for instantaneous actions.
    pub duration: f64,
}

impl PlanStep {
    pub fn new(t: f64, name: &str, duration: f64) -> PlanStep {
        PlanStep { t, name: name.to_string(), duration }
    }
    pub fn end(&self) -> f64 {
        self.t + self.duration
    }
}

/// Steps sorted by start time, then name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn new(mut steps: Vec<PlanStep>) -> Plan {
        steps.sort_by(|a, b| a.t.total_cmp(&b.t).then_with(|| a.name.cmp(&b.name)));
        Plan { steps }
    }

    pub fn makespan(&self) -> f64 {
        self.steps.iter().map(PlanStep::end).fold(0.0, f64::max)
    }

    /// Reads one step per non-empty line; `;` starts a comment. Durations
    /// in brackets are optional and default to zero.
    pub fn parse(text: &str) -> Result<Plan, PlanError> {
        let mut steps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(';').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: &str| PlanError::Syntax { line: i + 1, message: format!("{m}: {raw}") };
            let (t, rest) = line.split_once(':').ok_or_else(|| err("expected `time: name`"))?;
            let t: f64 = t.trim().parse().map_err(|_| err("bad time"))?;
            let rest = rest.trim();
            let (name, duration) = match rest.rfind('[') {
                Some(p) => {
                    let d = rest[p + 1..].trim().strip_suffix(']').ok_or_else(|| err("unclosed duration"))?;
                    (rest[..p].trim(), d.trim().parse::<f64>().map_err(|_| err("bad duration"))?)
                }
                None => (rest, 0.0),
            };
            let name = match name.strip_prefix('(').and_then(|n| n.strip_suffix(')')) {
                Some(inner) => normalize_name(inner),
                None => normalize_name(name),
            };
            if name.is_empty() {
                return Err(err("missing action name"));
            }
            if !t.is_finite() || t < 0.0 || !duration.is_finite() || duration < 0.0 {
                return Err(err("negative or non-finite time"));
            }
            steps.push(PlanStep { t, name, duration });
        }
        Ok(Plan::new(steps))
    }
}

/// Accepts both `refuel(tank1)` and the PDDL spelling `refuel tank1`.
fn normalize_name(s: &str) -> String {
    let s = s.trim();
    if s.contains('(') {
        return s.replace(' ', "");
    }
    let mut parts = s.split_whitespace();
    let Some(head) = parts.next() else { return String::new() };
    let args: Vec<&str> = parts.collect();
    if args.is_empty() {
        head.to_string()
    } else {
        format!("{head}({})", args.join(","))
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{:.3}: {} [{:.3}]", s.t, s.name, s.duration)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_and_parse() {
        let p = Plan::new(vec![PlanStep::new(0.0, "refuel(tank1)", 10.0), PlanStep::new(0.0, "generate", 1000.0)]);
        let text = p.to_string();
        assert_eq!(text, "0.000: generate [1000.000]\n0.000: refuel(tank1) [10.000]\n");
        assert_eq!(Plan::parse(&text).unwrap(), p);
        assert_eq!(p.makespan(), 1000.0);
    }

    #[test]
    fn pddl_style_names_and_comments() {
        let p = Plan::parse("; header\n1.5: (refuel tank2) [3]\n2: (accelerate)\n").unwrap();
        assert_eq!(p.steps[0].name, "refuel(tank2)");
        assert_eq!(p.steps[1].name, "accelerate");
        assert_eq!(p.steps[1].duration, 0.0);
    }

    #[test]
    fn bad_lines_are_located() {
        let e = Plan::parse("0.0: a [1]\nx: b").unwrap_err();
        assert!(matches!(e, PlanError::Syntax { line: 2, .. }));
        assert!(Plan::parse("-1: a").is_err());
    }
}
