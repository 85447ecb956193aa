//! Threshold evaluation against a run summary.
//!
//! A thresholds file lists one criterion per line:
//!
//! ```text
//! # comment
//! metrics.ks <= 0.02
//! metrics.hill_mu >= 2.85
//! ```
//!
//! The left-hand side is a dotted path into the summary JSON (array elements
//! by numeric segment), the comparator is one of `< <= > >= == !=`.

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<" => Comparator::Lt,
            "<=" => Comparator::Le,
            ">" => Comparator::Gt,
            ">=" => Comparator::Ge,
            "==" => Comparator::Eq,
            "!=" => Comparator::Ne,
            _ => return None,
        })
    }

    fn eval(&self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Criterion {
    pub path: String,
    pub comparator: Comparator,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub criterion: Criterion,
    pub measured: Option<f64>,
    pub pass: bool,
}

pub fn parse_thresholds(text: &str) -> Result<Vec<Criterion>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(format!(
                "line {}: expected '<metric path> <comparator> <bound>', got '{line}'",
                lineno + 1
            ));
        }
        let comparator = Comparator::parse(parts[1])
            .ok_or_else(|| format!("line {}: unknown comparator '{}'", lineno + 1, parts[1]))?;
        let bound: f64 = parts[2]
            .parse()
            .map_err(|_| format!("line {}: bound '{}' is not a number", lineno + 1, parts[2]))?;
        out.push(Criterion {
            path: parts[0].to_string(),
            comparator,
            bound,
        });
    }
    if out.is_empty() {
        return Err("thresholds file lists no criteria".into());
    }
    Ok(out)
}

fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cur = root;
    for segment in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get(segment)?,
            Value::Array(items) => items.get(segment.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

pub fn evaluate(summary: &Value, criteria: &[Criterion]) -> Vec<CriterionResult> {
    criteria
        .iter()
        .map(|c| {
            let measured = lookup(summary, &c.path).and_then(Value::as_f64);
            let pass = measured.map_or(false, |m| c.comparator.eval(m, c.bound));
            CriterionResult {
                criterion: c.clone(),
                measured,
                pass,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_and_evaluates() {
        let summary = json!({"metrics": {"ks": 0.015, "nested": [{"v": 2.0}]}});
        let criteria = parse_thresholds(
            "# comment\nmetrics.ks <= 0.02\nmetrics.nested.0.v > 1.0\nmetrics.ks > 0.5\n",
        )
        .unwrap();
        let results = evaluate(&summary, &criteria);
        assert!(results[0].pass);
        assert!(results[1].pass);
        assert!(!results[2].pass);
    }

    #[test]
    fn missing_metric_fails_with_none() {
        let summary = json!({"metrics": {}});
        let criteria = parse_thresholds("metrics.absent < 1.0\n").unwrap();
        let results = evaluate(&summary, &criteria);
        assert!(!results[0].pass);
        assert!(results[0].measured.is_none());
    }

    #[test]
    fn rejects_malformed_line() {
        assert!(parse_thresholds("metrics.ks <=\n").is_err());
        assert!(parse_thresholds("metrics.ks ~ 3\n").is_err());
    }
}
