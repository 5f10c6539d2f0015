use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::condition::Condition;
use crate::metrics::SessionMetrics;

/// Descriptive statistics of one metric over a set of sessions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldStats {
    /// Sessions with a value.
    pub n: usize,
    /// Sessions where the metric is undefined (for example, no discovery).
    pub n_absent: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; 0 for a single value.
    pub sd: Option<f64>,
    pub median: Option<f64>,
}

impl FieldStats {
    pub fn of(values: &[Option<f64>]) -> Self {
        let mut present: Vec<f64> = values.iter().flatten().copied().collect();
        let n = present.len();
        let mean = (n > 0).then(|| present.iter().sum::<f64>() / n as f64);
        let sd = mean.map(|m| {
            if n < 2 {
                0.0
            } else {
                (present.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            }
        });
        present.sort_by(f64::total_cmp);
        Self {
            n,
            n_absent: values.len() - n,
            mean,
            sd,
            median: median_sorted(&present),
        }
    }
}

fn median_sorted(v: &[f64]) -> Option<f64> {
    let n = v.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(v[n / 2]),
        _ => Some((v[n / 2 - 1] + v[n / 2]) / 2.0),
    }
}

/// Median with absent values read as "never", i.e. larger than any value.
/// `None` means the median itself is "never".
pub fn censored_median(values: &[Option<f64>]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().map(|x| x.unwrap_or(f64::INFINITY)).collect();
    v.sort_by(f64::total_cmp);
    median_sorted(&v).filter(|m| m.is_finite())
}

/// The numeric fields of a metrics record, in declaration order. Booleans
/// count as 0 or 1; undefined values are `None`.
pub fn numeric_fields(m: &SessionMetrics) -> Vec<(String, Option<f64>)> {
    let value = serde_json::to_value(m).expect("metrics serialize");
    let serde_json::Value::Object(map) = value else {
        unreachable!("metrics serialize to an object")
    };
    map.into_iter()
        .filter_map(|(k, v)| match v {
            serde_json::Value::Number(n) => Some((k, n.as_f64())),
            serde_json::Value::Bool(b) => Some((k, Some(f64::from(u8::from(b))))),
            serde_json::Value::Null => Some((k, None)),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub sessions: usize,
    pub fields: Vec<(String, FieldStats)>,
    /// Median time to first discovery counting sessions without one as
    /// never; `None` when that median is never.
    pub ttfd_censored_median_ms: Option<f64>,
}

impl ConditionSummary {
    pub fn field(&self, name: &str) -> Option<&FieldStats> {
        self.fields.iter().find(|(k, _)| k == name).map(|(_, s)| s)
    }
}

/// Per-condition descriptive statistics. A condition with no sessions maps
/// to `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsTable {
    pub conditions: BTreeMap<Condition, Option<ConditionSummary>>,
}

impl ResultsTable {
    pub fn get(&self, condition: Condition) -> Option<&ConditionSummary> {
        self.conditions.get(&condition).and_then(Option::as_ref)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tables serialize")
    }

    /// One row per metric, one column per condition, each cell
    /// `mean (sd) median`.
    pub fn to_text(&self) -> String {
        let fields: Vec<String> = self
            .conditions
            .values()
            .flatten()
            .next()
            .map(|s| s.fields.iter().map(|(k, _)| k.clone()).collect())
            .unwrap_or_default();
        let width = fields.iter().map(String::len).max().unwrap_or(6).max(26);
        let col = 26;
        let mut out = format!("{:<width$}", "metric");
        for c in Condition::ALL {
            let _ = write!(out, "  {:<col$}", c.as_str());
        }
        out.push('\n');
        let mut row = |name: &str, cell: &dyn Fn(&ConditionSummary) -> String| {
            let _ = write!(out, "{name:<width$}");
            for c in Condition::ALL {
                let text = self.get(c).map_or_else(|| "absent".to_string(), cell);
                let _ = write!(out, "  {text:<col$}");
            }
            out.push('\n');
        };
        row("sessions", &|s| s.sessions.to_string());
        for f in &fields {
            row(f, &|s| match s.field(f) {
                Some(FieldStats {
                    mean: Some(m),
                    sd: Some(sd),
                    median: Some(md),
                    n_absent,
                    ..
                }) => {
                    let absent = if *n_absent > 0 { format!(" [{n_absent} n/a]") } else { String::new() };
                    format!("{} ({}) {}{absent}", fmt_num(*m), fmt_num(*sd), fmt_num(*md))
                }
                _ => "-".to_string(),
            });
        }
        row("ttfd_censored_median_ms", &|s| {
            s.ttfd_censored_median_ms.map_or("never".to_string(), fmt_num)
        });
        out
    }
}

fn fmt_num(v: f64) -> String {
    if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Summarizes sessions by condition.
pub fn export_results(sessions: &[SessionMetrics]) -> ResultsTable {
    let conditions = Condition::ALL
        .iter()
        .map(|&c| {
            let rows: Vec<&SessionMetrics> = sessions.iter().filter(|m| m.condition == c).collect();
            if rows.is_empty() {
                return (c, None);
            }
            let per_session: Vec<Vec<(String, Option<f64>)>> = rows.iter().map(|m| numeric_fields(m)).collect();
            let fields = per_session[0]
                .iter()
                .enumerate()
                .map(|(i, (name, _))| {
                    let values: Vec<Option<f64>> = per_session.iter().map(|r| r[i].1).collect();
                    (name.clone(), FieldStats::of(&values))
                })
                .collect();
            let ttfd: Vec<Option<f64>> = rows
                .iter()
                .map(|m| m.time_to_first_discovery_ms.map(|v| v as f64))
                .collect();
            let summary = ConditionSummary {
                sessions: rows.len(),
                fields,
                ttfd_censored_median_ms: censored_median(&ttfd),
            };
            (c, Some(summary))
        })
        .collect();
    ResultsTable { conditions }
}
