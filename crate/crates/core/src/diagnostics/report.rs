use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// A named statistic with its Monte Carlo error (None = deterministic).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub se: Option<f64>,
    pub n_replicas: usize,
    /// Inclusive replica index range of the seeds that produced it.
    pub seed_range: Option<(u64, u32, u32)>,
}

/// Verdict rule over stored statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// |stat − target| ≤ k·SE.
    WithinSe { stat: String, target: f64, k: f64 },
    /// |a − b| ≤ k·sqrt(SE_a² + SE_b²).
    Agree { a: String, b: String, k: f64 },
    /// |stat − target| ≤ tol.
    Close { stat: String, target: f64, tol: f64 },
    InRange { stat: String, lo: f64, hi: f64 },
    AtLeast { stat: String, bound: f64 },
    AtMost { stat: String, bound: f64 },
    /// Point estimates strictly decreasing along the list.
    StrictlyDecreasing { stats: Vec<String> },
    /// Each step s_{i+1} ≤ s_i + k·sqrt(SE_i² + SE_{i+1}²).
    NonIncreasingWithinSe { stats: Vec<String>, k: f64 },
    /// Finite value.
    Finite { stat: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub rule: Rule,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub title: String,
    pub statistics: Vec<Statistic>,
    pub verdicts: Vec<Verdict>,
    /// Free-form provenance (manifests, parameters) of the inputs.
    pub provenance: Vec<serde_json::Value>,
    pub notes: Vec<String>,
}

impl DiagnosticsReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Default::default() }
    }

    pub fn stat(&mut self, name: impl Into<String>, value: f64, se: Option<f64>, n_replicas: usize) -> &mut Self {
        self.statistics.push(Statistic { name: name.into(), value, se, n_replicas, seed_range: None });
        self
    }

    pub fn stat_seeded(
        &mut self,
        name: impl Into<String>,
        value: f64,
        se: Option<f64>,
        n_replicas: usize,
        seeds: (u64, u32, u32),
    ) -> &mut Self {
        self.statistics.push(Statistic { name: name.into(), value, se, n_replicas, seed_range: Some(seeds) });
        self
    }

    pub fn get(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// Adds a verdict, evaluated against the statistics stored so far.
    pub fn verdict(&mut self, name: impl Into<String>, rule: Rule) -> bool {
        let pass = self.evaluate(&rule);
        self.verdicts.push(Verdict { name: name.into(), rule, pass });
        pass
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Re-evaluates every verdict from the stored statistics.
    pub fn recompute(&mut self) {
        let passes: Vec<bool> = self.verdicts.iter().map(|v| self.evaluate(&v.rule)).collect();
        for (v, p) in self.verdicts.iter_mut().zip(passes) {
            v.pass = p;
        }
    }

    fn val(&self, name: &str) -> Option<(f64, f64)> {
        self.get(name).map(|s| (s.value, s.se.unwrap_or(0.0)))
    }

    fn evaluate(&self, rule: &Rule) -> bool {
        let ok = |x: Option<bool>| x.unwrap_or(false);
        match rule {
            Rule::WithinSe { stat, target, k } => ok(self.val(stat).map(|(v, se)| (v - target).abs() <= k * se)),
            Rule::Agree { a, b, k } => ok(self
                .val(a)
                .zip(self.val(b))
                .map(|((va, sa), (vb, sb))| (va - vb).abs() <= k * (sa * sa + sb * sb).sqrt())),
            Rule::Close { stat, target, tol } => ok(self.val(stat).map(|(v, _)| (v - target).abs() <= *tol)),
            Rule::InRange { stat, lo, hi } => ok(self.val(stat).map(|(v, _)| v >= *lo && v <= *hi)),
            Rule::AtLeast { stat, bound } => ok(self.val(stat).map(|(v, _)| v >= *bound)),
            Rule::AtMost { stat, bound } => ok(self.val(stat).map(|(v, _)| v <= *bound)),
            Rule::Finite { stat } => ok(self.val(stat).map(|(v, _)| v.is_finite())),
            Rule::StrictlyDecreasing { stats } => {
                let vals: Option<Vec<f64>> = stats.iter().map(|s| self.val(s).map(|v| v.0)).collect();
                ok(vals.map(|v| v.windows(2).all(|w| w[1] < w[0])))
            }
            Rule::NonIncreasingWithinSe { stats, k } => {
                let vals: Option<Vec<(f64, f64)>> = stats.iter().map(|s| self.val(s)).collect();
                ok(vals.map(|v| v.windows(2).all(|w| w[1].0 <= w[0].0 + k * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt())))
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::new();
        let _ = writeln!(md, "# {}\n", self.title);
        let _ = writeln!(md, "Overall: **{}**\n", if self.passed() { "PASS" } else { "FAIL" });
        let _ = writeln!(md, "| statistic | value | SE | replicas | seeds |");
        let _ = writeln!(md, "|---|---|---|---|---|");
        for s in &self.statistics {
            let se = s.se.map_or("deterministic".to_string(), |v| format!("{v:.4e}"));
            let seeds = s.seed_range.map_or("-".to_string(), |(m, a, b)| format!("{m}:{a}..{b}"));
            let _ = writeln!(md, "| {} | {:.6e} | {} | {} | {} |", s.name, s.value, se, s.n_replicas, seeds);
        }
        if !self.verdicts.is_empty() {
            let _ = writeln!(md, "\n| verdict | rule | result |");
            let _ = writeln!(md, "|---|---|---|");
            for v in &self.verdicts {
                let rule = serde_json::to_string(&v.rule).unwrap_or_default();
                let _ = writeln!(md, "| {} | `{}` | {} |", v.name, rule, if v.pass { "pass" } else { "FAIL" });
            }
        }
        for n in &self.notes {
            let _ = writeln!(md, "\n> {n}");
        }
        md
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_recompute_from_statistics() {
        let mut r = DiagnosticsReport::new("t");
        r.stat("a", 1.0, Some(0.1), 10).stat("b", 0.5, Some(0.1), 10).stat("c", 0.2, None, 1);
        assert!(r.verdict("dec", Rule::StrictlyDecreasing { stats: vec!["a".into(), "b".into(), "c".into()] }));
        assert!(!r.verdict("near", Rule::WithinSe { stat: "a".into(), target: 0.0, k: 3.0 }));
        assert!(r.verdict("agree", Rule::Agree { a: "b".into(), b: "c".into(), k: 3.0 }));
        assert!(!r.verdict("missing", Rule::Finite { stat: "zzz".into() }));
        r.statistics[0].value = 0.0;
        r.recompute();
        assert!(!r.verdicts[0].pass && r.verdicts[1].pass);
        let back: DiagnosticsReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_markdown().contains("deterministic"));
    }
}
