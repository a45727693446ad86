//! Text reports: per-run summaries, per-step tables and scheme comparisons.

use std::fmt::Write as _;

use crate::run::RunOutcome;
use crate::CliError;

/// Mean and sample standard deviation (`n - 1` denominator; 0 for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Exact two-sided sign test: `wins` and `losses` out of the untied pairs
/// under a fair coin. Returns 1 when every pair is tied.
pub fn sign_test(wins: usize, losses: usize) -> f64 {
    let n = wins + losses;
    if n == 0 {
        return 1.0;
    }
    let k = wins.min(losses);
    // P(X <= k) for X ~ Binomial(n, 1/2), summed in log space
    let ln_half_n = n as f64 * 0.5f64.ln();
    let mut ln_choose = 0.0f64;
    let mut tail = 0.0;
    for i in 0..=k {
        if i > 0 {
            ln_choose += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        tail += (ln_choose + ln_half_n).exp();
    }
    (2.0 * tail).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignCount {
    pub b_lower: usize,
    pub b_higher: usize,
    pub ties: usize,
}

impl SignCount {
    pub fn of(pairs: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut c = SignCount {
            b_lower: 0,
            b_higher: 0,
            ties: 0,
        };
        for (a, b) in pairs {
            match b.partial_cmp(&a) {
                Some(std::cmp::Ordering::Less) => c.b_lower += 1,
                Some(std::cmp::Ordering::Greater) => c.b_higher += 1,
                _ => c.ties += 1,
            }
        }
        c
    }

    pub fn p_value(&self) -> f64 {
        sign_test(self.b_lower, self.b_higher)
    }
}

fn fmt_stat(values: &[f64]) -> String {
    match mean_std(values) {
        Some((m, s)) => format!("{m:.6} ± {s:.6}"),
        None => "n/a".to_string(),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into())
}

/// One line per run plus a closing summary.
pub fn sample_summary(outcomes: &[RunOutcome]) -> String {
    let mut out = String::new();
    for o in outcomes {
        let _ = write!(
            out,
            "seed {} class {} {}: evenness {} divergence {}",
            o.seed,
            o.record.condition_id,
            o.record.scheme.kind,
            fmt_opt(o.record.aggregate.evenness),
            fmt_opt(o.record.aggregate.divergence)
        );
        if let Some(reason) = &o.divergence_skipped {
            let _ = write!(out, " (divergence skipped: {reason})");
        }
        out.push('\n');
    }
    let evn: Vec<f64> = outcomes.iter().filter_map(|o| o.record.aggregate.evenness).collect();
    let div: Vec<f64> = outcomes.iter().filter_map(|o| o.record.aggregate.divergence).collect();
    let _ = writeln!(
        out,
        "{} runs: evenness {} divergence {}",
        outcomes.len(),
        fmt_stat(&evn),
        fmt_stat(&div)
    );
    out
}

/// Per-step scores of a single run.
pub fn step_table(outcome: &RunOutcome) -> String {
    let mut out = format!(
        "seed {} class {} scheme {}\nstep  scale   weight  evenness  divergence\n",
        outcome.seed, outcome.record.condition_id, outcome.record.scheme.kind
    );
    for (k, step) in outcome.record.steps().iter().enumerate() {
        let scale = step.field.scale();
        let _ = writeln!(
            out,
            "{k:<5} {:<7} {:<7} {:<9} {}",
            scale.to_string(),
            scale.area(),
            fmt_opt(step.evenness),
            fmt_opt(step.divergence)
        );
    }
    let _ = writeln!(
        out,
        "aggregate: evenness {} divergence {}",
        fmt_opt(outcome.record.aggregate.evenness),
        match &outcome.divergence_skipped {
            Some(reason) => format!("skipped ({reason})"),
            None => fmt_opt(outcome.record.aggregate.divergence),
        }
    );
    out
}

/// Compare two run sets seed by seed.
pub fn compare_report(label_a: &str, a: &[RunOutcome], label_b: &str, b: &[RunOutcome]) -> Result<String, CliError> {
    let seeds = |runs: &[RunOutcome]| {
        let mut s: Vec<u64> = runs.iter().map(|o| o.seed).collect();
        s.sort_unstable();
        s
    };
    if seeds(a) != seeds(b) {
        return Err(CliError::Config(format!(
            "seed sets differ: {label_a} has {:?}, {label_b} has {:?}",
            seeds(a),
            seeds(b)
        )));
    }
    let mut b_sorted: Vec<&RunOutcome> = b.iter().collect();
    b_sorted.sort_by_key(|o| o.seed);
    let mut a_sorted: Vec<&RunOutcome> = a.iter().collect();
    a_sorted.sort_by_key(|o| o.seed);
    let pairs: Vec<(&RunOutcome, &RunOutcome)> = a_sorted.into_iter().zip(b_sorted).collect();
    let steps_a = pairs[0].0.record.steps().len();
    if pairs.iter().any(|(x, y)| x.record.steps().len() != steps_a || y.record.steps().len() != steps_a) {
        return Err(CliError::Config("runs have different schedule lengths".into()));
    }

    let mut out = String::new();
    let _ = writeln!(out, "A = {label_a}\nB = {label_b}\nn = {} seeds\n", pairs.len());
    let _ = writeln!(
        out,
        "{:<11} {:<21} {:<21} {:>4} {:>4} {:>4} {:>9}",
        "metric", "A mean ± sd", "B mean ± sd", "B<A", "B>A", "tie", "sign p"
    );
    type Pick = fn(&RunOutcome) -> Option<f64>;
    let metrics: [(&str, Pick); 2] = [
        ("evenness", |o| o.record.aggregate.evenness),
        ("divergence", |o| o.record.aggregate.divergence),
    ];
    for (name, pick) in metrics {
        let va: Vec<f64> = pairs.iter().filter_map(|(x, _)| pick(x)).collect();
        let vb: Vec<f64> = pairs.iter().filter_map(|(_, y)| pick(y)).collect();
        let signs = SignCount::of(pairs.iter().filter_map(|(x, y)| Some((pick(x)?, pick(y)?))));
        let _ = writeln!(
            out,
            "{name:<11} {:<21} {:<21} {:>4} {:>4} {:>4} {:>9.3e}",
            fmt_stat(&va),
            fmt_stat(&vb),
            signs.b_lower,
            signs.b_higher,
            signs.ties,
            signs.p_value()
        );
    }

    let _ = writeln!(out, "\nper step (mean ± sd over seeds)");
    let _ = writeln!(
        out,
        "{:<5} {:<7} {:<21} {:<21} {:<21} {:<21}",
        "step", "scale", "A evenness", "B evenness", "A divergence", "B divergence"
    );
    for k in 1..steps_a {
        let col = |side: usize, div: bool| -> Vec<f64> {
            pairs
                .iter()
                .filter_map(|p| {
                    let o = if side == 0 { p.0 } else { p.1 };
                    let s = &o.record.steps()[k];
                    if div {
                        s.divergence
                    } else {
                        s.evenness
                    }
                })
                .collect()
        };
        let _ = writeln!(
            out,
            "{k:<5} {:<7} {:<21} {:<21} {:<21} {:<21}",
            pairs[0].0.record.steps()[k].field.scale().to_string(),
            fmt_stat(&col(0, false)),
            fmt_stat(&col(1, false)),
            fmt_stat(&col(0, true)),
            fmt_stat(&col(1, true))
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_test_values() {
        assert_eq!(sign_test(0, 0), 1.0);
        assert!((sign_test(5, 5) - 1.0).abs() < 1e-12);
        // P(X <= 0) for n = 5 is 1/32
        assert!((sign_test(0, 5) - 2.0 / 32.0).abs() < 1e-12);
        assert!((sign_test(1, 9) - 2.0 * 11.0 / 1024.0).abs() < 1e-12);
        assert!(sign_test(3, 47) < 1e-9);
    }

    #[test]
    fn mean_std_uses_sample_variance() {
        let (m, s) = mean_std(&[1.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[4.0]), Some((4.0, 0.0)));
        assert_eq!(mean_std(&[]), None);
    }
}
