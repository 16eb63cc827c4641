use std::fmt::Write as _;

use serde_json::json;

use super::{Arm, ExperimentResult};
use crate::error::{Error, Result};

fn header(n: usize) -> Vec<String> {
    let mut cols = vec!["arm".to_string(), "run".into(), "hellinger".into()];
    for group in [
        "e0_true",
        "e1_true",
        "e2_true",
        "e0_map",
        "e1_map",
        "e2_map",
        "acceptance",
    ] {
        cols.extend((1..=n).map(|q| format!("{group}_q{q}")));
    }
    cols.push("error".into());
    cols
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per (arm, run). MAP and acceptance columns stay empty for the
/// non-adaptive arms.
pub fn to_csv_string(result: &ExperimentResult) -> Result<String> {
    let n = result.qubits;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header(n)).map_err(io)?;
    for row in &result.rows {
        let mut rec = vec![row.arm.to_string(), row.run.to_string(), opt(row.hellinger)];
        for k in 0..3 {
            rec.extend(row.truth.iter().map(|e| e.to_array()[k].to_string()));
        }
        match &row.estimate {
            Some(est) => {
                for k in 0..3 {
                    rec.extend(est.params.iter().map(|e| e.to_array()[k].to_string()));
                }
                rec.extend(est.acceptance.iter().map(f64::to_string));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 4 * n)),
        }
        rec.push(row.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn summary_json(result: &ExperimentResult) -> String {
    let arms: serde_json::Map<String, serde_json::Value> = result
        .summaries
        .iter()
        .map(|s| {
            let (mean, std) = match &s.report {
                Some(r) => (json!(r.mean), json!(r.std)),
                None => (json!(null), json!(null)),
            };
            (
                s.arm.to_string(),
                json!({
                    "mean": mean,
                    "std": std,
                    "completed": s.completed,
                    "failed": s.failed,
                }),
            )
        })
        .collect();
    let doc = json!({
        "qubits": result.qubits,
        "shots": result.shots,
        "runs": result.runs,
        "seed": result.seed,
        "prior": result.prior,
        "arms": arms,
    });
    serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
}

fn colour(arm: Arm) -> &'static str {
    match arm {
        Arm::Unmitigated => "#d95f02",
        Arm::Static => "#7570b3",
        Arm::Adaptive => "#1b9e77",
    }
}

/// Bar per arm at the mean distance with a ±1 std whisker and the
/// individual runs as dots.
pub fn render_svg(result: &ExperimentResult) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const LEFT: f64 = 60.0;
    const BOTTOM: f64 = 40.0;
    const TOP: f64 = 30.0;

    let top_value = result
        .rows
        .iter()
        .filter_map(|r| r.hellinger)
        .chain(
            result
                .summaries
                .iter()
                .filter_map(|s| s.report.as_ref().map(|r| r.mean + r.std)),
        )
        .fold(0.0f64, f64::max);
    let y_max = if top_value > 0.0 {
        (top_value * 1.15).min(1.0)
    } else {
        1.0
    };
    let plot_h = H - BOTTOM - TOP;
    let y = |v: f64| H - BOTTOM - plot_h * (v / y_max).min(1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle">Hellinger distance to ideal ({} runs, {} shots)</text>"#,
        W / 2.0,
        result.runs,
        result.shots
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        y(0.0),
        y(y_max)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        y(0.0),
        W - 20.0
    );
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0
        );
    }

    let slots = result.summaries.len().max(1) as f64;
    let slot_w = (W - LEFT - 20.0) / slots;
    for (i, summary) in result.summaries.iter().enumerate() {
        let cx = LEFT + slot_w * (i as f64 + 0.5);
        let bar_w = slot_w * 0.5;
        let c = colour(summary.arm);
        if let Some(r) = &summary.report {
            let _ = writeln!(
                s,
                r#"<rect x="{:.1}" y="{:.1}" width="{bar_w:.1}" height="{:.1}" fill="{c}" fill-opacity="0.6"/>"#,
                cx - bar_w / 2.0,
                y(r.mean),
                y(0.0) - y(r.mean)
            );
            let (lo, hi) = ((r.mean - r.std).max(0.0), r.mean + r.std);
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                y(lo),
                y(hi)
            );
            for v in [lo, hi] {
                let _ = writeln!(
                    s,
                    r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
                    cx - 8.0,
                    y(v),
                    cx + 8.0,
                    y(v)
                );
            }
        }
        for row in result.rows_for(summary.arm) {
            if let Some(d) = row.hellinger {
                let jitter = (row.run as f64 / result.runs.max(1) as f64 - 0.5) * bar_w * 0.6;
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="black" fill-opacity="0.7"/>"#,
                    cx + jitter,
                    y(d)
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{}</text>"#,
            H - BOTTOM + 18.0,
            summary.arm
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let h = header(2);
        assert_eq!(h.len(), 3 + 7 * 2 + 1);
        assert_eq!(h[3], "e0_true_q1");
        assert_eq!(h[4], "e0_true_q2");
        assert_eq!(h[15], "acceptance_q1");
        assert_eq!(h.last().unwrap(), "error");
    }
}
