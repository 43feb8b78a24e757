//! Report rendering: aligned plain-text tables and CSV. Scores are stored
//! in [0, 1] and multiplied by 100 here, two decimals.

use super::AggregateRow;

fn fmt_score(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}", v * 100.0),
        None => "-".to_string(),
    }
}

pub fn render_csv(rows: &[AggregateRow], config_digest: &str) -> String {
    let mut out = String::from(
        "method,group,rouge1,meteor,semantic,n,n_rouge1,n_meteor,n_semantic,failures,config_digest\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.method,
            row.group,
            fmt_score(row.mean_rouge1),
            fmt_score(row.mean_meteor),
            fmt_score(row.mean_semantic),
            row.n,
            row.n_rouge1,
            row.n_meteor,
            row.n_semantic,
            row.failures,
            config_digest,
        ));
    }
    out
}

pub fn render_text(rows: &[AggregateRow], title: &str, config_digest: &str) -> String {
    let headers = ["method", "group", "ROUGE-1", "METEOR", "Semantic", "n", "fail"];
    let mut table: Vec<[String; 7]> = Vec::new();
    for row in rows {
        table.push([
            row.method.clone(),
            row.group.clone(),
            fmt_score(row.mean_rouge1),
            fmt_score(row.mean_meteor),
            fmt_score(row.mean_semantic),
            row.n.to_string(),
            row.failures.to_string(),
        ]);
    }
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in &table {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = format!("{title}  (config {config_digest})\n");
    let line = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<width$}", c, width = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&line(&headers.map(str::to_string)));
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in table {
        out.push_str(&line(&row));
        out.push('\n');
    }
    out
}
