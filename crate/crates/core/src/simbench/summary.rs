use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::stats;

use super::bench::ReplicationResult;

/// Grouping key: model, method, n, d and the parameter's bit pattern.
type CellKey = (String, String, usize, usize, u64);

fn key(r: &ReplicationResult) -> CellKey {
    (r.model.clone(), r.method.clone(), r.n, r.d, r.param.to_bits())
}

/// Boxplot statistics of the error over one (model, method, cell).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub method: String,
    pub n: usize,
    pub d: usize,
    pub param: f64,
    pub count: usize,
    pub missing: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

/// Quartiles per (model, method, n, d, param), sorted by that key. Groups
/// where every replicate failed report NaN statistics.
pub fn summarize(results: &[ReplicationResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<CellKey, (Vec<f64>, usize, f64)> = BTreeMap::new();
    for r in results {
        let entry = groups.entry(key(r)).or_insert_with(|| (Vec::new(), 0, r.param));
        match r.error {
            Some(e) => entry.0.push(e),
            None => entry.1 += 1,
        }
    }
    groups
        .into_iter()
        .map(|((model, method, n, d, _), (mut errs, missing, param))| {
            errs.sort_by(f64::total_cmp);
            let q = |p: f64| {
                if errs.is_empty() {
                    f64::NAN
                } else {
                    stats::quantile_sorted(&errs, p)
                }
            };
            SummaryRow {
                model,
                method,
                n,
                d,
                param,
                count: errs.len(),
                missing,
                min: q(0.0),
                q1: q(0.25),
                median: q(0.5),
                q3: q(0.75),
                max: q(1.0),
                mean: if errs.is_empty() { f64::NAN } else { stats::mean(&errs) },
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "model", "method", "n", "d", "param", "count", "missing", "min", "q1", "median", "q3", "max", "mean",
    ])?;
    let f = |v: f64| format!("{v:.16e}");
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.method.clone(),
            r.n.to_string(),
            r.d.to_string(),
            f(r.param),
            r.count.to_string(),
            r.missing.to_string(),
            f(r.min),
            f(r.q1),
            f(r.median),
            f(r.q3),
            f(r.max),
            f(r.mean),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Median error of `method` in the matching cell, if any.
pub fn median_error(rows: &[SummaryRow], model: &str, method: &str, n: usize, d: usize, param: f64) -> Option<f64> {
    rows.iter()
        .find(|r| r.model == model && r.method == method && r.n == n && r.d == d && r.param == param)
        .map(|r| r.median)
}

/// Paired comparison of two methods over the replicates they share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedComparison {
    pub model: String,
    pub n: usize,
    pub d: usize,
    pub param: f64,
    pub first: String,
    pub second: String,
    pub pairs: usize,
    /// Replicates where `first` has the smaller error.
    pub first_better: usize,
    pub second_better: usize,
    pub ties: usize,
    pub wilcoxon_w_plus: f64,
    pub wilcoxon_p: f64,
}

/// Sign counts and Wilcoxon signed-rank test between `first` and `second`
/// for each cell where both ran, pairing by replicate.
pub fn paired_comparison(results: &[ReplicationResult], first: &str, second: &str) -> Vec<PairedComparison> {
    type Pair = (BTreeMap<usize, f64>, BTreeMap<usize, f64>, f64);
    let mut cells: BTreeMap<(String, usize, usize, u64), Pair> = BTreeMap::new();
    for r in results {
        let Some(e) = r.error else { continue };
        let k = (r.model.clone(), r.n, r.d, r.param.to_bits());
        let entry = cells.entry(k).or_insert_with(|| (BTreeMap::new(), BTreeMap::new(), r.param));
        if r.method == first {
            entry.0.insert(r.replicate, e);
        } else if r.method == second {
            entry.1.insert(r.replicate, e);
        }
    }
    cells
        .into_iter()
        .filter_map(|((model, n, d, _), (a, b, param))| {
            let (xs, ys): (Vec<f64>, Vec<f64>) =
                a.iter().filter_map(|(rep, x)| b.get(rep).map(|y| (*x, *y))).unzip();
            if xs.is_empty() {
                return None;
            }
            let (below, above, ties) = stats::paired_sign_counts(&xs, &ys);
            let (w, p) = stats::wilcoxon_signed_rank(&xs, &ys);
            Some(PairedComparison {
                model,
                n,
                d,
                param,
                first: first.to_string(),
                second: second.to_string(),
                pairs: xs.len(),
                first_better: below,
                second_better: above,
                ties,
                wilcoxon_w_plus: w,
                wilcoxon_p: p,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(method: &str, rep: usize, error: Option<f64>) -> ReplicationResult {
        ReplicationResult {
            model: "m1".into(),
            method: method.into(),
            n: 10,
            d: 2,
            param: 0.0,
            replicate: rep,
            seed: rep as u64,
            error,
            ms: None,
        }
    }

    #[test]
    fn single_result() {
        let rows = summarize(&[res("ade", 0, Some(0.5))]);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.min, r.q1, r.median, r.q3, r.max, r.mean), (0.5, 0.5, 0.5, 0.5, 0.5, 0.5));
    }

    #[test]
    fn quartiles_and_missing() {
        let mut v: Vec<ReplicationResult> = (1..=5).map(|k| res("sir", k, Some(k as f64))).collect();
        v.push(res("sir", 6, None));
        let rows = summarize(&v);
        assert_eq!((rows[0].q1, rows[0].median, rows[0].q3), (2.0, 3.0, 4.0));
        assert_eq!(rows[0].missing, 1);
        assert!(summarize(&[]).is_empty());
    }

    #[test]
    fn paired_counts() {
        let v = vec![
            res("a", 0, Some(1.0)),
            res("b", 0, Some(2.0)),
            res("a", 1, Some(3.0)),
            res("b", 1, Some(2.0)),
            res("a", 2, Some(1.0)),
            res("b", 2, Some(1.5)),
            res("a", 3, Some(1.0)),
            res("b", 3, None),
        ];
        let cmp = paired_comparison(&v, "a", "b");
        assert_eq!(cmp.len(), 1);
        assert_eq!((cmp[0].pairs, cmp[0].first_better, cmp[0].second_better, cmp[0].ties), (3, 2, 1, 0));
    }
}
