//! Aggregation of campaign CSV rows into per-experiment tables.
//!
//! Rows are grouped by experiment, problem, system size, precoder kind,
//! resolution and metric. Means skip infeasible rows, which are counted
//! separately. For quantized hybrids the main metric row also carries a
//! ratio of means against the FD rows of the same realizations (quantized
//! over FD for min-SINR, FD over quantized for power); the per-realization
//! mean of ratios is the mean of the `ratio_to_fd` rows.

use std::collections::{BTreeMap, HashMap};

use crate::evaluation::{Metric, PrecoderKind, Problem, ResultRecord};
use crate::hybrid::Resolution;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub experiment_id: String,
    pub problem: Problem,
    pub n_antennas: usize,
    pub groups: usize,
    pub total_k: usize,
    pub n_paths: usize,
    pub precoder_kind: PrecoderKind,
    pub bits: Resolution,
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub key: GroupKey,
    /// NaN when every row of the group is infeasible.
    pub mean: f64,
    pub count: usize,
    pub infeasible_count: usize,
    pub ratio_of_means: Option<f64>,
}

pub const REPORT_HEADER: &str =
    "experiment_id,problem,N,G,total_K,L,precoder_kind,bits,metric_name,mean,count,infeasible_count,ratio_of_means";

fn key_of(r: &ResultRecord) -> GroupKey {
    GroupKey {
        experiment_id: r.experiment_id.clone(),
        problem: r.problem,
        n_antennas: r.n_antennas,
        groups: r.groups,
        total_k: r.total_k,
        n_paths: r.n_paths,
        precoder_kind: r.precoder_kind,
        bits: r.bits,
        metric: r.metric,
    }
}

fn usable(r: &ResultRecord) -> bool {
    !r.infeasible && r.value.is_finite()
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn aggregate(records: &[ResultRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<GroupKey, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(key_of(r)).or_default().push(r);
    }

    // FD main-metric values by (experiment, N, seed, metric).
    let mut fd: HashMap<(&str, usize, u64, Metric), f64> = HashMap::new();
    for r in records.iter().filter(|r| r.precoder_kind == PrecoderKind::Fd && usable(r)) {
        fd.insert((r.experiment_id.as_str(), r.n_antennas, r.seed, r.metric), r.value);
    }

    groups
        .into_iter()
        .map(|(key, rows)| {
            let ok: Vec<&ResultRecord> = rows.iter().copied().filter(|r| usable(r)).collect();
            let ratio_of_means = if key.precoder_kind == PrecoderKind::HybridQuantized && key.metric != Metric::RatioToFd {
                let pairs: Vec<(f64, f64)> = ok
                    .iter()
                    .filter_map(|r| fd.get(&(r.experiment_id.as_str(), r.n_antennas, r.seed, r.metric)).map(|&f| (r.value, f)))
                    .collect();
                let q = mean(pairs.iter().map(|p| p.0));
                let f = mean(pairs.iter().map(|p| p.1));
                match (q, f, key.metric) {
                    (Some(q), Some(f), Metric::MinSinr) if f > 0.0 => Some(q / f),
                    (Some(q), Some(f), Metric::TotalPowerWatts) if q > 0.0 => Some(f / q),
                    _ => None,
                }
            } else {
                None
            };
            AggregateRow {
                mean: mean(ok.iter().map(|r| r.value)).unwrap_or(f64::NAN),
                count: ok.len(),
                infeasible_count: rows.len() - ok.len(),
                ratio_of_means,
                key,
            }
        })
        .collect()
}

pub fn format_report(rows: &[AggregateRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in rows {
        let k = &row.key;
        let ratio = row.ratio_of_means.map(|r| format!("{r:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.6e},{},{},{}\n",
            k.experiment_id,
            k.problem,
            k.n_antennas,
            k.groups,
            k.total_k,
            k.n_paths,
            k.precoder_kind,
            k.bits,
            k.metric,
            row.mean,
            row.count,
            row.infeasible_count,
            ratio
        ));
    }
    out
}
