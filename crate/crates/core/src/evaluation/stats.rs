use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvalRecord;
use crate::error::{Error, Result};

/// ECDFs in reports are thinned to at most this many points.
pub const ECDF_MAX_POINTS: usize = 200;

/// Empirical CDF as the upper corners of its step function.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Empty("ecdf of no values"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 = frac,
            _ => out.push((v, frac)),
        }
    }
    Ok(out)
}

/// Nearest-rank percentile, `p` in (0, 100].
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("percentile of no values"));
    }
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::config("percentile", "must be in (0, 100]"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * sorted.len() as f64).ceil().max(1.0) as usize;
    Ok(sorted[rank.min(sorted.len()) - 1])
}

/// 10 dB wide bins labelled by their lower and upper edge; everything at or
/// above 30 dB (including noiseless) lands in `">30"`.
pub fn snr_bin_label(snr_db: f64) -> String {
    if snr_db >= 30.0 {
        return ">30".into();
    }
    let lo = (snr_db / 10.0).floor() as i64 * 10;
    format!("{lo}..{}", lo + 10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub count: usize,
    pub nlos_count: usize,
    /// Over signed plane-corrected errors.
    pub rmse: f64,
    /// Percentiles and ECDF are over absolute errors.
    pub p50: f64,
    pub p90: f64,
    pub p95: f64,
    pub ecdf: Vec<(f64, f64)>,
    pub pre_rmse: f64,
    pub pre_p50: f64,
    pub pre_p95: f64,
}

impl BinStats {
    fn from_records(records: &[&EvalRecord]) -> Result<Self> {
        let post: Vec<f64> = records.iter().filter_map(|r| r.error_deg).collect();
        let pre: Vec<f64> = records.iter().filter_map(|r| r.pre_error_deg).collect();
        let abs_post: Vec<f64> = post.iter().map(|e| e.abs()).collect();
        let abs_pre: Vec<f64> = pre.iter().map(|e| e.abs()).collect();
        Ok(Self {
            count: post.len(),
            nlos_count: records.iter().filter(|r| r.is_nlos).count(),
            rmse: rmse(&post),
            p50: percentile(&abs_post, 50.0)?,
            p90: percentile(&abs_post, 90.0)?,
            p95: percentile(&abs_post, 95.0)?,
            ecdf: thin(ecdf(&abs_post)?),
            pre_rmse: rmse(&pre),
            pre_p50: percentile(&abs_pre, 50.0)?,
            pre_p95: percentile(&abs_pre, 95.0)?,
        })
    }
}

fn rmse(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

fn thin(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if points.len() <= ECDF_MAX_POINTS {
        return points;
    }
    let last = points.len() - 1;
    (0..ECDF_MAX_POINTS)
        .map(|j| points[(j * last + (ECDF_MAX_POINTS - 1) / 2) / (ECDF_MAX_POINTS - 1)])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// method → reflection order → SNR bin.
    pub results: BTreeMap<String, BTreeMap<String, BTreeMap<String, BinStats>>>,
    /// method → reflection order, all SNRs pooled.
    pub overall: BTreeMap<String, BTreeMap<String, BinStats>>,
    /// Share of scored records whose direct path was blocked.
    pub nlos_fraction: f64,
    pub detach_count: usize,
    pub total_records: usize,
    pub scored_records: usize,
}

impl EvalReport {
    pub fn cell(&self, method: &str, order: usize, bin: &str) -> Option<&BinStats> {
        self.results.get(method)?.get(&order.to_string())?.get(bin)
    }

    pub fn pooled(&self, method: &str, order: usize) -> Option<&BinStats> {
        self.overall.get(method)?.get(&order.to_string())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sequential reduction over the record list.
pub fn aggregate(records: &[EvalRecord]) -> Result<EvalReport> {
    if records.is_empty() {
        return Err(Error::Empty("no records to aggregate"));
    }
    let scored: Vec<&EvalRecord> = records.iter().filter(|r| !r.detached && r.error_deg.is_some()).collect();
    let detach_count = records.iter().filter(|r| r.detached).count();

    let mut binned: BTreeMap<(String, String, String), Vec<&EvalRecord>> = BTreeMap::new();
    let mut pooled: BTreeMap<(String, String), Vec<&EvalRecord>> = BTreeMap::new();
    for r in &scored {
        let method = r.method.to_string();
        let order = r.order.to_string();
        binned
            .entry((method.clone(), order.clone(), snr_bin_label(r.snr_db)))
            .or_default()
            .push(r);
        pooled.entry((method, order)).or_default().push(r);
    }

    let mut results: BTreeMap<String, BTreeMap<String, BTreeMap<String, BinStats>>> = BTreeMap::new();
    for ((method, order, bin), rs) in binned {
        results
            .entry(method)
            .or_default()
            .entry(order)
            .or_default()
            .insert(bin, BinStats::from_records(&rs)?);
    }
    let mut overall: BTreeMap<String, BTreeMap<String, BinStats>> = BTreeMap::new();
    for ((method, order), rs) in pooled {
        overall.entry(method).or_default().insert(order, BinStats::from_records(&rs)?);
    }

    let nlos = scored.iter().filter(|r| r.is_nlos).count();
    Ok(EvalReport {
        results,
        overall,
        nlos_fraction: if scored.is_empty() { 0.0 } else { nlos as f64 / scored.len() as f64 },
        detach_count,
        total_records: records.len(),
        scored_records: scored.len(),
    })
}
