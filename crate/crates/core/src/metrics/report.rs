use crate::io::{csv_field, fmt_opt};
use serde::{Deserialize, Serialize};

/// One replicate of one experimental cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub regime: String,
    pub n: usize,
    pub d: usize,
    pub tau: f64,
    /// Compact JSON of the association spec.
    pub spec: String,
    pub replicate: usize,
    pub seed: u64,
    pub lx: Option<f64>,
    pub ly: Option<f64>,
    pub lx_degenerate: bool,
    pub ly_degenerate: bool,
    pub lambda_hat: Option<f64>,
    pub lambda_err: Option<f64>,
    pub angle_x: Option<f64>,
    pub angle_y: Option<f64>,
    /// `tau Psi` of the true X direction projected on the fitting basis.
    pub tau_psi_phi: f64,
    pub c_x: Option<f64>,
    pub c_y: Option<f64>,
    pub c_xy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub median: f64,
    /// Absent with fewer than two values.
    pub iqr: Option<f64>,
}

impl SummaryStat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        Some(SummaryStat {
            median: quantile(&v, 0.5),
            iqr: (v.len() > 1).then(|| quantile(&v, 0.75) - quantile(&v, 0.25)),
        })
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub regime: String,
    pub n: usize,
    pub d: usize,
    pub tau: f64,
    pub spec: String,
    pub replicates: usize,
    pub failures: usize,
    pub lx: Option<SummaryStat>,
    pub ly: Option<SummaryStat>,
    pub lambda_err: Option<SummaryStat>,
    pub angle_x: Option<SummaryStat>,
    pub angle_y: Option<SummaryStat>,
    pub tau_psi_phi: f64,
    pub c_x: Option<SummaryStat>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
}

const HEADER: &str = "regime,n,d,tau,replicate,seed,lx,ly,lx_degenerate,ly_degenerate,lambda_hat,lambda_err,angle_x,angle_y,tau_psi_phi,c_x,c_y,c_xy,error,spec";

impl ConvergenceReport {
    /// Cells in order of first appearance.
    pub fn summaries(&self) -> Vec<ReportSummary> {
        let mut keys: Vec<(String, usize, usize, u64, String)> = Vec::new();
        for r in &self.rows {
            let k = (r.regime.clone(), r.n, r.d, r.tau.to_bits(), r.spec.clone());
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        keys.into_iter()
            .map(|(regime, n, d, tau, spec)| {
                let rows: Vec<&ReportRow> = self
                    .rows
                    .iter()
                    .filter(|r| {
                        r.regime == regime
                            && r.n == n
                            && r.d == d
                            && r.tau.to_bits() == tau
                            && r.spec == spec
                    })
                    .collect();
                let stat = |f: &dyn Fn(&ReportRow) -> Option<f64>| {
                    SummaryStat::of(&rows.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
                };
                ReportSummary {
                    tau: f64::from_bits(tau),
                    replicates: rows.len(),
                    failures: rows.iter().filter(|r| r.error.is_some()).count(),
                    lx: stat(&|r| r.lx),
                    ly: stat(&|r| r.ly),
                    lambda_err: stat(&|r| r.lambda_err),
                    angle_x: stat(&|r| r.angle_x),
                    angle_y: stat(&|r| r.angle_y),
                    tau_psi_phi: rows[0].tau_psi_phi,
                    c_x: stat(&|r| r.c_x),
                    regime,
                    n,
                    d,
                    spec,
                }
            })
            .collect()
    }

    /// One line per replicate.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.rows {
            let fields = [
                csv_field(&r.regime),
                r.n.to_string(),
                r.d.to_string(),
                r.tau.to_string(),
                r.replicate.to_string(),
                r.seed.to_string(),
                fmt_opt(r.lx),
                fmt_opt(r.ly),
                r.lx_degenerate.to_string(),
                r.ly_degenerate.to_string(),
                fmt_opt(r.lambda_hat),
                fmt_opt(r.lambda_err),
                fmt_opt(r.angle_x),
                fmt_opt(r.angle_y),
                r.tau_psi_phi.to_string(),
                fmt_opt(r.c_x),
                fmt_opt(r.c_y),
                fmt_opt(r.c_xy),
                csv_field(r.error.as_deref().unwrap_or("")),
                csv_field(&r.spec),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summaries()).expect("summary serializes")
    }

    /// Median table, one line per cell, for plotting against `n`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(
            "regime,n,d,tau,replicates,failures,lx_median,lx_iqr,ly_median,ly_iqr,lambda_err_median,lambda_err_iqr,angle_x_median,angle_y_median,tau_psi_phi,c_x_median,spec\n",
        );
        let med = |s: &Option<SummaryStat>| fmt_opt(s.map(|s| s.median));
        let iqr = |s: &Option<SummaryStat>| fmt_opt(s.and_then(|s| s.iqr));
        for s in self.summaries() {
            let fields = [
                csv_field(&s.regime),
                s.n.to_string(),
                s.d.to_string(),
                s.tau.to_string(),
                s.replicates.to_string(),
                s.failures.to_string(),
                med(&s.lx),
                iqr(&s.lx),
                med(&s.ly),
                iqr(&s.ly),
                med(&s.lambda_err),
                iqr(&s.lambda_err),
                med(&s.angle_x),
                med(&s.angle_y),
                s.tau_psi_phi.to_string(),
                med(&s.c_x),
                csv_field(&s.spec),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}
