//! JSON report shapes written next to the CSV outputs. Field order is the
//! declaration order, values are shortest-round-trip f64; byte-identical
//! across runs.

use serde::Serialize;

use frackit::stability::StabilityKind;

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports always serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
pub struct SolveSidecar {
    pub converged: bool,
    pub iterations: usize,
    pub residual: f64,
    pub contraction_j: usize,
    pub hu_constant: f64,
    pub final_gap: f64,
}

#[derive(Serialize)]
pub struct CertificateView {
    pub kind: StabilityKind,
    pub epsilon: f64,
    pub constant: f64,
    pub bound: f64,
    pub observed: f64,
    pub verdict: bool,
    pub min_margin: f64,
    pub margins: Vec<f64>,
}

#[derive(Serialize)]
pub struct CertifyReport {
    pub mode: &'static str,
    pub epsilon: f64,
    pub verdict: bool,
    pub residual_certificate: CertificateView,
    pub distance_certificate: CertificateView,
}

#[derive(Serialize)]
pub struct EpsBoundReport {
    pub bound: f64,
    pub eps_coefficient: f64,
    pub data_coefficient: f64,
    pub eps_series_terms: usize,
    pub data_series_terms: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<&'static str>,
}

#[derive(Serialize)]
pub struct ExampleCheck {
    pub name: &'static str,
    pub detail: String,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct ExampleSummary {
    pub iterations: usize,
    pub residual: f64,
    pub contraction_j: usize,
    pub hu_constant: f64,
    pub sharper_cf_constant: f64,
    pub weighted_max_rel_error: f64,
    pub distance_to_matched_solution: f64,
    pub hu_bound: f64,
    pub checks: Vec<ExampleCheck>,
    pub all_pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_failed_check: Option<String>,
}
