//! Reference rows: precision, recall and F1 in percent, then ΔF1, cents
//! per pair, cost increase and cost increase per ΔF1 where listed.

pub struct Row {
    pub label: &'static str,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
    pub delta_f1: Option<f64>,
    pub cost: Option<f64>,
    pub increase: Option<f64>,
    pub per_delta: Option<f64>,
}

const fn row(label: &'static str, p: f64, r: f64, f1: f64, delta_f1: Option<f64>, cost: Option<f64>) -> Row {
    Row { label, p, r, f1, delta_f1, cost, increase: None, per_delta: None }
}

#[allow(clippy::too_many_arguments)]
const fn cmp(label: &'static str, p: f64, r: f64, f1: f64, d: f64, cost: f64, inc: f64, per: f64) -> Row {
    Row { label, p, r, f1, delta_f1: Some(d), cost: Some(cost), increase: Some(inc), per_delta: Some(per) }
}

/// Zero-shot prompt designs; ΔF1 is against the first row.
pub const PROMPT_DESIGNS: &[Row] = &[
    row("general-complex-free-T", 49.50, 100.00, 66.23, None, Some(0.11)),
    row("general-simple-free-T", 70.00, 98.00, 81.67, Some(15.44), Some(0.10)),
    row("general-complex-forced-T", 63.29, 100.00, 77.52, Some(11.29), Some(0.14)),
    row("general-simple-forced-T", 75.38, 98.00, 85.22, Some(18.99), Some(0.13)),
    row("general-simple-forced-BT", 79.66, 94.00, 86.24, Some(20.01), Some(0.13)),
    row("general-simple-forced-BTP", 71.43, 70.00, 70.70, Some(4.47), Some(0.13)),
    row("domain-complex-free-T", 71.01, 98.00, 82.35, Some(16.12), Some(0.11)),
    row("domain-simple-free-T", 61.25, 98.00, 75.38, Some(9.15), Some(0.10)),
    row("domain-complex-forced-T", 71.01, 98.00, 82.35, Some(16.12), Some(0.14)),
    row("domain-simple-forced-T", 74.24, 98.00, 84.48, Some(18.25), Some(0.13)),
    row("domain-simple-forced-BT", 76.19, 96.00, 84.96, Some(18.73), Some(0.13)),
    row("domain-simple-forced-BTP", 54.54, 84.00, 66.14, Some(-0.09), Some(0.13)),
    row("examples-first-domain-complex-free-T", 85.42, 82.00, 83.67, Some(17.44), Some(0.10)),
    row("examples-first-domain-simple-free-T", 92.86, 78.00, 84.78, Some(18.55), Some(0.10)),
];

/// Zero-shot F1 and cents per pair that the in-context and rule rows are
/// compared against.
pub const ZERO_SHOT: (f64, f64) = (82.35, 0.14);

/// Demonstration heuristics and shot counts.
pub const IN_CONTEXT: &[Row] = &[
    row("turbo zero-shot", 71.01, 98.00, 82.35, None, Some(0.14)),
    cmp("turbo random-6", 78.33, 94.00, 85.45, 3.10, 0.77, 450.0, 145.0),
    cmp("turbo random-10", 79.66, 94.00, 86.24, 3.89, 1.13, 707.0, 182.0),
    cmp("turbo random-20", 78.95, 90.00, 84.11, 1.76, 2.07, 1379.0, 783.0),
    cmp("turbo handpicked-6", 76.19, 96.00, 84.86, 2.51, 0.72, 414.0, 165.0),
    cmp("turbo handpicked-10", 80.00, 96.00, 87.27, 4.92, 1.00, 614.0, 125.0),
    cmp("turbo handpicked-20", 79.66, 94.00, 86.24, 3.89, 2.03, 1350.0, 347.0),
    cmp("turbo related-6", 80.36, 90.00, 84.91, 2.56, 0.68, 386.0, 151.0),
    cmp("turbo related-10", 89.58, 86.00, 87.76, 5.41, 1.05, 650.0, 120.0),
    cmp("turbo related-20", 88.46, 92.00, 90.20, 7.85, 1.97, 1307.0, 167.0),
    cmp("davinci handpicked-10", 61.97, 88.00, 72.72, -9.63, 10.54, 7429.0, 771.0),
    cmp("davinci handpicked-20", 61.43, 86.00, 71.67, -10.68, 19.71, 13979.0, 1309.0),
    cmp("davinci related-10", 67.69, 88.00, 76.52, -5.83, 10.04, 7071.0, 1213.0),
    cmp("davinci related-20", 61.43, 86.00, 71.67, -10.68, 20.34, 14429.0, 1351.0),
];

/// Matching rules, alone and with related demonstrations.
pub const RULES: &[Row] = &[
    row("zero-shot", 71.01, 98.00, 82.35, None, Some(0.14)),
    cmp("zero-shot rules", 80.33, 98.00, 88.29, 5.94, 0.28, 100.0, 17.0),
    cmp("related-6", 80.36, 90.00, 84.91, 2.56, 0.68, 386.0, 151.0),
    cmp("related-10", 89.58, 86.00, 87.76, 5.41, 1.05, 650.0, 120.0),
    cmp("related-20", 88.46, 92.00, 90.20, 7.85, 1.97, 1307.0, 167.0),
    cmp("related-6 rules", 90.70, 78.00, 83.87, 1.52, 0.79, 464.0, 305.0),
    cmp("related-10 rules", 90.91, 80.00, 85.11, 2.76, 1.17, 736.0, 267.0),
    cmp("related-20 rules", 91.11, 82.00, 86.32, 3.97, 2.09, 1393.0, 351.0),
];
