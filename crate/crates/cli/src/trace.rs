//! Trace CSV: one row per ADMM iteration, floats with 17 significant digits.

use std::fmt::Write as _;

use qabpnp_core::diagnostics::DiagnosticsTrace;

pub const TRACE_HEADER: &str = "iter,rmse,primal_res,z_res,dual_res,denoiser_gap_times_lambda,f_value,lambda";

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn trace_csv(trace: &DiagnosticsTrace) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.iter,
            num(r.rmse),
            num(r.primal_res),
            num(r.z_res),
            num(r.dual_res),
            num(r.denoiser_gap_times_lambda),
            num(r.f_value),
            num(r.lambda)
        );
    }
    s
}
