//! CSV report rows.
//!
//! Every rational metric occupies two columns: the exact `"p/q"` string and
//! a `_dec` column with 15 significant digits, rounded from the exact value.
//! Empty cells mean "not computed" or "undefined" (for instance a ratio
//! whose denominator is zero). Check columns hold `pass`, `fail`,
//! `inconclusive`, `undefined` or are empty when the check does not apply.

use std::io::Write;

use covergame::metrics::{BoundCheck, MetricReport, Outcome};
use covergame::Rational;
use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::CliResult;
use crate::gamefile::format_rational;

pub const SIG_DIGITS: usize = 15;

/// Decimal rendering of an exact rational in the style of C's `%.15g`:
/// round half away from zero to 15 significant digits, trim trailing zeros,
/// switch to exponent notation below 1e-4 or from 1e15 up.
pub fn decimal(x: &Rational) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let sign = if x.is_negative() { "-" } else { "" };
    let n = x.numer().abs();
    let d = x.denom().clone();
    let ten = BigInt::from(10);

    // exponent e with 10^e <= n/d < 10^(e+1)
    let mut e = n.to_string().len() as i64 - d.to_string().len() as i64;
    let pow = |k: i64| ten.pow(k.unsigned_abs() as u32);
    let below = |e: i64| if e >= 0 { n.clone() < &d * pow(e) } else { &n * pow(e) < d };
    if below(e) {
        e -= 1;
    }

    // digits = round(n/d * 10^(14-e))
    let shift = SIG_DIGITS as i64 - 1 - e;
    let (num, den) = if shift >= 0 { (&n * pow(shift), d.clone()) } else { (n.clone(), &d * pow(shift)) };
    let mut digits: BigInt = (num * 2 + &den) / (den * 2);
    if digits == pow(SIG_DIGITS as i64) {
        digits /= 10;
        e += 1;
    }
    let raw = digits.to_string();
    debug_assert_eq!(raw.len(), SIG_DIGITS);

    let out = if (-4..SIG_DIGITS as i64).contains(&e) {
        if e >= 0 {
            let (int, frac) = raw.split_at(e as usize + 1);
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-e - 1) as usize);
            format!("0.{zeros}{}", raw.trim_end_matches('0'))
        }
    } else {
        let (lead, rest) = raw.split_at(1);
        let rest = rest.trim_end_matches('0');
        let mantissa = if rest.is_empty() { lead.to_string() } else { format!("{lead}.{rest}") };
        format!("{mantissa}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    };
    format!("{sign}{out}")
}

/// One report line; the field order is the column order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReportRow {
    /// `instance`, `aggregate` or `policy`.
    pub row_kind: String,
    pub label: String,
    /// Sweep parameter for the row (the interpolation weight, for example).
    pub param: String,
    /// Signaling-search rank; tied policies share a rank.
    pub rank: String,
    pub top: String,
    pub policy: String,
    pub n_cells: String,
    pub rule_kind: String,
    /// `ok`, `cap-exceeded`, `invariant` or `bad-params`.
    pub status: String,
    pub uninformed_best: String,
    pub uninformed_best_dec: String,
    pub uninformed_worst: String,
    pub uninformed_worst_dec: String,
    pub informed_best: String,
    pub informed_best_dec: String,
    pub informed_worst: String,
    pub informed_worst_dec: String,
    pub voi_plus: String,
    pub voi_plus_dec: String,
    pub voi_minus: String,
    pub voi_minus_dec: String,
    pub poa: String,
    pub poa_dec: String,
    pub pos: String,
    pub pos_dec: String,
    pub psi: String,
    pub psi_dec: String,
    pub rho: String,
    pub rho_dec: String,
    pub closed_form: String,
    pub closed_form_dec: String,
    pub closed_form_match: String,
    pub chk_voi_plus_ge_1: String,
    pub chk_voi_plus_le_cells: String,
    pub chk_voi_minus_ge_half: String,
    pub chk_voi_minus_le_2cells: String,
    pub chk_voi_plus_ge_1_minus_inv_e: String,
    pub chk_voi_minus_ge_1_minus_inv_e: String,
    pub chk_psi_le_voi_plus: String,
    pub chk_voi_plus_le_cells_over_psi: String,
    pub chk_rho_le_voi_minus: String,
    pub chk_voi_minus_le_cells_over_rho: String,
    pub bounds_ok: String,
}

/// Exact and decimal column values for an optional rational.
pub fn pair(x: Option<&Rational>) -> (String, String) {
    match x {
        Some(x) => (format_rational(x), decimal(x)),
        None => (String::new(), String::new()),
    }
}

impl ReportRow {
    pub fn from_report(label: &str, report: &MetricReport<Rational>, checks: &[BoundCheck]) -> Self {
        let mut row = ReportRow {
            row_kind: "instance".into(),
            label: label.into(),
            n_cells: report.n_cells.to_string(),
            rule_kind: report.rule_kind.to_string(),
            status: "ok".into(),
            ..Default::default()
        };
        (row.uninformed_best, row.uninformed_best_dec) = pair(Some(&report.uninformed_best));
        (row.uninformed_worst, row.uninformed_worst_dec) = pair(Some(&report.uninformed_worst));
        (row.informed_best, row.informed_best_dec) = pair(Some(&report.informed_best));
        (row.informed_worst, row.informed_worst_dec) = pair(Some(&report.informed_worst));
        (row.voi_plus, row.voi_plus_dec) = pair(report.voi_plus.as_ref());
        (row.voi_minus, row.voi_minus_dec) = pair(report.voi_minus.as_ref());
        (row.poa, row.poa_dec) = pair(report.poa.as_ref());
        (row.pos, row.pos_dec) = pair(report.pos.as_ref());
        if let Some(h) = &report.hull {
            (row.psi, row.psi_dec) = pair(Some(&h.psi));
            (row.rho, row.rho_dec) = pair(Some(&h.rho));
        }
        row.set_checks(checks);
        row
    }

    pub fn set_checks(&mut self, checks: &[BoundCheck]) {
        for c in checks {
            let slot = match c.name {
                "voi+>=1" => &mut self.chk_voi_plus_ge_1,
                "voi+<=|Pi|" => &mut self.chk_voi_plus_le_cells,
                "voi->=1/2" => &mut self.chk_voi_minus_ge_half,
                "voi-<=2|Pi|" => &mut self.chk_voi_minus_le_2cells,
                "voi+>=1-1/e" => &mut self.chk_voi_plus_ge_1_minus_inv_e,
                "voi->=1-1/e" => &mut self.chk_voi_minus_ge_1_minus_inv_e,
                "psi<=voi+" => &mut self.chk_psi_le_voi_plus,
                "voi+<=|Pi|/psi" => &mut self.chk_voi_plus_le_cells_over_psi,
                "rho<=voi-" => &mut self.chk_rho_le_voi_minus,
                "voi-<=|Pi|/rho" => &mut self.chk_voi_minus_le_cells_over_rho,
                other => unreachable!("unknown bound check {other}"),
            };
            *slot = c.outcome.as_str().to_string();
        }
        self.bounds_ok = covergame::metrics::all_bounds_hold(checks).to_string();
    }

    /// A row for a configuration that could not be analyzed.
    pub fn failed(label: &str, status: &str) -> Self {
        ReportRow { row_kind: "instance".into(), label: label.into(), status: status.into(), ..Default::default() }
    }
}

pub fn outcome_str(o: Outcome) -> String {
    o.as_str().to_string()
}

pub fn write_rows<W: Write>(out: W, rows: &[ReportRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        // header only
        w.write_record(header())?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names in order.
pub fn header() -> Vec<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.serialize(ReportRow::default()).expect("default row serializes");
    let bytes = w.into_inner().expect("in-memory writer");
    let text = String::from_utf8(bytes).expect("utf-8 header");
    text.lines().next().unwrap_or_default().split(',').map(str::to_string).collect()
}
