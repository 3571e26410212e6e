//! Plain-text table output: CSV with 12 significant digits.

use std::io::{self, Write};

use crate::lbd::{HypercompRow, LbdEquilibrium};
use crate::sim::{Firm, TrajectoryRow};
use crate::switching::SweepReport;

pub const SIGNIFICANT_DIGITS: usize = 12;

pub const EQUILIBRIUM_HEADER: &str = "i,j,P,p,q,v,w,W,C,residual";
pub const SWEEP_HEADER: &str = "s,x,q1,p1,p0,pbar,V,dpbar_ds";
pub const HYPERCOMP_HEADER: &str = "c1,v00,P10";
pub const TRAJECTORY_HEADER: &str = "rep,period,i,j,winner";

/// Formats like C's `%.12g`: fixed notation for exponents in `[-5, 12)`,
/// scientific otherwise, trailing zeros trimmed.
pub fn sig(x: f64) -> String {
    sig_digits(x, SIGNIFICANT_DIGITS)
}

pub fn sig_digits(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_equilibrium_csv<W: Write>(eq: &LbdEquilibrium, mut out: W) -> io::Result<()> {
    writeln!(out, "{EQUILIBRIUM_HEADER}")?;
    for r in eq.rows() {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.i,
            r.j,
            sig(r.price_gap),
            sig(r.price),
            sig(r.win_prob),
            sig(r.value),
            sig(r.w),
            sig(r.big_w),
            sig(r.cost_gap),
            sig(r.residual)
        )?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(report: &SweepReport, mut out: W) -> io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sig(r.s),
            sig(r.x),
            sig(r.q1),
            sig(r.p1),
            sig(r.p0),
            sig(r.pbar),
            sig(r.value_gap),
            sig(r.dpbar_ds)
        )?;
    }
    Ok(())
}

pub fn write_hypercomp_csv<W: Write>(rows: &[HypercompRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{HYPERCOMP_HEADER}")?;
    for r in rows {
        writeln!(out, "{},{},{}", sig(r.c1), sig(r.v00), sig(r.p10))?;
    }
    Ok(())
}

pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for r in rows {
        let w = match r.winner {
            Firm::A => "A",
            Firm::B => "B",
        };
        writeln!(out, "{},{},{},{},{}", r.rep, r.period, r.i, r.j, w)?;
    }
    Ok(())
}
