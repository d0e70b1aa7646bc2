//! CSV writers. One header row, `#` comment lines above it, and every float
//! written with 17 significant digits in C-locale scientific notation.

use std::io::{self, Write};

use crate::ensemble::FigureRow;
use crate::error::Result;
use crate::kernels::{j_coeff, laplace_kernel, memory_kernel, CutoffKind, KernelSpec};
use crate::noise::FdtRow;
use crate::stats::EnsembleStats;

pub const TRAJECTORY_HEADER: [&str; 7] = ["t", "tau", "Q_mean", "Q_var", "Q_var_stderr", "v_mean", "v_var"];
pub const FIGURE_HEADER: [&str; 4] = ["curve_id", "delta", "tau", "q2_normalized"];
pub const FDT_HEADER: [&str; 6] = ["kind", "lag_time", "target", "estimate", "stderr", "z_score"];
pub const KERNELS_HEADER: [&str; 5] = ["kind", "omega", "quantity", "arg", "value"];

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.16e}")
    }
}

/// Streaming CSV writer; comments are only allowed before the header.
pub struct CsvWriter<W: Write> {
    out: W,
    columns: usize,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W, comments: &[String], header: &[&str]) -> io::Result<Self> {
        for c in comments {
            for line in c.lines() {
                writeln!(out, "# {line}")?;
            }
        }
        writeln!(out, "{}", header.join(","))?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, fields: &[String]) -> io::Result<()> {
        debug_assert_eq!(fields.len(), self.columns);
        writeln!(self.out, "{}", fields.join(","))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub fn write_trajectory_csv<W: Write>(
    out: W,
    stats: &EnsembleStats,
    spec: &KernelSpec,
    comments: &[String],
) -> io::Result<W> {
    let mut w = CsvWriter::new(out, comments, &TRAJECTORY_HEADER)?;
    for r in stats.rows() {
        w.row(&[
            fmt_f64(r.t),
            fmt_f64(spec.tau(r.t)),
            fmt_f64(r.q_mean),
            fmt_f64(r.q_var),
            fmt_f64(r.q_var_stderr),
            fmt_f64(r.v_mean),
            fmt_f64(r.v_var),
        ])?;
    }
    w.finish()
}

pub fn write_figure_csv<W: Write>(out: W, rows: &[FigureRow], comments: &[String]) -> io::Result<W> {
    let mut w = CsvWriter::new(out, comments, &FIGURE_HEADER)?;
    for r in rows {
        w.row(&[
            r.curve_id.to_owned(),
            fmt_f64(r.delta),
            fmt_f64(r.tau),
            fmt_f64(r.q2_normalized),
        ])?;
    }
    w.finish()
}

pub fn write_fdt_csv<W: Write>(out: W, rows: &[FdtRow], comments: &[String]) -> io::Result<W> {
    let mut w = CsvWriter::new(out, comments, &FDT_HEADER)?;
    for r in rows {
        w.row(&[
            r.kind.name().to_owned(),
            fmt_f64(r.lag_time),
            fmt_f64(r.target),
            fmt_f64(r.estimate),
            fmt_f64(r.stderr),
            fmt_f64(r.z_score),
        ])?;
    }
    w.finish()
}

/// One tabulated kernel quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRow {
    pub kind: CutoffKind,
    pub omega: f64,
    /// `delta` (Δ_Ω(t)), `J<n>` (J_n(Ωt)) or `laplace` (Δ̃_δ(s)).
    pub quantity: String,
    pub arg: f64,
    pub value: f64,
}

/// Tabulates Δ_Ω(t) at `times`, J_0..J_max_j at `ys` (clipped to the
/// kind's supported order) and Δ̃_δ(s) at `ss`.
pub fn kernel_table(spec: &KernelSpec, times: &[f64], ys: &[f64], max_j: usize, ss: &[f64]) -> Result<Vec<KernelRow>> {
    let row = |quantity: String, arg: f64, value: f64| KernelRow {
        kind: spec.kind,
        omega: spec.omega,
        quantity,
        arg,
        value,
    };
    let mut rows = Vec::new();
    for &t in times {
        rows.push(row("delta".into(), t, memory_kernel(spec, t)));
    }
    for n in 0..=max_j.min(spec.kind.max_j_order()) {
        for &y in ys {
            rows.push(row(format!("J{n}"), y, j_coeff(spec, n, y)?));
        }
    }
    for &s in ss {
        rows.push(row("laplace".into(), s, laplace_kernel(spec, s)?));
    }
    Ok(rows)
}

pub fn write_kernels_csv<W: Write>(out: W, rows: &[KernelRow], comments: &[String]) -> io::Result<W> {
    let mut w = CsvWriter::new(out, comments, &KERNELS_HEADER)?;
    for r in rows {
        w.row(&[
            r.kind.name().to_owned(),
            fmt_f64(r.omega),
            r.quantity.clone(),
            fmt_f64(r.arg),
            fmt_f64(r.value),
        ])?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn kernel_table_respects_order_limits() {
        let sharp = KernelSpec::new(CutoffKind::Sharp, 1.0, 2.0, 1.0, 1.0).unwrap();
        let rows = kernel_table(&sharp, &[0.0, 1.0], &[1.0], 4, &[1.0]).unwrap();
        assert_eq!(rows.len(), 2 + 3 + 1);
        assert!(rows.iter().all(|r| r.value.is_finite()));
        assert_eq!(rows[0].value, 2.0 / std::f64::consts::PI);
    }

    #[test]
    fn comments_precede_header() {
        let rows = [FigureRow {
            curve_id: "markov",
            delta: 0.5,
            tau: 1.0,
            q2_normalized: 0.25,
        }];
        let buf = write_figure_csv(Vec::new(), &rows, &["a\nb".to_owned()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# a");
        assert_eq!(lines[1], "# b");
        assert_eq!(lines[2], "curve_id,delta,tau,q2_normalized");
        assert_eq!(lines[3], "markov,5.0000000000000000e-1,1.0000000000000000e0,2.5000000000000000e-1");
    }
}
