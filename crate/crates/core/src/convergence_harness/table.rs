//! Micro-macro table: weighted microscopic norms next to macroscopic ones.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

use super::FrameSummary;

pub const TABLE_HEADER: [&str; 8] =
    ["t", "macro_l2", "macro_linf", "macro_h1", "micro_l2", "micro_deriv_l2", "micro_full_l2", "micro_below_full"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicroMacroTable {
    pub rows: Vec<FrameSummary>,
    /// Whether `‖∂x G̃‖` is nonincreasing after `transient` (reported only).
    pub deriv_monotone_after_transient: bool,
    pub transient: f64,
}

pub fn micro_macro_report(frames: &[FrameSummary], transient: f64) -> MicroMacroTable {
    let late: Vec<f64> = frames.iter().filter(|f| f.t >= transient).map(|f| f.micro_deriv_l2).collect();
    let monotone = late.windows(2).all(|w| w[1] <= w[0]);
    MicroMacroTable { rows: frames.to_vec(), deriv_monotone_after_transient: monotone, transient }
}

impl MicroMacroTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(TABLE_HEADER)?;
        for r in &self.rows {
            let mut rec: Vec<String> = [r.t, r.macro_l2, r.macro_linf, r.macro_h1, r.micro_l2, r.micro_deriv_l2, r.micro_full_l2]
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect();
            rec.push((r.micro_l2 <= r.micro_full_l2).to_string());
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_trend_is_detected_after_the_transient() {
        let frames: Vec<FrameSummary> = [0.0, 0.5, 1.0, 2.0, 3.0]
            .iter()
            .map(|&t| FrameSummary { t, micro_deriv_l2: if t < 1.0 { t } else { 1.0 / t }, ..Default::default() })
            .collect();
        let tab = micro_macro_report(&frames, 1.0);
        assert!(tab.deriv_monotone_after_transient);
        let mut buf = Vec::new();
        tab.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("t,macro_l2"));
    }
}
