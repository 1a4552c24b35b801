//! Profile CSV: `eta,theta_hat,dtheta_hat,theta_nf,g1,g2,g3`, one row per
//! η node, values with 17 significant digits.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::profile_builder::corrections::CorrectionProfile;
use crate::profile_builder::similarity::SimilarityProfile;

pub const PROFILE_HEADER: [&str; 7] = ["eta", "theta_hat", "dtheta_hat", "theta_nf", "g1", "g2", "g3"];

/// One parsed CSV row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRow {
    pub eta: f64,
    pub theta_hat: f64,
    pub dtheta_hat: f64,
    pub theta_nf: f64,
    pub g: [f64; 3],
}

pub fn profile_rows(sim: &SimilarityProfile, corr: &CorrectionProfile) -> Vec<ProfileRow> {
    let nf = corr.theta_nf();
    (0..sim.n_nodes())
        .map(|i| ProfileRow {
            eta: sim.eta(i),
            theta_hat: sim.theta_hat()[i],
            dtheta_hat: sim.dtheta_hat()[i],
            theta_nf: nf[i],
            g: [corr.g[0][i], corr.g[1][i], corr.g[2][i]],
        })
        .collect()
}

pub fn write_profile_csv<W: Write>(out: W, sim: &SimilarityProfile, corr: &CorrectionProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PROFILE_HEADER)?;
    for r in profile_rows(sim, corr) {
        let vals = [r.eta, r.theta_hat, r.dtheta_hat, r.theta_nf, r.g[0], r.g[1], r.g[2]];
        w.write_record(vals.iter().map(|v| format!("{v:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profile_csv<R: Read>(input: R) -> Result<Vec<ProfileRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != PROFILE_HEADER {
        return Err(Error::Config(format!("unexpected profile header {header:?}")));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        if v.len() != PROFILE_HEADER.len() {
            return Err(Error::Config(format!("row with {} fields", v.len())));
        }
        rows.push(ProfileRow { eta: v[0], theta_hat: v[1], dtheta_hat: v[2], theta_nf: v[3], g: [v[4], v[5], v[6]] });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic_model::gas::GasModel;
    use crate::profile_builder::corrections::{build_corrections, NhatProfile};
    use crate::profile_builder::similarity::{solve_theta_hat, SimilarityOptions};

    #[test]
    fn csv_round_trip_is_exact() {
        let gas = GasModel::default();
        let sim = solve_theta_hat(1.0, 1.1, gas.a_law(), &SimilarityOptions { n_nodes: 201, ..Default::default() }).unwrap();
        let corr = build_corrections(&sim, &gas, NhatProfile::zeros(sim.n_nodes())).unwrap();
        let mut buf = Vec::new();
        write_profile_csv(&mut buf, &sim, &corr).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("eta,theta_hat,dtheta_hat,theta_nf,g1,g2,g3\n"));
        let rows = read_profile_csv(&buf[..]).unwrap();
        assert_eq!(rows, profile_rows(&sim, &corr));
    }
}
