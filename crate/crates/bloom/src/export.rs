//! CSV exports. UTF-8, header row first, `.` as decimal separator. Floats use the
//! shortest representation that parses back to the same value.

use std::path::Path;

use bloom_core::ode::Trajectory;
use bloom_core::sensitivity::SensitivityReport;
use bloom_core::solver1d::{Grid1D, Trajectory1D};
use bloom_core::stability::SpectrumRow;

use crate::error::{Error, Result};

pub const ODE_HEADER: [&str; 5] = ["t", "B", "Q", "P", "p"];
pub const SPECTRUM_HEADER: [&str; 6] = ["n", "i", "Re_exact", "Im_exact", "Re_approx", "Im_approx"];
pub const SIM1D_HEADER: [&str; 6] = ["t", "x", "B", "Q", "P", "p"];
pub const SNAPSHOT_HEADER: [&str; 2] = ["t", "filename"];
pub const SOBOL_HEADER: [&str; 8] = ["factor", "bin_start", "bin_end", "S1_mean", "S1_sd", "ST_mean", "ST_sd", "N"];

pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Writes `header` and then every row to `path`.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Homogeneous trajectory, one row per sample: `t,B,Q,P,p`. `Q` is empty where `B = 0`.
pub fn ode_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| vec![num(t), num(s.biomass), s.quota().map(num).unwrap_or_default(), num(s.dissolved_p), num(s.internal_p)])
        .collect()
}

pub fn write_ode_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    write_csv(path, &ODE_HEADER, ode_rows(traj))
}

pub fn write_spectrum_csv(rows: &[SpectrumRow], path: &Path) -> Result<()> {
    write_csv(
        path,
        &SPECTRUM_HEADER,
        rows.iter().map(|r| vec![r.n.to_string(), r.i.to_string(), num(r.re_exact), num(r.im_exact), num(r.re_approx), num(r.im_approx)]),
    )
}

/// Long format, one row per sample and node.
pub fn write_sim1d_csv(traj: &Trajectory1D, grid: &Grid1D, path: &Path) -> Result<()> {
    let x = grid.positions();
    let rows = traj.times.iter().zip(&traj.fields).flat_map(|(&t, f)| {
        let x = &x;
        (0..f.len()).map(move |i| vec![num(t), num(x[i]), num(f.biomass[i]), num(f.quota[i]), num(f.dissolved[i]), num(f.internal[i])])
    });
    write_csv(path, &SIM1D_HEADER, rows)
}

pub fn write_snapshot_manifest(entries: &[(f64, String)], path: &Path) -> Result<()> {
    write_csv(path, &SNAPSHOT_HEADER, entries.iter().map(|(t, f)| vec![num(*t), f.clone()]))
}

pub fn write_sobol_csv(report: &SensitivityReport, path: &Path) -> Result<()> {
    write_csv(
        path,
        &SOBOL_HEADER,
        report.rows().into_iter().map(|r| {
            vec![r.factor, num(r.bin_start), num(r.bin_end), num(r.s1_mean), num(r.s1_sd), num(r.st_mean), num(r.st_sd), r.n.to_string()]
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use bloom_core::HomState;

    #[test]
    fn empty_trajectory_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ode.csv");
        write_ode_csv(&Trajectory::default(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "t,B,Q,P,p\n");
    }

    #[test]
    fn floats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ode.csv");
        let values = [1.0 / 3.0, 16.278512345678912, 1e-300, 2.5e17];
        let traj = Trajectory {
            times: values.to_vec(),
            states: values.iter().map(|&v| HomState::new(v, v * 0.01, v * 7.0)).collect(),
            ..Trajectory::default()
        };
        write_ode_csv(&traj, &path).unwrap();
        let mut r = csv::Reader::from_path(&path).unwrap();
        assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ODE_HEADER);
        for (rec, (&t, s)) in r.records().zip(traj.times.iter().zip(&traj.states)) {
            let rec = rec.unwrap();
            assert_eq!(rec[0].parse::<f64>().unwrap(), t);
            assert_eq!(rec[1].parse::<f64>().unwrap(), s.biomass);
            assert_eq!(rec[3].parse::<f64>().unwrap(), s.dissolved_p);
            assert_eq!(rec[4].parse::<f64>().unwrap(), s.internal_p);
        }
    }

    #[test]
    fn zero_biomass_leaves_quota_blank() {
        let traj = Trajectory { times: vec![0.0], states: vec![HomState::new(0.0, 0.0, 0.2)], ..Trajectory::default() };
        assert_eq!(ode_rows(&traj)[0], ["0.0", "0.0", "", "0.2", "0.0"]);
    }
}
