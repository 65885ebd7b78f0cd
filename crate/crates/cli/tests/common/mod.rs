#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nfda_core::data::{Cadence, TimeSeries};

pub const DAILY_COLUMN: &str = "68479_00060_00001";

pub fn nfda() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nfda"))
}

pub fn run(args: &[&str]) -> Output {
    nfda().args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Writes a series in NWIS RDB layout: monthly statistics use
/// `year_nu`/`month_nu`/`mean_va`, daily values a `datetime` column.
pub fn write_rdb(series: &TimeSeries, path: &Path) -> PathBuf {
    let mut s = String::from("# synthetic fixture\n# ---\n");
    match series.cadence() {
        Cadence::Monthly => {
            s.push_str("agency_cd\tsite_no\tparameter_cd\tyear_nu\tmonth_nu\tmean_va\n");
            s.push_str("5s\t15s\t5s\t4s\t2s\t12s\n");
            for (i, v) in series.values().iter().enumerate() {
                let (y, m) = series.stamp(i).split_once('-').map(|(a, b)| (a.to_string(), b.to_string())).unwrap();
                let m: u32 = m.parse().unwrap();
                let _ = writeln!(s, "USGS\t09498500\t00060\t{y}\t{m}\t{v}");
            }
        }
        Cadence::Daily => {
            let _ = writeln!(s, "agency_cd\tsite_no\tdatetime\t{DAILY_COLUMN}\t{DAILY_COLUMN}_cd");
            s.push_str("5s\t15s\t20d\t14n\t10s\n");
            for (i, v) in series.values().iter().enumerate() {
                let _ = writeln!(s, "USGS\t09498500\t{}\t{v}\tA", series.stamp(i));
            }
        }
    }
    std::fs::write(path, s).unwrap();
    path.to_path_buf()
}

pub fn write_csv(series: &TimeSeries, path: &Path) -> PathBuf {
    let mut s = String::from("date,flow\n");
    for (i, v) in series.values().iter().enumerate() {
        let _ = writeln!(s, "{},{v}", series.stamp(i));
    }
    std::fs::write(path, s).unwrap();
    path.to_path_buf()
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
