//! Photon-count streams.
//!
//! Each experiment cycle is a green initialization pulse followed by a CPT
//! detection window. Counts are tallied per update interval; intervals inside
//! the green pulse carry `y = 0` and `in_init = true`. The charge state is
//! drawn once per cycle, and a failed initialization leaves a field-independent
//! count rate for the whole window.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::cpt::SignalModel;
use crate::error::{Error, Result};
use crate::ou::OuTrajectory;
use crate::rng::rng_from_seed;
use crate::units::rad_to_hz;

pub const COUNTS_HEADER: &str = "n,t_seconds,y,in_init";
pub const TRUTH_HEADER: &str = "n,t_seconds,x_hz,charge_ok";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleTiming {
    /// Green initialization pulse (s).
    pub init_duration: f64,
    /// CPT detection window (s).
    pub cpt_duration: f64,
    /// Update interval `tau` (s).
    pub update_interval: f64,
}

impl Default for CycleTiming {
    fn default() -> Self {
        Self { init_duration: 10e-6, cpt_duration: 100e-6, update_interval: 10e-6 }
    }
}

fn whole_intervals(duration: f64, tau: f64, what: &str) -> Result<usize> {
    let k = (duration / tau).round();
    if (duration - k * tau).abs() > 1e-9 * tau {
        return Err(Error::invalid(format!(
            "{what} ({duration} s) is not a multiple of the update interval ({tau} s)"
        )));
    }
    Ok(k as usize)
}

impl CycleTiming {
    pub fn new(init_duration: f64, cpt_duration: f64, update_interval: f64) -> Result<Self> {
        let t = Self { init_duration, cpt_duration, update_interval };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.update_interval > 0.0) {
            return Err(Error::invalid("update interval must be positive"));
        }
        if !(self.init_duration >= 0.0) {
            return Err(Error::invalid("init duration must be non-negative"));
        }
        if whole_intervals(self.cpt_duration, self.update_interval, "CPT window")? == 0 {
            return Err(Error::invalid("CPT window must hold at least one update interval"));
        }
        whole_intervals(self.init_duration, self.update_interval, "init pulse")?;
        Ok(())
    }

    /// Timing without dead time: every interval is a CPT interval.
    pub fn continuous(update_interval: f64) -> Self {
        Self { init_duration: 0.0, cpt_duration: update_interval, update_interval }
    }

    pub fn init_intervals(&self) -> usize {
        (self.init_duration / self.update_interval).round() as usize
    }

    pub fn cpt_intervals(&self) -> usize {
        (self.cpt_duration / self.update_interval).round() as usize
    }

    pub fn cycle_intervals(&self) -> usize {
        self.init_intervals() + self.cpt_intervals()
    }

    /// Position of interval `n` in its cycle; the green pulse comes first.
    pub fn phase(&self, n: usize) -> usize {
        n % self.cycle_intervals()
    }

    pub fn is_init(&self, n: usize) -> bool {
        self.phase(n) < self.init_intervals()
    }

    pub fn live_fraction(&self) -> f64 {
        self.cpt_duration / (self.cpt_duration + self.init_duration)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeModel {
    /// Probability that a green pulse leaves the optically active charge state.
    pub init_fidelity: f64,
    /// Count rate (1/s) during a window whose initialization failed.
    pub neutral_rate: f64,
}

impl ChargeModel {
    pub fn ideal() -> Self {
        Self { init_fidelity: 1.0, neutral_rate: 0.0 }
    }

    pub fn new(init_fidelity: f64, neutral_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&init_fidelity) {
            return Err(Error::invalid(format!("init fidelity must lie in [0, 1], got {init_fidelity}")));
        }
        if !(neutral_rate >= 0.0) {
            return Err(Error::invalid("neutral count rate must be non-negative"));
        }
        Ok(Self { init_fidelity, neutral_rate })
    }
}

impl Default for ChargeModel {
    fn default() -> Self {
        Self::ideal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    pub n: u64,
    /// Interval start time (s).
    pub t: f64,
    pub y: u32,
    pub in_init: bool,
    /// Diagnostic only; never written to the estimator-facing stream.
    pub charge_ok: bool,
}

impl CountRecord {
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.in_init && self.y != 0 {
            return Err(format!("interval {} is an init interval but has {} counts", self.n, self.y));
        }
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(format!("bad interval start time {}", self.t));
        }
        Ok(())
    }

    pub fn to_csv_line(&self) -> String {
        format!("{},{},{},{}", self.n, self.t, self.y, u8::from(self.in_init))
    }
}

/// Draws photon counts for every interval of `traj`.
pub fn simulate_counts(
    traj: &OuTrajectory,
    timing: &CycleTiming,
    model: &SignalModel,
    charge: &ChargeModel,
    seed: u64,
) -> Result<Vec<CountRecord>> {
    timing.validate()?;
    let tau = timing.update_interval;
    if (traj.dt - tau).abs() > 1e-12 * tau {
        return Err(Error::invalid(format!(
            "trajectory step {} s does not match the update interval {} s",
            traj.dt, tau
        )));
    }
    let mut rng = rng_from_seed(seed);
    let neutral_mean = charge.neutral_rate * tau;
    let mut charge_ok = true;
    let mut out = Vec::with_capacity(traj.len());
    for (n, &x) in traj.samples.iter().enumerate() {
        if timing.phase(n) == 0 {
            charge_ok = rng.random_bool(charge.init_fidelity);
        }
        let in_init = timing.is_init(n);
        let y = if in_init {
            0
        } else {
            let mean = if charge_ok { model.expected_count(x, tau) } else { neutral_mean };
            poisson(&mut rng, mean)
        };
        out.push(CountRecord { n: n as u64, t: traj.time(n), y, in_init, charge_ok });
    }
    Ok(out)
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    let v: f64 = d.sample(rng);
    v as u32
}

pub fn write_counts<W: Write>(records: &[CountRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{COUNTS_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.to_csv_line())?;
    }
    out.flush()
}

/// Ground-truth side file for scoring: field and charge state per interval.
pub fn write_truth<W: Write>(records: &[CountRecord], traj: &OuTrajectory, mut out: W) -> Result<()> {
    if records.len() != traj.len() {
        return Err(Error::Misaligned(format!(
            "{} count records against {} trajectory samples",
            records.len(),
            traj.len()
        )));
    }
    writeln!(out, "{TRUTH_HEADER}")?;
    for (r, x) in records.iter().zip(&traj.samples) {
        writeln!(out, "{},{},{},{}", r.n, r.t, rad_to_hz(*x), u8::from(r.charge_ok))?;
    }
    out.flush()?;
    Ok(())
}

fn parse_flag(s: &str) -> Option<bool> {
    match s {
        "0" | "false" => Some(false),
        "1" | "true" => Some(true),
        _ => None,
    }
}

/// Parses one `n,t_seconds,y,in_init` line. `line_no` is 1-based and only
/// used in errors. Charge state is unknown to a replayed stream and set true.
pub fn parse_count_line(line: &str, line_no: usize) -> Result<CountRecord> {
    let err = |message: String| Error::Parse { line: line_no, message };
    let fields: Vec<&str> = line.trim().split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(err(format!("expected 4 fields, found {}", fields.len())));
    }
    let n = fields[0].parse::<u64>().map_err(|e| err(format!("interval index {:?}: {e}", fields[0])))?;
    let t = fields[1].parse::<f64>().map_err(|e| err(format!("time {:?}: {e}", fields[1])))?;
    let y = fields[2]
        .parse::<u32>()
        .map_err(|_| err(format!("count {:?} is not a non-negative integer", fields[2])))?;
    let in_init = parse_flag(fields[3]).ok_or_else(|| err(format!("in_init {:?} is not 0/1", fields[3])))?;
    let rec = CountRecord { n, t, y, in_init, charge_ok: true };
    rec.check().map_err(|message| Error::Invariant { line: line_no, message })?;
    Ok(rec)
}

pub fn is_counts_header(line: &str) -> bool {
    line.trim() == COUNTS_HEADER
}

/// Reads a count stream: mandatory header, records in causal order.
pub fn read_counts<R: BufRead>(input: R) -> Result<Vec<CountRecord>> {
    let mut lines = input.lines();
    match lines.next() {
        None => return Ok(Vec::new()),
        Some(header) => {
            let header = header?;
            if !is_counts_header(&header) {
                return Err(Error::Parse { line: 1, message: format!("expected header {COUNTS_HEADER:?}") });
            }
        }
    }
    let mut out: Vec<CountRecord> = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_count_line(&line, line_no)?;
        if let Some(prev) = out.last() {
            if rec.n <= prev.n {
                return Err(Error::Invariant {
                    line: line_no,
                    message: format!("interval {} does not follow {}", rec.n, prev.n),
                });
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn replay_counts(path: &Path) -> Result<Vec<CountRecord>> {
    let file = File::open(path).map_err(|source| Error::File { path: path.to_owned(), source })?;
    read_counts(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpt::{CptLineshape, RateCalibration};
    use crate::ou::{generate_trajectory, OuParams};
    use crate::units::hz_to_rad;

    fn flat_model(rate: f64) -> SignalModel {
        SignalModel::new(
            CptLineshape::from_hz(11.6e6, 0.0, 0.5).unwrap(),
            RateCalibration { counts_per_pop_per_second: rate / 0.5, bias: 0.0, mean_rate_target: rate },
        )
    }

    fn traj(n: usize) -> OuTrajectory {
        generate_trajectory(&OuParams::from_hz(2.2e6, 5e-3).unwrap(), 10e-6, n, 5).unwrap()
    }

    #[test]
    fn timing_validation() {
        assert!(CycleTiming::new(10e-6, 100e-6, 10e-6).is_ok());
        assert!(CycleTiming::new(10e-6, 105e-6, 10e-6).is_err());
        assert!(CycleTiming::new(0.0, 10e-6, 10e-6).is_ok());
        assert!(CycleTiming::new(10e-6, 100e-6, 0.0).is_err());
        let t = CycleTiming::default();
        assert_eq!(t.cycle_intervals(), 11);
        assert!(t.is_init(0) && !t.is_init(1) && t.is_init(11));
    }

    #[test]
    fn duty_cycle_is_exact() {
        let t = CycleTiming::default();
        let recs = simulate_counts(&traj(11 * 1000), &t, &flat_model(5400.0), &ChargeModel::ideal(), 1).unwrap();
        let init = recs.iter().filter(|r| r.in_init).count();
        assert_eq!(init, 1000);
        assert!(recs.iter().filter(|r| r.in_init).all(|r| r.y == 0));
    }

    #[test]
    fn failed_charge_without_neutral_rate_is_dark() {
        let recs = simulate_counts(
            &traj(20_000),
            &CycleTiming::default(),
            &flat_model(5400.0),
            &ChargeModel::new(0.0, 0.0).unwrap(),
            3,
        )
        .unwrap();
        assert!(recs.iter().all(|r| r.y == 0 && !r.charge_ok));
    }

    #[test]
    fn charge_is_constant_within_a_cycle() {
        let t = CycleTiming::default();
        let recs =
            simulate_counts(&traj(11 * 500), &t, &flat_model(5400.0), &ChargeModel::new(0.5, 0.0).unwrap(), 9).unwrap();
        for cycle in recs.chunks(11) {
            assert!(cycle.iter().all(|r| r.charge_ok == cycle[0].charge_ok));
        }
        let ok = recs.chunks(11).filter(|c| c[0].charge_ok).count();
        assert!(ok > 200 && ok < 300, "{ok}");
    }

    #[test]
    fn rejects_mismatched_step() {
        let t = generate_trajectory(&OuParams::from_hz(1e6, 1e-3).unwrap(), 5e-6, 10, 0).unwrap();
        assert!(simulate_counts(&t, &CycleTiming::default(), &flat_model(1.0), &ChargeModel::ideal(), 0).is_err());
    }

    #[test]
    fn same_seed_same_counts() {
        let tr = traj(5000);
        let m = flat_model(54_000.0);
        let c = ChargeModel::new(0.75, 100.0).unwrap();
        let a = simulate_counts(&tr, &CycleTiming::default(), &m, &c, 4).unwrap();
        let b = simulate_counts(&tr, &CycleTiming::default(), &m, &c, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip_through_csv() {
        let shape = CptLineshape::default();
        let ou = OuParams::from_hz(2.2e6, 5e-3).unwrap();
        let model = SignalModel::calibrated(shape, 4e6, &ou, 5400.0).unwrap();
        let recs = simulate_counts(&traj(3000), &CycleTiming::default(), &model, &ChargeModel::ideal(), 8).unwrap();
        let mut buf = Vec::new();
        write_counts(&recs, &mut buf).unwrap();
        let back = read_counts(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn negative_count_names_its_line() {
        let text = "n,t_seconds,y,in_init\n0,0,0,1\n1,0.00001,-1,0\n";
        match read_counts(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counts_inside_init_pulse_are_rejected() {
        let text = "n,t_seconds,y,in_init\n0,0,2,1\n";
        assert!(matches!(read_counts(text.as_bytes()), Err(Error::Invariant { line: 2, .. })));
    }

    #[test]
    fn header_only_is_empty() {
        assert!(read_counts(format!("{COUNTS_HEADER}\n").as_bytes()).unwrap().is_empty());
        assert!(read_counts("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn truth_file_layout() {
        let tr = OuTrajectory { dt: 10e-6, samples: vec![hz_to_rad(1e6)], seed: 0 };
        let recs = vec![CountRecord { n: 0, t: 0.0, y: 0, in_init: true, charge_ok: false }];
        let mut buf = Vec::new();
        write_truth(&recs, &tr, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{TRUTH_HEADER}\n0,0,1000000,0\n"));
    }
}
