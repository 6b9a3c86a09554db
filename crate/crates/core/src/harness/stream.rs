//! Line-by-line estimation: count records in, estimate records out.

use std::io::{BufRead, Write};

use super::config::ExperimentConfig;
use super::experiment::Prepared;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, ESTIMATES_HEADER};
use crate::photon::{is_counts_header, parse_count_line};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamSummary {
    pub lines: usize,
    pub emitted: usize,
    pub skipped: usize,
}

/// Reads count records from `input` and writes one estimate per record to
/// `output`, flushing after each. The estimates header goes out with the
/// first estimate, so empty input gives empty output. A header line on input
/// is optional. Bad lines are reported to `diag` and skipped, or abort the
/// stream with the line number when `strict` is set.
pub fn stream_estimate<R: BufRead, W: Write, D: Write>(
    input: R,
    mut output: W,
    mut diag: D,
    cfg: &ExperimentConfig,
    strict: bool,
) -> Result<StreamSummary> {
    let p = Prepared::new(cfg)?;
    let mut est = p.estimator(cfg.estimator, cfg)?;
    let mut summary = StreamSummary::default();
    let mut last_n: Option<u64> = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        summary.lines = line_no;
        let trimmed = line.trim();
        if trimmed.is_empty() || (summary.emitted == 0 && summary.skipped == 0 && is_counts_header(trimmed)) {
            continue;
        }
        let parsed = parse_count_line(trimmed, line_no).and_then(|r| match last_n {
            Some(prev) if r.n <= prev => Err(Error::Invariant {
                line: line_no,
                message: format!("interval index {} does not follow {prev}", r.n),
            }),
            _ => Ok(r),
        });
        let rec = match parsed {
            Ok(r) => r,
            Err(e) if strict => return Err(e),
            Err(e) => {
                writeln!(diag, "skipped: {e}")?;
                summary.skipped += 1;
                continue;
            }
        };
        last_n = Some(rec.n);
        if summary.emitted == 0 {
            writeln!(output, "{ESTIMATES_HEADER}")?;
        }
        writeln!(output, "{}", est.step(&rec).to_csv_line())?;
        output.flush()?;
        summary.emitted += 1;
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::write_estimates;
    use crate::harness::experiment::simulate;
    use crate::photon::write_counts;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig { sim_duration: 0.02, n_bins: 128, ..Default::default() }
    }

    #[test]
    fn matches_batch_bit_for_bit() {
        let cfg = cfg();
        let sim = simulate(&cfg, 0).unwrap();
        let mut counts = Vec::new();
        write_counts(&sim.counts, &mut counts).unwrap();

        let mut streamed = Vec::new();
        let s = stream_estimate(counts.as_slice(), &mut streamed, std::io::sink(), &cfg, true).unwrap();
        assert_eq!(s.emitted, sim.counts.len());

        let p = Prepared::new(&cfg).unwrap();
        let batch = crate::estimators::run_ou_bayesian(&sim.counts, &p.ou, &p.model, p.tau(), cfg.grid()).unwrap();
        let mut expected = Vec::new();
        write_estimates(&batch, &mut expected).unwrap();
        assert_eq!(streamed, expected);
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let mut out = Vec::new();
        let s = stream_estimate(&b""[..], &mut out, std::io::sink(), &cfg(), true).unwrap();
        assert!(out.is_empty());
        assert_eq!(s.emitted, 0);
        let s = stream_estimate(&b"n,t_seconds,y,in_init\n"[..], &mut out, std::io::sink(), &cfg(), true).unwrap();
        assert!(out.is_empty());
        assert_eq!(s.lines, 1);
    }

    #[test]
    fn strict_mode_names_the_bad_line() {
        let input = "n,t_seconds,y,in_init\n0,0,0,1\n1,0.00001,oops,0\n2,0.00002,1,0\n";
        let e = stream_estimate(input.as_bytes(), Vec::new(), std::io::sink(), &cfg(), true).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn lenient_mode_skips_and_reports() {
        let input = "0,0,0,1\n1,0.00001,oops,0\n2,0.00002,1,0\n2,0.00002,1,0\n";
        let mut out = Vec::new();
        let mut diag = Vec::new();
        let s = stream_estimate(input.as_bytes(), &mut out, &mut diag, &cfg(), false).unwrap();
        assert_eq!((s.emitted, s.skipped), (2, 2));
        let diag = String::from_utf8(diag).unwrap();
        assert!(diag.contains("line 2") && diag.contains("line 4"), "{diag}");
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 3);
    }
}
