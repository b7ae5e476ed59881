//! Text formats: matches files, homography lines and the CSV outputs.
//!
//! Reals are written with `f64`'s `Display`, the shortest decimal that
//! round-trips, so output is byte-stable. Missing values are written `NA`.

use std::io::{self, Write};

use crate::aggregation::EstimateCloud;
use crate::benchmark::{ExperimentReport, IterationTrace};
use crate::error::{Error, Result};
use crate::geometry::{Homography, Match, Point2};
use crate::robust::TracePoint;

pub const CONSENSUS_TRACE_HEADER: &str = "iteration,score,error_if_ground_truth_known";
pub const CLOUD_HEADER: &str = "basis_index,x,y,weight";
pub const REPORT_HEADER: &str =
    "scenario_id,method,sigma,n_inliers,outlier_ratio,iterations,trials,mean_error_px,std_error_px,mean_runtime_s,failures";
pub const ITERATION_TRACE_HEADER: &str = "iteration,method,mean_error_px";

fn parse_reals<const N: usize>(line: &str, lineno: usize) -> Result<[f64; N]> {
    let err = |message: String| Error::Parse {
        line: lineno,
        message,
    };
    let mut out = [0.0; N];
    let mut tokens = line.split_whitespace();
    for (i, slot) in out.iter_mut().enumerate() {
        let t = tokens
            .next()
            .ok_or_else(|| err(format!("expected {N} numbers, got {i}")))?;
        let v: f64 = t
            .parse()
            .map_err(|_| err(format!("`{t}` is not a number")))?;
        if !v.is_finite() {
            return Err(err(format!("`{t}` is not finite")));
        }
        *slot = v;
    }
    if let Some(t) = tokens.next() {
        return Err(err(format!("unexpected trailing token `{t}`")));
    }
    Ok(out)
}

/// Content lines with their 1-based numbers; `#` starts a comment.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

/// Parses `x1 y1 x2 y2` lines.
pub fn parse_matches(text: &str) -> Result<Vec<Match>> {
    content_lines(text)
        .map(|(n, l)| {
            let [x1, y1, x2, y2] = parse_reals::<4>(l, n)?;
            Ok(Match::new(Point2::new(x1, y1), Point2::new(x2, y2)))
        })
        .collect()
}

pub fn write_matches<W: Write>(mut w: W, matches: &[Match]) -> io::Result<()> {
    for m in matches {
        writeln!(w, "{} {} {} {}", m.src.x, m.src.y, m.dst.x, m.dst.y)?;
    }
    Ok(())
}

/// Parses one homography per content line.
pub fn parse_homographies(text: &str) -> Result<Vec<Homography>> {
    content_lines(text)
        .map(|(n, l)| {
            let e = parse_reals::<9>(l, n)?;
            Homography::from_row_major(&e).map_err(|err| Error::Parse {
                line: n,
                message: err.to_string(),
            })
        })
        .collect()
}

pub fn write_homography<W: Write>(mut w: W, h: &Homography) -> io::Result<()> {
    writeln!(w, "{h}")
}

fn real(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "NA".into()
    }
}

/// One row per improvement of the best hypothesis. `errors`, when given,
/// holds the ground-truth error of each trace point's model.
pub fn write_consensus_trace<W: Write>(
    mut w: W,
    trace: &[TracePoint],
    errors: Option<&[f64]>,
) -> io::Result<()> {
    writeln!(w, "{CONSENSUS_TRACE_HEADER}")?;
    for (i, t) in trace.iter().enumerate() {
        let e = errors
            .and_then(|e| e.get(i).copied())
            .map_or_else(|| "NA".into(), real);
        writeln!(w, "{},{},{}", t.iteration, real(t.score), e)?;
    }
    Ok(())
}

/// Basis-point-major dump of every recorded hypothesis.
pub fn write_cloud<W: Write>(mut w: W, cloud: &EstimateCloud) -> io::Result<()> {
    writeln!(w, "{CLOUD_HEADER}")?;
    for j in 0..cloud.basis_len() {
        for (p, wt) in cloud.estimates(j).iter().zip(cloud.weights()) {
            writeln!(w, "{j},{},{},{}", p.x, p.y, wt)?;
        }
    }
    Ok(())
}

/// Report rows. Runtimes vary between runs, so they are only written when
/// `timing` is set; otherwise the column holds `NA` and the file is
/// reproducible byte for byte.
pub fn write_report<W: Write>(
    mut w: W,
    reports: &[ExperimentReport],
    timing: bool,
) -> io::Result<()> {
    writeln!(w, "{REPORT_HEADER}")?;
    for r in reports {
        let runtime = if timing {
            real(r.mean_runtime_s)
        } else {
            "NA".into()
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.scenario_id,
            r.method,
            r.sigma,
            r.n_inliers,
            r.outlier_ratio,
            r.iterations,
            r.trials,
            real(r.mean_error),
            real(r.std_error),
            runtime,
            r.failures
        )?;
    }
    Ok(())
}

pub fn write_iteration_trace<W: Write>(mut w: W, trace: &IterationTrace) -> io::Result<()> {
    writeln!(w, "{ITERATION_TRACE_HEADER}")?;
    for (i, it) in trace.checkpoints.iter().enumerate() {
        for (method, curve) in &trace.curves {
            writeln!(w, "{it},{method},{}", real(curve[i]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_with_comments_and_blanks() {
        let text = "# header\n\n1 2 3 4\n  5 6 7 8   # trailing\n";
        let m = parse_matches(text).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(
            m[1],
            Match::new(Point2::new(5.0, 6.0), Point2::new(7.0, 8.0))
        );
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "0 0 0 0\n1 1 1 1\n2 2 2 2\n3 3 3 3\n# c\n\n4 4 x 4\n";
        assert!(matches!(
            parse_matches(text),
            Err(Error::Parse { line: 7, .. })
        ));
        assert!(matches!(
            parse_matches("1 2 3\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_matches("1 2 3 4 5\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_matches("1 2 3 inf\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn matches_round_trip() {
        let m = vec![Match::new(
            Point2::new(0.1, -2.5e-7),
            Point2::new(1e10, 3.0),
        )];
        let mut buf = Vec::new();
        write_matches(&mut buf, &m).unwrap();
        assert_eq!(
            parse_matches(std::str::from_utf8(&buf).unwrap()).unwrap(),
            m
        );
    }

    #[test]
    fn homography_round_trip() {
        let h =
            Homography::from_row_major(&[1.1, 0.2, 30.0, -0.1, 0.9, 7.0, 1e-4, 2e-5, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_homography(&mut buf, &h).unwrap();
        let back = parse_homographies(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, vec![h]);
    }

    #[test]
    fn consensus_trace_rows() {
        let t = [TracePoint {
            iteration: 3,
            score: 10.0,
            inliers: 10,
            model: Homography::identity(),
        }];
        let mut buf = Vec::new();
        write_consensus_trace(&mut buf, &t, None).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{CONSENSUS_TRACE_HEADER}\n3,10,NA\n")
        );
    }
}
