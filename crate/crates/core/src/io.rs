//! CSV trajectory files and SVG stick-figure rendering.
//!
//! Every number is written with 17 significant digits in scientific
//! notation, which round-trips `f64` exactly and does not depend on locale.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::gait::{GaitError, GaitSolution};
use crate::kinematics::{joint_positions, Joints};
use crate::params::RobotParams;
use crate::simulation::{uniform_grid, Trajectory};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Gait(#[from] GaitError),
}

/// Formats a value with 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// A header plus rows of numbers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

fn series_names<'a>(prefix: &'a str, suffix: &'a str) -> impl Iterator<Item = String> + use<'a> {
    (1..=5).map(move |i| format!("{prefix}{i}{suffix}"))
}

/// Columns of a desired-trajectory file.
pub fn desired_header() -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(series_names("theta", "_d"))
        .chain(series_names("dtheta", "_d"))
        .chain(series_names("ddtheta", "_d"))
        .collect()
}

/// Columns of a closed-loop trajectory file.
pub fn trajectory_header() -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(series_names("theta", ""))
        .chain(series_names("dtheta", ""))
        .chain(series_names("theta", "_d"))
        .chain(series_names("dtheta", "_d"))
        .chain(series_names("ddtheta", "_d"))
        .chain(series_names("u", ""))
        .collect()
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column_values(&self, name: &str) -> Result<Vec<f64>, IoError> {
        let c = self
            .column(name)
            .ok_or_else(|| IoError::MissingColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[c]).collect())
    }

    /// Reads five consecutive-named columns (`{prefix}1{suffix}` ..) as joint vectors.
    pub fn joint_series(&self, prefix: &str, suffix: &str) -> Result<Vec<Joints>, IoError> {
        let cols = series_names(prefix, suffix)
            .map(|n| self.column(&n).ok_or(IoError::MissingColumn(n)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self
            .rows
            .iter()
            .map(|r| Joints::from_fn(|i, _| r[cols[i]]))
            .collect())
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_value(*v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    pub fn write_file(&self, path: &Path) -> Result<(), IoError> {
        let io = |source| IoError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = File::create(path).map_err(io)?;
        self.write(file).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => io(source),
            other => IoError::Malformed {
                row: 0,
                message: format!("{other:?}"),
            },
        })
    }

    /// Parses a CSV document. Row numbers in errors count the header as row 1.
    pub fn parse<R: Read>(input: R) -> Result<Self, IoError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(input);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| IoError::Malformed {
                row: 1,
                message: e.to_string(),
            })?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(IoError::Malformed {
                row: 1,
                message: "empty header".into(),
            });
        }
        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| IoError::Malformed {
                row,
                message: e.to_string(),
            })?;
            let values = record
                .iter()
                .map(|field| {
                    field.trim().parse::<f64>().map_err(|_| IoError::Malformed {
                        row,
                        message: format!("`{field}` is not a number"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(values);
        }
        Ok(Self { header, rows })
    }

    pub fn read_file(path: &Path) -> Result<Self, IoError> {
        let file = File::open(path).map_err(|source| IoError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(file)
    }
}

/// Desired trajectory sampled on a uniform grid of step `grid` (s).
pub fn desired_table(solution: &GaitSolution, grid: f64) -> Result<CsvTable, GaitError> {
    let spec = &solution.spec;
    let mut rows = Vec::new();
    for t in uniform_grid(spec.t_start, spec.t_end, grid) {
        let d = solution.desired_state(t)?;
        let mut row = Vec::with_capacity(16);
        row.push(t);
        row.extend(d.theta.iter());
        row.extend(d.theta_dot.iter());
        row.extend(d.theta_ddot.iter());
        rows.push(row);
    }
    Ok(CsvTable {
        header: desired_header(),
        rows,
    })
}

pub fn trajectory_table(traj: &Trajectory) -> CsvTable {
    let rows = (0..traj.len())
        .map(|k| {
            let mut row = Vec::with_capacity(31);
            row.push(traj.times[k]);
            for series in [
                &traj.theta,
                &traj.theta_dot,
                &traj.theta_d,
                &traj.theta_dot_d,
                &traj.theta_ddot_d,
                &traj.torques,
            ] {
                row.extend(series[k].iter());
            }
            row
        })
        .collect();
    CsvTable {
        header: trajectory_header(),
        rows,
    }
}

/// Writes `traj` to `path`, resampled onto a uniform grid when `grid` is given.
pub fn write_trajectory_csv(
    traj: &Trajectory,
    grid: Option<(f64, &GaitSolution)>,
    path: &Path,
) -> Result<(), IoError> {
    let table = match grid {
        Some((step, solution)) => trajectory_table(&traj.resample(step, solution)?),
        None => trajectory_table(traj),
    };
    table.write_file(path)
}

/// Rebuilds a [`Trajectory`] from a table written by [`trajectory_table`].
pub fn table_to_trajectory(table: &CsvTable) -> Result<Trajectory, IoError> {
    Ok(Trajectory {
        times: table.column_values("t")?,
        theta: table.joint_series("theta", "")?,
        theta_dot: table.joint_series("dtheta", "")?,
        theta_d: table.joint_series("theta", "_d")?,
        theta_dot_d: table.joint_series("dtheta", "_d")?,
        theta_ddot_d: table.joint_series("ddtheta", "_d")?,
        torques: table.joint_series("u", "")?,
        saturation_events: 0,
    })
}

/// Drawing options for [`render_svg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Horizontal offset between successive frames (m).
    pub stride: f64,
    /// Pixels per metre.
    pub scale: f64,
    /// Margin around the drawing (px).
    pub margin: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            stride: 0.15,
            scale: 200.0,
            margin: 20.0,
        }
    }
}

/// Picks `n` rows spread uniformly over `len` rows.
pub fn frame_indices(len: usize, n: usize) -> Vec<usize> {
    if len == 0 || n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![0];
    }
    (0..n)
        .map(|k| ((k as f64) * (len - 1) as f64 / (n - 1) as f64).round() as usize)
        .collect()
}

/// Superimposed stick figures, one per posture, shifted by `k·stride`.
///
/// Each figure is five `<line>` elements (stance shank, stance thigh, trunk,
/// swing thigh, swing shank); a single ground line runs underneath.
pub fn render_svg(postures: &[Joints], params: &RobotParams, opts: &RenderOptions) -> String {
    let frames: Vec<[nalgebra::Point2<f64>; 6]> = postures
        .iter()
        .enumerate()
        .map(|(k, theta)| {
            let dx = k as f64 * opts.stride;
            joint_positions(theta, params).map(|p| nalgebra::Point2::new(p.x + dx, p.y))
        })
        .collect();

    let (mut xmin, mut xmax, mut ymin, mut ymax) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for p in frames.iter().flatten() {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let width = (xmax - xmin) * opts.scale + 2.0 * opts.margin;
    let height = (ymax - ymin) * opts.scale + 2.0 * opts.margin;
    let px = |x: f64| (x - xmin) * opts.scale + opts.margin;
    let py = |y: f64| (ymax - y) * opts.scale + opts.margin;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(
        svg,
        r##"  <line class="ground" x1="0.00" y1="{g:.2}" x2="{width:.2}" y2="{g:.2}" stroke="#888888" stroke-width="1"/>"##,
        g = py(0.0)
    );
    const SEGMENTS: [(usize, usize, &str); 5] = [
        (0, 1, "#1f77b4"),
        (1, 2, "#1f77b4"),
        (2, 3, "#2ca02c"),
        (2, 4, "#d62728"),
        (4, 5, "#d62728"),
    ];
    for (k, pts) in frames.iter().enumerate() {
        let _ = writeln!(svg, r#"  <g class="frame" id="frame{k}">"#);
        for (a, b, color) in SEGMENTS {
            let _ = writeln!(
                svg,
                r#"    <line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2" stroke-linecap="round"/>"#,
                px(pts[a].x),
                py(pts[a].y),
                px(pts[b].x),
                py(pts[b].y)
            );
        }
        let _ = writeln!(svg, "  </g>");
    }
    let _ = writeln!(svg, "</svg>");
    svg
}

/// Postures for rendering: actual angles when present, desired otherwise.
pub fn postures_from_table(table: &CsvTable) -> Result<Vec<Joints>, IoError> {
    table
        .joint_series("theta", "")
        .or_else(|_| table.joint_series("theta", "_d"))
}
