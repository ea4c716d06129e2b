//! Ingestion and alignment of time-series frames and operating-condition
//! label files.
//!
//! A [`TimeSeriesFrame`] is a uniformly sampled multivariate series
//! (timestamps x channels). A [`LabelTimeline`] is a list of
//! normal/anomalous intervals; rows outside every interval default to
//! normal. [`align_labels`] joins the two into a [`LabeledDataset`] whose
//! feature columns carry an origin tag so downstream stages can tell raw
//! channels from derived features.
//!
//! Frame CSV format: header `timestamp,<ch1>,<ch2>,...` with ISO-8601 UTC
//! timestamps in the first column. Missing cells are the empty string or
//! `NaN`. Label CSV format: header `start,end,state` with
//! `state in {normal, anomalous}`; intervals are inclusive-start,
//! exclusive-end.

use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on the sampling step: any interval deviating from the
/// nominal step by more than this fraction rejects the frame.
pub const STEP_TOLERANCE: f64 = 0.01;

/// Uniformly sampled multivariate time series.
///
/// Values are stored column-major (one `Vec<f64>` per channel) because
/// nearly every downstream stage works channel-at-a-time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesFrame {
    timestamps: Vec<DateTime<Utc>>,
    channels: Vec<String>,
    values: Vec<Vec<f64>>,
    step_seconds: f64,
}

impl TimeSeriesFrame {
    /// Builds a frame from parts, validating the invariants: strictly
    /// increasing timestamps with a constant step (within
    /// [`STEP_TOLERANCE`]) and a full `|timestamps| x |channels|` matrix.
    /// NaN cells are allowed here; [`handle_missing`] removes them.
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        channels: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if timestamps.len() < 2 {
            return Err(Error::RejectedInput(
                "frame needs at least 2 rows to establish a sampling step".into(),
            ));
        }
        if values.len() != channels.len() {
            return Err(Error::RejectedInput(format!(
                "value matrix has {} columns but {} channel names",
                values.len(),
                channels.len()
            )));
        }
        for (ch, col) in channels.iter().zip(&values) {
            if col.len() != timestamps.len() {
                return Err(Error::RejectedInput(format!(
                    "channel {ch} has {} values for {} timestamps",
                    col.len(),
                    timestamps.len()
                )));
            }
        }
        let step_seconds = validate_uniform_step(&timestamps)?;
        Ok(Self { timestamps, channels, values, step_seconds })
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn step_seconds(&self) -> f64 {
        self.step_seconds
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channels
    }

    /// Column of values for channel `idx`.
    pub fn channel(&self, idx: usize) -> &[f64] {
        &self.values[idx]
    }

    pub fn channel_by_name(&self, name: &str) -> Option<&[f64]> {
        self.channels.iter().position(|c| c == name).map(|i| self.channel(i))
    }

    pub fn value(&self, row: usize, channel: usize) -> f64 {
        self.values[channel][row]
    }

    pub fn has_nan(&self) -> bool {
        self.values.iter().any(|col| col.iter().any(|v| v.is_nan()))
    }

    /// Row index of the first timestamp `>= t`, or `n_rows` when `t` is
    /// past the end.
    pub fn row_at_or_after(&self, t: DateTime<Utc>) -> usize {
        self.timestamps.partition_point(|ts| *ts < t)
    }
}

fn validate_uniform_step(timestamps: &[DateTime<Utc>]) -> Result<f64> {
    let mut diffs = Vec::with_capacity(timestamps.len() - 1);
    for (i, pair) in timestamps.windows(2).enumerate() {
        let d = (pair[1] - pair[0])
            .num_microseconds()
            .map(|us| us as f64 / 1e6)
            .unwrap_or(f64::INFINITY);
        if d <= 0.0 {
            return Err(Error::RejectedInput(format!(
                "non-monotone timestamps at rows {i}..{} ({} then {})",
                i + 1,
                timestamps[i].to_rfc3339(),
                timestamps[i + 1].to_rfc3339()
            )));
        }
        diffs.push(d);
    }
    // Nominal step is the median interval; a single bad row cannot drag it.
    let mut sorted = diffs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nominal = sorted[sorted.len() / 2];
    for (i, d) in diffs.iter().enumerate() {
        if ((d - nominal) / nominal).abs() > STEP_TOLERANCE {
            return Err(Error::RejectedInput(format!(
                "irregular step at row {}: {d} s vs nominal {nominal} s",
                i + 1
            )));
        }
    }
    Ok(nominal)
}

/// Operating state of a labeled interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalState {
    Normal,
    Anomalous,
}

/// A half-open labeled interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelInterval {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub state: IntervalState,
}

/// Sorted, non-overlapping list of labeled intervals. Rows outside every
/// interval are treated as normal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelTimeline {
    intervals: Vec<LabelInterval>,
}

impl LabelTimeline {
    pub fn new(mut intervals: Vec<LabelInterval>) -> Result<Self> {
        for iv in &intervals {
            if iv.start >= iv.end {
                return Err(Error::RejectedInput(format!(
                    "interval start {} not before end {}",
                    iv.start.to_rfc3339(),
                    iv.end.to_rfc3339()
                )));
            }
        }
        intervals.sort_by_key(|iv| iv.start);
        for pair in intervals.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::RejectedInput(format!(
                    "overlapping intervals: [{}, {}) and [{}, {})",
                    pair[0].start.to_rfc3339(),
                    pair[0].end.to_rfc3339(),
                    pair[1].start.to_rfc3339(),
                    pair[1].end.to_rfc3339()
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[LabelInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// State at instant `t`; defaults to normal outside every interval.
    pub fn state_at(&self, t: DateTime<Utc>) -> IntervalState {
        for iv in &self.intervals {
            if iv.start <= t && t < iv.end {
                return iv.state;
            }
        }
        IntervalState::Normal
    }

    /// Anomalous intervals only, in time order.
    pub fn anomalous_intervals(&self) -> Vec<LabelInterval> {
        self.intervals
            .iter()
            .copied()
            .filter(|iv| iv.state == IntervalState::Anomalous)
            .collect()
    }
}

/// Where a feature column came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureOrigin {
    Raw,
    Segment,
    CpFeature,
    Cluster,
    DeltaF,
}

/// A named feature column with its origin tag.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub origin: FeatureOrigin,
    pub values: Vec<f64>,
}

/// Frame rows joined with per-row boolean anomaly labels and any number of
/// derived feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub timestamps: Vec<DateTime<Utc>>,
    pub step_seconds: f64,
    pub columns: Vec<FeatureColumn>,
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    /// Fraction of rows labeled anomalous.
    pub fn prevalence(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        self.labels.iter().filter(|&&l| l).count() as f64 / self.labels.len() as f64
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn push_column(&mut self, column: FeatureColumn) -> Result<()> {
        if column.values.len() != self.n_rows() {
            return Err(Error::RejectedInput(format!(
                "column {} has {} values for {} rows",
                column.name,
                column.values.len(),
                self.n_rows()
            )));
        }
        self.columns.push(column);
        Ok(())
    }

    /// View of all feature columns as a design matrix.
    pub fn feature_matrix(&self) -> FeatureMatrix {
        FeatureMatrix {
            names: self.columns.iter().map(|c| c.name.clone()).collect(),
            columns: self.columns.iter().map(|c| c.values.clone()).collect(),
            n_rows: self.n_rows(),
        }
    }

    /// Restriction to rows `[start, end)`, all columns kept.
    pub fn slice_rows(&self, start: usize, end: usize) -> LabeledDataset {
        LabeledDataset {
            timestamps: self.timestamps[start..end].to_vec(),
            step_seconds: self.step_seconds,
            columns: self
                .columns
                .iter()
                .map(|c| FeatureColumn {
                    name: c.name.clone(),
                    origin: c.origin,
                    values: c.values[start..end].to_vec(),
                })
                .collect(),
            labels: self.labels[start..end].to_vec(),
        }
    }
}

/// Plain column-major design matrix handed to the detector zoo.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    n_rows: usize,
}

impl FeatureMatrix {
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::RejectedInput(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let n_rows = columns.first().map_or(0, |c| c.len());
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::RejectedInput(format!(
                    "column {name} length {} != {n_rows}",
                    col.len()
                )));
            }
        }
        Ok(Self { names, columns, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn col(&self, idx: usize) -> &[f64] {
        &self.columns[idx]
    }

    /// Materializes row `i` into `buf`.
    pub fn row_into(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.columns.iter().map(|c| c[i]));
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    /// All rows materialized (row-major); used by distance-based models.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows).map(|i| self.row(i)).collect()
    }

    /// Restriction to rows `[start, end)`.
    pub fn slice_rows(&self, start: usize, end: usize) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
            n_rows: end - start,
        }
    }

    /// Restriction to the given rows, in order.
    pub fn take_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
            n_rows: rows.len(),
        }
    }

    /// Reorders columns to `order` (indices into the current columns).
    pub fn select_columns(&self, order: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            names: order.iter().map(|&i| self.names[i].clone()).collect(),
            columns: order.iter().map(|&i| self.columns[i].clone()).collect(),
            n_rows: self.n_rows,
        }
    }

    pub fn replace_column(&mut self, idx: usize, values: Vec<f64>) {
        assert_eq!(values.len(), self.n_rows);
        self.columns[idx] = values;
    }

    pub fn push_column(&mut self, name: String, values: Vec<f64>) {
        assert_eq!(values.len(), self.n_rows);
        self.names.push(name);
        self.columns.push(values);
    }
}

/// How [`handle_missing`] fills NaN cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    /// Repeat the previous finite value. Leading NaN has no source and
    /// rejects the frame.
    ForwardFill,
    /// Linear interpolation between the nearest finite neighbors. NaN runs
    /// touching either end have no anchor and reject the frame.
    Interpolate,
    /// Drop rows containing NaN, then re-validate the uniform step; interior
    /// drops break the grid and reject the frame.
    DropRow,
}

/// Parses a frame CSV (`timestamp,<ch1>,...`). Missing cells become NaN;
/// apply [`handle_missing`] to clear them. When `schema` is given the
/// header must match it exactly.
pub fn parse_frame<R: Read>(source: R, schema: Option<&[String]>) -> Result<TimeSeriesFrame> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || headers.get(0) != Some("timestamp") {
        return Err(Error::RejectedInput(
            "frame CSV must start with a `timestamp` header column".into(),
        ));
    }
    let channels: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
    if channels.is_empty() {
        return Err(Error::RejectedInput("frame CSV has no channel columns".into()));
    }
    if let Some(expected) = schema {
        if channels != expected {
            return Err(Error::RejectedInput(format!(
                "channel header {channels:?} does not match expected schema {expected:?}"
            )));
        }
    }

    let mut timestamps = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); channels.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != channels.len() + 1 {
            return Err(Error::RejectedInput(format!(
                "row {}: expected {} cells, found {}",
                row_idx + 1,
                channels.len() + 1,
                record.len()
            )));
        }
        let ts = parse_instant(record.get(0).unwrap_or("")).map_err(|e| {
            Error::RejectedInput(format!("row {}: {e}", row_idx + 1))
        })?;
        timestamps.push(ts);
        for (col_idx, cell) in record.iter().skip(1).enumerate() {
            let trimmed = cell.trim();
            let v = if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("nan") {
                f64::NAN
            } else {
                trimmed.parse::<f64>().map_err(|_| {
                    Error::RejectedInput(format!(
                        "row {}, column {}: non-numeric cell {trimmed:?}",
                        row_idx + 1,
                        channels[col_idx]
                    ))
                })?
            };
            values[col_idx].push(v);
        }
    }
    TimeSeriesFrame::new(timestamps, channels, values)
}

/// Parses an ISO-8601 instant. Accepts RFC 3339 with offset and the naive
/// `YYYY-MM-DDTHH:MM:SS[.frac]` form, which is taken as UTC.
pub fn parse_instant(text: &str) -> Result<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = chrono::NaiveDateTime::parse_from_str(text, fmt) {
            return Ok(DateTime::from_naive_utc_and_offset(naive, Utc));
        }
    }
    Err(Error::RejectedInput(format!("unparseable timestamp {text:?}")))
}

fn format_instant(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Writes a frame back to CSV. Finite values round-trip bit-exactly; NaN
/// cells are written as empty strings.
pub fn write_frame_csv<W: Write>(frame: &TimeSeriesFrame, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["timestamp".to_string()];
    header.extend(frame.channel_names().iter().cloned());
    w.write_record(&header)?;
    for row in 0..frame.n_rows() {
        let mut record = vec![format_instant(frame.timestamps()[row])];
        for ch in 0..frame.n_channels() {
            let v = frame.value(row, ch);
            record.push(if v.is_nan() { String::new() } else { format!("{v}") });
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a label CSV (`start,end,state`). An empty body yields an empty
/// timeline (everything normal).
pub fn parse_noc<R: Read>(source: R) -> Result<LabelTimeline> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let mut intervals = Vec::new();
    let headers = match reader.headers() {
        Ok(h) if !h.is_empty() => h.clone(),
        _ => return LabelTimeline::new(intervals),
    };
    if headers.get(0) != Some("start") {
        return Err(Error::RejectedInput(
            "label CSV must have header `start,end,state`".into(),
        ));
    }
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() < 3 {
            return Err(Error::RejectedInput(format!(
                "label row {}: expected start,end,state",
                row_idx + 1
            )));
        }
        let start = parse_instant(record.get(0).unwrap())?;
        let end = parse_instant(record.get(1).unwrap())?;
        let state = match record.get(2).unwrap().trim().to_ascii_lowercase().as_str() {
            "normal" => IntervalState::Normal,
            "anomalous" => IntervalState::Anomalous,
            other => {
                return Err(Error::RejectedInput(format!(
                    "label row {}: unknown state token {other:?}",
                    row_idx + 1
                )))
            }
        };
        intervals.push(LabelInterval { start, end, state });
    }
    LabelTimeline::new(intervals)
}

/// Writes a timeline to CSV in the `start,end,state` format.
pub fn write_noc_csv<W: Write>(timeline: &LabelTimeline, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["start", "end", "state"])?;
    for iv in timeline.intervals() {
        let state = match iv.state {
            IntervalState::Normal => "normal",
            IntervalState::Anomalous => "anomalous",
        };
        w.write_record([format_instant(iv.start), format_instant(iv.end), state.into()])?;
    }
    w.flush()?;
    Ok(())
}

/// Result of [`align_labels`]: the labeled dataset plus alignment
/// diagnostics.
#[derive(Debug, Clone)]
pub struct AlignOutcome {
    pub dataset: LabeledDataset,
    /// Fraction of rows labeled anomalous.
    pub prevalence: f64,
    /// True when the timeline has intervals but none of them intersect the
    /// frame span (labels are then all normal).
    pub no_overlap_warning: bool,
}

/// Joins a frame with a label timeline into a labeled dataset. Every raw
/// channel becomes a feature column tagged [`FeatureOrigin::Raw`].
pub fn align_labels(frame: &TimeSeriesFrame, timeline: &LabelTimeline) -> Result<AlignOutcome> {
    if frame.has_nan() {
        return Err(Error::RejectedInput(
            "frame still contains NaN; apply a missing-value policy first".into(),
        ));
    }
    let labels: Vec<bool> = frame
        .timestamps()
        .iter()
        .map(|&t| timeline.state_at(t) == IntervalState::Anomalous)
        .collect();
    let columns = frame
        .channel_names()
        .iter()
        .enumerate()
        .map(|(i, name)| FeatureColumn {
            name: name.clone(),
            origin: FeatureOrigin::Raw,
            values: frame.channel(i).to_vec(),
        })
        .collect();
    let dataset = LabeledDataset {
        timestamps: frame.timestamps().to_vec(),
        step_seconds: frame.step_seconds(),
        columns,
        labels,
    };
    let prevalence = dataset.prevalence();
    let frame_start = frame.timestamps()[0];
    let frame_end = frame.timestamps()[frame.n_rows() - 1];
    let no_overlap_warning = !timeline.is_empty()
        && timeline
            .intervals()
            .iter()
            .all(|iv| iv.end <= frame_start || iv.start > frame_end);
    Ok(AlignOutcome { dataset, prevalence, no_overlap_warning })
}

/// Applies a missing-value policy so the frame satisfies the no-NaN
/// invariant.
pub fn handle_missing(frame: &TimeSeriesFrame, policy: MissingPolicy) -> Result<TimeSeriesFrame> {
    match policy {
        MissingPolicy::ForwardFill => {
            let mut values = frame.values.clone();
            for (ch, col) in values.iter_mut().enumerate() {
                if col[0].is_nan() {
                    return Err(Error::RejectedInput(format!(
                        "channel {} starts with NaN; forward-fill has no source",
                        frame.channels[ch]
                    )));
                }
                for i in 1..col.len() {
                    if col[i].is_nan() {
                        col[i] = col[i - 1];
                    }
                }
            }
            Ok(TimeSeriesFrame { values, ..frame.clone() })
        }
        MissingPolicy::Interpolate => {
            let mut values = frame.values.clone();
            for (ch, col) in values.iter_mut().enumerate() {
                interpolate_column(col).map_err(|e| {
                    Error::RejectedInput(format!("channel {}: {e}", frame.channels[ch]))
                })?;
            }
            Ok(TimeSeriesFrame { values, ..frame.clone() })
        }
        MissingPolicy::DropRow => {
            let keep: Vec<usize> = (0..frame.n_rows())
                .filter(|&r| frame.values.iter().all(|col| !col[r].is_nan()))
                .collect();
            if keep.len() == frame.n_rows() {
                return Ok(frame.clone());
            }
            let timestamps: Vec<_> = keep.iter().map(|&r| frame.timestamps[r]).collect();
            let values: Vec<Vec<f64>> = frame
                .values
                .iter()
                .map(|col| keep.iter().map(|&r| col[r]).collect())
                .collect();
            // Re-validation rejects interior drops that break the grid.
            TimeSeriesFrame::new(timestamps, frame.channels.clone(), values).map_err(|_| {
                Error::RejectedInput(
                    "drop-row removed interior rows and broke the uniform step".into(),
                )
            })
        }
    }
}

fn interpolate_column(col: &mut [f64]) -> std::result::Result<(), String> {
    let n = col.len();
    let mut i = 0;
    while i < n {
        if !col[i].is_nan() {
            i += 1;
            continue;
        }
        let run_start = i;
        let mut run_end = i;
        while run_end < n && col[run_end].is_nan() {
            run_end += 1;
        }
        if run_start == 0 {
            return Err("leading NaN has no left anchor for interpolation".into());
        }
        if run_end == n {
            return Err("trailing NaN has no right anchor for interpolation".into());
        }
        let left = col[run_start - 1];
        let right = col[run_end];
        let span = (run_end - run_start + 1) as f64;
        for (k, cell) in col[run_start..run_end].iter_mut().enumerate() {
            let frac = (k + 1) as f64 / span;
            *cell = left + (right - left) * frac;
        }
        i = run_end;
    }
    Ok(())
}

/// Sidecar metadata for a serialized dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u32,
    pub step_seconds: f64,
    pub columns: Vec<ColumnMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub origin: FeatureOrigin,
}

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Writes a labeled dataset as CSV (`timestamp,label,<features...>`) and
/// returns the sidecar metadata describing column origins.
pub fn write_dataset_csv<W: Write>(dataset: &LabeledDataset, out: W) -> Result<DatasetMeta> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["timestamp".to_string(), "label".to_string()];
    header.extend(dataset.columns.iter().map(|c| c.name.clone()));
    w.write_record(&header)?;
    for row in 0..dataset.n_rows() {
        let mut record = vec![
            format_instant(dataset.timestamps[row]),
            if dataset.labels[row] { "1".into() } else { "0".into() },
        ];
        for col in &dataset.columns {
            record.push(format!("{}", col.values[row]));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(DatasetMeta {
        schema_version: DATASET_SCHEMA_VERSION,
        step_seconds: dataset.step_seconds,
        columns: dataset
            .columns
            .iter()
            .map(|c| ColumnMeta { name: c.name.clone(), origin: c.origin })
            .collect(),
    })
}

/// Reads a dataset CSV written by [`write_dataset_csv`], using the sidecar
/// metadata for origins and the sampling step.
pub fn read_dataset_csv<R: Read>(source: R, meta: &DatasetMeta) -> Result<LabeledDataset> {
    if meta.schema_version != DATASET_SCHEMA_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "dataset schema {} unsupported (expected {DATASET_SCHEMA_VERSION})",
            meta.schema_version
        )));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let expected: Vec<&str> = ["timestamp", "label"]
        .into_iter()
        .chain(meta.columns.iter().map(|c| c.name.as_str()))
        .collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::SchemaMismatch(
            "dataset CSV header does not match sidecar metadata".into(),
        ));
    }
    let mut timestamps = Vec::new();
    let mut labels = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); meta.columns.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        timestamps.push(parse_instant(record.get(0).unwrap_or(""))?);
        labels.push(match record.get(1).map(str::trim) {
            Some("1") | Some("true") => true,
            Some("0") | Some("false") => false,
            other => {
                return Err(Error::RejectedInput(format!(
                    "row {}: bad label cell {other:?}",
                    row_idx + 1
                )))
            }
        });
        for (i, cell) in record.iter().skip(2).enumerate() {
            let v = cell.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                Error::RejectedInput(format!(
                    "row {}, column {}: feature cell must be a finite number",
                    row_idx + 1,
                    meta.columns[i].name
                ))
            })?;
            columns[i].push(v);
        }
    }
    Ok(LabeledDataset {
        timestamps,
        step_seconds: meta.step_seconds,
        columns: meta
            .columns
            .iter()
            .zip(columns)
            .map(|(m, values)| FeatureColumn { name: m.name.clone(), origin: m.origin, values })
            .collect(),
        labels,
    })
}
