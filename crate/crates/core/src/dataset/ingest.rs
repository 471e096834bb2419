use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timestamp layout used when writing CSV files.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

const ACCEPTED_FORMATS: &[&str] = &[
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

/// One hourly reading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesRecord {
    pub timestamp: NaiveDateTime,
    /// Consumption in kWh.
    pub energy: f64,
    /// Degrees Celsius.
    pub temperature: Option<f64>,
    /// Percent.
    pub humidity: Option<f64>,
    /// km/h.
    pub wind_speed: Option<f64>,
}

/// Maps logical fields onto CSV header names. Weather columns are optional:
/// `None` means the file does not carry that channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp: String,
    pub energy: String,
    pub temperature: Option<String>,
    pub humidity: Option<String>,
    pub wind_speed: Option<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            energy: "energy".into(),
            temperature: Some("temperature".into()),
            humidity: Some("humidity".into()),
            wind_speed: Some("wind_speed".into()),
        }
    }
}

/// Irregularities found while ingesting: hours missing between consecutive
/// readings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows: usize,
    pub gaps: Vec<NaiveDateTime>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub records: Vec<TimeSeriesRecord>,
    pub report: IngestReport,
}

pub fn ingest_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Parses records from any reader, sorts them by timestamp and reports gaps.
/// Duplicate timestamps are rejected.
pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let index: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let column = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Schema(format!("column `{name}` not found in header")))
    };
    let ts_col = column(&schema.timestamp)?;
    let energy_col = column(&schema.energy)?;
    let optional = |name: &Option<String>| name.as_deref().map(column).transpose();
    let temp_col = optional(&schema.temperature)?;
    let hum_col = optional(&schema.humidity)?;
    let wind_col = optional(&schema.wind_speed)?;

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("");
        let timestamp = parse_timestamp(field(ts_col)).ok_or_else(|| Error::Row {
            line,
            message: format!("unparseable timestamp `{}`", field(ts_col)),
        })?;
        let energy = parse_number(field(energy_col), line, &schema.energy)?.ok_or_else(|| {
            Error::Row {
                line,
                message: "missing energy value".into(),
            }
        })?;
        if energy < 0.0 {
            return Err(Error::Row {
                line,
                message: format!("negative energy {energy}"),
            });
        }
        let weather = |col: Option<usize>, name: &Option<String>| -> Result<Option<f64>> {
            match col {
                Some(i) => parse_number(field(i), line, name.as_deref().unwrap_or("")),
                None => Ok(None),
            }
        };
        records.push(TimeSeriesRecord {
            timestamp,
            energy,
            temperature: weather(temp_col, &schema.temperature)?,
            humidity: weather(hum_col, &schema.humidity)?,
            wind_speed: weather(wind_col, &schema.wind_speed)?,
        });
    }
    if records.is_empty() {
        return Err(Error::Input("CSV contains no data rows".into()));
    }

    records.sort_by_key(|r| r.timestamp);
    let mut gaps = Vec::new();
    for pair in records.windows(2) {
        let (prev, next) = (pair[0].timestamp, pair[1].timestamp);
        if prev == next {
            return Err(Error::Input(format!(
                "duplicate timestamp {}",
                next.format(TIMESTAMP_FORMAT)
            )));
        }
        let mut t = prev + Duration::hours(1);
        while t < next {
            gaps.push(t);
            t += Duration::hours(1);
        }
    }
    let rows = records.len();
    Ok(Ingested {
        records,
        report: IngestReport { rows, gaps },
    })
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    ACCEPTED_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|dt| dt.naive_local()))
}

fn parse_number(s: &str, line: u64, column: &str) -> Result<Option<f64>> {
    if s.is_empty() || s.eq_ignore_ascii_case("nan") || s.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Row {
            line,
            message: format!("column `{column}`: `{s}` is not a number"),
        })
}

/// Writes records with the default schema's header.
pub fn write_csv<W: Write>(writer: W, records: &[TimeSeriesRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["timestamp", "energy", "temperature", "humidity", "wind_speed"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        wtr.write_record([
            r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            r.energy.to_string(),
            opt(r.temperature),
            opt(r.humidity),
            opt(r.wind_speed),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT).unwrap()
    }

    #[test]
    fn three_hourly_rows_pass_through_in_order() {
        let csv = "timestamp,energy,temperature,humidity,wind_speed\n\
                   2003-01-01T02:00:00,3.0,1,50,10\n\
                   2003-01-01T00:00:00,1.0,1,50,10\n\
                   2003-01-01T01:00:00,2.0,,50,10\n";
        let out = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
        let energies: Vec<f64> = out.records.iter().map(|r| r.energy).collect();
        assert_eq!(energies, vec![1.0, 2.0, 3.0]);
        assert_eq!(out.records[1].temperature, None);
        assert!(out.report.gaps.is_empty());
    }

    #[test]
    fn duplicate_timestamp_is_named() {
        let csv = "timestamp,energy,temperature,humidity,wind_speed\n\
                   2003-01-01T00:00:00,1.0,1,50,10\n\
                   2003-01-01T00:00:00,2.0,1,50,10\n";
        let err = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("2003-01-01T00:00:00"), "{err}");
    }

    #[test]
    fn two_hour_gap_is_reported() {
        let csv = "timestamp,energy,temperature,humidity,wind_speed\n\
                   2003-01-01T00:00:00,1.0,1,50,10\n\
                   2003-01-01T02:00:00,2.0,1,50,10\n\
                   2003-01-01T03:00:00,2.0,1,50,10\n";
        let out = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.report.gaps, vec![ts("2003-01-01T01:00:00")]);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let csv = "timestamp,load\n2003-01-01T00:00:00,1.0\n";
        let err = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn bad_timestamp_reports_line_number() {
        let csv = "timestamp,energy\n2003-01-01T00:00:00,1.0\nyesterday,2.0\n";
        let schema = CsvSchema {
            temperature: None,
            humidity: None,
            wind_speed: None,
            ..CsvSchema::default()
        };
        match read_csv(csv.as_bytes(), &schema).unwrap_err() {
            Error::Row { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_file_is_an_input_error() {
        let csv = "timestamp,energy,temperature,humidity,wind_speed\n";
        let err = read_csv(csv.as_bytes(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn written_csv_reads_back() {
        let records = vec![
            TimeSeriesRecord {
                timestamp: ts("2010-05-01T00:00:00"),
                energy: 1.25,
                temperature: Some(12.5),
                humidity: None,
                wind_speed: Some(3.0),
            },
            TimeSeriesRecord {
                timestamp: ts("2010-05-01T01:00:00"),
                energy: 0.0,
                temperature: Some(-1.0),
                humidity: Some(80.0),
                wind_speed: None,
            },
        ];
        let mut buf = Vec::new();
        write_csv(&mut buf, &records).unwrap();
        let back = read_csv(buf.as_slice(), &CsvSchema::default()).unwrap();
        assert_eq!(back.records, records);
    }
}
