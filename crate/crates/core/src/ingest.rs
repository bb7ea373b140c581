//! Parsers for the supported source formats and the binarization rule that
//! turns explicit feedback into positive interactions.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::data::InteractionSet;
use crate::error::{Error, Result};

/// Input file format. Each variant fixes delimiter, column order, and the
/// default binarization threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceFormat {
    /// Tab-separated `user item rating timestamp`.
    MovieLens100K,
    /// `::`-separated `UserID::MovieID::Rating::Timestamp`.
    MovieLens1M,
    /// Tab-separated `userID artistID weight`, optional header line.
    LastFm,
    /// Tab-separated `user item`; every line is one positive interaction.
    Canonical,
}

impl SourceFormat {
    /// Threshold applied when the caller does not override it: a record is
    /// kept only if its value is strictly greater than this.
    pub fn default_threshold(self) -> f64 {
        match self {
            SourceFormat::MovieLens100K | SourceFormat::MovieLens1M => 3.0,
            SourceFormat::LastFm | SourceFormat::Canonical => 0.0,
        }
    }

    pub fn flag_name(self) -> &'static str {
        match self {
            SourceFormat::MovieLens100K => "ml100k",
            SourceFormat::MovieLens1M => "ml1m",
            SourceFormat::LastFm => "lastfm",
            SourceFormat::Canonical => "canonical",
        }
    }
}

impl FromStr for SourceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ml100k" | "ml-100k" => Ok(SourceFormat::MovieLens100K),
            "ml1m" | "ml-1m" => Ok(SourceFormat::MovieLens1M),
            "lastfm" => Ok(SourceFormat::LastFm),
            "canonical" => Ok(SourceFormat::Canonical),
            other => Err(Error::invalid_argument(format!(
                "unknown format {other:?} (expected ml100k|ml1m|lastfm|canonical)"
            ))),
        }
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.flag_name())
    }
}

/// Parses a source stream, keeping exactly the records whose value is
/// strictly greater than `threshold`.
///
/// Internal ids follow file order, so parsing is deterministic. Users whose
/// every record falls at or below the threshold are absent from the result.
pub fn parse<R: BufRead>(
    reader: R,
    format: SourceFormat,
    threshold: f64,
) -> Result<InteractionSet> {
    let mut pairs: Vec<(String, String)> = Vec::new();

    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }

        match format {
            SourceFormat::MovieLens100K => {
                let record = split_record(line, '\t', 4, line_no, "user\titem\trating\ttimestamp")?;
                let value = parse_value(record[2], line_no)?;
                if value > threshold {
                    pairs.push((record[0].to_owned(), record[1].to_owned()));
                }
            }
            SourceFormat::MovieLens1M => {
                let fields: Vec<&str> = line.split("::").collect();
                if fields.len() != 4 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "expected UserID::MovieID::Rating::Timestamp, got {} fields",
                            fields.len()
                        ),
                    });
                }
                let value = parse_value(fields[2], line_no)?;
                if value > threshold {
                    pairs.push((fields[0].to_owned(), fields[1].to_owned()));
                }
            }
            SourceFormat::LastFm => {
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!(
                            "expected userID\tartistID\tweight, got {} fields",
                            fields.len()
                        ),
                    });
                }
                // The published file starts with a header line.
                if line_no == 1 && fields[2].parse::<f64>().is_err() {
                    continue;
                }
                let value = parse_value(fields[2], line_no)?;
                if value > threshold {
                    pairs.push((fields[0].to_owned(), fields[1].to_owned()));
                }
            }
            SourceFormat::Canonical => {
                let record = split_record(line, '\t', 2, line_no, "user\titem")?;
                pairs.push((record[0].to_owned(), record[1].to_owned()));
            }
        }
    }

    Ok(InteractionSet::from_pairs(pairs))
}

fn split_record<'a>(
    line: &'a str,
    delimiter: char,
    expected: usize,
    line_no: usize,
    layout: &str,
) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split(delimiter).collect();
    if fields.len() != expected {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected {layout}, got {} fields", fields.len()),
        });
    }
    Ok(fields)
}

fn parse_value(field: &str, line_no: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        line: line_no,
        message: format!("rating value {field:?} is not a number"),
    })
}
