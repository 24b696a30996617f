//! Snapshot CSV input and repaired CSV output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use arbrepair::normalize::{CurvePoint, OptionQuote};
use thiserror::Error;

pub const COLUMNS: [&str; 7] = [
    "expiry", "strike", "mid", "bid", "ask", "forward", "discount",
];
pub const REPAIR_COLUMNS: [&str; 3] = ["mid_repaired", "perturbation", "effective"];
/// Significant digits of computed output values.
pub const SIG_DIGITS: usize = 15;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Csv { line: u64, source: csv::Error },
    #[error("missing column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("line {line}: cannot parse {column} value `{value}`")]
    Parse {
        line: u64,
        column: &'static str,
        value: String,
    },
    #[error("line {line}: {column} differs from line {first} for expiry {expiry}")]
    InconsistentCurve {
        line: u64,
        first: u64,
        column: &'static str,
        expiry: f64,
    },
    #[error("snapshot has no data rows")]
    Empty,
}

#[derive(Debug, Clone)]
pub struct SnapshotRow {
    /// 1-based line number in the file.
    pub line: u64,
    pub fields: csv::StringRecord,
    pub quote: OptionQuote,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub header: csv::StringRecord,
    pub rows: Vec<SnapshotRow>,
    pub curves: Vec<CurvePoint>,
}

impl Snapshot {
    pub fn quotes(&self) -> Vec<OptionQuote> {
        self.rows.iter().map(|r| r.quote).collect()
    }

    /// True when every row has both a bid and an ask.
    pub fn has_bid_ask(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.quote.bid.is_some() && r.quote.ask.is_some())
    }
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let file = File::open(path).map_err(|source| SnapshotError::Open {
        path: path.display().to_string(),
        source,
    })?;
    parse_snapshot(file)
}

pub fn parse_snapshot<R: Read>(reader: R) -> Result<Snapshot, SnapshotError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|source| SnapshotError::Csv { line: 1, source })?
        .clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == name)
            .ok_or(SnapshotError::MissingColumn(name))?;
    }

    let mut rows = Vec::new();
    // (expiry, forward, discount, first line)
    let mut curves: Vec<(f64, f64, f64, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|source| SnapshotError::Csv {
            line: source.position().map_or(0, |p| p.line()),
            source,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<Option<f64>, SnapshotError> {
            let raw = record.get(idx[i]).unwrap_or("");
            if raw.is_empty() {
                return Ok(None);
            }
            raw.parse::<f64>()
                .map(Some)
                .map_err(|_| SnapshotError::Parse {
                    line,
                    column: COLUMNS[i],
                    value: raw.to_string(),
                })
        };
        let required = |i: usize| -> Result<f64, SnapshotError> {
            num(i)?.ok_or(SnapshotError::Parse {
                line,
                column: COLUMNS[i],
                value: String::new(),
            })
        };
        let (expiry, strike, mid) = (required(0)?, required(1)?, required(2)?);
        let (forward, discount) = (required(5)?, required(6)?);
        let quote = OptionQuote {
            expiry,
            strike,
            mid,
            bid: num(3)?,
            ask: num(4)?,
        };
        match curves.iter().find(|c| c.0 == expiry) {
            Some(&(_, f, d, first)) => {
                for (column, a, b) in [("forward", f, forward), ("discount", d, discount)] {
                    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                        return Err(SnapshotError::InconsistentCurve {
                            line,
                            first,
                            column,
                            expiry,
                        });
                    }
                }
            }
            None => curves.push((expiry, forward, discount, line)),
        }
        rows.push(SnapshotRow {
            line,
            fields: record,
            quote,
        });
    }
    if rows.is_empty() {
        return Err(SnapshotError::Empty);
    }
    Ok(Snapshot {
        header,
        rows,
        curves: curves
            .into_iter()
            .map(|(t, f, d, _)| CurvePoint::new(t, d, f))
            .collect(),
    })
}

/// `x` rounded to [`SIG_DIGITS`] significant digits, printed without exponent.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let rounded: f64 = format!("{:.*e}", SIG_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    rounded.to_string()
}

/// Per-quote repair output, in input row order.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairedRow {
    pub mid_repaired: f64,
    pub perturbation: f64,
    pub effective: bool,
}

/// Writes the input columns verbatim followed by the repair columns.
pub fn write_repaired<W: Write>(
    writer: W,
    snapshot: &Snapshot,
    repaired: &[RepairedRow],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = snapshot.header.clone();
    for c in REPAIR_COLUMNS {
        header.push_field(c);
    }
    w.write_record(&header)?;
    for (row, out) in snapshot.rows.iter().zip(repaired) {
        let mut rec = row.fields.clone();
        rec.push_field(&format_number(out.mid_repaired));
        rec.push_field(&format_number(out.perturbation));
        rec.push_field(if out.effective { "1" } else { "0" });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HAND: &str = "expiry,strike,mid,bid,ask,forward,discount\n\
                        1,1,0.3,,,1,1\n\
                        1,2,0.4,0.39,0.41,1,1\n";

    #[test]
    fn parses_optional_bid_ask() {
        let s = parse_snapshot(HAND.as_bytes()).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].line, 2);
        assert_eq!(s.rows[0].quote.bid, None);
        assert_eq!(s.rows[1].quote.ask, Some(0.41));
        assert_eq!(s.curves.len(), 1);
        assert!(!s.has_bid_ask());
    }

    #[test]
    fn missing_column_is_named() {
        let err = parse_snapshot("expiry,strike,mid,bid,ask,forward\n1,1,0.3,,,1\n".as_bytes())
            .unwrap_err();
        assert!(matches!(err, SnapshotError::MissingColumn("discount")));
        assert!(err.to_string().contains("discount"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "expiry,strike,mid,bid,ask,forward,discount\n1,1,0.3,,,1,1\n1,x,0.4,,,1,1\n";
        let err = parse_snapshot(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().starts_with("line 3:"), "{err}");
    }

    #[test]
    fn inconsistent_forward_rejected() {
        let bad = "expiry,strike,mid,bid,ask,forward,discount\n1,1,0.3,,,1,1\n1,2,0.1,,,1.1,1\n";
        assert!(matches!(
            parse_snapshot(bad.as_bytes()),
            Err(SnapshotError::InconsistentCurve {
                line: 3,
                first: 2,
                column: "forward",
                ..
            })
        ));
    }

    #[test]
    fn empty_snapshot_rejected() {
        let only_header = "expiry,strike,mid,bid,ask,forward,discount\n";
        assert!(matches!(
            parse_snapshot(only_header.as_bytes()),
            Err(SnapshotError::Empty)
        ));
    }

    #[test]
    fn number_format_round_trips() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(0.1 + 0.2), "0.3");
        assert_eq!(format_number(1e-7), "0.0000001");
        for x in [
            1.0 / 3.0,
            123456.78901234567,
            -2.5e-7,
            9.999_999_999_999_9e-3,
        ] {
            let back: f64 = format_number(x).parse().unwrap();
            assert!(((back - x) / x).abs() <= 1e-14, "{x}");
        }
    }

    #[test]
    fn write_then_read() {
        let s = parse_snapshot(HAND.as_bytes()).unwrap();
        let out = vec![
            RepairedRow {
                mid_repaired: 0.4,
                perturbation: 0.1,
                effective: true,
            },
            RepairedRow {
                mid_repaired: 0.4,
                perturbation: 0.0,
                effective: false,
            },
        ];
        let mut buf = Vec::new();
        write_repaired(&mut buf, &s, &out).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "expiry,strike,mid,bid,ask,forward,discount,mid_repaired,perturbation,effective"
        );
        assert_eq!(lines.next().unwrap(), "1,1,0.3,,,1,1,0.4,0.1,1");
        assert_eq!(lines.next().unwrap(), "1,2,0.4,0.39,0.41,1,1,0.4,0,0");
    }
}
