//! CSV emission: `#` metadata lines, a header row, then fixed-order records.

use std::io::Write;

use crate::CliError;

/// Run facts written ahead of the header.
#[derive(Debug, Clone)]
pub struct Metadata {
    pub command: String,
    pub seed: u64,
    pub scenario_hash: String,
    pub mode: String,
    pub sweep: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

/// Shortest decimal that parses back to the same value.
pub fn number(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v}")
    }
}

pub fn write_csv<W: Write>(mut out: W, meta: &Metadata, table: &Table) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    writeln!(out, "# sleepcell {}", env!("CARGO_PKG_VERSION")).map_err(io)?;
    writeln!(out, "# command {}", meta.command).map_err(io)?;
    writeln!(out, "# mode {}", meta.mode).map_err(io)?;
    writeln!(out, "# seed {}", meta.seed).map_err(io)?;
    writeln!(out, "# scenario sha256:{}", meta.scenario_hash).map_err(io)?;
    if let Some(s) = &meta.sweep {
        writeln!(out, "# sweep {s}").map_err(io)?;
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let csv_err = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1e-16, 3871.63, 2.0 / 3.0, 1e300] {
            assert_eq!(number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(number(2.0), "2");
    }

    #[test]
    fn metadata_precedes_header() {
        let meta = Metadata {
            command: "se".into(),
            seed: 7,
            scenario_hash: "ab".into(),
            mode: "both".into(),
            sweep: None,
        };
        let table = Table {
            header: vec!["a", "b"],
            rows: vec![vec!["1".into(), "x,y".into()]],
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, &meta, &table).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# sleepcell "));
        assert!(text.ends_with("a,b\n1,\"x,y\"\n"));
        assert!(!text.contains('\r'));
    }
}
