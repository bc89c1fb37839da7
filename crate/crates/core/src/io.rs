//! CSV input and output.

use std::io::{Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::calibration::GridPoint;
use crate::map::HistoricalStudy;
use crate::metrics::Method;
use crate::{Error, Result};

pub const HISTORICAL_HEADER: [&str; 3] = ["label", "estimate", "se"];
pub const REPORT_HEADER: [&str; 7] = ["name", "value", "abs_error", "method", "n_reps", "seed", "status"];

#[derive(Deserialize)]
struct Row {
    label: String,
    estimate: f64,
    se: f64,
}

/// Reads historical studies from CSV with header `label,estimate,se`.
pub fn read_historical<R: Read>(reader: R) -> Result<Vec<HistoricalStudy<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HISTORICAL_HEADER {
        return Err(Error::Data(format!(
            "historical data must have header `label,estimate,se`, got `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let r = rec.map_err(|e| Error::Data(format!("row {line}: {e}")))?;
        let study = HistoricalStudy::new(r.label, r.estimate, r.se)
            .map_err(|e| Error::Data(format!("row {line}: {e}")))?;
        out.push(study);
    }
    if out.is_empty() {
        return Err(Error::Data("historical data file has no studies".into()));
    }
    Ok(out)
}

pub fn load_historical(path: &Path) -> Result<Vec<HistoricalStudy<f64>>> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let studies = read_historical(f)?;
    log::info!("loaded {} historical studies from {}", studies.len(), path.display());
    Ok(studies)
}

/// One line of `report.csv`. `value` is `None` when the metric failed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub value: Option<f64>,
    pub abs_error: Option<f64>,
    pub method: Method,
    pub n_reps: Option<u64>,
    pub seed: Option<u64>,
    pub status: String,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_report<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(REPORT_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.name.clone(),
            r.value.map(fixed).unwrap_or_default(),
            r.abs_error.map(|e| format!("{e:.3e}")).unwrap_or_default(),
            r.method.to_string(),
            r.n_reps.map(|n| n.to_string()).unwrap_or_default(),
            r.seed.map(|n| n.to_string()).unwrap_or_default(),
            r.status.clone(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_curve<W: Write>(w: W, points: &[(f64, f64)]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["truth", "value"])?;
    for &(x, v) in points {
        wtr.write_record([fixed(x), fixed(v)])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `param...,metric,power_at_alternative`.
pub fn write_frontier<W: Write>(w: W, points: &[GridPoint<f64>], params: &[crate::Param]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = params.iter().map(|p| p.name()).collect();
    header.extend(["metric", "power_at_alternative"]);
    wtr.write_record(&header)?;
    for p in points {
        let mut rec: Vec<String> = params
            .iter()
            .map(|q| p.get(*q).map(fixed).unwrap_or_default())
            .collect();
        rec.push(fixed(p.metric));
        rec.push(fixed(p.power));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_studies_and_reports_bad_rows() {
        let ok = "label,estimate,se\nA,-45.2,10.2\nB, -58.9 ,8.0\n";
        let s = read_historical(ok.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].estimate, -58.9);

        let bad = "label,estimate,se\nA,-45.2,10.2\nB,-58.9,abc\n";
        let e = read_historical(bad.as_bytes()).unwrap_err().to_string();
        assert!(e.contains("row 3"), "{e}");

        let neg = "label,estimate,se\nA,-45.2,0\n";
        assert!(read_historical(neg.as_bytes()).unwrap_err().to_string().contains("row 2"));
        assert!(read_historical("".as_bytes()).is_err());
        assert!(read_historical("label,estimate,se\n".as_bytes()).is_err());
        assert!(read_historical("a,b,c\n1,2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn report_format() {
        let rows = vec![
            ReportRow {
                name: "x".into(),
                value: Some(0.025),
                abs_error: Some(1e-12),
                method: Method::Quadrature,
                n_reps: None,
                seed: None,
                status: "ok".into(),
            },
            ReportRow {
                name: "y".into(),
                value: None,
                abs_error: None,
                method: Method::MonteCarlo,
                n_reps: Some(10_000),
                seed: Some(1),
                status: "error: bad, very".into(),
            },
        ];
        let mut buf = Vec::new();
        write_report(&mut buf, &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "name,value,abs_error,method,n_reps,seed,status\n\
             x,0.025000,1.000e-12,quadrature,,,ok\n\
             y,,,monte_carlo,10000,1,\"error: bad, very\"\n"
        );
    }
}
