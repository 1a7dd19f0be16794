//! Design and sweep CSV files.

use std::io::{Read, Write};

use adt_design_core::{ApproximateDesign, SweepResult};

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("design file: {0}")]
    Format(String),
    #[error("design file: {0}")]
    Design(#[from] adt_design_core::Error),
}

/// Shortest decimal that parses back to the same `f64`.
pub fn number(v: f64) -> String {
    format!("{v}")
}

fn optional(v: Option<f64>) -> String {
    v.map(number).unwrap_or_default()
}

pub fn write_design<W: Write>(out: W, design: &ApproximateDesign) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=design.dim()).map(|j| format!("x_{j}")).collect();
    header.push("weight".into());
    w.write_record(&header)?;
    for (x, weight) in design.iter() {
        let mut rec: Vec<String> = x.iter().map(|&v| number(v)).collect();
        rec.push(number(weight));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x_1,...,x_d,weight`; the weights must already sum to one.
pub fn read_design<R: Read>(input: R, dim: usize) -> Result<ApproximateDesign, CsvError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers()?.clone();
    let mut want: Vec<String> = (1..=dim).map(|j| format!("x_{j}")).collect();
    want.push("weight".into());
    if header.iter().ne(want.iter().map(String::as_str)) {
        return Err(CsvError::Format(format!(
            "header must be `{}`, found `{}`",
            want.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let values = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CsvError::Format(format!("row {}: `{f}` is not a number", line + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        weights.push(values[dim]);
        points.push(values[..dim].to_vec());
    }
    Ok(ApproximateDesign::new(points, weights)?)
}

fn label(x: &[f64]) -> String {
    let coords: Vec<String> = x.iter().map(|&v| number(v)).collect();
    format!("w_{}", coords.join("_"))
}

pub fn write_sweep<W: Write>(out: W, result: &SweepResult, r: usize) -> Result<(), CsvError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["value".to_string(), "status".into(), "t_alpha".into()];
    header.extend(result.reported_support.iter().map(|x| label(x)));
    header.push("w_other".into());
    header.extend(["eff_star".to_string(), "eff_bar".into()]);
    header.extend((1..=r).map(|l| format!("F_T{l}")));
    header.extend(["gap".to_string(), "certified".into()]);
    w.write_record(&header)?;
    let n_weights = result.reported_support.len() + 1;
    for row in &result.rows {
        let mut rec = vec![
            number(row.value),
            row.status.to_string(),
            optional(row.t_alpha),
        ];
        match &row.optimal_weights {
            Some(ws) => rec.extend(ws.iter().map(|&v| number(v))),
            None => rec.extend(std::iter::repeat_n(String::new(), n_weights)),
        }
        rec.push(optional(row.efficiency_star));
        rec.push(optional(row.efficiency_bar));
        match &row.marginal_cdfs_at_quantile {
            Some(fs) => rec.extend(fs.iter().map(|&v| number(v))),
            None => rec.extend(std::iter::repeat_n(String::new(), r)),
        }
        rec.push(optional(row.gap));
        rec.push(row.certified.map(|c| c.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_round_trip() {
        let d = ApproximateDesign::new(
            vec![vec![0.0, 0.0], vec![0.35, 1.0]],
            vec![2.0 / 3.0, 1.0 / 3.0],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_design(&mut buf, &d).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x_1,x_2,weight\n"));
        assert!(text.ends_with('\n'));
        assert_eq!(read_design(buf.as_slice(), 2).unwrap(), d);
    }

    #[test]
    fn unnormalized_weights_rejected() {
        let text = "x_1,weight\n0,0.5\n1,0.4\n";
        let err = read_design(text.as_bytes(), 1).unwrap_err();
        assert!(err.to_string().contains("normalization"), "{err}");
    }

    #[test]
    fn malformed_rows_rejected() {
        assert!(read_design("x_1,weight\n0,abc\n".as_bytes(), 1).is_err());
        assert!(read_design("x_1,x_2,weight\n0,1\n".as_bytes(), 2).is_err());
        assert!(read_design("a,weight\n0,1\n".as_bytes(), 1).is_err());
    }
}
