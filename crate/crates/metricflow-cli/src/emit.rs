//! Deterministic result tables. Every float is printed with 17
//! significant digits so a row can be re-checked bit for bit, and
//! nothing time- or machine-dependent is allowed into the output.

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub suite: String,
    pub flow: String,
    pub param_json: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
    pub runtime_ms: f64,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "suite,flow,param_json,measured,bound,pass,runtime_ms,seed";

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_field(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            csv_field(&r.suite),
            csv_field(&r.flow),
            csv_field(&r.param_json),
            fmt_float(r.measured),
            fmt_float(r.bound),
            r.pass,
            fmt_float(r.runtime_ms),
            r.seed
        ));
    }
    out
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn to_json(rows: &[ResultRow]) -> String {
    let mut out = String::from("[\n");
    for (i, r) in rows.iter().enumerate() {
        out.push_str(&format!(
            "  {{\"suite\":{},\"flow\":{},\"param_json\":{},\"measured\":{},\"bound\":{},\"pass\":{},\"runtime_ms\":{},\"seed\":{}}}{}\n",
            json_string(&r.suite),
            json_string(&r.flow),
            json_string(&r.param_json),
            fmt_float(r.measured),
            fmt_float(r.bound),
            r.pass,
            fmt_float(r.runtime_ms),
            r.seed,
            if i + 1 == rows.len() { "" } else { "," }
        ));
    }
    out.push_str("]\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ResultRow> {
        vec![
            ResultRow {
                suite: "dyadic".into(),
                flow: "heat".into(),
                param_json: "{\"t\":2.0000000000000000e-2,\"m\":0,\"n\":1}".into(),
                measured: 7.033e-4,
                bound: 1.5e-1,
                pass: true,
                runtime_ms: 0.0,
                seed: 1,
            },
            ResultRow {
                suite: "counterexample-demo".into(),
                flow: "counterexample".into(),
                param_json: "{\"check\":\"uneven-defect\",\"t\":1.0000000000000000e0,\"s\":5.0000000000000000e-1}".into(),
                measured: 0.060586937186524192,
                bound: 0.01,
                pass: true,
                runtime_ms: 0.0,
                seed: 7,
            },
        ]
    }

    #[test]
    fn empty_csv_is_header_only() {
        assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_row_csv_has_two_lines() {
        let rows = sample_rows();
        let text = to_csv(&rows[..1]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("dyadic,heat,\""));
        assert!(lines[1].ends_with(",1"));
    }

    #[test]
    fn csv_quotes_fields_with_commas_and_doubles_quotes() {
        let quoted = csv_field("{\"m\":0,\"n\":1}");
        assert_eq!(quoted, "\"{\"\"m\"\":0,\"\"n\"\":1}\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn floats_carry_17_significant_digits() {
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        let x = 0.060586937186524192;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn json_round_trips_through_a_parser() {
        let rows = sample_rows();
        let text = to_json(&rows);
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        let arr = parsed.as_array().unwrap();
        assert_eq!(arr.len(), rows.len());
        for (value, row) in arr.iter().zip(&rows) {
            assert_eq!(value["suite"].as_str().unwrap(), row.suite);
            assert_eq!(value["flow"].as_str().unwrap(), row.flow);
            assert_eq!(value["param_json"].as_str().unwrap(), row.param_json);
            assert_eq!(
                value["measured"].as_f64().unwrap().to_bits(),
                row.measured.to_bits()
            );
            assert_eq!(
                value["bound"].as_f64().unwrap().to_bits(),
                row.bound.to_bits()
            );
            assert_eq!(value["pass"].as_bool().unwrap(), row.pass);
            assert_eq!(value["runtime_ms"].as_f64().unwrap(), row.runtime_ms);
            assert_eq!(value["seed"].as_u64().unwrap(), row.seed);
        }
    }

    #[test]
    fn empty_json_is_an_empty_array() {
        let parsed: serde_json::Value = serde_json::from_str(&to_json(&[])).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), 0);
    }
}
