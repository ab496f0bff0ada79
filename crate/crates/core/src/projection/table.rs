use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{Projection, ProjectionError, Valuation};

/// Projections of a trace set, keyed by trace id.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionTable {
    params: Vec<String>,
    rows: BTreeMap<String, Projection>,
    errors: BTreeMap<String, ProjectionError>,
}

fn table_err(e: impl std::fmt::Display) -> ProjectionError {
    ProjectionError::Table(e.to_string())
}

impl ProjectionTable {
    pub fn new(
        params: Vec<String>,
        rows: BTreeMap<String, Projection>,
        errors: BTreeMap<String, ProjectionError>,
    ) -> Self {
        Self {
            params,
            rows,
            errors,
        }
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn rows(&self) -> &BTreeMap<String, Projection> {
        &self.rows
    }

    pub fn errors(&self) -> &BTreeMap<String, ProjectionError> {
        &self.errors
    }

    /// `trace_id,<params>,sentinel,queries`, rows in id order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ProjectionError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["trace_id".to_string()];
        header.extend(self.params.iter().cloned());
        header.push("sentinel".into());
        header.push("queries".into());
        out.write_record(&header).map_err(table_err)?;
        for (id, p) in &self.rows {
            let mut rec = vec![id.clone()];
            for name in &self.params {
                rec.push(p.valuation.get(name).map_or_else(String::new, |v| v.to_string()));
            }
            rec.push(p.valuation.sentinel_name().to_string());
            rec.push(p.queries.to_string());
            out.write_record(&rec).map_err(table_err)?;
        }
        out.flush().map_err(table_err)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, ProjectionError> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr
            .headers()
            .map_err(table_err)?
            .iter()
            .map(str::to_string)
            .collect();
        let n = header.len();
        if n < 3
            || header[0] != "trace_id"
            || header[n - 2] != "sentinel"
            || header[n - 1] != "queries"
        {
            return Err(table_err(
                "header must be trace_id,<params>,sentinel,queries",
            ));
        }
        let params: Vec<String> = header[1..n - 2].to_vec();
        let mut rows = BTreeMap::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(table_err)?;
            let at = |msg: String| table_err(format!("row {}: {msg}", line + 2));
            if rec.len() != n {
                return Err(at(format!("expected {n} fields, got {}", rec.len())));
            }
            let queries: usize = rec[n - 1]
                .parse()
                .map_err(|_| at(format!("bad query count `{}`", &rec[n - 1])))?;
            let valuation = match &rec[n - 2] {
                "top" => Valuation::Top,
                "bot" => Valuation::Bottom,
                "none" => {
                    let mut map = BTreeMap::new();
                    for (k, name) in params.iter().enumerate() {
                        let cell = &rec[k + 1];
                        let v: f64 = cell
                            .parse()
                            .map_err(|_| at(format!("bad value `{cell}` for `{name}`")))?;
                        map.insert(name.clone(), v);
                    }
                    Valuation::Point(map)
                }
                other => return Err(at(format!("unknown sentinel `{other}`"))),
            };
            if rows
                .insert(rec[0].to_string(), Projection { valuation, queries })
                .is_some()
            {
                return Err(at(format!("duplicate trace id `{}`", &rec[0])));
            }
        }
        Ok(Self::new(params, rows, BTreeMap::new()))
    }
}
