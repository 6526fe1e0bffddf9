//! Deterministic tabular output: CSV with a header row, or JSON as an
//! array of objects. Floats print as fixed-precision scientific notation so
//! repeated runs are byte-identical.

use std::io::Write;

#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    Float(f64),
    Int(i64),
    Bool(bool),
    Null,
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json_value(&self) -> serde_json::Value {
        match self {
            Cell::Str(s) => serde_json::Value::String(s.clone()),
            Cell::Float(v) => serde_json::json!(v),
            Cell::Int(v) => serde_json::json!(v),
            Cell::Bool(b) => serde_json::json!(b),
            Cell::Null => serde_json::Value::Null,
        }
    }
}

pub fn fmt_float(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.12e}")
}

pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Self {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.csv_text()))?;
        }
        w.flush()
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let array: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let map: serde_json::Map<String, serde_json::Value> = self
                    .headers
                    .iter()
                    .zip(row)
                    .map(|(h, c)| (h.to_string(), c.json_value()))
                    .collect();
                serde_json::Value::Object(map)
            })
            .collect();
        let text = serde_json::to_string_pretty(&array)?;
        writeln!(out, "{text}")
    }

    pub fn write<W: Write>(&self, out: W, csv: bool) -> std::io::Result<()> {
        if csv {
            self.write_csv(out)
        } else {
            self.write_json(out)
        }
    }
}
