//! Result tables: CSV with a `#` header block, an optional JSON mirror, and
//! the relative-change columns appended by a convergence rerun.

use std::io::Write;

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(i) => Some(*i as f64),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            // The JSON number is the CSV text read back, so both agree exactly.
            Cell::Num(x) => format_num(*x)
                .parse::<f64>()
                .ok()
                .and_then(serde_json::Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

/// 12 significant digits.
pub fn format_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        "nan".to_string()
    }
}

/// How a column is compared in a convergence rerun.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Compare {
    /// Row key; the refined table is interpolated onto it when needed.
    Axis,
    Skip,
    /// `|b − a| / |a|`
    Relative,
    /// `|b − a| / max|a|` over the column.
    ColumnScaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub compare: Compare,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[(&str, Compare)]) -> Table {
        Table {
            columns: columns
                .iter()
                .map(|(name, compare)| Column {
                    name: name.to_string(),
                    compare: *compare,
                })
                .collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    #[cfg(test)]
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c.name == name)?;
        self.rows.iter().map(|r| r[j].as_f64()).collect()
    }

    fn axis(&self) -> Option<usize> {
        self.columns.iter().position(|c| c.compare == Compare::Axis)
    }

    /// Values of column `j` of `self` at the axis values of `base`.
    fn aligned(&self, base: &Table, j: usize) -> Vec<f64> {
        let values: Vec<f64> = self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect();
        let (Some(ab), Some(a)) = (base.axis(), self.axis()) else {
            return values;
        };
        let xs: Vec<f64> = self.rows.iter().map(|r| r[a].as_f64().unwrap_or(f64::NAN)).collect();
        let targets: Vec<f64> = base.rows.iter().map(|r| r[ab].as_f64().unwrap_or(f64::NAN)).collect();
        if xs == targets {
            return values;
        }
        targets.iter().map(|&t| interpolate(&xs, &values, t)).collect()
    }

    /// Appends `rel_change_<name>` for every compared column.
    pub fn with_convergence(mut self, refined: &Table) -> Table {
        let compared: Vec<usize> = (0..self.columns.len())
            .filter(|&j| matches!(self.columns[j].compare, Compare::Relative | Compare::ColumnScaled))
            .collect();
        let mut extra: Vec<Vec<f64>> = Vec::new();
        for &j in &compared {
            let a: Vec<f64> = self.rows.iter().map(|r| r[j].as_f64().unwrap_or(f64::NAN)).collect();
            let b = refined.aligned(&self, j);
            let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            extra.push(
                a.iter()
                    .zip(&b)
                    .map(|(&x, &y)| match self.columns[j].compare {
                        Compare::ColumnScaled => (y - x).abs() / scale,
                        _ => relative_change(x, y),
                    })
                    .collect(),
            );
        }
        for &j in &compared {
            let name = format!("rel_change_{}", self.columns[j].name);
            self.columns.push(Column {
                name,
                compare: Compare::Skip,
            });
        }
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.extend(extra.iter().map(|col| Cell::Num(col[i])));
        }
        self
    }

    pub fn write_csv<W: Write>(&self, header: &[String], out: W) -> std::io::Result<()> {
        let mut out = out;
        for line in header {
            writeln!(out, "# {line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()
    }

    pub fn to_json(&self, meta: Map<String, Value>) -> Value {
        let columns: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let rows: Vec<Vec<Value>> = self.rows.iter().map(|r| r.iter().map(Cell::to_json).collect()).collect();
        let mut doc = meta;
        doc.insert("columns".into(), json!(columns));
        doc.insert("rows".into(), json!(rows));
        Value::Object(doc)
    }
}

pub fn relative_change(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        (b - a).abs()
    } else {
        ((b - a) / a).abs()
    }
}

/// Linear interpolation on increasing `xs`, clamped at the ends.
fn interpolate(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let k = xs.partition_point(|&x| x < t);
    if k == 0 {
        return ys[0];
    }
    if k == xs.len() {
        return ys[xs.len() - 1];
    }
    let (x0, x1) = (xs[k - 1], xs[k]);
    let w = (t - x0) / (x1 - x0);
    ys[k - 1] + w * (ys[k] - ys[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&[("x", Compare::Axis), ("y", Compare::Relative), ("tag", Compare::Skip)]);
        t.push(vec![Cell::Num(1.0), Cell::Num(2.0), Cell::Text("a".into())]);
        t.push(vec![Cell::Num(2.0), Cell::Num(4.0), Cell::Text("b".into())]);
        t
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_num(1.0), "1.00000000000e0");
        assert_eq!(format_num(-0.000123456789012345), "-1.23456789012e-4");
        assert_eq!(format_num(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&["tool 1".into()], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s, "# tool 1\nx,y,tag\n1.00000000000e0,2.00000000000e0,a\n2.00000000000e0,4.00000000000e0,b\n");
    }

    #[test]
    fn json_matches_csv_numbers() {
        let mut t = sample();
        t.rows[0][1] = Cell::Num(0.1 + 0.2);
        let v = t.to_json(Map::new());
        let y = v["rows"][0][1].as_f64().unwrap();
        assert_eq!(format_num(y), format_num(0.1 + 0.2));
        assert_eq!(y, "3.00000000000e-1".parse::<f64>().unwrap());
        assert_eq!(v["columns"][2], "tag");
    }

    #[test]
    fn convergence_columns() {
        let mut r = sample();
        r.rows[1][1] = Cell::Num(4.4);
        let t = sample().with_convergence(&r);
        assert_eq!(t.columns.last().unwrap().name, "rel_change_y");
        assert_eq!(t.column("rel_change_y").unwrap()[0], 0.0);
        assert!((t.column("rel_change_y").unwrap()[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn convergence_interpolates_other_axes() {
        let mut r = Table::new(&[("x", Compare::Axis), ("y", Compare::ColumnScaled), ("tag", Compare::Skip)]);
        for x in [0.5, 1.5, 2.5] {
            r.push(vec![Cell::Num(x), Cell::Num(2.0 * x), Cell::Text(String::new())]);
        }
        let mut base = sample();
        base.columns[1].compare = Compare::ColumnScaled;
        let t = base.with_convergence(&r);
        assert!(t.column("rel_change_y").unwrap().iter().all(|d| d.abs() < 1e-15));
    }
}
