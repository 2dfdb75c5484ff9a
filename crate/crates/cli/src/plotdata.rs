//! Long-format CSV tables.

use std::io::Write;

/// A header plus rows of preformatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, T>(&mut self, cells: I)
    where
        I: IntoIterator<Item = T>,
        T: ToString,
    {
        let row: Vec<String> = cells.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Writes `table` as comma-separated text with LF endings; an empty table yields the header only.
pub fn emit_plotdata<W: Write>(table: &Table, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", table.columns.join(","))?;
    for r in &table.rows {
        writeln!(w, "{}", r.join(","))?;
    }
    Ok(())
}

pub fn to_csv_string(table: &Table) -> String {
    let mut buf = Vec::new();
    emit_plotdata(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8 cells")
}
