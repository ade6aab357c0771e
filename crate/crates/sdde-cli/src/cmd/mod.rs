pub mod branch;
pub mod cmf;
pub mod diagram;
pub mod planar;
pub mod simulate;
pub mod stab;

use sdde::table::{Cell, Table};
use sdde::Params;

use crate::error::CliError;

pub fn params(alpha: f64, beta: f64, b: f64) -> Result<Params, CliError> {
    Params::new(alpha, beta, b).map_err(|e| CliError::Config(e.to_string()))
}

/// Table from `(x, y)` pairs under the given header.
pub fn xy_table(header: [&str; 2], pts: impl IntoIterator<Item = (f64, f64)>) -> Table {
    let mut t = Table::new(&header);
    for (x, y) in pts {
        t.push(vec![Cell::F(x), Cell::F(y)]);
    }
    t
}
