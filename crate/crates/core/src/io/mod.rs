//! File formats: graymaps, CSV tables, JSON-lines events and Matrix Market.

pub mod events;
pub mod mtx;
pub mod pgm;
pub mod table;

pub use events::{quasi_static_events, stage_events, Event, EventLog};
pub use mtx::{load_matrix, load_vector, read_matrix_market};
pub use pgm::{Graymap, PgmFormat};
pub use table::{csv_string, error_sidecar, write_csv, CsvFault};
