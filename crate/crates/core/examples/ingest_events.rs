//! Parse an event log and bin it into monthly activity series.

use lifecurve::ingestion::{bin_monthly, parse_events, ObservationWindow};

const LOG: &str = "\
entity_id,timestamp
alice,2006-01-03T09:12:00Z
alice,2006-01-17
bob,2006-02-01 14:00
alice,2006-03-22
bob,2006-05
bob,2006-05-30
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let events = parse_events(LOG.as_bytes())?;
    let window = ObservationWindow::spanning(&events).ok_or("no events")?;
    println!("window {} .. {}", window.epoch_month, window.end_month);
    for (id, s) in bin_monthly(&events, window)? {
        println!("{id:>6}: from {} counts {:?} total {}", s.start_month, s.counts, s.total());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
