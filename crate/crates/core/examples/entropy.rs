//! How widely each term spreads across states.

use lifecurve::entropy::{shannon_entropy, state_vectors};
use lifecurve::ingestion::parse_occurrences;

const TABLE: &str = "\
entity_id,month,count,state
clean water act,2010-01,4,CA
clean water act,2010-01,4,NY
clean water act,2010-02,4,TX
clean water act,2010-03,4,OH
harbor district,2010-02,7,WA
harbor district,2010-04,1,OR
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let records = parse_occurrences(TABLE.as_bytes())?;
    for (term, v) in state_vectors(&records) {
        println!("{term:>16}: H = {:.4} over {:?}", shannon_entropy(&v), v.labels());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
