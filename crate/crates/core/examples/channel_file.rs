//! Round trip through the plain-text channel format.

use cf_relay::channel::{read_channel, write_channel};
use cf_relay::scenario::{generate_scenario, CellularConfig};
use cf_relay::AntennaProfile;

fn main() -> cf_relay::Result<()> {
    let ch = generate_scenario(&CellularConfig::default(), AntennaProfile::new(2, 2, 2, 1)?)?;
    let text = write_channel(&ch);
    print!("{text}");
    let back = read_channel(&text)?;
    println!("# round trip exact: {}", back == ch);
    Ok(())
}
