//! Drivers are addressed by key, so a path can be regenerated or written to
//! disk and replayed bit for bit.

use foliated_flows::drivers::{sample_brownian, DriverPath, StreamKey};
use foliated_flows::Result;

/// True if both the regenerated and the deserialized drivers match.
pub fn run_example() -> Result<bool> {
    let key = StreamKey::common(42, 3);
    let original = sample_brownian(key, 1.0, 0.01)?;
    let regenerated = sample_brownian(key, 1.0, 0.01)?;
    let bytes = original.to_bytes();
    let replayed = DriverPath::read_binary(key, bytes.as_slice())?;
    let other = sample_brownian(StreamKey::common(42, 4), 1.0, 0.01)?;
    println!("B_1 = {:.6} ({} bytes on disk)", original.brownian_at(1.0)?, bytes.len());
    println!("neighbouring replica B_1 = {:.6}", other.brownian_at(1.0)?);
    Ok(original == regenerated && original == replayed)
}

fn main() -> Result<()> {
    println!("replay identical: {}", run_example()?);
    Ok(())
}
