//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One representative attack name per class, in class order.
pub const LABELS: [&str; 5] = ["normal", "portsweep", "smurf", "buffer_overflow", "warezclient"];

/// Record counts per class that admit the reference split.
pub const FIXTURE_COUNTS: [usize; 5] = [4000, 1000, 7300, 52, 600];

/// Connection records in the public file format, with class-dependent
/// value ranges so the classes are separable.
pub fn kdd_fixture(counts: [usize; 5], seed: u64) -> String {
    let protocols = ["tcp", "udp", "icmp"];
    let services = ["http", "ftp", "smtp", "ecr_i", "private", "telnet"];
    let flags = ["SF", "S0", "REJ"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for (class, (&label, &n)) in LABELS.iter().zip(&counts).enumerate() {
        for _ in 0..n {
            let mut f: Vec<String> = Vec::with_capacity(42);
            f.push(rng.random_range(0..50).to_string());
            f.push(protocols[(class + rng.random_range(0..2)) % 3].into());
            f.push(services[(class + rng.random_range(0..2)) % services.len()].into());
            f.push(flags[(class + rng.random_range(0..2)) % 3].into());
            for col in 4..41 {
                let v = match col {
                    6 | 11 | 20 | 21 => rng.random_range(0..2).to_string(),
                    24..=30 | 33..=40 => format!("{:.2}", (class as f64 * 0.2 + rng.random_range(0.0..0.2)).min(1.0)),
                    _ => (class * 100 + rng.random_range(0..100)).to_string(),
                };
                f.push(v);
            }
            f.push(format!("{label}."));
            out.push_str(&f.join(","));
            out.push('\n');
        }
    }
    out
}
