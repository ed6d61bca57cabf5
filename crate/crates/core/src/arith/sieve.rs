use crate::error::{Error, Result};

/// Largest limit accepted by [`totient_sieve`]: 10^8 entries, 400 MB of `u32`.
pub const SIEVE_CAP: u64 = 100_000_000;

/// Euler's totient of every integer in `0..=limit`, by the linear sieve.
///
/// Index `i` holds `phi(i)`; index 0 holds 0. Limits above [`SIEVE_CAP`] are
/// refused before anything is allocated.
pub fn totient_sieve(limit: u64) -> Result<Vec<u32>> {
    if limit > SIEVE_CAP {
        return Err(Error::Resource {
            what: "totient sieve",
            requested: format!("{limit} entries"),
            cap: format!("{SIEVE_CAP} entries"),
        });
    }
    let limit = limit as usize;
    let mut phi = vec![0u32; limit + 1];
    if limit >= 1 {
        phi[1] = 1;
    }
    let mut primes: Vec<u32> = Vec::new();
    for i in 2..=limit {
        if phi[i] == 0 {
            phi[i] = (i - 1) as u32;
            primes.push(i as u32);
        }
        for &p in &primes {
            let ip = i * p as usize;
            if ip > limit {
                break;
            }
            if i % p as usize == 0 {
                phi[ip] = phi[i] * p;
                break;
            }
            phi[ip] = phi[i] * (p - 1);
        }
    }
    Ok(phi)
}
