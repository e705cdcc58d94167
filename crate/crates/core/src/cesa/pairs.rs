//! Offset-based pair selection.
//!
//! Client i pairs with FP_i = (i + offset) mod |C| and
//! SP_i = (i - offset + |C|) mod |C|. The map i -> FP_i is a rotation, and
//! i -> SP_i is its inverse, so every client sits in exactly two pairs.

use rand::Rng;

use super::CesaError;

/// Smallest client count the protocol accepts.
pub const MIN_CLIENTS: usize = 7;

/// Lowest permitted offset.
pub const MIN_OFFSET: usize = 2;

/// Largest permitted offset for `clients` participants: floor((|C| - 1) / 2).
pub fn max_offset(clients: usize) -> usize {
    clients.saturating_sub(1) / 2
}

pub fn validate_offset(offset: usize, clients: usize) -> Result<(), CesaError> {
    if clients < MIN_CLIENTS {
        return Err(CesaError::TooFewClients(clients));
    }
    if !(MIN_OFFSET..=max_offset(clients)).contains(&offset) {
        return Err(CesaError::OffsetOutOfRange {
            offset,
            clients,
            max: max_offset(clients),
        });
    }
    Ok(())
}

/// All offsets valid for `clients` participants (empty below the minimum).
pub fn valid_offsets(clients: usize) -> std::ops::RangeInclusive<usize> {
    if clients < MIN_CLIENTS {
        #[allow(clippy::reversed_empty_ranges)]
        return 1..=0;
    }
    MIN_OFFSET..=max_offset(clients)
}

/// Draws a session offset uniformly from the valid range.
pub fn draw_offset<R: Rng + ?Sized>(clients: usize, rng: &mut R) -> Result<usize, CesaError> {
    if clients < MIN_CLIENTS {
        return Err(CesaError::TooFewClients(clients));
    }
    Ok(rng.random_range(valid_offsets(clients)))
}

#[inline]
pub fn fp_index(i: usize, offset: usize, clients: usize) -> usize {
    (i + offset) % clients
}

#[inline]
pub fn sp_index(i: usize, offset: usize, clients: usize) -> usize {
    (i + clients - offset) % clients
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_indices() {
        assert_eq!(fp_index(0, 2, 7), 2);
        assert_eq!(fp_index(6, 2, 7), 1);
        assert_eq!(sp_index(0, 2, 7), 5);
        assert_eq!(sp_index(2, 2, 7), 0);
        for clients in 7..20 {
            for offset in valid_offsets(clients) {
                assert_eq!(sp_index(offset, offset, clients), 0);
            }
        }
    }

    #[test]
    fn offset_range_at_seven() {
        let ok: Vec<usize> = (0..10).filter(|&o| validate_offset(o, 7).is_ok()).collect();
        assert_eq!(ok, vec![2, 3]);
        assert_eq!(valid_offsets(7).collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn six_clients_rejected() {
        for offset in 0..10 {
            assert_eq!(validate_offset(offset, 6), Err(CesaError::TooFewClients(6)));
        }
        assert_eq!(valid_offsets(6).count(), 0);
    }

    #[test]
    fn offset_one_rejected() {
        for clients in 7..100 {
            assert!(validate_offset(1, clients).is_err());
            assert!(validate_offset(clients, clients).is_err());
        }
    }

    #[test]
    fn drawn_offsets_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(8);
        for clients in 7..40 {
            let o = draw_offset(clients, &mut rng).unwrap();
            validate_offset(o, clients).unwrap();
        }
        assert!(draw_offset(6, &mut rng).is_err());
    }
}
