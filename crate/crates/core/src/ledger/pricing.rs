use super::LedgerError;

/// Share of node memory held back as the emergency buffer.
pub const BUFFER_FRACTION: f64 = 0.05;

/// Asymptotic memory price `k_mem / (0.95 c_total - u)`.
pub fn memory_price(u: f64, c_total: f64, k_mem: f64) -> Result<f64, LedgerError> {
    if !(u >= 0.0) || !(c_total > 0.0) {
        return Err(LedgerError::Invalid(format!("u={u} c_total={c_total}")));
    }
    let c_max = (1.0 - BUFFER_FRACTION) * c_total;
    if u >= c_max {
        return Err(LedgerError::Saturated);
    }
    Ok(k_mem / (c_max - u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn price_examples() {
        assert!((memory_price(0.0, 100.0, 1.0).unwrap() - 1.0 / 95.0).abs() < 1e-15);
        assert!((memory_price(0.0, 100.0, 1.0).unwrap() - 0.01053).abs() < 1e-5);
        assert!((memory_price(85.0, 100.0, 1.0).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(memory_price(95.0, 100.0, 1.0), Err(LedgerError::Saturated));
        assert_eq!(memory_price(99.0, 100.0, 1.0), Err(LedgerError::Saturated));
        assert!(memory_price(-1.0, 100.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn price_rises_toward_the_buffer(u in 0.0f64..94.0, du in 0.01f64..0.9) {
            let a = memory_price(u, 100.0, 2.0).unwrap();
            let b = memory_price(u + du, 100.0, 2.0).unwrap();
            prop_assert!(b > a);
        }
    }
}
