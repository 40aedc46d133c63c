//! Power unit conversions. Every dBm value in the crate goes through here.

/// `p_W = 10^((p_dBm − 30)/10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_points() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert_relative_eq!(dbm_to_watts(50.0), 100.0, max_relative = 1e-14);
        assert_relative_eq!(dbm_to_watts(23.0), 0.199_526_231_496_887_96, max_relative = 1e-14);
        assert_relative_eq!(dbm_to_watts(-96.0), 2.511_886_431_509_58e-13, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(-120.0), 1e-12, max_relative = 1e-14);
    }

    #[test]
    fn round_trip() {
        for dbm in [-96.0, -3.5, 0.0, 23.0, 39.0, 50.0] {
            assert_relative_eq!(watts_to_dbm(dbm_to_watts(dbm)), dbm, epsilon = 1e-12);
        }
    }
}
