//! Great-circle distance.

use crate::value::Location;

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Haversine distance in meters.
pub fn distance(a: &Location, b: &Location) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_properties() {
        let p = Location::new(37.44, -122.16);
        let q = Location::new(40.71, -74.0);
        assert_eq!(distance(&p, &p), 0.0);
        assert_eq!(distance(&p, &q), distance(&q, &p));
        let half = std::f64::consts::PI * EARTH_RADIUS_M;
        let d = distance(&Location::new(0.0, 0.0), &Location::new(0.0, 180.0));
        assert!((d - half).abs() / half < 1e-9);
    }
}
