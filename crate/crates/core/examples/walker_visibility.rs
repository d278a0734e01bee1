//! Propagates a Walker constellation for one day and counts target, station and
//! sunlit steps per satellite.
//!
//! `cargo run --release --example walker_visibility`

use chrono::{TimeZone, Utc};
use reossp::orbital::{ground_point_positions, propagate, sun_positions, walker_delta, TimeGrid};
use reossp::visibility::{eclipse_series, orbit_visibility, GroundPoint, SensorSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epoch = Utc.with_ymd_and_hms(2025, 9, 1, 0, 0, 0).unwrap();
    let grid = TimeGrid::new(epoch, 100.0, 864, 1)?;
    let settings = SensorSettings {
        target_masking: false,
        ..SensorSettings::default()
    };
    let targets = [
        GroundPoint::new("Miami", 25.76, -80.19),
        GroundPoint::new("Manila", 14.60, 120.98),
        GroundPoint::new("Lagos", 6.52, 3.38),
    ];
    let stations = [
        GroundPoint::new("Svalbard", 78.23, 15.41),
        GroundPoint::new("Boecillo", 41.54, -4.70),
    ];
    let greenwich = settings.greenwich_angle_deg.to_radians();
    let track = |p: &GroundPoint| ground_point_positions(p.lat_deg, p.lon_deg, &grid, greenwich);
    let target_pos = targets.iter().map(track).collect::<Result<Vec<_>, _>>()?;
    let station_pos = stations.iter().map(track).collect::<Result<Vec<_>, _>>()?;
    let sun = sun_positions(&grid);

    println!("{} steps of {} s", grid.steps, grid.dt_s);
    println!(
        "{:<5} {:>8} {:>8} {:>8} {:>9}",
        "sat", "targets", "stations", "sunlit", "penumbra"
    );
    for (k, sat) in walker_delta(98.18, 4, 4, 0, 709.0)?.iter().enumerate() {
        let vis = orbit_visibility(sat, &grid, &target_pos, &station_pos, &sun, &settings)?;
        let eph = propagate(sat, &grid, settings.propagation)?;
        let fraction = eclipse_series(&eph.positions, &sun)?;
        let penumbra = fraction.iter().filter(|&&f| f > 0.0 && f < 1.0).count();
        println!(
            "{:<5} {:>8} {:>8} {:>8} {:>9}",
            k + 1,
            vis.target.count_ones(),
            vis.station.count_ones(),
            vis.sun.count_ones(),
            penumbra
        );
    }
    Ok(())
}
