//! Transfer costs between phase slots and plane-and-phase slots of one orbit.
//!
//! `cargo run --release --example maneuver_costs`

use reossp::maneuver::{build_phase_slots, build_plane_phase_slots, phasing_cost, transfer_cost};
use reossp::orbital::OrbitalElements;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let home = OrbitalElements::circular_deg(709.0, 98.18, 0.0, 0.0);
    let day = 86_400.0;

    println!("phasing by 90 deg within one day, by revolution cap:");
    for rev in [1, 2, 5, 10, 15] {
        let dv = phasing_cost(home.semi_major_axis_km, 90f64.to_radians(), day, rev);
        println!("  {rev:>2} rev  {dv:>9.3} m/s");
    }

    println!("\nphase slots (one day, 15 revolutions):");
    for (j, slot) in build_phase_slots(&home, 6)?.iter().enumerate() {
        let t = transfer_cost(&home, slot, day, 15)?;
        println!(
            "  slot {:>2}  u {:>6.1} deg  {:>8.3} m/s  {:?}",
            j + 1,
            slot.arg_latitude.to_degrees(),
            t.dv_mps,
            t.kind
        );
    }

    println!("\nplane and phase slots within 750 m/s:");
    for (j, slot) in build_plane_phase_slots(&home, 3, 3, 750.0, 0.75)?
        .iter()
        .enumerate()
    {
        let t = transfer_cost(&home, slot, day, 15)?;
        println!(
            "  slot {:>2}  i {:>6.2} deg  raan {:>6.2} deg  {:>8.2} m/s  {:?}",
            j + 1,
            slot.inclination.to_degrees(),
            slot.raan.to_degrees(),
            t.dv_mps,
            t.kind
        );
    }
    Ok(())
}
