//! Grid-convergence invariants of the marching solver. The height domain is
//! sized to contain the beam over the full range so the absorber never
//! touches receiver-relevant field.

use propuq::pwe::{run_two_way, AntennaConfig, GroundModel, PweConfig};
use propuq::terrain::TerrainProfile;

fn antenna() -> AntennaConfig {
    AntennaConfig {
        tx_height_m: 11.0,
        rx_height_m: 2.5,
        elevation_deg: 0.0,
        beamwidth_deg: 8.0,
        frequency_hz: 435e6,
    }
}

fn cfg() -> PweConfig {
    PweConfig {
        delta_range_m: 50.0,
        delta_height_m: 0.5,
        max_height_m: 512.0,
        frequency_hz: 435e6,
        total_range_m: 2000.0,
        ground: GroundModel::Pec,
        absorber_fraction: 0.25,
        max_reflections: 1,
    }
}

#[test]
fn doubling_the_domain_changes_path_loss_by_under_a_tenth_db() {
    let antenna = antenna();
    let base = cfg();
    let mut tall = base.clone();
    tall.max_height_m = 1024.0;
    for terrain in [
        TerrainProfile::flat(2000.0, 0.0),
        TerrainProfile::wedge(2000.0, 1000.0, 30.0),
    ] {
        let a = run_two_way(&terrain, &antenna, &base).unwrap();
        let b = run_two_way(&terrain, &antenna, &tall).unwrap();
        let worst = a
            .path_loss_db
            .iter()
            .zip(&b.path_loss_db)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0_f64, f64::max);
        assert!(
            worst < 0.1,
            "domain doubling moved path loss by {worst:.3} dB on {}",
            terrain.name
        );
    }
}

#[test]
fn halving_the_range_step_changes_path_loss_by_under_half_db() {
    let antenna = antenna();
    let coarse = cfg();
    let mut fine = coarse.clone();
    fine.delta_range_m = 25.0;
    // gentle monotone slopes: the staircase re-quantization between the two
    // resolutions stays below the grazing interference sensitivity there,
    // while peaked profiles move shadow-boundary nulls by whole lobes
    let ramp3 = TerrainProfile::new("ramp3", vec![(0.0, 0.0), (2000.0, 3.0)]).unwrap();
    let ramp6 = TerrainProfile::new("ramp6", vec![(0.0, 0.0), (2000.0, 6.0)]).unwrap();
    for terrain in [TerrainProfile::flat(2000.0, 0.0), ramp3, ramp6] {
        let a = run_two_way(&terrain, &antenna, &coarse).unwrap();
        let b = run_two_way(&terrain, &antenna, &fine).unwrap();
        let mut worst = 0.0_f64;
        for (i, r) in a.ranges_m.iter().enumerate() {
            let j = b
                .ranges_m
                .iter()
                .position(|x| (x - r).abs() < 1e-9)
                .expect("coarse ranges are a subset of fine ranges");
            worst = worst.max((a.path_loss_db[i] - b.path_loss_db[j]).abs());
        }
        assert!(
            worst < 0.5,
            "range-step halving moved path loss by {worst:.3} dB on {}",
            terrain.name
        );
    }
}
