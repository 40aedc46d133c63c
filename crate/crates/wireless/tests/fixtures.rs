use llmo_wireless::fixtures::*;
use llmo_wireless::{mmimo_grid_search, rayleigh_channels, MmimoModel};

#[test]
fn ifc_fixture_is_the_seeded_draw() {
    assert_eq!(ifc_d2().unwrap(), rayleigh_channels(2, 2, IFC_D2_SEED).unwrap());
}

#[test]
fn mmimo_optimum_matches_exhaustive_search() {
    let rec = mmimo_optimum().unwrap();
    let model = MmimoModel {
        samples: rec.samples,
        ..MmimoModel::default()
    };
    let found = mmimo_grid_search(
        &model,
        &MMIMO_GRID_ANTENNAS,
        &MMIMO_GRID_USERS,
        &MMIMO_GRID_POWERS_DBM,
        rec.seed,
    )
    .unwrap();
    assert_eq!(
        (found.antennas, found.users, found.power_dbm),
        (rec.antennas, rec.users, rec.power_dbm)
    );
    assert!((found.ee - rec.ee).abs() <= 1e-12 * rec.ee);
}
