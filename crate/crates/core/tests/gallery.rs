use mecdyn::gallery::{self, Profile, RowStatus, NAMES};

fn check(name: &str) {
    let entry = gallery::build(name).unwrap();
    let report = gallery::verify(&entry, Profile::Quick);
    println!("{}", report.table());
    for r in &report.rows {
        assert_eq!(r.status, RowStatus::Match, "{name}/{}: {}", r.id, r.detail);
    }
}

#[test]
fn literature_dock() {
    check("literature-dock");
}

#[test]
fn lamplighter_z() {
    check("lamplighter-z");
}

#[test]
fn lamplighter() {
    check("lamplighter");
}

#[test]
fn two_point() {
    check("two-point");
}

#[test]
fn three_glued() {
    check("three-glued");
}

#[test]
fn unknown_names_are_rejected() {
    assert!(gallery::build("four-glued").is_err());
    assert_eq!(NAMES.len(), 5);
}

#[test]
fn every_row_id_is_unique() {
    for name in NAMES {
        let entry = gallery::build(name).unwrap();
        let mut ids: Vec<_> = entry.rows.iter().map(|r| r.id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), entry.rows.len(), "{name}");
    }
}

#[test]
#[ignore = "full profile; run with --ignored"]
fn full_profile_matches() {
    for name in NAMES {
        let entry = gallery::build(name).unwrap();
        let report = gallery::verify(&entry, Profile::Full);
        println!("{}", report.table());
        assert!(report.all_match(), "{name}");
    }
}
