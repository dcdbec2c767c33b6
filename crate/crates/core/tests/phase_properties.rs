use graphon_entropy::phase::{
    compare, emit_plots, read_pgm, scan, scan_csv, write_scan, RowStatus, ScanConfig, ScanTable, RASTER_SIZE,
};
use graphon_entropy::star::{zeta, PsiProfile};
use graphon_entropy::{DensityModel, Error, SubgraphSpec};

fn star2() -> DensityModel {
    DensityModel::kstar(2).unwrap()
}

fn small_scan(threads: usize) -> ScanConfig {
    let mut cfg = ScanConfig::new(star2());
    cfg.e_min = 0.3;
    cfg.e_max = 0.7;
    cfg.e_count = 5;
    cfg.dtau_count = 3;
    cfg.threads = threads;
    cfg
}

#[test]
fn csv_is_identical_across_runs_and_thread_counts() {
    let one = scan_csv(&scan(&small_scan(1)).unwrap());
    let again = scan_csv(&scan(&small_scan(1)).unwrap());
    let three = scan_csv(&scan(&small_scan(3)).unwrap());
    assert_eq!(one, again);
    assert_eq!(one, three);
    assert_eq!(one.lines().count(), 1 + 5 * 3);
}

#[test]
fn bad_density_rows_are_flagged_without_a_solve() {
    let outcome = scan(&small_scan(0)).unwrap();
    for row in &outcome.rows {
        if (row.e - 0.5).abs() < 1e-12 {
            assert_eq!(row.status, RowStatus::Flagged);
            assert!(row.solution.is_none());
        } else {
            assert_eq!(row.status, RowStatus::Ok, "e = {}: {}", row.e, row.note);
            assert!(row.solution.unwrap().f1_identity().abs() < 1e-9);
        }
    }
    // flagged densities are expected, not failures
    assert!(outcome.fully_successful());
    assert_eq!(outcome.count(RowStatus::Flagged), 3);
}

#[test]
fn f1_column_stays_at_rounding_level() {
    let table = ScanTable::parse(&scan_csv(&scan(&small_scan(0)).unwrap())).unwrap();
    let (status, f1) = (table.column("status").unwrap(), table.column("f1_identity").unwrap());
    for i in 0..table.rows.len() {
        if table.rows[i][status] == "ok" {
            assert!(table.number(i, f1).unwrap().abs() < 1e-9);
        }
    }
}

#[test]
fn comparing_a_model_with_itself_gives_zero_deltas() {
    let r = compare(&star2(), &star2(), 0.4, 1e-3, 1e-3).unwrap();
    assert_eq!(r.max_delta, 0.0);
    assert_eq!(r.conversion_factor, 1.0);
}

#[test]
fn star_and_triangle_solutions_are_close() {
    let tri = DensityModel::Subgraph(SubgraphSpec::triangle());
    let r = compare(&star2(), &tri, 0.4, 2e-3, 2.4e-3).unwrap();
    // triangle reduces to 3 e τ_2 at e = 0.4
    assert!((r.conversion_factor - 1.2).abs() < 1e-12);
    assert!(r.max_delta < 0.05, "max delta {}", r.max_delta);
    assert!((r.b.tau - 0.0664).abs() < 1e-12);
}

#[test]
fn empty_scan_still_gives_a_script() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    std::fs::write(&csv, "e,dtau,tau,status,c,p11,p12,p22,s\n").unwrap();
    let out = emit_plots(&csv, dir.path(), 4).unwrap();
    let script = std::fs::read_to_string(&out.script).unwrap();
    assert!(script.contains("set datafile separator ','"));
    assert!(out.rasters.is_empty());
    assert_eq!(std::fs::read_to_string(&out.zeta_curve).unwrap(), "e,p12\n");
}

#[test]
fn raster_pixels_match_block_values() {
    let mut cfg = ScanConfig::new(star2());
    cfg.e_min = 0.4;
    cfg.e_count = 1;
    cfg.dtau_min = 1e-3;
    cfg.dtau_max = 1e-3;
    cfg.dtau_count = 1;
    let dir = tempfile::tempdir().unwrap();
    write_scan(&scan(&cfg).unwrap(), dir.path()).unwrap();
    let out = emit_plots(&dir.path().join("scan.csv"), dir.path(), 8).unwrap();
    assert_eq!(out.rasters.len(), 1);

    let table = ScanTable::parse(&std::fs::read_to_string(dir.path().join("scan.csv")).unwrap()).unwrap();
    let v = |name: &str| table.number(0, table.column(name).unwrap()).unwrap();
    let (c, p11, p12, p22) = (v("c"), v("p11"), v("p12"), v("p22"));
    let level = |p: f64| (p * 65535.0).round() as u16;
    let (w, h, pixels) = read_pgm(&std::fs::read(&out.rasters[0]).unwrap()).unwrap();
    assert_eq!((w, h), (RASTER_SIZE, RASTER_SIZE));
    for row in 0..h {
        for col in 0..w {
            let small_x = (col as f64 + 0.5) / (w as f64) < c;
            let small_y = (row as f64 + 0.5) / (h as f64) < c;
            let want = match (small_x, small_y) {
                (true, true) => level(p11),
                (false, false) => level(p22),
                _ => level(p12),
            };
            assert_eq!(pixels[row * w + col], want, "pixel ({row}, {col})");
        }
    }
}

#[test]
fn zeta_curve_follows_the_profile_maximizer() {
    let mut cfg = ScanConfig::new(DensityModel::kstar(3).unwrap());
    cfg.e_min = 0.2;
    cfg.e_max = 0.9;
    cfg.e_count = 8;
    cfg.dtau_min = 1e-7;
    cfg.dtau_max = 1e-5;
    cfg.dtau_count = 2;
    let dir = tempfile::tempdir().unwrap();
    let outcome = scan(&cfg).unwrap();
    write_scan(&outcome, dir.path()).unwrap();
    let out = emit_plots(&dir.path().join("scan.csv"), dir.path(), 0).unwrap();
    let text = std::fs::read_to_string(out.zeta_curve).unwrap();
    let mut n = 0;
    for line in text.lines().skip(1) {
        let (e, p) = line.split_once(',').unwrap();
        let (e, p): (f64, f64) = (e.parse().unwrap(), p.parse().unwrap());
        let z = zeta(&PsiProfile::kstar(3, e).unwrap()).unwrap().e_tilde;
        assert!((p - z).abs() < 1e-3, "e = {e}: p12 {p} vs ζ {z}");
        n += 1;
    }
    assert_eq!(n, outcome.rows.iter().filter(|r| r.status == RowStatus::Ok).count() / 2);
}

#[test]
fn missing_column_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    std::fs::write(&csv, "e,dtau,tau,status,c,p11,p12,s\n").unwrap();
    match emit_plots(&csv, dir.path(), 1) {
        Err(Error::Format(msg)) => assert!(msg.contains("p22")),
        other => panic!("expected a format error, got {other:?}"),
    }
}
