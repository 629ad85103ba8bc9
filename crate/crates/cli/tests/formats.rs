use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use proptest::prelude::*;
use symtorus::io::{field_from_text, field_to_csv, field_to_text, sorted_values_hash};
use symtorus::tables::*;
use symtorus::CliError;
use symtorus_core::field::{sample, shift};
use symtorus_core::geom::{contours, level_set_geometry};
use symtorus_core::rearrange::{bump_structure, distribution};
use symtorus_core::{Grid, ScalarField};

/// Compares against `tests/golden/<name>`; `SYMTORUS_BLESS=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("SYMTORUS_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "{name} differs from its golden file");
}

fn small_bump() -> ScalarField {
    let grid = Grid::new(2, 8, 1.0).unwrap();
    sample(grid, |x| 0.5 - x[0] * x[0] - 0.5 * x[1] * x[1]).unwrap()
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

#[test]
fn table_headers_are_stable() {
    let u = small_bump();
    let d = distribution(&u, &[4], &[0.0], 1e-9).unwrap();
    assert_eq!(header(&distribution_csv(&d).unwrap()), DISTRIBUTION_HEADER.join(","));
    let b = [bump_structure(&u, &[4], 0.0).unwrap()];
    assert_eq!(header(&bump_csv(&b).unwrap()), BUMP_HEADER.join(","));
    assert_eq!(header(&sphericity_csv(&[]).unwrap()), SPHERICITY_HEADER.join(","));
    assert_eq!(header(&contour_csv(&[]).unwrap()), CONTOUR_HEADER.join(","));
    assert_eq!(header(&field_to_csv(&u).unwrap()), "x0,x1,value");
    assert_eq!(DISTRIBUTION_HEADER, ["column", "t", "mu", "mu_reg", "mu_sing"]);
    assert_eq!(BUMP_HEADER, ["column", "t", "y1", "y2", "b", "single_bump"]);
    assert_eq!(
        SPHERICITY_HEADER,
        ["eta", "area", "perimeter", "rho_in", "rho_out", "rho_vol", "delta_rho", "bonnesen_slack"]
    );
    assert_eq!(CONTOUR_HEADER, ["contour", "vertex", "x", "y"]);
}

#[test]
fn golden_tables() {
    let u = small_bump();
    let levels = [-0.25, 0.0, 0.25];
    let d: Vec<_> = (0..8).flat_map(|i| distribution(&u, &[i], &levels, 1e-9).unwrap()).collect();
    golden("distribution.csv", &distribution_csv(&d).unwrap());
    let b: Vec<_> = (0..8).flat_map(|i| levels.map(|t| bump_structure(&u, &[i], t).unwrap())).collect();
    golden("bumps.csv", &bump_csv(&b).unwrap());
    golden("contours.csv", &contour_csv(&contours(&u, 0.0).unwrap()).unwrap());
    golden("field.csv", &field_to_csv(&u).unwrap());
    golden("field.txt", &field_to_text(&u));
}

#[test]
fn golden_sphericity() {
    let grid = Grid::new(2, 32, 1.0).unwrap();
    let u = sample(grid, |x| 0.5 - x[0].hypot(x[1])).unwrap();
    let rows: Vec<_> = [0.0, 0.2].iter().map(|&t| level_set_geometry(&u, t).unwrap()).collect();
    golden("sphericity.csv", &sphericity_csv(&rows).unwrap());
}

#[test]
fn band_has_no_bonnesen_slack() {
    let grid = Grid::new(2, 16, 1.0).unwrap();
    let u = sample(grid, |x| 0.3 - x[0].abs()).unwrap();
    let csv = sphericity_csv(&[level_set_geometry(&u, 0.0).unwrap()]).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(','), "{csv}");
}

fn parse(text: &str) -> Result<ScalarField, CliError> {
    field_from_text(text, Path::new("f.field"))
}

fn line_of(e: CliError) -> (usize, String) {
    match e {
        CliError::Format { line, message, .. } => (line, message),
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn parse_errors_carry_line_numbers() {
    let (line, _) = line_of(parse("not-a-field\n").unwrap_err());
    assert_eq!(line, 1);
    let (line, msg) = line_of(parse("symtorus-field 1\ndim 1\ncolour red\n").unwrap_err());
    assert_eq!(line, 3);
    assert!(msg.contains("colour"), "{msg}");
    let (line, msg) = line_of(parse("symtorus-field 1\ndim 1\nn 4\nhalf_period 1\nvalues\n1 2\n3 x\n").unwrap_err());
    assert_eq!(line, 7);
    assert!(msg.contains("\"x\""), "{msg}");
    let (line, msg) = line_of(parse("symtorus-field 1\ndim 1\nn 4\nhalf_period 1\nvalues\n1 2 3\n").unwrap_err());
    assert_eq!(line, 6);
    assert!(msg.contains("expected 4 values, found 3"), "{msg}");
    let (line, msg) = line_of(parse("symtorus-field 1\ndim 1\nn 4\nhalf_period 1\nvalues\n1 2 3 4\n5\n").unwrap_err());
    assert_eq!(line, 7);
    assert!(msg.contains("more than 4"), "{msg}");
    let (line, msg) = line_of(parse("symtorus-field 1\ndim 1\nn 4\nhalf_period 1\nvalues\n1 NaN 3 4\n").unwrap_err());
    assert_eq!(line, 6);
    assert!(msg.contains("non-finite"), "{msg}");
    let (_, msg) = line_of(parse("symtorus-field 1\ndim 1\nhalf_period 1\nvalues\n").unwrap_err());
    assert!(msg.contains("\"n\""), "{msg}");
    let (line, msg) = line_of(parse("symtorus-field 1\ndim 1\nn 5\nhalf_period 1\nvalues\n").unwrap_err());
    assert_eq!(line, 5);
    assert!(msg.contains("even"), "{msg}");
}

#[test]
fn error_display_is_path_colon_line() {
    let e = parse("symtorus-field 1\ndim two\n").unwrap_err();
    assert!(e.to_string().starts_with("f.field:2: dim:"), "{e}");
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn comments_and_blank_lines_in_the_header() {
    let u = parse("symtorus-field 1\n# made by hand\n\ndim 1\nn 4\nhalf_period 2\nvalues\n0 1\n2 3\n").unwrap();
    assert_eq!(u.values(), &[0.0, 1.0, 2.0, 3.0]);
    assert_eq!(u.grid().half_period(), 2.0);
}

#[test]
fn hash_depends_only_on_the_multiset() {
    let grid = Grid::new(2, 16, 1.0).unwrap();
    let u = sample(grid, |x| (PI * x[0]).sin() + 0.3 * x[1]).unwrap();
    assert_eq!(sorted_values_hash(&u), sorted_values_hash(&shift(&u, &[3, -5])));
    let v = u.map(|x| x + 1e-12).unwrap();
    assert_ne!(sorted_values_hash(&u), sorted_values_hash(&v));
    assert_eq!(sorted_values_hash(&u).len(), 64);
}

fn any_field() -> impl Strategy<Value = ScalarField> {
    (1usize..=3, 2usize..=5, 0.1f64..10.0).prop_flat_map(|(dim, half_n, ell)| {
        let grid = Grid::new(dim, 2 * half_n, ell).unwrap();
        let finite = prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e3f64..1e3];
        proptest::collection::vec(finite, grid.len()).prop_map(move |v| ScalarField::new(grid, v).unwrap())
    })
}

proptest! {
    #[test]
    fn text_roundtrip_is_bit_exact(u in any_field()) {
        let back = parse(&field_to_text(&u)).unwrap();
        prop_assert_eq!(back.grid(), u.grid());
        let bits = |f: &ScalarField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&u));
    }
}
