//! Spec documents shared by the golden and acceptance suites, built from
//! the core fixtures so that the checked-in files cannot drift.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use skelcov::document::CoverDocument;
use skelcov_core::galois::DeckTransformation;
use skelcov_core::retraction::RetractionFlow;
use skelcov_core::{fixtures, DecoratedCover};

pub const SQUARE: &str = r#"{
  "points": ["0", "1", "-1"],
  "val": [["inf", "0", "0"], ["0", "inf", "0"], ["0", "0", "inf"]],
  "polynomial": {"lead": "0", "roots": {"0": 2}},
  "map": {"lead": "0", "fibers": {"0": {"0": 2}, "1": {"1": 1, "-1": 1}}}
}
"#;

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture_path(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

fn with_deck(c: DecoratedCover, deck: Vec<DeckTransformation>) -> CoverDocument {
    CoverDocument { deck: Some(deck), ..CoverDocument::new(c) }
}

fn with_core(c: DecoratedCover, core: &[&str]) -> CoverDocument {
    let t = c.target().clone();
    let vs: Vec<_> = core.iter().map(|n| t.vertex_by_name(n).unwrap()).collect();
    let flow = RetractionFlow::new(t, vs, []).unwrap();
    CoverDocument { flow: Some(flow), ..CoverDocument::new(c) }
}

pub fn star_document() -> CoverDocument {
    let c = fixtures::cyclic_star();
    let deck = (0..3).map(|k| fixtures::star_rotation(&c, k)).collect();
    with_deck(c, deck)
}

pub fn double_circle_document(rays: bool) -> CoverDocument {
    let c = if rays { fixtures::double_circle_with_rays() } else { fixtures::double_circle() };
    let deck = vec![DeckTransformation::identity(c.source()), fixtures::sheet_swap(&c)];
    with_deck(c, deck)
}

/// The star with the totally ramified ray lifted with index 2 instead of 3.
fn broken_star() -> String {
    let mut spec = star_document().to_spec();
    spec.ram.insert("s1".into(), 2);
    spec.puncture_ram.insert("y1".into(), 2);
    spec.emit()
}

/// Swaps the two vertices of the double circle but fixes both edges.
fn fake_deck() -> String {
    let doc = double_circle_document(false);
    let s = doc.cover.source();
    let bad = DeckTransformation::from_names(s, &[("p1", "p2"), ("p2", "p1")], &[]).unwrap();
    CoverDocument { deck: Some(vec![DeckTransformation::identity(s), bad]), ..doc }.emit()
}

/// Every checked-in fixture file with its expected contents.
pub fn fixture_files() -> Vec<(&'static str, String)> {
    vec![
        ("fold.json", CoverDocument::new(fixtures::folded_segment()).emit()),
        ("fold_bad_length.json", CoverDocument::new(fixtures::folded_segment_with_source_length(2)).emit()),
        ("double_circle.json", double_circle_document(false).emit()),
        ("double_circle_rays.json", double_circle_document(true).emit()),
        ("double_circle_fake_deck.json", fake_deck()),
        ("star.json", star_document().emit()),
        ("star_broken.json", broken_star()),
        ("fork.json", with_core(fixtures::forked_segment(), &["d"]).emit()),
        ("identity.json", with_core(fixtures::identity_point(), &["v"]).emit()),
        ("bad_local.json", CoverDocument::new(fixtures::bad_local_decoration()).emit()),
        ("empty.json", String::new()),
        ("square.json", SQUARE.to_string()),
    ]
}

pub fn bless() -> bool {
    std::env::var_os("SKELCOV_BLESS").is_some()
}

/// Compares `actual` with the file at `path`, rewriting it when blessing.
pub fn expect_file(path: &Path, actual: &str) -> Result<(), String> {
    if bless() {
        std::fs::write(path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{} differs:\n--- expected\n{expected}\n--- actual\n{actual}", path.display()))
    }
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Run {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_skelcov"))
        .args(args)
        .current_dir(manifest_dir())
        .env("SKELCOV_NO_COLOR", "1")
        .output()
        .expect("run skelcov");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// The golden cases: name, arguments, expected exit code.
pub const GOLDEN: [(&str, &[&str], i32); 12] = [
    ("validate_fold", &["validate", "tests/fixtures/fold.json"], 0),
    ("validate_bad_length", &["validate", "tests/fixtures/fold_bad_length.json"], 2),
    ("validate_empty", &["validate", "tests/fixtures/empty.json"], 1),
    ("validate_no_files", &["validate"], 1),
    ("audit_w_star", &["audit", "--w", "tests/fixtures/star.json"], 0),
    ("audit_global_identity", &["audit", "--global-rh", "tests/fixtures/identity.json"], 0),
    ("audit_local_bad", &["audit", "--local-rh", "tests/fixtures/bad_local.json"], 2),
    ("skeletonize_fork", &["skeletonize", "--check-idempotent", "tests/fixtures/fork.json"], 0),
    ("galois_star", &["galois-check", "tests/fixtures/star.json"], 0),
    ("galois_broken_star", &["galois-check", "tests/fixtures/star_broken.json"], 2),
    ("export_double_circle", &["export", "tests/fixtures/double_circle.json"], 0),
    ("oracle_induce_square", &["oracle", "induce", "tests/fixtures/square.json"], 0),
];

pub fn render_run(r: &Run) -> String {
    format!("exit={}\n--- stdout\n{}--- stderr\n{}", r.code, r.stdout, r.stderr)
}
