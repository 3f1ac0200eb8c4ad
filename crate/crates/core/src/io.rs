//! Readers and writers for the three line-oriented text formats.
//!
//! Scene (`.fpcc-scene`):
//!
//! ```text
//! # comment
//! d_max <float>
//! center <instance_id> <x> <y> <z>     (zero or more)
//! <x> <y> <z> [instance_id]            (one per point, -1 = unlabeled)
//! ```
//!
//! Embeddings (`.fpcc-emb`): a `dim <D>` header, then one row per scene point
//! holding `D` values and an optional trailing predicted center score.
//!
//! Segmentation (`.fpcc-seg`): a `centers <k_1> ... <k_K>` line of point
//! indices, then one instance index (or -1 for noise) per point.
//!
//! Lines starting with `#` and blank lines are ignored. A path ending in
//! `.gz` is read and written through gzip.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use nalgebra::Point3;
use ndarray::Array2;

use crate::clustering::{SegmentationResult, SegmentationStatus};
use crate::embedding::EmbeddedScene;
use crate::error::{Error, Result};
use crate::scene::{Scene, ScenePoint};

pub use crate::error::ParseError;

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

fn read_text(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    if is_gz(path) {
        GzDecoder::new(BufReader::new(file))
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
    } else {
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
    }
    String::from_utf8(bytes).map_err(|e| {
        let line = 1 + e.as_bytes()[..e.utf8_error().valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        ParseError::new(line, "file is not valid UTF-8").with_path(path).into()
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let res = if is_gz(path) {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
        enc.write_all(text.as_bytes())
            .and_then(|_| enc.finish())
            .and_then(|mut w| w.flush())
    } else {
        let mut w = BufWriter::new(file);
        w.write_all(text.as_bytes()).and_then(|_| w.flush())
    };
    res.map_err(|e| Error::io(path, e))
}

fn attach_path(err: Error, path: &Path) -> Error {
    match err {
        Error::Parse(p) => Error::Parse(p.with_path(path)),
        other => other,
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(tok: &str, line: usize, what: &str) -> std::result::Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| ParseError::new(line, format!("{what}: cannot parse {tok:?} as a number")))?;
    if !v.is_finite() {
        return Err(ParseError::new(line, format!("{what}: non-finite value {tok:?}")));
    }
    Ok(v)
}

fn parse_label(tok: &str, line: usize) -> std::result::Result<Option<u32>, ParseError> {
    let v: i64 = tok
        .parse()
        .map_err(|_| ParseError::new(line, format!("cannot parse instance id {tok:?}")))?;
    match v {
        -1 => Ok(None),
        0..=0xFFFF_FFFF => Ok(Some(v as u32)),
        _ => Err(ParseError::new(line, format!("instance id {v} out of range"))),
    }
}

/// Float formatting for scene files: 17 significant digits, which
/// round-trips every `f64` exactly.
fn fmt_exact(x: f64) -> String {
    format!("{x:.16e}")
}

/// Float formatting for embedding files: 10 significant digits.
fn fmt_compact(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn parse_scene_str(text: &str) -> Result<Scene> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "missing `d_max` header"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("d_max") {
        return Err(ParseError::new(line, "first line must be `d_max <float>`").into());
    }
    let d_max = match (toks.next(), toks.next()) {
        (Some(t), None) => parse_f64(t, line, "d_max")?,
        _ => return Err(ParseError::new(line, "expected exactly one value after `d_max`").into()),
    };
    if d_max <= 0.0 {
        return Err(ParseError::new(line, format!("d_max must be positive, got {d_max}")).into());
    }

    let mut centers: BTreeMap<u32, Point3<f64>> = BTreeMap::new();
    let mut points = Vec::new();
    for (line, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks[0] == "center" {
            if !points.is_empty() {
                return Err(ParseError::new(line, "`center` line after the first point").into());
            }
            if toks.len() != 5 {
                return Err(ParseError::new(line, "expected `center <id> <x> <y> <z>`").into());
            }
            let id = parse_label(toks[1], line)?
                .ok_or_else(|| ParseError::new(line, "center id must be non-negative"))?;
            let c = Point3::new(
                parse_f64(toks[2], line, "center x")?,
                parse_f64(toks[3], line, "center y")?,
                parse_f64(toks[4], line, "center z")?,
            );
            if centers.insert(id, c).is_some() {
                return Err(ParseError::new(line, format!("duplicate center for instance {id}")).into());
            }
            continue;
        }
        if toks.len() != 3 && toks.len() != 4 {
            return Err(ParseError::new(line, format!("expected 3 or 4 fields, found {}", toks.len())).into());
        }
        let pos = Point3::new(
            parse_f64(toks[0], line, "x")?,
            parse_f64(toks[1], line, "y")?,
            parse_f64(toks[2], line, "z")?,
        );
        let label = match toks.get(3) {
            Some(t) => parse_label(t, line)?,
            None => None,
        };
        if let Some(id) = label {
            if !centers.is_empty() && !centers.contains_key(&id) {
                return Err(ParseError::new(line, format!("instance {id} has no `center` line")).into());
            }
        }
        points.push(ScenePoint::new(pos, label));
    }
    if points.is_empty() {
        return Err(ParseError::new(text.lines().count().max(1), "scene has no points").into());
    }
    let centers = (!centers.is_empty()).then_some(centers);
    Scene::new(points, d_max, centers)
}

pub fn scene_to_string(scene: &Scene) -> String {
    let mut s = String::with_capacity(scene.len() * 80 + 64);
    s.push_str("# fpcc scene\n");
    let _ = writeln!(s, "d_max {}", fmt_exact(scene.d_max()));
    if let Some(centers) = scene.instance_centers() {
        for (id, c) in centers {
            let _ = writeln!(s, "center {id} {} {} {}", fmt_exact(c.x), fmt_exact(c.y), fmt_exact(c.z));
        }
    }
    for p in scene.points() {
        let label = p.instance_id.map_or(-1, i64::from);
        let q = p.position;
        let _ = writeln!(s, "{} {} {} {label}", fmt_exact(q.x), fmt_exact(q.y), fmt_exact(q.z));
    }
    s
}

pub fn read_scene(path: impl AsRef<Path>) -> Result<Scene> {
    let path = path.as_ref();
    parse_scene_str(&read_text(path)?).map_err(|e| attach_path(e, path))
}

pub fn write_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &scene_to_string(scene))
}

pub fn parse_embeddings_str(text: &str) -> Result<EmbeddedScene> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "missing `dim` header"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let dim: usize = match toks.as_slice() {
        ["dim", d] => d
            .parse()
            .map_err(|_| ParseError::new(line, format!("cannot parse dimension {d:?}")))?,
        _ => return Err(ParseError::new(line, "first line must be `dim <D>`").into()),
    };
    if dim == 0 {
        return Err(ParseError::new(line, "dimension must be at least 1").into());
    }

    let mut values: Vec<f64> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut with_score: Option<bool> = None;
    let mut rows = 0usize;
    for (line, l) in lines {
        let start = values.len();
        let mut count = 0usize;
        for tok in l.split_whitespace() {
            count += 1;
            if count > dim + 1 {
                values.truncate(start);
                return Err(ParseError::new(line, format!("row {rows}: more than {} values", dim + 1)).into());
            }
            values.push(parse_f64(tok, line, &format!("row {rows}"))?);
        }
        let has_score = match count {
            c if c == dim => false,
            c if c == dim + 1 => true,
            c => {
                return Err(ParseError::new(line, format!("row {rows}: expected {dim} values, found {c}")).into())
            }
        };
        match with_score {
            None => with_score = Some(has_score),
            Some(prev) if prev != has_score => {
                return Err(ParseError::new(line, format!("row {rows}: score column present on some rows only")).into())
            }
            _ => {}
        }
        if has_score {
            let s = values.pop().expect("counted");
            if !(0.0..=1.0).contains(&s) {
                return Err(ParseError::new(line, format!("row {rows}: score {s} outside [0, 1]")).into());
            }
            scores.push(s);
        }
        rows += 1;
    }
    let embeddings = Array2::from_shape_vec((rows, dim), values).expect("rows * dim values");
    EmbeddedScene::new(embeddings, with_score.unwrap_or(false).then_some(scores))
}

pub fn embeddings_to_string(e: &EmbeddedScene) -> Result<String> {
    if e.embeddings.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("refusing to write non-finite embedding values"));
    }
    let scores = e.pred_scores.as_deref();
    if scores.is_some_and(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("refusing to write non-finite scores"));
    }
    let mut s = String::with_capacity(e.len() * (e.dim() + 1) * 17 + 32);
    s.push_str("# fpcc embeddings\n");
    let _ = writeln!(s, "dim {}", e.dim());
    for (i, row) in e.embeddings.rows().into_iter().enumerate() {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            s.push_str(&fmt_compact(*v));
        }
        if let Some(sc) = scores {
            s.push(' ');
            s.push_str(&fmt_compact(sc[i]));
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddedScene> {
    let path = path.as_ref();
    parse_embeddings_str(&read_text(path)?).map_err(|e| attach_path(e, path))
}

pub fn write_embeddings(e: &EmbeddedScene, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &embeddings_to_string(e)?)
}

/// Parses a segmentation file.
///
/// The format stores no confidences, only their order. The returned
/// confidences are rank-derived placeholders `(K - k) / K`; callers with the
/// predicted scores should use [`SegmentationResult::with_center_confidences`].
pub fn parse_segmentation_str(text: &str) -> Result<SegmentationResult> {
    let mut lines = content_lines(text);
    let (line, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "missing `centers` line"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("centers") {
        return Err(ParseError::new(line, "first line must be `centers <k_1> ... <k_K>`").into());
    }
    let centers: Vec<usize> = toks
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| ParseError::new(line, format!("cannot parse center index {t:?}")))
        })
        .collect::<std::result::Result<_, _>>()?;
    let k = centers.len();

    let mut assignments = Vec::new();
    for (line, l) in lines {
        let v: i64 = l
            .parse()
            .map_err(|_| ParseError::new(line, format!("cannot parse instance index {l:?}")))?;
        let a = match v {
            -1 => None,
            v if v >= 0 && (v as u64) < k as u64 => Some(v as usize),
            v => return Err(ParseError::new(line, format!("instance index {v} not in [-1, {k})")).into()),
        };
        assignments.push(a);
    }
    let n = assignments.len();
    if let Some(&bad) = centers.iter().find(|&&c| c >= n) {
        return Err(ParseError::new(line, format!("center index {bad} beyond {n} points")).into());
    }
    for (kk, &c) in centers.iter().enumerate() {
        if assignments[c] != Some(kk) {
            return Err(ParseError::new(line, format!("center {c} is not a member of instance {kk}")).into());
        }
    }
    Ok(SegmentationResult {
        confidences: (0..k).map(|i| (k - i) as f64 / k as f64).collect(),
        status: if k == 0 { SegmentationStatus::NoCenters } else { SegmentationStatus::Ok },
        center_indices: centers,
        assignments,
    })
}

pub fn segmentation_to_string(seg: &SegmentationResult) -> String {
    let mut s = String::with_capacity(seg.len() * 4 + 64);
    s.push_str("# fpcc segmentation\n");
    s.push_str("centers");
    for c in &seg.center_indices {
        let _ = write!(s, " {c}");
    }
    s.push('\n');
    for a in &seg.assignments {
        match a {
            Some(k) => {
                let _ = writeln!(s, "{k}");
            }
            None => s.push_str("-1\n"),
        }
    }
    s
}

pub fn read_segmentation(path: impl AsRef<Path>) -> Result<SegmentationResult> {
    let path = path.as_ref();
    parse_segmentation_str(&read_text(path)?).map_err(|e| attach_path(e, path))
}

pub fn write_segmentation(seg: &SegmentationResult, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &segmentation_to_string(seg))
}

/// One float per line; used for score annotations.
pub fn scores_to_string(header: &str, scores: &[f64]) -> String {
    let mut s = String::with_capacity(scores.len() * 24 + header.len() + 4);
    for h in header.lines() {
        let _ = writeln!(s, "# {h}");
    }
    for v in scores {
        let _ = writeln!(s, "{}", fmt_exact(*v));
    }
    s
}

pub fn write_scores(header: &str, scores: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &scores_to_string(header, scores))
}

pub(crate) fn write_report(text: &str, path: &Path) -> Result<()> {
    write_text(path, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn minimal_scene_round_trip() {
        let s = parse_scene_str("d_max 1.5\n0 0 0\n").unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.d_max(), 1.5);
        assert_eq!(parse_scene_str(&scene_to_string(&s)).unwrap(), s);
    }

    #[test]
    fn unlabeled_points_write_minus_one() {
        let s = parse_scene_str("# hi\nd_max 2\n1 2 3\n4 5 6 -1\n").unwrap();
        let text = scene_to_string(&s);
        assert!(text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("d_max")).all(|l| l.ends_with(" -1")));
    }

    #[test]
    fn labeled_scene_with_centers() {
        let text = "d_max 1\ncenter 0 0 0 0\ncenter 7 5 5 5\n0.1 0 0 0\n5 5 5.5 7\n9 9 9 -1\n";
        let s = parse_scene_str(text).unwrap();
        assert_eq!(s.labels(), vec![Some(0), Some(7), None]);
        assert_eq!(s.instance_centers().unwrap()[&7], Point3::new(5.0, 5.0, 5.0));
        assert_eq!(parse_scene_str(&scene_to_string(&s)).unwrap(), s);
    }

    fn parse_err_line(r: Result<impl std::fmt::Debug>) -> usize {
        match r {
            Err(Error::Parse(p)) => p.line,
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn scene_parse_errors_name_the_line() {
        assert_eq!(parse_err_line(parse_scene_str("d_max 1\n1.0 2.0 abc\n")), 2);
        assert_eq!(parse_err_line(parse_scene_str("# c\n0 0 0\n")), 2);
        assert_eq!(parse_err_line(parse_scene_str("d_max 1\n0 0 NaN\n")), 2);
        assert_eq!(parse_err_line(parse_scene_str("d_max 1\n0 0 inf\n")), 2);
        assert_eq!(parse_err_line(parse_scene_str("d_max 0\n0 0 0\n")), 1);
        assert_eq!(parse_err_line(parse_scene_str("d_max 1\n0 0 0 -2\n")), 2);
        assert_eq!(parse_err_line(parse_scene_str("d_max 1\ncenter 0 0 0 0\n0 0 0 3\n")), 3);
        assert_eq!(parse_err_line(parse_scene_str("d_max 1\n0 0 0\ncenter 0 0 0 0\n")), 3);
        assert_eq!(parse_err_line(parse_scene_str("d_max 1\n")), 1);
        assert_eq!(parse_err_line(parse_scene_str("")), 1);
    }

    #[test]
    fn embeddings_parse() {
        let e = parse_embeddings_str("dim 2\n1 2\n3 4\n5 6\n").unwrap();
        assert_eq!(e.embeddings, array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        assert!(e.pred_scores.is_none());
        let e = parse_embeddings_str("dim 2\n1 2 0.5\n3 4 1\n").unwrap();
        assert_eq!(e.pred_scores, Some(vec![0.5, 1.0]));
    }

    #[test]
    fn embedding_row_too_short() {
        let mut text = String::from("dim 128\n");
        text.push_str(&vec!["0.5"; 128].join(" "));
        text.push('\n');
        text.push_str(&vec!["0.5"; 127].join(" "));
        text.push('\n');
        match parse_embeddings_str(&text) {
            Err(Error::Parse(p)) => {
                assert_eq!(p.line, 3);
                assert!(p.message.contains("row 1"), "{}", p.message);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse_err_line(parse_embeddings_str("dim 2\n1 2 0.5\n3 4\n")), 3);
        assert_eq!(parse_err_line(parse_embeddings_str("dim 2\n1 2 3 4\n")), 2);
        assert_eq!(parse_err_line(parse_embeddings_str("dim 2\n1 2 1.5\n")), 2);
    }

    #[test]
    fn embeddings_round_trip_within_tolerance() {
        let e = EmbeddedScene::new(
            array![[1.0 / 3.0, -2.5e-7], [123456.789, 0.0]],
            Some(vec![0.123456789012, 1.0]),
        )
        .unwrap();
        let back = parse_embeddings_str(&embeddings_to_string(&e).unwrap()).unwrap();
        for (a, b) in e.embeddings.iter().zip(back.embeddings.iter()) {
            assert!((a - b).abs() <= 1e-9 * a.abs());
        }
        let bad = EmbeddedScene::new(array![[f64::NAN, 0.0]], None).unwrap();
        assert!(embeddings_to_string(&bad).is_err());
    }

    #[test]
    fn segmentation_round_trip() {
        let seg = SegmentationResult {
            center_indices: vec![2, 0],
            assignments: vec![Some(1), None, Some(0), Some(0)],
            confidences: vec![1.0, 0.5],
            status: SegmentationStatus::Ok,
        };
        let text = segmentation_to_string(&seg);
        assert_eq!(text, "# fpcc segmentation\ncenters 2 0\n1\n-1\n0\n0\n");
        let back = parse_segmentation_str(&text).unwrap();
        assert_eq!(back.center_indices, seg.center_indices);
        assert_eq!(back.assignments, seg.assignments);
        assert_eq!(segmentation_to_string(&back), text);
    }

    #[test]
    fn segmentation_errors() {
        assert_eq!(parse_err_line(parse_segmentation_str("centers 0\n0\n2\n")), 3);
        assert_eq!(parse_err_line(parse_segmentation_str("0\n")), 1);
        assert_eq!(parse_err_line(parse_segmentation_str("centers 5\n0\n")), 1);
        assert_eq!(parse_err_line(parse_segmentation_str("centers 0\n-1\n")), 1);
        let empty = parse_segmentation_str("centers\n-1\n-1\n").unwrap();
        assert_eq!(empty.status, SegmentationStatus::NoCenters);
    }

    #[test]
    fn gzip_by_extension() {
        let dir = tempfile::tempdir().unwrap();
        let s = parse_scene_str("d_max 1\ncenter 0 0 0 0\n0.25 0 0 0\n").unwrap();
        let gz = dir.path().join("a.fpcc-scene.gz");
        let plain = dir.path().join("a.fpcc-scene");
        write_scene(&s, &gz).unwrap();
        write_scene(&s, &plain).unwrap();
        assert_ne!(std::fs::read(&gz).unwrap(), std::fs::read(&plain).unwrap());
        assert_eq!(read_scene(&gz).unwrap(), s);
        assert_eq!(read_scene(&plain).unwrap(), s);
    }

    #[test]
    fn file_errors_carry_path() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.fpcc-scene");
        std::fs::write(&p, "d_max 1\n1 2\n").unwrap();
        match read_scene(&p) {
            Err(Error::Parse(e)) => {
                assert_eq!(e.path.as_deref(), Some(p.as_path()));
                assert_eq!(e.line, 2);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(read_scene(dir.path().join("missing")), Err(Error::Io { .. })));
    }
}
