//! CSV ingestion and serialization.
//!
//! Device traffic files carry one header row and 115 numeric columns;
//! the label comes from the (device, traffic kind) the file represents,
//! not from the file contents. Prepared datasets round-trip through CSV
//! with 17 significant digits, which reproduces every `f64` bit-exactly.

use super::{class_of_kind, DataError, Dataset, FEATURE_COUNT, TRAFFIC_KINDS};
use crate::matrix::Matrix;
use crate::rng::SeededRng;
use std::fs;
use std::path::Path;

/// Formats a float with 17 significant digits (round-trip exact).
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// The 115 column names following the dataset convention: 23 statistics,
/// each over the five decay windows L5, L3, L1, L0.1, L0.01.
pub fn nbaiot_feature_names() -> Vec<String> {
    const WINDOWS: [&str; 5] = ["L5", "L3", "L1", "L0.1", "L0.01"];
    const FAMILIES: [(&str, &[&str]); 5] = [
        ("MI_dir", &["weight", "mean", "variance"]),
        ("H", &["weight", "mean", "variance"]),
        (
            "HH",
            &[
                "weight",
                "mean",
                "std",
                "magnitude",
                "radius",
                "covariance",
                "pcc",
            ],
        ),
        ("HH_jit", &["weight", "mean", "variance"]),
        (
            "HpHp",
            &[
                "weight",
                "mean",
                "std",
                "magnitude",
                "radius",
                "covariance",
                "pcc",
            ],
        ),
    ];
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for (family, stats) in FAMILIES {
        for window in WINDOWS {
            for stat in stats {
                names.push(format!("{family}_{window}_{stat}"));
            }
        }
    }
    debug_assert_eq!(names.len(), FEATURE_COUNT);
    names
}

fn parse_feature_row(
    path: &Path,
    line_no: usize,
    line: &str,
    expected: usize,
) -> Result<Vec<f64>, DataError> {
    let cells: Vec<&str> = line.split(',').collect();
    if cells.len() != expected {
        return Err(DataError::WrongColumnCount {
            path: format!("{} (row {line_no})", path.display()),
            expected,
            found: cells.len(),
        });
    }
    let mut row = Vec::with_capacity(expected);
    for (col, cell) in cells.iter().enumerate() {
        let v: f64 = cell.trim().parse().map_err(|_| DataError::NonNumeric {
            path: path.display().to_string(),
            row: line_no,
            col: col + 1,
            content: cell.to_string(),
        })?;
        if !v.is_finite() {
            return Err(DataError::NonFinite {
                path: path.display().to_string(),
                row: line_no,
                col: col + 1,
            });
        }
        row.push(v);
    }
    Ok(row)
}

/// Loads one device traffic file: header plus 115 numeric columns per
/// row. Every row receives the class mapped from `kind` and the given
/// device tag. Rows containing non-finite values are rejected.
///
/// Row numbers in diagnostics are 1-based file lines (the header is
/// line 1).
pub fn load_device_csv(path: &Path, device: &str, kind: &str) -> Result<Dataset, DataError> {
    let label = class_of_kind(kind).ok_or_else(|| DataError::UnknownTrafficKind(kind.into()))?;
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| DataError::Empty {
        path: path.display().to_string(),
    })?;
    let found = header.split(',').count();
    if found != FEATURE_COUNT {
        return Err(DataError::WrongColumnCount {
            path: path.display().to_string(),
            expected: FEATURE_COUNT,
            found,
        });
    }

    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_feature_row(path, i + 1, line, FEATURE_COUNT)?);
    }
    if rows.is_empty() {
        return Err(DataError::Empty {
            path: path.display().to_string(),
        });
    }
    let n = rows.len();
    Ok(Dataset {
        features: Matrix::from_rows(&rows),
        labels: vec![label; n],
        device_of_row: vec![0; n],
        device_names: vec![device.to_string()],
        class_names: TRAFFIC_KINDS.iter().map(|s| s.to_string()).collect(),
    })
}

/// Counts data rows (excluding the header) without parsing numbers.
pub fn count_csv_rows(path: &Path) -> Result<usize, DataError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .count())
}

/// Loads a uniform random sample of `take` rows (without replacement,
/// seeded) from one device traffic file, parsing only the selected rows.
pub fn sample_device_csv(
    path: &Path,
    device: &str,
    kind: &str,
    take: usize,
    seed: u64,
) -> Result<Dataset, DataError> {
    let label = class_of_kind(kind).ok_or_else(|| DataError::UnknownTrafficKind(kind.into()))?;
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut data_lines: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            let found = line.split(',').count();
            if found != FEATURE_COUNT {
                return Err(DataError::WrongColumnCount {
                    path: path.display().to_string(),
                    expected: FEATURE_COUNT,
                    found,
                });
            }
            continue;
        }
        if !line.trim().is_empty() {
            data_lines.push((i + 1, line));
        }
    }
    if data_lines.len() < take {
        return Err(DataError::InsufficientSamples {
            device: device.into(),
            kind: kind.into(),
            requested: take,
            available: data_lines.len(),
        });
    }
    let mut rng = SeededRng::new(seed);
    let mut selected = rng.sample_indices(data_lines.len(), take);
    selected.sort_unstable();

    let mut rows = Vec::with_capacity(take);
    for &i in &selected {
        let (line_no, line) = data_lines[i];
        rows.push(parse_feature_row(path, line_no, line, FEATURE_COUNT)?);
    }
    Ok(Dataset {
        features: Matrix::from_rows(&rows),
        labels: vec![label; take],
        device_of_row: vec![0; take],
        device_names: vec![device.to_string()],
        class_names: TRAFFIC_KINDS.iter().map(|s| s.to_string()).collect(),
    })
}

/// Serializes a dataset as CSV: `device,traffic,label,<features>` with
/// 17-significant-digit values.
pub fn dataset_to_csv(dataset: &Dataset) -> String {
    let names = if dataset.width() == FEATURE_COUNT {
        nbaiot_feature_names()
    } else {
        (0..dataset.width()).map(|i| format!("f{i:03}")).collect()
    };
    let mut out = String::with_capacity(dataset.rows() * dataset.width() * 12);
    out.push_str("device,traffic,label");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for r in 0..dataset.rows() {
        let (device, kind) = dataset.provenance(r);
        out.push_str(device);
        out.push(',');
        out.push_str(kind);
        out.push(',');
        out.push_str(&dataset.labels[r].to_string());
        for &v in dataset.features.row(r) {
            out.push(',');
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

/// Reads a dataset serialized by [`dataset_to_csv`]. The class table is
/// reconstructed from the per-row (label, traffic) pairs.
pub fn dataset_from_csv(path: &Path) -> Result<Dataset, DataError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| DataError::Empty {
        path: path.display().to_string(),
    })?;
    let width = header.split(',').count().saturating_sub(3);
    if width == 0 {
        return Err(DataError::WrongColumnCount {
            path: path.display().to_string(),
            expected: 4,
            found: header.split(',').count(),
        });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut device_names: Vec<String> = Vec::new();
    let mut device_of_row: Vec<u16> = Vec::new();
    let mut names: Vec<Option<String>> = Vec::new();

    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let mut cells = line.splitn(4, ',');
        let (device, kind, label_s, rest) =
            match (cells.next(), cells.next(), cells.next(), cells.next()) {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => {
                    return Err(DataError::WrongColumnCount {
                        path: format!("{} (row {line_no})", path.display()),
                        expected: width + 3,
                        found: line.split(',').count(),
                    })
                }
            };
        let label: u32 = label_s.trim().parse().map_err(|_| DataError::NonNumeric {
            path: path.display().to_string(),
            row: line_no,
            col: 3,
            content: label_s.to_string(),
        })?;
        let features = parse_feature_row(path, line_no, rest, width)?;

        let device_at = device_names
            .iter()
            .position(|d| d == device)
            .unwrap_or_else(|| {
                device_names.push(device.to_string());
                device_names.len() - 1
            });
        if names.len() <= label as usize {
            names.resize(label as usize + 1, None);
        }
        names[label as usize].get_or_insert_with(|| kind.to_string());

        rows.push(features);
        labels.push(label);
        device_of_row.push(device_at as u16);
    }
    if rows.is_empty() {
        return Err(DataError::Empty {
            path: path.display().to_string(),
        });
    }
    let class_names: Vec<String> = names
        .into_iter()
        .enumerate()
        .map(|(i, n)| n.unwrap_or_else(|| format!("class_{i}")))
        .collect();
    Ok(Dataset {
        features: Matrix::from_rows(&rows),
        labels,
        device_of_row,
        device_names,
        class_names,
    })
}

#[cfg(test)]
mod tests {
    use super::super::StandardStats;
    use super::*;
    use std::io::Write;

    fn write_temp(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn device_csv(rows: &[Vec<f64>]) -> String {
        let mut s = nbaiot_feature_names().join(",");
        s.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    #[test]
    fn feature_names_cover_the_grid() {
        let names = nbaiot_feature_names();
        assert_eq!(names.len(), 115);
        assert_eq!(names[0], "MI_dir_L5_weight");
        assert!(names.iter().any(|n| n == "HpHp_L0.01_pcc"));
    }

    #[test]
    fn well_formed_fixture_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|r| (0..115).map(|c| (r * 115 + c) as f64 * 0.25).collect())
            .collect();
        let path = write_temp(&dir, "benign_traffic.csv", &device_csv(&rows));
        let ds = load_device_csv(&path, "dev_x", "benign").unwrap();
        assert_eq!(ds.rows(), 3);
        assert_eq!(ds.labels, vec![0, 0, 0]);
        assert_eq!(ds.provenance(0), ("dev_x", "benign"));
        assert_eq!(ds.features.get(1, 2), 117.0 * 0.25);
    }

    #[test]
    fn wrong_column_count_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut header = nbaiot_feature_names();
        header.pop();
        let contents = format!("{}\n{}\n", header.join(","), vec!["1.0"; 114].join(","));
        let path = write_temp(&dir, "bad.csv", &contents);
        match load_device_csv(&path, "d", "benign") {
            Err(DataError::WrongColumnCount {
                path: p,
                expected: 115,
                found: 114,
            }) => assert!(p.contains("bad.csv")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_cell_is_rejected_at_the_exact_cell() {
        let dir = tempfile::tempdir().unwrap();
        let mut row: Vec<String> = (0..115).map(|i| format!("{i}.5")).collect();
        row[7] = "NaN".into();
        let contents = format!("{}\n{}\n", nbaiot_feature_names().join(","), row.join(","));
        let path = write_temp(&dir, "nan.csv", &contents);
        match load_device_csv(&path, "d", "mirai_ack") {
            Err(DataError::NonFinite { row: 2, col: 8, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_cell_is_non_numeric() {
        let dir = tempfile::tempdir().unwrap();
        let mut row: Vec<String> = (0..115).map(|i| format!("{i}")).collect();
        row[0] = "hello".into();
        let contents = format!("{}\n{}\n", nbaiot_feature_names().join(","), row.join(","));
        let path = write_temp(&dir, "junk.csv", &contents);
        match load_device_csv(&path, "d", "benign") {
            Err(DataError::NonNumeric {
                row: 2,
                col: 1,
                content,
                ..
            }) => assert_eq!(content, "hello"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_file_is_rejected_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_temp(&dir, "empty.csv", &device_csv(&[]));
        assert!(matches!(
            load_device_csv(&path, "d", "benign"),
            Err(DataError::Empty { .. })
        ));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_temp(&dir, "x.csv", &device_csv(&[vec![0.0; 115]]));
        assert!(matches!(
            load_device_csv(&path, "d", "mirai_quux"),
            Err(DataError::UnknownTrafficKind(_))
        ));
    }

    #[test]
    fn sampling_is_seeded_and_exact() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<Vec<f64>> = (0..40).map(|r| vec![r as f64; 115]).collect();
        let path = write_temp(&dir, "s.csv", &device_csv(&rows));
        assert_eq!(count_csv_rows(&path).unwrap(), 40);
        let a = sample_device_csv(&path, "d", "benign", 12, 5).unwrap();
        let b = sample_device_csv(&path, "d", "benign", 12, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows(), 12);
        // Sampled without replacement: all first-column values distinct.
        let mut firsts: Vec<f64> = (0..12).map(|r| a.features.get(r, 0)).collect();
        firsts.sort_by(f64::total_cmp);
        firsts.dedup();
        assert_eq!(firsts.len(), 12);

        assert!(matches!(
            sample_device_csv(&path, "d", "benign", 100, 5),
            Err(DataError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn dataset_csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = crate::rng::SeededRng::new(3);
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                (0..115)
                    .map(|_| rng.normal() * 10f64.powi(rng.below(9) as i32 - 4))
                    .collect()
            })
            .collect();
        let ds = Dataset {
            features: Matrix::from_rows(&rows),
            labels: (0..20).map(|i| (i % 11) as u32).collect(),
            device_of_row: vec![0; 20],
            device_names: vec!["dev".into()],
            class_names: TRAFFIC_KINDS.iter().map(|s| s.to_string()).collect(),
        };
        let path = dir.path().join("subset.csv");
        fs::write(&path, dataset_to_csv(&ds)).unwrap();
        let back = dataset_from_csv(&path).unwrap();
        assert_eq!(ds.features.as_slice(), back.features.as_slice());
        assert_eq!(ds.labels, back.labels);
        assert_eq!(back.provenance(3), ds.provenance(3));
    }

    #[test]
    fn stats_apply_matches_after_csv_round_trip() {
        let stats = StandardStats {
            mean: vec![1.0, -0.5],
            stddev: vec![2.0, 0.0],
        };
        let m = Matrix::from_rows(&[vec![3.0, 9.0]]);
        let z = stats.apply(&m);
        assert_eq!(z.get(0, 0), 1.0);
        assert_eq!(z.get(0, 1), 0.0);
    }
}
