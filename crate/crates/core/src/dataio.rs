//! CSV ingestion of preference matrices, activities and groups, plus seeded
//! synthetic instances.
//!
//! All files are UTF-8, comma-separated with a header row:
//! `user,item,value`, `user,weight` and `user,group`. IDs are arbitrary
//! strings, mapped to indices in order of first appearance in the
//! preferences file.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::objectives::ExposureMatrix;
use crate::problem::{dcg_weights, Matrix, ProblemInstance, DEFAULT_MAX_ENTRIES};
use crate::scalar::{sum_tolerance, Scalar};

/// Seed of the synthetic instance behind [`desk_preset`].
pub const DESK_SEED: u64 = 0;

/// Position weights for loaded instances.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec<T> {
    /// `b_κ = 1/log2(1+κ)`.
    Dcg,
    /// Explicit weights; the length must equal `k`.
    Explicit(Vec<T>),
}

impl<T: Scalar> WeightSpec<T> {
    pub fn weights(&self, k: usize) -> Result<Vec<T>> {
        match self {
            WeightSpec::Dcg => Ok(dcg_weights(k)),
            WeightSpec::Explicit(b) if b.len() == k => Ok(b.clone()),
            WeightSpec::Explicit(b) => Err(Error::Dimension {
                what: "explicit weight list",
                got: b.len(),
                expected: k,
            }),
        }
    }
}

/// One parsed row with its 1-based file line.
#[derive(Debug, Clone, PartialEq)]
pub struct Located<R> {
    pub line: u64,
    pub row: R,
}

/// File contents before index mapping and validation against each other.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RawDataset {
    pub preferences: Vec<Located<(String, String, f64)>>,
    pub activities: Option<Vec<Located<(String, f64)>>>,
    pub groups: Option<Vec<Located<(String, String)>>>,
}

/// An instance together with the string IDs its indices came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedInstance<T> {
    pub instance: ProblemInstance<T>,
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    /// Label of each group, in group-index order.
    pub group_labels: Vec<String>,
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<Located<Vec<String>>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        rows.push(Located {
            line,
            row: record.iter().map(str::to_owned).collect(),
        });
    }
    Ok(rows)
}

fn parse_number(path: &Path, line: u64, what: &str, text: &str) -> Result<f64> {
    let x: f64 = text
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{what} `{text}` is not a number")))?;
    if !x.is_finite() {
        return Err(Error::parse(path, line, format!("{what} `{text}` is not finite")));
    }
    Ok(x)
}

/// Reads the three files without cross-checking them.
pub fn read_raw(preferences: &Path, activities: Option<&Path>, groups: Option<&Path>) -> Result<RawDataset> {
    let mut raw = RawDataset::default();
    for Located { line, row } in read_rows(preferences, &["user", "item", "value"])? {
        let value = parse_number(preferences, line, "value", &row[2])?;
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::parse(
                preferences,
                line,
                format!("value {value} is outside [0, 1]"),
            ));
        }
        raw.preferences.push(Located {
            line,
            row: (row[0].clone(), row[1].clone(), value),
        });
    }
    if let Some(path) = activities {
        let mut rows = Vec::new();
        for Located { line, row } in read_rows(path, &["user", "weight"])? {
            let weight = parse_number(path, line, "weight", &row[1])?;
            if weight < 0.0 {
                return Err(Error::parse(path, line, format!("weight {weight} is negative")));
            }
            rows.push(Located {
                line,
                row: (row[0].clone(), weight),
            });
        }
        raw.activities = Some(rows);
    }
    if let Some(path) = groups {
        let rows = read_rows(path, &["user", "group"])?
            .into_iter()
            .map(|Located { line, row }| Located {
                line,
                row: (row[0].clone(), row[1].clone()),
            })
            .collect();
        raw.groups = Some(rows);
    }
    Ok(raw)
}

/// Loads an instance from CSV files. Missing `(user, item)` pairs mean a
/// value of 0 and a missing activities file means uniform activities.
/// Activities summing to 1 are kept as given, others are rescaled.
pub fn load_instance<T: Scalar>(
    preferences: &Path,
    k: usize,
    b_spec: &WeightSpec<T>,
    activities: Option<&Path>,
    groups: Option<&Path>,
) -> Result<LoadedInstance<T>> {
    load_instance_capped(preferences, k, b_spec, activities, groups, DEFAULT_MAX_ENTRIES)
}

/// [`load_instance`] with an explicit cap on dense matrix entries.
pub fn load_instance_capped<T: Scalar>(
    preferences: &Path,
    k: usize,
    b_spec: &WeightSpec<T>,
    activities: Option<&Path>,
    groups: Option<&Path>,
    max_entries: usize,
) -> Result<LoadedInstance<T>> {
    let raw = read_raw(preferences, activities, groups)?;

    let mut user_index: HashMap<String, usize> = HashMap::new();
    let mut item_index: HashMap<String, usize> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    for Located { row: (u, j, _), .. } in &raw.preferences {
        if !user_index.contains_key(u) {
            user_index.insert(u.clone(), user_ids.len());
            user_ids.push(u.clone());
        }
        if !item_index.contains_key(j) {
            item_index.insert(j.clone(), item_ids.len());
            item_ids.push(j.clone());
        }
    }
    let (n, m) = (user_ids.len(), item_ids.len());
    if n == 0 {
        return Err(Error::parse(preferences, 1, "no preference rows"));
    }
    let entries = n.saturating_mul(m);
    if entries > max_entries {
        return Err(Error::TooLarge {
            entries,
            cap: max_entries,
        });
    }

    let mut mu = Matrix::zeros(n, m);
    let mut seen = vec![0u64; n * m];
    for Located {
        line,
        row: (u, j, value),
    } in &raw.preferences
    {
        let (i, j) = (user_index[u], item_index[j]);
        if seen[i * m + j] != 0 {
            return Err(Error::parse(
                preferences,
                *line,
                format!(
                    "duplicate pair ({u}, {}) first seen on line {}",
                    item_ids[j],
                    seen[i * m + j]
                ),
            ));
        }
        seen[i * m + j] = *line;
        mu.row_mut(i)[j] = T::of(*value);
    }

    let w = match (&raw.activities, activities) {
        (Some(rows), Some(path)) => activity_vector(rows, path, &user_index, &user_ids)?,
        _ => vec![T::one() / T::of_usize(n); n],
    };

    let mut group_labels = Vec::new();
    let group_members = match (&raw.groups, groups) {
        (Some(rows), Some(path)) => {
            let mut label_index: HashMap<&str, usize> = HashMap::new();
            let mut members: Vec<Vec<usize>> = Vec::new();
            for Located { line, row: (u, g) } in rows {
                let i = *user_index
                    .get(u)
                    .ok_or_else(|| Error::parse(path, *line, format!("unknown user `{u}`")))?;
                let s = *label_index.entry(g.as_str()).or_insert_with(|| {
                    group_labels.push(g.clone());
                    members.push(Vec::new());
                    members.len() - 1
                });
                if members[s].contains(&i) {
                    return Err(Error::parse(
                        path,
                        *line,
                        format!("user `{u}` listed twice in group `{g}`"),
                    ));
                }
                members[s].push(i);
            }
            if members.is_empty() {
                return Err(Error::parse(path, 1, "no group rows"));
            }
            Some(members)
        }
        _ => None,
    };

    let b = b_spec.weights(k)?;
    let instance = ProblemInstance::with_entry_cap(b, mu, w, group_members, max_entries)?;
    Ok(LoadedInstance {
        instance,
        user_ids,
        item_ids,
        group_labels,
    })
}

fn activity_vector<T: Scalar>(
    rows: &[Located<(String, f64)>],
    path: &Path,
    user_index: &HashMap<String, usize>,
    user_ids: &[String],
) -> Result<Vec<T>> {
    let n = user_ids.len();
    let mut w = vec![None; n];
    for Located { line, row: (u, weight) } in rows {
        let i = *user_index
            .get(u)
            .ok_or_else(|| Error::parse(path, *line, format!("unknown user `{u}`")))?;
        if w[i].is_some() {
            return Err(Error::parse(path, *line, format!("duplicate weight for user `{u}`")));
        }
        w[i] = Some(T::of(*weight));
    }
    let last_line = rows.last().map_or(1, |r| r.line);
    let w: Vec<T> = w
        .into_iter()
        .enumerate()
        .map(|(i, x)| x.ok_or_else(|| Error::parse(path, last_line, format!("no weight for user `{}`", user_ids[i]))))
        .collect::<Result<_>>()?;
    let total: T = w.iter().copied().sum();
    if !(total > T::zero() && total.is_finite()) {
        return Err(Error::parse(
            path,
            last_line,
            format!("weights sum to {total} and cannot be normalized"),
        ));
    }
    if (total - T::one()).abs() <= sum_tolerance(1e-12, n) {
        Ok(w)
    } else {
        Ok(w.into_iter().map(|x| x / total).collect())
    }
}

/// Writes every entry of `loaded` (zeros included) so that
/// [`load_instance`] reproduces it. Activities and groups are written only
/// when a path is given.
pub fn write_instance<T: Scalar>(
    loaded: &LoadedInstance<T>,
    preferences: &Path,
    activities: Option<&Path>,
    groups: Option<&Path>,
) -> Result<()> {
    let inst = &loaded.instance;
    write_csv(preferences, "user,item,value", |out| {
        for (i, row) in inst.mu().iter_rows().enumerate() {
            for (j, x) in row.iter().enumerate() {
                writeln!(out, "{},{},{}", loaded.user_ids[i], loaded.item_ids[j], x.as_f64())?;
            }
        }
        Ok(())
    })?;
    if let Some(path) = activities {
        write_csv(path, "user,weight", |out| {
            for (id, w) in loaded.user_ids.iter().zip(inst.w()) {
                writeln!(out, "{id},{}", w.as_f64())?;
            }
            Ok(())
        })?;
    }
    if let (Some(path), Some(g)) = (groups, inst.groups()) {
        write_csv(path, "user,group", |out| {
            for (s, members) in g.all().iter().enumerate() {
                for &i in members {
                    writeln!(out, "{},{}", loaded.user_ids[i], loaded.group_labels[s])?;
                }
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn write_csv(path: &Path, header: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{header}")
        .and_then(|_| body(&mut out))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

impl<T: Scalar> LoadedInstance<T> {
    /// Wraps an in-memory instance, using indices as IDs and `g<s>` as
    /// group labels.
    pub fn with_index_ids(instance: ProblemInstance<T>) -> Self {
        let user_ids = (0..instance.n()).map(|i| i.to_string()).collect();
        let item_ids = (0..instance.m()).map(|j| j.to_string()).collect();
        let group_labels = (0..instance.groups().map_or(0, |g| g.len()))
            .map(|s| format!("g{s}"))
            .collect();
        LoadedInstance {
            instance,
            user_ids,
            item_ids,
            group_labels,
        }
    }
}

/// Writes an exposure matrix as `user,item,value`, every entry included.
pub fn write_exposure_matrix<T: Scalar>(path: &Path, pi: &ExposureMatrix<T>, loaded: &LoadedInstance<T>) -> Result<()> {
    write_csv(path, "user,item,value", |out| {
        for (i, row) in pi.matrix().iter_rows().enumerate() {
            for (j, x) in row.iter().enumerate() {
                writeln!(out, "{},{},{}", loaded.user_ids[i], loaded.item_ids[j], x.as_f64())?;
            }
        }
        Ok(())
    })
}

/// Reads an exposure matrix written by [`write_exposure_matrix`] and checks
/// it against the instance. Missing entries are 0.
pub fn read_exposure_matrix<T: Scalar>(path: &Path, loaded: &LoadedInstance<T>) -> Result<ExposureMatrix<T>> {
    let inst = &loaded.instance;
    let (n, m) = (inst.n(), inst.m());
    let users: HashMap<&str, usize> = loaded
        .user_ids
        .iter()
        .enumerate()
        .map(|(i, u)| (u.as_str(), i))
        .collect();
    let items: HashMap<&str, usize> = loaded
        .item_ids
        .iter()
        .enumerate()
        .map(|(j, x)| (x.as_str(), j))
        .collect();
    let mut pi = Matrix::zeros(n, m);
    let mut seen = vec![false; n * m];
    for Located { line, row } in read_rows(path, &["user", "item", "value"])? {
        let i = *users
            .get(row[0].as_str())
            .ok_or_else(|| Error::parse(path, line, format!("unknown user `{}`", row[0])))?;
        let j = *items
            .get(row[1].as_str())
            .ok_or_else(|| Error::parse(path, line, format!("unknown item `{}`", row[1])))?;
        if std::mem::replace(&mut seen[i * m + j], true) {
            return Err(Error::parse(
                path,
                line,
                format!("duplicate pair ({}, {})", row[0], row[1]),
            ));
        }
        pi.row_mut(i)[j] = T::of(parse_number(path, line, "value", &row[2])?);
    }
    ExposureMatrix::new(pi, inst)
}

/// Shape of a synthetic preference matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// `μᵢⱼ ~ U[0, 1]` i.i.d.
    Uniform,
    /// Users and items split into two contiguous halves; mean 0.8 within a
    /// block and 0.2 across, plus `U[−0.1, 0.1]` noise clipped to `[0, 1]`.
    Block,
}

impl std::str::FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Structure::Uniform),
            "block" => Ok(Structure::Block),
            other => Err(Error::Config(format!(
                "unknown structure `{other}` (expected uniform or block)"
            ))),
        }
    }
}

/// Seeded synthetic instance with DCG weights, uniform activities and no groups.
pub fn synth_instance<T: Scalar>(
    n: usize,
    m: usize,
    k: usize,
    seed: u64,
    structure: Structure,
) -> Result<ProblemInstance<T>> {
    let entries = n.saturating_mul(m);
    if entries > DEFAULT_MAX_ENTRIES {
        return Err(Error::TooLarge {
            entries,
            cap: DEFAULT_MAX_ENTRIES,
        });
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut data = Vec::with_capacity(entries);
    for i in 0..n {
        for j in 0..m {
            let x = match structure {
                Structure::Uniform => rng.gen::<f64>(),
                Structure::Block => {
                    let mean: f64 = if 2 * i / n == 2 * j / m { 0.8 } else { 0.2 };
                    (mean + rng.gen_range(-0.1..=0.1)).clamp(0.0, 1.0)
                }
            };
            data.push(T::of(x));
        }
    }
    ProblemInstance::with_uniform_activity(dcg_weights(k), Matrix::from_vec(n, m, data)?, None)
}

/// Users split by index parity: even indices, then odd.
pub fn parity_groups(n: usize) -> Vec<Vec<usize>> {
    vec![(0..n).step_by(2).collect(), (1..n).step_by(2).collect()]
}

/// The small block instance used for convergence checks: `n = 50`, `m = 80`,
/// `k = 5`, DCG weights, uniform activities and two groups by user parity.
pub fn desk_preset<T: Scalar>() -> ProblemInstance<T> {
    synth_instance(50, 80, 5, DESK_SEED, Structure::Block)
        .and_then(|inst| inst.with_groups(Some(parity_groups(50))))
        .expect("desk preset parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn single_entry() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "user,item,value\nu1,i1,1.0\n");
        let l = load_instance::<f64>(&p, 1, &WeightSpec::Dcg, None, None).unwrap();
        assert_eq!((l.instance.n(), l.instance.m()), (1, 1));
        assert_eq!(l.instance.b(), &[1.0]);
        assert_eq!(l.instance.w(), &[1.0]);
    }

    #[test]
    fn missing_pairs_are_zero_and_ids_are_kept() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "user,item,value\nbob,x,0.5\nann,y,0.25\n");
        let l = load_instance::<f64>(&p, 2, &WeightSpec::Dcg, None, None).unwrap();
        assert_eq!(l.user_ids, vec!["bob", "ann"]);
        assert_eq!(l.item_ids, vec!["x", "y"]);
        assert_eq!(l.instance.mu().as_slice(), &[0.5, 0.0, 0.0, 0.25]);
        assert_eq!(l.instance.w(), &[0.5, 0.5]);
    }

    #[test]
    fn rejects_bad_rows_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("user,item,value\na,x,0.5\na,x,0.2\n", 3, "duplicate"),
            ("user,item,value\na,x,0.5\nb,x,1.5\n", 3, "outside"),
            ("user,item,value\na,x,abc\n", 2, "not a number"),
            ("usr,item,value\na,x,0.5\n", 1, "header"),
        ];
        for (body, line, needle) in cases {
            let p = write(dir.path(), "p.csv", body);
            match load_instance::<f64>(&p, 1, &WeightSpec::Dcg, None, None) {
                Err(Error::Parse { line: l, msg, .. }) => {
                    assert_eq!(l, line, "{body}");
                    assert!(msg.contains(needle), "{msg}");
                }
                other => panic!("{body}: {other:?}"),
            }
        }
    }

    #[test]
    fn activity_and_group_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "user,item,value\na,x,0.5\nb,x,0.5\n");
        let unknown = write(dir.path(), "g.csv", "user,group\na,g1\nzed,g2\n");
        let e = load_instance::<f64>(&p, 1, &WeightSpec::Dcg, None, Some(&unknown)).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");

        let zero = write(dir.path(), "w.csv", "user,weight\na,0\nb,0\n");
        let e = load_instance::<f64>(&p, 1, &WeightSpec::Dcg, Some(&zero), None).unwrap_err();
        assert!(e.to_string().contains("cannot be normalized"), "{e}");

        let missing = write(dir.path(), "w2.csv", "user,weight\na,1\n");
        assert!(load_instance::<f64>(&p, 1, &WeightSpec::Dcg, Some(&missing), None).is_err());

        let scaled = write(dir.path(), "w3.csv", "user,weight\na,1\nb,3\n");
        let l = load_instance::<f64>(&p, 1, &WeightSpec::Dcg, Some(&scaled), None).unwrap();
        assert_eq!(l.instance.w(), &[0.25, 0.75]);
    }

    #[test]
    fn entry_cap_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "p.csv", "user,item,value\na,x,0.5\nb,y,0.5\n");
        let e = load_instance_capped::<f64>(&p, 1, &WeightSpec::Dcg, None, None, 3).unwrap_err();
        assert!(matches!(e, Error::TooLarge { entries: 4, cap: 3 }));
    }

    #[test]
    fn dcg_weight_values() {
        let b: Vec<f64> = WeightSpec::Dcg.weights(3).unwrap();
        for (x, y) in b.iter().zip([1.0, 0.630930, 0.5]) {
            assert!((x - y).abs() < 1e-6);
        }
        assert!(WeightSpec::Explicit(vec![1.0, 0.5]).weights(3).is_err());
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "p.csv",
            "user,item,value\nu0,a,0.1\nu1,b,0.7\nu2,a,0.3333333333333333\nu2,c,1\n",
        );
        let w = write(dir.path(), "w.csv", "user,weight\nu0,1\nu1,1\nu2,1\n");
        let g = write(dir.path(), "g.csv", "user,group\nu2,blue\nu0,red\nu1,blue\n");
        let first = load_instance::<f64>(&p, 2, &WeightSpec::Dcg, Some(&w), Some(&g)).unwrap();
        let (p2, w2, g2) = (
            dir.path().join("p2.csv"),
            dir.path().join("w2.csv"),
            dir.path().join("g2.csv"),
        );
        write_instance(&first, &p2, Some(&w2), Some(&g2)).unwrap();
        let second = load_instance::<f64>(&p2, 2, &WeightSpec::Dcg, Some(&w2), Some(&g2)).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn synth_is_deterministic() {
        let a: ProblemInstance<f64> = synth_instance(6, 7, 2, 11, Structure::Block).unwrap();
        let b: ProblemInstance<f64> = synth_instance(6, 7, 2, 11, Structure::Block).unwrap();
        assert_eq!(a, b);
        let c: ProblemInstance<f64> = synth_instance(6, 7, 2, 12, Structure::Block).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn block_structure_separates_means() {
        let inst: ProblemInstance<f64> = synth_instance(4, 4, 2, 3, Structure::Block).unwrap();
        let (mut inside, mut across) = (0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let x = inst.mu().get(i, j);
                if i / 2 == j / 2 {
                    inside += x / 8.0;
                } else {
                    across += x / 8.0;
                }
            }
        }
        assert!(inside > across);
    }

    #[test]
    fn uniform_mean_is_near_half() {
        let inst: ProblemInstance<f64> = synth_instance(50, 80, 5, 0, Structure::Uniform).unwrap();
        let mean = inst.mu().as_slice().iter().sum::<f64>() / 4000.0;
        assert!((0.45..=0.55).contains(&mean), "{mean}");
    }

    #[test]
    fn desk_preset_shape() {
        let inst: ProblemInstance<f64> = desk_preset();
        assert_eq!((inst.n(), inst.m(), inst.k()), (50, 80, 5));
        let g = inst.groups().unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.members(0).len(), 25);
        assert!(g.members(1).iter().all(|i| i % 2 == 1));
    }

    #[test]
    fn exposure_matrix_round_trip() {
        let loaded = LoadedInstance::with_index_ids(desk_preset::<f64>());
        let pi = ExposureMatrix::uniform(&loaded.instance);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pi.csv");
        write_exposure_matrix(&path, &pi, &loaded).unwrap();
        assert_eq!(read_exposure_matrix(&path, &loaded).unwrap(), pi);
        assert_eq!(loaded.group_labels, vec!["g0", "g1"]);

        let bad = write(dir.path(), "bad.csv", "user,item,value\n0,0,0.5\n");
        assert!(matches!(read_exposure_matrix(&bad, &loaded), Err(Error::Argument(_))));
        let unknown = write(dir.path(), "unknown.csv", "user,item,value\n0,x,0.5\n");
        assert!(matches!(
            read_exposure_matrix(&unknown, &loaded),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
