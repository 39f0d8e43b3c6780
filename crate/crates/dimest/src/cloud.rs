//! Immutable point clouds and the geometric queries the estimators build on.
//!
//! All queries are exact: the slab acceleration only narrows the candidate
//! set, membership is always decided by comparing squared distances, so
//! accelerated and brute-force scans agree bit for bit.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::parallel;

/// Axis-aligned box, the sampling domain for Monte Carlo volume estimates.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BoundingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundingBox {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lower.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }
}

#[inline]
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        acc += t * t;
    }
    acc
}

/// An immutable sample of `n >= 1` points in `R^d`.
///
/// Points are kept in row-major order exactly as given. Construction sorts a
/// side index along the coordinate axis with the largest spread; fixed-radius
/// queries binary-search that axis and scan only the matching slab. The cloud
/// never changes after construction, so queries may run from many threads.
#[derive(Debug, Clone)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    slab_axis: usize,
    /// Point indices sorted by the slab axis coordinate, ties by index.
    slab_order: Vec<u32>,
    /// Slab axis coordinates in `slab_order` order.
    slab_coord: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diameter: OnceLock<f64>,
}

impl PartialEq for PointCloud {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords == other.coords
    }
}

impl PointCloud {
    /// Builds a cloud from one row per point.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("point cloud must contain at least one point"));
        }
        let dim = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
        }
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            coords.extend_from_slice(row);
        }
        Self::from_flat(coords, dim)
    }

    /// Builds a cloud from row-major coordinates.
    pub fn from_flat(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("ambient dimension must be at least 1"));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "coordinate buffer of length {} is not a positive multiple of dim {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        let n = coords.len() / dim;
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for (k, v) in p.iter().enumerate() {
                lower[k] = lower[k].min(*v);
                upper[k] = upper[k].max(*v);
            }
        }
        let slab_axis = (0..dim)
            .max_by(|&a, &b| (upper[a] - lower[a]).total_cmp(&(upper[b] - lower[b])))
            .unwrap();
        let mut slab_order: Vec<u32> = (0..n as u32).collect();
        slab_order.sort_by(|&a, &b| {
            coords[a as usize * dim + slab_axis].total_cmp(&coords[b as usize * dim + slab_axis])
        });
        let slab_coord = slab_order
            .iter()
            .map(|&i| coords[i as usize * dim + slab_axis])
            .collect();
        Ok(PointCloud {
            coords,
            dim,
            slab_axis,
            slab_order,
            slab_coord,
            lower,
            upper,
            diameter: OnceLock::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Largest pairwise distance. Computed once, by exhaustive scan.
    pub fn diameter(&self) -> f64 {
        *self.diameter.get_or_init(|| {
            let n = self.len();
            let mut best = 0.0f64;
            for i in 0..n {
                let a = self.point(i);
                for j in (i + 1)..n {
                    best = best.max(dist2(a, self.point(j)));
                }
            }
            best.sqrt()
        })
    }

    /// Axis-aligned bounds inflated by `margin` on every side.
    pub fn bounding_box(&self, margin: f64) -> Result<BoundingBox> {
        if !margin.is_finite() || margin < 0.0 {
            return Err(Error::invalid(format!(
                "bounding box margin must be a nonnegative real, got {margin}"
            )));
        }
        Ok(BoundingBox {
            lower: self.lower.iter().map(|v| v - margin).collect(),
            upper: self.upper.iter().map(|v| v + margin).collect(),
        })
    }

    fn check_radius(r: f64) -> Result<()> {
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::invalid(format!("radius must be positive, got {r}")));
        }
        Ok(())
    }

    fn check_probe(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "query point has {} coordinates, cloud is {}-dimensional",
                x.len(),
                self.dim
            )));
        }
        if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite query coordinate {bad}")));
        }
        Ok(())
    }

    /// Index window of slab positions whose axis coordinate lies in
    /// `[center - r, center + r]`.
    #[inline]
    fn slab_window(&self, center: f64, r: f64) -> (usize, usize) {
        let lo = self.slab_coord.partition_point(|v| *v < center - r);
        let hi = self.slab_coord.partition_point(|v| *v <= center + r);
        (lo, hi)
    }

    /// Number of sample points inside the ball `B(x, r)`, closed when
    /// `strict` is false and open when it is true.
    pub fn count_within(&self, x: &[f64], r: f64, strict: bool) -> Result<usize> {
        self.check_probe(x)?;
        Self::check_radius(r)?;
        let r2 = r * r;
        let (lo, hi) = self.slab_window(x[self.slab_axis], r);
        let mut count = 0usize;
        for &i in &self.slab_order[lo..hi] {
            let d2 = dist2(x, self.point(i as usize));
            if (strict && d2 < r2) || (!strict && d2 <= r2) {
                count += 1;
            }
        }
        Ok(count)
    }

    /// Closed-ball counts for several radii in one scan.
    ///
    /// Output is aligned with `radii`; each entry equals what
    /// `count_within(x, radii[k], false)` returns.
    pub fn count_within_multi(&self, x: &[f64], radii: &[f64]) -> Result<Vec<usize>> {
        self.check_probe(x)?;
        if radii.is_empty() {
            return Ok(Vec::new());
        }
        for &r in radii {
            Self::check_radius(r)?;
        }
        let mut asc: Vec<usize> = (0..radii.len()).collect();
        asc.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
        let r2_asc: Vec<f64> = asc.iter().map(|&k| radii[k] * radii[k]).collect();
        let r_max = radii[*asc.last().unwrap()];
        let (lo, hi) = self.slab_window(x[self.slab_axis], r_max);
        // diff[k] = points whose smallest enclosing radius is r2_asc[k]
        let mut diff = vec![0usize; radii.len() + 1];
        for &i in &self.slab_order[lo..hi] {
            let d2 = dist2(x, self.point(i as usize));
            let first = r2_asc.partition_point(|&t| t < d2);
            diff[first] += 1;
        }
        let mut counts = vec![0usize; radii.len()];
        let mut acc = 0usize;
        for (k, &orig) in asc.iter().enumerate() {
            acc += diff[k];
            counts[orig] = acc;
        }
        Ok(counts)
    }

    /// Smallest squared distance from `x` to any point whose slab coordinate
    /// lies within `r_max` of `x`; infinity when that slab is empty.
    ///
    /// Stops scanning once the running minimum is at most `early_exit_d2`,
    /// which is sound for callers that only compare the result against
    /// thresholds at or above that value.
    pub(crate) fn min_dist2_pruned(&self, x: &[f64], r_max: f64, early_exit_d2: f64) -> f64 {
        let (lo, hi) = self.slab_window(x[self.slab_axis], r_max);
        let mut best = f64::INFINITY;
        for &i in &self.slab_order[lo..hi] {
            let d2 = dist2(x, self.point(i as usize));
            if d2 < best {
                best = d2;
                if best <= early_exit_d2 {
                    break;
                }
            }
        }
        best
    }

    /// Number of unordered pairs at distance strictly below `r`.
    pub fn count_pairs_within(&self, r: f64) -> Result<u64> {
        Self::check_radius(r)?;
        let n = self.len();
        if n < 2 {
            return Err(Error::invalid("pair counts need at least two points"));
        }
        let r2 = r * r;
        let total = parallel::sum_indices(n, |p| {
            let a = self.point(self.slab_order[p] as usize);
            let ca = self.slab_coord[p];
            let mut count = 0u64;
            for q in (p + 1)..n {
                if self.slab_coord[q] - ca >= r {
                    break;
                }
                if dist2(a, self.point(self.slab_order[q] as usize)) < r2 {
                    count += 1;
                }
            }
            count
        });
        Ok(total)
    }

    /// Strict pair counts for several radii in one scan, aligned with `radii`.
    pub fn count_pairs_within_multi(&self, radii: &[f64]) -> Result<Vec<u64>> {
        if radii.is_empty() {
            return Ok(Vec::new());
        }
        for &r in radii {
            Self::check_radius(r)?;
        }
        let n = self.len();
        if n < 2 {
            return Err(Error::invalid("pair counts need at least two points"));
        }
        let mut asc: Vec<usize> = (0..radii.len()).collect();
        asc.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
        let r2_asc: Vec<f64> = asc.iter().map(|&k| radii[k] * radii[k]).collect();
        let r_max = radii[*asc.last().unwrap()];
        let m = radii.len();
        // diff[k] = pairs whose distance first drops below radii rank k
        let diff = parallel::fold_counts(n, m, |acc, p| {
            let a = self.point(self.slab_order[p] as usize);
            let ca = self.slab_coord[p];
            for q in (p + 1)..n {
                if self.slab_coord[q] - ca >= r_max {
                    break;
                }
                let d2 = dist2(a, self.point(self.slab_order[q] as usize));
                let first = r2_asc.partition_point(|&t| t <= d2);
                if first < m {
                    acc[first] += 1;
                }
            }
        });
        let mut counts = vec![0u64; m];
        let mut acc = 0u64;
        for (k, &orig) in asc.iter().enumerate() {
            acc += diff[k];
            counts[orig] = acc;
        }
        Ok(counts)
    }

    /// Greedy maximal `r`-separated subset, scanning points in index order.
    ///
    /// A point is accepted when it lies at distance `>= r` from every
    /// previously accepted point, so the result is deterministic and every
    /// sample point ends up within distance `< r` of some accepted point.
    pub fn greedy_separated(&self, r: f64) -> Result<Vec<usize>> {
        Self::check_radius(r)?;
        let r2 = r * r;
        let mut accepted: Vec<usize> = Vec::new();
        'points: for i in 0..self.len() {
            let x = self.point(i);
            for &j in &accepted {
                if dist2(x, self.point(j)) < r2 {
                    continue 'points;
                }
            }
            accepted.push(i);
        }
        Ok(accepted)
    }

    /// Number of occupied cells of the grid with spacing `r` anchored at the
    /// coordinatewise data minimum.
    pub fn box_count(&self, r: f64) -> Result<usize> {
        Self::check_radius(r)?;
        let mut cells: HashSet<Vec<i64>> = HashSet::new();
        for p in self.points() {
            let cell: Vec<i64> = p
                .iter()
                .zip(&self.lower)
                .map(|(v, lo)| ((v - lo) / r).floor() as i64)
                .collect();
            cells.insert(cell);
        }
        Ok(cells.len())
    }

    /// Reads a cloud from CSV: one row per point, `d` numeric columns, `.`
    /// as the decimal separator, optional single header row.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut skipped_header = false;
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::parse(e.to_string()))?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|f| f.parse::<f64>()).collect();
            match parsed {
                Ok(row) => rows.push(row),
                Err(_) if line == 0 && !skipped_header => {
                    skipped_header = true;
                }
                Err(_) => {
                    return Err(Error::parse(format!(
                        "row {} contains a non-numeric field",
                        line + 1
                    )));
                }
            }
        }
        if rows.is_empty() {
            return Err(Error::parse("no data rows"));
        }
        let dim = rows[0].len();
        if rows.iter().any(|row| row.len() != dim) {
            return Err(Error::parse("rows have inconsistent column counts"));
        }
        Self::new(rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    /// Writes the cloud as headerless CSV with shortest round-trip floats.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for p in self.points() {
            let fields: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            wtr.write_record(&fields)
                .map_err(|e| Error::parse(e.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
