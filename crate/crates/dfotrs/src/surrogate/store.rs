//! Evaluation history: records of `theta = (x, w)` with the exact
//! element value observed there. Radius queries run against the frozen
//! prefix of the store (the records present when the current solve
//! started); bitwise lookups and candidate enumeration see everything.

use crate::error::DfoError;
use crate::Vector;
use std::cell::OnceCell;
use std::collections::HashMap;
use std::io::Write as _;
use std::path::Path;

/// Records below this count are queried by plain linear scan; the grid
/// index only pays off beyond it.
const LINEAR_SCAN_CUTOFF: usize = 512;

#[derive(Debug, Clone)]
pub struct Record {
    pub theta: Vec<f64>,
    pub value: f64,
    pub element: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Key {
    bits: Vec<u64>,
    element: u32,
}

fn key_of(theta: &[f64], element: u32) -> Key {
    Key {
        bits: theta.iter().map(|v| v.to_bits()).collect(),
        element,
    }
}

/// Store of exact element evaluations keyed by `theta = (x, w)`.
///
/// Shared mode (the least-squares setting) pools all elements: a record
/// is identified by `theta` alone. Per-element mode partitions records
/// by element index, for composites whose elements share one parameter
/// block. Recording an existing key overwrites its value. Only finite
/// values may be recorded.
#[derive(Debug)]
pub struct HistoryStore {
    n_x: usize,
    n_w: usize,
    split_by_element: bool,
    records: Vec<Record>,
    by_key: HashMap<Key, usize>,
    frozen: usize,
    index: OnceCell<GridIndex>,
}

impl HistoryStore {
    /// Shared-mode store (records pooled across elements).
    pub fn new(n_x: usize, n_w: usize) -> Self {
        HistoryStore {
            n_x,
            n_w,
            split_by_element: false,
            records: Vec::new(),
            by_key: HashMap::new(),
            frozen: 0,
            index: OnceCell::new(),
        }
    }

    /// Per-element store: radius queries and overwrites are scoped to
    /// one element index.
    pub fn new_split(n_x: usize, n_w: usize) -> Self {
        HistoryStore {
            split_by_element: true,
            ..HistoryStore::new(n_x, n_w)
        }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_w(&self) -> usize {
        self.n_w
    }

    pub fn theta_dim(&self) -> usize {
        self.n_x + self.n_w
    }

    pub fn is_split(&self) -> bool {
        self.split_by_element
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of records visible to radius queries.
    pub fn frozen_len(&self) -> usize {
        self.frozen
    }

    pub fn record_at(&self, idx: usize) -> &Record {
        &self.records[idx]
    }

    /// Mark everything recorded so far as visible to radius queries.
    /// Called once at solve entry; records added afterwards stay
    /// invisible to the approximation gate until the next freeze.
    pub fn freeze(&mut self) {
        self.frozen = self.records.len();
        self.index = OnceCell::new();
    }

    fn effective_element(&self, element: usize) -> u32 {
        if self.split_by_element {
            element as u32
        } else {
            0
        }
    }

    /// Insert or overwrite the record at `theta`. Values must be
    /// finite; `theta` must have the store's dimension.
    pub fn record(&mut self, theta: Vec<f64>, value: f64, element: usize) {
        assert_eq!(theta.len(), self.theta_dim(), "theta dimension mismatch");
        assert!(value.is_finite(), "history stores finite values only");
        let key = key_of(&theta, self.effective_element(element));
        match self.by_key.get(&key) {
            Some(&idx) => self.records[idx].value = value,
            None => {
                let idx = self.records.len();
                self.records.push(Record {
                    theta,
                    value,
                    element: key.element,
                });
                self.by_key.insert(key, idx);
            }
        }
    }

    /// Exact value previously recorded at bitwise-identical `theta`,
    /// live view (no radius, no approximation).
    pub fn lookup_exact(&self, theta: &[f64], element: usize) -> Option<f64> {
        self.by_key
            .get(&key_of(theta, self.effective_element(element)))
            .map(|&idx| self.records[idx].value)
    }

    /// Indices of frozen records within the closed Euclidean ball of
    /// radius `delta` around `theta`, scoped to `element` in split
    /// mode. Grid-indexed beyond the linear-scan cutoff.
    pub fn query_frozen(&self, theta: &[f64], delta: f64, element: usize) -> Vec<usize> {
        let elem = self.effective_element(element);
        let accept = |r: &Record| {
            (!self.split_by_element || r.element == elem) && dist_le(&r.theta, theta, delta)
        };
        if self.frozen < LINEAR_SCAN_CUTOFF {
            (0..self.frozen)
                .filter(|&i| accept(&self.records[i]))
                .collect()
        } else {
            let index = self
                .index
                .get_or_init(|| GridIndex::build(&self.records[..self.frozen]));
            let mut out = index.query(&self.records, theta, delta, |r| accept(r));
            out.sort_unstable();
            out
        }
    }

    /// Whether any frozen record lies within `delta` of `theta`
    /// (element-scoped in split mode). Early-exits.
    pub fn has_frozen_neighbor(&self, theta: &[f64], delta: f64, element: usize) -> bool {
        let elem = self.effective_element(element);
        let accept = |r: &Record| {
            (!self.split_by_element || r.element == elem) && dist_le(&r.theta, theta, delta)
        };
        if self.frozen < LINEAR_SCAN_CUTOFF {
            self.records[..self.frozen].iter().any(accept)
        } else {
            let index = self
                .index
                .get_or_init(|| GridIndex::build(&self.records[..self.frozen]));
            index.any(&self.records, theta, delta, |r| accept(r))
        }
    }

    /// Distinct x-parts over the live store, in first-recorded order.
    pub fn distinct_points(&self) -> Vec<Vector> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for r in &self.records {
            let x = &r.theta[..self.n_x];
            let bits: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            if seen.insert(bits) {
                out.push(Vector::from_column_slice(x));
            }
        }
        out
    }

    /// Write the store as text: a header naming the dimensions, then
    /// one record per line with 17 significant digits (bit-exact round
    /// trip). Split stores gain a `split=element` marker and a leading
    /// element-index column.
    pub fn save(&self, path: &Path) -> Result<(), DfoError> {
        let mut out = String::new();
        out.push_str(&format!("DFOHIST v1 n_x={} n_w={}", self.n_x, self.n_w));
        if self.split_by_element {
            out.push_str(" split=element");
        }
        out.push('\n');
        for r in &self.records {
            let mut fields = Vec::with_capacity(self.theta_dim() + 2);
            if self.split_by_element {
                fields.push(r.element.to_string());
            }
            fields.extend(r.theta.iter().map(|v| format!("{v:.16e}")));
            fields.push(format!("{:.16e}", r.value));
            out.push_str(&fields.join(" "));
            out.push('\n');
        }
        let mut f = std::fs::File::create(path).map_err(|e| DfoError::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| DfoError::io(path, e))
    }

    /// Parse a file produced by [`HistoryStore::save`]. Errors name the
    /// offending line.
    pub fn load(path: &Path) -> Result<Self, DfoError> {
        let text = std::fs::read_to_string(path).map_err(|e| DfoError::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| DfoError::parse(path, 1, "empty file"))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("DFOHIST") || parts.next() != Some("v1") {
            return Err(DfoError::parse(path, 1, "expected `DFOHIST v1` header"));
        }
        let mut n_x = None;
        let mut n_w = None;
        let mut split = false;
        for field in parts {
            match field.split_once('=') {
                Some(("n_x", v)) => {
                    n_x = Some(v.parse::<usize>().map_err(|_| {
                        DfoError::parse(path, 1, "invalid n_x in header")
                    })?)
                }
                Some(("n_w", v)) => {
                    n_w = Some(v.parse::<usize>().map_err(|_| {
                        DfoError::parse(path, 1, "invalid n_w in header")
                    })?)
                }
                Some(("split", "element")) => split = true,
                _ => return Err(DfoError::parse(path, 1, format!("unknown header field `{field}`"))),
            }
        }
        let n_x = n_x.ok_or_else(|| DfoError::parse(path, 1, "header missing n_x"))?;
        let n_w = n_w.ok_or_else(|| DfoError::parse(path, 1, "header missing n_w"))?;
        let mut store = if split {
            HistoryStore::new_split(n_x, n_w)
        } else {
            HistoryStore::new(n_x, n_w)
        };
        let want = n_x + n_w + 1 + usize::from(split);
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != want {
                return Err(DfoError::parse(
                    path,
                    lineno,
                    format!("expected {want} fields, found {}", fields.len()),
                ));
            }
            let mut pos = 0;
            let element = if split {
                pos = 1;
                fields[0].parse::<u32>().map_err(|_| {
                    DfoError::parse(path, lineno, "invalid element index")
                })?
            } else {
                0
            };
            let mut nums = Vec::with_capacity(n_x + n_w + 1);
            for f in &fields[pos..] {
                nums.push(f.parse::<f64>().map_err(|_| {
                    DfoError::parse(path, lineno, format!("invalid number `{f}`"))
                })?);
            }
            let value = nums.pop().unwrap();
            if !value.is_finite() {
                return Err(DfoError::parse(path, lineno, "non-finite value"));
            }
            store.record(nums, value, element as usize);
        }
        Ok(store)
    }
}

/// `||a - b||_2 <= delta`, early-exiting on the squared partial sum.
fn dist_le(a: &[f64], b: &[f64], delta: f64) -> bool {
    let cap = delta * delta;
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
        if acc > cap {
            return false;
        }
    }
    acc.sqrt() <= delta
}

/// Fixed-cell bucketing of the frozen records. The cell size comes from
/// the data extent alone (never from a query radius). Queries either
/// enumerate the cell range covering the ball or, when that range is
/// wider than the number of occupied cells, walk the occupied cells and
/// prune by box distance. Pruning is slackened by a relative epsilon so
/// roundoff can never drop a record the exact predicate accepts.
#[derive(Debug)]
struct GridIndex {
    cell: f64,
    origin: Vec<f64>,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl GridIndex {
    fn build(records: &[Record]) -> Self {
        let dim = records.first().map_or(0, |r| r.theta.len());
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for r in records {
            for d in 0..dim {
                lo[d] = lo[d].min(r.theta[d]);
                hi[d] = hi[d].max(r.theta[d]);
            }
        }
        let extent = (0..dim).fold(0.0_f64, |m, d| m.max(hi[d] - lo[d]));
        let cell = if extent > 0.0 { extent / 16.0 } else { 1.0 };
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            let key: Vec<i64> = (0..dim)
                .map(|d| ((r.theta[d] - lo[d]) / cell).floor() as i64)
                .collect();
            buckets.entry(key).or_default().push(i);
        }
        GridIndex {
            cell,
            origin: lo,
            buckets,
        }
    }

    fn query(
        &self,
        records: &[Record],
        theta: &[f64],
        delta: f64,
        accept: impl Fn(&Record) -> bool,
    ) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(records, theta, delta, &mut |i, r| {
            if accept(r) {
                out.push(i);
            }
            false
        });
        out
    }

    fn any(
        &self,
        records: &[Record],
        theta: &[f64],
        delta: f64,
        accept: impl Fn(&Record) -> bool,
    ) -> bool {
        self.visit(records, theta, delta, &mut |_, r| accept(r))
    }

    /// Calls `f` for every record in a cell that can intersect the
    /// ball; stops early (returning true) when `f` does.
    fn visit(
        &self,
        records: &[Record],
        theta: &[f64],
        delta: f64,
        f: &mut dyn FnMut(usize, &Record) -> bool,
    ) -> bool {
        let dim = theta.len();
        let slack = delta * (1.0 + 1e-12) + 1e-300;
        let lo_key: Vec<i64> = (0..dim)
            .map(|d| ((theta[d] - slack - self.origin[d]) / self.cell).floor() as i64)
            .collect();
        let hi_key: Vec<i64> = (0..dim)
            .map(|d| ((theta[d] + slack - self.origin[d]) / self.cell).floor() as i64)
            .collect();
        let mut range_cells = 1.0_f64;
        for d in 0..dim {
            range_cells *= (hi_key[d] - lo_key[d] + 1) as f64;
        }
        if range_cells <= self.buckets.len() as f64 {
            // odometer over the cell range
            let mut key = lo_key.clone();
            loop {
                if let Some(idxs) = self.buckets.get(&key) {
                    for &i in idxs {
                        if f(i, &records[i]) {
                            return true;
                        }
                    }
                }
                let mut d = 0;
                loop {
                    if d == dim {
                        return false;
                    }
                    key[d] += 1;
                    if key[d] <= hi_key[d] {
                        break;
                    }
                    key[d] = lo_key[d];
                    d += 1;
                }
            }
        } else {
            // sparse data: walk occupied cells, prune by box distance
            for (key, idxs) in &self.buckets {
                let mut acc = 0.0;
                for d in 0..dim {
                    let cell_lo = self.origin[d] + key[d] as f64 * self.cell;
                    let cell_hi = cell_lo + self.cell;
                    let gap = if theta[d] < cell_lo {
                        cell_lo - theta[d]
                    } else if theta[d] > cell_hi {
                        theta[d] - cell_hi
                    } else {
                        0.0
                    };
                    acc += gap * gap;
                }
                if acc.sqrt() > slack {
                    continue;
                }
                for &i in idxs {
                    if f(i, &records[i]) {
                        return true;
                    }
                }
            }
            false
        }
    }
}
