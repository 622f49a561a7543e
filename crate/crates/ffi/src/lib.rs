//! C ABI over the `partree` library.
//!
//! Datasets and trees are opaque handles created by `pt_*_new`/`_load`/
//! `_build` and released with the matching `_free`. Every fallible call
//! returns a [`PtStatus`]; on failure, [`pt_last_error_message`] describes
//! the error on the calling thread. Status values match the CLI exit codes
//! where they overlap (2 validation, 3 I/O, 4 invariant).
//!
//! Panics never cross the boundary: they are caught and reported as
//! `PT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use partree::io::{load_dataset, load_tree, save_tree, DataFormat};
use partree::oracle::brute_force_knn;
use partree::potential::{phi_k, three_point_probability, NeighborOrdering};
use partree::{Dataset, Error, PartitionTree, TreeKind};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtStatus {
    Ok = 0,
    /// A required pointer was null or a buffer was too small.
    NullArgument = 1,
    Validation = 2,
    Io = 3,
    Invariant = 4,
    Panic = 5,
}

/// Tree kinds accepted by [`pt_tree_build`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PtTreeKind {
    Rp = 0,
    Spill = 1,
    VirtualSpill = 2,
}

/// Opaque dataset handle.
pub struct PtDataset(Dataset);

/// Opaque tree handle.
pub struct PtTree(PartitionTree);

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PtTreeStats {
    pub depth: usize,
    pub leaf_count: usize,
    pub stored_indices: usize,
    pub max_leaf_size: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: PtStatus, msg: impl Into<String>) -> PtStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> PtStatus {
    let status = match e.exit_code() {
        3 => PtStatus::Io,
        4 => PtStatus::Invariant,
        _ => PtStatus::Validation,
    };
    fail(status, e.to_string())
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), PtStatus>>(f: F) -> PtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PtStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PtStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn lift<T>(r: partree::Result<T>) -> Result<T, PtStatus> {
    r.map_err(from_error)
}

unsafe fn nonnull<'a, T>(p: *const T, what: &str) -> Result<&'a T, PtStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PtStatus::NullArgument, format!("{what} is null")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], PtStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PtStatus::NullArgument, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, PtStatus> {
    if p.is_null() {
        return Err(fail(PtStatus::NullArgument, "path is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(PtStatus::Validation, "path is not valid UTF-8"))
}

unsafe fn out_ptr<T>(p: *mut T) -> Result<&'static mut T, PtStatus> {
    p.as_mut()
        .ok_or_else(|| fail(PtStatus::NullArgument, "output pointer is null"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null if it
/// succeeded. Valid until the next `pt_*` call on the same thread.
#[no_mangle]
pub extern "C" fn pt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies an `n × d` row-major matrix into a new dataset.
///
/// # Safety
/// `values` must point to `n * d` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_dataset_new(
    values: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut PtDataset,
) -> PtStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let len = n
            .checked_mul(d)
            .ok_or_else(|| fail(PtStatus::Validation, "n * d overflows"))?;
        let v = slice(values, len, "values")?;
        let ds = lift(Dataset::new(v.to_vec(), d))?;
        *out = Box::into_raw(Box::new(PtDataset(ds)));
        Ok(())
    })
}

/// Loads a dataset file (`.csv` as CSV, anything else as binary).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_dataset_load(path: *const c_char, out: *mut *mut PtDataset) -> PtStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let path = path_arg(path)?;
        let ds = lift(load_dataset(&path, DataFormat::from_path(&path)))?;
        *out = Box::into_raw(Box::new(PtDataset(ds)));
        Ok(())
    })
}

/// Number of points, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pt_dataset_len(data: *const PtDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.len())
}

/// Dimension, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pt_dataset_dim(data: *const PtDataset) -> usize {
    data.as_ref().map_or(0, |d| d.0.dim())
}

/// # Safety
/// `data` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pt_dataset_free(data: *mut PtDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Builds a tree; `kind` is a [`PtTreeKind`] value and `alpha` is ignored
/// for RP trees.
///
/// # Safety
/// `data` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_tree_build(
    data: *const PtDataset,
    kind: u32,
    n_o: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut PtTree,
) -> PtStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let data = nonnull(data, "dataset")?;
        let kind = match kind {
            0 => TreeKind::Rp,
            1 => TreeKind::Spill,
            2 => TreeKind::VirtualSpill,
            k => return Err(fail(PtStatus::Validation, format!("unknown tree kind {k}"))),
        };
        let tree = lift(PartitionTree::build(kind, &data.0, n_o, alpha, seed))?;
        *out = Box::into_raw(Box::new(PtTree(tree)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_tree_load(path: *const c_char, out: *mut *mut PtTree) -> PtStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let path = path_arg(path)?;
        let tree = lift(load_tree(&path))?;
        *out = Box::into_raw(Box::new(PtTree(tree)));
        Ok(())
    })
}

/// # Safety
/// `tree` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pt_tree_save(tree: *const PtTree, path: *const c_char) -> PtStatus {
    guard(|| {
        let tree = nonnull(tree, "tree")?;
        let path = path_arg(path)?;
        lift(save_tree(&tree.0, &path))
    })
}

/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_tree_stats(tree: *const PtTree, out: *mut PtTreeStats) -> PtStatus {
    guard(|| {
        let tree = nonnull(tree, "tree")?;
        let out = out_ptr(out)?;
        let s = tree.0.stats();
        *out = PtTreeStats {
            depth: s.depth,
            leaf_count: s.leaf_count,
            stored_indices: s.stored_indices,
            max_leaf_size: s.max_leaf_size,
        };
        Ok(())
    })
}

/// # Safety
/// `tree` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pt_tree_free(tree: *mut PtTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

unsafe fn write_neighbors(
    res: &partree::QueryResult,
    out_indices: *mut usize,
    out_distances: *mut f64,
    out_count: *mut usize,
) -> Result<(), PtStatus> {
    let count = out_ptr(out_count)?;
    if out_indices.is_null() || out_distances.is_null() {
        return Err(fail(PtStatus::NullArgument, "output buffers are null"));
    }
    for (j, (&i, &d)) in res.indices.iter().zip(&res.distances).enumerate() {
        *out_indices.add(j) = i;
        *out_distances.add(j) = d;
    }
    *count = res.indices.len();
    Ok(())
}

/// Defeatist `k`-NN query. Writes up to `k` neighbors (nearest first) and
/// their count; fewer than `k` means the reached leaves held fewer points.
///
/// # Safety
/// `tree` and `data` must be live handles, `data` the dataset the tree was
/// built on; `q` must hold `dim` doubles; `out_indices` and `out_distances`
/// must hold `k` elements each.
#[no_mangle]
pub unsafe extern "C" fn pt_tree_query(
    tree: *const PtTree,
    data: *const PtDataset,
    q: *const f64,
    dim: usize,
    k: usize,
    out_indices: *mut usize,
    out_distances: *mut f64,
    out_count: *mut usize,
) -> PtStatus {
    guard(|| {
        let tree = nonnull(tree, "tree")?;
        let data = nonnull(data, "dataset")?;
        let q = slice(q, dim, "query")?;
        let res = lift(tree.0.query(&data.0, q, k))?;
        write_neighbors(&res, out_indices, out_distances, out_count)
    })
}

/// Exact `k`-NN by a full scan. Buffers as for [`pt_tree_query`].
///
/// # Safety
/// As for [`pt_tree_query`], without the tree.
#[no_mangle]
pub unsafe extern "C" fn pt_brute_force_knn(
    data: *const PtDataset,
    q: *const f64,
    dim: usize,
    k: usize,
    out_indices: *mut usize,
    out_distances: *mut f64,
    out_count: *mut usize,
) -> PtStatus {
    guard(|| {
        let data = nonnull(data, "dataset")?;
        let q = slice(q, dim, "query")?;
        let res = lift(brute_force_knn(&data.0, q, k))?;
        write_neighbors(&res, out_indices, out_distances, out_count)
    })
}

/// `Φ_{k,m}` of query `q` against the dataset.
///
/// # Safety
/// `data` must be a live handle, `q` must hold `dim` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_phi(
    data: *const PtDataset,
    q: *const f64,
    dim: usize,
    k: usize,
    m: usize,
    out: *mut f64,
) -> PtStatus {
    guard(|| {
        let data = nonnull(data, "dataset")?;
        let q = slice(q, dim, "query")?;
        let out = out_ptr(out)?;
        let ordering = lift(NeighborOrdering::new(&data.0, q))?;
        *out = lift(phi_k(&ordering, k, m))?;
        Ok(())
    })
}

/// Probability that a random direction projects `y` strictly between `q`
/// and `x`. Requires `|q - x| <= |q - y|`.
///
/// # Safety
/// `q`, `x` and `y` must each hold `dim` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pt_three_point_probability(
    q: *const f64,
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> PtStatus {
    guard(|| {
        let (q, x, y) = (slice(q, dim, "q")?, slice(x, dim, "x")?, slice(y, dim, "y")?);
        let out = out_ptr(out)?;
        *out = lift(three_point_probability(q, x, y))?;
        Ok(())
    })
}
