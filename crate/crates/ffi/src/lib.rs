//! C ABI for the mixtomo tomography lab.
//!
//! Objects are opaque heap handles created by `mt_*` constructors and released
//! with the matching `mt_*_free`. Every fallible call returns an [`MtStatus`];
//! on failure [`mt_last_error`] describes the problem. Handles are not
//! synchronized; use one per thread or lock externally.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use mixtomo::lab::{StateSpec, TargetSpec};
use mixtomo::measure::{Dataset, Scheme};
use mixtomo::model::{evaluate, Measurement, Model, ModelKind};
use mixtomo::qcore::{self, DensityMatrix, Hamiltonian};
use mixtomo::seed::child_rng;
use mixtomo::train::{train_model, TrainConfig};
use mixtomo::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtStatus {
    MtOk = 0,
    MtNullPointer = 1,
    MtInvalidArgument = 2,
    MtNumerical = 3,
    MtIo = 4,
    MtSchemeMismatch = 5,
    MtPanic = 6,
}

/// Measurement scheme of a dataset.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtScheme {
    /// Every Pauli product basis.
    MtProjective = 0,
    /// The tensor-product Pauli-4 POVM.
    MtPovm4 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtModelKind {
    MtNdo = 0,
    MtPovmnqs = 1,
}

/// Reconstruction metrics of a model against an exact target.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MtMetrics {
    pub kl: f64,
    pub energy_error: f64,
    pub infidelity: f64,
    pub infidelity_swapped: f64,
    pub classical_infidelity: f64,
    pub trace_distance: f64,
}

pub struct MtHamiltonian(Hamiltonian);
pub struct MtDensityMatrix(DensityMatrix);
pub struct MtDataset(Dataset);
pub struct MtModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MtStatus {
    match e {
        Error::Numerical(_) => MtStatus::MtNumerical,
        Error::Io { .. } | Error::Csv(_) | Error::Json(_) => MtStatus::MtIo,
        Error::SchemeMismatch { .. } => MtStatus::MtSchemeMismatch,
        _ => MtStatus::MtInvalidArgument,
    }
}

struct Fail(MtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MtStatus::MtNullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MtStatus::MtOk
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MtStatus::MtPanic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output"));
    }
    *out = value;
    Ok(())
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(MtStatus::MtInvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next `mt_*` call on the same thread.
#[no_mangle]
pub extern "C" fn mt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mt_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Open-chain transverse-field Ising Hamiltonian `-sum Z Z - h sum X`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mt_hamiltonian_tfim(n: usize, h: f64, out: *mut *mut MtHamiltonian) -> MtStatus {
    guard(|| put(out, MtHamiltonian(qcore::tfim_hamiltonian(n, h)?)))
}

/// Parses a Hamiltonian with one `coefficient PAULIS` term per line.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mt_hamiltonian_parse(src: *const c_char, out: *mut *mut MtHamiltonian) -> MtStatus {
    guard(|| {
        let h = qcore::load_hamiltonian(text(src, "text")?)?;
        put(out, MtHamiltonian(h))
    })
}

/// # Safety
/// `h` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mt_hamiltonian_n_qubits(h: *const MtHamiltonian) -> usize {
    h.as_ref().map_or(0, |h| h.0.n_qubits())
}

/// # Safety
/// `h` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mt_hamiltonian_free(h: *mut MtHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Gibbs state `exp(-beta H) / Z`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mt_thermal_state(
    h: *const MtHamiltonian,
    beta: f64,
    out: *mut *mut MtDensityMatrix,
) -> MtStatus {
    guard(|| {
        let h = get(h, "hamiltonian")?;
        put(out, MtDensityMatrix(qcore::thermal_state(&h.0, beta)?))
    })
}

/// Ground state mixed with the maximally mixed state at strength `depol`.
///
/// # Safety
/// `h` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mt_ground_state(
    h: *const MtHamiltonian,
    depol: f64,
    out: *mut *mut MtDensityMatrix,
) -> MtStatus {
    guard(|| {
        let h = get(h, "hamiltonian")?;
        let spec = TargetSpec {
            hamiltonian: mixtomo::lab::HamiltonianSpec::File,
            state: StateSpec::Ground { depol },
        };
        put(out, MtDensityMatrix(spec.build(Some(&h.0))?.rho))
    })
}

/// # Safety
/// `rho` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mt_density_dim(rho: *const MtDensityMatrix) -> usize {
    rho.as_ref().map_or(0, |r| r.0.dim())
}

/// Copies the matrix in row-major order into `re` and `im`, each of length
/// `len = dim * dim`.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mt_density_entries(
    rho: *const MtDensityMatrix,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> MtStatus {
    guard(|| {
        let rho = get(rho, "density matrix")?;
        let d = rho.0.dim();
        if len != d * d {
            return Err(Fail(
                MtStatus::MtInvalidArgument,
                format!("buffer length {len}, expected {}", d * d),
            ));
        }
        if re.is_null() || im.is_null() {
            return Err(null("entry buffer"));
        }
        let m = rho.0.matrix();
        for i in 0..d {
            for j in 0..d {
                *re.add(i * d + j) = m[(i, j)].re;
                *im.add(i * d + j) = m[(i, j)].im;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `rho` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mt_density_free(rho: *mut MtDensityMatrix) {
    if !rho.is_null() {
        drop(Box::from_raw(rho));
    }
}

/// `1 - F(rho, sigma)` with `F = (tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_infidelity(
    rho: *const MtDensityMatrix,
    sigma: *const MtDensityMatrix,
    out: *mut f64,
) -> MtStatus {
    guard(|| {
        let v = qcore::infidelity(&get(rho, "rho")?.0, &get(sigma, "sigma")?.0)?;
        write(out, v)
    })
}

/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_trace_distance(
    rho: *const MtDensityMatrix,
    sigma: *const MtDensityMatrix,
    out: *mut f64,
) -> MtStatus {
    guard(|| {
        let v = qcore::trace_distance(&get(rho, "rho")?.0, &get(sigma, "sigma")?.0)?;
        write(out, v)
    })
}

/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_energy(
    rho: *const MtDensityMatrix,
    h: *const MtHamiltonian,
    out: *mut f64,
) -> MtStatus {
    guard(|| write(out, qcore::energy(&get(rho, "rho")?.0, &get(h, "hamiltonian")?.0)?))
}

fn scheme_of(s: MtScheme) -> Scheme {
    match s {
        MtScheme::MtProjective => Scheme::Projective,
        MtScheme::MtPovm4 => Scheme::Povm4,
    }
}

/// Samples `shots` outcomes per basis (projective) or in total (POVM).
///
/// # Safety
/// `rho` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mt_dataset_sample(
    rho: *const MtDensityMatrix,
    scheme: MtScheme,
    shots: usize,
    seed: u64,
    out: *mut *mut MtDataset,
) -> MtStatus {
    guard(|| {
        let rho = &get(rho, "density matrix")?.0;
        let m = Measurement::full(scheme_of(scheme), rho.n_qubits())?;
        put(out, MtDataset(m.sample(rho, shots, seed)?))
    })
}

/// Parses a dataset in the JSON-lines format.
///
/// # Safety
/// `src` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_dataset_parse(src: *const c_char, out: *mut *mut MtDataset) -> MtStatus {
    guard(|| {
        let d = Dataset::read_jsonl(text(src, "text")?.as_bytes())?;
        put(out, MtDataset(d))
    })
}

/// Serializes a dataset as JSON lines; release with [`mt_string_free`].
///
/// # Safety
/// `ds` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_dataset_to_jsonl(ds: *const MtDataset, out: *mut *mut c_char) -> MtStatus {
    guard(|| {
        let s = CString::new(get(ds, "dataset")?.0.to_jsonl_string())
            .map_err(|e| Fail(MtStatus::MtIo, e.to_string()))?;
        write(out, s.into_raw())
    })
}

/// Number of recorded shots.
///
/// # Safety
/// `ds` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mt_dataset_len(ds: *const MtDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `ds` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mt_dataset_free(ds: *mut MtDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains a model on `ds`. `config` is an optional TOML training config
/// (null for defaults); `seed` always overrides its seed.
///
/// # Safety
/// `ds` must be a live handle, `config` null or NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_train(
    kind: MtModelKind,
    ds: *const MtDataset,
    config: *const c_char,
    seed: u64,
    out: *mut *mut MtModel,
) -> MtStatus {
    guard(|| {
        let ds = &get(ds, "dataset")?.0;
        let mut cfg: TrainConfig = if config.is_null() {
            TrainConfig::default()
        } else {
            toml::from_str(text(config, "config")?)
                .map_err(|e| Fail(MtStatus::MtInvalidArgument, e.to_string()))?
        };
        cfg.seed = seed;
        cfg.batch_size = cfg.batch_size.min(ds.len());
        let kind = match kind {
            MtModelKind::MtNdo => ModelKind::Ndo,
            MtModelKind::MtPovmnqs => ModelKind::Povmnqs,
        };
        let init = Model::init(kind, ds.n_qubits(), &mut child_rng(seed, &[1]))?;
        let (model, _) = train_model(&init, ds, &cfg)?;
        put(out, MtModel(model))
    })
}

/// Parses a model saved as JSON.
///
/// # Safety
/// `src` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_parse(src: *const c_char, out: *mut *mut MtModel) -> MtStatus {
    guard(|| put(out, MtModel(Model::from_json(text(src, "text")?)?)))
}

/// Serializes a model as JSON; release with [`mt_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_to_json(model: *const MtModel, out: *mut *mut c_char) -> MtStatus {
    guard(|| {
        let s = CString::new(get(model, "model")?.0.to_json())
            .map_err(|e| Fail(MtStatus::MtIo, e.to_string()))?;
        write(out, s.into_raw())
    })
}

/// Density matrix represented by a model.
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_state(model: *const MtModel, out: *mut *mut MtDensityMatrix) -> MtStatus {
    guard(|| put(out, MtDensityMatrix(get(model, "model")?.0.state()?)))
}

/// Metrics of `model` against the exact target `rho` with Hamiltonian `h`.
///
/// # Safety
/// Handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn mt_model_evaluate(
    model: *const MtModel,
    rho: *const MtDensityMatrix,
    h: *const MtHamiltonian,
    out: *mut MtMetrics,
) -> MtStatus {
    guard(|| {
        let model = &get(model, "model")?.0;
        let rho = &get(rho, "density matrix")?.0;
        let h = &get(h, "hamiltonian")?.0;
        let measurement = Measurement::full(model.kind().scheme(), model.n_qubits())?;
        let m = evaluate(model, &measurement, rho, h)?;
        write(
            out,
            MtMetrics {
                kl: m.kl,
                energy_error: m.energy_error,
                infidelity: m.infidelity,
                infidelity_swapped: m.infidelity_swapped,
                classical_infidelity: m.classical_infidelity,
                trace_distance: m.trace_distance,
            },
        )
    })
}

/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mt_model_free(model: *mut MtModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses_follow_error_kinds() {
        assert_eq!(status_of(&Error::Numerical("x".into())), MtStatus::MtNumerical);
        assert_eq!(status_of(&Error::Config("x".into())), MtStatus::MtInvalidArgument);
        assert_eq!(
            status_of(&Error::SchemeMismatch {
                model: "ndo".into(),
                dataset: "povm4".into()
            }),
            MtStatus::MtSchemeMismatch
        );
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), MtStatus::MtPanic);
        let msg = unsafe { CStr::from_ptr(mt_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
        assert_eq!(guard(|| Ok(())), MtStatus::MtOk);
        assert!(unsafe { CStr::from_ptr(mt_last_error()) }.to_bytes().is_empty());
    }
}
