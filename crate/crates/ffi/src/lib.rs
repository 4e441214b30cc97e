//! C ABI for the lexbeam decoder.
//!
//! Every fallible function returns a [`LexbeamStatus`]; on failure the message
//! is available from [`lexbeam_last_error`] on the same thread. Handles are
//! opaque and must be released with their matching `*_free` function.
//!
//! A scorer handle may be shared between threads except when it wraps a host
//! callback, which is only ever invoked on the thread calling decode.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lexbeam::{
    decode, Algorithm, CallbackScorer, ConstraintSet, DecodeConfig, DecodeResult, Error, NGramLm, Scorer,
    SyntheticScorer, TableScorer, TokenId, UniformScorer, Vocabulary,
};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexbeamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Vocab = 4,
    Model = 5,
    InvalidConstraint = 6,
    Config = 7,
    Scorer = 8,
    ScoreShape = 9,
    Callback = 10,
    Internal = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexbeamAlgorithm {
    Beam = 0,
    Dba = 1,
    Gbs = 2,
}

/// Decoder settings. Start from [`lexbeam_config_default`].
///
/// `beam_size` is ignored by GBS, which uses `gbs_base_beam` slots per bank.
/// A `prune_threshold` of 0 disables pruning.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LexbeamConfig {
    pub algorithm: LexbeamAlgorithm,
    pub beam_size: usize,
    pub max_length: usize,
    pub prune_threshold: f64,
    pub early_stopping: bool,
    pub gbs_base_beam: usize,
}

pub struct LexbeamVocab(Vocabulary);

pub struct LexbeamScorer(Box<dyn Scorer>);

pub struct LexbeamResult {
    result: DecodeResult,
    text: CString,
    unknown: Vec<CString>,
}

/// Host scoring function.
///
/// Called once per step with `n_histories` token sequences (BOS first).
/// It must write `n_histories` rows of log-probabilities into `out_scores`,
/// row-major, and set `*out_cols` to the row width it used; the buffer holds
/// `n_histories * vocab_size` values and `*out_cols` starts at `vocab_size`.
/// `source` may be null. Return 0 on success; any other value aborts the
/// decode with `LEXBEAM_STATUS_CALLBACK`.
pub type LexbeamScoreFn = Option<
    unsafe extern "C" fn(
        user_data: *mut c_void,
        histories: *const *const u32,
        lengths: *const usize,
        n_histories: usize,
        source: *const c_char,
        out_scores: *mut f64,
        out_cols: *mut usize,
    ) -> i32,
>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(LexbeamStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Vocab(_) | Error::TokenOutOfRange { .. } => LexbeamStatus::Vocab,
            Error::InvalidConstraint(_) => LexbeamStatus::InvalidConstraint,
            Error::Scorer(m) if m.starts_with("score callback failed") => LexbeamStatus::Callback,
            Error::Scorer(_) => LexbeamStatus::Scorer,
            Error::ScoreShape { .. } => LexbeamStatus::ScoreShape,
            Error::Config(_) | Error::SearchTooLarge { .. } => LexbeamStatus::Config,
            Error::Model(_) | Error::Json(_) | Error::Csv(_) => LexbeamStatus::Model,
            Error::Io(_) => LexbeamStatus::Io,
            Error::UndefinedCorrelation(_) | Error::Internal(_) => LexbeamStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(LexbeamStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> LexbeamStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LexbeamStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            LexbeamStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(LexbeamStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next lexbeam call on the same thread.
#[no_mangle]
pub extern "C" fn lexbeam_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn lexbeam_status_name(status: LexbeamStatus) -> *const c_char {
    let s: &'static CStr = match status {
        LexbeamStatus::Ok => c"ok",
        LexbeamStatus::NullPointer => c"null pointer",
        LexbeamStatus::InvalidUtf8 => c"invalid utf-8",
        LexbeamStatus::Io => c"i/o error",
        LexbeamStatus::Vocab => c"vocabulary error",
        LexbeamStatus::Model => c"model error",
        LexbeamStatus::InvalidConstraint => c"invalid constraint",
        LexbeamStatus::Config => c"invalid configuration",
        LexbeamStatus::Scorer => c"scorer error",
        LexbeamStatus::ScoreShape => c"score shape mismatch",
        LexbeamStatus::Callback => c"callback failed",
        LexbeamStatus::Internal => c"internal error",
        LexbeamStatus::Panic => c"panic",
    };
    s.as_ptr()
}

// ---- vocabulary ----

/// Loads a vocabulary file, one surface per line.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_vocab_load(path: *const c_char, out: *mut *mut LexbeamVocab) -> LexbeamStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, LexbeamVocab(Vocabulary::load(path)?))
    })
}

/// Builds a vocabulary from `n` words; BOS, EOS and UNK are added first.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_vocab_from_words(
    words: *const *const c_char,
    n: usize,
    out: *mut *mut LexbeamVocab,
) -> LexbeamStatus {
    guard(|| {
        if words.is_null() && n > 0 {
            return Err(null("words"));
        }
        let mut list = Vec::with_capacity(n);
        for i in 0..n {
            list.push(str_arg(*words.add(i), "word")?);
        }
        put(out, LexbeamVocab(Vocabulary::with_words(list)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_vocab_size(vocab: *const LexbeamVocab) -> usize {
    vocab.as_ref().map_or(0, |v| v.0.len())
}

/// Id of `surface`, or the UNK id when absent. Returns `UINT32_MAX` on bad
/// arguments.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_vocab_lookup(vocab: *const LexbeamVocab, surface: *const c_char) -> u32 {
    let (Some(v), false) = (vocab.as_ref(), surface.is_null()) else {
        return u32::MAX;
    };
    match CStr::from_ptr(surface).to_str() {
        Ok(s) => v.0.lookup(s),
        Err(_) => u32::MAX,
    }
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_vocab_free(vocab: *mut LexbeamVocab) {
    if !vocab.is_null() {
        drop(Box::from_raw(vocab));
    }
}

// ---- scorers ----

#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_uniform(
    vocab: *const LexbeamVocab,
    out: *mut *mut LexbeamScorer,
) -> LexbeamStatus {
    guard(|| {
        let v = ref_arg(vocab, "vocab")?;
        put(out, LexbeamScorer(Box::new(UniformScorer::new(&v.0))))
    })
}

/// Seeded pseudo-random scorer, for benchmarking.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_synthetic(
    vocab: *const LexbeamVocab,
    seed: u64,
    out: *mut *mut LexbeamScorer,
) -> LexbeamStatus {
    guard(|| {
        let v = ref_arg(vocab, "vocab")?;
        put(out, LexbeamScorer(Box::new(SyntheticScorer::for_vocab(seed, &v.0)?)))
    })
}

/// Loads a JSON lookup-table scorer.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_table_load(
    vocab: *const LexbeamVocab,
    path: *const c_char,
    out: *mut *mut LexbeamScorer,
) -> LexbeamStatus {
    guard(|| {
        let v = ref_arg(vocab, "vocab")?;
        let path = str_arg(path, "path")?;
        put(out, LexbeamScorer(Box::new(TableScorer::load(path, &v.0)?)))
    })
}

/// Same as [`lexbeam_scorer_table_load`] from an in-memory JSON string.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_table_from_json(
    vocab: *const LexbeamVocab,
    json: *const c_char,
    out: *mut *mut LexbeamScorer,
) -> LexbeamStatus {
    guard(|| {
        let v = ref_arg(vocab, "vocab")?;
        let json = str_arg(json, "json")?;
        put(out, LexbeamScorer(Box::new(TableScorer::from_json_str(json, &v.0)?)))
    })
}

/// Loads an n-gram model. The model carries its own vocabulary, returned
/// through `out_vocab` unless that is null.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_ngram_load(
    path: *const c_char,
    out: *mut *mut LexbeamScorer,
    out_vocab: *mut *mut LexbeamVocab,
) -> LexbeamStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let lm = NGramLm::load(path)?;
        if !out_vocab.is_null() {
            put(out_vocab, LexbeamVocab(lm.vocab().clone()))?;
        }
        put(out, LexbeamScorer(Box::new(lm)))
    })
}

/// Wraps a host scoring function. Returned rows are validated on every step:
/// width, a `-inf` BOS column and normalization to within 1e-4.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_callback(
    vocab: *const LexbeamVocab,
    func: LexbeamScoreFn,
    user_data: *mut c_void,
    out: *mut *mut LexbeamScorer,
) -> LexbeamStatus {
    guard(|| {
        let v = ref_arg(vocab, "vocab")?;
        let func = func.ok_or_else(|| null("callback"))?;
        let size = v.0.len();
        let scorer = CallbackScorer::new(&v.0, move |histories: &[&[TokenId]], source: Option<&str>| {
            let n = histories.len();
            let ptrs: Vec<*const u32> = histories.iter().map(|h| h.as_ptr()).collect();
            let lens: Vec<usize> = histories.iter().map(|h| h.len()).collect();
            let source = source.map(|s| CString::new(s.replace('\0', " ")).unwrap_or_default());
            let mut buf = vec![f64::NAN; n * size];
            let mut cols = size;
            let rc = func(
                user_data,
                ptrs.as_ptr(),
                lens.as_ptr(),
                n,
                source.as_ref().map_or(ptr::null(), |s| s.as_ptr()),
                buf.as_mut_ptr(),
                &mut cols,
            );
            if rc != 0 {
                return Err(format!("callback returned {rc}"));
            }
            if cols != size {
                // Wrong width: hand back rows of the claimed width so the shape
                // check reports it. Only the first row is needed for that.
                let mut row = buf;
                row.resize(cols, f64::NAN);
                return Ok(vec![row; n]);
            }
            Ok(buf.chunks(size).map(<[f64]>::to_vec).collect())
        });
        put(out, LexbeamScorer(Box::new(scorer)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_vocab_size(scorer: *const LexbeamScorer) -> usize {
    scorer.as_ref().map_or(0, |s| s.0.vocab_size())
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_scorer_free(scorer: *mut LexbeamScorer) {
    if !scorer.is_null() {
        drop(Box::from_raw(scorer));
    }
}

// ---- decoding ----

#[no_mangle]
pub extern "C" fn lexbeam_config_default() -> LexbeamConfig {
    let d = DecodeConfig::default();
    LexbeamConfig {
        algorithm: LexbeamAlgorithm::Dba,
        beam_size: d.beam_size,
        max_length: d.max_length,
        prune_threshold: d.prune_threshold,
        early_stopping: d.early_stopping,
        gbs_base_beam: d.gbs_base_beam,
    }
}

impl From<&LexbeamConfig> for DecodeConfig {
    fn from(c: &LexbeamConfig) -> Self {
        DecodeConfig {
            algorithm: match c.algorithm {
                LexbeamAlgorithm::Beam => Algorithm::Beam,
                LexbeamAlgorithm::Dba => Algorithm::Dba,
                LexbeamAlgorithm::Gbs => Algorithm::Gbs,
            },
            beam_size: c.beam_size,
            max_length: c.max_length,
            prune_threshold: c.prune_threshold,
            early_stopping: c.early_stopping,
            gbs_base_beam: c.gbs_base_beam,
        }
    }
}

unsafe fn run(
    scorer: *const LexbeamScorer,
    vocab: *const LexbeamVocab,
    set: &ConstraintSet,
    unknown: Vec<String>,
    source: *const c_char,
    config: *const LexbeamConfig,
    out: *mut *mut LexbeamResult,
) -> Result<(), Failure> {
    let s = ref_arg(scorer, "scorer")?;
    let v = ref_arg(vocab, "vocab")?;
    let source = opt_str_arg(source, "source")?;
    let config = config.as_ref().map_or_else(DecodeConfig::default, DecodeConfig::from);
    let result = decode(&*s.0, &v.0, set, &config, source)?;
    let text = CString::new(result.output_text.clone())
        .map_err(|_| Failure(LexbeamStatus::Internal, "output contains NUL".into()))?;
    let unknown = unknown
        .into_iter()
        .map(|u| CString::new(u).unwrap_or_default())
        .collect();
    put(out, LexbeamResult { result, text, unknown })
}

/// Decodes with `n` whitespace-tokenized constraint strings. Unknown words
/// map to UNK and are listed by [`lexbeam_result_unknown`]. `source` and
/// `config` may be null; a null config means defaults.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_decode(
    scorer: *const LexbeamScorer,
    vocab: *const LexbeamVocab,
    constraints: *const *const c_char,
    n: usize,
    source: *const c_char,
    config: *const LexbeamConfig,
    out: *mut *mut LexbeamResult,
) -> LexbeamStatus {
    guard(|| {
        let v = ref_arg(vocab, "vocab")?;
        if constraints.is_null() && n > 0 {
            return Err(null("constraints"));
        }
        let mut raw = Vec::with_capacity(n);
        for i in 0..n {
            raw.push(str_arg(*constraints.add(i), "constraint")?);
        }
        let parsed = ConstraintSet::parse(&raw, &v.0)?;
        run(scorer, vocab, &parsed.set, parsed.unknown, source, config, out)
    })
}

/// Decodes with constraints given as token-id phrases: phrase `i` is
/// `phrases[i][0..lengths[i]]`.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_decode_ids(
    scorer: *const LexbeamScorer,
    vocab: *const LexbeamVocab,
    phrases: *const *const u32,
    lengths: *const usize,
    n: usize,
    source: *const c_char,
    config: *const LexbeamConfig,
    out: *mut *mut LexbeamResult,
) -> LexbeamStatus {
    guard(|| {
        if n > 0 && (phrases.is_null() || lengths.is_null()) {
            return Err(null("phrases"));
        }
        let mut list = Vec::with_capacity(n);
        for i in 0..n {
            let (p, len) = (*phrases.add(i), *lengths.add(i));
            if p.is_null() && len > 0 {
                return Err(null("phrase"));
            }
            list.push(if len == 0 { Vec::new() } else { std::slice::from_raw_parts(p, len).to_vec() });
        }
        let set = ConstraintSet::new(list)?;
        run(scorer, vocab, &set, Vec::new(), source, config, out)
    })
}

/// Output token ids, BOS first. `*len` receives the count.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_tokens(result: *const LexbeamResult, len: *mut usize) -> *const u32 {
    let Some(r) = result.as_ref() else {
        if !len.is_null() {
            *len = 0;
        }
        return ptr::null();
    };
    if !len.is_null() {
        *len = r.result.output_tokens.len();
    }
    r.result.output_tokens.as_ptr()
}

/// Output text without BOS/EOS. Owned by the result.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_text(result: *const LexbeamResult) -> *const c_char {
    result.as_ref().map_or(ptr::null(), |r| r.text.as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_raw_score(result: *const LexbeamResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.raw_score)
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_normalized_score(result: *const LexbeamResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.result.normalized_score)
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_constraints_met(result: *const LexbeamResult) -> bool {
    result.as_ref().is_some_and(|r| r.result.constraints_met)
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_steps(result: *const LexbeamResult) -> usize {
    result.as_ref().map_or(0, |r| r.result.steps_used)
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_num_unknown(result: *const LexbeamResult) -> usize {
    result.as_ref().map_or(0, |r| r.unknown.len())
}

/// The `i`-th constraint word that was not in the vocabulary, or null.
#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_unknown(result: *const LexbeamResult, i: usize) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.unknown.get(i))
        .map_or(ptr::null(), |s| s.as_ptr())
}

#[no_mangle]
pub unsafe extern "C" fn lexbeam_result_free(result: *mut LexbeamResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
