//! Benchmark kernel suite: specs, interface signatures, and the
//! ideal-latency oracle.
//!
//! The suite manifest is a TOML file (schema_version 1) listing every
//! kernel with relative paths to its golden and test sources plus the
//! parameters the oracle needs. The ideal latency of a kernel is the data
//! volume divided by the vector lanes of the configured data path, plus
//! pipeline-fill overhead expressed as explicit per-kernel fill slabs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Role a kernel parameter plays at the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    Input,
    Output,
    Scalar,
}

/// Name and parameter list the generated kernel must expose.
///
/// Translation may retype parameters but must keep their count and the
/// kernel name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceSignature {
    pub kernel_name: String,
    pub params: Vec<(String, ParamRole)>,
}

impl InterfaceSignature {
    pub fn new(kernel_name: &str, params: &[(&str, ParamRole)]) -> Self {
        Self {
            kernel_name: kernel_name.to_string(),
            params: params
                .iter()
                .map(|(n, r)| (n.to_string(), *r))
                .collect(),
        }
    }

    /// Human-readable form used in prompts: `genKernel(A: input, C: output)`.
    pub fn render(&self) -> String {
        let params = self
            .params
            .iter()
            .map(|(name, role)| {
                let role = match role {
                    ParamRole::Input => "input",
                    ParamRole::Output => "output",
                    ParamRole::Scalar => "scalar",
                };
                format!("{name}: {role}")
            })
            .collect::<Vec<_>>()
            .join(", ");
        format!("{}({params})", self.kernel_name)
    }
}

/// One benchmark kernel: reference sources, interface, and oracle inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub name: String,
    pub description: String,
    /// Reference sequential implementation handed to the translator.
    pub golden_source: String,
    /// Differential test harness comparing golden vs. candidate.
    pub test_source: String,
    pub signature: InterfaceSignature,
    /// Elements per axis.
    pub dims: Vec<u64>,
    /// Bit width of one element.
    pub element_bits: u32,
    /// Independent problem instances (1 if unbatched).
    pub batch: u64,
    /// Stencil time steps (1 if none).
    pub iterations: u64,
    /// Elements of pipeline-fill overhead per counted fill.
    pub fill_slab_elements: u64,
    /// Number of fill slabs counted toward the ideal.
    pub fill_count: u64,
}

impl KernelSpec {
    /// batch × ∏dims.
    pub fn total_elements(&self) -> u64 {
        self.dims.iter().product::<u64>() * self.batch
    }

    fn validate(&self) -> Result<(), SuiteError> {
        let fail = |msg: String| {
            Err(SuiteError::Invariant {
                kernel: self.name.clone(),
                message: msg,
            })
        };
        if self.name.is_empty() {
            return fail("kernel name is empty".into());
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 1) {
            return fail(format!("dims must all be >= 1, got {:?}", self.dims));
        }
        if ![8, 16, 32, 64].contains(&self.element_bits) {
            return fail(format!("element_bits must be 8/16/32/64, got {}", self.element_bits));
        }
        if self.batch < 1 {
            return fail("batch must be >= 1".into());
        }
        if self.iterations < 1 {
            return fail("iterations must be >= 1".into());
        }
        if self.signature.kernel_name.is_empty() || self.signature.params.is_empty() {
            return fail("signature needs a kernel name and at least one parameter".into());
        }
        // overflow guard at suite scale
        let mut total: u64 = self.batch;
        for &d in &self.dims {
            total = total
                .checked_mul(d)
                .ok_or_else(|| SuiteError::Invariant {
                    kernel: self.name.clone(),
                    message: "total_elements overflows u64".into(),
                })?;
        }
        total
            .checked_add(
                self.fill_count
                    .checked_mul(self.fill_slab_elements)
                    .ok_or_else(|| SuiteError::Invariant {
                        kernel: self.name.clone(),
                        message: "fill overhead overflows u64".into(),
                    })?,
            )
            .ok_or_else(|| SuiteError::Invariant {
                kernel: self.name.clone(),
                message: "ideal numerator overflows u64".into(),
            })?;
        Ok(())
    }
}

/// The whole benchmark suite plus optional hand-tuned baseline cycles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub kernels: Vec<KernelSpec>,
    /// Hand-tuned baseline cycle counts, keyed by kernel name.
    pub baseline_cycles: BTreeMap<String, u64>,
    /// Data-path width in bits.
    pub path_bits: u32,
}

impl SuiteManifest {
    pub fn kernel(&self, name: &str) -> Option<&KernelSpec> {
        self.kernels.iter().find(|k| k.name == name)
    }

    pub fn kernel_names(&self) -> Vec<&str> {
        self.kernels.iter().map(|k| k.name.as_str()).collect()
    }
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported manifest schema_version {0} (expected 1)")]
    SchemaVersion(u32),
    #[error("duplicate kernel name {0:?}")]
    DuplicateKernel(String),
    #[error("kernel {kernel}: {message}")]
    Invariant { kernel: String, message: String },
    #[error("path_bits {path_bits} is not a multiple of element_bits {element_bits} (kernel {kernel})")]
    LaneConfig {
        kernel: String,
        path_bits: u32,
        element_bits: u32,
    },
}

// On-disk manifest shape; sources are referenced by relative path and
// inlined into KernelSpec at load time.
#[derive(Deserialize)]
struct ManifestFile {
    schema_version: u32,
    #[serde(default = "default_path_bits")]
    path_bits: u32,
    #[serde(default)]
    kernels: Vec<ManifestKernel>,
    #[serde(default)]
    baseline_cycles: BTreeMap<String, u64>,
}

fn default_path_bits() -> u32 {
    128
}

#[derive(Deserialize)]
struct ManifestKernel {
    name: String,
    #[serde(default)]
    description: String,
    golden: PathBuf,
    test: PathBuf,
    signature: ManifestSignature,
    dims: Vec<u64>,
    #[serde(default = "default_bits")]
    element_bits: u32,
    #[serde(default = "one")]
    batch: u64,
    #[serde(default = "one")]
    iterations: u64,
    #[serde(default)]
    fill_slab_elements: u64,
    #[serde(default)]
    fill_count: u64,
}

fn default_bits() -> u32 {
    32
}

fn one() -> u64 {
    1
}

#[derive(Deserialize)]
struct ManifestSignature {
    kernel_name: String,
    params: Vec<ManifestParam>,
}

#[derive(Deserialize)]
struct ManifestParam {
    name: String,
    role: ParamRole,
}

/// Load and validate a suite manifest, inlining golden/test sources.
///
/// Source paths are resolved relative to the manifest file's directory.
pub fn load_manifest(path: &Path) -> Result<SuiteManifest, SuiteError> {
    let text = std::fs::read_to_string(path).map_err(|source| SuiteError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ManifestFile = toml::from_str(&text)?;
    if file.schema_version != 1 {
        return Err(SuiteError::SchemaVersion(file.schema_version));
    }
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut kernels = Vec::with_capacity(file.kernels.len());
    let mut seen = std::collections::BTreeSet::new();
    for k in file.kernels {
        if !seen.insert(k.name.clone()) {
            return Err(SuiteError::DuplicateKernel(k.name));
        }
        let read = |rel: &Path| -> Result<String, SuiteError> {
            let p = base.join(rel);
            std::fs::read_to_string(&p).map_err(|source| SuiteError::Io { path: p, source })
        };
        let spec = KernelSpec {
            name: k.name,
            description: k.description,
            golden_source: read(&k.golden)?,
            test_source: read(&k.test)?,
            signature: InterfaceSignature {
                kernel_name: k.signature.kernel_name,
                params: k
                    .signature
                    .params
                    .into_iter()
                    .map(|p| (p.name, p.role))
                    .collect(),
            },
            dims: k.dims,
            element_bits: k.element_bits,
            batch: k.batch,
            iterations: k.iterations,
            fill_slab_elements: k.fill_slab_elements,
            fill_count: k.fill_count,
        };
        spec.validate()?;
        if file.path_bits % spec.element_bits != 0 {
            return Err(SuiteError::LaneConfig {
                kernel: spec.name,
                path_bits: file.path_bits,
                element_bits: spec.element_bits,
            });
        }
        kernels.push(spec);
    }

    Ok(SuiteManifest {
        kernels,
        baseline_cycles: file.baseline_cycles,
        path_bits: file.path_bits,
    })
}

/// Elements processed per cycle on a `path_bits`-wide data path.
pub fn vector_lanes(element_bits: u32, path_bits: u32) -> Result<u64, SuiteError> {
    if element_bits == 0 || path_bits % element_bits != 0 {
        return Err(SuiteError::LaneConfig {
            kernel: String::new(),
            path_bits,
            element_bits,
        });
    }
    Ok(u64::from(path_bits / element_bits))
}

/// Theoretical minimum cycles for a kernel on a `path_bits` data path.
///
/// `(batch × ∏dims + fill_count × fill_slab_elements) / lanes`, rounded up:
/// a partial final vector word still costs a cycle.
pub fn ideal_latency(spec: &KernelSpec, path_bits: u32) -> Result<u64, SuiteError> {
    let lanes = vector_lanes(spec.element_bits, path_bits)?;
    let volume = spec.total_elements() + spec.fill_count * spec.fill_slab_elements;
    Ok(volume.div_ceil(lanes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dims: &[u64], batch: u64, slab: u64, count: u64) -> KernelSpec {
        KernelSpec {
            name: "t".into(),
            description: String::new(),
            golden_source: "void golden_model(const int *a, int *o) {}".into(),
            test_source: "int main() { return 0; }".into(),
            signature: InterfaceSignature::new(
                "genKernel",
                &[("a", ParamRole::Input), ("o", ParamRole::Output)],
            ),
            dims: dims.to_vec(),
            element_bits: 32,
            batch,
            iterations: 1,
            fill_slab_elements: slab,
            fill_count: count,
        }
    }

    #[test]
    fn lanes_divide_evenly() {
        assert_eq!(vector_lanes(32, 128).unwrap(), 4);
        assert_eq!(vector_lanes(128, 128).unwrap(), 1);
        assert_eq!(vector_lanes(64, 128).unwrap(), 2);
        assert!(vector_lanes(48, 128).is_err());
    }

    #[test]
    fn ideal_matches_closed_form_rows() {
        // vector kernel, no fill
        assert_eq!(ideal_latency(&spec(&[8192], 1, 0, 0), 128).unwrap(), 2_048);
        // 2-D stencil, one fill row
        assert_eq!(
            ideal_latency(&spec(&[1024, 1024], 1, 1024, 1), 128).unwrap(),
            262_400
        );
        // N=4 iterations: one fill row per iteration
        assert_eq!(
            ideal_latency(&spec(&[1024, 1024], 1, 1024, 4), 128).unwrap(),
            263_168
        );
        // batched 3-D stencil, one fill plane
        assert_eq!(
            ideal_latency(&spec(&[256, 256, 256], 4, 65_536, 1), 128).unwrap(),
            16_793_600
        );
        // one partial vector word still costs a cycle
        assert_eq!(ideal_latency(&spec(&[4], 1, 0, 0), 128).unwrap(), 1);
        assert_eq!(ideal_latency(&spec(&[5], 1, 0, 0), 128).unwrap(), 2);
    }

    #[test]
    fn degenerate_path_gives_one_lane() {
        let s = spec(&[777], 3, 10, 2);
        assert_eq!(
            ideal_latency(&s, 32).unwrap(),
            s.total_elements() + 20
        );
    }

    #[test]
    fn ideal_monotone_in_batch_dims_fill() {
        let base = ideal_latency(&spec(&[64, 64], 2, 16, 1), 128).unwrap();
        assert!(ideal_latency(&spec(&[64, 64], 3, 16, 1), 128).unwrap() >= base);
        assert!(ideal_latency(&spec(&[64, 65], 2, 16, 1), 128).unwrap() >= base);
        assert!(ideal_latency(&spec(&[64, 64], 2, 16, 2), 128).unwrap() >= base);
    }

    #[test]
    fn invariants_rejected() {
        let mut s = spec(&[8192], 1, 0, 0);
        s.element_bits = 24;
        assert!(matches!(s.validate(), Err(SuiteError::Invariant { .. })));
        let mut s = spec(&[8192], 1, 0, 0);
        s.dims = vec![];
        assert!(s.validate().is_err());
        let mut s = spec(&[8192], 1, 0, 0);
        s.batch = 0;
        assert!(s.validate().is_err());
    }
}
