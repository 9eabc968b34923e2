//! Loop-nest IR produced by the pragma-aware parser.

/// Parsed representation of one kernel source file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopNestIr {
    /// Functions in definition order.
    pub functions: Vec<FunctionIr>,
    /// Name of the top-level kernel function.
    pub top: String,
}

impl LoopNestIr {
    pub fn function(&self, name: &str) -> Option<&FunctionIr> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn top_function(&self) -> Option<&FunctionIr> {
        self.function(&self.top)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionIr {
    pub name: String,
    /// Parameter names in declaration order (types are not modeled).
    pub params: Vec<String>,
    pub extern_c: bool,
    /// DATAFLOW pragma present: body regions run as concurrent stages.
    pub is_dataflow: bool,
    pub streams: Vec<StreamDecl>,
    pub body: Vec<Region>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamDecl {
    pub name: String,
    /// FIFO depth (STREAM pragma, default 2).
    pub depth: u64,
    /// Element width in bits, resolved through typedefs where possible.
    pub elem_bits: u32,
}

/// One schedulable region of a function body.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Loop(LoopRegion),
    Call { callee: String },
    /// Coalesced run of plain statements with an operation census for the
    /// resource model.
    Straightline {
        latency: u64,
        muls: u64,
        divs: u64,
        adds: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopRegion {
    /// Present iff a LOOP_TRIPCOUNT pragma was attached.
    pub trips: Option<TripCounts>,
    pub pipeline: Option<PipelineInfo>,
    pub unroll: Option<Unroll>,
    pub body: Vec<Region>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripCounts {
    pub min: u64,
    pub max: u64,
    pub avg: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineInfo {
    /// Initiation interval from the pragma; None defaults to 1 with a warning.
    pub ii: Option<u32>,
    /// Explicit pipeline depth; None falls back to the analyzer default.
    pub depth: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unroll {
    Full,
    Factor(u32),
}

impl Region {
    pub fn statements(latency: u64) -> Region {
        Region::Straightline {
            latency,
            muls: 0,
            divs: 0,
            adds: 0,
        }
    }
}
