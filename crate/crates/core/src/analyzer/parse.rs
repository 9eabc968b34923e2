//! Lenient, pragma-aware parser for C-like HLS kernel source.
//!
//! The parser recovers loop structure, HLS pragmas, calls, and stream
//! declarations; it does not attempt full C++ semantics. Statements it
//! cannot classify are costed as one cycle each so estimates stay total on
//! arbitrary generated code.
//!
//! Pragma attachment: PIPELINE / UNROLL / LOOP_TRIPCOUNT attach to the next
//! `for` in the same statement block when one follows, otherwise to the
//! enclosing loop. DATAFLOW and STREAM attach to the enclosing function.
//! Both the before-the-loop and first-line-of-body conventions parse.

use std::collections::BTreeMap;

use thiserror::Error;

use super::ir::*;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: unbalanced braces")]
    UnbalancedBraces { line: usize },
    #[error("line {line}: malformed pragma HLS {pragma}: {message}")]
    Pragma {
        pragma: String,
        line: usize,
        message: String,
    },
    #[error("no function definition found")]
    NoFunction,
}

/// Parse kernel source into a loop-nest IR.
pub fn parse_kernel(source: &str) -> Result<LoopNestIr, ParseError> {
    Parser::new(source)?.parse()
}

// ---------------------------------------------------------------------------
// pragmas
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Pragma {
    Pipeline {
        ii: Option<u32>,
        depth: Option<u64>,
        off: bool,
    },
    Unroll(Unroll),
    TripCount(TripCounts),
    Dataflow,
    Stream { variable: String, depth: u64 },
    Other,
}

fn parse_pragma(
    rest: &str,
    line: usize,
    defines: &BTreeMap<String, String>,
) -> Result<Pragma, ParseError> {
    let mut words = rest.split_whitespace();
    let Some(directive) = words.next() else {
        return Ok(Pragma::Other);
    };
    let args: Vec<&str> = words.collect();
    let err = |message: String| ParseError::Pragma {
        pragma: directive.to_ascii_uppercase(),
        line,
        message,
    };
    let lookup = |key: &str| -> Option<&str> {
        args.iter().find_map(|a| {
            let (k, v) = a.split_once('=')?;
            k.eq_ignore_ascii_case(key).then_some(v)
        })
    };
    let int_arg = |key: &str| -> Result<Option<u64>, ParseError> {
        match lookup(key) {
            None => Ok(None),
            Some(v) => eval_int_expr(v, defines)
                .map(Some)
                .ok_or_else(|| err(format!("{key}={v} is not an integer expression"))),
        }
    };

    match directive.to_ascii_uppercase().as_str() {
        "PIPELINE" => {
            let off = args.iter().any(|a| a.eq_ignore_ascii_case("off"));
            let ii = int_arg("II")?.map(|v| v as u32);
            let depth = int_arg("depth")?;
            Ok(Pragma::Pipeline { ii, depth, off })
        }
        "UNROLL" => Ok(Pragma::Unroll(match int_arg("factor")? {
            Some(0) => return Err(err("factor must be >= 1".into())),
            Some(f) => Unroll::Factor(f as u32),
            None => Unroll::Full,
        })),
        "LOOP_TRIPCOUNT" => {
            let min = int_arg("min")?;
            let max = int_arg("max")?;
            let avg = int_arg("avg")?;
            let (min, max) = match (min, max) {
                (Some(min), Some(max)) => (min, max),
                (Some(v), None) | (None, Some(v)) => (v, v),
                (None, None) => return Err(err("needs min and/or max".into())),
            };
            let avg = avg.unwrap_or((min + max) / 2);
            if !(min <= avg && avg <= max) {
                return Err(err(format!(
                    "requires min <= avg <= max, got {min}/{avg}/{max}"
                )));
            }
            Ok(Pragma::TripCount(TripCounts { min, max, avg }))
        }
        "DATAFLOW" => Ok(Pragma::Dataflow),
        "STREAM" => {
            let variable = lookup("variable")
                .ok_or_else(|| err("missing variable=".into()))?
                .to_string();
            let depth = int_arg("depth")?.unwrap_or(2);
            Ok(Pragma::Stream { variable, depth })
        }
        // INTERFACE, ARRAY_PARTITION, INLINE, ... are legal in kernels but
        // not modeled.
        _ => Ok(Pragma::Other),
    }
}

// ---------------------------------------------------------------------------
// integer constant expressions over #defines
// ---------------------------------------------------------------------------

/// Evaluate `4*32`, `P_SIZE`, `(N+1)/2`, ... against the define table.
pub(super) fn eval_int_expr(text: &str, defines: &BTreeMap<String, String>) -> Option<u64> {
    fn eval(s: &[u8], pos: &mut usize, defs: &BTreeMap<String, String>, depth: u32) -> Option<i64> {
        let mut acc = term(s, pos, defs, depth)?;
        loop {
            skip_ws(s, pos);
            match s.get(*pos) {
                Some(b'+') => {
                    *pos += 1;
                    acc += term(s, pos, defs, depth)?;
                }
                Some(b'-') => {
                    *pos += 1;
                    acc -= term(s, pos, defs, depth)?;
                }
                _ => return Some(acc),
            }
        }
    }
    fn term(s: &[u8], pos: &mut usize, defs: &BTreeMap<String, String>, depth: u32) -> Option<i64> {
        let mut acc = atom(s, pos, defs, depth)?;
        loop {
            skip_ws(s, pos);
            match s.get(*pos) {
                Some(b'*') => {
                    *pos += 1;
                    acc *= atom(s, pos, defs, depth)?;
                }
                Some(b'/') => {
                    *pos += 1;
                    let d = atom(s, pos, defs, depth)?;
                    if d == 0 {
                        return None;
                    }
                    acc /= d;
                }
                _ => return Some(acc),
            }
        }
    }
    fn atom(s: &[u8], pos: &mut usize, defs: &BTreeMap<String, String>, depth: u32) -> Option<i64> {
        skip_ws(s, pos);
        match s.get(*pos)? {
            b'(' => {
                *pos += 1;
                let v = eval(s, pos, defs, depth)?;
                skip_ws(s, pos);
                (s.get(*pos) == Some(&b')')).then(|| *pos += 1)?;
                Some(v)
            }
            b'0'..=b'9' => {
                let start = *pos;
                while matches!(s.get(*pos), Some(b'0'..=b'9')) {
                    *pos += 1;
                }
                let digits = std::str::from_utf8(&s[start..*pos]).ok()?;
                while matches!(s.get(*pos), Some(b'u' | b'U' | b'l' | b'L')) {
                    *pos += 1;
                }
                digits.parse().ok()
            }
            c if c.is_ascii_alphabetic() || *c == b'_' => {
                let start = *pos;
                while matches!(s.get(*pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'_') {
                    *pos += 1;
                }
                if depth == 0 {
                    return None;
                }
                let name = std::str::from_utf8(&s[start..*pos]).ok()?;
                let expansion = defs.get(name)?;
                let bytes = expansion.as_bytes();
                let mut sub = 0;
                let v = eval(bytes, &mut sub, defs, depth - 1)?;
                skip_ws(bytes, &mut sub);
                (sub == bytes.len()).then_some(v)
            }
            _ => None,
        }
    }
    fn skip_ws(s: &[u8], pos: &mut usize) {
        while matches!(s.get(*pos), Some(b' ' | b'\t')) {
            *pos += 1;
        }
    }

    let bytes = text.trim().as_bytes();
    let mut pos = 0;
    let v = eval(bytes, &mut pos, defines, 16)?;
    skip_ws(bytes, &mut pos);
    (pos == bytes.len() && v >= 0).then_some(v as u64)
}

// ---------------------------------------------------------------------------
// preprocessing: comments, literals, directives
// ---------------------------------------------------------------------------

/// Blank comment bodies and string/char literal contents, preserving line
/// structure so reported line numbers match the original source.
fn sanitize(source: &str) -> String {
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len());
    let mut i = 0;
    while i < chars.len() {
        match chars[i] {
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if chars.get(i + 1) == Some(&'*') => {
                out.push_str("  ");
                i += 2;
                while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                    out.push(if chars[i] == '\n' { '\n' } else { ' ' });
                    i += 1;
                }
                if i < chars.len() {
                    out.push_str("  ");
                }
                i = (i + 2).min(chars.len());
            }
            q @ ('"' | '\'') => {
                out.push(q);
                i += 1;
                while i < chars.len() && chars[i] != q {
                    if chars[i] == '\\' && i + 1 < chars.len() {
                        out.push(' ');
                        out.push(if chars[i + 1] == '\n' { '\n' } else { ' ' });
                        i += 2;
                    } else {
                        out.push(if chars[i] == '\n' { '\n' } else { ' ' });
                        i += 1;
                    }
                }
                if i < chars.len() {
                    out.push(q);
                    i += 1;
                }
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

struct Preprocessed {
    /// Directive lines replaced by pragma sentinels (`@P<n>;`) or blanks.
    text: String,
    pragmas: Vec<Pragma>,
    defines: BTreeMap<String, String>,
}

fn preprocess(source: &str) -> Result<Preprocessed, ParseError> {
    let sanitized = sanitize(source);

    // pass 1: collect defines so pragma args can reference them regardless
    // of ordering
    let mut defines = BTreeMap::new();
    for line in sanitized.lines() {
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("#define") {
            let rest = rest.trim_start();
            let name: String = rest
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                .collect();
            if name.is_empty() {
                continue;
            }
            let after = &rest[name.len()..];
            let value = after.trim();
            // function-like macros are not modeled
            if !after.starts_with('(') && !value.is_empty() {
                defines.insert(name, value.to_string());
            }
        }
    }

    // pass 2: rewrite directive lines
    let mut text = String::with_capacity(sanitized.len());
    let mut pragmas = Vec::new();
    for (idx, line) in sanitized.lines().enumerate() {
        let lineno = idx + 1;
        let t = line.trim_start();
        if let Some(rest) = t.strip_prefix("#pragma") {
            let rest = rest.trim_start();
            if rest.len() >= 3 && rest[..3].eq_ignore_ascii_case("hls") {
                let body = rest[3..].trim_start();
                if body.len() < rest[3..].len() || body.is_empty() || rest.len() == 3 {
                    let pragma = parse_pragma(body, lineno, &defines)?;
                    text.push_str(&format!("@P{};", pragmas.len()));
                    pragmas.push(pragma);
                }
            }
            // non-HLS pragmas are dropped
        } else if t.starts_with('#') {
            // other preprocessor lines (defines, includes, guards) are dropped
        } else {
            text.push_str(line);
        }
        text.push('\n');
    }

    Ok(Preprocessed {
        text,
        pragmas,
        defines,
    })
}

// ---------------------------------------------------------------------------
// structural parser
// ---------------------------------------------------------------------------

struct Parser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    pragmas: Vec<Pragma>,
    defines: BTreeMap<String, String>,
    typedefs: BTreeMap<String, String>,
    file_streams: Vec<StreamDecl>,
}

/// Per-function accumulation while its body parses.
#[derive(Default)]
struct FuncCtx {
    is_dataflow: bool,
    streams: Vec<StreamDecl>,
    stream_depths: BTreeMap<String, u64>,
}

impl Parser {
    fn new(source: &str) -> Result<Self, ParseError> {
        let pre = preprocess(source)?;
        Ok(Self {
            chars: pre.text.chars().collect(),
            pos: 0,
            line: 1,
            pragmas: pre.pragmas,
            defines: pre.defines,
            typedefs: BTreeMap::new(),
            file_streams: Vec::new(),
        })
    }

    fn parse(mut self) -> Result<LoopNestIr, ParseError> {
        let mut functions = Vec::new();
        self.parse_scope(&mut functions, false)?;
        if functions.is_empty() {
            return Err(ParseError::NoFunction);
        }
        let top = choose_top(&functions);
        Ok(LoopNestIr { functions, top })
    }

    // --- cursor primitives ---

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<char> {
        self.chars.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        if c == '\n' {
            self.line += 1;
        }
        self.pos += 1;
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.peek(), Some(c) if c.is_ascii_alphabetic() || c == '_')
    }

    fn read_ident(&mut self) -> String {
        let mut s = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            s.push(self.bump().unwrap());
        }
        s
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    /// Consume a balanced `(...)` (cursor on the opening paren) and return
    /// the interior text.
    fn read_balanced_parens(&mut self) -> Result<String, ParseError> {
        let open_line = self.line;
        assert_eq!(self.bump(), Some('('));
        let mut depth = 1usize;
        let mut inner = String::new();
        while let Some(c) = self.bump() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(inner);
                    }
                }
                _ => {}
            }
            inner.push(c);
        }
        Err(ParseError::UnbalancedBraces { line: open_line })
    }

    fn skip_balanced_braces(&mut self) -> Result<(), ParseError> {
        let open_line = self.line;
        assert_eq!(self.bump(), Some('{'));
        let mut depth = 1usize;
        while let Some(c) = self.bump() {
            match c {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                _ => {}
            }
        }
        Err(ParseError::UnbalancedBraces { line: open_line })
    }

    /// Pragma sentinel `@P<n>;` if present at cursor.
    fn try_pragma(&mut self) -> Option<Pragma> {
        if self.peek() != Some('@') || self.peek2() != Some('P') {
            return None;
        }
        let save = (self.pos, self.line);
        self.bump();
        self.bump();
        let mut n = String::new();
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            n.push(self.bump().unwrap());
        }
        self.eat(';');
        match n.parse::<usize>().ok().and_then(|i| self.pragmas.get(i)) {
            Some(p) => Some(p.clone()),
            None => {
                (self.pos, self.line) = save;
                self.bump(); // stray '@': make progress
                None
            }
        }
    }

    // --- top level / extern blocks ---

    fn parse_scope(
        &mut self,
        functions: &mut Vec<FunctionIr>,
        inside_extern_block: bool,
    ) -> Result<(), ParseError> {
        loop {
            self.skip_ws();
            let Some(c) = self.peek() else {
                if inside_extern_block {
                    return Err(ParseError::UnbalancedBraces { line: self.line });
                }
                return Ok(());
            };
            if c == '}' {
                if inside_extern_block {
                    self.bump();
                    return Ok(());
                }
                return Err(ParseError::UnbalancedBraces { line: self.line });
            }
            if self.try_pragma().is_some() {
                continue; // file-scope pragmas are not modeled
            }
            if c == ';' {
                self.bump();
                continue;
            }
            self.parse_top_item(functions, inside_extern_block)?;
        }
    }

    fn parse_top_item(
        &mut self,
        functions: &mut Vec<FunctionIr>,
        extern_c: bool,
    ) -> Result<(), ParseError> {
        let start = (self.pos, self.line);

        if self.at_ident() {
            let word = self.read_ident();
            match word.as_str() {
                "extern" => {
                    self.skip_ws();
                    if self.peek() == Some('"') {
                        self.bump();
                        while let Some(c) = self.bump() {
                            if c == '"' {
                                break;
                            }
                        }
                    }
                    self.skip_ws();
                    if self.eat('{') {
                        return self.parse_scope(functions, true);
                    }
                    // `extern "C" void f(...)` single-declaration form
                    return self.parse_function_like(functions, true);
                }
                "typedef" => {
                    let mut text = String::new();
                    while let Some(c) = self.peek() {
                        if c == ';' {
                            self.bump();
                            break;
                        }
                        text.push(self.bump().unwrap());
                    }
                    self.record_typedef(&text);
                    return Ok(());
                }
                "using" => {
                    self.skip_ws();
                    let name = self.read_ident();
                    self.skip_ws();
                    let mut def = String::new();
                    if self.eat('=') {
                        while let Some(c) = self.peek() {
                            if c == ';' {
                                break;
                            }
                            def.push(self.bump().unwrap());
                        }
                    }
                    while self.peek().is_some() && !self.eat(';') {
                        self.bump();
                    }
                    if !def.trim().is_empty() && !name.is_empty() {
                        self.typedefs.insert(name, def.trim().to_string());
                    }
                    return Ok(());
                }
                "namespace" | "struct" | "class" | "union" | "enum" => {
                    self.skip_until_item_end()?;
                    return Ok(());
                }
                _ => {
                    (self.pos, self.line) = start;
                    return self.parse_function_like(functions, extern_c);
                }
            }
        }

        // unrecognized leading char: make progress
        self.bump();
        Ok(())
    }

    fn record_typedef(&mut self, text: &str) {
        let name = last_ident(text);
        if name.is_empty() {
            return;
        }
        let def = text
            .trim()
            .trim_end_matches(name.as_str())
            .trim()
            .to_string();
        if !def.is_empty() {
            self.typedefs.insert(name, def);
        }
    }

    fn skip_until_item_end(&mut self) -> Result<(), ParseError> {
        let open_line = self.line;
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(ParseError::UnbalancedBraces { line: open_line }),
                Some(';') => {
                    self.bump();
                    return Ok(());
                }
                Some('{') => {
                    self.skip_balanced_braces()?;
                    self.eat(';');
                    return Ok(());
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    /// Parse a function definition, a prototype, or a file-scope declaration
    /// (e.g. a global stream).
    fn parse_function_like(
        &mut self,
        functions: &mut Vec<FunctionIr>,
        extern_c: bool,
    ) -> Result<(), ParseError> {
        let mut tokens: Vec<String> = Vec::new();
        let mut decl_text = String::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Ok(()),
                Some('(') => break,
                Some(';') => {
                    self.bump();
                    if let Some(streams) = self.stream_decl_from_text(&decl_text) {
                        self.file_streams.extend(streams);
                    }
                    return Ok(());
                }
                Some('{') => {
                    // e.g. `int table[] = {...}` reached oddly; skip braces
                    self.skip_balanced_braces()?;
                    return Ok(());
                }
                Some('=') => {
                    while self.peek().is_some() && !self.eat(';') {
                        if self.peek() == Some('{') {
                            self.skip_balanced_braces()?;
                        } else {
                            self.bump();
                        }
                    }
                    return Ok(());
                }
                Some(c) if c.is_ascii_alphanumeric() || c == '_' => {
                    let id = self.read_ident();
                    decl_text.push_str(&id);
                    decl_text.push(' ');
                    tokens.push(id);
                }
                Some(c) => {
                    decl_text.push(c);
                    self.bump();
                }
            }
        }

        let Some(name) = tokens.last().cloned() else {
            self.read_balanced_parens()?;
            return Ok(());
        };
        let params_text = self.read_balanced_parens()?;
        self.skip_ws();
        // tolerate trailing qualifiers between ')' and '{'/';'
        while self.at_ident() {
            self.read_ident();
            self.skip_ws();
        }
        if self.eat(';') {
            // prototype, or a constructor-style global stream declaration
            if let Some(streams) = self.stream_decl_from_text(&decl_text) {
                self.file_streams.extend(streams);
            }
            return Ok(());
        }
        if !self.eat('{') {
            while self.peek().is_some() && !self.eat(';') {
                self.bump();
            }
            return Ok(());
        }

        let params = split_params(&params_text);
        let mut ctx = FuncCtx::default();
        let (body, _leftover) = self.parse_block(&mut ctx, Vec::new())?;

        // apply STREAM pragma depths; pull in file-scope streams they name
        for (var, depth) in &ctx.stream_depths {
            if let Some(decl) = ctx.streams.iter_mut().find(|s| &s.name == var) {
                decl.depth = *depth;
            } else if let Some(global) = self.file_streams.iter().find(|s| &s.name == var) {
                let mut s = global.clone();
                s.depth = *depth;
                ctx.streams.push(s);
            } else {
                ctx.streams.push(StreamDecl {
                    name: var.clone(),
                    depth: *depth,
                    elem_bits: 32,
                });
            }
        }

        functions.push(FunctionIr {
            name,
            params,
            extern_c,
            is_dataflow: ctx.is_dataflow,
            streams: ctx.streams,
            body,
        });
        Ok(())
    }

    // --- statement blocks ---

    /// Parse until the matching `}` (cursor just past `{`). Returns the
    /// regions plus any loop pragmas left unattached at block end; those
    /// belong to the enclosing loop.
    fn parse_block(
        &mut self,
        ctx: &mut FuncCtx,
        initial_pending: Vec<Pragma>,
    ) -> Result<(Vec<Region>, Vec<Pragma>), ParseError> {
        let open_line = self.line;
        let mut regions = Vec::new();
        let mut pending = initial_pending;
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(ParseError::UnbalancedBraces { line: open_line }),
                Some('}') => {
                    self.bump();
                    return Ok((regions, pending));
                }
                _ => {}
            }
            if let Some(pragma) = self.try_pragma() {
                self.handle_pragma(ctx, &mut pending, pragma);
                continue;
            }
            self.parse_statement(ctx, &mut regions, &mut pending)?;
        }
    }

    fn handle_pragma(&mut self, ctx: &mut FuncCtx, pending: &mut Vec<Pragma>, pragma: Pragma) {
        match pragma {
            Pragma::Dataflow => ctx.is_dataflow = true,
            Pragma::Stream { variable, depth } => {
                ctx.stream_depths.insert(variable, depth);
            }
            Pragma::Other => {}
            p => pending.push(p),
        }
    }

    /// One statement (or nested structure); `pending` carries loop pragmas
    /// waiting for the next `for` in this block.
    fn parse_statement(
        &mut self,
        ctx: &mut FuncCtx,
        regions: &mut Vec<Region>,
        pending: &mut Vec<Pragma>,
    ) -> Result<(), ParseError> {
        self.skip_ws();
        let Some(c) = self.peek() else {
            return Ok(());
        };

        if c == '{' {
            self.bump();
            let (inner, leftover) = self.parse_block(ctx, Vec::new())?;
            pending.extend(leftover);
            extend_coalescing(regions, inner);
            return Ok(());
        }
        if c == ';' {
            self.bump();
            return Ok(());
        }
        if let Some(pragma) = self.try_pragma() {
            self.handle_pragma(ctx, pending, pragma);
            return Ok(());
        }

        if self.at_ident() {
            let save = (self.pos, self.line);
            let word = self.read_ident();
            match word.as_str() {
                "for" | "while" => {
                    self.skip_ws();
                    if self.peek() == Some('(') {
                        self.read_balanced_parens()?;
                    }
                    let (body, leftover) = self.parse_loop_body(ctx)?;
                    let mut pragma_set: Vec<Pragma> = pending.drain(..).collect();
                    pragma_set.extend(leftover);
                    regions.push(build_loop(pragma_set, body));
                    return Ok(());
                }
                "do" => {
                    let (body, leftover) = self.parse_loop_body(ctx)?;
                    self.skip_ws();
                    let save2 = (self.pos, self.line);
                    if self.at_ident() && self.read_ident() == "while" {
                        self.skip_ws();
                        if self.peek() == Some('(') {
                            self.read_balanced_parens()?;
                        }
                        self.eat(';');
                    } else {
                        (self.pos, self.line) = save2;
                    }
                    let mut pragma_set: Vec<Pragma> = pending.drain(..).collect();
                    pragma_set.extend(leftover);
                    regions.push(build_loop(pragma_set, body));
                    return Ok(());
                }
                "if" => {
                    self.skip_ws();
                    let cond = if self.peek() == Some('(') {
                        self.read_balanced_parens()?
                    } else {
                        String::new()
                    };
                    let (m, d, a) = count_ops(&cond);
                    push_statement(regions, 1, m, d, a);
                    self.parse_statement(ctx, regions, pending)?;
                    self.skip_ws();
                    let save2 = (self.pos, self.line);
                    if self.at_ident() {
                        if self.read_ident() == "else" {
                            self.parse_statement(ctx, regions, pending)?;
                        } else {
                            (self.pos, self.line) = save2;
                        }
                    }
                    return Ok(());
                }
                "switch" => {
                    self.skip_ws();
                    if self.peek() == Some('(') {
                        self.read_balanced_parens()?;
                    }
                    push_statement(regions, 1, 0, 0, 0);
                    self.parse_statement(ctx, regions, pending)?;
                    return Ok(());
                }
                "case" | "default" => {
                    while let Some(ch) = self.peek() {
                        self.bump();
                        if ch == ':' {
                            break;
                        }
                    }
                    return Ok(());
                }
                "typedef" => {
                    let mut text = String::new();
                    while let Some(ch) = self.peek() {
                        if ch == ';' {
                            self.bump();
                            break;
                        }
                        text.push(self.bump().unwrap());
                    }
                    self.record_typedef(&text);
                    return Ok(());
                }
                "return" | "break" | "continue" | "goto" => {
                    let rest = self.read_statement_text()?;
                    let (m, d, a) = count_ops(&rest);
                    push_statement(regions, 1, m, d, a);
                    return Ok(());
                }
                _ => {
                    // label? `name:` not followed by another ':'
                    self.skip_ws();
                    if self.peek() == Some(':') && self.peek2() != Some(':') {
                        self.bump();
                        return self.parse_statement(ctx, regions, pending);
                    }
                    (self.pos, self.line) = save;
                }
            }
        }

        let text = self.read_statement_text()?;
        self.classify_statement(ctx, regions, &text);
        Ok(())
    }

    /// Loop body: braced block or a single (possibly nested) statement.
    /// Returns (regions, pragmas that attach to the owning loop).
    fn parse_loop_body(
        &mut self,
        ctx: &mut FuncCtx,
    ) -> Result<(Vec<Region>, Vec<Pragma>), ParseError> {
        self.skip_ws();
        // pragmas between the header and the body drift inward
        let mut pre: Vec<Pragma> = Vec::new();
        loop {
            self.skip_ws();
            match self.try_pragma() {
                Some(p) => self.handle_pragma(ctx, &mut pre, p),
                None => break,
            }
        }
        self.skip_ws();
        if self.eat('{') {
            return self.parse_block(ctx, pre);
        }
        // single-statement body
        let mut body = Vec::new();
        let mut pending = pre;
        self.parse_statement(ctx, &mut body, &mut pending)?;
        Ok((body, pending))
    }

    /// Read text up to the terminating `;` outside parens/brackets.
    fn read_statement_text(&mut self) -> Result<String, ParseError> {
        let start_line = self.line;
        let mut text = String::new();
        let mut paren = 0i32;
        let mut bracket = 0i32;
        loop {
            match self.peek() {
                None => return Err(ParseError::UnbalancedBraces { line: start_line }),
                Some(';') if paren <= 0 && bracket <= 0 => {
                    self.bump();
                    return Ok(text);
                }
                Some('}') if paren <= 0 && bracket <= 0 => {
                    // statement ran into a closing brace: treat as complete
                    return Ok(text);
                }
                Some('{') => {
                    self.skip_balanced_braces()?;
                    text.push(' ');
                }
                Some(c) => {
                    match c {
                        '(' => paren += 1,
                        ')' => paren -= 1,
                        '[' => bracket += 1,
                        ']' => bracket -= 1,
                        _ => {}
                    }
                    text.push(c);
                    self.bump();
                }
            }
        }
    }

    fn classify_statement(&mut self, ctx: &mut FuncCtx, regions: &mut Vec<Region>, text: &str) {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return;
        }

        if let Some(streams) = self.stream_decl_from_text(trimmed) {
            ctx.streams.extend(streams);
            return;
        }

        if let Some(callee) = call_statement(trimmed) {
            regions.push(Region::Call { callee });
            return;
        }

        if let Some((init, has_init)) = declaration_split(trimmed) {
            if !has_init {
                return; // pure declaration costs nothing
            }
            let (m, d, a) = count_ops(init);
            push_statement(regions, 1, m, d, a);
            return;
        }

        let (m, d, a) = count_ops(trimmed);
        push_statement(regions, 1, m, d, a);
    }

    /// Recognize `hls::stream<T> name[, name2...]` declarations and resolve
    /// the element width through typedefs/defines.
    fn stream_decl_from_text(&self, text: &str) -> Option<Vec<StreamDecl>> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let idx = compact
            .find("hls::stream<")
            .or_else(|| compact.starts_with("stream<").then_some(0))?;
        let after = &compact[idx..];
        let lt = after.find('<')?;
        let mut depth = 0i32;
        let mut gt = None;
        for (i, c) in after.char_indices().skip(lt) {
            match c {
                '<' => depth += 1,
                '>' => {
                    depth -= 1;
                    if depth == 0 {
                        gt = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let gt = gt?;
        let elem_bits = self.resolve_width(&after[lt + 1..gt]);
        let rest = after[gt + 1..].trim_start_matches('&');
        let mut out = Vec::new();
        for piece in split_top_level(rest, ',') {
            let name: String = piece
                .trim()
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
                .collect();
            if !name.is_empty() && !name.chars().next().unwrap().is_ascii_digit() {
                out.push(StreamDecl {
                    name,
                    depth: 2,
                    elem_bits,
                });
            }
        }
        (!out.is_empty()).then_some(out)
    }

    /// Width in bits of a C type name, following typedefs.
    fn resolve_width(&self, ty: &str) -> u32 {
        self.resolve_width_depth(ty, 8)
    }

    fn resolve_width_depth(&self, ty: &str, depth: u32) -> u32 {
        let compact: String = ty
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .replace("const", "");
        for prefix in ["ap_uint<", "ap_int<", "ap_fixed<"] {
            if let Some(rest) = compact.strip_prefix(prefix) {
                if let Some(end) = rest.find(['>', ',']) {
                    if let Some(v) = eval_int_expr(&rest[..end], &self.defines) {
                        return v as u32;
                    }
                }
            }
        }
        match compact.as_str() {
            "char" | "signedchar" | "unsignedchar" | "int8_t" | "uint8_t" | "bool" => 8,
            "short" | "unsignedshort" | "int16_t" | "uint16_t" => 16,
            "int" | "unsigned" | "unsignedint" | "float" | "int32_t" | "uint32_t" | "long" => 32,
            "double" | "longlong" | "unsignedlonglong" | "int64_t" | "uint64_t" | "size_t" => 64,
            other => {
                if depth > 0 {
                    if let Some(def) = self.typedefs.get(other) {
                        return self.resolve_width_depth(&def.clone(), depth - 1);
                    }
                }
                32
            }
        }
    }
}

fn build_loop(pragmas: Vec<Pragma>, body: Vec<Region>) -> Region {
    let mut trips = None;
    let mut pipeline = None;
    let mut unroll = None;
    for p in pragmas {
        match p {
            Pragma::TripCount(t) => trips = Some(t),
            Pragma::Pipeline { ii, depth, off } => {
                pipeline = (!off).then_some(PipelineInfo { ii, depth });
            }
            Pragma::Unroll(u) => unroll = Some(u),
            _ => {}
        }
    }
    Region::Loop(LoopRegion {
        trips,
        pipeline,
        unroll,
        body,
    })
}

// ---------------------------------------------------------------------------
// statement helpers
// ---------------------------------------------------------------------------

fn push_statement(regions: &mut Vec<Region>, latency: u64, m: u64, d: u64, a: u64) {
    if let Some(Region::Straightline {
        latency: l,
        muls,
        divs,
        adds,
    }) = regions.last_mut()
    {
        *l += latency;
        *muls += m;
        *divs += d;
        *adds += a;
        return;
    }
    regions.push(Region::Straightline {
        latency,
        muls: m,
        divs: d,
        adds: a,
    });
}

fn extend_coalescing(regions: &mut Vec<Region>, inner: Vec<Region>) {
    for r in inner {
        match r {
            Region::Straightline {
                latency,
                muls,
                divs,
                adds,
            } => push_statement(regions, latency, muls, divs, adds),
            other => regions.push(other),
        }
    }
}

/// `name(args)` with nothing else significant: a stage/function call.
fn call_statement(text: &str) -> Option<String> {
    let t = text.trim();
    let name: String = t
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if name.is_empty() || name.chars().next()?.is_ascii_digit() {
        return None;
    }
    let rest = t[name.len()..].trim_start();
    if !rest.starts_with('(') {
        return None;
    }
    let mut depth = 0i32;
    let mut end = None;
    for (i, c) in rest.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    end = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    rest[end? + 1..].trim().is_empty().then_some(name)
}

/// Split a declaration into (initializer-or-empty, has_initializer); None if
/// the statement is not a declaration.
fn declaration_split(text: &str) -> Option<(&str, bool)> {
    let eq = find_top_level_assign(text);
    let head = &text[..eq.unwrap_or(text.len())];
    if head.contains('.') || head.contains("->") || head.contains('(') {
        return None;
    }
    if let Some(b) = head.find('[') {
        // `int buf[10]` is a declaration; `C[i] = ...` is not
        if ident_tokens(&head[..b]) < 2 {
            return None;
        }
    } else if ident_tokens(head) < 2 {
        return None;
    }
    let first: String = head
        .trim_start()
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if matches!(first.as_str(), "return" | "delete" | "new" | "throw") {
        return None;
    }
    match eq {
        Some(i) => Some((text[i + 1..].trim(), true)),
        None => Some(("", false)),
    }
}

fn find_top_level_assign(text: &str) -> Option<usize> {
    let b = text.as_bytes();
    let mut nest = 0i32;
    let mut angle = 0i32;
    for i in 0..b.len() {
        match b[i] {
            b'(' | b'[' => nest += 1,
            b')' | b']' => nest -= 1,
            b'<' => angle += 1,
            b'>' => angle = (angle - 1).max(0),
            b'=' if nest == 0 && angle == 0 => {
                let prev = i.checked_sub(1).map(|j| b[j]);
                let next = b.get(i + 1);
                let is_cmp = matches!(
                    prev,
                    Some(b'=' | b'!' | b'<' | b'>' | b'+' | b'-' | b'*' | b'/' | b'%' | b'&' | b'|' | b'^')
                ) || next == Some(&b'=');
                if !is_cmp {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn ident_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut in_ident = false;
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            if !in_ident {
                count += 1;
                in_ident = true;
            }
        } else {
            in_ident = false;
        }
    }
    count
}

/// Count (muls, divs, adds) in an expression span. An operator counts when
/// both neighbors are value-like; `->` is skipped, `++`/`--` count as adds,
/// shifts are free.
fn count_ops(text: &str) -> (u64, u64, u64) {
    let chars: Vec<char> = text.chars().collect();
    let (mut m, mut d, mut a) = (0u64, 0u64, 0u64);
    let value_left = |c: Option<&char>| {
        matches!(c, Some(ch) if ch.is_ascii_alphanumeric() || matches!(ch, '_' | ')' | ']'))
    };
    let value_right = |c: Option<&char>| {
        matches!(c, Some(ch) if ch.is_ascii_alphanumeric() || matches!(ch, '_' | '('))
    };
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        match c {
            '-' if next == Some('>') => i += 2,
            '+' if next == Some('+') => {
                a += 1;
                i += 2;
            }
            '-' if next == Some('-') => {
                a += 1;
                i += 2;
            }
            '<' if next == Some('<') => i += 2,
            '>' if next == Some('>') => i += 2,
            '*' | '/' | '%' | '+' | '-' => {
                let prev = chars[..i].iter().rev().find(|ch| !ch.is_whitespace());
                let nxt = chars[i + 1..].iter().find(|ch| !ch.is_whitespace());
                if value_left(prev) && value_right(nxt) {
                    match c {
                        '*' => m += 1,
                        '/' | '%' => d += 1,
                        _ => a += 1,
                    }
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    (m, d, a)
}

fn split_params(text: &str) -> Vec<String> {
    let t = text.trim();
    if t.is_empty() || t == "void" {
        return Vec::new();
    }
    split_top_level(t, ',')
        .iter()
        .map(|p| {
            let stop = p.find('=').unwrap_or(p.len());
            last_ident(&p[..stop])
        })
        .filter(|n| !n.is_empty())
        .collect()
}

fn split_top_level(text: &str, sep: char) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' | '[' | '<' | '{' => depth += 1,
            ')' | ']' | '>' | '}' => depth -= 1,
            _ => {}
        }
        if c == sep && depth <= 0 {
            out.push(std::mem::take(&mut cur));
        } else {
            cur.push(c);
        }
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

fn last_ident(text: &str) -> String {
    let mut best = String::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '_' {
            cur.push(c);
        } else if !cur.is_empty() {
            best = std::mem::take(&mut cur);
        }
    }
    if !cur.is_empty() {
        best = cur;
    }
    best
}

/// Pick the top-level kernel: a function never called by another, preferring
/// `extern "C"` ones, then the last defined.
fn choose_top(functions: &[FunctionIr]) -> String {
    use std::collections::BTreeSet;
    fn visit<'a>(regions: &'a [Region], called: &mut BTreeSet<&'a str>) {
        for r in regions {
            match r {
                Region::Call { callee } => {
                    called.insert(callee);
                }
                Region::Loop(l) => visit(&l.body, called),
                Region::Straightline { .. } => {}
            }
        }
    }
    let mut called = BTreeSet::new();
    for f in functions {
        visit(&f.body, &mut called);
    }
    let roots: Vec<&FunctionIr> = functions
        .iter()
        .filter(|f| !called.contains(f.name.as_str()))
        .collect();
    let pool = if roots.is_empty() {
        functions.iter().collect::<Vec<_>>()
    } else {
        roots
    };
    if let Some(f) = pool.iter().filter(|f| f.extern_c).next_back() {
        return f.name.clone();
    }
    pool.last().unwrap().name.clone()
}
