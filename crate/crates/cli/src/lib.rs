//! Command implementations behind the `upqca` binary.

pub mod formats;

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use upqca::autoqca::{QcaError, QcaLattice, QcaMode};
use upqca::ccqca::{run_homomorphisms, run_nn, Band, Boundary, CcqcaError, ThreeBandLattice};
use upqca::compiler::{
    compile, lower_named_gates, random_circuit, CompileError, CompileOptions, CompiledProgram, GCircuit, ResourceReport,
};
use upqca::gatelib::CELL_DIM;
use upqca::oracle::{
    cross_check, cross_check_compiled, exhaustive_inputs, simulate_circuit, CheckOptions, EquivalenceReport, Level, OracleError,
    DEFAULT_INPUT_CAP,
};
use upqca::register::{Geometry, SlotRegister};
use upqca::statevec::{amplitude_budget, Marginal, StateError};
use upqca::universal::{
    compose_hadamard, compose_toffoli, known_realizations, ExhaustionReport, SearchLimits, SynthesisOutcome, UniversalError,
};

use formats::{BandFile, CircuitFile, FormatError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FALSE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Qca(#[from] QcaError),
    #[error(transparent)]
    Ccqca(#[from] CcqcaError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Universal(#[from] UniversalError),
}

/// Circuit with named gates lowered, plus the ancilla init digits.
fn lower(circuit: &GCircuit) -> Result<(GCircuit, Vec<u8>), CliError> {
    if circuit.is_pure() {
        return Ok((circuit.clone(), Vec::new()));
    }
    let l = lower_named_gates(circuit, &known_realizations())?;
    Ok((l.circuit, l.ancilla_inits))
}

pub fn compile_circuit(circuit: &GCircuit, peephole: bool) -> Result<(CompiledProgram, Vec<u8>), CliError> {
    let (pure, ancillas) = lower(circuit)?;
    let compiled = compile(&pure, CompileOptions { peephole, ..CompileOptions::default() })?;
    Ok((compiled, ancillas))
}

#[derive(Debug, Serialize)]
pub struct CompileSummary {
    pub band_digits: usize,
    pub segments: usize,
    pub report: ResourceReport,
}

pub fn cmd_compile(circuit: &GCircuit, peephole: bool) -> Result<(BandFile, CompileSummary), CliError> {
    let (compiled, ancillas) = compile_circuit(circuit, peephole)?;
    let band = BandFile::from_compiled(&compiled, &ancillas);
    let summary = CompileSummary { band_digits: compiled.band.len(), segments: compiled.band.segment_count(), report: compiled.report };
    Ok((band, summary))
}

pub fn cmd_resources(circuit: &GCircuit) -> Result<ResourceReport, CliError> {
    Ok(compile_circuit(circuit, false)?.0.report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunLevel {
    Gate,
    Ccqca,
    Nn,
    Qca(QcaMode),
}

pub fn parse_digits(text: &str, len: usize) -> Result<Vec<usize>, CliError> {
    let digits: Vec<usize> = text
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(CliError::Usage(format!("input `{text}`: digits must be 0 or 1"))),
        })
        .collect::<Result<_, _>>()?;
    if digits.len() != len {
        return Err(CliError::Usage(format!("input `{text}` has {} digits, expected {len}", digits.len())));
    }
    Ok(digits)
}

fn faithful_limit() -> usize {
    (1..64).take_while(|&k| (CELL_DIM as f64).powi(k as i32) <= amplitude_budget() as f64).last().unwrap_or(0)
}

fn check_faithful(cells: usize) -> Result<(), CliError> {
    let limit = faithful_limit();
    if cells > limit {
        return Err(CliError::Usage(format!(
            "faithful mode: this program needs a ring of at least {cells} cells, but the amplitude budget admits at most {limit} (12^{limit}); use --mode factored"
        )));
    }
    Ok(())
}

/// Exact outcome distribution over the data wires after running `circuit`
/// at `level` on basis input `input`.
pub fn run_marginal(circuit: &GCircuit, level: RunLevel, input: &[usize]) -> Result<Marginal, CliError> {
    let n = circuit.wires();
    if input.len() != n {
        return Err(CliError::Usage(format!("input has {} digits, circuit has {n} wires", input.len())));
    }
    let wires: Vec<usize> = (0..n).collect();
    if level == RunLevel::Gate {
        return Ok(simulate_circuit(circuit, input)?.marginal_distribution(&wires)?);
    }
    let (compiled, ancillas) = compile_circuit(circuit, false)?;
    let mut full: Vec<usize> = input.to_vec();
    full.extend(ancillas.iter().map(|&a| a as usize));
    let map = &compiled.wire_map;
    match level {
        RunLevel::Gate => unreachable!(),
        RunLevel::Ccqca => {
            let hi = map.iter().copied().max().unwrap_or(0).max(0);
            let lo = map.iter().copied().min().unwrap_or(0).min(0);
            let mut d = vec![0; (hi - lo + 1) as usize];
            for (w, &p) in map.iter().enumerate() {
                d[(p - lo) as usize] = full[w];
            }
            let mut lat = ThreeBandLattice::new(lo, hi, 0, Boundary::Open, &d)?;
            run_homomorphisms(&mut lat, &compiled.hom_program);
            let sites = map[..n].iter().map(|&p| lat.site(Band::D, p)).collect::<Result<Vec<_>, _>>()?;
            Ok(lat.state().marginal_distribution(&sites)?)
        }
        RunLevel::Nn => {
            let ones = std::iter::once(2).chain(map.iter().zip(&full).filter(|(_, &b)| b == 1).map(|(&p, _)| 3 * p));
            let mut reg = SlotRegister::from_ones(Geometry::Unbounded, ones);
            run_nn(&mut reg, &compiled.nn_program);
            let slots: Vec<i64> = map[..n].iter().map(|&p| 3 * p).collect();
            Ok(reg.marginal(&slots)?)
        }
        RunLevel::Qca(mode) => {
            let c = &compiled.config;
            if mode == QcaMode::Faithful {
                check_faithful(c.ring_size)?;
            }
            let ones: Vec<i64> =
                std::iter::once(c.pointer_slot).chain(c.wire_slots.iter().zip(&full).filter(|(_, &b)| b == 1).map(|(&s, _)| s)).collect();
            let mut lat = QcaLattice::with_ones(c.ring_size, &compiled.band, &ones, mode)?;
            lat.run(c.completion_steps);
            Ok(lat.readout(&c.wire_slots[..n], c.completion_steps)?.marginal)
        }
    }
}

pub fn render_outcomes(marginal: &Marginal, shots: Option<(usize, u64)>) -> String {
    let mut out = String::from("outcome  probability\n");
    for (digits, p) in marginal.entries() {
        if p > 1e-15 {
            let _ = writeln!(out, "{:<8} {:.12}", digit_text(&digits), p);
        }
    }
    if let Some((shots, seed)) = shots {
        let mut counts = std::collections::BTreeMap::new();
        for s in marginal.sample(shots, seed) {
            *counts.entry(digit_text(&s)).or_insert(0usize) += 1;
        }
        let _ = writeln!(out, "\noutcome  count  (shots {shots}, seed {seed})");
        for (k, v) in counts {
            let _ = writeln!(out, "{k:<8} {v}");
        }
    }
    out
}

fn digit_text(d: &[usize]) -> String {
    d.iter().map(|x| char::from(b'0' + *x as u8)).collect()
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub levels: Vec<Level>,
    pub max_wires: usize,
    pub max_gates: usize,
    pub seeds: u64,
    pub check: CheckOptions,
    /// Negative control: flip the k-th nonzero digit of every band.
    pub corrupt_digit: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct CircuitCheck {
    pub seed: u64,
    pub wires: usize,
    pub gates: usize,
    pub report: EquivalenceReport,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub levels: Vec<String>,
    pub max_wires: usize,
    pub max_gates: usize,
    pub seeds: u64,
    pub tol: f64,
    pub verdict: bool,
    pub min_overlap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_level: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_input: Option<String>,
    pub circuits: Vec<CircuitCheck>,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

fn corrupt(compiled: &mut CompiledProgram, k: usize) -> Result<bool, CliError> {
    let mut digits = compiled.band.digits().to_vec();
    let nonzero: Vec<usize> = (0..digits.len()).filter(|&i| digits[i] != 0).collect();
    if nonzero.is_empty() {
        return Ok(false);
    }
    let i = nonzero[k % nonzero.len()];
    digits[i] = 3 - digits[i];
    compiled.band = upqca::autoqca::ProgramBand::new(digits, compiled.band.origin())?;
    Ok(true)
}

pub fn cmd_verify(opts: &VerifyOptions) -> Result<VerifyReport, CliError> {
    if opts.max_wires > DEFAULT_INPUT_CAP {
        return Err(OracleError::TooManyWires { wires: opts.max_wires, cap: DEFAULT_INPUT_CAP }.into());
    }
    if opts.max_wires < 2 {
        return Err(CliError::Usage("--max-wires must be at least 2".into()));
    }
    let started = Instant::now();
    let mut circuits = Vec::new();
    for seed in 0..opts.seeds {
        let circuit = random_circuit(seed, opts.max_wires, opts.max_gates);
        let inputs = exhaustive_inputs(circuit.wires(), DEFAULT_INPUT_CAP)?;
        let report = match opts.corrupt_digit {
            Some(k) => {
                let mut compiled = compile(&circuit, CompileOptions { peephole: opts.check.peephole, ..CompileOptions::default() })?;
                if !corrupt(&mut compiled, k)? {
                    continue;
                }
                cross_check_compiled(&circuit, &[], &compiled, &inputs, &opts.levels, &opts.check)?
            }
            None => cross_check(&circuit, &inputs, &opts.levels, &opts.check)?,
        };
        circuits.push(CircuitCheck { seed, wires: circuit.wires(), gates: circuit.gates().len(), report });
    }
    let min_overlap = circuits.iter().map(|c| c.report.min_overlap).fold(f64::INFINITY, f64::min);
    let failed = circuits.iter().find(|c| !c.report.verdict);
    Ok(VerifyReport {
        levels: opts.levels.iter().map(|l| l.to_string()).collect(),
        max_wires: opts.max_wires,
        max_gates: opts.max_gates,
        seeds: opts.seeds,
        tol: opts.check.tol,
        verdict: failed.is_none(),
        min_overlap,
        witness_seed: failed.map(|c| c.seed),
        witness_level: failed.and_then(|c| c.report.witness_level.clone()),
        witness_input: failed.and_then(|c| c.report.witness_input.clone()),
        circuits,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Static space-time diagram of a band run: one row per step, one column per
/// cell. Each column is the block the cell fires next (`-` identity, `S`
/// swap, `G`) followed by its two data qubits (`.` zero, `1` one, `*` mixed).
pub fn cmd_trace(band: &BandFile, input: &[usize], steps: Option<u64>) -> Result<String, CliError> {
    let program = band.band().map_err(CliError::Usage)?;
    let n = band.data_wires();
    if input.len() != n {
        return Err(CliError::Usage(format!("input has {} digits, band has {n} data wires", input.len())));
    }
    let steps = steps.unwrap_or(band.completion_steps);
    let bound = band.completion_steps + 2 * band.ring_size as u64;
    if steps > bound {
        return Err(CliError::Usage(format!("--steps {steps} exceeds completion plus two ring sweeps ({bound})")));
    }
    let bits = input.iter().copied().chain(band.ancillas.iter().map(|&a| a as usize));
    let ones: Vec<i64> =
        std::iter::once(band.pointer_slot).chain(band.wire_slots.iter().zip(bits).filter(|(_, b)| *b == 1).map(|(&s, _)| s)).collect();
    let mut lat = QcaLattice::with_ones(band.ring_size, &program, &ones, QcaMode::Factored)?;
    let width = steps.to_string().len();
    let mut out = String::new();
    let _ = writeln!(out, "# cells {}, steps {steps}, completion {}", band.ring_size, band.completion_steps);
    for t in 0..=steps {
        if t > 0 {
            lat.step();
        }
        let row: String = lat
            .render_row()?
            .split(' ')
            .map(|cell| {
                let mut c = cell.chars();
                let block = match c.next() {
                    Some('1') => 'S',
                    Some('2') => 'G',
                    _ => '-',
                };
                std::iter::once(block).chain(c).collect::<String>()
            })
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "{t:>width$} | {row}");
    }
    Ok(out)
}

pub enum SynthesisResult {
    Found(String),
    Exhausted(ExhaustionReport),
}

pub fn cmd_synthesize(target: &str, limits: SearchLimits) -> Result<SynthesisResult, CliError> {
    let outcome = match target {
        "H" => compose_hadamard(limits),
        "TOFFOLI" => compose_toffoli(limits),
        other => return Err(CliError::Usage(format!("unknown synthesis target `{other}` (H or TOFFOLI)"))),
    };
    Ok(match outcome {
        SynthesisOutcome::Found(r) => SynthesisResult::Found(r.to_file().to_toml()),
        SynthesisOutcome::Exhausted(e) => SynthesisResult::Exhausted(e),
    })
}

pub fn load_circuit(text: &str) -> Result<GCircuit, CliError> {
    Ok(CircuitFile::parse_checked(text)?.1)
}

pub fn to_toml<T: Serialize>(value: &T) -> String {
    toml::to_string(value).expect("report serializes")
}
