use std::process::{Command, Output};

use proptest::prelude::*;

use upqca::compiler::{GCircuit, Gate};
use upqca_cli::formats::{BandFile, CircuitFile};

fn upqca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_upqca")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gate(wires: usize) -> impl Strategy<Value = Gate> {
    let distinct = move |k: usize| prop::sample::subsequence((0..wires).collect::<Vec<_>>(), k).prop_shuffle();
    prop_oneof![
        distinct(2).prop_map(|w| Gate::G { control: w[0], target: w[1] }),
        distinct(1).prop_map(|w| Gate::H { wire: w[0] }),
        distinct(3).prop_map(|w| Gate::Toffoli { controls: [w[0], w[1]], target: w[2] }),
    ]
}

fn circuit() -> impl Strategy<Value = GCircuit> {
    (3usize..7).prop_flat_map(|n| prop::collection::vec(gate(n), 0..12).prop_map(move |g| GCircuit::from_gates(n, g).unwrap()))
}

proptest! {
    #[test]
    fn circuit_file_round_trips(c in circuit()) {
        let file = CircuitFile::from_circuit(&c);
        let text = file.to_text();
        let parsed = CircuitFile::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &file);
        prop_assert_eq!(parsed.to_text(), text);
        prop_assert_eq!(parsed.to_circuit().unwrap(), c);
    }

    #[test]
    fn band_file_round_trips(digits in prop::collection::vec(0u8..3, 0..30), origin in -50i64..0, slots in prop::collection::vec(0i64..200, 1..5)) {
        let len = digits.len() / 3 * 3;
        let band = BandFile {
            digits: digits[..len].iter().map(|d| char::from(b'0' + d)).collect(),
            origin,
            data_extent: 12,
            ring_size: 40,
            completion_steps: 17,
            data_base: -3,
            pointer_slot: 5,
            wire_slots: slots,
            ancillas: vec![1],
        };
        let text = band.to_text();
        let parsed = BandFile::parse(&text).unwrap();
        prop_assert_eq!(&parsed, &band);
        prop_assert_eq!(parsed.to_text(), text);
    }
}

#[test]
fn compile_empty_circuit() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("empty.toml");
    std::fs::write(&c, "wires = 2\n").unwrap();
    let out = upqca(&["compile", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("digits = \"\"\n"), "{text}");
    assert!(text.contains("time_qca = 0"), "{text}");
}

#[test]
fn run_tables_agree_across_levels() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("g.toml");
    std::fs::write(&c, "wires = 2\n\n[[gates]]\ntype = \"G\"\noperands = [0, 1]\n").unwrap();
    let c = c.to_str().unwrap();
    let gate = stdout(&upqca(&["run", c, "--level", "gate", "--input", "10"]));
    assert_eq!(gate, "outcome  probability\n10       0.500000000000\n11       0.500000000000\n");
    for level in ["ccqca", "nn", "qca"] {
        assert_eq!(stdout(&upqca(&["run", c, "--level", level, "--input", "10"])), gate, "{level}");
    }
    let faithful = upqca(&["run", c, "--level", "qca", "--mode", "faithful", "--input", "10"]);
    assert_eq!(faithful.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&faithful.stderr).contains("at least"));
    let bad_input = upqca(&["run", c, "--input", "1"]);
    assert_eq!(bad_input.status.code(), Some(2));
}

#[test]
fn trace_examples() {
    let dir = tempfile::tempdir().unwrap();
    let band = |digits: &str| BandFile {
        digits: digits.into(),
        origin: -1,
        data_extent: 6,
        ring_size: 10,
        completion_steps: 2,
        data_base: 0,
        pointer_slot: 2,
        wire_slots: vec![3],
        ancillas: vec![],
    };
    let empty = dir.path().join("empty.toml");
    std::fs::write(&empty, band("").to_text()).unwrap();
    let text = stdout(&upqca(&["trace", empty.to_str().unwrap(), "--input", "1", "--steps", "4"]));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| !r.contains('S') && !r.contains('G')), "{text}");
    assert!(rows.iter().all(|r| r.matches('1').count() >= 2), "{text}");

    let swap = dir.path().join("swap.toml");
    std::fs::write(&swap, band("100").to_text()).unwrap();
    let args = ["trace", swap.to_str().unwrap(), "--input", "1", "--steps", "6"];
    let text = stdout(&upqca(&args));
    for row in text.lines().skip(1) {
        assert_eq!(row.matches('S').count(), 1, "{row}");
    }
    assert_eq!(text, stdout(&upqca(&args)));
    let over = upqca(&["trace", swap.to_str().unwrap(), "--steps", "1000"]);
    assert_eq!(over.status.code(), Some(2));
}

#[test]
fn malformed_band_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let b = dir.path().join("b.toml");
    std::fs::write(&b, "digits = \"10\"\norigin = -1\n").unwrap();
    let out = upqca(&["trace", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data_extent"));
}

#[test]
fn verify_rejects_too_many_wires() {
    let out = upqca(&["verify", "--max-wires", "7", "--seeds", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap of 6"));
}

#[test]
fn resources_and_named_gates() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("h.toml");
    std::fs::write(&c, "wires = 1\n\n[[gates]]\ntype = \"H\"\noperands = [0]\n").unwrap();
    let out = upqca(&["resources", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("time_qgc = 5"), "{text}");
    assert!(text.contains("space_qgc = 2"), "{text}");
    let table = stdout(&upqca(&["run", c.to_str().unwrap(), "--level", "qca"]));
    assert_eq!(table, "outcome  probability\n0        0.500000000000\n1        0.500000000000\n");
}

#[test]
fn synthesize_reproduces_hadamard_fixture() {
    let out = upqca(&["synthesize", "H"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), upqca::universal::HADAMARD_FIXTURE);
}
