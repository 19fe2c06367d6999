use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use scnn_core::harness::{self, ExperimentSpec, RatePoint, Trace};
use scnn_core::protocol::{self, InputEvent, Packet, SpikeSlot};

#[derive(Parser)]
#[command(name = "scnn", version, about = "Switched-capacitor neuromorphic array emulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment description file.
    Run {
        spec: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a built-in experiment.
    Experiment {
        name: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Print the description as INI instead of running it.
        #[arg(long)]
        print_spec: bool,
    },
    /// Fit a two-column CSV (header row required).
    Fit {
        kind: FitKind,
        csv: PathBuf,
        /// Zero-based x column.
        #[arg(long, default_value_t = 0)]
        x: usize,
        /// Zero-based y column.
        #[arg(long, default_value_t = 1)]
        y: usize,
        /// Restrict a linear fit to y values in [LO, HI].
        #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
        output_window: Option<Vec<f64>>,
    },
    /// Encode or decode host packets.
    Codec {
        #[command(subcommand)]
        op: CodecOp,
    },
    /// List built-in experiments.
    ListExperiments,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitKind {
    Exp,
    Linear,
}

#[derive(Subcommand)]
enum CodecOp {
    /// Encode events ("spike 5 7", "write 0x800 61", "read 0xa00"), given
    /// inline or one per line in a file.
    Encode {
        input: String,
        /// Write binary packets to this file instead of printing hex.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode packets from hex or from a binary packet file.
    Decode {
        input: String,
        /// Decode as device-to-host packets.
        #[arg(long)]
        output: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { spec, out } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut s = ExperimentSpec::parse(&text)?;
            s.apply_env()?;
            run(&s, &out)
        }
        Command::Experiment { name, out, print_spec } => {
            let Some(mut s) = harness::builtin(&name) else {
                bail!("unknown experiment '{name}'; see list-experiments");
            };
            s.apply_env()?;
            if print_spec {
                print!("{}", s.to_ini());
                return Ok(());
            }
            run(&s, &out)
        }
        Command::Fit { kind, csv, x, y, output_window } => fit(kind, &csv, x, y, output_window),
        Command::Codec { op } => codec(op),
        Command::ListExperiments => {
            for (name, description) in harness::BUILTIN_NAMES {
                println!("{name:<20} {description}");
            }
            Ok(())
        }
    }
}

fn run(spec: &ExperimentSpec, out: &Path) -> Result<()> {
    let result = harness::run_experiment(spec)?;
    print!("{}", result.summary());
    for f in result.write_artifacts(out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn read_columns(path: &Path, x: usize, y: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| -> Result<f64> {
            let field = rec.get(c).with_context(|| format!("row {}: missing column {c}", i + 2))?;
            field.trim().parse().with_context(|| format!("row {}: bad number '{field}'", i + 2))
        };
        xs.push(get(x)?);
        ys.push(get(y)?);
    }
    Ok((xs, ys))
}

fn fit(kind: FitKind, path: &Path, x: usize, y: usize, window: Option<Vec<f64>>) -> Result<()> {
    let (xs, ys) = read_columns(path, x, y)?;
    match kind {
        FitKind::Exp => {
            let f = harness::fit_exponential(&Trace::new(xs, ys)?)?;
            println!("amplitude {:.6}\ntau {:.6}", f.amplitude, f.tau_ms);
        }
        FitKind::Linear => {
            let f = match window {
                Some(w) => {
                    let pts: Vec<RatePoint> =
                        xs.iter().zip(&ys).map(|(&input_hz, &output_hz)| RatePoint { input_hz, output_hz }).collect();
                    harness::fit_linear_window(&pts, w[0], w[1])?
                }
                None => harness::fit_line(&xs, &ys)?,
            };
            println!("slope {:.8}\nintercept {:.8}\nr2 {:.8}\npoints {}", f.slope, f.intercept, f.r2, f.n);
            if let Ok(onset) = harness::onset_of(&f) {
                println!("x_intercept {onset:.6}");
            }
        }
    }
    Ok(())
}

fn parse_num(s: &str) -> Result<u32> {
    Ok(match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => u32::from_str_radix(h, 16)?,
        None => s.parse()?,
    })
}

fn parse_event(line: &str) -> Result<InputEvent> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    Ok(match toks.as_slice() {
        ["spike", rows @ ..] if (1..=4).contains(&rows.len()) => {
            let mut slots = [SpikeSlot::default(); 4];
            for (slot, r) in slots.iter_mut().zip(rows) {
                *slot = SpikeSlot::new(u8::try_from(parse_num(r)?)?, true)?;
            }
            InputEvent::Spikes(slots)
        }
        ["write", addr, value] => InputEvent::ConfigWrite { addr: u16::try_from(parse_num(addr)?)?, value: parse_num(value)? },
        ["read", addr] => InputEvent::ConfigRead { addr: u16::try_from(parse_num(addr)?)? },
        _ => bail!("cannot parse event '{line}'"),
    })
}

fn codec(op: CodecOp) -> Result<()> {
    match op {
        CodecOp::Encode { input, out } => {
            let text = if Path::new(&input).is_file() { fs::read_to_string(&input)? } else { input };
            let packets = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| Ok(protocol::encode_input(&parse_event(l)?)?))
                .collect::<Result<Vec<Packet>>>()?;
            match out {
                Some(path) => protocol::write_pkt_file(&path, &packets)?,
                None => packets.iter().for_each(|p| println!("{}", p.to_hex())),
            }
        }
        CodecOp::Decode { input, output } => {
            let packets = if Path::new(&input).is_file() {
                protocol::read_pkt_file(&input)?
            } else {
                let hex: String = input.chars().filter(|c| !c.is_whitespace()).collect();
                if hex.is_empty() || hex.len() % 12 != 0 {
                    bail!("hex input must be a multiple of 12 digits");
                }
                (0..hex.len()).step_by(12).map(|i| Packet::from_hex(&hex[i..i + 12])).collect::<Result<_, _>>()?
            };
            for p in packets {
                if output {
                    println!("{} {:?}", p.to_hex(), protocol::decode_output(p)?);
                } else {
                    println!("{} {:?}", p.to_hex(), protocol::decode_packet(p)?);
                }
            }
        }
    }
    Ok(())
}
