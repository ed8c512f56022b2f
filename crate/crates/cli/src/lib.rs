//! Scenario runner behind the `timebin` binary.
//!
//! Each scenario simulates (or reads) data, runs the reconstruction and
//! writes its artifacts into an output directory. Numbers are rounded to 12
//! significant digits so reruns with the same seed are byte-identical.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use log::info;
use serde_json::{json, Map, Value};

use timebin::expsim::{NoiseConfig, SimulatedRun, SimulationOptions};
use timebin::metrics::{process_fidelity, GateReport};
use timebin::pipeline::{
    bootstrap_qpt, compensate, run_cnot_tables, run_entangle, run_qpt, run_single_qubit_qst,
    QptAnalysis, QptMethod,
};
use timebin::qcore::json::round_sig;
use timebin::qcore::{ComplexMatrix, MatrixJson};
use timebin::tomo::{
    read_counts, write_counts, LabeledCount, MleOptions, ProcessMatrix, ProjectorSet,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioName {
    IdealQpt,
    NoisyQpt,
    Entangle,
    CnotTable,
    QstSingle,
    Deconvolve,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        Self::IdealQpt,
        Self::NoisyQpt,
        Self::Entangle,
        Self::CnotTable,
        Self::QstSingle,
        Self::Deconvolve,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::IdealQpt => "ideal-qpt",
            Self::NoisyQpt => "noisy-qpt",
            Self::Entangle => "entangle",
            Self::CnotTable => "cnot-table",
            Self::QstSingle => "qst-single",
            Self::Deconvolve => "deconvolve",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .with_context(|| format!("unknown scenario `{s}`"))
    }
}

/// Everything a scenario run needs.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: ScenarioName,
    /// Noise configuration file (JSON, or TOML by extension); defaults apply
    /// when absent.
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    /// Overrides the seed from the configuration file.
    pub seed: Option<u64>,
    pub exact: bool,
    pub duration_s: f64,
    pub bootstrap: usize,
    pub qpt_method: QptMethod,
    pub minimal_projectors: bool,
    /// χ̃ and χ_input files for the deconvolve scenario.
    pub total_chi: Option<PathBuf>,
    pub input_chi: Option<PathBuf>,
}

impl Scenario {
    pub fn new(name: ScenarioName, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            name,
            config_path: None,
            out_dir: out_dir.into(),
            seed: None,
            exact: false,
            duration_s: SimulationOptions::default().duration_s,
            bootstrap: 100,
            qpt_method: QptMethod::default(),
            minimal_projectors: false,
            total_chi: None,
            input_chi: None,
        }
    }

    pub fn noise_config(&self) -> Result<NoiseConfig> {
        let mut config = match &self.config_path {
            Some(p) => {
                NoiseConfig::load(p).with_context(|| format!("reading config {}", p.display()))?
            }
            None => NoiseConfig::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }

    fn simulation(&self) -> Result<SimulationOptions> {
        if !(self.duration_s.is_finite() && self.duration_s >= 0.0) {
            bail!(
                "duration must be a non-negative number of seconds, got {}",
                self.duration_s
            );
        }
        Ok(SimulationOptions {
            duration_s: self.duration_s,
            exact: self.exact,
            minimal_projectors: self.minimal_projectors,
        })
    }
}

/// Reads a count CSV file with strict validation.
pub fn ingest_counts(path: &Path) -> Result<Vec<LabeledCount>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_counts(file).with_context(|| format!("reading {}", path.display()))
}

/// Runs a scenario and reports the files it wrote.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioOutput> {
    fs::create_dir_all(&s.out_dir).with_context(|| format!("creating {}", s.out_dir.display()))?;
    let mut out = Emitter::new(&s.out_dir);
    info!("running scenario {}", s.name);
    match s.name {
        ScenarioName::IdealQpt => ideal_qpt(s, &mut out)?,
        ScenarioName::NoisyQpt => noisy_qpt(s, &mut out)?,
        ScenarioName::Entangle => entangle(s, &mut out)?,
        ScenarioName::CnotTable => cnot_table(s, &mut out)?,
        ScenarioName::QstSingle => qst_single(s, &mut out)?,
        ScenarioName::Deconvolve => deconvolve(s, &mut out)?,
    }
    info!(
        "wrote {} files to {}",
        out.written.len(),
        s.out_dir.display()
    );
    Ok(ScenarioOutput {
        files: out.written,
        summary: out.notes,
    })
}

/// Files written by a scenario and a short human-readable summary.
#[derive(Clone, Debug, Default)]
pub struct ScenarioOutput {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Emitter {
    dir: PathBuf,
    written: Vec<PathBuf>,
    notes: Vec<String>,
}

impl Emitter {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn note(&mut self, line: String) {
        self.notes.push(line);
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(
            File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        f.write_all(body.as_bytes())?;
        if !body.ends_with('\n') {
            f.write_all(b"\n")?;
        }
        f.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        self.text(name, &serde_json::to_string_pretty(v)?)
    }

    fn matrix(&mut self, name: &str, m: MatrixJson) -> Result<()> {
        self.text(name, &m.to_string_pretty())
    }

    fn counts(&mut self, name: &str, rows: &[LabeledCount]) -> Result<()> {
        let mut buf = Vec::new();
        write_counts(&mut buf, rows)?;
        self.text(name, std::str::from_utf8(&buf)?)
    }
}

fn num(x: f64) -> Value {
    json!(round_sig(x))
}

fn report_value(report: &GateReport) -> Result<Map<String, Value>> {
    match serde_json::from_str(&report.to_json())? {
        Value::Object(m) => Ok(m),
        _ => bail!("gate report did not serialise to an object"),
    }
}

fn state_json(m: &ComplexMatrix) -> MatrixJson {
    let n = (m.rows() as f64).log2().round() as usize;
    let labels = (0..m.rows())
        .map(|i| {
            (0..n)
                .map(|q| {
                    if (i >> (n - 1 - q)) & 1 == 0 {
                        "t1"
                    } else {
                        "t2"
                    }
                })
                .collect::<Vec<_>>()
                .join(":")
        })
        .collect();
    MatrixJson::from_matrix(m).with_basis(labels)
}

fn file_stem(label: &str) -> String {
    label.replace(':', "_")
}

fn all_counts(runs: &[SimulatedRun], projs: &ProjectorSet) -> Vec<LabeledCount> {
    runs.iter().flat_map(|r| r.labeled_counts(projs)).collect()
}

/// χ bar-chart values, one row per element.
fn chi_bars(p: &ProcessMatrix) -> String {
    let labels = p.basis().labels();
    let mut s = String::from("row,col,re,im\n");
    for (i, a) in labels.iter().enumerate() {
        for (j, b) in labels.iter().enumerate() {
            let v = p.chi()[(i, j)];
            s.push_str(&format!(
                "{a},{b},{},{}\n",
                round_sig(v.re),
                round_sig(v.im)
            ));
        }
    }
    s
}

fn ideal_qpt(s: &Scenario, out: &mut Emitter) -> Result<()> {
    // the ideal gate under infinite statistics, whatever the noise settings
    let config = NoiseConfig::noiseless().with_seed(s.noise_config()?.seed);
    let sim = SimulationOptions {
        exact: true,
        ..s.simulation()?
    };
    let (data, a) = run_qpt(&config, &sim, s.qpt_method)?;
    out.matrix("chi.json", a.chi_raw.process.to_json())?;
    out.text("chi_bars.csv", &chi_bars(&a.chi_raw.process))?;
    let report = GateReport::from_process_fidelity(a.raw_fidelity)?;
    out.json("report.json", &Value::Object(report_value(&report)?))?;
    out.counts("counts.csv", &all_counts(&data.runs, &data.projectors))?;
    out.note(format!("ideal-qpt: F_p = {:.10}", a.raw_fidelity));
    Ok(())
}

fn qpt_report(
    a: &QptAnalysis,
    raw_std: Option<f64>,
    cphase_std: Option<f64>,
    replicas: usize,
) -> Result<Value> {
    let mut report = GateReport::from_process_fidelity(a.cphase_fidelity)?;
    if let Some(std) = cphase_std {
        report = report.with_uncertainty(std);
    }
    let mut m = report_value(&report)?;
    m.insert("raw_process_fidelity".into(), num(a.raw_fidelity));
    m.insert("input_process_fidelity".into(), num(a.input_fidelity));
    m.insert(
        "compensated_process_fidelity".into(),
        num(a.cphase_fidelity),
    );
    if let Some(std) = raw_std {
        m.insert("raw_process_fidelity_std".into(), num(std));
    }
    m.insert("bootstrap_replicas".into(), json!(replicas));
    Ok(Value::Object(m))
}

fn noisy_qpt(s: &Scenario, out: &mut Emitter) -> Result<()> {
    let config = s.noise_config()?;
    let sim = s.simulation()?;
    let (data, a) = run_qpt(&config, &sim, s.qpt_method)?;
    let replicas = if s.exact { 0 } else { s.bootstrap };
    let (raw_std, cp_std) = if replicas > 0 {
        info!("bootstrap with {replicas} replicas");
        let b = bootstrap_qpt(
            &data,
            replicas,
            config.seed,
            &MleOptions::default(),
            s.qpt_method,
        )?;
        (Some(b.raw_std()), Some(b.cphase_std()))
    } else {
        (None, None)
    };
    out.matrix("chi_raw.json", a.chi_raw.process.to_json())?;
    out.matrix("chi_input.json", a.chi_input.to_json())?;
    out.matrix("chi_cphase.json", a.chi_cphase.to_json())?;
    out.text("chi_raw_bars.csv", &chi_bars(&a.chi_raw.process))?;
    out.text("chi_cphase_bars.csv", &chi_bars(&a.chi_cphase))?;
    out.json("report.json", &qpt_report(&a, raw_std, cp_std, replicas)?)?;
    out.json("config.json", &serde_json::from_str(&config.to_json())?)?;
    out.counts("counts.csv", &all_counts(&data.runs, &data.projectors))?;
    let single = ProjectorSet::overcomplete(1)?;
    let mut inputs = all_counts(&data.chars.control, &single);
    inputs.extend(all_counts(&data.chars.target, &single));
    out.counts("input_counts.csv", &inputs)?;
    out.note(format!(
        "noisy-qpt: raw F_p = {:.4}, F_input = {:.4}, compensated F_p = {:.4}",
        a.raw_fidelity, a.input_fidelity, a.cphase_fidelity
    ));
    Ok(())
}

fn entangle(s: &Scenario, out: &mut Emitter) -> Result<()> {
    let config = s.noise_config()?;
    let sim = s.simulation()?;
    let outputs = run_entangle(&config, &sim)?;
    let mut rows = Vec::new();
    for o in &outputs {
        let label = o.input.to_string();
        out.matrix(
            &format!("rho_{}.json", file_stem(&label)),
            state_json(o.state.matrix()),
        )?;
        rows.push(json!({"input": label, "fidelity": num(o.fidelity), "chsh_max": num(o.chsh)}));
        out.note(format!(
            "entangle {label}: F = {:.6}, CHSH = {:.6}",
            o.fidelity, o.chsh
        ));
    }
    out.json("entangle.json", &json!({ "outputs": rows }))
}

fn table_csv(rows: &mut String, basis: &str, table: &[[f64; 4]; 4], counts: &[[u64; 4]; 4]) {
    for i in 0..4 {
        for j in 0..4 {
            rows.push_str(&format!(
                "{basis},{i},{j},{},{}\n",
                round_sig(table[i][j]),
                counts[i][j]
            ));
        }
    }
}

fn cnot_table(s: &Scenario, out: &mut Emitter) -> Result<()> {
    let config = s.noise_config()?;
    let sim = s.simulation()?;
    let c = run_cnot_tables(&config, &sim)?;
    let mut csv = String::from("basis,input,outcome,probability,counts\n");
    table_csv(&mut csv, "zz", &c.zz, &c.zz_counts);
    table_csv(&mut csv, "xx", &c.xx, &c.xx_counts);
    out.text("truth_tables.csv", &csv)?;
    let round = |t: &[[f64; 4]; 4]| -> Vec<Vec<f64>> {
        t.iter()
            .map(|r| r.iter().map(|&x| round_sig(x)).collect())
            .collect()
    };
    let mut m = report_value(&c.report()?)?;
    m.insert("zz_table".into(), json!(round(&c.zz)));
    m.insert("xx_table".into(), json!(round(&c.xx)));
    out.json("report.json", &Value::Object(m))?;
    out.note(format!(
        "cnot-table: F_zz = {:.4}, F_xx = {:.4}, {:.4} <= F_CNOT <= {:.4}",
        c.fidelity_zz, c.fidelity_xx, c.bounds.0, c.bounds.1
    ));
    Ok(())
}

fn qst_single(s: &Scenario, out: &mut Emitter) -> Result<()> {
    let config = s.noise_config()?;
    let sim = s.simulation()?;
    let states = run_single_qubit_qst(&config, &sim)?;
    let mut rows = Vec::new();
    for st in &states {
        out.matrix(
            &format!("rho_{}.json", st.ket.label()),
            state_json(st.state.matrix()),
        )?;
        rows.push(json!({"state": st.ket.label(), "fidelity": num(st.fidelity)}));
        out.note(format!(
            "qst-single {}: F = {:.6}",
            st.ket.label(),
            st.fidelity
        ));
    }
    out.json("qst_single.json", &json!({ "states": rows }))
}

fn read_process(path: &Path) -> Result<ProcessMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m = MatrixJson::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    ProcessMatrix::from_json(&m).with_context(|| format!("loading χ from {}", path.display()))
}

fn deconvolve(s: &Scenario, out: &mut Emitter) -> Result<()> {
    let (Some(total), Some(input)) = (&s.total_chi, &s.input_chi) else {
        bail!("deconvolve needs --total <chi.json> and --input <chi_input.json>");
    };
    let total = read_process(total)?;
    let input = read_process(input)?;
    let gate = compensate(&total, &input)?;
    let ideal = ProcessMatrix::cphase_ideal();
    let f = process_fidelity(&gate, &ideal)?;
    out.matrix("chi_cphase.json", gate.to_json())?;
    let mut m = report_value(&GateReport::from_process_fidelity(f)?)?;
    m.insert(
        "raw_process_fidelity".into(),
        num(process_fidelity(&total, &ideal)?),
    );
    m.insert(
        "input_process_fidelity".into(),
        num(process_fidelity(&input, &ideal)?),
    );
    m.insert("compensated_process_fidelity".into(), num(f));
    out.json("report.json", &Value::Object(m))?;
    out.note(format!("deconvolve: compensated F_p = {f:.6}"));
    Ok(())
}
