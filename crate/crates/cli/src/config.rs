use std::path::PathBuf;

use clap::{Args, ValueEnum};
use symsign::analysis::{default_checkpoints, ZeroTol};
use symsign::arith::DEFAULT_MEM_CAP;
use symsign::qseries::{label_for_weight, weight_for_label, CUSP_FORMS};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// Built-in eigenform label (delta, delta_e4, delta_e6, delta_e4sq, delta_e4e6, delta_e4sqe6).
    #[arg(long, conflicts_with = "coeff_file")]
    pub form: Option<String>,

    /// Weight of the eigenform; selects the built-in form of that weight.
    #[arg(long)]
    pub weight: Option<u32>,

    /// Coefficient file in the `# eigenform` text format.
    #[arg(long)]
    pub coeff_file: Option<PathBuf>,

    /// Symmetric powers, comma separated.
    #[arg(long = "j", value_delimiter = ',', default_values_t = [2u32, 3, 4])]
    pub j: Vec<u32>,

    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub xmax: usize,

    /// Comma-separated ascending list; defaults to powers of two and powers of ten up to xmax.
    #[arg(long)]
    pub checkpoints: Option<String>,

    /// Prime bound for the Euler products.
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub pmax: usize,

    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,

    /// Values below 10^exp * d_(j+1)(m) in absolute value count as zero.
    #[arg(long, default_value_t = -10, allow_negative_numbers = true)]
    pub zero_tol_exp: i32,

    /// Output file (a directory for `report`); standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,

    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    /// Memory cap in bytes; accepts K, M and G suffixes.
    #[arg(long, value_parser = parse_bytes, default_value = "4G")]
    pub mem_cap: u64,
}

/// Integer flag that also accepts `1e6`-style values.
pub fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e18 => Ok(v as usize),
        _ => Err(format!("'{s}' is not a non-negative integer")),
    }
}

pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let (digits, mult) = match s.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&s[..s.len() - 1], 1u64 << 10),
        Some('M') => (&s[..s.len() - 1], 1 << 20),
        Some('G') => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    digits
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(mult))
        .ok_or_else(|| format!("'{s}' is not a byte count"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum FormSource {
    Builtin { label: String, weight: u32 },
    File(PathBuf),
}

/// Validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub form: FormSource,
    /// Weight requested on the command line, checked against a file header.
    pub weight: Option<u32>,
    pub j_list: Vec<u32>,
    pub x_max: usize,
    pub checkpoints: Vec<usize>,
    pub p_max: u64,
    pub eps: f64,
    pub zero_tol: ZeroTol,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: usize,
    pub mem_cap: u64,
}

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn check_weight(k: u32) -> CliResult<&'static str> {
    if k % 2 == 1 {
        return usage(format!(
            "weight {k} is odd; eigenforms of level 1 have even weight"
        ));
    }
    label_for_weight(k).ok_or_else(|| {
        let ks: Vec<String> = CUSP_FORMS.iter().map(|(k, _)| k.to_string()).collect();
        CliError::Usage(format!(
            "no built-in eigenform of weight {k}; supported weights are {}",
            ks.join(", ")
        ))
    })
}

fn parse_checkpoints(s: &str) -> CliResult<Vec<usize>> {
    let v = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_count(t).map_err(CliError::Usage))
        .collect::<CliResult<Vec<_>>>()?;
    if v.is_empty() {
        return usage("empty checkpoint list");
    }
    Ok(v)
}

impl RunConfig {
    pub fn from_args(a: &CommonArgs) -> CliResult<Self> {
        let form = match (&a.form, &a.coeff_file, a.weight) {
            (_, Some(path), w) => {
                if let Some(k) = w {
                    if k % 2 == 1 {
                        return usage(format!("weight {k} is odd"));
                    }
                }
                FormSource::File(path.clone())
            }
            (Some(label), None, w) => {
                let Some(k) = weight_for_label(label) else {
                    let ls: Vec<&str> = CUSP_FORMS.iter().map(|(_, l)| *l).collect();
                    return usage(format!(
                        "unknown form '{label}'; built-in forms are {}",
                        ls.join(", ")
                    ));
                };
                if let Some(w) = w {
                    check_weight(w)?;
                    if w != k {
                        return usage(format!("form '{label}' has weight {k}, not {w}"));
                    }
                }
                FormSource::Builtin {
                    label: label.clone(),
                    weight: k,
                }
            }
            (None, None, Some(k)) => FormSource::Builtin {
                label: check_weight(k)?.to_string(),
                weight: k,
            },
            (None, None, None) => FormSource::Builtin {
                label: "delta".into(),
                weight: 12,
            },
        };
        if a.j.is_empty() {
            return usage("empty j list");
        }
        let mut seen = a.j.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return usage("repeated value in the j list");
        }
        if a.xmax < 2 {
            return usage("xmax must be at least 2");
        }
        if a.pmax < 2 {
            return usage("pmax must be at least 2");
        }
        if !(a.eps > 0.0 && a.eps.is_finite()) {
            return usage(format!("eps = {} must be positive", a.eps));
        }
        let checkpoints = match &a.checkpoints {
            Some(s) => parse_checkpoints(s)?,
            None => default_checkpoints(a.xmax),
        };
        if checkpoints[0] < 2 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return usage("checkpoints must be at least 2 and strictly ascending");
        }
        if *checkpoints.last().unwrap() > a.xmax {
            return usage(format!("checkpoints exceed xmax = {}", a.xmax));
        }
        Ok(RunConfig {
            form,
            weight: a.weight,
            j_list: a.j.clone(),
            x_max: a.xmax,
            checkpoints,
            p_max: a.pmax as u64,
            eps: a.eps,
            zero_tol: ZeroTol {
                exponent: a.zero_tol_exp,
            },
            out: a.out.clone(),
            format: a.format,
            threads: a.threads,
            mem_cap: a.mem_cap,
        })
    }

    /// Size of the tables a command over `x_max` and `p_max` needs.
    pub fn table_size(&self) -> usize {
        self.x_max.max(self.p_max as usize)
    }

    /// One-line description of everything that determines the output.
    /// Thread count and output path are left out so that runs differing
    /// only in those produce identical files.
    pub fn echo(&self, command: &str) -> String {
        let form = match &self.form {
            FormSource::Builtin { label, weight } => format!("form={label} weight={weight}"),
            FormSource::File(p) => format!("coeff_file={}", p.display()),
        };
        let js: Vec<String> = self.j_list.iter().map(u32::to_string).collect();
        let cps: Vec<String> = self.checkpoints.iter().map(usize::to_string).collect();
        format!(
            "symsign {command} {form} j={} xmax={} checkpoints={} pmax={} eps={} zero_tol_exp={} mem_cap={}",
            js.join(","),
            self.x_max,
            cps.join(","),
            self.p_max,
            self.eps,
            self.zero_tol.exponent,
            self.mem_cap
        )
    }
}

impl Default for CommonArgs {
    fn default() -> Self {
        CommonArgs {
            form: None,
            weight: None,
            coeff_file: None,
            j: vec![2, 3, 4],
            xmax: 1_000_000,
            checkpoints: None,
            pmax: 100_000,
            eps: 0.1,
            zero_tol_exp: -10,
            out: None,
            format: None,
            threads: 0,
            mem_cap: DEFAULT_MEM_CAP,
        }
    }
}
