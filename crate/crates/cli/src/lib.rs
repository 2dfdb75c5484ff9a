//! Command-line front end for the kink experiments.

pub mod config;
pub mod experiments;
pub mod plotdata;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use config::{parse_args, Experiment, ExperimentConfig, Format, Invocation};
use experiments::{Outcome, RunError};
use plotdata::emit_plotdata;

pub const USAGE: &str = "\
usage: xxzkink <experiment> [--config FILE] [--key value]... [--out PATH] [--format csv|json] [--seed N]
       xxzkink --list | --help

Config files hold `key = value` lines (# starts a comment); flags override them.
The artifact goes to --out (or stdout), the one-line summary to stderr.
Exit status: 0 check passed, 1 check failed or numerical failure, 2 usage error.
XXZKINK_THREADS sets the worker pool size.

CSV schemas:
  ground-state       m,x,sz
  gap-scan           L,gap
  scaling            lambda,error,bound
  correction         lambda,error_leading,error_corrected,ratio
  graphs             n,count,expected
  iterated-integral  instance,n,lambda,t,closed_re,closed_im,quadrature_re,quadrature_im,relative_error
  stark-spectrum     m,eigenvalue,residual
  kernel-check       t,kernel_error,unitarity_error,periodicity_error
  profile            t,x,value,component   (plus <out>_t<k>.csv per snapshot)
  profile-limit      v,m3_extrapolated,kappa_fit_local
  transverse         quantity,v,t,value
  zd-spectrum        quantity,value
";

fn list_text() -> String {
    let mut s = String::new();
    for e in Experiment::ALL {
        s.push_str(&format!("{:<18} {}\n", e.name(), experiments::keys(e).join(" ")));
    }
    s
}

/// Path of an extra artifact: `dir/stem_suffix.csv`.
fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn write_artifacts(cfg: &ExperimentConfig, o: &Outcome, stdout: &mut dyn Write) -> std::io::Result<()> {
    let mut body = Vec::new();
    match cfg.format {
        Format::Csv => emit_plotdata(&o.table, &mut body)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut body, &o.json)?;
            body.push(b'\n');
        }
    }
    match &cfg.out {
        Some(path) => {
            fs::write(path, &body)?;
            if cfg.format == Format::Csv {
                for (suffix, t) in &o.extra {
                    emit_plotdata(t, fs::File::create(sibling(path, suffix))?)?;
                }
            }
        }
        None => stdout.write_all(&body)?,
    }
    Ok(())
}

/// Runs one invocation and returns the process exit code.
pub fn run_main<I: IntoIterator<Item = String>>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let inv = match parse_args(args) {
        Ok(i) => i,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}\n\n{USAGE}");
            return 2;
        }
    };
    let cfg = match inv {
        Invocation::Help => {
            let _ = write!(stdout, "{USAGE}\nexperiments and keys:\n{}", list_text());
            return 0;
        }
        Invocation::List => {
            let _ = write!(stdout, "{}", list_text());
            return 0;
        }
        Invocation::Run(cfg) => cfg,
    };
    let outcome = experiments::run(&cfg).and_then(|o| {
        write_artifacts(&cfg, &o, stdout)?;
        Ok::<_, RunError>(o)
    });
    match outcome {
        Ok(o) => {
            let _ = writeln!(stderr, "{}", o.summary);
            if o.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
