use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use log::debug;

use super::{RoutingSolver, SolverCapabilities};
use crate::error::{Error, Result};
use crate::instance::{write_instance, Instance, Solution};

/// Runs an external solver binary per subproblem.
///
/// The child is called as `program [args..] <instance> <fleet> <budget> <seed>`
/// and must print a solution document on stdout. A nonzero exit or a
/// timeout counts as failure.
#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
    /// Extra time granted beyond the budget before the child is killed.
    pub grace: Duration,
}

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalSolver {
            program: program.into(),
            args: Vec::new(),
            grace: Duration::from_secs(1),
        }
    }
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

struct TempFile(PathBuf);

impl Drop for TempFile {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

impl RoutingSolver for ExternalSolver {
    fn name(&self) -> &str {
        "external"
    }

    fn capabilities(&self) -> SolverCapabilities {
        SolverCapabilities {
            respects_budget: true,
            deterministic: false,
        }
    }

    fn solve(&self, instance: &Instance, fleet: usize, budget: Duration, seed: u64) -> Result<Solution> {
        let path = std::env::temp_dir().join(format!(
            "dri-{}-{}.txt",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let file = TempFile(path);
        std::fs::write(&file.0, write_instance(instance)).map_err(|e| Error::file(&file.0, e))?;

        let mut child = Command::new(&self.program)
            .args(&self.args)
            .arg(&file.0)
            .arg(fleet.to_string())
            .arg(format!("{}", budget.as_secs_f64()))
            .arg(seed.to_string())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::file(&self.program, e))?;
        let mut stdout = child.stdout.take().expect("stdout piped");
        let reader = thread::spawn(move || {
            let mut buf = String::new();
            stdout.read_to_string(&mut buf).map(|_| buf)
        });

        let deadline = Instant::now() + budget + self.grace;
        let status = loop {
            if let Some(status) = child.try_wait()? {
                break status;
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::InvalidConfig(format!(
                    "external solver {} exceeded its {:.1} s budget",
                    self.program.display(),
                    budget.as_secs_f64()
                )));
            }
            thread::sleep(Duration::from_millis(10));
        };
        let output = reader.join().map_err(|_| Error::InvalidConfig("solver output reader panicked".into()))??;
        if !status.success() {
            return Err(Error::InvalidConfig(format!(
                "external solver {} exited with {status}",
                self.program.display()
            )));
        }
        debug!("external solver returned {} bytes", output.len());
        let solution = Solution::from_json(instance, &output)?;
        if solution.fleet_size != fleet {
            let adjusted = instance.with_fleet_size(fleet)?;
            return Ok(solution.reevaluate(&adjusted));
        }
        Ok(solution)
    }
}
