//! Parallel training sweep and population simulation.

use std::io::Write;

use instrlearn_core::grammar::GrammarConfig;
use instrlearn_core::protocol::{ExperimentSpec, Session};
use instrlearn_core::seq2seq::{train_and_evaluate, Architecture, RunResult, Seq2SeqError, TrainConfig};
use instrlearn_core::simulator::{participant_id, participant_seed, simulate_session, SimError, SimulatedPopulation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Every `(architecture, seed)` run for seeds `0..n_seeds`, in parallel.
/// Results come back ordered by architecture, then seed, whatever the
/// thread count.
pub fn run_sweep(archs: &[Architecture], n_seeds: u64, tcfg: &TrainConfig) -> Result<Vec<RunResult>, Seq2SeqError> {
    let jobs: Vec<(&Architecture, u64)> = archs
        .iter()
        .flat_map(|a| (0..n_seeds).map(move |s| (a, s)))
        .collect();
    // Largest models first so the long runs start early.
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(cost(jobs[i].0)));
    let mut done: Vec<(usize, RunResult)> = order
        .into_par_iter()
        .map(|i| train_and_evaluate(jobs[i].0, jobs[i].1, tcfg).map(|r| (i, r)))
        .collect::<Result<_, _>>()?;
    done.sort_by_key(|(i, _)| *i);
    Ok(done.into_iter().map(|(_, r)| r).collect())
}

fn cost(a: &Architecture) -> usize {
    a.config.layers * a.config.hidden * a.config.hidden
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSummary {
    pub architecture: String,
    pub hidden: usize,
    pub runs: usize,
    pub mean_train_acc: f64,
    pub mean_test_acc: f64,
}

/// Means over seeds per `(architecture, hidden)`, in first-seen order.
pub fn summarize(results: &[RunResult]) -> Vec<ArchitectureSummary> {
    let mut out: Vec<ArchitectureSummary> = Vec::new();
    for r in results {
        let at = match out.iter().position(|s| s.architecture == r.architecture && s.hidden == r.hidden) {
            Some(i) => i,
            None => {
                out.push(ArchitectureSummary {
                    architecture: r.architecture.clone(),
                    hidden: r.hidden,
                    runs: 0,
                    mean_train_acc: 0.0,
                    mean_test_acc: 0.0,
                });
                out.len() - 1
            }
        };
        let s = &mut out[at];
        s.runs += 1;
        s.mean_train_acc += r.train_acc;
        s.mean_test_acc += r.test_acc;
    }
    for s in &mut out {
        s.mean_train_acc /= s.runs as f64;
        s.mean_test_acc /= s.runs as f64;
    }
    out
}

/// CSV with columns `architecture,hidden,seed,train_acc,test_acc`.
pub fn write_results_csv<W: Write>(w: W, results: &[RunResult]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in results {
        csv.serialize(r)?;
    }
    csv.flush().map_err(|e| crate::Error::io("<csv>", e))?;
    Ok(())
}

/// Same sessions as the sequential core simulator, computed in parallel.
pub fn simulate_population_par(
    spec: &ExperimentSpec,
    population: &SimulatedPopulation,
    cfg: &GrammarConfig,
) -> Result<Vec<Session>, SimError> {
    population.validate()?;
    let profiles: Vec<_> = population.participants().collect();
    profiles
        .par_iter()
        .map(|&(i, p)| simulate_session(spec, p, participant_id(i), participant_seed(population.seed, i), cfg))
        .collect()
}
