use std::thread;
use std::time::Instant;

use log::{debug, info};

use super::history::RoundRecord;
use super::node::NodeState;
use super::{CollabConfig, Scheme, TransportKind};
use crate::dataset::Dataset;
use crate::dbn::{Architecture, DbnModel};
use crate::error::{Error, Result};
use crate::eval::evaluate_model;
use crate::transport::{loopback_mesh, InProcessBus, Transport};

/// Models and convergence history of one training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub scheme: Scheme,
    /// Node labels matching `models`; the centralized model is node 0.
    pub nodes: Vec<u16>,
    pub models: Vec<DbnModel>,
    pub history: Vec<RoundRecord>,
}

impl TrainOutcome {
    pub fn iterations(&self) -> u32 {
        self.history.last().map_or(0, |r| r.iteration)
    }
}

fn check_datasets(datasets: &[Dataset], config: &CollabConfig) -> Result<Architecture> {
    config.validate()?;
    if datasets.len() != config.nodes {
        return Err(Error::config(format!(
            "{} datasets supplied for {} nodes",
            datasets.len(),
            config.nodes
        )));
    }
    let first = &datasets[0];
    for (i, d) in datasets.iter().enumerate() {
        if d.feature_dim() != first.feature_dim() || d.classes() != first.classes() {
            return Err(Error::shape(format!(
                "node {} data is {}-dimensional with {} classes, node 1 data is {}-dimensional with {} classes",
                i + 1,
                d.feature_dim(),
                d.classes(),
                first.feature_dim(),
                first.classes()
            )));
        }
    }
    config.train.architecture(first.feature_dim(), first.classes())
}

/// Evaluation cadence and the optional plateau stop.
struct Monitor<'a> {
    eval: Option<&'a Dataset>,
    config: &'a CollabConfig,
    budget: u32,
}

impl Monitor<'_> {
    fn accuracy(&self, iteration: u32, models: &[&DbnModel]) -> Result<Option<Vec<f64>>> {
        let Some(eval) = self.eval else { return Ok(None) };
        let every = self.config.eval_every;
        if every == 0 || (!iteration.is_multiple_of(every) && iteration != self.budget) {
            return Ok(None);
        }
        models
            .iter()
            .map(|m| evaluate_model(m, eval)?.accuracy())
            .collect::<Result<Vec<f64>>>()
            .map(Some)
    }

    fn plateaued(&self, history: &[RoundRecord]) -> bool {
        let Some(rule) = self.config.plateau else { return false };
        let Some(last) = history.last() else { return false };
        if last.accuracy.is_none() || last.iteration < rule.window {
            return false;
        }
        let from = last.iteration - rule.window;
        let window: Vec<f64> = history
            .iter()
            .rev()
            .take_while(|r| r.iteration >= from)
            .filter_map(RoundRecord::mean_accuracy)
            .collect();
        if window.len() < 2 || history.iter().all(|r| r.iteration > from || r.accuracy.is_none()) {
            return false;
        }
        let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo < rule.min_delta
    }
}

/// Runs iterations until the budget or a plateau. `step` advances every
/// state by one iteration and returns the batch losses.
fn drive<F>(
    states: &mut [NodeState],
    labels: Vec<u16>,
    config: &CollabConfig,
    eval: Option<&Dataset>,
    observer: &mut dyn FnMut(u32, &[&DbnModel]),
    mut step: F,
) -> Result<Vec<RoundRecord>>
where
    F: FnMut(&mut [NodeState]) -> Result<Vec<f64>>,
{
    let budget = config.train.iterations as u32;
    let monitor = Monitor { eval, config, budget };
    let mut history = Vec::with_capacity(budget as usize);
    for iteration in 1..=budget {
        let started = Instant::now();
        let losses = step(states)?;
        let duration = started.elapsed();
        let models: Vec<&DbnModel> = states.iter().map(|s| &s.model).collect();
        debug_assert!(states.iter().all(|s| s.iteration() == iteration));
        observer(iteration, &models);
        let accuracy = monitor.accuracy(iteration, &models)?;
        history.push(RoundRecord {
            iteration,
            nodes: labels.clone(),
            losses,
            accuracy,
            duration,
        });
        if monitor.plateaued(&history) {
            info!("accuracy plateaued at iteration {iteration}");
            break;
        }
    }
    Ok(history)
}

/// One synchronized collaborative round over all nodes, each on its own
/// thread with its own transport endpoint.
pub fn run_round<T: Transport>(
    nodes: &mut [NodeState],
    endpoints: &[T],
    config: &CollabConfig,
) -> Result<RoundRecord> {
    if nodes.len() != endpoints.len() {
        return Err(Error::config("one transport endpoint per node is required"));
    }
    let before = nodes.first().map(NodeState::iteration);
    if nodes.iter().any(|n| Some(n.iteration()) != before) {
        return Err(Error::config("nodes are not at the same iteration"));
    }
    let started = Instant::now();
    let losses = collaborative_round(nodes, endpoints, config)?;
    Ok(RoundRecord {
        iteration: nodes[0].iteration(),
        nodes: nodes.iter().map(|n| n.node_id).collect(),
        losses,
        accuracy: None,
        duration: started.elapsed(),
    })
}

fn collaborative_round<T: Transport>(
    nodes: &mut [NodeState],
    endpoints: &[T],
    config: &CollabConfig,
) -> Result<Vec<f64>> {
    let results: Vec<Result<f64>> = thread::scope(|scope| {
        let handles: Vec<_> = nodes
            .iter_mut()
            .zip(endpoints)
            .map(|(node, ep)| {
                scope.spawn(move || node.collaborative_step(ep, &config.train, config.timeout))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Protocol("node worker panicked".into()))))
            .collect()
    });
    // Report the root cause rather than the timeouts it triggered on peers.
    let mut first_err = None;
    let mut losses = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(l) => losses.push(l),
            Err(e @ Error::Timeout { .. }) => {
                first_err.get_or_insert(e);
            }
            Err(e) => {
                if matches!(first_err, None | Some(Error::Timeout { .. })) {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(losses),
    }
}

fn node_states(datasets: &[Dataset], arch: &Architecture, config: &CollabConfig) -> Result<Vec<NodeState>> {
    let init = DbnModel::init(arch, config.train.seed)?;
    datasets
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let id = (i + 1) as u16;
            NodeState::new(id, init.clone(), d, config.seed_for(id))
        })
        .collect()
}

fn pclm_with<T: Transport>(
    states: &mut [NodeState],
    endpoints: &[T],
    config: &CollabConfig,
    eval: Option<&Dataset>,
    observer: &mut dyn FnMut(u32, &[&DbnModel]),
) -> Result<Vec<RoundRecord>> {
    let labels = states.iter().map(|s| s.node_id).collect();
    drive(states, labels, config, eval, observer, |s| {
        collaborative_round(s, endpoints, config)
    })
}

fn pclm(
    datasets: &[Dataset],
    config: &CollabConfig,
    eval: Option<&Dataset>,
    observer: &mut dyn FnMut(u32, &[&DbnModel]),
) -> Result<TrainOutcome> {
    let arch = check_datasets(datasets, config)?;
    let mut states = node_states(datasets, &arch, config)?;
    let len = Some(arch.param_count());
    let history = match config.transport {
        TransportKind::InProcess => {
            let eps = InProcessBus::create(config.nodes, len)?;
            pclm_with(&mut states, &eps, config, eval, observer)?
        }
        TransportKind::Socket => {
            let eps = loopback_mesh(config.nodes, len, config.timeout)?;
            pclm_with(&mut states, &eps, config, eval, observer)?
        }
    };
    Ok(finish(Scheme::Pclm, states, history))
}

fn finish(scheme: Scheme, states: Vec<NodeState>, history: Vec<RoundRecord>) -> TrainOutcome {
    let nodes = if scheme == Scheme::Clm {
        vec![0]
    } else {
        states.iter().map(|s| s.node_id).collect()
    };
    TrainOutcome {
        scheme,
        nodes,
        models: states.into_iter().map(|s| s.model).collect(),
        history,
    }
}

fn llm(
    datasets: &[Dataset],
    config: &CollabConfig,
    eval: Option<&Dataset>,
    observer: &mut dyn FnMut(u32, &[&DbnModel]),
) -> Result<TrainOutcome> {
    let arch = check_datasets(datasets, config)?;
    let mut states = node_states(datasets, &arch, config)?;
    let labels = states.iter().map(|s| s.node_id).collect();
    let history = drive(&mut states, labels, config, eval, observer, |s| {
        s.iter_mut().map(|n| n.local_step(&config.train)).collect()
    })?;
    Ok(finish(Scheme::Llm, states, history))
}

fn clm(
    datasets: &[Dataset],
    config: &CollabConfig,
    eval: Option<&Dataset>,
    observer: &mut dyn FnMut(u32, &[&DbnModel]),
) -> Result<TrainOutcome> {
    let arch = check_datasets(datasets, config)?;
    let pooled = Dataset::concat(datasets)?;
    let init = DbnModel::init(&arch, config.train.seed)?;
    let mut states = vec![NodeState::new(1, init, &pooled, config.seed_for(1))?];
    // The central node sees as many samples per update as the whole
    // collaborative network does.
    let mut train = config.train.clone();
    train.batch_size *= datasets.len();
    let history = drive(&mut states, vec![0], config, eval, observer, |s| {
        s.iter_mut().map(|n| n.local_step(&train)).collect()
    })?;
    Ok(finish(Scheme::Clm, states, history))
}

/// Collaborative training over all `L` nodes of this process.
pub fn train_pclm(datasets: &[Dataset], config: &CollabConfig, eval: Option<&Dataset>) -> Result<TrainOutcome> {
    pclm(datasets, config, eval, &mut |_, _| {})
}

/// Centralized training on the pooled data of every node.
pub fn train_clm(datasets: &[Dataset], config: &CollabConfig, eval: Option<&Dataset>) -> Result<TrainOutcome> {
    clm(datasets, config, eval, &mut |_, _| {})
}

/// Independent local training on every node.
pub fn train_llm(datasets: &[Dataset], config: &CollabConfig, eval: Option<&Dataset>) -> Result<TrainOutcome> {
    llm(datasets, config, eval, &mut |_, _| {})
}

/// Trains under `scheme`, calling `observer` with the models after every
/// iteration.
pub fn train(
    scheme: Scheme,
    datasets: &[Dataset],
    config: &CollabConfig,
    eval: Option<&Dataset>,
    observer: &mut dyn FnMut(u32, &[&DbnModel]),
) -> Result<TrainOutcome> {
    info!(
        "training {scheme} on {} node(s) for {} iterations",
        datasets.len(),
        config.train.iterations
    );
    match scheme {
        Scheme::Pclm => pclm(datasets, config, eval, observer),
        Scheme::Clm => clm(datasets, config, eval, observer),
        Scheme::Llm => llm(datasets, config, eval, observer),
    }
}

/// Runs a single collaborative node of a multi-process session. Every
/// process must use the same seed, architecture and iteration budget.
pub fn train_pclm_node<T: Transport>(
    data: &Dataset,
    transport: &T,
    config: &CollabConfig,
    eval: Option<&Dataset>,
) -> Result<TrainOutcome> {
    config.validate()?;
    if config.plateau.is_some() {
        return Err(Error::config(
            "the plateau stop needs a central view and is not available per node",
        ));
    }
    let id = transport.node_id();
    if usize::from(id) == 0 || usize::from(id) > config.nodes {
        return Err(Error::config(format!("node id {id} outside 1..={}", config.nodes)));
    }
    if transport.peers().len() + 1 != config.nodes {
        return Err(Error::config(format!(
            "session has {} peers but {} nodes are configured",
            transport.peers().len(),
            config.nodes
        )));
    }
    let arch = config.train.architecture(data.feature_dim(), data.classes())?;
    let init = DbnModel::init(&arch, config.train.seed)?;
    let mut states = vec![NodeState::new(id, init, data, config.seed_for(id))?];
    debug!("node {id} joined a session of {}", config.nodes);
    let history = drive(&mut states, vec![id], config, eval, &mut |_, _| {}, |s| {
        s[0].collaborative_step(transport, &config.train, config.timeout)
            .map(|l| vec![l])
    })?;
    Ok(finish(Scheme::Pclm, states, history))
}

