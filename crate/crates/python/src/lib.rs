//! Python bindings: tariffs, datasets, environment stepping, training,
//! evaluation and the exact oracle.

use chrono::NaiveDate;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use evcharge::agent::{Checkpoint, TrainConfig};
use evcharge::data::{daily_ev_demand, load_dataset, synthesize_dataset, write_csv, write_json, HouseholdDay, SynthProfile};
use evcharge::env::{starting_soc, Action, EnvConfig, EnvSettings, EnvState};
use evcharge::harness::{dp_oracle, evaluate, exhaustive_oracle, train as train_agent, Policy, SolarAccounting};
use evcharge::tariff::TariffSchedule;
use evcharge::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Divergence { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_date(s: &str) -> PyResult<NaiveDate> {
    s.parse().map_err(|e| PyValueError::new_err(format!("bad date {s:?}: {e}")))
}

fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> PyResult<T> {
    serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Serializes `value` and hands it to Python's `json.loads`.
fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn action(charge: bool) -> Action {
    if charge {
        Action::Charge
    } else {
        Action::Idle
    }
}

/// Time-of-use price schedule.
#[pyclass(name = "Tariff", module = "evcharge_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyTariff(TariffSchedule);

#[pymethods]
impl PyTariff {
    /// The default three-band summer schedule.
    #[new]
    fn new() -> Self {
        Self(TariffSchedule::default())
    }

    /// Parses a JSON list of `{"start": "HH:MM", "end": "HH:MM", "price": ...}` bands.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        TariffSchedule::parse(text, false).map(Self).map_err(py_err)
    }

    fn price_at(&self, slot: usize) -> PyResult<f64> {
        if slot >= 96 {
            return Err(PyValueError::new_err("slot must be in 0..96"));
        }
        Ok(self.0.price_at(slot))
    }

    fn step_cost(&self, slot: usize, charge: bool, p_ev: f64, non_ev: f64, pv: f64) -> PyResult<f64> {
        self.price_at(slot)?;
        Ok(self.0.step_cost(slot, action(charge), p_ev, non_ev, pv))
    }

    /// `(start, end, price)` for every band.
    fn bands(&self) -> Vec<(String, String, f64)> {
        self.0.bands().iter().map(|b| (b.start.to_string(), b.end.to_string(), b.price)).collect()
    }
}

/// One household day of 96 quarter-hour slots.
#[pyclass(name = "Day", module = "evcharge_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyDay(HouseholdDay);

#[pymethods]
impl PyDay {
    #[new]
    fn new(date: &str, pv: Vec<f64>, non_ev: Vec<f64>, ev_metered: Vec<f64>) -> PyResult<Self> {
        HouseholdDay::new(parse_date(date)?, pv, non_ev, ev_metered).map(Self).map_err(py_err)
    }

    #[getter]
    fn date(&self) -> String {
        self.0.date().to_string()
    }

    #[getter]
    fn pv(&self) -> Vec<f64> {
        self.0.pv().to_vec()
    }

    #[getter]
    fn non_ev(&self) -> Vec<f64> {
        self.0.non_ev().to_vec()
    }

    #[getter]
    fn ev_metered(&self) -> Vec<f64> {
        self.0.ev_metered().to_vec()
    }

    /// Sum of metered EV power over the day (kW-sum).
    fn ev_demand(&self) -> f64 {
        daily_ev_demand(&self.0)
    }
}

/// Ordered days with a train/test split.
#[pyclass(name = "Dataset", module = "evcharge_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset(evcharge::data::Dataset);

#[pymethods]
impl PyDataset {
    #[new]
    fn new(days: Vec<PyDay>) -> PyResult<Self> {
        evcharge::data::Dataset::new(days.into_iter().map(|d| d.0).collect())
            .map(Self)
            .map_err(py_err)
    }

    /// Synthetic days; `profile` is a JSON synthesis profile.
    #[staticmethod]
    #[pyo3(signature = (n_days, seed=0, start="2018-06-01", profile=None))]
    fn synthesize(n_days: usize, seed: u64, start: &str, profile: Option<&str>) -> PyResult<Self> {
        let profile: SynthProfile = profile.map(from_json).transpose()?.unwrap_or_default();
        synthesize_dataset(n_days, seed, &profile, parse_date(start)?).map(Self).map_err(py_err)
    }

    /// Reads a `.json` dataset or an aggregated CSV with the default columns.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        load_dataset(path, &Default::default(), Default::default()).map(Self).map_err(py_err)
    }

    /// Writes `.json` or `.csv` depending on the extension.
    fn save(&self, path: &str) -> PyResult<()> {
        if path.ends_with(".csv") {
            write_csv(&self.0, path)
        } else {
            write_json(&self.0, path)
        }
        .map_err(py_err)
    }

    /// Copy with the last `n` days held out for testing.
    fn with_test_tail(&self, n: usize) -> Self {
        Self(self.0.clone().with_test_tail(n))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn days(&self) -> Vec<PyDay> {
        self.0.days().iter().cloned().map(PyDay).collect()
    }

    fn train_days(&self) -> Vec<PyDay> {
        self.0.train_days().cloned().map(PyDay).collect()
    }

    fn test_days(&self) -> Vec<PyDay> {
        self.0.test_days().cloned().map(PyDay).collect()
    }

    fn day(&self, date: &str) -> PyResult<PyDay> {
        self.0.day(parse_date(date)?).cloned().map(PyDay).map_err(py_err)
    }
}

/// Environment configuration derived from a dataset's training days.
#[pyclass(name = "Environment", module = "evcharge_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEnvironment(EnvConfig);

#[pymethods]
impl PyEnvironment {
    /// `settings` is a JSON object with optional `tariff`, `battery`, `weights`, ... keys.
    #[staticmethod]
    #[pyo3(signature = (dataset, settings=None))]
    fn from_dataset(dataset: &PyDataset, settings: Option<&str>) -> PyResult<Self> {
        let settings: EnvSettings = settings.map(from_json).transpose()?.unwrap_or_default();
        EnvConfig::from_training_days(dataset.0.train_days(), &settings)
            .map(Self)
            .map_err(py_err)
    }

    /// Habit index, one value per slot.
    fn flexibility(&self) -> Vec<f64> {
        self.0.flex.index().to_vec()
    }

    fn cost_quantiles(&self) -> (f64, f64, f64) {
        (self.0.cost_q.q25, self.0.cost_q.q50, self.0.cost_q.q75)
    }

    fn episode(&self, day: &PyDay) -> PyEpisode {
        PyEpisode::new(self.0.clone(), day.0.clone())
    }

    /// Best undiscounted schedule for the first `horizon` slots: `(actions, total_reward)`.
    #[pyo3(signature = (day, horizon=96, exhaustive=false))]
    fn oracle(&self, day: &PyDay, horizon: usize, exhaustive: bool) -> PyResult<(Vec<u8>, f64)> {
        let sol = if exhaustive {
            exhaustive_oracle(&self.0, &day.0, horizon)
        } else {
            dp_oracle(&self.0, &day.0, horizon)
        }
        .map_err(py_err)?;
        Ok((sol.actions.iter().map(|a| a.index() as u8).collect(), sol.total_reward))
    }
}

/// One day of decisions. `step` returns `(state, rewards, done)` where `state` is
/// `(price, pv, non_ev, ev_run, soc, t)` and `rewards` is `(r1, r2, r3, r4, total)`.
#[pyclass(name = "Episode", module = "evcharge_py")]
struct PyEpisode {
    env: EnvConfig,
    day: HouseholdDay,
    p_day_ev: f64,
    soc_start: f64,
    state: EnvState,
    done: bool,
}

type StateTuple = (f64, f64, f64, f64, f64, usize);
/// (r1, r2, r3, r4, weighted total).
type RewardTuple = (f64, f64, f64, f64, f64);

fn state_tuple(s: &EnvState) -> StateTuple {
    (s.price, s.pv, s.non_ev, s.ev_run, s.soc, s.t)
}

impl PyEpisode {
    fn new(env: EnvConfig, day: HouseholdDay) -> Self {
        let p_day_ev = daily_ev_demand(&day);
        let soc_start = starting_soc(&env.battery, p_day_ev);
        let state = env.observe(&day, 0, 0.0, soc_start);
        Self {
            env,
            day,
            p_day_ev,
            soc_start,
            state,
            done: false,
        }
    }
}

#[pymethods]
impl PyEpisode {
    fn reset(&mut self) -> StateTuple {
        self.state = self.env.observe(&self.day, 0, 0.0, self.soc_start);
        self.done = false;
        state_tuple(&self.state)
    }

    #[getter]
    fn state(&self) -> StateTuple {
        state_tuple(&self.state)
    }

    /// Normalised feature vector as seen by the agent.
    fn features(&self) -> Vec<f64> {
        self.env.features(&self.state, self.p_day_ev).to_vec()
    }

    #[getter]
    fn done(&self) -> bool {
        self.done
    }

    #[getter]
    fn soc_start(&self) -> f64 {
        self.soc_start
    }

    fn step(&mut self, charge: bool) -> PyResult<(StateTuple, RewardTuple, bool)> {
        if self.done {
            return Err(py_err(Error::EpisodeFinished));
        }
        let s = self.env.transition(&self.day, self.p_day_ev, &self.state, action(charge));
        self.state = s.next;
        self.done = s.done;
        let r = s.reward;
        Ok((state_tuple(&s.next), (r.r1, r.r2, r.r3, r.r4, r.total), s.done))
    }
}

/// A trained Q-network with its environment.
#[pyclass(name = "Agent", module = "evcharge_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAgent(Checkpoint);

#[pymethods]
impl PyAgent {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Checkpoint::load(path).map(Self).map_err(py_err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).map_err(py_err)
    }

    fn environment(&self) -> PyEnvironment {
        PyEnvironment(self.0.env.clone())
    }

    fn q_values(&self, features: Vec<f64>) -> PyResult<(f64, f64)> {
        let q = self.0.network.q_values(&features).map_err(py_err)?;
        Ok((q[0], q[1]))
    }

    #[getter]
    fn epochs_completed(&self) -> usize {
        self.0.epochs_completed
    }
}

/// Trains on the dataset's training days; `config` is a JSON training config.
/// Returns `(best_agent, final_agent, learning_curve)`.
#[pyfunction]
#[pyo3(signature = (dataset, config=None, environment=None))]
fn train(
    py: Python<'_>,
    dataset: &PyDataset,
    config: Option<&str>,
    environment: Option<&PyEnvironment>,
) -> PyResult<(PyAgent, PyAgent, Py<PyAny>)> {
    let config: TrainConfig = config.map(from_json).transpose()?.unwrap_or_default();
    let env = match environment {
        Some(e) => e.0.clone(),
        None => EnvConfig::from_training_days(dataset.0.train_days(), &EnvSettings::default()).map_err(py_err)?,
    };
    let data = dataset.0.clone();
    let out = py
        .detach(move || train_agent(data.train_days(), &env, &config))
        .map_err(py_err)?;
    let curve = to_py(py, &out.curve)?;
    Ok((PyAgent(out.best_checkpoint), PyAgent(out.final_checkpoint), curve))
}

fn policy_named(name: &str, agent: Option<&PyAgent>, seed: u64) -> PyResult<Policy> {
    Ok(match name {
        "dqn" => Policy::Dqn(
            agent
                .ok_or_else(|| PyValueError::new_err("the dqn policy needs an agent"))?
                .0
                .network
                .clone(),
        ),
        "metered" => Policy::MeteredReplay,
        "random" => Policy::Random { seed },
        "tariff-greedy" => Policy::TariffGreedy,
        "solar-greedy" => Policy::SolarGreedy,
        "oracle" => Policy::DpOracle,
        other => return Err(PyValueError::new_err(format!("unknown policy {other:?}"))),
    })
}

/// Evaluation report (a dict) for `policy` on the dataset's test days, or on
/// every day when `test_only` is false.
#[pyfunction]
#[pyo3(signature = (policy, dataset, environment, agent=None, test_only=true, seed=0, net_of_load=false))]
#[allow(clippy::too_many_arguments)]
fn evaluate_policy(
    py: Python<'_>,
    policy: &str,
    dataset: &PyDataset,
    environment: &PyEnvironment,
    agent: Option<&PyAgent>,
    test_only: bool,
    seed: u64,
    net_of_load: bool,
) -> PyResult<Py<PyAny>> {
    let policy = policy_named(policy, agent, seed)?;
    let accounting = if net_of_load {
        SolarAccounting::NetOfLoad
    } else {
        SolarAccounting::Gross
    };
    let days: Vec<&HouseholdDay> = if test_only {
        dataset.0.test_days().collect()
    } else {
        dataset.0.days().iter().collect()
    };
    let evaluation = evaluate(&policy, &environment.0, days, accounting).map_err(py_err)?;
    to_py(py, &evaluation.report)
}

#[pymodule]
fn evcharge_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTariff>()?;
    m.add_class::<PyDay>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyEnvironment>()?;
    m.add_class::<PyEpisode>()?;
    m.add_class::<PyAgent>()?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_policy, m)?)?;
    Ok(())
}
