//! Python bindings. Graphs and constraint sets are classes; everything else
//! takes and returns plain lists.

use fastge::eigen::{dense_generalized_eigs, generalized_eigs, EigenOptions};
use fastge::embedding::compute_embedding;
use fastge::generators::{self, LabeledPointCloud};
use fastge::graph::{VertexSet, WeightedGraph};
use fastge::merge::{merge as merge_graphs, Constraint, ConstraintSet, MergedProblem};
use fastge::operators::{build_preconditioner, PreconditionerKind};
use fastge::pipeline::{run_pipeline, PipelineConfig};
use fastge::{io, metrics, partition, Error};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        e if e.is_numerical() => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// Undirected weighted graph.
#[pyclass(name = "Graph", module = "fastge")]
struct PyGraph {
    inner: WeightedGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        let inner = WeightedGraph::from_edges(n, edges).map_err(py_err)?;
        Ok(PyGraph { inner })
    }

    /// Reads an edge-list file.
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyGraph { inner: io::load_edge_list(&path).map_err(py_err)? })
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        io::save_edge_list(&self.inner, &path).map_err(py_err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().collect()
    }

    fn degrees(&self) -> Vec<f64> {
        self.inner.degrees().as_slice().to_vec()
    }

    /// Total weight of edges leaving `vertices`.
    fn cut(&self, vertices: Vec<usize>) -> PyResult<f64> {
        let s = VertexSet::from_indices(self.inner.n(), vertices).map_err(py_err)?;
        self.inner.cut(&s).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, edges={})", self.inner.n(), self.inner.num_edges())
    }
}

/// Must-link and cannot-link pairs.
#[pyclass(name = "Constraints", module = "fastge")]
struct PyConstraints {
    inner: ConstraintSet,
}

#[pymethods]
impl PyConstraints {
    #[new]
    #[pyo3(signature = (must_link = Vec::new(), cannot_link = Vec::new()))]
    fn new(must_link: Vec<(usize, usize)>, cannot_link: Vec<(usize, usize)>) -> Self {
        let pairs = |v: Vec<(usize, usize)>| v.into_iter().map(|(u, v)| Constraint::new(u, v)).collect();
        PyConstraints {
            inner: ConstraintSet {
                must_link: pairs(must_link),
                cannot_link: pairs(cannot_link),
            },
        }
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        Ok(PyConstraints { inner: io::load_constraints(&path).map_err(py_err)? })
    }

    #[getter]
    fn must_link(&self) -> Vec<(usize, usize)> {
        self.inner.must_link.iter().map(|c| (c.u, c.v)).collect()
    }

    #[getter]
    fn cannot_link(&self) -> Vec<(usize, usize)> {
        self.inner.cannot_link.iter().map(|c| (c.u, c.v)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Constraints(must_link={}, cannot_link={})",
            self.inner.must_link.len(),
            self.inner.cannot_link.len()
        )
    }
}

/// The merged pair `(G, H)`.
#[pyclass(name = "Problem", module = "fastge")]
struct PyProblem {
    inner: MergedProblem,
}

#[pymethods]
impl PyProblem {
    #[getter]
    fn g(&self) -> PyGraph {
        PyGraph { inner: self.inner.g.clone() }
    }

    #[getter]
    fn h_sparse(&self) -> PyGraph {
        PyGraph { inner: self.inner.h_sparse.clone() }
    }

    #[getter]
    fn h_rank_one_scale(&self) -> f64 {
        self.inner.h_rank_one_scale
    }

    /// Smallest `k` generalized eigenpairs of `L_G x = λ L_H x` as
    /// `(values, vectors)` with one vector per list entry.
    #[pyo3(signature = (k, tol = 1e-6, max_iter = 500, seed = 0, preconditioner = "inner-cg", dense = false))]
    fn eigs(
        &self,
        k: usize,
        tol: f64,
        max_iter: usize,
        seed: u64,
        preconditioner: &str,
        dense: bool,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let (lg, lh) = (self.inner.lg(), self.inner.lh());
        let sol = if dense {
            dense_generalized_eigs(&lg, &lh, k)
        } else {
            let kind: PreconditionerKind = serde_json::from_value(preconditioner.into())
                .map_err(|_| PyValueError::new_err(format!("unknown preconditioner `{preconditioner}`")))?;
            let pre = build_preconditioner(&self.inner.g, kind).map_err(py_err)?;
            generalized_eigs(&lg, &lh, k, pre.as_ref(), EigenOptions { tol, max_iter, seed })
        }
        .map_err(py_err)?;
        let vectors = (0..sol.values.len()).map(|j| sol.column(j).to_vec()).collect();
        Ok((sol.values, vectors))
    }

    /// Row-normalized spectral embedding of the given eigenvectors, one row per vertex.
    fn embedding(&self, vectors: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let x = rows_to_matrix(&vectors)?.transpose();
        let e = compute_embedding(&x, &self.inner.lh(), &self.inner.merged_degrees()).map_err(py_err)?;
        Ok(matrix_to_rows(&e.u))
    }

    /// Sweep cut of `x`: a dict with the cut set, both ratios and the certificate.
    fn sweep<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
        let s = partition::cheeger_sweep(&self.inner.g, &self.inner.lh(), &x).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("cut_set", s.cut_set.iter().collect::<Vec<_>>())?;
        d.set_item("ratio_gh", s.ratio_gh)?;
        d.set_item("ratio_gk", s.ratio_gk)?;
        d.set_item("certificate", s.certificate)?;
        Ok(d)
    }

    /// `cut_G / cut_H` per cluster of `labels`.
    fn badness(&self, labels: Vec<usize>) -> PyResult<Vec<f64>> {
        let p = partition::Partition::new(&labels);
        let q = metrics::badness(&self.inner.g, &self.inner.lh(), &p).map_err(py_err)?;
        Ok(q.per_cluster_badness)
    }
}

#[pyfunction]
fn merge(graph: &PyGraph, constraints: &PyConstraints) -> PyResult<PyProblem> {
    let inner = merge_graphs(&graph.inner, &constraints.inner).map_err(py_err)?;
    Ok(PyProblem { inner })
}

/// k-means on the rows of `points`; returns canonical labels.
#[pyfunction]
#[pyo3(signature = (points, k, restarts = 20, max_iter = 300, seed = 0))]
fn kmeans(points: Vec<Vec<f64>>, k: usize, restarts: usize, max_iter: usize, seed: u64) -> PyResult<Vec<usize>> {
    let m = rows_to_matrix(&points)?;
    let p = partition::kmeans(&m, k, restarts, max_iter, seed).map_err(py_err)?;
    Ok(p.labels().to_vec())
}

#[pyfunction]
fn rand_index(a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    metrics::rand_index(&a, &b).map_err(py_err)
}

/// `(points, labels)` for the Four-Moons cloud.
#[pyfunction]
#[pyo3(signature = (n, noise = generators::DEFAULT_MOON_NOISE, seed = 0))]
fn four_moons(n: usize, noise: f64, seed: u64) -> PyResult<(Vec<(f64, f64)>, Vec<usize>)> {
    let c = generators::four_moons(n, noise, seed).map_err(py_err)?;
    Ok((c.points.iter().map(|p| (p[0], p[1])).collect(), c.labels))
}

/// kNN graph over `points` plus Erdős–Rényi noise edges.
#[pyfunction]
#[pyo3(signature = (points, labels, kg = 30, lg = 15.0, seed = 0))]
fn noisy_knn(points: Vec<(f64, f64)>, labels: Vec<usize>, kg: usize, lg: f64, seed: u64) -> PyResult<PyGraph> {
    let cloud = LabeledPointCloud::new(points.into_iter().map(|(x, y)| [x, y]).collect(), labels).map_err(py_err)?;
    Ok(PyGraph { inner: generators::noisy_knn(&cloud, kg, lg, seed).map_err(py_err)? })
}

/// Pairwise constraints among `m` randomly labeled vertices.
#[pyfunction]
#[pyo3(signature = (labels, m, seed = 0))]
fn sample_constraints(labels: Vec<usize>, m: usize, seed: u64) -> PyResult<PyConstraints> {
    Ok(PyConstraints { inner: generators::sample_constraints(&labels, m, seed).map_err(py_err)? })
}

/// Runs the whole pipeline. `config` takes the same keys as the JSON config
/// file; the run report comes back as a dict.
#[pyfunction]
#[pyo3(signature = (graph, constraints, k = 2, **config))]
fn cluster<'py>(
    py: Python<'py>,
    graph: &PyGraph,
    constraints: &PyConstraints,
    k: usize,
    config: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyAny>> {
    let mut cfg = match config {
        Some(d) => {
            let text: String = py.import("json")?.call_method1("dumps", (d,))?.extract()?;
            serde_json::from_str::<PipelineConfig>(&text).map_err(|e| PyValueError::new_err(e.to_string()))?
        }
        None => PipelineConfig::default(),
    };
    cfg.k = k;
    let report = py
        .detach(|| run_pipeline(&graph.inner, &constraints.inner, &cfg))
        .map_err(py_err)?;
    let text = serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &text)
}

/// Adds the classes and functions to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyConstraints>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(merge, m)?)?;
    m.add_function(wrap_pyfunction!(kmeans, m)?)?;
    m.add_function(wrap_pyfunction!(rand_index, m)?)?;
    m.add_function(wrap_pyfunction!(four_moons, m)?)?;
    m.add_function(wrap_pyfunction!(noisy_knn, m)?)?;
    m.add_function(wrap_pyfunction!(sample_constraints, m)?)?;
    m.add_function(wrap_pyfunction!(cluster, m)?)?;
    Ok(())
}

#[pymodule]
#[pyo3(name = "fastge")]
fn fastge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
