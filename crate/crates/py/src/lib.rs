use pyo3::prelude::*;

mod bindings;

#[pymodule]
fn fairbo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    bindings::register(m)
}
