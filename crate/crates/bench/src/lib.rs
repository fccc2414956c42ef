//! Shared fixtures for the benchmarks.

use std::f64::consts::TAU;

use windtube::winding::trace_lines;
use windtube::*;

pub fn cylinder() -> TubularDomain {
    build_domain(&DomainSpec::unit_cylinder()).expect("unit cylinder")
}

pub fn twist(k: f64) -> BraidedField {
    make_field(&FieldSpec::UniformTwist { k }, &cylinder(), None).expect("twist field")
}

/// Mapped full-twist field lines from the nodes of an area-uniform grid.
pub fn twist_lines(n_r: usize) -> Vec<FieldLine> {
    let grid = QuadratureGrid::area_uniform(n_r).expect("grid");
    let map = GeometricMap::new(cylinder());
    trace_lines(&twist(TAU), &map, &grid.nodes, &TraceOptions::default()).expect("traced lines")
}
