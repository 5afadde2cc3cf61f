#![allow(dead_code)]

use attractor_core::manifold::attractor_seed;
use attractor_core::systems::{ExtendedLorenz, FlowModel, GhmParams, Lorenz, PolyNonlinearity, State, SystemSpec};

pub fn minus_z2() -> PolyNonlinearity {
    PolyNonlinearity::minus_z_squared()
}

/// The four homoclinic attractors of the generalized Hénon map plus the
/// nearby pseudohyperbolic discrete Lorenz attractor, as `(name, params)`.
pub fn ghm_cases() -> Vec<(&'static str, GhmParams)> {
    vec![
        ("D1 (-1.1, 0.85, 0.7)", GhmParams::new(-1.1, 0.7, 0.85, minus_z2())),
        ("D1 (-1.11, 0.77, 0.7)", GhmParams::new(-1.11, 0.7, 0.77, minus_z2())),
        (
            "D2 (-1.86, 0.03, 0.72)",
            GhmParams::new(
                -1.86,
                0.72,
                0.03,
                PolyNonlinearity {
                    yy: -1.0,
                    yz: 0.515,
                    zz: -1.45,
                    ..Default::default()
                },
            ),
        ),
        (
            "D3 (0.82, 2.06, 0.5)",
            GhmParams::new(
                0.82,
                0.5,
                2.06,
                PolyNonlinearity {
                    yyy: -2.0,
                    zzz: -2.25,
                    ..Default::default()
                },
            ),
        ),
        (
            "D4 (3.702, -2.749, 0.05)",
            GhmParams::new(
                3.702,
                0.05,
                -2.749,
                PolyNonlinearity {
                    yyy: 1.0,
                    zzz: -1.0,
                    ..Default::default()
                },
            ),
        ),
    ]
}

pub fn ghm(p: GhmParams) -> (SystemSpec, State) {
    (SystemSpec::Ghm(p), attractor_seed(&p))
}

pub fn lorenz(r: f64) -> (SystemSpec, State) {
    (
        SystemSpec::Flow(FlowModel::Lorenz(Lorenz { r, ..Lorenz::classic() })),
        State::from_element(3, 1.0),
    )
}

pub fn extended_lorenz() -> (SystemSpec, State) {
    (
        SystemSpec::Flow(FlowModel::ExtendedLorenz(ExtendedLorenz::spiral())),
        State::from_element(4, 1.0),
    )
}
