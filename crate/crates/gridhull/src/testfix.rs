//! Shared fixtures for unit tests: small networks with known geometry.

use crate::capacity::{Corridor, NtcSpec};
use crate::netmodel::{Bus, Line, NetworkModel, UNLIMITED_MW};
use crate::project::AggregationMap;
use nalgebra::DVector;

/// Two buses, one line of limit 6 MW; bus 2 demands 8 MW.
pub(crate) fn twobus() -> NetworkModel {
    NetworkModel {
        base_mva: 100.0,
        buses: vec![
            Bus { id: 1, demand: 0.0, gen_max: 10.0 },
            Bus { id: 2, demand: 8.0, gen_max: 10.0 },
        ],
        lines: vec![Line {
            id: 1,
            from_bus: 1,
            to_bus: 2,
            susceptance: 1.0,
            limit: 6.0,
        }],
    }
}

/// Three-bus ring with equal susceptances; every bus can self-supply.
pub(crate) fn ring3() -> NetworkModel {
    let line = |id, from_bus, to_bus| Line {
        id,
        from_bus,
        to_bus,
        susceptance: 1.0,
        limit: 1000.0,
    };
    NetworkModel {
        base_mva: 100.0,
        buses: (1..=3)
            .map(|id| Bus { id, demand: 100.0, gen_max: 200.0 })
            .collect(),
        lines: vec![line(1, 1, 2), line(2, 1, 3), line(3, 3, 2)],
    }
}

/// Line limits of the six-bus fixture, base case, in line order
/// 1–2, 1–3, 2–4, 3–5, 4–6, 5–6, 4–5.
pub(crate) const SIXBUS_BASE_LIMITS: [f64; 7] =
    [3800.0, 3800.0, 3300.0, 3300.0, 3600.0, 3600.0, UNLIMITED_MW];

/// Increased-limits variant: center pair raised to 3500 MW, southern pair
/// to 3800 MW.
pub(crate) const SIXBUS_STRONG_LIMITS: [f64; 7] =
    [3800.0, 3800.0, 3500.0, 3500.0, 3800.0, 3800.0, UNLIMITED_MW];

fn sixbus(limits: &[f64; 7]) -> NetworkModel {
    // All lines identical: 500 km at 0.09 p.u./km series reactance.
    let b = 1.0 / 45.0;
    let demands = [3000.0, 3000.0, 3000.0, 3000.0, 3000.0, 6000.0];
    let gen_max = [10_000.0, 3000.0, 3000.0, 10_000.0, 3000.0, 3000.0];
    let ends = [(1, 2), (1, 3), (2, 4), (3, 5), (4, 6), (5, 6), (4, 5)];
    NetworkModel {
        base_mva: 900.0,
        buses: (0..6)
            .map(|i| Bus {
                id: i as i64 + 1,
                demand: demands[i],
                gen_max: gen_max[i],
            })
            .collect(),
        lines: ends
            .iter()
            .enumerate()
            .map(|(l, &(f, t))| Line {
                id: l as i64 + 1,
                from_bus: f,
                to_bus: t,
                susceptance: b,
                limit: limits[l],
            })
            .collect(),
    }
}

/// Six-bus three-region network, base line limits.
pub(crate) fn sixbus_base() -> NetworkModel {
    sixbus(&SIXBUS_BASE_LIMITS)
}

/// Six-bus three-region network, increased line limits.
pub(crate) fn sixbus_strong() -> NetworkModel {
    sixbus(&SIXBUS_STRONG_LIMITS)
}

/// Aggregation of the six-bus fixture: bus 1 → north, buses 2–5 → center,
/// bus 6 → south.
pub(crate) fn sixbus_regions() -> AggregationMap {
    AggregationMap::with_names(
        vec![0, 1, 1, 1, 1, 2],
        vec!["north".into(), "center".into(), "south".into()],
    )
    .unwrap()
}

/// The three inter-region corridors of the six-bus fixture. North exports
/// over lines 1–2 and 1–3; the southern border is directional, one corridor
/// per orientation of lines 4–6 and 5–6.
pub(crate) fn sixbus_corridors() -> Vec<Corridor> {
    vec![
        Corridor { name: "north-center".into(), terms: vec![(1, 1.0), (2, 1.0)] },
        Corridor { name: "center-south".into(), terms: vec![(5, 1.0), (6, 1.0)] },
        Corridor { name: "south-center".into(), terms: vec![(5, -1.0), (6, -1.0)] },
    ]
}

/// All-ones NTC direction and weights over [`sixbus_corridors`], with
/// placeholder bounds to be replaced by a computed scaling.
pub(crate) fn sixbus_ntc() -> NtcSpec {
    NtcSpec {
        corridors: sixbus_corridors(),
        bounds: DVector::from_element(3, 0.0),
        nominal: DVector::from_element(3, 1.0),
        weights: DVector::from_element(3, 1.0),
    }
}
