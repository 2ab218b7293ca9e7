//! Deterministic synthetic benchmark network at continental-grid scale:
//! 9241 buses and 16049 in-service branches, organized as 23 internally
//! meshed zones grouped into 4 regions, emitted in the structured-matrix
//! case dialect together with a matching 4-region aggregation config.
//!
//! The generator is seeded and purely sequential, so every call produces
//! byte-identical text. Structure per zone: a random spanning tree, a body
//! of intra-zone chords (every 8th chord unrated, i.e. unlimited), and two
//! 1500 MW balancing generators, so each zone can carry its own demand and
//! regions have deep redispatch freedom. Zones are connected by a ring of
//! inter-zone ties plus random extra ties; tie ratings are the scarce
//! resource that cross-region transfers compete for. A handful of
//! out-of-service branch rows is spliced in to exercise status filtering.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Bus count of the benchmark network.
pub const BENCH_BUSES: usize = 9241;
/// In-service branch count (out-of-service rows come on top).
pub const BENCH_LINES: usize = 16049;
/// Number of internally meshed zones.
pub const BENCH_ZONES: usize = 23;
/// Number of aggregation regions in the bundled config.
pub const BENCH_REGIONS: usize = 4;

const N_TIES: usize = 64;
const N_OFF: usize = 7;
const SEED: u64 = 0x9241;

/// Generated artifact texts, ready to be written to disk.
pub struct BenchmarkCase {
    /// Case file in the structured-matrix dialect.
    pub case_text: String,
    /// 4-region aggregation config (JSON).
    pub aggregation_text: String,
}

/// Buses per zone; sums to [`BENCH_BUSES`].
pub fn zone_sizes() -> Vec<usize> {
    (0..BENCH_ZONES).map(|z| if z < 18 { 402 } else { 401 }).collect()
}

fn zone_starts(sizes: &[usize]) -> Vec<usize> {
    let mut starts = Vec::with_capacity(sizes.len());
    let mut acc = 0;
    for &n in sizes {
        starts.push(acc);
        acc += n;
    }
    starts
}

/// Region index of a zone: six zones per region, the last region takes five.
pub fn region_of_zone(zone: usize) -> usize {
    (zone / 6).min(BENCH_REGIONS - 1)
}

const REGION_NAMES: [&str; BENCH_REGIONS] = ["north", "east", "south", "west"];

struct Branch {
    from: usize, // bus index
    to: usize,
    x: f64,
    rate: f64,
    status: u8,
}

/// Generate the benchmark case and aggregation texts. Deterministic.
pub fn benchmark_case() -> BenchmarkCase {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sizes = zone_sizes();
    let starts = zone_starts(&sizes);

    let demand: Vec<f64> = (0..BENCH_BUSES).map(|_| rng.gen_range(2.0..10.0)).collect();

    // (bus index, Pmax): dispersed units on ~20% of buses, then two large
    // balancers per zone.
    let mut gens: Vec<(usize, f64)> = Vec::new();
    for b in 0..BENCH_BUSES {
        if rng.gen_bool(0.2) {
            gens.push((b, rng.gen_range(20.0..80.0)));
        }
    }
    for z in 0..BENCH_ZONES {
        gens.push((starts[z], 1500.0));
        gens.push((starts[z] + sizes[z] / 2, 1500.0));
    }

    let mut on: Vec<Branch> = Vec::with_capacity(BENCH_LINES);
    // Intra-zone spanning trees.
    for z in 0..BENCH_ZONES {
        for k in 1..sizes[z] {
            let parent = rng.gen_range(0..k);
            on.push(Branch {
                from: starts[z] + parent,
                to: starts[z] + k,
                x: rng.gen_range(0.02..0.1),
                rate: rng.gen_range(2500.0..4000.0),
                status: 1,
            });
        }
    }
    // Intra-zone chords, round-robin over zones.
    let n_chords = BENCH_LINES - (BENCH_BUSES - BENCH_ZONES) - N_TIES;
    for c in 0..n_chords {
        let z = c % BENCH_ZONES;
        let i = rng.gen_range(0..sizes[z]);
        let mut j = rng.gen_range(0..sizes[z]);
        while j == i {
            j = rng.gen_range(0..sizes[z]);
        }
        let rate = if c % 8 == 7 { 0.0 } else { rng.gen_range(2000.0..3500.0) };
        on.push(Branch {
            from: starts[z] + i,
            to: starts[z] + j,
            x: rng.gen_range(0.02..0.1),
            rate,
            status: 1,
        });
    }
    // Inter-zone ties: a connecting ring, then random pairs.
    let tie = |rng: &mut ChaCha8Rng, z1: usize, z2: usize| Branch {
        from: starts[z1] + rng.gen_range(0..sizes[z1]),
        to: starts[z2] + rng.gen_range(0..sizes[z2]),
        x: rng.gen_range(0.05..0.15),
        rate: rng.gen_range(250.0..500.0),
        status: 1,
    };
    for z in 0..BENCH_ZONES {
        let t = tie(&mut rng, z, (z + 1) % BENCH_ZONES);
        on.push(t);
    }
    for _ in 0..N_TIES - BENCH_ZONES {
        let z1 = rng.gen_range(0..BENCH_ZONES);
        let mut z2 = rng.gen_range(0..BENCH_ZONES);
        if z1 == z2 {
            z2 = (z1 + 1) % BENCH_ZONES;
        }
        let t = tie(&mut rng, z1, z2);
        on.push(t);
    }
    debug_assert_eq!(on.len(), BENCH_LINES);

    // Out-of-service rows spliced at fixed spots.
    let mut rows = on;
    let off_at = [0usize, 2_500, 5_000, 8_000, 11_000, 14_000, BENCH_LINES];
    debug_assert_eq!(off_at.len(), N_OFF);
    for (k, &pos) in off_at.iter().enumerate().rev() {
        let z = (k * 5) % BENCH_ZONES;
        let i = rng.gen_range(0..sizes[z]);
        let mut j = rng.gen_range(0..sizes[z]);
        while j == i {
            j = rng.gen_range(0..sizes[z]);
        }
        rows.insert(
            pos.min(rows.len()),
            Branch {
                from: starts[z] + i,
                to: starts[z] + j,
                x: rng.gen_range(0.02..0.1),
                rate: rng.gen_range(2000.0..3500.0),
                status: 0,
            },
        );
    }

    // Emit the case text. Bus ids are 1-based positions.
    let mut out = String::with_capacity(2 << 20);
    out.push_str("function mpc = bench9241\n");
    out.push_str(&format!(
        "% synthetic benchmark: {BENCH_BUSES} buses, {BENCH_LINES} in-service branches,\n\
         % {BENCH_ZONES} zones, {BENCH_REGIONS} regions; deterministically generated, not measured data\n"
    ));
    out.push_str("mpc.version = '2';\nmpc.baseMVA = 100;\n\n");

    out.push_str("mpc.bus = [\n");
    let zone_of =
        |bus: usize| -> usize { (0..BENCH_ZONES).rfind(|&z| starts[z] <= bus).unwrap_or(0) };
    for b in 0..BENCH_BUSES {
        let z = zone_of(b);
        let btype = if b == 0 { 3 } else { 1 };
        out.push_str(&format!(
            "{} {btype} {:.2} 0 0 0 {} 1 0 380 {} 1.1 0.9;\n",
            b + 1,
            demand[b],
            region_of_zone(z) + 1,
            z + 1
        ));
    }
    out.push_str("];\n\nmpc.gen = [\n");
    for &(bus, pmax) in &gens {
        out.push_str(&format!("{} 0 0 0 0 1 100 1 {pmax:.1} 0;\n", bus + 1));
    }
    out.push_str("];\n\nmpc.branch = [\n");
    for br in &rows {
        out.push_str(&format!(
            "{} {} 0 {:.4} 0 {:.0} 0 0 0 0 {} -360 360;\n",
            br.from + 1,
            br.to + 1,
            br.x,
            br.rate,
            br.status
        ));
    }
    out.push_str("];\n");

    // Aggregation config: regions collect whole zones, in declaration order.
    let mut regions = serde_json::Map::new();
    for (r, name) in REGION_NAMES.iter().enumerate() {
        let ids: Vec<u64> = (0..BENCH_ZONES)
            .filter(|&z| region_of_zone(z) == r)
            .flat_map(|z| (starts[z]..starts[z] + sizes[z]).map(|b| b as u64 + 1))
            .collect();
        regions.insert((*name).into(), serde_json::json!(ids));
    }
    let aggregation_text = serde_json::to_string_pretty(&serde_json::json!({
        "regions": regions
    }))
    .expect("aggregation serialization cannot fail");

    BenchmarkCase { case_text: out, aggregation_text }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::casefmt::{parse_aggregation, parse_matpower};
    use crate::netmodel::{is_feasible, DcSolver, UNLIMITED_MW};
    use nalgebra::DVector;

    #[test]
    fn counts_are_exact_and_network_is_connected() {
        let case = benchmark_case();
        let net = parse_matpower(&case.case_text).unwrap();
        assert_eq!(net.n_bus(), BENCH_BUSES);
        assert_eq!(net.n_line(), BENCH_LINES);
        net.validate().unwrap();
        DcSolver::new(&net).unwrap();
        let unlimited = net.lines.iter().filter(|l| l.limit >= UNLIMITED_MW).count();
        assert!(unlimited > 500, "expected a body of unrated branches, got {unlimited}");
        let total_demand: f64 = net.buses.iter().map(|b| b.demand).sum();
        let total_capacity: f64 = net.buses.iter().map(|b| b.gen_max).sum();
        assert!(total_capacity > 1.5 * total_demand);
    }

    #[test]
    fn aggregation_partitions_into_four_regions() {
        let case = benchmark_case();
        let net = parse_matpower(&case.case_text).unwrap();
        let agg = parse_aggregation(&case.aggregation_text, &net).unwrap();
        assert_eq!(agg.n_regions, BENCH_REGIONS);
        let mut sizes = vec![0usize; BENCH_REGIONS];
        for &r in &agg.region_of {
            sizes[r] += 1;
        }
        assert_eq!(sizes.iter().sum::<usize>(), BENCH_BUSES);
        for (r, &s) in sizes.iter().enumerate() {
            assert!(s > 2000, "region {r} has only {s} buses");
        }
    }

    #[test]
    fn zone_proportional_dispatch_is_line_feasible() {
        let case = benchmark_case();
        let net = parse_matpower(&case.case_text).unwrap();
        let sizes = zone_sizes();
        let mut x = DVector::zeros(BENCH_BUSES);
        let mut bus = 0;
        for n in sizes {
            let demand: f64 = (bus..bus + n).map(|b| net.buses[b].demand).sum();
            let capacity: f64 = (bus..bus + n).map(|b| net.buses[b].gen_max).sum();
            let alpha = demand / capacity;
            for b in bus..bus + n {
                x[b] = alpha * net.buses[b].gen_max - net.buses[b].demand;
            }
            bus += n;
        }
        assert!(is_feasible(&net, &x).unwrap(), "zone-balanced dispatch overloads a line");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = benchmark_case();
        let b = benchmark_case();
        assert_eq!(a.case_text, b.case_text);
        assert_eq!(a.aggregation_text, b.aggregation_text);
    }
}
