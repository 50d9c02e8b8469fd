//! Small constructed cases used by the tests, the acceptance run and the
//! shipped `cases/` directory.

use sccuc_core::grid::{CostBlock, Generator, Line, Load, StartupBlock, WindFarm};
use sccuc_core::GridCase;

/// A thermal unit with three equal cost blocks (slopes `slope`, `1.1·slope`,
/// `1.25·slope`), two start-up blocks, ramp limits of 60% of `p_max`, 2 h
/// minimum up/down time, initially on at `p_min` for 4 h.
pub fn thermal(
    id: u32,
    bus: u32,
    p_min: f64,
    p_max: f64,
    slope: f64,
    no_load: f64,
    startup: f64,
) -> Generator {
    let w = (p_max - p_min) / 3.0;
    Generator {
        id,
        bus,
        p_min,
        p_max,
        cost_blocks: [1.0, 1.1, 1.25]
            .iter()
            .map(|k| CostBlock {
                slope: slope * k,
                width: w,
            })
            .collect(),
        no_load_cost: no_load,
        reserve_price: 0.2 * slope,
        tertiary_price: 0.3 * slope,
        startup_blocks: vec![
            StartupBlock {
                cost: startup,
                min_off: 1,
                max_off: 3,
            },
            StartupBlock {
                cost: 1.5 * startup,
                min_off: 4,
                max_off: 48,
            },
        ],
        ramp_up: 0.6 * p_max,
        ramp_down: 0.6 * p_max,
        min_up: 2,
        min_down: 2,
        initial_on: true,
        initial_up_hours: 4,
        initial_down_hours: 0,
        initial_output: p_min,
        reserve_cap: None,
    }
}

/// Marks `g` as having been off for `hours` before the horizon.
pub fn initially_off(mut g: Generator, hours: u32) -> Generator {
    g.initial_on = false;
    g.initial_up_hours = 0;
    g.initial_down_hours = hours;
    g.initial_output = 0.0;
    g
}

pub fn line(id: u32, from_bus: u32, to_bus: u32, susceptance: f64, capacity: f64) -> Line {
    Line {
        id,
        from_bus,
        to_bus,
        susceptance,
        capacity,
    }
}

pub fn load(bus: u32, demand: &[f64]) -> Load {
    Load {
        bus,
        demand: demand.to_vec(),
    }
}

pub fn wind(bus: u32, forecast: &[f64], std_dev: &[f64]) -> WindFarm {
    WindFarm {
        bus,
        forecast: forecast.to_vec(),
        std_dev: std_dev.to_vec(),
    }
}

#[allow(clippy::too_many_arguments)]
fn case(
    name: &str,
    horizon: usize,
    buses: Vec<u32>,
    reference_bus: u32,
    reserve_cap: f64,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    loads: Vec<Load>,
    wind_farms: Vec<WindFarm>,
    generator_contingencies: Vec<u32>,
    line_contingencies: Vec<u32>,
) -> GridCase {
    GridCase {
        name: name.into(),
        base_mva: 100.0,
        horizon,
        buses,
        reference_bus,
        reserve_cap,
        lines,
        generators,
        loads,
        wind_farms,
        generator_contingencies,
        line_contingencies,
    }
}

/// Three-bus ring, two units, two hours.
pub fn oracle_ring3() -> GridCase {
    case(
        "oracle-ring3",
        2,
        vec![1, 2, 3],
        3,
        150.0,
        vec![
            line(1, 1, 2, 10.0, 90.0),
            line(2, 2, 3, 8.0, 120.0),
            line(3, 1, 3, 12.0, 110.0),
        ],
        vec![
            thermal(1, 1, 20.0, 160.0, 12.0, 100.0, 200.0),
            thermal(2, 3, 10.0, 140.0, 25.0, 80.0, 150.0),
        ],
        vec![load(2, &[110.0, 135.0])],
        vec![wind(1, &[20.0, 25.0], &[6.0, 8.0])],
        vec![1],
        vec![3],
    )
}

/// Four-bus ring with a chord, three units, three hours.
pub fn oracle_ring4() -> GridCase {
    case(
        "oracle-ring4",
        3,
        vec![1, 2, 3, 4],
        1,
        120.0,
        vec![
            line(1, 1, 2, 10.0, 100.0),
            line(2, 2, 3, 10.0, 80.0),
            line(3, 3, 4, 10.0, 100.0),
            line(4, 4, 1, 10.0, 100.0),
            line(5, 1, 3, 5.0, 60.0),
        ],
        vec![
            thermal(1, 1, 20.0, 150.0, 10.0, 120.0, 300.0),
            thermal(2, 2, 15.0, 120.0, 18.0, 90.0, 200.0),
            thermal(3, 4, 5.0, 90.0, 30.0, 40.0, 60.0),
        ],
        vec![
            load(3, &[120.0, 150.0, 135.0]),
            load(4, &[40.0, 45.0, 50.0]),
        ],
        vec![wind(2, &[30.0, 25.0, 35.0], &[8.0, 9.0, 7.0])],
        vec![1, 2],
        vec![1],
    )
}

/// Five buses, three units (one starting offline), two hours.
pub fn oracle_five_bus() -> GridCase {
    case(
        "oracle-five-bus",
        2,
        vec![1, 2, 3, 4, 5],
        1,
        120.0,
        vec![
            line(1, 1, 2, 10.0, 120.0),
            line(2, 2, 3, 8.0, 90.0),
            line(3, 3, 4, 10.0, 90.0),
            line(4, 4, 5, 8.0, 100.0),
            line(5, 5, 1, 10.0, 120.0),
            line(6, 2, 5, 6.0, 80.0),
        ],
        vec![
            thermal(1, 1, 30.0, 180.0, 11.0, 150.0, 250.0),
            thermal(2, 3, 10.0, 100.0, 20.0, 60.0, 100.0),
            initially_off(thermal(3, 4, 5.0, 80.0, 28.0, 30.0, 40.0), 3),
        ],
        vec![load(3, &[90.0, 110.0]), load(4, &[60.0, 70.0])],
        vec![wind(5, &[25.0, 20.0], &[7.0, 6.0])],
        vec![2],
        vec![2, 5],
    )
}

/// Six buses, four units, four hours.
pub fn oracle_six_bus() -> GridCase {
    case(
        "oracle-six-bus",
        4,
        vec![1, 2, 3, 4, 5, 6],
        1,
        100.0,
        vec![
            line(1, 1, 2, 10.0, 100.0),
            line(2, 1, 4, 10.0, 90.0),
            line(3, 2, 3, 8.0, 80.0),
            line(4, 2, 5, 10.0, 90.0),
            line(5, 3, 6, 10.0, 90.0),
            line(6, 4, 5, 8.0, 70.0),
            line(7, 5, 6, 8.0, 70.0),
        ],
        vec![
            thermal(1, 1, 25.0, 160.0, 10.0, 140.0, 300.0),
            thermal(2, 2, 15.0, 120.0, 16.0, 90.0, 150.0),
            thermal(3, 3, 10.0, 90.0, 22.0, 50.0, 80.0),
            initially_off(thermal(4, 6, 5.0, 60.0, 35.0, 20.0, 30.0), 2),
        ],
        vec![
            load(4, &[60.0, 70.0, 80.0, 65.0]),
            load(5, &[70.0, 80.0, 95.0, 75.0]),
            load(6, &[50.0, 55.0, 60.0, 50.0]),
        ],
        vec![wind(5, &[20.0, 25.0, 30.0, 20.0], &[6.0, 7.0, 8.0, 6.0])],
        vec![1, 3],
        vec![1, 4],
    )
}

/// Four-bus ring, two units, four hours. The peaker starts offline and must
/// come on to cover the outage of the large unit.
pub fn oracle_startup() -> GridCase {
    let mut peaker = initially_off(thermal(2, 3, 10.0, 100.0, 24.0, 50.0, 120.0), 1);
    peaker.min_up = 1;
    peaker.min_down = 1;
    case(
        "oracle-startup",
        4,
        vec![1, 2, 3, 4],
        1,
        150.0,
        vec![
            line(1, 1, 2, 10.0, 120.0),
            line(2, 2, 3, 10.0, 120.0),
            line(3, 3, 4, 10.0, 120.0),
            line(4, 4, 1, 10.0, 120.0),
        ],
        vec![thermal(1, 1, 20.0, 200.0, 9.0, 100.0, 400.0), peaker],
        vec![
            load(2, &[30.0, 45.0, 50.0, 35.0]),
            load(4, &[30.0, 35.0, 40.0, 30.0]),
        ],
        vec![wind(4, &[15.0, 20.0, 10.0, 15.0], &[5.0, 6.0, 4.0, 5.0])],
        vec![1],
        vec![2],
    )
}

/// The constructed instances compared against the extensive form.
pub fn oracle_cases() -> Vec<GridCase> {
    vec![
        oracle_ring3(),
        oracle_ring4(),
        oracle_five_bus(),
        oracle_six_bus(),
        oracle_startup(),
    ]
}

/// Three-bus ring where a cheap unit at bus 1 serves a load at the
/// reference bus. Losing line 3 routes everything over lines 1 and 2, and
/// only line 1 is too small for that.
pub fn single_line_contingency() -> GridCase {
    case(
        "single-line-contingency",
        1,
        vec![1, 2, 3],
        3,
        200.0,
        vec![
            line(1, 1, 2, 1.0, 100.0),
            line(2, 2, 3, 1.0, 300.0),
            line(3, 1, 3, 1.0, 300.0),
        ],
        vec![
            thermal(1, 1, 0.0, 250.0, 10.0, 0.0, 0.0),
            thermal(2, 3, 0.0, 250.0, 40.0, 0.0, 0.0),
        ],
        vec![load(3, &[180.0])],
        vec![wind(1, &[0.0], &[5.0])],
        vec![],
        vec![3],
    )
}

/// Three-bus ring whose base-case line 3 limits the cheap unit, so the line
/// chance constraint holds with equality at the optimum. No choice of
/// participation factors cancels both wind farms on that line.
pub fn binding_base_line() -> GridCase {
    case(
        "binding-base-line",
        1,
        vec![1, 2, 3],
        3,
        200.0,
        vec![
            line(1, 1, 2, 1.0, 300.0),
            line(2, 2, 3, 1.0, 300.0),
            line(3, 1, 3, 1.0, 100.0),
        ],
        vec![
            thermal(1, 1, 0.0, 250.0, 10.0, 0.0, 0.0),
            thermal(2, 3, 0.0, 250.0, 40.0, 0.0, 0.0),
        ],
        vec![load(3, &[200.0])],
        vec![wind(1, &[0.0], &[10.0]), wind(2, &[0.0], &[10.0])],
        vec![],
        vec![],
    )
}

const DAY_LOAD: [f64; 24] = [
    0.67, 0.63, 0.60, 0.59, 0.59, 0.60, 0.74, 0.86, 0.95, 0.96, 0.96, 0.95, 0.95, 0.95, 0.93, 0.94,
    0.99, 1.00, 1.00, 0.96, 0.91, 0.83, 0.73, 0.63,
];

const DAY_WIND: [f64; 24] = [
    0.80, 0.85, 0.90, 0.88, 0.85, 0.80, 0.70, 0.60, 0.55, 0.50, 0.45, 0.40, 0.40, 0.42, 0.45, 0.50,
    0.55, 0.60, 0.65, 0.70, 0.75, 0.78, 0.80, 0.82,
];

/// Six-bus, five-unit, 24-hour system with two wind farms, before any
/// capacity scaling.
pub fn six_bus_day() -> GridCase {
    let peak = [(4, 150.0), (5, 160.0), (6, 130.0)];
    let loads = peak
        .iter()
        .map(|&(bus, p)| load(bus, &DAY_LOAD.map(|k| (k * p * 100.0).round() / 100.0)))
        .collect();
    let farm = |bus: u32, cap: f64| {
        let f = DAY_WIND.map(|k| (k * cap * 100.0).round() / 100.0);
        let s = f.map(|v| (0.15 * v * 100.0).round() / 100.0 + 2.0);
        wind(bus, &f, &s)
    };
    case(
        "six-bus-day",
        24,
        vec![1, 2, 3, 4, 5, 6],
        1,
        120.0,
        vec![
            line(1, 1, 2, 10.0, 120.0),
            line(2, 1, 4, 10.0, 120.0),
            line(3, 1, 5, 8.0, 70.0),
            line(4, 2, 3, 8.0, 80.0),
            line(5, 2, 4, 10.0, 120.0),
            line(6, 2, 5, 8.0, 90.0),
            line(7, 2, 6, 8.0, 90.0),
            line(8, 3, 5, 8.0, 80.0),
            line(9, 3, 6, 10.0, 100.0),
            line(10, 4, 5, 6.0, 60.0),
            line(11, 5, 6, 6.0, 60.0),
        ],
        vec![
            thermal(1, 1, 50.0, 220.0, 11.0, 200.0, 600.0),
            thermal(2, 2, 40.0, 180.0, 14.0, 150.0, 400.0),
            thermal(3, 3, 20.0, 150.0, 20.0, 80.0, 200.0),
            initially_off(thermal(4, 6, 10.0, 80.0, 32.0, 40.0, 60.0), 6),
            initially_off(thermal(5, 4, 5.0, 60.0, 40.0, 20.0, 30.0), 6),
        ],
        loads,
        vec![farm(4, 60.0), farm(6, 50.0)],
        vec![1, 2],
        vec![4, 9],
    )
}

/// [`six_bus_day`] with line capacities at 90%.
pub fn stressed_six_bus() -> GridCase {
    let mut c = six_bus_day().with_line_capacity_scale(0.9);
    c.name = "six-bus-day-stressed".into();
    c
}

/// A case with more load than capacity.
pub fn overloaded() -> GridCase {
    let mut c = oracle_ring3();
    c.name = "overloaded".into();
    c.loads = vec![load(2, &[400.0, 420.0])];
    c
}
