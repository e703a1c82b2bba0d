//! Printed reference values for the interval and threshold tables.

/// Relative check tolerance `1e-3 max(1, |v|)`.
pub fn within_tolerance(computed: f64, printed: f64) -> bool {
    (computed - printed).abs() <= 1e-3 * printed.abs().max(1.0)
}

pub const RATIOS: [f64; 5] = [0.001, 0.01, 0.1, 0.25, 0.5];

/// Crank-Nicolson `r_1..r_4` against `dt / (2 eps^2)`.
pub const TABLE1: [(f64, [f64; 4]); 5] = [
    (0.001, [31.639, 48.124, 60.363, 70.53]),
    (0.01, [10.05, 15.256, 19.123, 22.335]),
    (0.1, [3.317, 4.942, 6.152, 7.159]),
    (0.25, [2.236, 3.243, 3.996, 4.625]),
    (0.5, [1.732, 2.421, 2.941, 3.377]),
];

/// Modified Crank-Nicolson `r_1..r_4` against `dt / (2 eps^2)`.
pub const TABLE2: [(f64, [f64; 4]); 5] = [
    (0.001, [44.766, 75.889, 98.476, 116.931]),
    (0.01, [14.283, 24.165, 31.334, 37.192]),
    (0.1, [4.899, 8.147, 10.497, 12.418]),
    (0.25, [3.464, 5.641, 7.212, 8.497]),
    (0.5, [2.828, 4.503, 5.707, 6.694]),
];

/// DIRK2 `r_1, s_1, ..., r_4, s_4` against `dt / (4 eps^2)`.
pub const TABLE3: [(f64, [f64; 8]); 5] = [
    (0.001, [63.277, 159.524, 280.251, 421.311, 580.137, 754.936, 944.371, 1147.391]),
    (0.01, [20.1, 50.612, 88.857, 133.527, 183.81, 239.141, 299.098, 363.349]),
    (0.1, [6.633, 16.517, 28.821, 43.14, 59.221, 76.889, 96.012, 116.485]),
    (0.25, [4.472, 10.958, 18.95, 28.2, 38.552, 49.898, 62.156, 75.262]),
    (0.5, [3.464, 8.306, 14.188, 20.942, 28.462, 36.675, 45.524, 54.966]),
];

/// Scheme tag and printed step bound.
pub const TABLE4: [(&str, &str); 4] = [
    ("be", "eps^2"),
    ("cn", "2 eps^2"),
    ("modcn", "inf"),
    ("dirk2", "eps^2/max_i a_ii"),
];

pub const TABLE3_LABELS: [&str; 8] = ["r1", "s1", "r2", "s2", "r3", "s3", "r4", "s4"];
pub const R_LABELS: [&str; 4] = ["r1", "r2", "r3", "r4"];
