//! One module per subcommand. Each takes a parsed config file, a seed and
//! an output prefix, runs the experiment, and writes its files plus the
//! resolved-config echo.

pub mod angle_scan;
pub mod fringe;
pub mod leakage;
pub mod pump_scan;
pub mod servo;
pub mod strengths;
