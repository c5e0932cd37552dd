//! Command line entry point (placeholder during bring-up).

pub fn run_from_env() -> u8 {
    0
}
