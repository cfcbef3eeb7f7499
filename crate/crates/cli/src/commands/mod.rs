//! One module per subcommand. Each takes its clap arguments plus the
//! resolved run configuration, applies flag overrides, and does the work.

pub mod convert;
pub mod evaluate;
pub mod infer;
pub mod opcount;
pub mod synth;
pub mod train;
pub mod windows;

/// Replace `slot` with a flag's value when the flag was given.
pub(crate) fn override_with<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}
