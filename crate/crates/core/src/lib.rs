pub mod config;
pub mod eval;
pub mod hr;
pub mod io;
pub mod modes;
pub mod pipeline;
pub mod preprocess;
pub mod radar;
pub mod signal;
pub mod spectrum;
pub mod vmd;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/chest-motion.md")]
    mod chest_motion {}
    #[doc = include_str!("../../../book/src/radar.md")]
    mod radar {}
    #[doc = include_str!("../../../book/src/preprocessing.md")]
    mod preprocessing {}
    #[doc = include_str!("../../../book/src/vmd.md")]
    mod vmd {}
    #[doc = include_str!("../../../book/src/mode-selection.md")]
    mod mode_selection {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
}
