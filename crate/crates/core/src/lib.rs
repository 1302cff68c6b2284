pub mod diff;
pub mod model;
pub mod parser;
pub mod refactor;
pub mod vcs;
pub mod window;
pub mod store;
pub mod pipeline;
pub mod report;
pub mod cli;

// The guide's snippets run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/windows.md")]
    mod windows {}
    #[doc = include_str!("../../../book/src/methods.md")]
    mod methods {}
    #[doc = include_str!("../../../book/src/changes.md")]
    mod changes {}
    #[doc = include_str!("../../../book/src/refactorings.md")]
    mod refactorings {}
    #[doc = include_str!("../../../book/src/storage.md")]
    mod storage {}
    #[doc = include_str!("../../../book/src/reports.md")]
    mod reports {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
