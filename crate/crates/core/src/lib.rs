pub mod encoding;
pub mod machine;
pub mod store;
pub mod tape;
pub mod rules;
pub(crate) mod syntax;
pub mod universal;
