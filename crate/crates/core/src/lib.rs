pub mod autf2;
pub mod family;
pub mod groups;
pub mod irs;
pub mod report;
pub mod smallcanc;
pub mod words;
