pub mod pcl;
pub mod powl;
pub mod semantics;
pub mod convert;
pub mod serialize;
pub mod llm;
