pub mod cdg;
pub mod dynamic;
pub mod frontend;
pub mod grader;
pub mod knowledgebase;
pub mod matcher;
pub mod summarizer;
pub mod term;
