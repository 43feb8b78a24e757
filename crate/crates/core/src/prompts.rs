//! Built-in prompt templates.
//!
//! These are original reconstructions written for this project; they are
//! shipped as constants so offline runs need no external files. Few-shot
//! counts: extraction is 2-shot, QA generation is 1-shot.

use crate::gateway::{FewShotExample, PromptTemplate};

pub const RECORD_DELIMITER: &str = "##";
pub const FIELD_DELIMITER: &str = "<|>";
pub const COMPLETION_MARKER: &str = "<|COMPLETE|>";

const EXTRACTION_BODY: &str = r#"You are given a passage from a novel. Identify the entities in it (characters, events, locations, concepts) and the relationships among them.

Output format, with no extra commentary:
- One record per entity: ("entity"<|>"NAME"<|>"TYPE"<|>"DESCRIPTION")
- One record per relationship: ("relationship"<|>"SOURCE"<|>"TARGET"<|>"DESCRIPTION"<|>"KEYWORDS"<|>IMPORTANCE)
- Separate records with ## and end the whole output with <|COMPLETE|>
- KEYWORDS is a short comma-separated list characterizing the relationship.
- IMPORTANCE is an integer from 1 to 10 rating how important the relationship is within this passage.

Passage:
{input_text}

Output:"#;

const EXTRACTION_SHOT_1_IN: &str = "Captain Mora steered the battered sloop into the harbor while her first mate, Old Henrik, grumbled about the storm that had cost them the mainsail.";

const EXTRACTION_SHOT_1_OUT: &str = r#"("entity"<|>"CAPTAIN MORA"<|>"character"<|>"Captain of a battered sloop, steers it into harbor after a storm")##("entity"<|>"OLD HENRIK"<|>"character"<|>"First mate of the sloop, grumbles about the storm damage")##("entity"<|>"THE STORM"<|>"event"<|>"A storm that destroyed the sloop's mainsail")##("relationship"<|>"CAPTAIN MORA"<|>"OLD HENRIK"<|>"Mora commands the ship on which Henrik serves as first mate; they weathered the storm together"<|>"command, loyalty, seafaring"<|>7)<|COMPLETE|>"#;

const EXTRACTION_SHOT_2_IN: &str = "At the academy, young Petra studied the forbidden ledger; her tutor Maester Quill had hidden it from the college council for twenty years.";

const EXTRACTION_SHOT_2_OUT: &str = r#"("entity"<|>"PETRA"<|>"character"<|>"A young student at the academy who studies a forbidden ledger")##("entity"<|>"MAESTER QUILL"<|>"character"<|>"Petra's tutor, who hid the forbidden ledger from the college council for twenty years")##("entity"<|>"FORBIDDEN LEDGER"<|>"concept"<|>"A hidden ledger whose contents are forbidden by the college council")##("relationship"<|>"PETRA"<|>"MAESTER QUILL"<|>"Quill tutors Petra and shares the secret of the forbidden ledger with her"<|>"mentorship, secrecy, trust"<|>8)##("relationship"<|>"MAESTER QUILL"<|>"FORBIDDEN LEDGER"<|>"Quill concealed the ledger from the council for two decades"<|>"concealment, defiance"<|>6)<|COMPLETE|>"#;

pub fn extraction() -> PromptTemplate {
    PromptTemplate::new("extraction", EXTRACTION_BODY).with_examples(vec![
        FewShotExample {
            input: EXTRACTION_SHOT_1_IN.into(),
            output: EXTRACTION_SHOT_1_OUT.into(),
        },
        FewShotExample {
            input: EXTRACTION_SHOT_2_IN.into(),
            output: EXTRACTION_SHOT_2_OUT.into(),
        },
    ])
}

const QA_GENERATION_BODY: &str = r#"Below is a description of a relationship between {source} and {target} from a novel, with its keywords. Write exactly one question about this relationship and a complete answer grounded in the description. Include the keywords that the question and answer touch on.

Output format, with no extra commentary:
Question: <one question>
Answer: <a self-contained answer>
Keywords: <comma-separated keywords>

Relationship description:
{description}

Relationship keywords: {keywords}

Output:"#;

const QA_SHOT_IN: &str = "Relationship between CAPTAIN MORA and OLD HENRIK: Mora commands the ship on which Henrik serves as first mate; they weathered the storm together. Keywords: command, loyalty, seafaring";

const QA_SHOT_OUT: &str = "Question: What binds Captain Mora and Old Henrik together aboard the sloop?\nAnswer: Captain Mora commands the sloop on which Old Henrik serves as first mate, and surviving the storm together has reinforced the loyalty between them.\nKeywords: command, loyalty, seafaring, storm";

pub fn qa_generation() -> PromptTemplate {
    PromptTemplate::new("qa_generation", QA_GENERATION_BODY).with_examples(vec![FewShotExample {
        input: QA_SHOT_IN.into(),
        output: QA_SHOT_OUT.into(),
    }])
}

const QA_ANSWER_BODY: &str = r#"Answer the question using ONLY the summary below. Do not use any outside knowledge about the book or its characters. If the summary does not contain the answer, say so briefly.

Summary:
{summary}

Question: {question}

Answer:"#;

pub fn qa_answer() -> PromptTemplate {
    PromptTemplate::new("qa_answer", QA_ANSWER_BODY)
}

const CONDENSE_NODE_BODY: &str = r#"The following are accumulated description fragments for the entity {name}, separated by {separator}. Rewrite them as one concise coherent description that keeps every distinct fact.

Fragments:
{description}

Condensed description:"#;

pub fn condense_node() -> PromptTemplate {
    PromptTemplate::new("condense_node", CONDENSE_NODE_BODY)
}

const CONDENSE_EDGE_BODY: &str = r#"The following are accumulated description fragments for the relationship between {source} and {target}, separated by {separator}. Rewrite them as one concise coherent description that keeps every distinct fact, then give an updated keyword list for the relationship (at most {max_keywords} keywords).

Fragments:
{description}

Output format, with no extra commentary:
<condensed description><|><comma-separated keywords>"#;

pub fn condense_edge() -> PromptTemplate {
    PromptTemplate::new("condense_edge", CONDENSE_EDGE_BODY)
}

const CHUNK_SUMMARY_BODY: &str = r#"Summarize the following excerpt from the novel "{title}". {aspect_clause}Keep the summary under {budget} words and preserve concrete names and events.

Excerpt:
{chunk}

Summary:"#;

pub fn chunk_summary() -> PromptTemplate {
    PromptTemplate::new("chunk_summary", CHUNK_SUMMARY_BODY)
}

const MERGE_SUMMARIES_BODY: &str = r#"Merge the following partial summaries of the novel "{title}" into one coherent summary. {aspect_clause}Keep the result under {budget} words and do not invent events.

Partial summaries:
{summaries}

Merged summary:"#;

pub fn merge_summaries() -> PromptTemplate {
    PromptTemplate::new("merge_summaries", MERGE_SUMMARIES_BODY)
}

const INC_UPDATE_BODY: &str = r#"You maintain a running summary of the novel "{title}". {aspect_clause}Update the running summary with the new excerpt, keeping it under {budget} words.

Running summary so far:
{running}

New excerpt:
{chunk}

Updated summary:"#;

pub fn incremental_update() -> PromptTemplate {
    PromptTemplate::new("incremental_update", INC_UPDATE_BODY)
}

const COMPRESS_BODY: &str = r#"Compress the following summary of the novel "{title}" to under {budget} words without dropping its most important points. {aspect_clause}

Summary:
{summary}

Compressed summary:"#;

pub fn compress_summary() -> PromptTemplate {
    PromptTemplate::new("compress_summary", COMPRESS_BODY)
}

const RAG_QUERY_BODY: &str =
    "Summarize the story of the novel with a focus on its {aspect} genre elements: the events, relationships, and themes most relevant to {aspect}.";

const RAG_QUERY_GENERIC_BODY: &str =
    "Summarize the story of the novel: its main events, characters, and themes.";

/// Retrieval/generation query for one aspect; "GENERIC" omits the aspect.
pub fn rag_query() -> PromptTemplate {
    PromptTemplate::new("rag_query", RAG_QUERY_BODY)
}

pub fn rag_query_generic() -> PromptTemplate {
    PromptTemplate::new("rag_query_generic", RAG_QUERY_GENERIC_BODY)
}

const RAG_GENERATE_BODY: &str = r#"Using only the retrieved passages below, respond to the request. Keep the response under {budget} words.

Request: {query}

Retrieved passages:
{passages}

Response:"#;

pub fn rag_generate() -> PromptTemplate {
    PromptTemplate::new("rag_generate", RAG_GENERATE_BODY)
}

/// The sentence prepended to summarizer prompts for a concrete aspect;
/// empty for the GENERIC mode.
pub fn aspect_clause(aspect: &str) -> String {
    if aspect == crate::qagen::GENERIC_ASPECT {
        String::new()
    } else {
        format!("Focus on content relevant to the {aspect} genre: pick out the events, relationships, and themes a reader interested in {aspect} would care about. ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extraction_is_two_shot() {
        assert_eq!(extraction().few_shot_examples.len(), 2);
    }

    #[test]
    fn qa_generation_is_one_shot() {
        assert_eq!(qa_generation().few_shot_examples.len(), 1);
    }

    #[test]
    fn extraction_renders_with_two_example_blocks() {
        let mut bindings = std::collections::BTreeMap::new();
        bindings.insert("input_text", "Some passage.".to_string());
        let out = extraction().render(&bindings).unwrap();
        assert_eq!(out.matches("Example ").count(), 2);
        assert!(out.contains("Some passage."));
    }

    #[test]
    fn generic_aspect_clause_is_empty() {
        assert_eq!(aspect_clause("GENERIC"), "");
        assert!(aspect_clause("Romance").contains("Romance"));
    }
}
