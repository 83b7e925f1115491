//! Seeded synthetic corpora with known structure.
//!
//! Every query belongs to a topic and carries one clue word for its
//! category. Cited papers share topic words with their query. Under
//! [`LabelRule::TopicAndCategory`] each topic holds one paper per category
//! and a query cites only the one matching its own category, so the
//! citation decision needs both signals.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AzCategory, Corpus, Paper, Query};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// One paper per topic; a query cites its topic's paper.
    #[default]
    Topic,
    /// One paper per (topic, category); a query cites the paper of its own
    /// topic and category.
    TopicAndCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub queries: usize,
    pub topics: usize,
    pub rule: LabelRule,
    /// Distinct words per topic; papers use all of them, queries two.
    pub topic_words: usize,
    /// Distinct clue words per category.
    pub clue_words: usize,
    /// Size of the shared filler vocabulary.
    pub filler_words: usize,
    pub query_filler: usize,
    pub abstract_filler: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            queries: 500,
            topics: 10,
            rule: LabelRule::Topic,
            topic_words: 2,
            clue_words: 3,
            filler_words: 60,
            query_filler: 4,
            abstract_filler: 6,
            seed: 0,
        }
    }
}

fn topic_word(topic: usize, j: usize) -> String {
    format!("topic{topic}x{j}")
}

fn clue_word(category: AzCategory, j: usize) -> String {
    format!("cue{}x{j}", category.name().to_lowercase())
}

fn paper_id(topic: usize, category: Option<AzCategory>) -> String {
    match category {
        None => format!("T{topic:03}"),
        Some(c) => format!("T{topic:03}-{}", c.name().to_lowercase()),
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        if self.queries == 0 || self.topics < 2 || self.topic_words < 2 || self.clue_words == 0 || self.filler_words == 0
        {
            return Err(Error::Config(
                "synthetic corpus needs queries, at least 2 topics, 2 topic words and some clue and filler words".into(),
            ));
        }
        Ok(())
    }

    /// Builds the corpus. Categories cycle through all five so that every
    /// class is equally frequent; topics and words are drawn from the seed.
    pub fn generate(&self) -> Result<Corpus> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let filler: Vec<String> = (0..self.filler_words).map(|i| format!("w{i}")).collect();
        let mut corpus = Corpus::default();

        let kinds: Vec<Option<AzCategory>> = match self.rule {
            LabelRule::Topic => vec![None],
            LabelRule::TopicAndCategory => AzCategory::ALL.iter().copied().map(Some).collect(),
        };
        for topic in 0..self.topics {
            for &kind in &kinds {
                let mut p = Paper::new(paper_id(topic, kind));
                let mut title = vec![topic_word(topic, 0), topic_word(topic, 1)];
                if let Some(c) = kind {
                    title.push(format!("kind{}", c.name().to_lowercase()));
                }
                p.title = title.join(" ");
                let mut words: Vec<String> = (0..self.topic_words).map(|j| topic_word(topic, j)).collect();
                words.extend((0..self.abstract_filler).map(|_| filler.choose(&mut rng).unwrap().clone()));
                words.shuffle(&mut rng);
                p.abstract_text = words.join(" ");
                p.pub_year = Some(2000 + (topic % 20) as i32);
                corpus.insert_paper(p);
            }
        }

        for n in 0..self.queries {
            let category = AzCategory::ALL[n % AzCategory::ALL.len()];
            let topic = rng.gen_range(0..self.topics);
            let mut picks: Vec<usize> = (0..self.topic_words).collect();
            picks.shuffle(&mut rng);
            let mut words: Vec<String> = picks[..2].iter().map(|&j| topic_word(topic, j)).collect();
            words.push(clue_word(category, rng.gen_range(0..self.clue_words)));
            words.extend((0..self.query_filler).map(|_| filler.choose(&mut rng).unwrap().clone()));
            words.shuffle(&mut rng);
            words.push("[CITE]".into());
            let cited = match self.rule {
                LabelRule::Topic => paper_id(topic, None),
                LabelRule::TopicAndCategory => paper_id(topic, Some(category)),
            };
            corpus.queries.push(Query {
                query_id: format!("S{n:05}"),
                citing_id: None,
                cited_id: cited,
                text: words.join(" ") + ".",
                context: String::new(),
                az_label: category,
            });
        }
        Ok(corpus)
    }
}
