//! JATS article parsing and citation masking.

use std::sync::LazyLock;

use regex::Regex;
use roxmltree::{Document, Node};
use serde::{Deserialize, Serialize};

use super::types::{AzCategory, Paper, Query};
use crate::error::{Error, Result};

pub const CITE_TOKEN: &str = "[CITE]";

const XREF: &str = r#"<xref\b[^>]*?\bref-type\s*=\s*["']bibr["'][^>]*?(?:/>|>.*?</xref>)"#;

/// A bracketed group of bibliographic cross-references, or a bare one.
static XREF_GROUP: LazyLock<Regex> = LazyLock::new(|| {
    let sep = r"\s*(?:[,;]|-|–|&#x2013;|&#8211;)\s*";
    Regex::new(&format!(
        r"(?s)[\(\[]\s*{XREF}(?:{sep}{XREF})*\s*[\)\]]|{XREF}"
    ))
    .expect("static regex")
});

static XREF_ONE: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!("(?s){XREF}")).unwrap());

static RID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r#"\brid\s*=\s*["']([^"']*)["']"#).unwrap());

static TAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[^>]*>").unwrap());

static SPACE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\s+").unwrap());

/// Plain-text citation marker patterns, used when a sentence has no XML markers.
#[derive(Debug, Clone)]
pub struct MarkerPatterns {
    patterns: Vec<Regex>,
}

impl MarkerPatterns {
    pub fn new(patterns: &[&str]) -> Result<Self> {
        let patterns = patterns
            .iter()
            .map(|p| Regex::new(p).map_err(|e| Error::Config(format!("bad marker pattern `{p}`: {e}"))))
            .collect::<Result<_>>()?;
        Ok(MarkerPatterns { patterns })
    }

    pub fn none() -> Self {
        MarkerPatterns { patterns: Vec::new() }
    }
}

impl Default for MarkerPatterns {
    fn default() -> Self {
        const NAME: &str = r"[A-Z][A-Za-z'’\-]+";
        let author_year = format!(
            r"\((?:{NAME}(?: et al\.?| (?:and|&) {NAME})?,? \d{{4}}[a-z]?(?:;\s*)?)+\)"
        );
        MarkerPatterns::new(&[r"\[\d+(?:\s*[,–\-]\s*\d+)*\]", &author_year]).expect("default patterns")
    }
}

/// Replaces every citation marker in `sentence` with `[CITE]`.
///
/// XML `xref` elements of type `bibr` are replaced together with any
/// brackets that enclose only markers, so `SGs (<xref …>35</xref>).`
/// becomes `SGs [CITE].`. Plain-text markers matched by the fallback
/// patterns are replaced too, so masking is idempotent. Everything else is
/// kept byte for byte.
///
/// ```
/// use citeaz::ingest::mask_citations;
///
/// let s = r#"interact with SGs (<xref ref-type="bibr" rid="b35">35</xref>)."#;
/// assert_eq!(mask_citations(s), "interact with SGs [CITE].");
/// assert_eq!(mask_citations("A [CITE] B"), "A [CITE] B");
/// ```
pub fn mask_citations(sentence: &str) -> String {
    mask_citations_with(sentence, &MarkerPatterns::default())
}

pub fn mask_citations_with(sentence: &str, fallback: &MarkerPatterns) -> String {
    let mut out = if XREF_ONE.is_match(sentence) {
        XREF_GROUP.replace_all(sentence, CITE_TOKEN).into_owned()
    } else {
        sentence.to_string()
    };
    for p in &fallback.patterns {
        out = p.replace_all(&out, CITE_TOKEN).into_owned();
    }
    out
}

/// One entry of the article's reference list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    /// Local identifier used by `xref/@rid`.
    pub rid: String,
    /// Corpus-wide identifier: PMID, then DOI, then `<article>#<rid>`.
    pub paper_id: String,
    pub title: String,
    pub year: Option<i32>,
}

impl Reference {
    /// A stub paper for the cited work, carrying its year and title.
    pub fn to_paper(&self) -> Paper {
        let mut p = Paper::new(self.paper_id.clone());
        p.title = self.title.clone();
        p.pub_year = self.year;
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedArticle {
    pub paper: Paper,
    /// Citing sentences; `cited_id` holds the local `rid` of the marker.
    pub queries: Vec<Query>,
    pub references: Vec<Reference>,
    /// Markers skipped because they had no `rid`.
    pub warnings: usize,
}

impl ParsedArticle {
    /// Rewrites each query's `cited_id` from the local `rid` to the
    /// corpus-wide reference id. Unknown rids are left as they are.
    pub fn resolve_citations(&mut self) {
        for q in &mut self.queries {
            if let Some(r) = self.references.iter().find(|r| r.rid == q.cited_id) {
                q.cited_id = r.paper_id.clone();
            }
        }
    }
}

fn byte_offset(text: &str, pos: roxmltree::TextPos) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == pos.row as usize {
            let col = (pos.col as usize).saturating_sub(1);
            return offset + line.char_indices().nth(col).map_or(line.len(), |(b, _)| b);
        }
        offset += line.len();
    }
    text.len()
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn descendant<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.descendants().find(|c| c.has_tag_name(name))
}

fn text_of(node: Node<'_, '_>) -> String {
    let raw: String = node
        .descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect::<Vec<_>>()
        .join("");
    normalize_space(&raw)
}

fn normalize_space(s: &str) -> String {
    SPACE.replace_all(s.trim(), " ").into_owned()
}

fn inner_xml<'i>(source: &'i str, node: Node<'_, 'i>) -> &'i str {
    let outer = &source[node.range()];
    if outer.ends_with("/>") {
        return "";
    }
    let open_end = outer.find('>').map_or(0, |i| i + 1);
    let close_start = outer.rfind("</").unwrap_or(outer.len());
    &outer[open_end..close_start.max(open_end)]
}

fn unescape(s: &str) -> String {
    static ENTITY: LazyLock<Regex> =
        LazyLock::new(|| Regex::new(r"&(#x[0-9A-Fa-f]+|#[0-9]+|amp|lt|gt|quot|apos);").unwrap());
    ENTITY
        .replace_all(s, |caps: &regex::Captures<'_>| {
            let e = &caps[1];
            match e {
                "amp" => "&".to_string(),
                "lt" => "<".to_string(),
                "gt" => ">".to_string(),
                "quot" => "\"".to_string(),
                "apos" => "'".to_string(),
                _ => {
                    let code = if let Some(hex) = e.strip_prefix("#x") {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        e[1..].parse().ok()
                    };
                    code.and_then(char::from_u32).map_or_else(|| caps[0].to_string(), String::from)
                }
            }
        })
        .into_owned()
}

fn parse_year(s: &str) -> Option<i32> {
    let digits: String = s.chars().filter(char::is_ascii_digit).take(4).collect();
    (digits.len() == 4).then(|| digits.parse().ok()).flatten()
}

const ABBREVIATIONS: &[&str] = &[
    "al", "e.g", "i.e", "fig", "figs", "vs", "cf", "dr", "eq", "eqs", "ref", "refs", "no", "approx", "ca",
    "resp", "viz", "etc", "sp", "spp", "st", "mr", "mrs", "ms", "prof", "inc", "vol", "pp",
];

/// Splits text into sentences at `.`, `!` or `?` followed by whitespace and
/// an upper-case letter, digit, opening bracket or quote. A period after a
/// known abbreviation or a single-letter initial does not end a sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut sentences = Vec::new();
    let mut start = 0;
    for (k, &(byte, c)) in chars.iter().enumerate() {
        if !matches!(c, '.' | '!' | '?') {
            continue;
        }
        let Some(&(_, next)) = chars.get(k + 1) else {
            continue;
        };
        if !next.is_whitespace() {
            continue;
        }
        let Some(&(_, after)) = chars[k + 1..].iter().find(|(_, ch)| !ch.is_whitespace()) else {
            continue;
        };
        if !(after.is_uppercase() || after.is_ascii_digit() || "([\"'“\u{E000}".contains(after)) {
            continue;
        }
        if c == '.' {
            let word: String = text[start..byte]
                .rsplit(|ch: char| ch.is_whitespace() || ch == '(')
                .next()
                .unwrap_or("")
                .to_lowercase();
            let is_initial = word.chars().count() == 1 && word.chars().all(char::is_alphabetic);
            if is_initial || ABBREVIATIONS.contains(&word.as_str()) {
                continue;
            }
        }
        let end = byte + c.len_utf8();
        let s = text[start..end].trim();
        if !s.is_empty() {
            sentences.push(s.to_string());
        }
        start = end;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

const OPEN: char = '\u{E000}';
const CLOSE: char = '\u{E001}';

/// A paragraph with citation groups replaced by numbered placeholders.
struct MarkedParagraph {
    text: String,
    groups: Vec<Vec<Option<String>>>,
}

fn mark_paragraph(raw: &str) -> MarkedParagraph {
    let mut groups = Vec::new();
    let replaced = XREF_GROUP.replace_all(raw, |caps: &regex::Captures<'_>| {
        let rids = XREF_ONE
            .find_iter(&caps[0])
            .map(|m| {
                let open_tag = &m.as_str()[..m.as_str().find('>').map_or(m.len(), |i| i + 1)];
                RID.captures(open_tag)
                    .map(|c| c[1].trim().to_string())
                    .filter(|r| !r.is_empty())
            })
            .collect();
        groups.push(rids);
        format!("{OPEN}{}{CLOSE}", groups.len() - 1)
    });
    let stripped = TAG.replace_all(&replaced, "");
    MarkedParagraph {
        text: normalize_space(&unescape(&stripped)),
        groups,
    }
}

/// Parses one JATS article into its paper record and citing sentences.
///
/// Every sentence with at least one bibliographic cross-reference yields one
/// [`Query`] per distinct cited `rid`, all sharing the sentence's
/// `query_id`. Labels start as [`AzCategory::Other`].
pub fn parse_jats(xml_text: &str) -> Result<ParsedArticle> {
    let doc = Document::parse(xml_text).map_err(|e| Error::Xml {
        offset: byte_offset(xml_text, e.pos()),
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    let front = descendant(root, "article-meta").unwrap_or(root);

    let ids: Vec<Node<'_, '_>> = front.children().filter(|c| c.has_tag_name("article-id")).collect();
    let article_id = ["pmid", "pmc", "pmcid", "doi"]
        .iter()
        .find_map(|kind| ids.iter().find(|n| n.attribute("pub-id-type") == Some(kind)))
        .or_else(|| ids.first())
        .map(|n| text_of(*n))
        .filter(|s| !s.is_empty())
        .ok_or(Error::MissingElement("article-id"))?;

    let mut paper = Paper::new(article_id.clone());
    paper.title = descendant(front, "title-group")
        .and_then(|g| child(g, "article-title"))
        .or_else(|| descendant(front, "article-title"))
        .map(text_of)
        .unwrap_or_default();
    paper.abstract_text = child(front, "abstract")
        .map(|a| {
            let paras: Vec<String> = a.descendants().filter(|n| n.has_tag_name("p")).map(text_of).collect();
            if paras.is_empty() {
                text_of(a)
            } else {
                paras.join(" ")
            }
        })
        .unwrap_or_default();
    paper.pub_year = front
        .children()
        .filter(|c| c.has_tag_name("pub-date"))
        .find_map(|d| child(d, "year"))
        .and_then(|y| parse_year(&text_of(y)));

    let mut references = Vec::new();
    if let Some(ref_list) = descendant(root, "ref-list") {
        for r in ref_list.descendants().filter(|n| n.has_tag_name("ref")) {
            let Some(rid) = r.attribute("id") else { continue };
            let pub_id = |kind: &str| {
                r.descendants()
                    .find(|n| n.has_tag_name("pub-id") && n.attribute("pub-id-type") == Some(kind))
                    .map(text_of)
                    .filter(|s| !s.is_empty())
            };
            let paper_id = pub_id("pmid")
                .or_else(|| pub_id("doi"))
                .unwrap_or_else(|| format!("{article_id}#{rid}"));
            references.push(Reference {
                rid: rid.to_string(),
                paper_id,
                title: descendant(r, "article-title").map(text_of).unwrap_or_default(),
                year: descendant(r, "year").and_then(|y| parse_year(&text_of(y))),
            });
        }
    }
    paper.reference_ids = references
        .iter()
        .map(|r| r.paper_id.clone())
        .filter(|id| *id != article_id)
        .collect();

    let mut queries = Vec::new();
    let mut warnings = 0;
    if let Some(body) = descendant(root, "body") {
        let paragraphs = body
            .descendants()
            .filter(|n| n.has_tag_name("p"))
            .filter(|n| !n.ancestors().skip(1).any(|a| a.has_tag_name("p")));
        for (pi, p) in paragraphs.enumerate() {
            let raw = inner_xml(xml_text, p);
            let marked = mark_paragraph(raw);
            paper.body_paragraphs.push(strip_placeholders(&marked.text));
            if marked.groups.is_empty() {
                continue;
            }
            let context = normalize_space(raw);
            for (si, sentence) in split_sentences(&marked.text).iter().enumerate() {
                let (text, group_ids) = fill_placeholders(sentence, CITE_TOKEN);
                if group_ids.is_empty() {
                    continue;
                }
                let query_id = format!("{article_id}:p{pi}s{si}");
                let mut seen: Vec<&str> = Vec::new();
                for g in group_ids {
                    for rid in &marked.groups[g] {
                        match rid {
                            None => warnings += 1,
                            Some(rid) if !seen.contains(&rid.as_str()) => {
                                seen.push(rid);
                                queries.push(Query {
                                    query_id: query_id.clone(),
                                    citing_id: Some(article_id.clone()),
                                    cited_id: rid.clone(),
                                    text: text.clone(),
                                    context: context.clone(),
                                    az_label: AzCategory::Other,
                                });
                            }
                            Some(_) => {}
                        }
                    }
                }
            }
        }
    }

    Ok(ParsedArticle {
        paper,
        queries,
        references,
        warnings,
    })
}

fn strip_placeholders(marked: &str) -> String {
    normalize_space(&fill_placeholders(marked, "").0)
}

/// Replaces `OPEN n CLOSE` placeholders with `with`; returns the group ids seen.
fn fill_placeholders(s: &str, with: &str) -> (String, Vec<usize>) {
    let mut out = String::with_capacity(s.len());
    let mut ids = Vec::new();
    let mut rest = s;
    while let Some(open) = rest.find(OPEN) {
        out.push_str(&rest[..open]);
        let after = &rest[open + OPEN.len_utf8()..];
        let Some(close) = after.find(CLOSE) else {
            rest = after;
            continue;
        };
        if let Ok(id) = after[..close].parse() {
            ids.push(id);
        }
        out.push_str(with);
        rest = &after[close + CLOSE.len_utf8()..];
    }
    out.push_str(rest);
    (out, ids)
}
