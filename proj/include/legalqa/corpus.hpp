#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "legalqa/fact_graph.hpp"
#include "legalqa/provider.hpp"

namespace legalqa {

struct CaseDocument {
  std::string id;
  std::string text;
  std::string jurisdiction;
  bool operator==(const CaseDocument&) const = default;
};

/// Issue / Rule / Application / Conclusion split of one case. Sections keep
/// their fact and rule markup:
///   [[rule:<label>]]                    a legal rule (RULE section)
///   [[fact:<label>|<alias>|<alias>]]    a material fact (APPLICATION section)
/// A fact is linked to every rule referenced in the same APPLICATION sentence.
struct IracFrame {
  std::string case_id;
  std::string issue;
  std::string rule;
  std::string application;
  std::string conclusion;
  bool operator==(const IracFrame&) const = default;
};

/// q_i and its key-node set N_i (the fact nodes of the case graph).
struct SummaryQuestion {
  std::string question_id;
  std::string text;
  std::set<std::string> key_nodes;
  std::string source_case;
  bool operator==(const SummaryQuestion&) const = default;
};

/// q̂_i: the summary question with N̂_i removed.
struct MaskedQuestion {
  std::string base;
  std::string text;
  std::set<std::string> masked_nodes;
  std::set<std::string> retained_nodes;
  std::uint64_t seed = 0;
  bool operator==(const MaskedQuestion&) const = default;
};

enum class QuestionLabel { deficient, complete };

struct LabeledQuestion {
  std::string text;
  QuestionLabel label = QuestionLabel::complete;
  std::set<std::string> missing;

  static LabeledQuestion complete_from(const SummaryQuestion& q);
  static LabeledQuestion deficient_from(const MaskedQuestion& q);
  bool sound() const { return (label == QuestionLabel::deficient) == !missing.empty(); }
};

// --- IRAC parsing -----------------------------------------------------------

/// True when the text carries the ISSUE:/RULE:/APPLICATION: delimiters.
bool has_irac_delimiters(std::string_view text);

/// Splits delimited text. Throws parse_error naming the first missing
/// mandatory section; CONCLUSION may be absent or empty.
IracFrame split_irac(const std::string& case_id, std::string_view text);

/// Delimited documents are split directly; anything else is sent to the
/// model for IRAC segmentation and its reply is split. Empty text, or an
/// undelimited document with no model, is a parse_error.
IracFrame parse_case(const CaseDocument& doc, LanguageModel* model);

/// Replaces markup with its surface label.
std::string strip_markup(std::string_view text);

/// Builds g_i from the markup. No facts → empty_graph; a referenced rule not
/// declared in the RULE section → parse_error.
CaseGraph extract_case_graph(const IracFrame& frame);

/// Deterministic question used when no model is configured.
std::string default_summary_text(const std::string& issue, const std::vector<std::string>& fact_labels);

/// key_nodes = fact nodes of g. With a model, its reply is used verbatim and
/// must mention every fact label (protocol_error otherwise).
SummaryQuestion summarize_question(const IracFrame& frame, const CaseGraph& graph, LanguageModel* model);

// --- Masking ----------------------------------------------------------------

/// max(1, round(fraction * n)).
std::size_t masked_count(double fraction, std::size_t key_nodes);

/// Seeded choice of N̂_i: Fisher-Yates over the sorted key nodes with
/// std::mt19937_64(seed), swapping position i with draw % (i + 1) from the
/// top down; the first masked_count entries are masked. The text drops every
/// sentence that mentions only masked nodes and erases masked surface strings
/// elsewhere.
MaskedQuestion mask_nodes(const SummaryQuestion& question, const std::map<std::string, FactRuleNode>& nodes,
                          double fraction, std::uint64_t seed);

/// Optional model rewrite of the masked text. Rejected (protocol_error) if
/// any masked surface string survives.
MaskedQuestion paraphrase_masked(const MaskedQuestion& masked, const std::map<std::string, FactRuleNode>& nodes,
                                 LanguageModel& model);

// --- Ingestion --------------------------------------------------------------

struct IngestRecord {
  CaseDocument document;
  IracFrame frame;
  CaseGraph graph;
  SummaryQuestion question;
  bool operator==(const IngestRecord&) const = default;
};

IngestRecord ingest_case(const CaseDocument& doc, LanguageModel* model);

json to_json(const CaseDocument& doc);
json to_json(const IracFrame& frame);
json to_json(const SummaryQuestion& q);
json to_json(const MaskedQuestion& q);
json to_json(const IngestRecord& record);
CaseDocument case_document_from_json(const json& j);
IracFrame irac_frame_from_json(const json& j);
SummaryQuestion summary_question_from_json(const json& j);
MaskedQuestion masked_question_from_json(const json& j);
IngestRecord ingest_record_from_json(const json& j);

/// JSON-lines corpus of {id, jurisdiction, text}. Ids must be unique and
/// texts non-empty.
std::vector<CaseDocument> load_corpus(const std::filesystem::path& path);
void save_corpus(const std::vector<CaseDocument>& docs, const std::filesystem::path& path);

std::vector<IngestRecord> load_ingest_records(const std::filesystem::path& path);
void save_ingest_records(const std::vector<IngestRecord>& records, const std::filesystem::path& path);

/// Reads a JSON-lines file, skipping blank lines.
std::vector<json> read_json_lines(const std::filesystem::path& path);

}  // namespace legalqa
