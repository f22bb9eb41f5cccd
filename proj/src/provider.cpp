#include "legalqa/provider.hpp"

#include <cmath>
#include <fstream>

#include "legalqa/error.hpp"
#include "legalqa/text.hpp"

namespace legalqa {

EmbeddingVector EmbeddingVector::from_values(std::vector<double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  EmbeddingVector out;
  out.values = std::move(values);
  out.norm = std::sqrt(sum);
  return out;
}

std::string_view to_string(Touchpoint touchpoint) {
  switch (touchpoint) {
    case Touchpoint::irac_parse: return "irac_parse";
    case Touchpoint::summarize: return "summarize";
    case Touchpoint::mask_paraphrase: return "mask_paraphrase";
    case Touchpoint::deficiency: return "deficiency";
    case Touchpoint::clarify: return "clarify";
    case Touchpoint::answer: return "answer";
  }
  return "unknown";
}

Touchpoint touchpoint_from_string(std::string_view name) {
  for (auto t : {Touchpoint::irac_parse, Touchpoint::summarize, Touchpoint::mask_paraphrase,
                 Touchpoint::deficiency, Touchpoint::clarify, Touchpoint::answer}) {
    if (to_string(t) == name) return t;
  }
  fail(ErrorCode::invalid_argument, "unknown touchpoint '" + std::string(name) + "'");
}

std::string LmRequest::key() const {
  std::string material = "completion\n";
  material += to_string(touchpoint);
  material += "\n" + version + "\n" + prompt;
  return sha256_hex(material);
}

std::string embedding_key(std::string_view embedder_id, std::string_view text) {
  std::string material = "embedding\n";
  material += embedder_id;
  material += "\n";
  material += text;
  return sha256_hex(material);
}

std::shared_ptr<FixtureStore> FixtureStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open fixture file " + path.string());
  auto store = std::make_shared<FixtureStore>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json entry;
    try {
      entry = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!entry.contains("key") || !entry["key"].is_string()) {
      fail(ErrorCode::parse_error, path.string() + ":" + std::to_string(line_no) + ": missing key");
    }
    std::string key = entry["key"];
    store->entries_[key] = std::move(entry);
  }
  return store;
}

std::shared_ptr<FixtureStore> FixtureStore::open_for_recording(const std::filesystem::path& path) {
  std::shared_ptr<FixtureStore> store =
      std::filesystem::exists(path) ? load(path) : std::make_shared<FixtureStore>();
  store->sink_ = path;
  return store;
}

std::optional<json> FixtureStore::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FixtureStore::record(const std::string& key, json entry) {
  entry["key"] = key;
  std::lock_guard lock(mutex_);
  if (entries_.count(key) != 0) return;
  if (sink_) {
    std::ofstream out(*sink_, std::ios::app);
    if (!out) fail(ErrorCode::io_error, "cannot append to fixture file " + sink_->string());
    out << entry.dump() << '\n';
  }
  entries_.emplace(key, std::move(entry));
}

std::size_t FixtureStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string ReplayLanguageModel::complete(const LmRequest& request) {
  auto key = request.key();
  auto entry = store_->find(key);
  if (!entry || !entry->contains("response")) {
    fail(ErrorCode::fixture_miss, "no recorded " + std::string(to_string(request.touchpoint)) +
                                      " response for request " + key);
  }
  return (*entry)["response"].get<std::string>();
}

std::string RecordingLanguageModel::complete(const LmRequest& request) {
  std::string response = inner_->complete(request);
  store_->record(request.key(), {{"kind", "completion"},
                                 {"touchpoint", to_string(request.touchpoint)},
                                 {"version", request.version},
                                 {"prompt", request.prompt},
                                 {"response", response}});
  return response;
}

EmbeddingVector ReplayEmbedder::embed(std::string_view text) const {
  auto key = embedding_key(id_, text);
  auto entry = store_->find(key);
  if (!entry || !entry->contains("vector")) {
    fail(ErrorCode::fixture_miss, "no recorded embedding for request " + key);
  }
  auto values = (*entry)["vector"].get<std::vector<double>>();
  if (values.size() != dimension_) {
    fail(ErrorCode::config_error, "recorded embedding has dimension " + std::to_string(values.size()) +
                                      ", expected " + std::to_string(dimension_));
  }
  return EmbeddingVector::from_values(std::move(values));
}

EmbeddingVector RecordingEmbedder::embed(std::string_view text) const {
  auto vector = inner_->embed(text);
  store_->record(embedding_key(inner_->id(), text), {{"kind", "embedding"},
                                                     {"embedder", inner_->id()},
                                                     {"text", std::string(text)},
                                                     {"vector", vector.values}});
  return vector;
}

std::optional<LmRequest> request_from_prompt(std::string_view prompt) {
  constexpr std::string_view kHeader = "[legalqa:";
  if (prompt.substr(0, kHeader.size()) != kHeader) return std::nullopt;
  auto close = prompt.find(']');
  auto slash = prompt.find('/');
  if (close == std::string_view::npos || slash == std::string_view::npos || slash > close) return std::nullopt;
  auto marker = prompt.find("\nINPUT:\n");
  if (marker == std::string_view::npos) return std::nullopt;
  LmRequest request;
  try {
    request.touchpoint = touchpoint_from_string(prompt.substr(kHeader.size(), slash - kHeader.size()));
    request.input = json::parse(prompt.substr(marker + 8));
  } catch (const std::exception&) {
    return std::nullopt;
  }
  request.version = std::string(prompt.substr(slash + 1, close - slash - 1));
  request.prompt = std::string(prompt);
  return request;
}

}  // namespace legalqa
