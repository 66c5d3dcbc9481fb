#include <cmath>
#include <limits>

#include <exception>

#include "elicit/digest.hpp"
#include "elicit/error.hpp"
#include "elicit/ngram.hpp"

namespace elicit::lm {

std::string to_string(const ModelKey& key) {
  return std::string(to_string(key.method)) + "-" + std::to_string(key.order);
}

std::optional<ModelKey> parse_model_key(std::string_view s) {
  const auto dash = s.rfind('-');
  if (dash == std::string_view::npos || dash + 2 != s.size()) return std::nullopt;
  auto method = parse_method(s.substr(0, dash));
  const char digit = s[dash + 1];
  if (!method || digit < '1' || digit > '0' + kMaxOrder) return std::nullopt;
  return ModelKey{*method, digit - '0'};
}

std::size_t grid_index(const ModelKey& key) {
  return static_cast<std::size_t>(key.order - 1) * kMethods.size() +
         static_cast<std::size_t>(key.method);
}

ModelKey grid_key(std::size_t index) {
  return {kMethods[index % kMethods.size()], static_cast<int>(index / kMethods.size()) + 1};
}

ModelGrid::ModelGrid(std::string fingerprint, std::shared_ptr<wfst::SymbolTable> symbols,
                     std::vector<NGramModel> models)
    : fingerprint_(std::move(fingerprint)), symbols_(std::move(symbols)), models_(std::move(models)) {
  if (models_.size() != kGridSize) {
    throw Error(ErrorCode::invalid_argument, "ModelGrid: expected 20 models");
  }
}

std::string corpus_fingerprint(std::span<const text::Document> repository) {
  Sha256 h;
  for (const auto& doc : repository) {
    h.update(std::to_string(doc.id.size()) + ":" + doc.id + ";");
    h.update(std::to_string(doc.raw_text.size()) + ":");
    h.update(doc.raw_text);
  }
  return h.hex();
}

std::vector<text::Tokens> corpus_sentences(std::span<const text::Document> repository) {
  std::vector<text::Tokens> out;
  for (const auto& doc : repository) {
    for (const auto& s : doc.sentences) {
      if (!s.tokens.empty()) out.push_back(s.tokens);
    }
  }
  return out;
}

namespace {

NGramCounts grid_counts(std::span<const text::Document> repository, const GridOptions& options) {
  if (repository.empty()) throw Error(ErrorCode::empty_repository, "empty repository");
  return count_ngrams(corpus_sentences(repository), kMaxOrder, options.count);
}

}  // namespace

ModelGrid build_grid(std::span<const text::Document> repository, const GridOptions& options) {
  const auto counts = grid_counts(repository, options);
  std::vector<NGramModel> models(kGridSize);
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < kGridSize; ++i) {
    try {
      const auto key = grid_key(i);
      models[i] = estimate(counts, key.method, key.order, options.estimate);
    } catch (...) {
#pragma omp critical(elicit_grid_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return ModelGrid(corpus_fingerprint(repository), counts.symbols, std::move(models));
}

ModelGrid build_grid_serial(std::span<const text::Document> repository,
                            const GridOptions& options) {
  const auto counts = grid_counts(repository, options);
  std::vector<NGramModel> models(kGridSize);
  for (std::size_t i = 0; i < kGridSize; ++i) {
    const auto key = grid_key(i);
    models[i] = estimate(counts, key.method, key.order, options.estimate);
  }
  return ModelGrid(corpus_fingerprint(repository), counts.symbols, std::move(models));
}

namespace {

std::vector<Label> window_labels(const ModelGrid& grid, std::span<const std::string> window) {
  if (window.empty()) throw Error(ErrorCode::empty_evaluation_text, "empty evaluation text");
  // All grid models share one vocabulary, so the first one maps for all.
  return grid.models().front().map_tokens(window);
}

Selection pick(const std::array<double, kGridSize>& ppl) {
  Selection s;
  s.perplexities = ppl;
  std::size_t best = 0;
  for (std::size_t i = 1; i < kGridSize; ++i) {
    if (ppl[i] < ppl[best]) best = i;
  }
  s.key = grid_key(best);
  s.perplexity = ppl[best];
  return s;
}

}  // namespace

Selection select_model(const ModelGrid& grid, std::span<const std::string> window) {
  const auto labels = window_labels(grid, window);
  std::array<double, kGridSize> ppl{};
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < kGridSize; ++i) {
    ppl[i] = perplexity(grid.models()[i], std::span<const Label>(labels));
  }
  return pick(ppl);
}

Selection select_model_serial(const ModelGrid& grid, std::span<const std::string> window) {
  const auto labels = window_labels(grid, window);
  std::array<double, kGridSize> ppl{};
  for (std::size_t i = 0; i < kGridSize; ++i) {
    ppl[i] = perplexity(grid.models()[i], std::span<const Label>(labels));
  }
  return pick(ppl);
}

}  // namespace elicit::lm
