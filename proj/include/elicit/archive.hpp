#pragma once

// On-disk model grid: one ARPA file per <method, order> plus a JSON manifest
// holding the corpus fingerprint, the symbol table and estimator parameters.

#include <filesystem>
#include <optional>
#include <string>

#include "elicit/ngram.hpp"

namespace elicit::lm {

inline constexpr int kArchiveVersion = 1;

/// Writes `manifest` and the ARPA files into the manifest's directory.
void write_archive(const ModelGrid& grid, const std::filesystem::path& manifest);

/// Throws Error(fingerprint_mismatch) when `expected_fingerprint` is given
/// and differs, or when a model file was written for another corpus.
ModelGrid load_archive(const std::filesystem::path& manifest,
                       const std::optional<std::string>& expected_fingerprint = std::nullopt);

/// Fingerprint recorded in a manifest, without loading the models.
std::string archive_fingerprint(const std::filesystem::path& manifest);

}  // namespace elicit::lm
