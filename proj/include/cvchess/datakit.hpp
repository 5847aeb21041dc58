#pragma once

// Dataset manifests, image->FEN label stores and train/val/test splits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cvchess/errors.hpp"
#include "cvchess/notation.hpp"
#include "cvchess/raster.hpp"

namespace cvchess {

enum class Split { Train, Val, Test };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw FormatError("unknown split '" + std::string(s) + "' (expected train, val or test)");
}

struct ManifestEntry {
  std::string image;  // path relative to the dataset root
  std::string fen;    // placement field or full FEN
  std::optional<Split> split;
  std::string source;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  bool operator==(const Manifest&) const = default;

  std::vector<const ManifestEntry*> select(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(&e);
    return out;
  }
};

struct SplitCounts {
  std::size_t train = 0, val = 0, test = 0;
  std::size_t total() const { return train + val + test; }
  bool operator==(const SplitCounts&) const = default;
};

inline SplitCounts count_splits(const Manifest& m) {
  SplitCounts c;
  for (const auto& e : m.entries) {
    if (!e.split) throw ContractViolation("manifest entry '" + e.image + "' has no split");
    (*e.split == Split::Train ? c.train : *e.split == Split::Val ? c.val : c.test) += 1;
  }
  return c;
}

/// Board placement of a manifest FEN, which may be a bare placement field.
inline BoardState entry_board(std::string_view fen) {
  if (fen.find(' ') == std::string_view::npos) return fen_expand(fen);
  return parse_fen(fen).board;
}

namespace detail {

inline void validate_entry_fen(const std::string& image, const std::string& fen) {
  try {
    (void)entry_board(fen);
  } catch (const Error& e) {
    throw FormatError("invalid FEN for '" + image + "': " + e.what());
  }
}

/// Parses JSON and rejects objects that repeat a key.
inline nlohmann::json parse_json_strict(std::string_view text, const std::string& what) {
  std::vector<std::set<std::string>> keys;
  auto cb = [&](int, nlohmann::json::parse_event_t ev, nlohmann::json& parsed) {
    using E = nlohmann::json::parse_event_t;
    if (ev == E::object_start) {
      keys.emplace_back();
    } else if (ev == E::object_end) {
      keys.pop_back();
    } else if (ev == E::key) {
      const auto k = parsed.get<std::string>();
      if (!keys.back().insert(k).second) throw FormatError(what + ": duplicate key \"" + k + "\"");
    }
    return true;
  };
  try {
    return nlohmann::json::parse(text.begin(), text.end(), cb);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(what + ": malformed JSON: " + e.what());
  }
}

inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace detail

/// Seeded shuffle, then the first floor(r_val*n) shuffled entries go to val,
/// the next floor(r_test*n) to test and the rest (remainders included) to
/// train. Entry order is preserved.
inline Manifest split(std::vector<ManifestEntry> entries, std::array<double, 3> ratios = {0.6, 0.2, 0.2}, std::uint64_t seed = 0) {
  for (double r : ratios)
    if (!(r >= 0.0)) throw ContractViolation("split ratios must be non-negative");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) throw ContractViolation("split ratios must sum to 1");
  const std::size_t n = entries.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n) + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(n) + 1e-9));
  for (std::size_t k = 0; k < n; ++k)
    entries[order[k]].split = k < n_val ? Split::Val : k < n_val + n_test ? Split::Test : Split::Train;
  return Manifest{std::move(entries)};
}

/// Assigns splits from an explicit {image: split} object. Every entry must
/// be covered and every listed image must exist in the manifest.
inline SplitCounts apply_split_file(Manifest& m, std::string_view json_text) {
  const auto j = detail::parse_json_strict(json_text, "split file");
  if (!j.is_object()) throw FormatError("split file must be a JSON object of image -> split");
  std::map<std::string, Split> assign;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw FormatError("split file: value for '" + k + "' is not a string");
    assign[k] = parse_split(v.get<std::string>());
  }
  for (auto& e : m.entries) {
    auto it = assign.find(e.image);
    if (it == assign.end()) throw FormatError("split file has no split for '" + e.image + "'");
    e.split = it->second;
    assign.erase(it);
  }
  if (!assign.empty()) throw FormatError("split file names unknown image '" + assign.begin()->first + "'");
  return count_splits(m);
}

// ---------------------------------------------------------------------------
// Manifest JSON: a list of {image, fen, split, source} records.

inline std::string write_manifest_json(const Manifest& m) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    nlohmann::ordered_json r;
    r["image"] = e.image;
    r["fen"] = e.fen;
    if (e.split) r["split"] = split_name(*e.split);
    if (!e.source.empty()) r["source"] = e.source;
    arr.push_back(std::move(r));
  }
  return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Label store: sorted {image: full FEN}

using LabelStore = std::map<std::string, std::string>;

inline std::string write_labels(const LabelStore& store) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : store) j[k] = v;  // std::map iterates sorted
  return j.dump(2) + "\n";
}

inline LabelStore parse_labels(std::string_view text) {
  const auto j = detail::parse_json_strict(text, "label store");
  if (!j.is_object()) throw FormatError("label store must be a JSON object of image -> FEN");
  LabelStore store;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw FormatError("label for '" + k + "' is not a string");
    const auto fen = v.get<std::string>();
    try {
      (void)parse_fen(fen);
    } catch (const Error& e) {
      throw FormatError("label for '" + k + "' is not a full FEN: " + e.what());
    }
    store[k] = fen;
  }
  return store;
}

inline void save_labels(const std::filesystem::path& path, const LabelStore& store) { detail::write_text(path, write_labels(store)); }
inline LabelStore read_labels(const std::filesystem::path& path) { return parse_labels(detail::read_text(path)); }

/// Distinct board placements among the store's values.
inline std::size_t unique_positions(const LabelStore& store) {
  std::set<std::string> placements;
  for (const auto& [k, v] : store) placements.insert(v.substr(0, v.find(' ')));
  return placements.size();
}

// ---------------------------------------------------------------------------
// Ingestion

struct IngestOptions {
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;
  bool require_images = true;  // false: missing files become warnings
  std::string source = "ingest";
};

struct IngestResult {
  Manifest manifest;
  std::vector<std::string> warnings;
};

/// Accepts a label store object or a record list. Entries without a split
/// are assigned one by split() over that subset.
inline IngestResult ingest_annotations(std::string_view json_text, const std::filesystem::path& images_root, const IngestOptions& opt = {}) {
  const auto j = detail::parse_json_strict(json_text, "annotations");
  IngestResult res;
  std::vector<ManifestEntry> entries;
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      if (!v.is_string()) throw FormatError("annotation for '" + k + "' is not a string");
      entries.push_back({k, v.get<std::string>(), std::nullopt, opt.source});
    }
  } else if (j.is_array()) {
    for (const auto& r : j) {
      if (!r.is_object() || !r.contains("image") || !r.contains("fen") || !r["image"].is_string() || !r["fen"].is_string())
        throw FormatError("annotation records need string \"image\" and \"fen\" fields");
      for (const auto& [k, v] : r.items())
        if (k != "image" && k != "fen" && k != "split" && k != "source") throw FormatError("annotation record has unknown field \"" + k + "\"");
      ManifestEntry e{r["image"].get<std::string>(), r["fen"].get<std::string>(), std::nullopt, opt.source};
      if (r.contains("split")) {
        if (!r["split"].is_string()) throw FormatError("split of '" + e.image + "' is not a string");
        e.split = parse_split(r["split"].get<std::string>());
      }
      if (r.contains("source")) {
        if (!r["source"].is_string()) throw FormatError("source of '" + e.image + "' is not a string");
        e.source = r["source"].get<std::string>();
      }
      entries.push_back(std::move(e));
    }
  } else {
    throw FormatError("annotations must be a JSON object or array");
  }

  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.image).second) throw FormatError("duplicate image path '" + e.image + "'");
    detail::validate_entry_fen(e.image, e.fen);
    if (!std::filesystem::exists(images_root / e.image)) {
      if (opt.require_images) throw IoError("image file not found: " + (images_root / e.image).string());
      res.warnings.push_back("missing image " + (images_root / e.image).string());
    }
  }

  std::vector<std::size_t> unsplit;
  std::vector<ManifestEntry> pending;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (!entries[i].split) {
      unsplit.push_back(i);
      pending.push_back(entries[i]);
    }
  if (!pending.empty()) {
    Manifest assigned = split(std::move(pending), opt.ratios, opt.seed);
    for (std::size_t k = 0; k < unsplit.size(); ++k) entries[unsplit[k]].split = assigned.entries[k].split;
  }
  res.manifest.entries = std::move(entries);
  return res;
}

inline IngestResult ingest_annotations_file(const std::filesystem::path& json_path, const std::filesystem::path& images_root,
                                            const IngestOptions& opt = {}) {
  return ingest_annotations(detail::read_text(json_path), images_root, opt);
}

/// Reads a manifest file; relative image paths resolve against its folder.
inline Manifest load_manifest(const std::filesystem::path& path, bool require_images = true) {
  IngestOptions opt;
  opt.require_images = require_images;
  return ingest_annotations_file(path, path.parent_path(), opt).manifest;
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) { detail::write_text(path, write_manifest_json(m)); }

}  // namespace cvchess
