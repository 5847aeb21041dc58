#pragma once

// Board-level evaluation: tile accuracies, confusion matrix, per-board
// error histogram, FEN match rates and detection yield.

#include <array>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cvchess/datakit.hpp"
#include "cvchess/errors.hpp"
#include "cvchess/notation.hpp"

namespace cvchess {

using ConfusionCounts = std::array<std::array<std::size_t, kNumClasses>, kNumClasses>;  // [truth][predicted]
using ConfusionMatrix = std::array<std::array<double, kNumClasses>, kNumClasses>;

struct EvalReport {
  double tile_accuracy = 0;
  double nonempty_accuracy = 0;
  ConfusionCounts confusion{};
  ConfusionMatrix confusion_normalized{};
  std::map<int, std::size_t> board_error_histogram;  // wrong squares -> boards
  double boards_fully_correct = 0;
  double fen_match_placement = 0;
  double fen_match_full = 0;
  double detection_yield = 0;
  std::size_t images = 0;
  std::size_t evaluated_boards = 0;
};

/// One prediction per image. A missing board is a detection failure. Full
/// FEN matching compares the predicted placement plus `predicted_suffix`
/// against the truth's full FEN.
struct Prediction {
  std::optional<BoardState> board;
  std::string suffix = std::string(kDefaultFenSuffix);
};

inline ConfusionMatrix confusion_normalize(const ConfusionCounts& counts) {
  ConfusionMatrix out{};
  for (int t = 0; t < kNumClasses; ++t) {
    std::size_t total = 0;
    for (auto c : counts[t]) total += c;
    if (total == 0) continue;
    for (int p = 0; p < kNumClasses; ++p) out[t][p] = static_cast<double>(counts[t][p]) / static_cast<double>(total);
  }
  return out;
}

inline double ratio(std::size_t num, std::size_t den) { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }

/// Report from a per-board histogram alone (total boards = sum of counts).
inline double fully_correct_rate(const std::map<int, std::size_t>& histogram) {
  std::size_t total = 0;
  for (const auto& [k, v] : histogram) total += v;
  auto it = histogram.find(0);
  return ratio(it == histogram.end() ? 0 : it->second, total);
}

/// `truths` are full FENs (or bare placements, which then never match in
/// full). Square metrics skip detection failures; FEN match rates and the
/// yield count them.
inline EvalReport evaluate(const std::vector<Prediction>& predictions, const std::vector<std::string>& truths) {
  if (predictions.size() != truths.size())
    throw ContractViolation("evaluate: " + std::to_string(predictions.size()) + " predictions for " + std::to_string(truths.size()) + " truths");
  EvalReport r;
  r.images = truths.size();
  std::size_t detected = 0, correct = 0, squares = 0, ne = 0, ne_correct = 0, match_place = 0, match_full = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const BoardState truth = entry_board(truths[i]);
    const auto& pred = predictions[i].board;
    if (!pred) continue;
    ++detected;
    int wrong = 0;
    for (int s = 0; s < 64; ++s) {
      const int t = class_index(truth[s]), p = class_index((*pred)[s]);
      ++r.confusion[t][p];
      ++squares;
      if (t == p) ++correct;
      else ++wrong;
      if (t != kEmptyClass) {
        ++ne;
        ne_correct += t == p;
      }
    }
    ++r.board_error_histogram[wrong];
    if (wrong == 0) {
      ++match_place;
      if (fen_compress(*pred) + " " + predictions[i].suffix == truths[i]) ++match_full;
    }
  }
  r.evaluated_boards = detected;
  r.tile_accuracy = ratio(correct, squares);
  r.nonempty_accuracy = ratio(ne_correct, ne);
  r.confusion_normalized = confusion_normalize(r.confusion);
  r.boards_fully_correct = fully_correct_rate(r.board_error_histogram);
  r.fen_match_placement = ratio(match_place, r.images);
  r.fen_match_full = ratio(match_full, r.images);
  r.detection_yield = ratio(detected, r.images);
  return r;
}

// ---------------------------------------------------------------------------
// Emission

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

inline std::string confusion_csv(const EvalReport& r) {
  std::string out = "truth";
  for (int p = 0; p < kNumClasses; ++p) out += "," + detail::csv_field(std::string(1, kLabelChars[p]));
  out += "\n";
  for (int t = 0; t < kNumClasses; ++t) {
    out += detail::csv_field(std::string(1, kLabelChars[t]));
    for (int p = 0; p < kNumClasses; ++p) out += "," + std::to_string(r.confusion[t][p]);
    out += "\n";
  }
  return out;
}

inline std::string confusion_normalized_csv(const EvalReport& r) {
  std::string out = "truth";
  for (int p = 0; p < kNumClasses; ++p) out += "," + detail::csv_field(std::string(1, kLabelChars[p]));
  out += "\n";
  for (int t = 0; t < kNumClasses; ++t) {
    out += detail::csv_field(std::string(1, kLabelChars[t]));
    for (int p = 0; p < kNumClasses; ++p) out += "," + detail::fmt_real(r.confusion_normalized[t][p]);
    out += "\n";
  }
  return out;
}

inline std::string board_histogram_csv(const EvalReport& r) {
  std::string out = "misclassified_squares,boards\n";
  for (const auto& [k, v] : r.board_error_histogram) out += std::to_string(k) + "," + std::to_string(v) + "\n";
  return out;
}

inline std::string summary_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["tile_accuracy"] = r.tile_accuracy;
  j["nonempty_accuracy"] = r.nonempty_accuracy;
  j["confusion"] = r.confusion;
  j["confusion_normalized"] = r.confusion_normalized;
  nlohmann::ordered_json h = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.board_error_histogram) h[std::to_string(k)] = v;
  j["board_error_histogram"] = h;
  j["boards_fully_correct"] = r.boards_fully_correct;
  j["fen_match_placement"] = r.fen_match_placement;
  j["fen_match_full"] = r.fen_match_full;
  j["detection_yield"] = r.detection_yield;
  j["images"] = r.images;
  j["evaluated_boards"] = r.evaluated_boards;
  return j.dump(2) + "\n";
}

/// Writes confusion.csv, confusion_normalized.csv, board_histogram.csv,
/// summary.json and, given a training log CSV, curves.csv.
inline void emit_reports(const EvalReport& r, const std::filesystem::path& out_dir, const std::string& training_log_csv = {}) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) throw IoError("cannot create report directory " + out_dir.string());
  detail::write_text(out_dir / "confusion.csv", confusion_csv(r));
  detail::write_text(out_dir / "confusion_normalized.csv", confusion_normalized_csv(r));
  detail::write_text(out_dir / "board_histogram.csv", board_histogram_csv(r));
  detail::write_text(out_dir / "summary.json", summary_json(r));
  if (!training_log_csv.empty()) detail::write_text(out_dir / "curves.csv", training_log_csv);
}

}  // namespace cvchess
