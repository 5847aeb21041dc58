#pragma once

// Every tunable of the pipeline, loadable from JSON. Unknown keys are
// rejected; to_json() emits the fully resolved configuration.

#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cvchess/datakit.hpp"
#include "cvchess/features.hpp"
#include "cvchess/geometry.hpp"
#include "cvchess/net/train.hpp"
#include "cvchess/svm.hpp"

namespace cvchess {

struct SvmConfig {
  int resample_target = 938;
  SvmParams params;  // used when grid search is off
  double tol = 1e-3;
  bool grid_search = false;
  int folds = 5;
  std::vector<int> grid_pca_components{50, 100};
  std::vector<double> grid_C{1, 10};
  std::vector<double> grid_gamma{0.001, 0.01};
  double train_fraction = 0.7;  // the baseline's own 70/30 split

  std::vector<SvmParams> grid() const {
    std::vector<SvmParams> g;
    for (int k : grid_pca_components)
      for (double c : grid_C)
        for (double gm : grid_gamma) g.push_back({k, c, gm});
    return g;
  }
};

struct Config {
  DetectParams detect;
  HoughParams hough;
  bool use_hough = true;  // refine the square grid before cropping (SVM path)
  HogParams hog;
  SvmConfig svm;
  net::TrainConfig train;
  std::array<double, 3> split_ratios{0.6, 0.2, 0.2};
  int rotate = 0;  // clockwise quarter turns applied to the rectified board
  std::uint64_t seed = 0;

  void validate() const {
    if (!(detect.canny_low >= 0 && detect.canny_high >= detect.canny_low)) throw ContractViolation("detect: need 0 <= canny_low <= canny_high");
    if (!(detect.blur_sigma > 0)) throw ContractViolation("detect.blur_sigma must be positive");
    if (!(detect.min_area_frac > 0 && detect.min_area_frac < 1)) throw ContractViolation("detect.min_area_frac must lie in (0, 1)");
    if (!(detect.epsilon_frac > 0)) throw ContractViolation("detect.epsilon_frac must be positive");
    if (!(hough.rho_step > 0 && hough.theta_step_deg > 0 && hough.vote_threshold > 0)) throw ContractViolation("hough steps and threshold must be positive");
    hog.validate();
    if (svm.resample_target < 1 || svm.folds < 2) throw ContractViolation("svm.resample_target >= 1 and svm.folds >= 2 required");
    if (!(svm.train_fraction > 0 && svm.train_fraction < 1)) throw ContractViolation("svm.train_fraction must lie in (0, 1)");
    if (!(svm.params.C > 0 && svm.params.gamma > 0 && svm.params.pca_components > 0)) throw ContractViolation("svm parameters must be positive");
    train.validate();
    if (std::abs(split_ratios[0] + split_ratios[1] + split_ratios[2] - 1.0) > 1e-9) throw ContractViolation("split ratios must sum to 1");
  }
};

namespace detail {

/// Reads known keys from an object and fails on anything else.
class StrictObject {
 public:
  StrictObject(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw FormatError("config: '" + path_ + "' must be an object");
  }
  ~StrictObject() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw FormatError("config: unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<V>();
    } catch (const nlohmann::json::exception&) {
      throw FormatError("config: '" + child(key) + "' has the wrong type");
    }
  }
  const nlohmann::json* sub(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline Config config_from_json(std::string_view text) {
  const auto j = detail::parse_json_strict(text, "config");
  Config c;
  detail::StrictObject root(j, "");
  if (const auto* d = root.sub("detect")) {
    detail::StrictObject o(*d, "detect");
    o.get("blur_sigma", c.detect.blur_sigma);
    o.get("canny_low", c.detect.canny_low);
    o.get("canny_high", c.detect.canny_high);
    o.get("min_area_frac", c.detect.min_area_frac);
    o.get("epsilon_frac", c.detect.epsilon_frac);
    o.get("refine_edges", c.detect.refine_edges);
  }
  if (const auto* h = root.sub("hough")) {
    detail::StrictObject o(*h, "hough");
    o.get("enabled", c.use_hough);
    o.get("rho_step", c.hough.rho_step);
    o.get("theta_step_deg", c.hough.theta_step_deg);
    o.get("vote_threshold", c.hough.vote_threshold);
    o.get("axis_tolerance_deg", c.hough.axis_tolerance_deg);
    o.get("cluster_px", c.hough.cluster_px);
    o.get("snap_px", c.hough.snap_px);
    o.get("blur_sigma", c.hough.blur_sigma);
    o.get("canny_low", c.hough.canny_low);
    o.get("canny_high", c.hough.canny_high);
  }
  if (const auto* h = root.sub("hog")) {
    detail::StrictObject o(*h, "hog");
    o.get("size", c.hog.size);
    o.get("cell", c.hog.cell);
    o.get("block", c.hog.block);
    o.get("bins", c.hog.bins);
  }
  if (const auto* s = root.sub("svm")) {
    detail::StrictObject o(*s, "svm");
    o.get("resample_target", c.svm.resample_target);
    o.get("pca_components", c.svm.params.pca_components);
    o.get("C", c.svm.params.C);
    o.get("gamma", c.svm.params.gamma);
    o.get("tol", c.svm.tol);
    o.get("grid_search", c.svm.grid_search);
    o.get("folds", c.svm.folds);
    o.get("grid_pca_components", c.svm.grid_pca_components);
    o.get("grid_C", c.svm.grid_C);
    o.get("grid_gamma", c.svm.grid_gamma);
    o.get("train_fraction", c.svm.train_fraction);
  }
  if (const auto* t = root.sub("train")) {
    detail::StrictObject o(*t, "train");
    o.get("optimizer", c.train.optimizer);
    o.get("learning_rate", c.train.learning_rate);
    o.get("lr_schedule", c.train.lr_schedule);
    o.get("momentum", c.train.momentum);
    o.get("weight_decay", c.train.weight_decay);
    o.get("dropout", c.train.dropout);
    o.get("batch_size", c.train.batch_size);
    o.get("epochs", c.train.epochs);
  }
  root.get("split_ratios", c.split_ratios);
  root.get("rotate", c.rotate);
  root.get("seed", c.seed);
  c.train.seed = c.seed;
  c.validate();
  return c;
}

inline std::string config_to_json(const Config& c) {
  nlohmann::ordered_json j;
  j["detect"] = {{"blur_sigma", c.detect.blur_sigma},     {"canny_low", c.detect.canny_low},
                 {"canny_high", c.detect.canny_high},     {"min_area_frac", c.detect.min_area_frac},
                 {"epsilon_frac", c.detect.epsilon_frac}, {"refine_edges", c.detect.refine_edges}};
  j["hough"] = {{"enabled", c.use_hough},
                {"rho_step", c.hough.rho_step},
                {"theta_step_deg", c.hough.theta_step_deg},
                {"vote_threshold", c.hough.vote_threshold},
                {"axis_tolerance_deg", c.hough.axis_tolerance_deg},
                {"cluster_px", c.hough.cluster_px},
                {"snap_px", c.hough.snap_px},
                {"blur_sigma", c.hough.blur_sigma},
                {"canny_low", c.hough.canny_low},
                {"canny_high", c.hough.canny_high}};
  j["hog"] = {{"size", c.hog.size}, {"cell", c.hog.cell}, {"block", c.hog.block}, {"bins", c.hog.bins}};
  j["svm"] = {{"resample_target", c.svm.resample_target},
              {"pca_components", c.svm.params.pca_components},
              {"C", c.svm.params.C},
              {"gamma", c.svm.params.gamma},
              {"tol", c.svm.tol},
              {"grid_search", c.svm.grid_search},
              {"folds", c.svm.folds},
              {"grid_pca_components", c.svm.grid_pca_components},
              {"grid_C", c.svm.grid_C},
              {"grid_gamma", c.svm.grid_gamma},
              {"train_fraction", c.svm.train_fraction}};
  j["train"] = {{"optimizer", c.train.optimizer},
                {"learning_rate", c.train.learning_rate},
                {"lr_schedule", c.train.lr_schedule},
                {"momentum", c.train.momentum},
                {"weight_decay", c.train.weight_decay},
                {"dropout", c.train.dropout},
                {"batch_size", c.train.batch_size},
                {"epochs", c.train.epochs}};
  j["split_ratios"] = c.split_ratios;
  j["rotate"] = c.rotate;
  j["seed"] = c.seed;
  return j.dump(2) + "\n";
}

}  // namespace cvchess
