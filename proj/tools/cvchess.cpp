// cvchess: chessboard photo -> FEN, plus the individual pipeline stages.
//
// Exit codes: 0 ok, 1 usage/config/contract, 2 no board found, 3 parse or
// format error, 4 I/O error. Data goes to stdout, diagnostics to stderr.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cvchess/config.hpp"
#include "cvchess/datakit.hpp"
#include "cvchess/evalkit.hpp"
#include "cvchess/pipeline.hpp"
#include "cvchess/synth.hpp"

using namespace cvchess;
namespace fs = std::filesystem;

namespace {

struct Args {
  std::string config_path;
  bool print_config = false;
  std::string image, out, manifest, model, backend = "cnn", pgn, split = "test", log, report;
  std::optional<int> rotate;
  int boards = 10, views = 5;
  std::uint64_t seed = 0;
};

Config load_config(const Args& a) {
  Config c = a.config_path.empty() ? Config{} : config_from_json(detail::read_text(a.config_path));
  if (a.rotate) c.rotate = *a.rotate;
  c.validate();
  return c;
}

void ensure_parent(const std::string& file) {
  const fs::path parent = fs::path(file).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

int cmd_detect(const Args& a, const Config& cfg) {
  const Quad q = detect_board_quad(load_ppm(a.image), cfg.detect);
  std::string out = "{\"corners\": [";
  for (int i = 0; i < 4; ++i) out += std::string(i ? ", " : "") + "[" + fmt(q.corners[i].x) + ", " + fmt(q.corners[i].y) + "]";
  std::cout << out << "]}\n";
  return 0;
}

int cmd_warp(const Args& a, const Config& cfg) {
  ensure_parent(a.out);
  save_ppm(a.out, rectify(load_ppm(a.image), cfg.detect, cfg.rotate).warped);
  return 0;
}

int cmd_segment(const Args& a, const Config& cfg) {
  const Raster warped = rectify(load_ppm(a.image), cfg.detect, cfg.rotate).warped;
  fs::create_directories(a.out);
  for (const auto& c : segment(warped, board_grid(warped, cfg))) save_ppm(fs::path(a.out) / (square_name(c.square) + ".ppm"), c.pixels);
  return 0;
}

BoardState classify(const Args& a, const Config& cfg, const Raster& warped) {
  if (a.backend == "svm") return classify_svm(load_svm(a.model), warped, board_grid(warped, cfg));
  auto net = net::load_weights<float>(a.model);
  return classify_cnn(net, warped);
}

int cmd_predict(const Args& a, const Config& cfg) {
  const Raster warped = rectify(load_ppm(a.image), cfg.detect, cfg.rotate).warped;
  std::cout << fen_compress(classify(a, cfg, warped)) << " " << kDefaultFenSuffix << "\n";
  return 0;
}

int cmd_train_cnn(const Args& a, const Config& cfg) {
  const Manifest m = load_manifest(a.manifest);
  const fs::path root = fs::path(a.manifest).parent_path();
  const RectifiedSet tr = rectify_manifest(m, Split::Train, root, cfg), va = rectify_manifest(m, Split::Val, root, cfg);
  std::cerr << "train boards " << tr.examples.size() << " (" << tr.failures.size() << " undetected), val boards " << va.examples.size()
            << " (" << va.failures.size() << " undetected)\n";
  net::ChessNet<float> model(cfg.seed, cfg.train.dropout);
  const net::TrainLog log = net::train(model, tr.examples, va.examples, cfg.train, [](const net::EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << " train_loss " << e.train_loss << " val_acc " << e.val_acc_all << "\n";
  });
  ensure_parent(a.out);
  net::save_weights(model, a.out);
  detail::write_text(a.log.empty() ? a.out + ".log.csv" : a.log, log.to_csv());
  return 0;
}

int cmd_train_svm(const Args& a, const Config& cfg) {
  const Manifest m = load_manifest(a.manifest);
  const RectifiedSet tr = rectify_manifest(m, Split::Train, fs::path(a.manifest).parent_path(), cfg);
  std::cerr << "train boards " << tr.examples.size() << " (" << tr.failures.size() << " undetected)\n";
  const SvmTrainResult res = train_svm_baseline(square_corpus(tr.examples, cfg), cfg);
  ensure_parent(a.out);
  save_svm(a.out, res.model);

  nlohmann::ordered_json j;
  j["selected"] = {{"pca_components", res.params.pca_components}, {"C", res.params.C}, {"gamma", res.params.gamma}};
  j["holdout_accuracy"] = res.holdout_accuracy;
  j["train_rows"] = res.train_rows;
  j["holdout_rows"] = res.holdout_rows;
  if (res.grid) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (std::size_t g = 0; g < res.grid->grid.size(); ++g)
      cells.push_back({{"pca_components", res.grid->grid[g].pca_components},
                       {"C", res.grid->grid[g].C},
                       {"gamma", res.grid->grid[g].gamma},
                       {"mean_cv_accuracy", res.grid->mean_cv_accuracy[g]}});
    j["grid"] = cells;
  }
  detail::write_text(a.report.empty() ? a.out + ".report.json" : a.report, j.dump(2) + "\n");
  return 0;
}

int cmd_eval(const Args& a, const Config& cfg) {
  const Manifest m = load_manifest(a.manifest);
  std::optional<Split> which;
  if (a.split != "all") which = parse_split(a.split);
  const fs::path root = fs::path(a.manifest).parent_path();

  std::optional<net::ChessNet<float>> cnn;
  std::optional<SvmMulticlass> svm;
  if (a.backend == "svm") svm = load_svm(a.model);
  else cnn = net::load_weights<float>(a.model);

  std::vector<Prediction> preds;
  std::vector<std::string> truths;
  for (const auto& e : m.entries) {
    if (which && e.split != which) continue;
    truths.push_back(e.fen);
    const Raster photo = load_ppm(root / e.image);
    Prediction p;
    try {
      const Raster warped = rectify(photo, cfg.detect, cfg.rotate).warped;
      p.board = svm ? classify_svm(*svm, warped, board_grid(warped, cfg)) : classify_cnn(*cnn, warped);
    } catch (const NoBoardFound&) {
    }
    preds.push_back(std::move(p));
  }
  const EvalReport r = evaluate(preds, truths);
  emit_reports(r, a.out);
  std::cout << summary_json(r);
  return 0;
}

int cmd_pgn2fen(const Args& a) {
  for (const auto& f : pgn_to_fens(detail::read_text(a.pgn))) std::cout << f << "\n";
  return 0;
}

int cmd_synth(const Args& a, const Config& cfg) {
  const SynthDataset ds = make_dataset(a.boards, a.views, a.seed, {}, a.out, cfg.split_ratios);
  std::cerr << "wrote " << ds.manifest.entries.size() << " images to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chessboard photo to FEN"};
  app.require_subcommand(0, 1);
  Args a;
  app.add_option("--config", a.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_flag("--print-config", a.print_config, "Print the resolved config and exit");

  auto* detect = app.add_subcommand("detect", "Print the board corners as JSON");
  detect->add_option("image", a.image)->required();

  auto* warp = app.add_subcommand("warp", "Rectify the board to 400x400");
  warp->add_option("image", a.image)->required();
  warp->add_option("-o,--out", a.out)->required();

  auto* seg = app.add_subcommand("segment", "Write the 64 square crops");
  seg->add_option("image", a.image)->required();
  seg->add_option("-o,--out", a.out)->required();

  auto* predict = app.add_subcommand("predict", "Print the FEN of a photo");
  predict->add_option("image", a.image)->required();
  predict->add_option("--model", a.model)->required();
  predict->add_option("--backend", a.backend)->check(CLI::IsMember({"cnn", "svm"}));

  auto* tcnn = app.add_subcommand("train-cnn", "Train the CNN on a manifest");
  tcnn->add_option("--manifest", a.manifest)->required();
  tcnn->add_option("-o,--out", a.out)->required();
  tcnn->add_option("--log", a.log, "Training curve CSV (default <out>.log.csv)");

  auto* tsvm = app.add_subcommand("train-svm", "Train the HOG+SVM baseline on a manifest");
  tsvm->add_option("--manifest", a.manifest)->required();
  tsvm->add_option("-o,--out", a.out)->required();
  tsvm->add_option("--report", a.report, "Report JSON (default <out>.report.json)");

  auto* ev = app.add_subcommand("eval", "Evaluate a model on a manifest split");
  ev->add_option("--manifest", a.manifest)->required();
  ev->add_option("--model", a.model)->required();
  ev->add_option("--backend", a.backend)->check(CLI::IsMember({"cnn", "svm"}));
  ev->add_option("--split", a.split)->check(CLI::IsMember({"train", "val", "test", "all"}));
  ev->add_option("-o,--out", a.out)->required();

  auto* pgn = app.add_subcommand("pgn2fen", "Print one FEN per ply");
  pgn->add_option("pgn", a.pgn)->required();

  auto* syn = app.add_subcommand("synth", "Render a synthetic dataset");
  syn->add_option("--boards", a.boards)->check(CLI::NonNegativeNumber);
  syn->add_option("--views", a.views)->check(CLI::PositiveNumber);
  syn->add_option("--seed", a.seed);
  syn->add_option("-o,--out", a.out)->required();

  for (auto* sub : {warp, seg, predict, ev}) sub->add_option("--rotate", a.rotate, "Clockwise quarter turns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  Config cfg;
  try {
    cfg = load_config(a);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (a.print_config) {
      std::cout << config_to_json(cfg);
      return 0;
    }
    if (*detect) return cmd_detect(a, cfg);
    if (*warp) return cmd_warp(a, cfg);
    if (*seg) return cmd_segment(a, cfg);
    if (*predict) return cmd_predict(a, cfg);
    if (*tcnn) return cmd_train_cnn(a, cfg);
    if (*tsvm) return cmd_train_svm(a, cfg);
    if (*ev) return cmd_eval(a, cfg);
    if (*pgn) return cmd_pgn2fen(a);
    if (*syn) return cmd_synth(a, cfg);
    std::cerr << app.help();
    return 1;
  } catch (const NoBoardFound& e) {
    std::cerr << "no board found: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 3;
  } catch (const IllegalMove& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const AmbiguousMove& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
