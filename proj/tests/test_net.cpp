#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "cvchess/net/chessnet.hpp"
#include "cvchess/net/train.hpp"
#include "cvchess/synth.hpp"
#include "gradcheck.hpp"

using namespace cvchess;
using namespace cvchess::net;

namespace {

using namespace gradcheck;

std::vector<BoardExample> tiny_boards(int n, std::uint64_t seed) {
  std::vector<BoardExample> out;
  for (int i = 0; i < n; ++i) {
    const BoardState b = synth_placement(seed, i);
    BoardExample ex;
    ex.image = render_canonical(b);
    for (int s = 0; s < 64; ++s) ex.labels[s] = class_index(b[s]);
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

TEST(Tensor, ShapesAndErrors) {
  TD t({2, 3}, 1.5);
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(shape_str(t.shape()), "(2,3)");
  EXPECT_THROW(TD({2, 2}, std::vector<double>(3)), ContractViolation);
  EXPECT_THROW(TD({-1}), ContractViolation);
}

TEST(Tensor, NoGradGuardSkipsGraph) {
  std::mt19937_64 rng(1);
  TD x = random_tensor({4}, rng);
  {
    NoGradGuard g;
    EXPECT_FALSE(relu(x).requires_grad());
  }
  EXPECT_TRUE(relu(x).requires_grad());
}

TEST(Tensor, SharedSubgraphAccumulates) {
  TD x({1}, std::vector<double>{3.0}, true);
  TD y = add(x, x);
  y.backward();
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
}

TEST(Ops, ConvOnesKernel) {
  TD x({1, 1, 3, 3}, 1.0), w({1, 1, 3, 3}, 1.0), b({1}, 0.0);
  const TD y = conv2d(x, w, b, 1, 0);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(y.data()[0], 9.0);
  const TD p = conv2d(x, w, b, 1, 1);
  EXPECT_DOUBLE_EQ(p.data()[0], 4.0);
  EXPECT_DOUBLE_EQ(p.data()[4], 9.0);
  EXPECT_THROW(conv2d(x, TD({1, 2, 3, 3}), b, 1, 0), ContractViolation);
}

TEST(Ops, ConvMatchesDirectLoop) {
  std::mt19937_64 rng(2);
  const TD x = random_tensor({2, 3, 7, 6}, rng, false), w = random_tensor({4, 3, 3, 3}, rng, false), b = random_tensor({4}, rng, false);
  const TD y = conv2d(x, w, b, 2, 1);
  ASSERT_EQ(y.shape(), (Shape{2, 4, 4, 3}));
  for (int n = 0; n < 2; ++n)
    for (int o = 0; o < 4; ++o)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 3; ++j) {
          double s = b.data()[o];
          for (int c = 0; c < 3; ++c)
            for (int ki = 0; ki < 3; ++ki)
              for (int kj = 0; kj < 3; ++kj) {
                const int yy = i * 2 - 1 + ki, xx = j * 2 - 1 + kj;
                if (yy < 0 || xx < 0 || yy >= 7 || xx >= 6) continue;
                s += w.data()[((o * 3 + c) * 3 + ki) * 3 + kj] * x.data()[((n * 3 + c) * 7 + yy) * 6 + xx];
              }
          EXPECT_NEAR(y.data()[((n * 4 + o) * 4 + i) * 3 + j], s, 1e-12);
        }
}

TEST(Ops, UniformLogitsGiveLog13) {
  const TD logits({4, 13}, 0.7);
  EXPECT_NEAR(loss_ce(logits, {0, 5, 12, 3}).data()[0], std::log(13.0), 1e-12);
  EXPECT_NEAR(std::log(13.0), 2.56495, 1e-5);
  EXPECT_THROW(loss_ce(logits, {0, 1, 2, 13}), ContractViolation);
  EXPECT_THROW(loss_ce(logits, {0}), ContractViolation);
}

TEST(Ops, AdaptivePoolBinsAndMaxPoolTies) {
  TD x({1, 1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const TD p = adaptive_avg_pool(x, 2, 2);
  // Bins are [floor(i*n/m), floor((i+1)*n/m)): {0} and {1,2} per axis.
  EXPECT_DOUBLE_EQ(p.data()[0], 1.0);
  EXPECT_DOUBLE_EQ(p.data()[1], (2 + 3) / 2.0);
  EXPECT_DOUBLE_EQ(p.data()[3], (5 + 6 + 8 + 9) / 4.0);
  EXPECT_THROW(adaptive_avg_pool(x, 4, 4), ContractViolation);
  std::mt19937_64 rng(4);
  const TD eight = random_tensor({1, 2, 8, 8}, rng, false);
  EXPECT_EQ(adaptive_avg_pool(eight, 8, 8).data(), eight.data());
  const TD flat = adaptive_avg_pool(TD({1, 1, 13, 13}, 2.5), 8, 8);
  for (double v : flat.data()) EXPECT_DOUBLE_EQ(v, 2.5);
  const TD m = maxpool2d(x, 3, 2, 1);
  ASSERT_EQ(m.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_DOUBLE_EQ(m.data()[0], 5);
  EXPECT_DOUBLE_EQ(m.data()[3], 9);
}

TEST(Ops, DropoutMasksAndScales) {
  std::mt19937_64 rng(3), r1(5), r2(5);
  TD x = random_tensor({1000}, rng);
  EXPECT_EQ(dropout(x, 0.0, Mode::Train, r1).node(), x.node());
  EXPECT_EQ(dropout(x, 0.5, Mode::Eval, r1).node(), x.node());
  TD y = dropout(x, 0.25, Mode::Train, r2);
  y.backward();
  int zeros = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const double g = x.grad()[i];
    if (g == 0) {
      ++zeros;
      EXPECT_EQ(y.data()[i], 0.0);
    } else {
      EXPECT_NEAR(g, 1 / 0.75, 1e-12);
      EXPECT_NEAR(y.data()[i], x.data()[i] / 0.75, 1e-12);
    }
  }
  EXPECT_GT(zeros, 180);
  EXPECT_LT(zeros, 320);
  EXPECT_THROW(dropout(x, 1.0, Mode::Train, r2), ContractViolation);
}

TEST(Ops, BatchNormRunningStatistics) {
  TD x({2, 1, 1, 2}, std::vector<double>{1, 2, 3, 6}), g({1}, 1.0), b({1}, 0.0);
  BatchNormState<double> st(1);
  const TD y = batchnorm2d(x, g, b, st, Mode::Train);
  // mean 3, biased var 3.5, unbiased var 14/3.
  EXPECT_NEAR(st.running_mean.data()[0], 0.3, 1e-12);
  EXPECT_NEAR(st.running_var.data()[0], 0.9 + 0.1 * 14.0 / 3.0, 1e-12);
  EXPECT_NEAR(y.data()[0], (1 - 3) / std::sqrt(3.5 + 1e-5), 1e-12);
  const TD e = batchnorm2d(x, g, b, st, Mode::Eval);
  EXPECT_NEAR(e.data()[0], (1 - 0.3) / std::sqrt(st.running_var.data()[0] + 1e-5), 1e-12);
  TD one({1, 1, 1, 1}, 1.0);
  EXPECT_THROW(batchnorm2d(one, g, b, st, Mode::Train), ContractViolation);
}

// ---------------------------------------------------------------------------
// Finite-difference checks (double precision)

TEST(GradCheck, ConvVariants) {
  std::mt19937_64 rng(10);
  for (auto [stride, pad, k] : {std::tuple{1, 0, 1}, std::tuple{1, 1, 3}, std::tuple{2, 1, 3}, std::tuple{2, 3, 7}, std::tuple{2, 0, 1}}) {
    const double e = max_relative_error({random_tensor({2, 2, 7, 7}, rng), random_tensor({3, 2, k, k}, rng), random_tensor({3}, rng)},
                                        [&](std::vector<TD>& in) { return conv2d(in[0], in[1], in[2], stride, pad); });
    EXPECT_LT(e, kGradTol) << "stride " << stride << " pad " << pad << " k " << k;
  }
}

TEST(GradCheck, BatchNormTrainAndEval) {
  std::mt19937_64 rng(11);
  BatchNormState<double> st(3);
  const double e_train = max_relative_error({random_tensor({2, 3, 4, 3}, rng), random_tensor({3}, rng), random_tensor({3}, rng)},
                                            [&](std::vector<TD>& in) { return batchnorm2d(in[0], in[1], in[2], st, Mode::Train); });
  EXPECT_LT(e_train, kGradTol);
  const double e_eval = max_relative_error({random_tensor({2, 3, 4, 3}, rng), random_tensor({3}, rng), random_tensor({3}, rng)},
                                           [&](std::vector<TD>& in) { return batchnorm2d(in[0], in[1], in[2], st, Mode::Eval); });
  EXPECT_LT(e_eval, kGradTol);
}

TEST(GradCheck, Pooling) {
  std::mt19937_64 rng(12);
  EXPECT_LT(max_relative_error({random_tensor({2, 2, 9, 8}, rng)}, [](std::vector<TD>& in) { return maxpool2d(in[0], 3, 2, 1); }), kGradTol);
  EXPECT_LT(max_relative_error({random_tensor({1, 2, 13, 11}, rng)}, [](std::vector<TD>& in) { return adaptive_avg_pool(in[0], 8, 8); }),
            kGradTol);
  EXPECT_LT(max_relative_error({random_tensor({1, 2, 8, 8}, rng)}, [](std::vector<TD>& in) { return adaptive_avg_pool(in[0], 8, 8); }),
            kGradTol);
}

TEST(GradCheck, LinearReluAddReshape) {
  std::mt19937_64 rng(13);
  EXPECT_LT(max_relative_error({random_tensor({2, 5, 6}, rng), random_tensor({4, 6}, rng), random_tensor({4}, rng)},
                               [](std::vector<TD>& in) { return linear(in[0], in[1], in[2]); }),
            kGradTol);
  EXPECT_LT(max_relative_error({random_tensor({3, 7}, rng)}, [](std::vector<TD>& in) { return relu(in[0]); }), kGradTol);
  EXPECT_LT(max_relative_error({random_tensor({3, 7}, rng), random_tensor({3, 7}, rng)},
                               [](std::vector<TD>& in) { return add(in[0], in[1]); }),
            kGradTol);
  EXPECT_LT(max_relative_error({random_tensor({2, 3, 2, 2}, rng)}, [](std::vector<TD>& in) { return channels_last(in[0]); }), kGradTol);
}

TEST(GradCheck, DropoutAtZero) {
  std::mt19937_64 rng(14), drop(1);
  EXPECT_LT(max_relative_error({random_tensor({4, 5}, rng)}, [&](std::vector<TD>& in) { return relu(dropout(in[0], 0.0, Mode::Train, drop)); }),
            kGradTol);
}

TEST(GradCheck, CrossEntropy) {
  std::mt19937_64 rng(15);
  const std::vector<int> labels{0, 12, 5, 5, 7, 1};
  EXPECT_LT(max_relative_error({random_tensor({6, 13}, rng, true, 3.0)}, [&](std::vector<TD>& in) { return loss_ce(in[0], labels); }),
            kGradTol);
}

TEST(GradCheck, PreActivationBlock) {
  std::mt19937_64 rng(16);
  PreActBlock<double> blk(2, 3, 2);
  for (auto* w : {&blk.conv1.weight, &blk.conv2.weight, &blk.proj->weight})
    for (auto& v : w->data()) v = std::normal_distribution<double>(0, 0.5)(rng);
  const double e = max_relative_error({random_tensor({2, 2, 6, 6}, rng)}, [&](std::vector<TD>& in) { return blk(in[0], Mode::Train); });
  EXPECT_LT(e, kGradTol);
}

// ---------------------------------------------------------------------------
// Network

TEST(ChessNet, OutputShapeAndStageWidths) {
  ChessNet<float> net(1);
  for (int b : {1, 2}) {
    NoGradGuard g;
    const Tensor<float> out = net.forward(Tensor<float>({b, 3, 400, 400}, 0.1f), Mode::Eval);
    EXPECT_EQ(out.shape(), (Shape{b, 64, 13}));
  }
  std::map<std::string, Shape> shapes;
  for (const auto& [name, t] : net.state()) shapes[name] = t.shape();
  EXPECT_EQ(shapes.at("stem.conv.weight"), (Shape{64, 3, 7, 7}));
  EXPECT_EQ(shapes.at("stage1.block0.conv1.weight"), (Shape{128, 64, 3, 3}));
  EXPECT_EQ(shapes.at("stage1.block0.proj.weight"), (Shape{128, 64, 1, 1}));
  EXPECT_EQ(shapes.at("stage2.block1.conv2.weight"), (Shape{256, 256, 3, 3}));
  EXPECT_EQ(shapes.at("stage3.block0.conv1.weight"), (Shape{512, 256, 3, 3}));
  EXPECT_EQ(shapes.at("head.weight"), (Shape{13, 512}));
  EXPECT_EQ(shapes.count("stage1.block1.proj.weight"), 0u);
  EXPECT_THROW(net.forward(Tensor<float>({1, 3, 200, 200}), Mode::Eval), ContractViolation);
}

TEST(ChessNet, InitialLossIsLog13) {
  ChessNet<float> net(2);
  const auto data = tiny_boards(2, 3);
  std::vector<const BoardExample*> batch{&data[0], &data[1]};
  const Tensor<float> loss = loss_ce(net.forward(batch_tensor<float>(batch), Mode::Train), flat_labels(batch));
  EXPECT_NEAR(loss.data()[0], std::log(13.0), 1e-5);
}

TEST(ChessNet, WeightsRoundTripBitIdentical) {
  ChessNet<float> a(3), b(4);
  // Perturb running statistics so they are exercised too.
  a.block(0, 0).bn1.state.running_mean.data()[5] = 0.125f;
  const auto bytes = encode_weights(a);
  decode_weights<float>(bytes, b);
  EXPECT_EQ(encode_weights(b), bytes);
  NoGradGuard g;
  const Tensor<float> in({1, 3, 400, 400}, 0.3f);
  EXPECT_EQ(a.forward(in, Mode::Eval).data(), b.forward(in, Mode::Eval).data());
}

TEST(ChessNet, WeightFileErrorsNameTheProblem) {
  ChessNet<float> a(5);
  const auto bytes = encode_weights(a);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_weights<float>(bad, a), FormatError);
  auto cut = bytes;
  cut.resize(cut.size() / 2);
  EXPECT_THROW(decode_weights<float>(cut, a), FormatError);
  auto extra = bytes;
  extra.push_back(1);
  EXPECT_THROW(decode_weights<float>(extra, a), FormatError);
  EXPECT_THROW(load_weights<float>("/nonexistent/w.bin"), IoError);
}

TEST(Training, DeterministicAndLogged) {
  const auto data = tiny_boards(2, 7);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 2;
  cfg.seed = 11;
  ChessNet<float> a(cfg.seed, cfg.dropout), b(cfg.seed, cfg.dropout);
  const TrainLog la = train(a, data, data, cfg), lb = train(b, data, data, cfg);
  EXPECT_EQ(la.to_csv(), lb.to_csv());
  EXPECT_EQ(encode_weights(a), encode_weights(b));
  ASSERT_EQ(la.epochs.size(), 2u);
  EXPECT_NEAR(la.epochs[0].train_loss, std::log(13.0), 0.3);
  EXPECT_EQ(la.to_csv().substr(0, la.to_csv().find('\n')),
            "epoch,train_loss,val_loss,train_acc_all,val_acc_all,train_acc_nonempty,val_acc_nonempty");
}

TEST(Training, OverfitsATinySet) {
  // Two boards, no dropout: training accuracy must reach 100%.
  const auto data = tiny_boards(2, 9);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 30;
  cfg.dropout = 0;
  cfg.weight_decay = 0;
  ChessNet<float> net(1, 0.0);
  const TrainLog log = train(net, data, data, cfg);
  EXPECT_DOUBLE_EQ(log.epochs[log.best_epoch - 1].val_acc_all, 1.0);
  EXPECT_DOUBLE_EQ(evaluate_examples(net, data, 2).acc_all(), 1.0);
}

TEST(Training, ConfigValidation) {
  TrainConfig c;
  c.optimizer = "rmsprop";
  EXPECT_THROW(c.validate(), ContractViolation);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ContractViolation);
}
