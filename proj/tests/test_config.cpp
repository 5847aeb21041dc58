#include <gtest/gtest.h>

#include "cvchess/config.hpp"

using namespace cvchess;

TEST(Config, DefaultsRoundTrip) {
  const Config c;
  const std::string text = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(text)), text);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, PartialDocumentOverridesDefaults) {
  const Config c = config_from_json(R"({"svm":{"C":1,"gamma":0.001},"train":{"epochs":3,"optimizer":"sgd"},"seed":7})");
  EXPECT_EQ(c.svm.params.C, 1);
  EXPECT_EQ(c.svm.params.gamma, 0.001);
  EXPECT_EQ(c.svm.params.pca_components, Config{}.svm.params.pca_components);
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_EQ(c.train.optimizer, "sgd");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train.seed, 7u);
  EXPECT_EQ(config_from_json(config_to_json(c)).train.epochs, 3);
}

TEST(Config, UnknownKeysAreRejected) {
  try {
    config_from_json(R"({"svm":{"kernel":"linear"}})");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("svm.kernel"), std::string::npos) << e.what();
  }
  EXPECT_THROW(config_from_json(R"({"colour":1})"), FormatError);
  EXPECT_THROW(config_from_json(R"({"seed":1,"seed":2})"), FormatError);
  EXPECT_THROW(config_from_json(R"({"train":{"epochs":"ten"}})"), FormatError);
  EXPECT_THROW(config_from_json("[]"), FormatError);
}

TEST(Config, ValidationRejectsBadValues) {
  EXPECT_THROW(config_from_json(R"({"train":{"optimizer":"rmsprop"}})"), ContractViolation);
  EXPECT_THROW(config_from_json(R"({"train":{"dropout":1.0}})"), ContractViolation);
  EXPECT_THROW(config_from_json(R"({"svm":{"C":0}})"), ContractViolation);
  EXPECT_THROW(config_from_json(R"({"detect":{"canny_low":200,"canny_high":100}})"), ContractViolation);
  EXPECT_THROW(config_from_json(R"({"split_ratios":[0.5,0.5,0.5]})"), ContractViolation);
  EXPECT_THROW(config_from_json(R"({"hog":{"size":60}})"), ContractViolation);
}

TEST(Config, GridExpandsInOrder) {
  SvmConfig s;
  const auto g = s.grid();
  ASSERT_EQ(g.size(), 8u);
  EXPECT_EQ(g.front().pca_components, 50);
  EXPECT_EQ(g.front().C, 1);
  EXPECT_EQ(g.front().gamma, 0.001);
  EXPECT_EQ(g.back().pca_components, 100);
  EXPECT_EQ(g.back().gamma, 0.01);
}
