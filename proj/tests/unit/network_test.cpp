#include "grfcnn/network.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "grfcnn/checkpoint.hpp"
#include "grfcnn/errors.hpp"
#include "grfcnn/labels.hpp"
#include "test_support.hpp"

namespace grfcnn {
namespace {

using testing::RandomTensor;

ModelConfig Scaled(std::size_t divisor) {
  ModelConfig c;
  c.scale_divisor = divisor;
  return c;
}

TEST(ModelConfigTest, DefaultShapeChain) {
  const std::vector<Shape> expected = {
      {500, 18, 128}, {250, 9, 128}, {250, 9, 256}, {125, 4, 256}, {125, 4, 512},
      {62, 2, 512},   {62, 2, 1024}, {31, 1, 1024}, {31744},       {512},
      {4}};
  EXPECT_EQ(activation_shapes(ModelConfig{}), expected);
}

TEST(ModelConfigTest, ScaleDivisorEightFilters) {
  const ModelConfig c = Scaled(8);
  EXPECT_EQ(c.filters(0), 16u);
  EXPECT_EQ(c.filters(1), 32u);
  EXPECT_EQ(c.filters(2), 64u);
  EXPECT_EQ(c.filters(3), 128u);
  EXPECT_EQ(c.hidden_units(), 64u);
}

TEST(ModelConfigTest, RejectsNonDividingScale) {
  EXPECT_THROW(Scaled(3).Validate(), UsageError);
  EXPECT_THROW(Scaled(0).Validate(), UsageError);
}

TEST(NetworkTest, DefaultDenseInputWidth) {
  const Network net(Scaled(32), 1);
  EXPECT_EQ(net.hidden().in_features(), 31u * 1u * (1024u / 32u));
  EXPECT_EQ(net.output().in_features(), 512u / 32u);
  EXPECT_EQ(net.output().out_features(), 4u);
}

TEST(NetworkTest, ParameterCountMatchesLayerArithmetic) {
  const ModelConfig c = Scaled(8);
  const Network net(c, 1);
  std::size_t expected = 0, c_in = 1;
  for (std::size_t f : {16u, 32u, 64u, 128u}) {
    expected += 9 * c_in * f + f;
    c_in = f;
  }
  expected += 31 * 128 * 64 + 64 + 64 * 4 + 4;
  EXPECT_EQ(net.ParameterCount(), expected);
}

TEST(NetworkTest, ProbabilitiesSumToOne) {
  Network net(Scaled(32), 5);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor p = net.Forward(RandomTensor({500, 18}, rng, 0, 1));
    EXPECT_NEAR(std::accumulate(p.data().begin(), p.data().end(), 0.0), 1.0, 1e-12);
  }
}

TEST(NetworkTest, SameSeedSameWeightsAndOutputs) {
  const Network a(Scaled(32), 99), b(Scaled(32), 99), c(Scaled(32), 100);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  std::mt19937_64 rng(1);
  const Tensor x = RandomTensor({500, 18}, rng, 0, 1);
  Network::Workspace w1, w2;
  EXPECT_EQ(a.Forward(x, w1), b.Forward(x, w2));
}

TEST(NetworkTest, BackwardMatchesFiniteDifferencesOnSampledWeights) {
  Network net(Scaled(32), 3);
  std::mt19937_64 rng(3);
  const Tensor x = RandomTensor({500, 18}, rng, 0, 1);
  const Tensor target = OneHot(ClassLabel::kPD2_5);
  Network::Workspace ws;
  net.ForwardLoss(x, target, ws);
  const Gradients g = net.Backward(ws, target);
  std::vector<ParamRef> params = net.Parameters();
  ASSERT_EQ(params.size(), g.tensors.size());
  Network::Workspace scratch;
  const double eps = 1e-6;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p].value;
    std::uniform_int_distribution<std::size_t> pick(0, t.size() - 1);
    for (int k = 0; k < 8; ++k) {
      const std::size_t i = pick(rng);
      const double saved = t[i];
      t[i] = saved + eps;
      const double plus = net.ForwardLoss(x, target, scratch).loss;
      t[i] = saved - eps;
      const double minus = net.ForwardLoss(x, target, scratch).loss;
      t[i] = saved;
      const double numeric = (plus - minus) / (2 * eps);
      const double analytic = g.tensors[p][i];
      const double scale = std::max(std::abs(numeric), std::abs(analytic));
      if (scale > 0) {
        EXPECT_LT(std::abs(numeric - analytic) / scale, 1e-3) << params[p].name;
      }
    }
  }
}

TEST(NetworkTest, ParameterNamesInOrder) {
  Network net(Scaled(32), 1);
  std::vector<std::string> names;
  for (const ParamRef& p : net.Parameters()) names.push_back(p.name);
  EXPECT_EQ(names.front(), "conv1.weights");
  EXPECT_EQ(names.back(), "dense2.bias");
  EXPECT_EQ(names.size(), 12u);
}

TEST(NetworkTest, RejectsWrongInputShape) {
  Network net(Scaled(32), 1);
  EXPECT_THROW(net.Forward(Tensor({400, 18})), ShapeError);
}

TEST(CheckpointTest, RoundTripIsExact) {
  const Network net(Scaled(32), 17);
  std::stringstream ss;
  WriteCheckpoint(net, ss);
  const Network back = ReadCheckpoint(ss);
  EXPECT_TRUE(back == net);
  EXPECT_EQ(back.config(), net.config());
  EXPECT_EQ(back.seed(), 17u);
}

TEST(CheckpointTest, CorruptInputsAreFormatErrors) {
  const Network net(Scaled(32), 17);
  std::stringstream ss;
  WriteCheckpoint(net, ss);
  std::string bytes = ss.str();

  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(ReadCheckpoint(truncated), FormatError);

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  std::istringstream bad(wrong_magic);
  EXPECT_THROW(ReadCheckpoint(bad), FormatError);

  std::string future = bytes;
  future[7] = 9;
  std::istringstream newer(future);
  try {
    ReadCheckpoint(newer);
    FAIL() << "expected a version error";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(CheckpointTest, MissingFileIsIoError) {
  EXPECT_THROW(LoadCheckpoint("/nonexistent/checkpoint.grfw"), IoError);
}

}  // namespace
}  // namespace grfcnn
