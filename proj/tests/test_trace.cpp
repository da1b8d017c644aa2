#include <doctest.h>

#include <bit>
#include <cmath>
#include <sstream>

#include "selfnet/error.hpp"
#include "selfnet/trace.hpp"
#include "test_util.hpp"

using namespace selfnet;
using selfnet::testing::make_trace;
using selfnet::testing::random_matrix;

namespace {

std::string serialise(const ActivationTrace& t) {
  std::ostringstream out(std::ios::binary);
  write_trace(out, t);
  return out.str();
}

ActivationTrace deserialise(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_trace(in);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an selfnet::Error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_SUITE("trace-io") {
  TEST_CASE("actv round trip keeps header and values") {
    Matrix v(2, 3);
    v << 1, 2, 3, 4, 5, 6;
    auto t = make_trace(v, "walk-c07", 2, 7);
    t.info.behavior = Behavior::wiggle();
    const auto back = deserialise(serialise(t));
    CHECK(back.info.checkpoint_id == "walk-c07");
    CHECK(back.info.run_id == "run");
    CHECK(back.info.cycle == 7);
    CHECK(back.info.layer == 2);
    CHECK(back.info.behavior == Behavior::wiggle());
    CHECK(back.values == v);
  }

  TEST_CASE("header layout is bit-exact") {
    Matrix v(1, 2);
    v << 1.0, -2.0;
    auto t = make_trace(v, "a", 1, 3);
    t.info.run_id = "r";
    t.info.behavior = Behavior::bob();
    const std::string bytes = serialise(t);
    // 4 magic + 4 version + 2+1 + 2+1 + 4 cycle + 1 behavior + 2 layer + 4 H + 4 T + 8 payload
    REQUIRE(bytes.size() == 37);
    CHECK(bytes.substr(0, 4) == "ACTV");
    CHECK(static_cast<unsigned char>(bytes[4]) == 1);
    CHECK(static_cast<unsigned char>(bytes[8]) == 1);  // id length, little-endian
    CHECK(bytes[10] == 'a');
    CHECK(static_cast<unsigned char>(bytes[14]) == 3);  // cycle
    CHECK(static_cast<unsigned char>(bytes[18]) == 2);  // bob
    const auto f = std::bit_cast<float>(static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[33])) |
                                        static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[34])) << 8 |
                                        static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[35])) << 16 |
                                        static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[36])) << 24);
    CHECK(f == -2.0f);
  }

  TEST_CASE("reader errors") {
    Matrix v(2, 3);
    v << 1, 2, 3, 4, 5, 6;
    const std::string good = serialise(make_trace(v));

    CHECK(code_of([&] { deserialise(good.substr(0, good.size() - 5)); }) == ErrorCode::TruncatedPayload);
    CHECK(code_of([&] { deserialise(good.substr(0, 6)); }) == ErrorCode::TruncatedPayload);

    std::string bad_magic = good;
    bad_magic[0] = 'X';
    CHECK(code_of([&] { deserialise(bad_magic); }) == ErrorCode::BadMagic);

    std::string bad_version = good;
    bad_version[4] = 2;
    CHECK(code_of([&] { deserialise(bad_version); }) == ErrorCode::VersionUnsupported);

    std::string nan_payload = good;
    const auto nan_bits = std::bit_cast<std::uint32_t>(std::numeric_limits<float>::quiet_NaN());
    const std::size_t last = nan_payload.size() - 4;
    for (int b = 0; b < 4; ++b) nan_payload[last + b] = static_cast<char>((nan_bits >> (8 * b)) & 0xFF);
    CHECK(code_of([&] { deserialise(nan_payload); }) == ErrorCode::NonFiniteValue);
  }

  TEST_CASE("write(read(f)) is byte-identical for 50 random traces") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> dim(1, 40);
    for (int k = 0; k < 50; ++k) {
      auto t = make_trace(random_matrix(rng, dim(rng), dim(rng) + 1, -1e3, 1e3), "id-" + std::to_string(k), k % 3, k);
      t.info.behavior.kind = static_cast<BehaviorKind>(k % 4);
      const std::string first = serialise(t);
      CHECK(serialise(deserialise(first)) == first);
    }
  }

  TEST_CASE("csv import") {
    std::istringstream csv("neuron,s0,s1,s2\n0,1,2,3\n1,4,5,6\n");
    const auto t = read_trace_csv(csv);
    REQUIRE(t.neurons() == 2);
    REQUIRE(t.states() == 3);
    CHECK(t.values(1, 2) == 6.0);
    std::istringstream ragged("neuron,s0,s1\n0,1,2\n1,4\n");
    CHECK(code_of([&] { read_trace_csv(ragged); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("z-score of a hand row uses population std") {
    Matrix v(2, 3);
    v << 1, 2, 3, 5, 5, 5;
    const auto n = zscore_normalize(make_trace(v));
    CHECK(n.alive[0]);
    CHECK_FALSE(n.alive[1]);
    CHECK(n.values(0, 0) == doctest::Approx(-1.224744871391589).epsilon(1e-12));
    CHECK(std::abs(n.values(0, 1)) < 1e-15);
    CHECK(n.values(0, 2) == doctest::Approx(1.224744871391589).epsilon(1e-12));
    CHECK(n.values.row(1).isZero(0.0));
  }

  TEST_CASE("z-scored rows of a 150x1000 trace have mean 0 and std 1") {
    std::mt19937_64 rng(3);
    Matrix v = random_matrix(rng, 150, 1000, -5.0, 20.0);
    v.row(7).setConstant(3.0);  // dead
    const auto n = zscore_normalize(make_trace(v));
    CHECK(n.alive_count() + 1 == 150);
    for (Eigen::Index i = 0; i < 150; ++i) {
      if (!n.alive[static_cast<std::size_t>(i)]) continue;
      const double mean = n.values.row(i).mean();
      const double sd = std::sqrt((n.values.row(i).array() - mean).square().mean());
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(sd - 1.0) < 1e-6);
    }
  }

  TEST_CASE("normalisation properties") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      Matrix v = random_matrix(rng, 20, 50, -3.0, 3.0);
      v.row(trial).setConstant(1.5);
      v.row((trial + 3) % 20) *= 1e-8;  // raw std below the default threshold
      const auto once = zscore_normalize(make_trace(v));
      const auto twice = zscore_normalize(once);
      CHECK(once.alive == twice.alive);
      CHECK((once.values - twice.values).cwiseAbs().maxCoeff() < 1e-9);
      CHECK(once.alive_count() + static_cast<int>(std::count(once.alive.begin(), once.alive.end(), false)) == 20);
      CHECK_FALSE(once.alive[static_cast<std::size_t>(trial)]);
      CHECK_FALSE(once.alive[static_cast<std::size_t>((trial + 3) % 20)]);

      // cosine of z-scored rows == Pearson correlation of raw rows
      for (int pair = 0; pair < 5; ++pair) {
        const Eigen::Index a = (trial + 1 + pair) % 20, b = (trial + 7 + 2 * pair) % 20;
        if (!once.alive[static_cast<std::size_t>(a)] || !once.alive[static_cast<std::size_t>(b)] || a == b) continue;
        const Eigen::RowVectorXd xa = v.row(a).array() - v.row(a).mean();
        const Eigen::RowVectorXd xb = v.row(b).array() - v.row(b).mean();
        const double pearson = xa.dot(xb) / std::sqrt(xa.squaredNorm() * xb.squaredNorm());
        const double cos = once.values.row(a).dot(once.values.row(b)) /
                           (once.values.row(a).norm() * once.values.row(b).norm());
        CHECK(std::abs(cos - pearson) < 1e-9);
      }
    }
  }

  TEST_CASE("dead threshold is configurable") {
    Matrix v(2, 4);
    v << 0, 1e-3, 0, 1e-3, 0, 1, 0, 1;
    CHECK(zscore_normalize(make_trace(v)).alive[0]);
    CHECK_FALSE(zscore_normalize(make_trace(v), 1e-2).alive[0]);
    CHECK(code_of([&] { zscore_normalize(make_trace(v), 0.0); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("relu clamps negatives in the first hidden layer") {
    MlpWeights w;
    w.input_dim = 1;
    w.layers.push_back({Matrix::Identity(1, 1), Vector::Zero(1), Activation::Relu});
    w.layers.push_back({Matrix::Ones(1, 1), Vector::Zero(1), Activation::Linear});
    ReferenceSet refs;
    refs.states.resize(2, 1);
    refs.states << -1, 2;
    const auto traces = mlp_forward_collect(w, refs);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].info.layer == 1);
    CHECK(traces[0].values(0, 0) == 0.0);
    CHECK(traces[0].values(0, 1) == 2.0);
  }

  TEST_CASE("tanh network with zero weights gives an all-dead trace") {
    MlpWeights w;
    w.input_dim = 3;
    w.layers.push_back({Matrix::Zero(4, 3), Vector::Zero(4), Activation::Tanh});
    w.layers.push_back({Matrix::Zero(2, 4), Vector::Zero(2), Activation::Tanh});
    std::mt19937_64 rng(1);
    ReferenceSet refs{random_matrix(rng, 10, 3), {}};
    const auto traces = mlp_forward_collect(w, refs);
    CHECK(traces[0].values.isZero(0.0));
    CHECK(zscore_normalize(traces[0]).alive_count() == 0);
  }

  TEST_CASE("forward collection matches a per-state loop") {
    std::mt19937_64 rng(9);
    MlpWeights w;
    w.input_dim = 6;
    w.layers.push_back({random_matrix(rng, 8, 6), random_matrix(rng, 8, 1).col(0), Activation::Relu});
    w.layers.push_back({random_matrix(rng, 5, 8), random_matrix(rng, 5, 1).col(0), Activation::Relu});
    w.layers.push_back({random_matrix(rng, 2, 5), random_matrix(rng, 2, 1).col(0), Activation::Tanh});
    ReferenceSet refs{random_matrix(rng, 20, 6, -2.0, 2.0), {}};
    const auto traces = mlp_forward_collect(w, refs);
    REQUIRE(traces.size() == 2);

    for (int s = 0; s < 20; ++s) {
      std::vector<double> x(6);
      for (int d = 0; d < 6; ++d) x[static_cast<std::size_t>(d)] = refs.states(s, d);
      for (std::size_t l = 0; l < 2; ++l) {
        const auto& layer = w.layers[l];
        std::vector<double> y(static_cast<std::size_t>(layer.weight.rows()));
        for (Eigen::Index o = 0; o < layer.weight.rows(); ++o) {
          double acc = layer.bias(o);
          for (Eigen::Index i = 0; i < layer.weight.cols(); ++i) acc += layer.weight(o, i) * x[static_cast<std::size_t>(i)];
          y[static_cast<std::size_t>(o)] = acc > 0.0 ? acc : 0.0;
          CHECK(std::abs(traces[l].values(o, s) - y[static_cast<std::size_t>(o)]) < 1e-12);
        }
        x = y;
      }
    }
  }

  TEST_CASE("forward collection rejects a dimension mismatch") {
    MlpWeights w;
    w.input_dim = 2;
    w.layers.push_back({Matrix::Ones(3, 2), Vector::Zero(3), Activation::Elu});
    w.layers.push_back({Matrix::Ones(1, 3), Vector::Zero(1), Activation::Linear});
    ReferenceSet refs{Matrix::Ones(4, 3), {}};
    CHECK(code_of([&] { mlp_forward_collect(w, refs); }) == ErrorCode::DimensionMismatch);
  }

  TEST_CASE("mlpw json") {
    const auto w = parse_mlp_json(R"({"input_dim":2,"layers":[
        {"w":[[1,0],[0,1],[1,1]],"b":[0,0,-1],"act":"elu"},
        {"w":[[1,1,1]],"b":[0],"act":"tanh"}]})");
    CHECK(w.layers.size() == 2);
    CHECK(w.layers[0].activation == Activation::Elu);
    ReferenceSet refs;
    refs.states.resize(2, 2);
    refs.states << 0, 0, 1, 2;
    const auto t = mlp_forward_collect(w, refs);
    CHECK(t[0].values(2, 0) == doctest::Approx(std::expm1(-1.0)));
    CHECK(t[0].values(2, 1) == doctest::Approx(2.0));
    CHECK(code_of([] { parse_mlp_json(R"({"input_dim":2,"layers":[{"w":[[1,0]],"b":[0,0]}]})"); }) ==
          ErrorCode::DimensionMismatch);
  }

  TEST_CASE("reference sampling") {
    std::mt19937_64 rng(2);
    const Matrix pool = random_matrix(rng, 5, 3);
    const auto all = sample_reference_states({pool}, 5, 1);
    std::vector<std::string> ids = all.source_ids;
    std::sort(ids.begin(), ids.end());
    CHECK(ids == std::vector<std::string>{"pool0:0", "pool0:1", "pool0:2", "pool0:3", "pool0:4"});

    const std::vector<Matrix> pools{random_matrix(rng, 30, 4), random_matrix(rng, 40, 4)};
    const auto a = sample_reference_states(pools, 25, 77);
    const auto b = sample_reference_states(pools, 25, 77);
    CHECK(a.states == b.states);
    CHECK(a.source_ids == b.source_ids);
    CHECK(code_of([&] { sample_reference_states(pools, 71, 1); }) == ErrorCode::PoolTooSmall);
  }

  TEST_CASE("per-pool counts follow the hypergeometric law") {
    // 3 pools of 200, draw 100: pool-0 count ~ Hypergeometric(600, 200, 100)
    std::mt19937_64 rng(4);
    const std::vector<Matrix> pools{random_matrix(rng, 200, 2), random_matrix(rng, 200, 2), random_matrix(rng, 200, 2)};
    const double n = 100, big_n = 600, k = 200;
    const double expect = n * k / big_n;
    const double sigma = std::sqrt(n * (k / big_n) * (1 - k / big_n) * (big_n - n) / (big_n - 1));
    for (int pool = 0; pool < 3; ++pool) {
      double total = 0;
      for (int seed = 0; seed < 200; ++seed) {
        const auto refs = sample_reference_states(pools, 100, static_cast<std::uint64_t>(seed));
        const std::string prefix = "pool" + std::to_string(pool) + ":";
        const auto count = std::count_if(refs.source_ids.begin(), refs.source_ids.end(),
                                         [&](const std::string& s) { return s.rfind(prefix, 0) == 0; });
        CHECK(std::abs(static_cast<double>(count) - expect) < 4 * sigma);
        total += static_cast<double>(count);
      }
      CHECK(std::abs(total / 200 - expect) < 4 * sigma / std::sqrt(200.0));
    }
  }
}
