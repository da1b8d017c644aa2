#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace selfnet {

// Row-major so a neuron's activation vector is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class BehaviorKind : std::uint8_t { Walk = 0, Wiggle = 1, Bob = 2, Other = 3 };

struct Behavior {
  BehaviorKind kind = BehaviorKind::Other;
  std::string label;  // only meaningful for Other; not stored in .actv

  static Behavior walk() { return {BehaviorKind::Walk, {}}; }
  static Behavior wiggle() { return {BehaviorKind::Wiggle, {}}; }
  static Behavior bob() { return {BehaviorKind::Bob, {}}; }
  static Behavior other(std::string name) { return {BehaviorKind::Other, std::move(name)}; }

  std::string name() const;
  static Behavior parse(const std::string& name);

  bool operator==(const Behavior&) const = default;
};

// Provenance carried alongside every activation matrix.
struct TraceInfo {
  std::string checkpoint_id;
  std::string run_id;
  std::uint32_t cycle = 0;
  Behavior behavior;
  std::uint16_t layer = 0;
  // Identifies the reference set the activations were collected on. Empty
  // means unknown; not serialised in the .actv container.
  std::string reference_id;

  bool operator==(const TraceInfo&) const = default;
};

// H x T activations of one layer of one checkpoint over the shared reference
// states. Row i is neuron i.
struct ActivationTrace {
  TraceInfo info;
  Matrix values;

  Eigen::Index neurons() const { return values.rows(); }
  Eigen::Index states() const { return values.cols(); }

  // Throws InvalidArgument (shape) or NonFiniteValue.
  void validate() const;
};

struct NormalizedTrace {
  TraceInfo info;
  Matrix values;  // alive rows z-scored, dead rows zero
  std::vector<bool> alive;

  Eigen::Index neurons() const { return values.rows(); }
  Eigen::Index states() const { return values.cols(); }
  int alive_count() const;
  std::vector<int> alive_units() const;
};

inline constexpr double kDefaultDeadStdThreshold = 1e-6;

// Per-row z-score with population (1/T) standard deviation. Rows whose raw
// std falls below dead_std_threshold are zeroed and marked dead.
NormalizedTrace zscore_normalize(const ActivationTrace& trace,
                                 double dead_std_threshold = kDefaultDeadStdThreshold);
NormalizedTrace zscore_normalize(const NormalizedTrace& trace,
                                 double dead_std_threshold = kDefaultDeadStdThreshold);

// .actv binary container: "ACTV", u32 version, u16-prefixed checkpoint and
// run ids, u32 cycle, u8 behavior, u16 layer, u32 H, u32 T, then H*T
// little-endian float32 in neuron-major order.
inline constexpr std::uint32_t kActvVersion = 1;

void write_trace(std::ostream& out, const ActivationTrace& trace);
void write_trace(const std::filesystem::path& path, const ActivationTrace& trace);
ActivationTrace read_trace(std::istream& in);
ActivationTrace read_trace(const std::filesystem::path& path);

// CSV with header "neuron,s0,s1,..." and one row per neuron.
ActivationTrace read_trace_csv(std::istream& in, TraceInfo info = {});
ActivationTrace read_trace_csv(const std::filesystem::path& path, TraceInfo info = {});

enum class Activation { Relu, Tanh, Elu, Linear };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::Relu;
};

struct MlpWeights {
  int input_dim = 0;
  std::vector<DenseLayer> layers;  // last entry is the output layer

  void validate() const;
};

MlpWeights read_mlp_json(const std::filesystem::path& path);
MlpWeights parse_mlp_json(const std::string& text);

struct ReferenceSet {
  Matrix states;  // T x D
  std::vector<std::string> source_ids;

  Eigen::Index size() const { return states.rows(); }
  Eigen::Index dim() const { return states.cols(); }
};

// Post-nonlinearity outputs of every hidden layer, one trace per layer.
// Hidden layers are numbered from 1 in TraceInfo::layer.
std::vector<ActivationTrace> mlp_forward_collect(const MlpWeights& weights, const ReferenceSet& refs,
                                                 const TraceInfo& base = {});

// Uniform sample of `count` states without replacement from the
// concatenation of all pools. Deterministic in `seed`.
ReferenceSet sample_reference_states(const std::vector<Matrix>& pools, int count, std::uint64_t seed);

}  // namespace selfnet
