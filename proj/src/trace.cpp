#include "selfnet/trace.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "selfnet/error.hpp"

namespace selfnet {

std::string Behavior::name() const {
  switch (kind) {
    case BehaviorKind::Walk: return "walk";
    case BehaviorKind::Wiggle: return "wiggle";
    case BehaviorKind::Bob: return "bob";
    case BehaviorKind::Other: return label.empty() ? "other" : label;
  }
  return "other";
}

Behavior Behavior::parse(const std::string& name) {
  if (name == "walk") return walk();
  if (name == "wiggle") return wiggle();
  if (name == "bob") return bob();
  return other(name == "other" ? std::string{} : name);
}

void ActivationTrace::validate() const {
  if (values.rows() <= 0 || values.cols() <= 1) {
    throw Error(ErrorCode::InvalidArgument, "trace needs H > 0 and T > 1, got " +
                                                std::to_string(values.rows()) + "x" +
                                                std::to_string(values.cols()));
  }
  if (!values.allFinite()) throw Error(ErrorCode::NonFiniteValue, "trace " + info.checkpoint_id);
}

int NormalizedTrace::alive_count() const {
  return static_cast<int>(std::count(alive.begin(), alive.end(), true));
}

std::vector<int> NormalizedTrace::alive_units() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < alive.size(); ++i)
    if (alive[i]) out.push_back(static_cast<int>(i));
  return out;
}

namespace {

NormalizedTrace normalize_rows(const TraceInfo& info, const Matrix& raw, double dead_std_threshold) {
  if (!(dead_std_threshold > 0.0))
    throw Error(ErrorCode::InvalidArgument, "dead_std_threshold must be positive");
  NormalizedTrace out;
  out.info = info;
  out.values = Matrix::Zero(raw.rows(), raw.cols());
  out.alive.assign(static_cast<std::size_t>(raw.rows()), false);
  const double t = static_cast<double>(raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double mean = raw.row(i).sum() / t;
    Eigen::RowVectorXd centered = raw.row(i).array() - mean;
    const double sd = std::sqrt(centered.squaredNorm() / t);
    if (sd < dead_std_threshold) continue;
    centered /= sd;
    // second centering pass removes the residual mean left by rounding
    centered.array() -= centered.sum() / t;
    out.values.row(i) = centered;
    out.alive[static_cast<std::size_t>(i)] = true;
  }
  return out;
}

}  // namespace

NormalizedTrace zscore_normalize(const ActivationTrace& trace, double dead_std_threshold) {
  trace.validate();
  return normalize_rows(trace.info, trace.values, dead_std_threshold);
}

NormalizedTrace zscore_normalize(const NormalizedTrace& trace, double dead_std_threshold) {
  NormalizedTrace out = normalize_rows(trace.info, trace.values, dead_std_threshold);
  // a row that was dead stays dead
  for (std::size_t i = 0; i < out.alive.size(); ++i) {
    if (!trace.alive[i]) {
      out.alive[i] = false;
      out.values.row(static_cast<Eigen::Index>(i)).setZero();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// .actv container

namespace {

constexpr char kMagic[4] = {'A', 'C', 'T', 'V'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  if (s.size() > 0xFFFF) throw Error(ErrorCode::InvalidArgument, "id longer than 65535 bytes");
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void read_exact(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw Error(ErrorCode::TruncatedPayload, std::string("while reading ") + what);
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  read_exact(in, reinterpret_cast<char*>(bytes), sizeof(T), what);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<T>(v);
}

std::string get_string(std::istream& in, const char* what) {
  const auto len = get_le<std::uint16_t>(in, what);
  std::string s(len, '\0');
  if (len > 0) read_exact(in, s.data(), len, what);
  return s;
}

}  // namespace

void write_trace(std::ostream& out, const ActivationTrace& trace) {
  trace.validate();
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kActvVersion);
  put_string(out, trace.info.checkpoint_id);
  put_string(out, trace.info.run_id);
  put_le<std::uint32_t>(out, trace.info.cycle);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(trace.info.behavior.kind));
  put_le<std::uint16_t>(out, trace.info.layer);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(trace.values.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(trace.values.cols()));
  for (Eigen::Index i = 0; i < trace.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < trace.values.cols(); ++j) {
      const auto f = static_cast<float>(trace.values(i, j));
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed");
}

void write_trace(const std::filesystem::path& path, const ActivationTrace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_trace(out, trace);
}

ActivationTrace read_trace(std::istream& in) {
  char magic[4];
  read_exact(in, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::BadMagic, "not an ACTV file");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kActvVersion)
    throw Error(ErrorCode::VersionUnsupported, "version " + std::to_string(version));

  ActivationTrace trace;
  trace.info.checkpoint_id = get_string(in, "checkpoint_id");
  trace.info.run_id = get_string(in, "run_id");
  trace.info.cycle = get_le<std::uint32_t>(in, "cycle");
  const auto behavior = get_le<std::uint8_t>(in, "behavior");
  if (behavior > 3) throw Error(ErrorCode::InvalidArgument, "behavior code " + std::to_string(behavior));
  trace.info.behavior.kind = static_cast<BehaviorKind>(behavior);
  trace.info.layer = get_le<std::uint16_t>(in, "layer");
  const auto h = get_le<std::uint32_t>(in, "H");
  const auto t = get_le<std::uint32_t>(in, "T");
  if (h == 0 || t < 2) throw Error(ErrorCode::InvalidArgument, "trace needs H > 0 and T > 1");

  const std::size_t count = static_cast<std::size_t>(h) * t;
  std::vector<unsigned char> payload(count * 4);
  read_exact(in, reinterpret_cast<char*>(payload.data()), payload.size(), "payload");
  trace.values.resize(h, t);
  double* dst = trace.values.data();
  for (std::size_t k = 0; k < count; ++k) {
    const unsigned char* b = payload.data() + 4 * k;
    const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                               (static_cast<std::uint32_t>(b[2]) << 16) |
                               (static_cast<std::uint32_t>(b[3]) << 24);
    const float f = std::bit_cast<float>(bits);
    if (!std::isfinite(f))
      throw Error(ErrorCode::NonFiniteValue, "entry " + std::to_string(k / t) + "," + std::to_string(k % t));
    dst[k] = static_cast<double>(f);
  }
  return trace;
}

ActivationTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_trace(in);
}

ActivationTrace read_trace_csv(std::istream& in, TraceInfo info) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::TruncatedPayload, "empty CSV");
  if (line.rfind("neuron", 0) != 0) throw Error(ErrorCode::BadMagic, "CSV header must start with 'neuron'");
  const auto columns = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ','));

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // neuron label
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "bad CSV number '" + cell + "'");
      }
    }
    if (static_cast<Eigen::Index>(row.size()) != columns)
      throw Error(ErrorCode::DimensionMismatch, "CSV row has " + std::to_string(row.size()) + " values, header has " +
                                                    std::to_string(columns));
    rows.push_back(std::move(row));
  }
  ActivationTrace trace;
  trace.info = std::move(info);
  trace.values.resize(static_cast<Eigen::Index>(rows.size()), columns);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (Eigen::Index j = 0; j < columns; ++j) trace.values(static_cast<Eigen::Index>(i), j) = rows[i][j];
  trace.validate();
  return trace;
}

ActivationTrace read_trace_csv(const std::filesystem::path& path, TraceInfo info) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return read_trace_csv(in, std::move(info));
}

// ---------------------------------------------------------------------------
// MLP weights and forward collection

void MlpWeights::validate() const {
  if (input_dim <= 0) throw Error(ErrorCode::InvalidArgument, "input_dim must be positive");
  if (layers.empty()) throw Error(ErrorCode::InvalidArgument, "network has no layers");
  Eigen::Index fan_in = input_dim;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.weight.cols() != fan_in || layer.bias.size() != layer.weight.rows())
      throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(l) + " does not chain");
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw Error(ErrorCode::NonFiniteValue, "layer " + std::to_string(l));
    fan_in = layer.weight.rows();
  }
}

MlpWeights parse_mlp_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("mlpw parse: ") + e.what());
  }
  MlpWeights weights;
  try {
    weights.input_dim = doc.at("input_dim").get<int>();
    for (const auto& jl : doc.at("layers")) {
      DenseLayer layer;
      const auto& w = jl.at("w");
      const auto rows = static_cast<Eigen::Index>(w.size());
      const auto cols = rows > 0 ? static_cast<Eigen::Index>(w.at(0).size()) : 0;
      layer.weight.resize(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& jr = w.at(static_cast<std::size_t>(r));
        if (static_cast<Eigen::Index>(jr.size()) != cols)
          throw Error(ErrorCode::DimensionMismatch, "ragged weight matrix");
        for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = jr.at(static_cast<std::size_t>(c)).get<double>();
      }
      const auto& b = jl.at("b");
      layer.bias.resize(static_cast<Eigen::Index>(b.size()));
      for (std::size_t k = 0; k < b.size(); ++k) layer.bias(static_cast<Eigen::Index>(k)) = b[k].get<double>();
      const auto act = jl.value("act", std::string("relu"));
      if (act == "relu") layer.activation = Activation::Relu;
      else if (act == "tanh") layer.activation = Activation::Tanh;
      else if (act == "elu") layer.activation = Activation::Elu;
      else if (act == "linear" || act == "identity") layer.activation = Activation::Linear;
      else throw Error(ErrorCode::InvalidArgument, "unknown activation '" + act + "'");
      weights.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("mlpw schema: ") + e.what());
  }
  weights.validate();
  return weights;
}

MlpWeights read_mlp_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_mlp_json(ss.str());
}

namespace {

void apply_activation(Matrix& m, Activation act) {
  switch (act) {
    case Activation::Relu: m = m.cwiseMax(0.0); break;
    case Activation::Tanh: m = m.array().tanh(); break;
    case Activation::Elu: m = m.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); }); break;
    case Activation::Linear: break;
  }
}

}  // namespace

std::vector<ActivationTrace> mlp_forward_collect(const MlpWeights& weights, const ReferenceSet& refs,
                                                 const TraceInfo& base) {
  weights.validate();
  if (refs.dim() != weights.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "reference states have dimension " + std::to_string(refs.dim()) +
                                                  ", network expects " + std::to_string(weights.input_dim));
  if (weights.layers.size() < 2) throw Error(ErrorCode::InvalidArgument, "network has no hidden layer");

  std::vector<ActivationTrace> traces;
  // Batched as (units x states) so each hidden output is already neuron-major.
  Matrix current = refs.states.transpose();
  for (std::size_t l = 0; l + 1 < weights.layers.size(); ++l) {
    const auto& layer = weights.layers[l];
    Matrix pre = layer.weight * current;
    pre.colwise() += layer.bias;
    apply_activation(pre, layer.activation);
    ActivationTrace trace;
    trace.info = base;
    trace.info.layer = static_cast<std::uint16_t>(l + 1);
    trace.values = pre;
    traces.push_back(std::move(trace));
    current = std::move(pre);
  }
  return traces;
}

ReferenceSet sample_reference_states(const std::vector<Matrix>& pools, int count, std::uint64_t seed) {
  if (pools.empty()) throw Error(ErrorCode::PoolTooSmall, "no pools");
  const Eigen::Index dim = pools.front().cols();
  std::vector<std::pair<int, int>> index;  // (pool, row)
  for (std::size_t p = 0; p < pools.size(); ++p) {
    if (pools[p].cols() != dim) throw Error(ErrorCode::DimensionMismatch, "pools differ in state dimension");
    for (Eigen::Index r = 0; r < pools[p].rows(); ++r) index.emplace_back(static_cast<int>(p), static_cast<int>(r));
  }
  if (count <= 1) throw Error(ErrorCode::InvalidArgument, "reference set needs T > 1");
  if (static_cast<std::size_t>(count) > index.size())
    throw Error(ErrorCode::PoolTooSmall, "asked for " + std::to_string(count) + " states from a pool of " +
                                             std::to_string(index.size()));

  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: the first `count` slots become the sample
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), index.size() - 1);
    std::swap(index[static_cast<std::size_t>(k)], index[pick(rng)]);
  }

  ReferenceSet refs;
  refs.states.resize(count, dim);
  refs.source_ids.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const auto [p, r] = index[static_cast<std::size_t>(k)];
    refs.states.row(k) = pools[static_cast<std::size_t>(p)].row(r);
    refs.source_ids.push_back("pool" + std::to_string(p) + ":" + std::to_string(r));
  }
  if (!refs.states.allFinite()) throw Error(ErrorCode::NonFiniteValue, "reference states");
  return refs;
}

}  // namespace selfnet
